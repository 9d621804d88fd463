//! Run configuration shared by every subcommand, and the header line that
//! makes each output reproducible.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use occam_core::machine::Gas;

pub const REGISTRY_ENV: &str = "OCCAM_REGISTRY";
pub const DEFAULT_REGISTRY: &str = "occam-registry.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Reduction steps per run.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub gas: u64,
    /// Longest program or code length searched.
    #[arg(long = "max-len", global = true, default_value_t = 20)]
    pub max_len: usize,
    /// Exact program length for censuses.
    #[arg(long, global = true, default_value_t = 16)]
    pub n: usize,
    /// Monte Carlo or sampling trials.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
    /// Worker threads; affects wall time only. Defaults to all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Demand-tree nodes a census may visit before it stops.
    #[arg(long = "node-cap", global = true, default_value_t = occam_core::enumerator::census::DEFAULT_NODE_CAP)]
    pub node_cap: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl RunConfig {
    pub fn gas(&self) -> Gas {
        Gas::new(self.gas)
    }

    /// `# occam <command> key=value ...`. Worker count is left out since
    /// it never changes output.
    pub fn echo(&self, command: &str, extra: &[(&str, String)]) -> String {
        let mut s = format!(
            "# occam {command} gas={} max_len={} n={} samples={} seed={} node_cap={} format={}",
            self.gas,
            self.max_len,
            self.n,
            self.samples,
            self.seed,
            self.node_cap,
            match self.format {
                Format::Csv => "csv",
                Format::Table => "table",
            }
        );
        for (k, v) in extra {
            s += &format!(" {k}={v}");
        }
        s
    }
}
