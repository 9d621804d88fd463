//! `occam`: command-line access to the reference machine, censuses,
//! complexity estimates, odds and the definition ledger.

mod config;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use occam_core::combinators;
use occam_core::complexity::{k_prime, KPrime, SearchError, WitnessCorpus};
use occam_core::enumerator::census::{vote_census, CensusConfig, CensusError};
use occam_core::enumerator::{enumerate_codes, monte_carlo_m};
use occam_core::ledger::{
    model_complexity, rank, Definition, LedgerError, ModelManifest, Registry,
};
use occam_core::machine::{decode_term, encode_term, run, BitString};
use occam_core::predictor::{
    democratic_odds, odds, ratio_from_log2, regularized_loss, stochastic_eval, LossKind,
    LossParams, PredictError,
};
use occam_core::verify::{criterion_id, run_criterion, VerifyConfig, NAMES};

use config::{Format, RunConfig, DEFAULT_REGISTRY, REGISTRY_ENV};

#[derive(Parser)]
#[command(name = "occam", version, about = "Program-space workbench on a binary lambda calculus machine")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the binary code of a term given in surface syntax.
    Encode {
        /// File holding the term, or `-` for stdin.
        file: Option<PathBuf>,
        /// The term itself.
        #[arg(long, conflicts_with = "file")]
        term: Option<String>,
    },
    /// Print the term whose code prefixes BITS, and any trailing data.
    Decode { bits: String },
    /// Run a program `code ++ data` given condition Z.
    Run {
        program: String,
        #[arg(long, default_value = "")]
        z: String,
    },
    /// List every closed code up to --max-len bits.
    Enumerate,
    /// Vote counts of every output over programs of length exactly --n.
    Census {
        #[arg(long, default_value = "")]
        z: String,
        /// Resume from and save progress to this file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the universal distribution.
    Mc {
        #[arg(long, default_value = "")]
        z: String,
    },
    /// Shortest known program for X given Z.
    Ksearch {
        x: String,
        #[arg(long, default_value = "")]
        z: String,
        /// Exhaustive search only; fails with NotFound instead of falling
        /// back on constructions.
        #[arg(long)]
        exhaustive: bool,
        /// Witness corpus to reuse and update.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Odds of continuation A over B after O, from K' differences.
    Odds {
        #[arg(long, default_value = "")]
        o: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "")]
        z: String,
        /// Files holding extra witness programs for o·a and o·b.
        #[arg(long = "witness-a")]
        witness_a: Option<PathBuf>,
        #[arg(long = "witness-b")]
        witness_b: Option<PathBuf>,
    },
    /// Odds of A over B from a census at --n.
    CensusOdds {
        #[arg(long, default_value = "")]
        o: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "")]
        z: String,
    },
    /// Regularized loss of a model program against observation O.
    Regloss {
        model: String,
        #[arg(long)]
        o: String,
        #[arg(long, default_value = "")]
        z: String,
        /// hamming, correction or surprisal.
        #[arg(long, default_value = "hamming")]
        kind: LossKind,
    },
    /// Outcome frequencies of a model code fed coin flips.
    Stoch {
        q: String,
        #[arg(long, default_value = "")]
        z: String,
    },
    /// The definition registry (path from the OCCAM_REGISTRY variable).
    Ledger {
        #[command(subcommand)]
        action: LedgerCmd,
    },
    /// Run acceptance criteria: a number, a name, or `all`.
    Verify {
        #[arg(default_value = "all")]
        which: String,
    },
}

#[derive(Subcommand)]
enum LedgerCmd {
    /// Register a definition.
    Add {
        name: String,
        #[arg(long, value_delimiter = ',')]
        deps: Vec<String>,
        /// A closed term; its code length is the cost.
        #[arg(long, conflicts_with_all = ["cost", "note"])]
        term: Option<String>,
        /// An audited cost in bits, with --note.
        #[arg(long, requires = "note")]
        cost: Option<u64>,
        #[arg(long)]
        note: Option<String>,
    },
    /// Itemized complexity of a model manifest.
    Cost { manifest: PathBuf },
    /// Rank manifests for one problem; each as `PATH=LOSS_BITS`.
    Rank {
        #[arg(long)]
        problem: String,
        submissions: Vec<String>,
    },
}

/// Failures with documented exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    NotFound(String),
    ZeroVotes(String),
    WitnessMissing(String),
    BudgetExceeded(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::NotFound(_) => 3,
            Failure::ZeroVotes(_) => 4,
            Failure::WitnessMissing(_) => 5,
            Failure::BudgetExceeded(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::NotFound(m)
            | Failure::ZeroVotes(m)
            | Failure::WitnessMissing(m)
            | Failure::BudgetExceeded(m)
            | Failure::Other(m) => m,
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NotFound { .. } => Failure::NotFound(e.to_string()),
            SearchError::Census(_) => Failure::Other(e.to_string()),
        }
    }
}

impl From<CensusError> for Failure {
    fn from(e: CensusError) -> Self {
        match e {
            CensusError::BudgetExceeded { .. } => Failure::BudgetExceeded(e.to_string()),
            CensusError::AboveCeiling { .. } => Failure::Usage(e.to_string()),
            CensusError::Checkpoint { .. } => Failure::Other(e.to_string()),
        }
    }
}

impl From<PredictError> for Failure {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::WitnessMissing { .. } => Failure::WitnessMissing(e.to_string()),
            PredictError::ZeroVotes { .. } => Failure::ZeroVotes(e.to_string()),
            PredictError::Census(c) => c.into(),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<LedgerError> for Failure {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Io(_) | LedgerError::Format(_) => Failure::Other(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

/// A bit string argument; `ε` and the empty string both mean empty.
fn bits(s: &str) -> Result<BitString, Failure> {
    if s == "ε" {
        return Ok(BitString::new());
    }
    s.parse().map_err(|e| Failure::Usage(format!("{s:?}: {e}")))
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

/// Renders a CSV body as aligned columns.
fn csv_to_table(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
            .collect();
        out += cells.join("  ").trim_end();
        out.push('\n');
    }
    out
}

struct Report {
    header: String,
    body: String,
}

impl Report {
    fn csv(header: String, csv: String, format: Format) -> Report {
        Report {
            header,
            body: match format {
                Format::Csv => csv,
                Format::Table => csv_to_table(&csv),
            },
        }
    }

    fn text(header: String, body: String) -> Report {
        Report { header, body }
    }
}

fn kv(pairs: &[(&str, String)]) -> String {
    let head: Vec<&str> = pairs.iter().map(|(k, _)| *k).collect();
    let vals: Vec<&str> = pairs.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", head.join(","), vals.join(","))
}

fn registry_path() -> PathBuf {
    std::env::var_os(REGISTRY_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REGISTRY))
}

fn execute(cli: &Cli) -> Result<(Report, bool), Failure> {
    let cfg = &cli.config;
    let gas = cfg.gas();
    let census_config = |checkpoint: Option<PathBuf>| CensusConfig {
        node_cap: cfg.node_cap,
        checkpoint,
        ..CensusConfig::with_gas(gas)
    };
    let ok = |r: Report| Ok((r, true));
    match &cli.command {
        Command::Encode { file, term } => {
            let src = match (file, term) {
                (_, Some(t)) => t.clone(),
                (Some(f), None) => read_input(f)?,
                (None, None) => return Err(Failure::Usage("give a term file or --term".into())),
            };
            let t = occam_core::machine::parse_with(&src, combinators::library())
                .map_err(|e| Failure::Usage(e.to_string()))?;
            if !t.is_closed() {
                return Err(Failure::Usage("term is not closed".into()));
            }
            let code = encode_term(&t);
            ok(Report::text(
                cfg.echo("encode", &[("bits", code.len().to_string())]),
                format!("{code}\n"),
            ))
        }
        Command::Decode { bits: b } => {
            let b = bits(b)?;
            let (t, used) = decode_term(&b).map_err(|e| Failure::Usage(e.to_string()))?;
            let data = b.slice(used, b.len());
            ok(Report::text(
                cfg.echo("decode", &[("code_bits", used.to_string())]),
                format!("{t}\ndata {}\n", data.display_or_epsilon()),
            ))
        }
        Command::Run { program, z } => {
            let (p, z) = (bits(program)?, bits(z)?);
            let out = run(&p, &z, gas);
            let csv = kv(&[
                ("status", format!("{:?}", out.status)),
                ("valid", out.is_valid().to_string()),
                ("output", out.output.map(|o| o.to_string()).unwrap_or_default()),
                ("bits_read", out.bits_read.to_string()),
                ("data_len", out.data_len.to_string()),
                ("steps", out.steps.to_string()),
            ]);
            ok(Report::csv(cfg.echo("run", &[("z", z.to_string())]), csv, cfg.format))
        }
        Command::Enumerate => {
            if cfg.max_len > occam_core::enumerator::codes::DEFAULT_MAX_LEN {
                return Err(Failure::Usage(format!(
                    "--max-len above {}",
                    occam_core::enumerator::codes::DEFAULT_MAX_LEN
                )));
            }
            let mut csv = String::from("code,bits,term\n");
            for (code, t) in enumerate_codes(cfg.max_len) {
                csv += &format!("{code},{},{t}\n", code.len());
            }
            ok(Report::csv(cfg.echo("enumerate", &[]), csv, cfg.format))
        }
        Command::Census { z, checkpoint } => {
            let z = bits(z)?;
            let c = vote_census(cfg.n, &z, &census_config(checkpoint.clone()))?;
            ok(Report::csv(
                cfg.echo(
                    "census",
                    &[
                        ("z", z.to_string()),
                        ("unresolved", c.unresolved.to_string()),
                        ("invalid", c.invalid.to_string()),
                        ("diverged", c.diverged.to_string()),
                    ],
                ),
                c.to_csv(cfg.seed, &[]),
                cfg.format,
            ))
        }
        Command::Mc { z } => {
            let z = bits(z)?;
            if cfg.samples == 0 {
                return Err(Failure::Usage("--samples must be positive".into()));
            }
            let e = monte_carlo_m(cfg.samples, &z, gas, cfg.seed, 64);
            ok(Report::csv(
                cfg.echo(
                    "mc",
                    &[
                        ("z", z.to_string()),
                        ("unparsed", e.unparsed.to_string()),
                        ("out_of_gas", e.out_of_gas.to_string()),
                        ("malformed", e.malformed.to_string()),
                    ],
                ),
                e.to_csv(),
                cfg.format,
            ))
        }
        Command::Ksearch {
            x,
            z,
            exhaustive,
            corpus,
        } => {
            let (x, z) = (bits(x)?, bits(z)?);
            let est = if *exhaustive {
                k_prime(&x, &z, cfg.max_len, gas)?
            } else {
                let loaded = match corpus {
                    Some(p) if p.exists() => {
                        WitnessCorpus::load(p).map_err(|e| Failure::Other(e.to_string()))?
                    }
                    _ => WitnessCorpus::default(),
                };
                let mut kp = KPrime::with_corpus(cfg.max_len, gas, loaded);
                let est = kp.estimate(&x, &z)?;
                if let Some(p) = corpus {
                    kp.corpus.save(p).map_err(|e| Failure::Other(e.to_string()))?;
                }
                est
            };
            let csv = format!(
                "x,z,value_bits,status,gas,max_len,witness_hex,method,witness\n{},{},{},{},{},{},{},{},{}\n",
                est.subject,
                est.condition,
                est.value_bits,
                est.status,
                est.gas.max_steps,
                est.max_len,
                est.witness.to_hex(),
                est.method,
                est.witness
            );
            ok(Report::csv(cfg.echo("ksearch", &[]), csv, cfg.format))
        }
        Command::Odds {
            o,
            a,
            b,
            z,
            witness_a,
            witness_b,
        } => {
            let (o, a, b, z) = (bits(o)?, bits(a)?, bits(b)?, bits(z)?);
            let mut kp = KPrime::new(cfg.max_len, gas);
            for (label, file, target) in [("a", witness_a, o.concat(&a)), ("b", witness_b, o.concat(&b))] {
                if let Some(f) = file {
                    let w = bits(read_input(f)?.trim())?;
                    let out = run(&w, &z, gas);
                    if !out.is_valid() || out.output.as_ref() != Some(&target) {
                        return Err(Failure::WitnessMissing(format!(
                            "witness for candidate {label} does not print o·{label}"
                        )));
                    }
                    kp.estimate_with(&target, &z, &[("file", w)])?;
                }
            }
            let r = odds(&mut kp, &o, &a, &b, &z)?;
            let csv = kv(&[
                ("o", r.o.to_string()),
                ("a", r.a.to_string()),
                ("b", r.b.to_string()),
                ("z", r.z.to_string()),
                ("k_oa", r.k_oa.value_bits.to_string()),
                ("k_ob", r.k_ob.value_bits.to_string()),
                ("delta_bits", r.delta_bits.to_string()),
                ("ratio", r.ratio_label()),
                ("ratio_value", ratio_from_log2(r.ratio_log2)),
                ("witness_oa", r.k_oa.witness.to_string()),
                ("witness_ob", r.k_ob.witness.to_string()),
            ]);
            ok(Report::csv(cfg.echo("odds", &[]), csv, cfg.format))
        }
        Command::CensusOdds { o, a, b, z } => {
            let (o, a, b, z) = (bits(o)?, bits(a)?, bits(b)?, bits(z)?);
            let d = democratic_odds(&o, &a, &b, &z, cfg.n, &census_config(None))?;
            let csv = kv(&[
                ("n", d.n.to_string()),
                ("a_lo", d.a_lo.to_string()),
                ("a_hi", d.a_hi.to_string()),
                ("b_lo", d.b_lo.to_string()),
                ("b_hi", d.b_hi.to_string()),
                ("lo_log2", format!("{:.6}", d.lo_log2)),
                ("hi_log2", format!("{:.6}", d.hi_log2)),
                ("fully_resolved", d.fully_resolved.to_string()),
            ]);
            ok(Report::csv(cfg.echo("census-odds", &[]), csv, cfg.format))
        }
        Command::Regloss { model, o, z, kind } => {
            let (m, o, z) = (bits(model)?, bits(o)?, bits(z)?);
            let mut kp = KPrime::new(cfg.max_len, gas);
            let r = regularized_loss(
                &m,
                &o,
                &z,
                *kind,
                LossParams {
                    gas,
                    samples: cfg.samples,
                    seed: cfg.seed,
                    kprime: Some(&mut kp),
                },
            )?;
            let csv = kv(&[
                ("kind", format!("{:?}", r.kind)),
                ("complexity_bits", r.complexity_bits.to_string()),
                ("empirical_loss_bits", format!("{:.6}", r.empirical_loss_bits)),
                ("total_bits", format!("{:.6}", r.total_bits)),
                (
                    "model_output",
                    r.model_output.map(|o| o.to_string()).unwrap_or_default(),
                ),
            ]);
            ok(Report::csv(cfg.echo("regloss", &[]), csv, cfg.format))
        }
        Command::Stoch { q, z } => {
            let (q, z) = (bits(q)?, bits(z)?);
            let e = stochastic_eval(&q, &z, cfg.samples, gas, cfg.seed)?;
            ok(Report::csv(
                cfg.echo(
                    "stoch",
                    &[
                        ("out_of_gas", e.out_of_gas.to_string()),
                        ("malformed", e.malformed.to_string()),
                    ],
                ),
                e.to_csv(),
                cfg.format,
            ))
        }
        Command::Ledger { action } => ledger(cfg, action),
        Command::Verify { which } => verify(cfg, which),
    }
}

fn ledger(cfg: &RunConfig, action: &LedgerCmd) -> Result<(Report, bool), Failure> {
    let path = registry_path();
    let mut reg = Registry::load(&path)?;
    let header = |cmd: &str| cfg.echo(cmd, &[("registry", path.display().to_string())]);
    match action {
        LedgerCmd::Add {
            name,
            deps,
            term,
            cost,
            note,
        } => {
            let deps: Vec<&str> = deps.iter().map(|s| s.as_str()).collect();
            let def = match (term, cost, note) {
                (Some(t), _, _) => Definition::from_term(name, &deps, t)?,
                (None, Some(c), Some(n)) => Definition::audited(name, &deps, *c, n),
                _ => return Err(Failure::Usage("give --term, or --cost with --note".into())),
            };
            let cost = def.cost_bits;
            let digest = reg.register_definition(def)?;
            reg.save(&path)?;
            let csv = kv(&[
                ("name", name.clone()),
                ("cost_bits", cost.to_string()),
                ("digest", digest),
            ]);
            Ok((Report::csv(header("ledger add"), csv, cfg.format), true))
        }
        LedgerCmd::Cost { manifest } => {
            let m = ModelManifest::load(manifest)?;
            let b = model_complexity(&m, &reg)?;
            let body = match cfg.format {
                Format::Table => b.to_table(),
                Format::Csv => {
                    let mut s = String::from("item,bits\n");
                    for (n, c) in &b.definitions {
                        s += &format!("def:{n},{c}\n");
                    }
                    s += &format!("references,{}\n", b.reference_bits);
                    s += &format!("constants,{}\n", b.constant_bits);
                    s += &format!("glue,{}\n", b.glue_bits);
                    s += &format!("total,{}\n", b.total_bits);
                    s
                }
            };
            Ok((Report::text(header("ledger cost"), body), true))
        }
        LedgerCmd::Rank {
            problem,
            submissions,
        } => {
            let mut subs = Vec::new();
            for s in submissions {
                let (p, loss) = s
                    .rsplit_once('=')
                    .ok_or_else(|| Failure::Usage(format!("{s:?} is not PATH=LOSS_BITS")))?;
                let loss: f64 = loss
                    .parse()
                    .map_err(|_| Failure::Usage(format!("bad loss in {s:?}")))?;
                subs.push((ModelManifest::load(Path::new(p))?, loss));
            }
            let r = rank(problem, &reg, &subs)?;
            let body = match cfg.format {
                Format::Table => r.to_table(),
                Format::Csv => r.to_csv(),
            };
            Ok((Report::text(header("ledger rank"), body), true))
        }
    }
}

fn verify(cfg: &RunConfig, which: &str) -> Result<(Report, bool), Failure> {
    let ids: Vec<u8> = if which == "all" {
        (1..=10).collect()
    } else {
        vec![criterion_id(which).ok_or_else(|| {
            Failure::Usage(format!("unknown criterion {which:?}; one of 1-10, {}", NAMES.join(", ")))
        })?]
    };
    let vc = VerifyConfig {
        gas: cfg.gas(),
        kraft_max_len: cfg.max_len,
        search_len: cfg.max_len,
        mc_samples: cfg.samples,
        seed: cfg.seed,
        ..VerifyConfig::default()
    };
    let mut body = String::new();
    let mut all = true;
    for id in ids {
        let o = run_criterion(id, &vc);
        all &= o.pass;
        body += &format!("# criterion {id} {}\n", o.name);
        body += &match cfg.format {
            Format::Csv => o.csv.clone(),
            Format::Table => csv_to_table(&o.csv),
        };
        body += &o.line();
        body.push('\n');
    }
    Ok((Report::text(cfg.echo("verify", &[("which", which.to_string())]), body), all))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.config.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("occam: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok((report, pass)) => {
            let text = format!("{}\n{}", report.header, report.body);
            let written = match &cli.config.out {
                Some(p) => fs::write(p, &text),
                None => io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("occam: {e}");
                return ExitCode::from(1);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("occam: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
