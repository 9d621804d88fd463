//! Complexity bookkeeping for models built from shared definitions.
//!
//! A registry holds named definitions with bit costs and dependencies.
//! A model manifest references definitions, numeric constants and its own
//! glue code; its complexity counts every definition in the transitive
//! closure of its references exactly once, plus a small index cost per use.
//!
//! Registries and manifests are pretty-printed JSON with sorted keys, so a
//! load followed by a save reproduces the file byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::machine::{encode_term, parse_term};

pub const REGISTRY_VERSION: u32 = 1;
pub const SIGN_BITS: u32 = 1;
pub const EXPONENT_BITS: u32 = 8;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("definition {0} would create a dependency cycle")]
    CycleDetected(String),
    #[error("unknown definition {0}")]
    UnknownDep(String),
    #[error("definition {0} already registered")]
    DuplicateName(String),
    #[error("invalid precision: {0}")]
    InvalidPrecision(String),
    #[error("invalid definition {name}: {reason}")]
    InvalidDefinition { name: String, reason: String },
    #[error("manifest {model} targets {found}, not {expected}")]
    ProblemMismatch {
        model: String,
        expected: String,
        found: String,
    },
    #[error("ledger file: {0}")]
    Io(#[from] std::io::Error),
    #[error("ledger format: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// A closed lambda term in the crate's surface syntax; its cost is the
    /// length of its binary code.
    Term(String),
    /// A cost audited elsewhere, with a note on where it comes from.
    Audited { note: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub name: String,
    pub deps: Vec<String>,
    pub payload: Payload,
    pub cost_bits: u64,
}

impl Definition {
    /// A definition whose cost is measured from its term.
    pub fn from_term(name: &str, deps: &[&str], source: &str) -> Result<Definition, LedgerError> {
        let term = parse_term(source).map_err(|e| LedgerError::InvalidDefinition {
            name: name.into(),
            reason: e.to_string(),
        })?;
        Ok(Definition {
            name: name.into(),
            deps: deps.iter().map(|d| d.to_string()).collect(),
            payload: Payload::Term(source.into()),
            cost_bits: encode_term(&term).len() as u64,
        })
    }

    pub fn audited(name: &str, deps: &[&str], cost_bits: u64, note: &str) -> Definition {
        Definition {
            name: name.into(),
            deps: deps.iter().map(|d| d.to_string()).collect(),
            payload: Payload::Audited { note: note.into() },
            cost_bits,
        }
    }

    /// SHA-256 of the canonical JSON of the definition.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("definitions serialize");
        hex(&Sha256::digest(json))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    #[serde(flatten)]
    pub definition: Definition,
    pub digest: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub version: u32,
    pub entries: BTreeMap<String, Entry>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry {
            version: REGISTRY_VERSION,
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.entries.get(name).map(|e| &e.definition)
    }

    /// Adds `d`, returning its content digest.
    pub fn register_definition(&mut self, d: Definition) -> Result<String, LedgerError> {
        if self.entries.contains_key(&d.name) {
            return Err(LedgerError::DuplicateName(d.name));
        }
        // Dependencies must already exist, so the only cycle a new entry
        // can close is through itself.
        if d.deps.contains(&d.name) {
            return Err(LedgerError::CycleDetected(d.name));
        }
        if let Some(missing) = d.deps.iter().find(|n| !self.entries.contains_key(*n)) {
            return Err(LedgerError::UnknownDep(missing.clone()));
        }
        if d.cost_bits == 0 {
            return Err(LedgerError::InvalidDefinition {
                name: d.name,
                reason: "cost must be positive".into(),
            });
        }
        if let Payload::Term(src) = &d.payload {
            let measured = Definition::from_term(&d.name, &[], src)?.cost_bits;
            if measured != d.cost_bits {
                return Err(LedgerError::InvalidDefinition {
                    name: d.name,
                    reason: format!("term costs {measured} bits, not {}", d.cost_bits),
                });
            }
        }
        if let Payload::Audited { note } = &d.payload {
            if note.trim().is_empty() {
                return Err(LedgerError::InvalidDefinition {
                    name: d.name,
                    reason: "audited costs need a provenance note".into(),
                });
            }
        }
        let digest = d.digest();
        self.entries.insert(
            d.name.clone(),
            Entry {
                definition: d,
                digest: digest.clone(),
            },
        );
        Ok(digest)
    }

    /// Bits to name one registry entry: `ceil(log2(size + 1))`.
    pub fn reference_cost(&self) -> u64 {
        let n = self.entries.len() as u64 + 1;
        (64 - (n - 1).leading_zeros()) as u64
    }

    /// Every definition reachable from `roots`, each once.
    pub fn closure<'a>(
        &self,
        roots: impl IntoIterator<Item = &'a String>,
    ) -> Result<BTreeSet<String>, LedgerError> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<String> = roots.into_iter().cloned().collect();
        while let Some(name) = stack.pop() {
            let def = self
                .get(&name)
                .ok_or_else(|| LedgerError::UnknownDep(name.clone()))?;
            if seen.insert(name) {
                stack.extend(def.deps.iter().cloned());
            }
        }
        Ok(seen)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("registry serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Registry, LedgerError> {
        let r: Registry = serde_json::from_str(text)?;
        for (name, e) in &r.entries {
            if name != &e.definition.name || e.digest != e.definition.digest() {
                return Err(LedgerError::InvalidDefinition {
                    name: name.clone(),
                    reason: "digest does not match content".into(),
                });
            }
        }
        Ok(r)
    }

    /// Loads `path`, or an empty registry if it does not exist.
    pub fn load(path: &Path) -> Result<Registry, LedgerError> {
        match fs::read_to_string(path) {
            Ok(t) => Registry::from_json(&t),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Registry::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), LedgerError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_json())?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    SignificandBits(u32),
    DecimalDigits(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub precision: Precision,
}

/// Bits for a constant under the fixed layout: one sign bit, eight
/// exponent bits and the significand. Decimal digits `d` need
/// `ceil(d · log2 10)` significand bits.
pub fn constant_cost(value: f64, precision: Precision) -> Result<u64, LedgerError> {
    if !value.is_finite() {
        return Err(LedgerError::InvalidPrecision(format!("{value} is not finite")));
    }
    let significand = match precision {
        Precision::SignificandBits(0) | Precision::DecimalDigits(0) => {
            return Err(LedgerError::InvalidPrecision("zero precision".into()))
        }
        Precision::SignificandBits(b) => b as u64,
        Precision::DecimalDigits(d) => (d as f64 * 10f64.log2()).ceil() as u64,
    };
    Ok(SIGN_BITS as u64 + EXPONENT_BITS as u64 + significand)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub name: String,
    pub problem_id: String,
    /// Definition name and how many times the model uses it.
    pub references: BTreeMap<String, u64>,
    #[serde(default)]
    pub constants: Vec<Constant>,
    pub glue_bits: u64,
    #[serde(default)]
    pub notes: String,
}

impl ModelManifest {
    pub fn load(path: &Path) -> Result<ModelManifest, LedgerError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakdown {
    pub model: String,
    /// Each definition in the closure with its cost, by name.
    pub definitions: Vec<(String, u64)>,
    pub definition_bits: u64,
    pub reference_cost: u64,
    pub reference_bits: u64,
    pub constant_bits: u64,
    pub glue_bits: u64,
    pub total_bits: u64,
}

impl Breakdown {
    pub fn to_table(&self) -> String {
        let mut s = format!("model {}\n", self.model);
        for (n, c) in &self.definitions {
            s += &format!("  def {n:<24} {c:>8}\n");
        }
        s += &format!("  definitions {:>21}\n", self.definition_bits);
        s += &format!(
            "  references ({} bits each) {:>7}\n",
            self.reference_cost, self.reference_bits
        );
        s += &format!("  constants {:>23}\n", self.constant_bits);
        s += &format!("  glue {:>28}\n", self.glue_bits);
        s += &format!("  total {:>27}\n", self.total_bits);
        s
    }
}

pub fn model_complexity(m: &ModelManifest, registry: &Registry) -> Result<Breakdown, LedgerError> {
    let closure = registry.closure(m.references.keys())?;
    let definitions: Vec<(String, u64)> = closure
        .into_iter()
        .map(|n| {
            let c = registry.get(&n).expect("closure names resolve").cost_bits;
            (n, c)
        })
        .collect();
    let definition_bits = definitions.iter().map(|(_, c)| c).sum();
    let reference_cost = registry.reference_cost();
    let uses: u64 = m.references.values().sum();
    let reference_bits = uses * reference_cost;
    let constant_bits = m
        .constants
        .iter()
        .map(|c| constant_cost(c.value, c.precision))
        .sum::<Result<u64, _>>()?;
    Ok(Breakdown {
        model: m.name.clone(),
        definitions,
        definition_bits,
        reference_cost,
        reference_bits,
        constant_bits,
        glue_bits: m.glue_bits,
        total_bits: definition_bits + reference_bits + constant_bits + m.glue_bits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankEntry {
    pub rank: usize,
    pub model: String,
    pub complexity_bits: u64,
    pub empirical_loss_bits: f64,
    pub total_bits: f64,
    /// Odds of the best entry over this one, as `2^Δ`.
    pub odds_note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ranking {
    pub problem_id: String,
    pub entries: Vec<RankEntry>,
}

fn power_label(delta: f64) -> String {
    if delta.fract() == 0.0 {
        format!("2^{}", delta as i64)
    } else {
        format!("2^{delta:.3}")
    }
}

impl Ranking {
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("problem_id,rank,model,complexity_bits,empirical_loss_bits,total_bits,odds\n");
        for e in &self.entries {
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                self.problem_id,
                e.rank,
                e.model,
                e.complexity_bits,
                e.empirical_loss_bits,
                e.total_bits,
                e.odds_note
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "problem {}\n{:>4}  {:<20} {:>10} {:>10} {:>10}  odds\n",
            self.problem_id, "rank", "model", "K bits", "loss", "total"
        );
        for e in &self.entries {
            s += &format!(
                "{:>4}  {:<20} {:>10} {:>10} {:>10}  {}\n",
                e.rank, e.model, e.complexity_bits, e.empirical_loss_bits, e.total_bits, e.odds_note
            );
        }
        s
    }
}

/// Ranks submissions `(manifest, empirical loss bits)` for one problem by
/// total bits, then complexity, then name.
pub fn rank(
    problem_id: &str,
    registry: &Registry,
    submissions: &[(ModelManifest, f64)],
) -> Result<Ranking, LedgerError> {
    let mut rows = Vec::new();
    for (m, loss) in submissions {
        if m.problem_id != problem_id {
            return Err(LedgerError::ProblemMismatch {
                model: m.name.clone(),
                expected: problem_id.into(),
                found: m.problem_id.clone(),
            });
        }
        let k = model_complexity(m, registry)?.total_bits;
        rows.push((m.name.clone(), k, *loss, k as f64 + loss));
    }
    rows.sort_by(|a, b| {
        a.3.total_cmp(&b.3)
            .then(a.1.cmp(&b.1))
            .then_with(|| a.0.cmp(&b.0))
    });
    let best = rows.first().map(|r| r.3).unwrap_or(0.0);
    Ok(Ranking {
        problem_id: problem_id.into(),
        entries: rows
            .into_iter()
            .enumerate()
            .map(|(i, (model, k, loss, total))| RankEntry {
                rank: i + 1,
                model,
                complexity_bits: k,
                empirical_loss_bits: loss,
                total_bits: total,
                odds_note: power_label(total - best),
            })
            .collect(),
    })
}

pub fn to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

/// The calculus example: integral and derivative both build on lim.
pub fn calculus_example() -> (Registry, ModelManifest) {
    let mut r = Registry::new();
    r.register_definition(Definition::audited("lim", &[], 1200, "illustrative audited cost"))
        .expect("fresh registry");
    r.register_definition(Definition::audited("integral", &["lim"], 800, "illustrative audited cost"))
        .expect("lim registered");
    r.register_definition(Definition::audited("derivative", &["lim"], 500, "illustrative audited cost"))
        .expect("lim registered");
    let m = ModelManifest {
        name: "calculus".into(),
        problem_id: "fundamental-theorem".into(),
        references: [("integral".to_string(), 1), ("derivative".to_string(), 1)].into(),
        glue_bits: 40,
        ..Default::default()
    };
    (r, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(name: &str, refs: &[(&str, u64)], glue: u64) -> ModelManifest {
        ModelManifest {
            name: name.into(),
            problem_id: "p".into(),
            references: refs.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
            glue_bits: glue,
            ..Default::default()
        }
    }

    #[test]
    fn registration_errors() {
        let mut r = Registry::new();
        r.register_definition(Definition::audited("lim", &[], 10, "n")).unwrap();
        assert!(matches!(
            r.register_definition(Definition::audited("lim", &[], 10, "n")),
            Err(LedgerError::DuplicateName(_))
        ));
        assert!(matches!(
            r.register_definition(Definition::audited("x", &["x"], 10, "n")),
            Err(LedgerError::CycleDetected(_))
        ));
        assert!(matches!(
            r.register_definition(Definition::audited("y", &["nope"], 10, "n")),
            Err(LedgerError::UnknownDep(_))
        ));
        let id = Definition::from_term("id", &[], r"\x. x").unwrap();
        assert_eq!(id.cost_bits, 4);
        r.register_definition(id).unwrap();
    }

    #[test]
    fn lim_counted_once() {
        let (r, m) = calculus_example();
        let b = model_complexity(&m, &r).unwrap();
        assert_eq!(b.definition_bits, 1200 + 800 + 500);
        assert_eq!(b.reference_cost, 2);
        assert_eq!(b.total_bits, 2500 + 2 * 2 + 40);
        assert_eq!(model_complexity(&manifest("g", &[], 17), &r).unwrap().total_bits, 17);
    }

    #[test]
    fn repeated_references_cost_only_the_index() {
        let (r, _) = calculus_example();
        let once = model_complexity(&manifest("a", &[("integral", 1)], 0), &r).unwrap();
        let thrice = model_complexity(&manifest("a", &[("integral", 3)], 0), &r).unwrap();
        assert_eq!(thrice.total_bits - once.total_bits, 2 * r.reference_cost());
    }

    #[test]
    fn constants() {
        assert_eq!(constant_cost(1.0, Precision::SignificandBits(1)).unwrap(), 10);
        assert_eq!(constant_cost(1.25, Precision::DecimalDigits(7)).unwrap(), 9 + 24);
        assert!(constant_cost(1.0, Precision::DecimalDigits(0)).is_err());
        let mut last = 0;
        for d in 1..30 {
            let c = constant_cost(2.5, Precision::DecimalDigits(d)).unwrap();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn ranking_prefers_simpler_at_equal_loss() {
        let mut r = Registry::new();
        r.register_definition(Definition::audited("a", &[], 100, "n")).unwrap();
        r.register_definition(Definition::audited("b", &[], 130, "n")).unwrap();
        let subs = vec![
            (manifest("complex", &[("b", 1)], 0), 5.0),
            (manifest("simple", &[("a", 1)], 0), 5.0),
        ];
        let rk = rank("p", &r, &subs).unwrap();
        assert_eq!(rk.entries[0].model, "simple");
        assert_eq!(rk.entries[1].odds_note, "2^30");
        let rev: Vec<_> = subs.iter().rev().cloned().collect();
        assert_eq!(rank("p", &r, &rev).unwrap(), rk);
        let single = rank("p", &r, &subs[..1]).unwrap();
        assert_eq!(single.entries[0].rank, 1);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn nats() {
        assert_eq!(to_nats(0.0), 0.0);
        assert!((to_nats(1.0) - 0.6931).abs() < 1e-4);
        assert!((to_nats(8.0) - 5.5452).abs() < 1e-4);
    }

    #[test]
    fn registry_round_trip_is_byte_exact() {
        let (mut r, _) = calculus_example();
        r.register_definition(Definition::from_term("k", &[], r"\x y. x").unwrap())
            .unwrap();
        let text = r.to_json();
        let back = Registry::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
        let tampered = text.replacen("1200", "1201", 1);
        assert!(Registry::from_json(&tampered).is_err());
    }
}
