//! Golden fixtures and the pipeline that checks them.
//!
//! Each `*.dg` file under the catalog directory is one entry, named by its
//! path relative to the directory without the extension. Expectation keys:
//!
//! | key | value |
//! |-----|-------|
//! | `vertices` | vertex count |
//! | `outcome` | `ContractionOutcome::label` |
//! | `definiteness` | definiteness of the complete part |
//! | `fiber` | cycle (name or inline) carried by `CurveFiber` |
//! | `codisc` | all exceptional codiscrepancies |
//! | `codisc <id>` | one codiscrepancy |
//! | `codisc_nonnegative` | `true` / `false` |
//! | `denominators_divide <n>` | `true` / `false` |
//! | `rational` | Artin rationality of the exceptional part |
//! | `chain_relation chain=..` or `fork=l1,l2/f,..` | `true` / `false` |
//! | `weighted_blowup index=<m> weights=<w,..>` | discrepancy |
//! | `blowup_cdisc <id> mult=<k>` | codiscrepancy from the blowup, also compared with the solver |
//! | `tail anchor=<id> pins=<id>:<mult>,.. chain=.. fork=..` | `consistent`, `inconsistent` or `negative <leaf>` |
//! | `pullback <cycle>` | coefficients on the complete vertices outside the cycle |
//! | `trivial <cycle>` | `true` / `false` |
//! | `self_intersection <id>` | after contracting every other complete vertex |
//! | `pair weights=.. degrees=.. k=..` | rational |
//! | `wdisc index=.. weights=..` | rational |
//! | `genus weights=.. degree=.. correction=..` | rational |
//! | `role <name>` | vertex id |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::contraction::{classify_detailed, ContractionOutcome};
use crate::discrepancy::{
    anchored_tail_derivation, chain_codiscrepancy_check, codiscrepancies, default_pullback_subset,
    denominator_filter, fundamental_cycle, mumford_pullback, mumford_self_intersection,
    numerically_trivial, Tail, TailVerdict,
};
use crate::dsl::{self, parse_assignments, Document, Expectation, ParseError, Provenance};
use crate::graph::{Cycle, DualGraph};
use crate::linalg::{parse_rational, Rational};
use crate::wps::{
    cdisc_from_blowup, pair, subadjunction_genus, wblowup_discrepancy, CICurve,
    WeightedProjectiveSpace,
};

/// Entries every complete catalog must contain.
pub const REQUIRED_ENTRIES: &[&str] = &[
    "ic/conic-bundle",
    "ic/anticanonical-m5",
    "ic/anticanonical-m7",
    "ic/anticanonical-m9",
    "ic/anticanonical-m11",
    "iib/a2-divisorial",
    "iib/smooth-divisorial",
    "iib/d4-divisorial",
    "iib/conic-bundle",
    "iib-support/e6-anticanonical",
    "iib-support/d5-nongeneral",
    "iib-support/e6-nongeneral",
    "iib-support/conic-bundle-n1",
    "rejected/simple-b-k0",
    "rejected/simple-b-k1",
    "rejected/simple-b-k2",
    "rejected/a1-n1",
    "rejected/a1-n2",
    "rejected/a1-n3",
    "rejected/a2-n3",
    "rejected/a2-n4",
    "rejected/a2-n5",
];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog: {0}")]
    Io(String),
    #[error("{entry}:{error}")]
    Parse { entry: String, error: ParseError },
    #[error("{entry}:{line}: expectation `{key}` has no provenance tag")]
    MissingProvenance {
        entry: String,
        line: usize,
        key: String,
    },
    #[error("catalog is missing required entries: {}", .0.join(", "))]
    MissingEntries(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub path: PathBuf,
    pub source: Option<String>,
    pub document: Document,
    pub special_vertices: BTreeMap<String, String>,
}

impl CatalogEntry {
    pub fn graph(&self) -> &DualGraph {
        &self.document.graph
    }

    pub fn from_text(name: &str, text: &str) -> Result<Self, CatalogError> {
        let document = dsl::parse(text).map_err(|error| CatalogError::Parse {
            entry: name.to_string(),
            error,
        })?;
        if let Some(e) = document
            .expectations
            .iter()
            .find(|e| e.provenance.is_none())
        {
            return Err(CatalogError::MissingProvenance {
                entry: name.to_string(),
                line: e.line,
                key: e.key.clone(),
            });
        }
        Ok(Self::from_document(name, document))
    }

    /// Wraps an already parsed document; provenance tags are not required.
    pub fn from_document(name: &str, document: Document) -> Self {
        let special_vertices = document
            .expectations
            .iter()
            .filter_map(|e| {
                e.key
                    .strip_prefix("role ")
                    .map(|role| (role.trim().to_string(), e.value.clone()))
            })
            .collect();
        CatalogEntry {
            name: name.to_string(),
            path: PathBuf::new(),
            source: document.source.clone(),
            document,
            special_vertices,
        }
    }
}

/// Directory shipped with the crate sources.
pub fn default_catalog_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../catalog")
}

fn entry_name(dir: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(dir).unwrap_or(path).with_extension("");
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Loads every `*.dg` file below `dir`, sorted by entry name, and checks
/// that the required entries are present.
pub fn load_catalog(dir: &Path) -> Result<Vec<CatalogEntry>, CatalogError> {
    let entries = load_entries(dir)?;
    let missing: Vec<String> = REQUIRED_ENTRIES
        .iter()
        .filter(|r| !entries.iter().any(|e| e.name == **r))
        .map(|r| r.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CatalogError::MissingEntries(missing));
    }
    Ok(entries)
}

/// Loads every `*.dg` file below `dir`, sorted by entry name.
pub fn load_entries(dir: &Path) -> Result<Vec<CatalogEntry>, CatalogError> {
    let pattern = dir.join("**").join("*.dg");
    let paths = glob::glob(&pattern.to_string_lossy())
        .map_err(|e| CatalogError::Io(e.to_string()))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CatalogError::Io(e.to_string()))?;
    let mut entries = Vec::with_capacity(paths.len());
    for path in paths {
        let name = entry_name(dir, &path);
        let text = fs::read_to_string(&path)
            .map_err(|e| CatalogError::Io(format!("{}: {e}", path.display())))?;
        let mut entry = CatalogEntry::from_text(&name, &text)?;
        entry.path = path;
        entries.push(entry);
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(entries)
}

/// Entries whose name matches the glob `filter`.
pub fn filter_entries<'a>(
    entries: &'a [CatalogEntry],
    filter: &str,
) -> Result<Vec<&'a CatalogEntry>, glob::PatternError> {
    let pattern = glob::Pattern::new(filter)?;
    Ok(entries
        .iter()
        .filter(|e| pattern.matches(&e.name))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckRecord {
    pub entry: String,
    pub check: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Verifies entries in parallel; records come back grouped by entry name,
/// in file order within an entry.
pub fn verify_all(entries: &[&CatalogEntry]) -> Vec<CheckRecord> {
    let mut per_entry: Vec<(String, Vec<CheckRecord>)> = entries
        .par_iter()
        .map(|e| (e.name.clone(), verify_entry(e)))
        .collect();
    per_entry.sort_by(|a, b| a.0.cmp(&b.0));
    per_entry.into_iter().flat_map(|(_, r)| r).collect()
}

pub fn verify_entry(entry: &CatalogEntry) -> Vec<CheckRecord> {
    let mut out = vec![Context::new(entry).round_trip()];
    out.extend(verify_selected(entry, |_| true));
    out
}

/// Checks only the expectations whose leading key word satisfies `keep`.
pub fn verify_selected(entry: &CatalogEntry, keep: impl Fn(&str) -> bool) -> Vec<CheckRecord> {
    let ctx = Context::new(entry);
    let mut out = Vec::new();
    for exp in &entry.document.expectations {
        if !keep(exp.key.split_whitespace().next().unwrap_or("")) {
            continue;
        }
        let (actual, pass) = match ctx.check(exp) {
            Ok(r) => r,
            Err(msg) => (format!("error: {msg}"), false),
        };
        out.push(CheckRecord {
            entry: entry.name.clone(),
            check: exp.key.clone(),
            expected: exp.value.clone(),
            actual,
            pass,
            provenance: exp.provenance,
        });
    }
    out
}

struct Args<'a> {
    positional: Vec<&'a str>,
    named: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    fn parse(tokens: &[&'a str]) -> Self {
        let mut positional = Vec::new();
        let mut named = Vec::new();
        for t in tokens {
            match t.split_once('=') {
                Some((k, v)) => named.push((k, v)),
                None => positional.push(*t),
            }
        }
        Args { positional, named }
    }

    fn one(&self, key: &str) -> Result<&'a str, String> {
        let mut it = self.named.iter().filter(|(k, _)| *k == key);
        match (it.next(), it.next()) {
            (Some((_, v)), None) => Ok(v),
            (None, _) => Err(format!("missing `{key}=`")),
            _ => Err(format!("repeated `{key}=`")),
        }
    }

    fn all(&self, key: &str) -> Vec<&'a str> {
        self.named
            .iter()
            .filter(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .collect()
    }

    fn positional(&self, i: usize) -> Result<&'a str, String> {
        self.positional
            .get(i)
            .copied()
            .ok_or_else(|| "missing argument".to_string())
    }
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

fn parse_id_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|x| x.trim().to_string())
        .filter(|x| !x.is_empty())
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true/false, got `{other}`")),
    }
}

fn parse_q(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn fmt_values<'a>(it: impl IntoIterator<Item = (&'a String, &'a Rational)>) -> String {
    let parts: Vec<String> = it.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(", ")
}

fn bool_check(actual: bool, expected: &str) -> Result<(String, bool), String> {
    let want = parse_bool(expected)?;
    Ok((actual.to_string(), actual == want))
}

fn q_check(actual: Rational, expected: &str) -> Result<(String, bool), String> {
    let want = parse_q(expected)?;
    Ok((actual.to_string(), actual == want))
}

/// Parses a `fork=l1,l2/f,c2,..` argument.
fn parse_fork(s: &str) -> Result<Tail, String> {
    let (leaves, chain) = s
        .split_once('/')
        .ok_or_else(|| format!("fork `{s}` must look like `l1,l2/f,...`"))?;
    let leaves = parse_id_list(leaves);
    let [a, b] = leaves.as_slice() else {
        return Err(format!("fork `{s}` needs exactly two leaves"));
    };
    Ok(Tail::Fork {
        leaves: [a.clone(), b.clone()],
        chain: parse_id_list(chain),
    })
}

fn tails_from(args: &Args<'_>) -> Result<Vec<Tail>, String> {
    let mut tails: Vec<Tail> = args
        .all("chain")
        .into_iter()
        .map(|c| Tail::Chain(parse_id_list(c)))
        .collect();
    for f in args.all("fork") {
        tails.push(parse_fork(f)?);
    }
    if tails.is_empty() {
        return Err("no `chain=` or `fork=` given".into());
    }
    Ok(tails)
}

struct Context<'a> {
    entry: &'a CatalogEntry,
    g: &'a DualGraph,
}

impl<'a> Context<'a> {
    fn new(entry: &'a CatalogEntry) -> Self {
        Context {
            entry,
            g: &entry.document.graph,
        }
    }

    fn record(&self, check: &str, expected: String, actual: String, pass: bool) -> CheckRecord {
        CheckRecord {
            entry: self.entry.name.clone(),
            check: check.to_string(),
            expected,
            actual,
            pass,
            provenance: None,
        }
    }

    fn round_trip(&self) -> CheckRecord {
        let text = dsl::serialize(&self.entry.document);
        let pass = match dsl::parse(&text) {
            Ok(doc) => {
                doc.graph.same_structure(self.g)
                    && doc.cycles == self.entry.document.cycles
                    && doc.expectations.len() == self.entry.document.expectations.len()
            }
            Err(_) => false,
        };
        let actual = if pass { "identical" } else { "differs" };
        self.record("round_trip", "identical".into(), actual.into(), pass)
    }

    /// A cycle given by name or inline as `id=q, ...`.
    fn cycle(&self, spec: &str) -> Result<Cycle, String> {
        if spec.contains('=') {
            let pairs = parse_assignments(spec)?;
            for (id, _) in &pairs {
                if !self.g.contains(id) {
                    return Err(format!("unknown vertex `{id}`"));
                }
            }
            Ok(Cycle::from_pairs(pairs))
        } else {
            self.entry
                .document
                .cycle(spec)
                .cloned()
                .ok_or_else(|| format!("no cycle named `{spec}`"))
        }
    }

    /// Discrepancy of the entry's weighted blowup.
    fn blowup_disc(&self) -> Result<Rational, String> {
        let exp = self
            .entry
            .document
            .expectations
            .iter()
            .find(|e| e.key.starts_with("weighted_blowup"))
            .ok_or("entry has no `weighted_blowup` expectation")?;
        let tokens: Vec<&str> = exp.key.split_whitespace().skip(1).collect();
        let args = Args::parse(&tokens);
        let index = args
            .one("index")?
            .parse::<u64>()
            .map_err(|e| e.to_string())?;
        let weights = parse_u64_list(args.one("weights")?)?;
        Ok(wblowup_discrepancy(index, &weights))
    }

    fn check(&self, exp: &Expectation) -> Result<(String, bool), String> {
        let tokens: Vec<&str> = exp.key.split_whitespace().collect();
        let (head, rest) = tokens.split_first().ok_or("empty key")?;
        let args = Args::parse(rest);
        let g = self.g;
        let value = exp.value.as_str();
        match *head {
            "vertices" => {
                let n = g.len();
                Ok((n.to_string(), value.parse::<usize>().ok() == Some(n)))
            }
            "role" => {
                let ok = g.contains(value);
                Ok((
                    if ok {
                        value.to_string()
                    } else {
                        "missing".into()
                    },
                    ok,
                ))
            }
            "outcome" => {
                let c = classify_detailed(g).map_err(|e| e.to_string())?;
                let label = c.outcome.label();
                let pass = label == value;
                Ok((c.outcome.to_string(), pass))
            }
            "definiteness" => {
                let c = classify_detailed(g).map_err(|e| e.to_string())?;
                let d = c.definiteness.to_string();
                let pass = d == value;
                Ok((d, pass))
            }
            "fiber" => {
                let want = self.cycle(value)?;
                match classify_detailed(g).map_err(|e| e.to_string())?.outcome {
                    ContractionOutcome::CurveFiber(z) => {
                        let pass = z == want;
                        Ok((z.to_string(), pass))
                    }
                    other => Ok((other.to_string(), false)),
                }
            }
            "codisc" => {
                let r = codiscrepancies(g, false).map_err(|e| e.to_string())?;
                if let Some(id) = args.positional.first() {
                    let actual = r
                        .get(id)
                        .cloned()
                        .ok_or_else(|| format!("`{id}` is not exceptional"))?;
                    return q_check(actual, value);
                }
                let want = self.cycle(value)?;
                let pass = want.support().all(|id| r.values.contains_key(id))
                    && r.values.iter().all(|(id, v)| want.get(id) == *v);
                Ok((fmt_values(&r.values), pass))
            }
            "codisc_nonnegative" => {
                let r = codiscrepancies(g, false).map_err(|e| e.to_string())?;
                bool_check(r.all_nonnegative, value)
            }
            "denominators_divide" => {
                let n: u64 = args.positional(0)?.parse().map_err(|_| "bad index")?;
                let r = codiscrepancies(g, false).map_err(|e| e.to_string())?;
                let pass = denominator_filter(&r, n);
                let (mut actual, ok) = bool_check(pass, value)?;
                actual.push_str(&format!(" (max denominator {})", r.max_denominator));
                Ok((actual, ok))
            }
            "rational" => {
                let f = fundamental_cycle(g, &g.exceptional_ids()).map_err(|e| e.to_string())?;
                let (mut actual, ok) = bool_check(f.is_rational(), value)?;
                actual.push_str(&format!(" (Z = {}, p_a = {})", f.cycle, f.arithmetic_genus));
                Ok((actual, ok))
            }
            "chain_relation" => {
                let r = codiscrepancies(g, false).map_err(|e| e.to_string())?;
                let tails = tails_from(&args)?;
                let mut all = true;
                for t in &tails {
                    all &= chain_codiscrepancy_check(g, &r, t).map_err(|e| e.to_string())?;
                }
                bool_check(all, value)
            }
            "weighted_blowup" => {
                let d = self.blowup_disc()?;
                q_check(d, value)
            }
            "blowup_cdisc" => {
                let id = args.positional(0)?;
                let mult: u64 = args.one("mult")?.parse().map_err(|_| "bad mult")?;
                let from_blowup = cdisc_from_blowup(mult, &self.blowup_disc()?);
                let want = parse_q(value)?;
                let solver = codiscrepancies(g, false)
                    .map_err(|e| e.to_string())?
                    .get(id)
                    .cloned()
                    .ok_or_else(|| format!("`{id}` is not exceptional"))?;
                let pass = from_blowup == want && solver == want;
                Ok((format!("blowup {from_blowup}, solver {solver}"), pass))
            }
            "tail" => {
                let anchor = args.one("anchor")?;
                let disc = self.blowup_disc()?;
                let mut pins = Cycle::new();
                for pin in parse_id_list(args.one("pins")?) {
                    let (id, mult) = pin
                        .split_once(':')
                        .ok_or_else(|| format!("pin `{pin}` must be `<id>:<mult>`"))?;
                    let mult: u64 = mult
                        .parse()
                        .map_err(|_| format!("bad multiplicity in `{pin}`"))?;
                    pins.set(id, cdisc_from_blowup(mult, &disc));
                }
                let tails = tails_from(&args)?;
                let d = anchored_tail_derivation(g, &pins, anchor, &tails)
                    .map_err(|e| e.to_string())?;
                let verdict = match &d.verdict {
                    TailVerdict::Consistent => "consistent".to_string(),
                    TailVerdict::Inconsistent => "inconsistent".to_string(),
                    TailVerdict::NegativeCodiscrepancy { leaf } => format!("negative {leaf}"),
                };
                let pass = verdict == value;
                Ok((
                    format!("{verdict} (forced {}, required {})", d.forced, d.required),
                    pass,
                ))
            }
            "pullback" => {
                let attached = self.cycle(args.positional(0)?)?;
                let subset = default_pullback_subset(g, &attached);
                let got = mumford_pullback(g, &attached, &subset).map_err(|e| e.to_string())?;
                let want = self.cycle(value)?;
                let pass = got == want;
                Ok((got.to_string(), pass))
            }
            "trivial" => {
                let z = self.cycle(args.positional(0)?)?;
                let t = numerically_trivial(g, &z).map_err(|e| e.to_string())?;
                bool_check(t, value)
            }
            "self_intersection" => {
                let id = args.positional(0)?;
                let subset: Vec<String> =
                    g.complete_ids().into_iter().filter(|v| v != id).collect();
                let s = mumford_self_intersection(g, id, &subset).map_err(|e| e.to_string())?;
                q_check(s, value)
            }
            "pair" => {
                let ambient = WeightedProjectiveSpace::new(parse_u64_list(args.one("weights")?)?)
                    .map_err(|e| e.to_string())?;
                let curve = CICurve::new(ambient, parse_u64_list(args.one("degrees")?)?)
                    .map_err(|e| e.to_string())?;
                let k: i64 = args.one("k")?.parse().map_err(|_| "bad k")?;
                q_check(pair(&curve, k), value)
            }
            "wdisc" => {
                let index: u64 = args.one("index")?.parse().map_err(|_| "bad index")?;
                let weights = parse_u64_list(args.one("weights")?)?;
                q_check(wblowup_discrepancy(index, &weights), value)
            }
            "genus" => {
                let ambient = WeightedProjectiveSpace::new(parse_u64_list(args.one("weights")?)?)
                    .map_err(|e| e.to_string())?;
                let d: u64 = args.one("degree")?.parse().map_err(|_| "bad degree")?;
                let corr = parse_q(args.one("correction")?)?;
                let p = subadjunction_genus(&ambient, d, &corr).map_err(|e| e.to_string())?;
                q_check(p, value)
            }
            other => Err(format!("unknown expectation key `{other}`")),
        }
    }
}
