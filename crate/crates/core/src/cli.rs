//! Command-line front end.
//!
//! Every command builds a [`Report`]; `main` prints it as a table or as JSON
//! and exits with [`Report::exit`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::catalog::{
    default_catalog_dir, filter_entries, load_catalog, load_entries, verify_all, verify_selected,
    CatalogEntry, CheckRecord,
};
use crate::contraction::{classify_detailed, ContractionOutcome};
use crate::discrepancy::{
    codiscrepancies, default_pullback_subset, mumford_pullback, numerically_trivial,
};
use crate::dsl::{self, Document};
use crate::graph::{cycle_dot, Cycle};
use crate::linalg::parse_rational;
use crate::wps::{
    pair, subadjunction_genus, wblowup_discrepancy, CICurve, WeightedProjectiveSpace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "singres", version)]
#[command(about = "Exact checks on weighted dual graphs of surface singularity resolutions")]
pub struct Cli {
    /// Print the report as JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contract (-1)-curves and classify what is left.
    Classify { file: PathBuf },
    /// Codiscrepancies of the exceptional curves.
    Codisc {
        file: PathBuf,
        /// Also solve for the central curves.
        #[arg(long)]
        include_central: bool,
    },
    /// Mumford pullback of a named cycle.
    Pullback {
        file: PathBuf,
        /// Cycle to pull back.
        #[arg(long)]
        attached: String,
        /// Curves to solve on; defaults to the complete curves off the cycle.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
    },
    /// Intersection numbers of a named cycle with every complete curve.
    Triviality {
        file: PathBuf,
        #[arg(long)]
        cycle: String,
    },
    /// Degree of O(k) on a complete intersection curve.
    Pair {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<u64>,
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
    },
    /// Discrepancy of a weighted blowup.
    Wdisc {
        #[arg(long)]
        index: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<u64>,
    },
    /// Arithmetic genus of a curve on a weighted plane.
    Genus {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<u64>,
        #[arg(long)]
        degree: u64,
        #[arg(long, allow_hyphen_values = true)]
        correction: String,
    },
    /// Operations on the fixture catalog.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Check every expectation of every (matching) entry.
    Verify {
        /// Glob on entry names, e.g. `iib/*`.
        #[arg(long)]
        filter: Option<String>,
        /// Catalog directory; the bundled catalog by default.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Record {
    pub name: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    pub actual: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Record {
    fn value(name: impl Into<String>, actual: impl ToString) -> Self {
        Record {
            name: name.into(),
            inputs: BTreeMap::new(),
            expected: None,
            actual: actual.to_string(),
            pass: None,
        }
    }

    fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }
}

impl From<CheckRecord> for Record {
    fn from(r: CheckRecord) -> Self {
        let mut inputs = BTreeMap::new();
        inputs.insert("entry".to_string(), r.entry);
        if let Some(p) = r.provenance {
            inputs.insert("provenance".to_string(), p.tag().to_string());
        }
        Record {
            name: r.check,
            inputs,
            expected: Some(r.expected),
            actual: r.actual,
            pass: Some(r.pass),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub records: Vec<Record>,
    pub exit: i32,
}

impl Report {
    fn new(command: Vec<String>) -> Self {
        Report {
            command,
            error: None,
            warnings: Vec::new(),
            records: Vec::new(),
            exit: EXIT_OK,
        }
    }

    fn failed(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.pass == Some(false))
            .count()
    }

    /// Exit status from the records: 1 if any check failed.
    fn settle(mut self) -> Self {
        if self.exit == EXIT_OK && self.failed() > 0 {
            self.exit = EXIT_FAILED;
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "$ singres {}", self.command.join(" "));
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let rows: Vec<[String; 4]> = self
            .records
            .iter()
            .map(|r| {
                let name = match r.inputs.get("entry") {
                    Some(entry) => format!("{entry}  {}", r.name),
                    None => r.name.clone(),
                };
                let status = match r.pass {
                    Some(true) => "ok",
                    Some(false) => "FAIL",
                    None => "",
                };
                [
                    name,
                    r.expected.clone().unwrap_or_default(),
                    r.actual.clone(),
                    status.to_string(),
                ]
            })
            .collect();
        if !rows.is_empty() {
            let header = ["check", "expected", "actual", ""].map(String::from);
            let mut width = [0usize; 3];
            for row in std::iter::once(&header).chain(&rows) {
                for (w, cell) in width.iter_mut().zip(row) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            for row in std::iter::once(&header).chain(&rows) {
                let line = format!(
                    "{:w0$}  {:w1$}  {:w2$}  {}",
                    row[0],
                    row[1],
                    row[2],
                    row[3],
                    w0 = width[0],
                    w1 = width[1],
                    w2 = width[2]
                );
                let _ = writeln!(out, "{}", line.trim_end());
            }
        }
        let checked = self.records.iter().filter(|r| r.pass.is_some()).count();
        if checked > 0 {
            let _ = writeln!(out, "{} checks, {} failed", checked, self.failed());
        }
        out
    }
}

/// Runs a parsed command line; `echo` is recorded verbatim in the report.
pub fn run(cli: &Cli, echo: Vec<String>) -> Report {
    let mut report = Report::new(echo);
    let r = &mut report;
    let result = match &cli.command {
        Command::Classify { file } => cmd_classify(r, file),
        Command::Codisc {
            file,
            include_central,
        } => cmd_codisc(r, file, *include_central),
        Command::Pullback {
            file,
            attached,
            subset,
        } => cmd_pullback(r, file, attached, subset.as_deref()),
        Command::Triviality { file, cycle } => cmd_triviality(r, file, cycle),
        Command::Pair {
            weights,
            degrees,
            k,
        } => cmd_pair(r, weights, degrees, *k),
        Command::Wdisc { index, weights } => cmd_wdisc(r, *index, weights),
        Command::Genus {
            weights,
            degree,
            correction,
        } => cmd_genus(r, weights, *degree, correction),
        Command::Catalog {
            command: CatalogCommand::Verify { filter, dir },
        } => cmd_catalog_verify(r, filter.as_deref(), dir.as_deref()),
    };
    match result {
        Ok(()) => report.settle(),
        Err(msg) => {
            report.error = Some(msg);
            report.exit = EXIT_INPUT;
            report
        }
    }
}

fn load(report: &mut Report, file: &Path) -> Result<Document, String> {
    let text = fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let doc = dsl::parse(&text).map_err(|e| format!("{}:{e}", file.display()))?;
    report.warnings.extend(doc.warnings.iter().cloned());
    Ok(doc)
}

/// Records for the file's own expectations whose key starts with one of `heads`.
fn own_expectations(doc: &Document, file: &Path, heads: &[&str]) -> Vec<Record> {
    let entry = CatalogEntry::from_document(&file.display().to_string(), doc.clone());
    verify_selected(&entry, |h| heads.contains(&h))
        .into_iter()
        .map(|r| {
            let mut rec = Record::from(r);
            rec.inputs.remove("entry");
            rec
        })
        .collect()
}

fn cmd_classify(report: &mut Report, file: &Path) -> Result<(), String> {
    let doc = load(report, file)?;
    let c = classify_detailed(&doc.graph).map_err(|e| e.to_string())?;
    let recs = &mut report.records;
    recs.push(Record::value("definiteness", &c.definiteness));
    recs.push(Record::value("outcome", c.outcome.label()));
    match &c.outcome {
        ContractionOutcome::CurveFiber(z) => recs.push(Record::value("fiber", z)),
        ContractionOutcome::RationalPoint(res) => {
            recs.push(Record::value("residual vertices", res.len()))
        }
        ContractionOutcome::NotContractible(reason) => recs.push(Record::value("reason", reason)),
        _ => {}
    }
    if !c.contracted.is_empty() {
        recs.push(Record::value("blown down", c.contracted.join(" ")));
    }
    recs.extend(own_expectations(
        &doc,
        file,
        &["vertices", "outcome", "definiteness", "fiber", "rational"],
    ));
    Ok(())
}

fn cmd_codisc(report: &mut Report, file: &Path, include_central: bool) -> Result<(), String> {
    let doc = load(report, file)?;
    let r = codiscrepancies(&doc.graph, include_central).map_err(|e| e.to_string())?;
    let recs = &mut report.records;
    for (id, v) in &r.values {
        recs.push(Record::value(format!("codisc {id}"), v));
    }
    recs.push(Record {
        pass: Some(r.all_nonnegative),
        ..Record::value("all_nonnegative", r.all_nonnegative)
    });
    recs.push(Record::value("max_denominator", &r.max_denominator));
    let own = own_expectations(
        &doc,
        file,
        &[
            "codisc",
            "codisc_nonnegative",
            "denominators_divide",
            "chain_relation",
            "weighted_blowup",
            "blowup_cdisc",
            "tail",
        ],
    );
    for rec in own {
        // A tail derivation that is not consistent fails here even when the
        // file expects it: this command asks whether the configuration is
        // admissible, not whether the fixture holds.
        if rec.name.starts_with("tail ") && !rec.actual.starts_with("consistent") {
            recs.push(Record {
                name: format!("{} admissible", rec.name),
                expected: Some("consistent".into()),
                actual: rec.actual.clone(),
                pass: Some(false),
                inputs: BTreeMap::new(),
            });
        }
        recs.push(rec);
    }
    Ok(())
}

fn named_cycle(doc: &Document, name: &str) -> Result<Cycle, String> {
    doc.cycle(name)
        .cloned()
        .ok_or_else(|| format!("no cycle named `{name}`"))
}

fn cmd_pullback(
    report: &mut Report,
    file: &Path,
    attached: &str,
    subset: Option<&[String]>,
) -> Result<(), String> {
    let doc = load(report, file)?;
    let cycle = named_cycle(&doc, attached)?;
    let subset = match subset {
        Some(s) => s.to_vec(),
        None => default_pullback_subset(&doc.graph, &cycle),
    };
    let m = mumford_pullback(&doc.graph, &cycle, &subset).map_err(|e| e.to_string())?;
    for id in &subset {
        report
            .records
            .push(Record::value(format!("m {id}"), m.get(id)).input("attached", attached));
    }
    let key = format!("pullback {attached}");
    report.records.extend(
        own_expectations(&doc, file, &["pullback"])
            .into_iter()
            .filter(|r| r.name == key),
    );
    Ok(())
}

fn cmd_triviality(report: &mut Report, file: &Path, name: &str) -> Result<(), String> {
    let doc = load(report, file)?;
    let z = named_cycle(&doc, name)?;
    let g = &doc.graph;
    for id in g.complete_ids() {
        let v = cycle_dot(g, &z, &id).map_err(|e| e.to_string())?;
        report
            .records
            .push(Record::value(format!("{name} . {id}"), v));
    }
    let trivial = numerically_trivial(g, &z).map_err(|e| e.to_string())?;
    report
        .records
        .push(Record::value("numerically trivial", trivial));
    let key = format!("trivial {name}");
    report.records.extend(
        own_expectations(&doc, file, &["trivial"])
            .into_iter()
            .filter(|r| r.name == key),
    );
    Ok(())
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_pair(report: &mut Report, weights: &[u64], degrees: &[u64], k: i64) -> Result<(), String> {
    let curve = WeightedProjectiveSpace::new(weights.to_vec())
        .and_then(|p| CICurve::new(p, degrees.to_vec()))
        .map_err(|e| e.to_string())?;
    report.records.push(
        Record::value("pair", pair(&curve, k))
            .input("weights", join(weights))
            .input("degrees", join(degrees))
            .input("k", k),
    );
    Ok(())
}

fn cmd_wdisc(report: &mut Report, index: u64, weights: &[u64]) -> Result<(), String> {
    if index == 0 || weights.is_empty() || weights.contains(&0) {
        return Err("index and weights must be positive".into());
    }
    report.records.push(
        Record::value("discrepancy", wblowup_discrepancy(index, weights))
            .input("index", index)
            .input("weights", join(weights)),
    );
    Ok(())
}

fn cmd_genus(
    report: &mut Report,
    weights: &[u64],
    degree: u64,
    correction: &str,
) -> Result<(), String> {
    let corr = parse_rational(correction).map_err(|e| format!("--correction: {e}"))?;
    let p = WeightedProjectiveSpace::new(weights.to_vec())
        .and_then(|w| subadjunction_genus(&w, degree, &corr))
        .map_err(|e| e.to_string())?;
    report.records.push(
        Record::value("arithmetic genus", p)
            .input("weights", join(weights))
            .input("degree", degree)
            .input("correction", &corr),
    );
    Ok(())
}

fn cmd_catalog_verify(
    report: &mut Report,
    filter: Option<&str>,
    dir: Option<&Path>,
) -> Result<(), String> {
    let entries = match dir {
        Some(d) => load_entries(d),
        None => load_catalog(&default_catalog_dir()),
    }
    .map_err(|e| e.to_string())?;
    let selected: Vec<&CatalogEntry> = match filter {
        Some(f) => filter_entries(&entries, f).map_err(|e| format!("--filter: {e}"))?,
        None => entries.iter().collect(),
    };
    if selected.is_empty() {
        report.warnings.push(match filter {
            Some(f) => format!("filter `{f}` matched no entries"),
            None => "catalog is empty".to_string(),
        });
        return Ok(());
    }
    report
        .records
        .extend(verify_all(&selected).into_iter().map(Record::from));
    Ok(())
}
