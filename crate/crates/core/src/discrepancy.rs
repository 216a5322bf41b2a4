//! Codiscrepancies, fundamental cycles, numerical pullbacks and triviality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{
    arithmetic_genus, cycle_dot, intersection_matrix, Cycle, DualGraph, GraphError, VertexKind,
};
use crate::linalg::{definiteness, int, solve, LinalgError, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscrepancyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("intersection matrix on the subset is singular")]
    SingularConfiguration,
    #[error("intersection matrix on the subset is not negative definite")]
    NotNegativeDefinite,
    #[error("not a terminal (-2)-tail: {0}")]
    NotAChain(String),
    #[error("attached cycle meets the subset at `{0}`")]
    AttachedOverlapsSubset(String),
    #[error("vertex `{0}` must be pinned")]
    NotPinned(String),
}

impl From<LinalgError> for DiscrepancyError {
    fn from(_: LinalgError) -> Self {
        DiscrepancyError::SingularConfiguration
    }
}

fn serialize_values<S: Serializer>(
    values: &BTreeMap<String, Rational>,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_map(values.iter().map(|(k, v)| (k, v.to_string())))
}

fn serialize_display<S: Serializer, T: fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodiscrepancyResult {
    #[serde(serialize_with = "serialize_values")]
    pub values: BTreeMap<String, Rational>,
    pub all_nonnegative: bool,
    #[serde(serialize_with = "serialize_display")]
    pub max_denominator: BigInt,
}

impl CodiscrepancyResult {
    fn from_values(values: BTreeMap<String, Rational>) -> Self {
        let all_nonnegative = values.values().all(|v| !v.is_negative());
        let max_denominator = values
            .values()
            .map(|v| v.denom().clone())
            .max()
            .unwrap_or_else(BigInt::one);
        CodiscrepancyResult {
            values,
            all_nonnegative,
            max_denominator,
        }
    }

    pub fn get(&self, id: &str) -> Option<&Rational> {
        self.values.get(id)
    }

    pub fn as_cycle(&self) -> Cycle {
        Cycle::from_pairs(self.values.iter().map(|(k, v)| (k.clone(), v.clone())))
    }
}

/// Right-hand side `2 + E²` of the codiscrepancy system.
fn adjunction_rhs(g: &DualGraph, id: &str) -> Result<Rational, GraphError> {
    let s = g
        .vertex_or_err(id)?
        .self_int
        .ok_or_else(|| GraphError::TransversalInSubset(id.to_string()))?;
    Ok(int(2 + s))
}

/// Codiscrepancies of the exceptional vertices; `include_central` adds the
/// central curves to the system.
pub fn codiscrepancies(
    g: &DualGraph,
    include_central: bool,
) -> Result<CodiscrepancyResult, DiscrepancyError> {
    let subset = g.ids_where(|v| {
        v.kind == VertexKind::Exceptional || (include_central && v.kind == VertexKind::Central)
    });
    codiscrepancies_on(g, &subset)
}

/// Solves `Σ θ_i E_i · E_j = 2 + E_j²` for `j` in `subset`.
pub fn codiscrepancies_on(
    g: &DualGraph,
    subset: &[String],
) -> Result<CodiscrepancyResult, DiscrepancyError> {
    let m = intersection_matrix(g, subset)?;
    let rhs = subset
        .iter()
        .map(|id| adjunction_rhs(g, id))
        .collect::<Result<Vec<_>, _>>()?;
    let theta = solve(&m, &rhs)?;
    Ok(CodiscrepancyResult::from_values(
        subset.iter().cloned().zip(theta).collect(),
    ))
}

/// Solves the codiscrepancy equations at the vertices of `unknowns` only,
/// with values on `pinned` held fixed. The result holds both.
pub fn pinned_codiscrepancies(
    g: &DualGraph,
    unknowns: &[String],
    pinned: &Cycle,
) -> Result<CodiscrepancyResult, DiscrepancyError> {
    let m = intersection_matrix(g, unknowns)?;
    let mut rhs = Vec::with_capacity(unknowns.len());
    for id in unknowns {
        if !pinned.get(id).is_zero() {
            return Err(DiscrepancyError::NotAChain(format!(
                "`{id}` is both pinned and unknown"
            )));
        }
        rhs.push(adjunction_rhs(g, id)? - cycle_dot(g, pinned, id)?);
    }
    let theta = solve(&m, &rhs)?;
    let mut values: BTreeMap<String, Rational> = unknowns.iter().cloned().zip(theta).collect();
    for (id, v) in pinned.iter() {
        values.insert(id.to_string(), v.clone());
    }
    Ok(CodiscrepancyResult::from_values(values))
}

/// A terminal tail of (-2)-curves hanging off an anchor vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Tail {
    /// Ordered from the free end towards the anchor.
    Chain(Vec<String>),
    /// Two leaves on the fork vertex `chain[0]`; `chain` runs towards the anchor.
    Fork {
        leaves: [String; 2],
        chain: Vec<String>,
    },
}

impl Tail {
    pub fn ids(&self) -> Vec<String> {
        match self {
            Tail::Chain(c) => c.clone(),
            Tail::Fork { leaves, chain } => leaves.iter().chain(chain).cloned().collect(),
        }
    }

    /// The tail vertex adjacent to the anchor.
    fn attach(&self) -> Option<&String> {
        match self {
            Tail::Chain(c) | Tail::Fork { chain: c, .. } => c.last(),
        }
    }

    fn edges(&self) -> BTreeSet<(String, String)> {
        let key = |a: &String, b: &String| {
            if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            }
        };
        let mut out = BTreeSet::new();
        let chain = match self {
            Tail::Chain(c) => c,
            Tail::Fork { leaves, chain } => {
                for l in leaves {
                    out.insert(key(l, &chain[0]));
                }
                chain
            }
        };
        for w in chain.windows(2) {
            out.insert(key(&w[0], &w[1]));
        }
        out
    }

    /// Checks the shape in `g` and returns the anchor, if the tail is
    /// attached to exactly one vertex outside it.
    pub fn validate(&self, g: &DualGraph) -> Result<Option<String>, DiscrepancyError> {
        let bad = |msg: String| Err(DiscrepancyError::NotAChain(msg));
        if let Tail::Fork { chain, .. } = self {
            if chain.is_empty() {
                return bad("fork tail needs a fork vertex".into());
            }
        }
        let ids = self.ids();
        if ids.is_empty() {
            return bad("empty tail".into());
        }
        let members: BTreeSet<&String> = ids.iter().collect();
        if members.len() != ids.len() {
            return bad("repeated vertex".into());
        }
        for id in &ids {
            let v = g.vertex_or_err(id)?;
            if v.self_int != Some(-2) || v.kind != VertexKind::Exceptional {
                return bad(format!("`{id}` is not an exceptional (-2)-curve"));
            }
        }
        let expected = self.edges();
        let mut outside = BTreeSet::new();
        for id in &ids {
            for (w, m) in g.neighbors(id) {
                let w = w.to_string();
                if members.contains(&w) {
                    let key = if *id <= w {
                        (id.clone(), w)
                    } else {
                        (w, id.clone())
                    };
                    if m != 1 || !expected.contains(&key) {
                        return bad(format!("unexpected edge {} -- {}", key.0, key.1));
                    }
                } else if g.vertex_or_err(&w)?.is_complete() {
                    if Some(id) != self.attach() {
                        return bad(format!("`{id}` meets `{w}` outside the tail"));
                    }
                    if m != 1 {
                        return bad(format!("`{id}` meets `{w}` with multiplicity {m}"));
                    }
                    outside.insert(w);
                }
            }
        }
        for (a, b) in &expected {
            if g.edge_multiplicity(a, b) != 1 {
                return bad(format!("missing edge {a} -- {b}"));
            }
        }
        match outside.len() {
            0 => Ok(None),
            1 => Ok(outside.into_iter().next()),
            _ => bad("tail meets more than one outside vertex".into()),
        }
    }

    /// Tail codiscrepancies forced by the anchor value alone.
    pub fn values_from_anchor(&self, anchor: &Rational) -> BTreeMap<String, Rational> {
        let mut out = BTreeMap::new();
        match self {
            Tail::Chain(c) => {
                let n = int(c.len() as i64 + 1);
                for (k, id) in c.iter().enumerate() {
                    out.insert(id.clone(), anchor * int(k as i64 + 1) / &n);
                }
            }
            Tail::Fork { leaves, chain } => {
                for id in chain {
                    out.insert(id.clone(), anchor.clone());
                }
                for l in leaves {
                    out.insert(l.clone(), anchor / int(2));
                }
            }
        }
        out
    }
}

/// Checks the tail relations on a codiscrepancy result: `α_k = k α_1` on
/// a chain; on a fork, both leaves equal half the fork value and the chain
/// is constant.
pub fn chain_codiscrepancy_check(
    g: &DualGraph,
    result: &CodiscrepancyResult,
    tail: &Tail,
) -> Result<bool, DiscrepancyError> {
    tail.validate(g)?;
    let val = |id: &String| {
        result
            .get(id)
            .cloned()
            .ok_or_else(|| DiscrepancyError::NotAChain(format!("no value for `{id}`")))
    };
    match tail {
        Tail::Chain(c) => {
            let a1 = val(&c[0])?;
            for (k, id) in c.iter().enumerate() {
                if val(id)? != &a1 * int(k as i64 + 1) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Tail::Fork { leaves, chain } => {
            let fork = val(&chain[0])?;
            for l in leaves {
                if val(l)? * int(2) != fork {
                    return Ok(false);
                }
            }
            for id in chain {
                if val(id)? != fork {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum TailVerdict {
    Consistent,
    /// The leaf value implied by the anchor equation is negative.
    NegativeCodiscrepancy {
        #[serde(serialize_with = "serialize_display")]
        leaf: Rational,
    },
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnchorDerivation {
    pub anchor: String,
    #[serde(serialize_with = "serialize_display")]
    pub anchor_value: Rational,
    /// Sum of tail codiscrepancies next to the anchor, as forced by the
    /// equation at the anchor.
    #[serde(serialize_with = "serialize_display")]
    pub forced: Rational,
    /// The same sum as required by the tail shapes.
    #[serde(serialize_with = "serialize_display")]
    pub required: Rational,
    pub rest: CodiscrepancyResult,
    #[serde(flatten)]
    pub verdict: TailVerdict,
}

/// Derivation with the codiscrepancies on `pinned` fixed (typically taken
/// from a weighted blowup) and `tails` hanging off the pinned `anchor`.
///
/// The rest of the exceptional graph is solved with the pins; the anchor
/// equation `a θ_A = a - 2 + Σ θ_nbr` then forces the sum of the tail
/// values adjacent to the anchor. For a single chain of length `n`, the
/// chain relations give `α_1 = θ_A - α_n`.
pub fn anchored_tail_derivation(
    g: &DualGraph,
    pinned: &Cycle,
    anchor: &str,
    tails: &[Tail],
) -> Result<AnchorDerivation, DiscrepancyError> {
    let anchor_value = pinned.get(anchor);
    if anchor_value.is_zero() {
        return Err(DiscrepancyError::NotPinned(anchor.to_string()));
    }
    let mut tail_ids = BTreeSet::new();
    for t in tails {
        match t.validate(g)? {
            Some(a) if a == anchor => {}
            _ => {
                return Err(DiscrepancyError::NotAChain(format!(
                    "tail is not attached to `{anchor}`"
                )))
            }
        }
        tail_ids.extend(t.ids());
    }
    let unknowns: Vec<String> = g
        .exceptional_ids()
        .into_iter()
        .filter(|id| !tail_ids.contains(id) && pinned.get(id).is_zero())
        .collect();
    let rest = pinned_codiscrepancies(g, &unknowns, pinned)?;
    let a = -g
        .vertex_or_err(anchor)?
        .self_int
        .ok_or_else(|| GraphError::NotComplete(anchor.to_string()))?;
    let mut forced = &anchor_value * int(a) - int(a - 2);
    for (w, m) in g.neighbors(anchor) {
        if tail_ids.contains(w) {
            continue;
        }
        if let Some(v) = rest.get(w) {
            forced -= v * int(m as i64);
        }
    }
    let required = tails
        .iter()
        .map(|t| {
            let vals = t.values_from_anchor(&anchor_value);
            vals[t.attach().expect("validated tail")].clone()
        })
        .fold(Rational::zero(), |acc, v| acc + v);
    let verdict = if forced == required {
        TailVerdict::Consistent
    } else {
        match tails {
            [Tail::Chain(_)] if (&anchor_value - &forced).is_negative() => {
                TailVerdict::NegativeCodiscrepancy {
                    leaf: &anchor_value - &forced,
                }
            }
            _ => TailVerdict::Inconsistent,
        }
    };
    Ok(AnchorDerivation {
        anchor: anchor.to_string(),
        anchor_value,
        forced,
        required,
        rest,
        verdict,
    })
}

/// True iff every reduced denominator divides `index`.
pub fn denominator_filter(result: &CodiscrepancyResult, index: u64) -> bool {
    let index = BigInt::from(index);
    result
        .values
        .values()
        .all(|v| index.is_multiple_of(v.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FundamentalCycle {
    pub cycle: Cycle,
    #[serde(serialize_with = "serialize_display")]
    pub arithmetic_genus: Rational,
    /// Arithmetic genus of the fundamental cycle of each connected component.
    #[serde(serialize_with = "serialize_values")]
    pub component_genera: BTreeMap<String, Rational>,
}

impl FundamentalCycle {
    /// Artin's criterion, applied per connected component.
    pub fn is_rational(&self) -> bool {
        self.component_genera.values().all(Zero::is_zero)
    }
}

/// Artin's fundamental cycle on `subset`. Components are keyed by their
/// first vertex.
pub fn fundamental_cycle(
    g: &DualGraph,
    subset: &[String],
) -> Result<FundamentalCycle, DiscrepancyError> {
    let m = intersection_matrix(g, subset)?;
    if !definiteness(&m).is_negative_definite() {
        return Err(DiscrepancyError::NotNegativeDefinite);
    }
    let mut total = Cycle::new();
    let mut component_genera = BTreeMap::new();
    for comp in g.components(subset) {
        let mut z = Cycle::from_pairs(comp.iter().map(|id| (id.clone(), int(1))));
        loop {
            let mut grew = false;
            for id in &comp {
                if cycle_dot(g, &z, id)?.is_positive() {
                    z.add(id.clone(), &int(1));
                    grew = true;
                    break;
                }
            }
            if !grew {
                break;
            }
        }
        component_genera.insert(comp[0].clone(), arithmetic_genus(g, &z)?);
        total = total.plus(&z);
    }
    let genus = arithmetic_genus(g, &total)?;
    Ok(FundamentalCycle {
        cycle: total,
        arithmetic_genus: genus,
        component_genera,
    })
}

/// Complete vertices outside the support of `attached`.
pub fn default_pullback_subset(g: &DualGraph, attached: &Cycle) -> Vec<String> {
    g.ids_where(|v| v.is_complete() && attached.get(&v.id).is_zero())
}

/// Coefficients `m` on `subset` with `(attached + Σ m_i E_i) · E_j = 0` for
/// every `j` in `subset`.
pub fn mumford_pullback(
    g: &DualGraph,
    attached: &Cycle,
    subset: &[String],
) -> Result<Cycle, DiscrepancyError> {
    for id in attached.support() {
        g.vertex_or_err(id)?;
        if subset.iter().any(|s| s == id) {
            return Err(DiscrepancyError::AttachedOverlapsSubset(id.to_string()));
        }
    }
    let m = intersection_matrix(g, subset)?;
    let rhs = subset
        .iter()
        .map(|id| cycle_dot(g, attached, id).map(|v| -v))
        .collect::<Result<Vec<_>, _>>()?;
    let coeffs = solve(&m, &rhs)?;
    Ok(Cycle::from_pairs(subset.iter().cloned().zip(coeffs)))
}

/// Self-intersection of the image of the complete curve `curve` after
/// contracting `subset`, via its numerical pullback.
pub fn mumford_self_intersection(
    g: &DualGraph,
    curve: &str,
    subset: &[String],
) -> Result<Rational, DiscrepancyError> {
    let c = Cycle::from_pairs([(curve.to_string(), int(1))]);
    let pulled = mumford_pullback(g, &c, subset)?.plus(&c);
    Ok(cycle_dot(g, &pulled, curve)?)
}

/// True iff `Z · E = 0` for every complete vertex `E`.
pub fn numerically_trivial(g: &DualGraph, z: &Cycle) -> Result<bool, GraphError> {
    for id in z.support() {
        g.vertex_or_err(id)?;
    }
    for id in g.complete_ids() {
        if !cycle_dot(g, z, &id)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}
