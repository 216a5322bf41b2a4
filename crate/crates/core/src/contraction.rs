//! Blow-down calculus and classification of curve configurations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{intersection_matrix, Cycle, DualGraph, GraphError, Vertex, VertexKind};
use crate::linalg::{definiteness, Definiteness, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AdeFamily {
    A,
    D,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdeType {
    pub family: AdeFamily,
    pub rank: usize,
}

impl AdeType {
    pub fn a(rank: usize) -> Self {
        AdeType {
            family: AdeFamily::A,
            rank,
        }
    }

    pub fn d(rank: usize) -> Self {
        AdeType {
            family: AdeFamily::D,
            rank,
        }
    }

    pub fn e(rank: usize) -> Self {
        AdeType {
            family: AdeFamily::E,
            rank,
        }
    }
}

impl fmt::Display for AdeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.family, self.rank)
    }
}

impl std::str::FromStr for AdeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid ADE type `{s}`");
        let (head, rank) = s.split_at(s.chars().next().map_or(0, char::len_utf8));
        let rank: usize = rank.parse().map_err(|_| bad())?;
        let t = match head {
            "A" if rank >= 1 => AdeType::a(rank),
            "D" if rank >= 4 => AdeType::d(rank),
            "E" if (6..=8).contains(&rank) => AdeType::e(rank),
            _ => return Err(bad()),
        };
        Ok(t)
    }
}

impl Serialize for AdeType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractionOutcome {
    SmoothPoint,
    DuValPoint(AdeType),
    /// Negative definite, but the residual after removing (-1)-curves is
    /// not a single ADE configuration.
    RationalPoint(DualGraph),
    /// Primitive positive kernel cycle of the complete part.
    CurveFiber(Cycle),
    NotContractible(String),
}

impl ContractionOutcome {
    /// Short tag used in expectations and tables, e.g. `DuValPoint(A2)`.
    pub fn label(&self) -> String {
        match self {
            ContractionOutcome::SmoothPoint => "SmoothPoint".into(),
            ContractionOutcome::DuValPoint(t) => format!("DuValPoint({t})"),
            ContractionOutcome::RationalPoint(_) => "RationalPoint".into(),
            ContractionOutcome::CurveFiber(_) => "CurveFiber".into(),
            ContractionOutcome::NotContractible(_) => "NotContractible".into(),
        }
    }

    /// Equality up to isomorphism-free renaming: residual graphs are compared
    /// structurally, everything else exactly.
    pub fn equivalent(&self, other: &ContractionOutcome) -> bool {
        match (self, other) {
            (ContractionOutcome::RationalPoint(a), ContractionOutcome::RationalPoint(b)) => {
                a.same_structure(b)
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for ContractionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractionOutcome::CurveFiber(z) => write!(f, "CurveFiber [{z}]"),
            ContractionOutcome::NotContractible(reason) => write!(f, "NotContractible: {reason}"),
            ContractionOutcome::RationalPoint(g) => {
                write!(f, "RationalPoint (residual: {} vertices)", g.len())
            }
            other => f.write_str(&other.label()),
        }
    }
}

#[derive(Serialize)]
struct ResidualEdge<'a> {
    a: &'a str,
    b: &'a str,
    m: u64,
}

impl Serialize for ContractionOutcome {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("outcome", &self.label())?;
        match self {
            ContractionOutcome::DuValPoint(t) => map.serialize_entry("type", t)?,
            ContractionOutcome::RationalPoint(g) => {
                map.serialize_entry("residual_vertices", g.vertices())?;
                let edges: Vec<_> = g
                    .edges()
                    .map(|(a, b, m)| ResidualEdge { a, b, m })
                    .collect();
                map.serialize_entry("residual_edges", &edges)?;
            }
            ContractionOutcome::CurveFiber(z) => map.serialize_entry("fiber", z)?,
            ContractionOutcome::NotContractible(r) => map.serialize_entry("reason", r)?,
            ContractionOutcome::SmoothPoint => {}
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractionError {
    #[error("vertex `{0}` is not a (-1)-curve")]
    NotMinusOne(String),
    #[error("vertex `{0}` is not complete")]
    NotComplete(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("graph has no complete vertices")]
    NoCompleteVertices,
}

impl From<GraphError> for ContractionError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownVertex(id) => ContractionError::UnknownVertex(id),
            GraphError::NotComplete(id) | GraphError::TransversalInSubset(id) => {
                ContractionError::NotComplete(id)
            }
            other => unreachable!("blow-down cannot produce {other}"),
        }
    }
}

/// Contracts the (-1)-curve `v`.
pub fn blow_down_once(g: &DualGraph, v: &str) -> Result<DualGraph, ContractionError> {
    let vertex = g
        .vertex(v)
        .ok_or_else(|| ContractionError::UnknownVertex(v.to_string()))?;
    if !vertex.is_complete() {
        return Err(ContractionError::NotComplete(v.to_string()));
    }
    if vertex.self_int != Some(-1) {
        return Err(ContractionError::NotMinusOne(v.to_string()));
    }
    let nbrs: Vec<(String, u64)> = g
        .neighbors(v)
        .into_iter()
        .map(|(id, m)| (id.to_string(), m))
        .collect();
    let mut out = g.clone();
    out.remove_vertex(v)?;
    for (a, m) in &nbrs {
        if let Some(s) = out.vertex_or_err(a)?.self_int {
            let m = i64::try_from(*m).expect("edge multiplicity fits in i64");
            out.set_self_int(a, s + m * m)?;
        }
    }
    for (i, (a, ma)) in nbrs.iter().enumerate() {
        for (b, mb) in &nbrs[i + 1..] {
            out.add_edge(a, b, ma * mb)?;
        }
    }
    Ok(out)
}

fn minus_one_curves(g: &DualGraph) -> Vec<String> {
    g.ids_where(|v| v.is_complete() && v.self_int == Some(-1))
}

/// Repeatedly contracts (-1)-curves; `choose` picks one index among the
/// current candidates (sorted by id). Returns the residual graph and the
/// contracted ids in order.
pub fn contract_with(
    g: &DualGraph,
    mut choose: impl FnMut(&[String]) -> usize,
) -> (DualGraph, Vec<String>) {
    let mut cur = g.clone();
    let mut seq = Vec::new();
    loop {
        let mut cands = minus_one_curves(&cur);
        if cands.is_empty() {
            return (cur, seq);
        }
        cands.sort();
        let pick = cands[choose(&cands).min(cands.len() - 1)].clone();
        cur = blow_down_once(&cur, &pick).expect("candidate is a complete (-1)-curve");
        seq.push(pick);
    }
}

/// Deterministic contraction, smallest id first.
pub fn contract(g: &DualGraph) -> (DualGraph, Vec<String>) {
    contract_with(g, |_| 0)
}

/// Du Val type of a connected configuration of complete (-2)-curves.
/// Transversal vertices are ignored.
pub fn recognize_duval(g: &DualGraph) -> Option<AdeType> {
    let ids = g.complete_ids();
    let n = ids.len();
    if n == 0 || g.components(&ids).len() != 1 {
        return None;
    }
    if ids
        .iter()
        .any(|id| g.vertex(id).and_then(|v| v.self_int) != Some(-2))
    {
        return None;
    }
    let complete = |id: &str| g.vertex(id).is_some_and(Vertex::is_complete);
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut edge_count = 0;
    for (a, b, m) in g.edges() {
        if !(complete(a) && complete(b)) {
            continue;
        }
        if m != 1 {
            return None;
        }
        edge_count += 1;
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if edge_count != n - 1 {
        return None;
    }
    let branch: Vec<&str> = adj
        .iter()
        .filter(|(_, nb)| nb.len() >= 3)
        .map(|(&id, _)| id)
        .collect();
    match branch.as_slice() {
        [] => Some(AdeType::a(n)),
        [centre] => {
            let nbrs = &adj[centre];
            if nbrs.len() != 3 {
                return None;
            }
            let mut arms: Vec<usize> = nbrs
                .iter()
                .map(|&start| {
                    let (mut prev, mut cur, mut len) = (*centre, start, 1);
                    loop {
                        let next: Vec<&str> =
                            adj[cur].iter().copied().filter(|&w| w != prev).collect();
                        match next.as_slice() {
                            [w] => {
                                prev = cur;
                                cur = w;
                                len += 1;
                            }
                            _ => return len,
                        }
                    }
                })
                .collect();
            arms.sort_unstable();
            match arms.as_slice() {
                [1, 1, k] => Some(AdeType::d(k + 3)),
                [1, 2, 2] => Some(AdeType::e(6)),
                [1, 2, 3] => Some(AdeType::e(7)),
                [1, 2, 4] => Some(AdeType::e(8)),
                _ => None,
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub definiteness: Definiteness,
    pub contracted: Vec<String>,
    #[serde(flatten)]
    pub outcome: ContractionOutcome,
}

pub fn classify(g: &DualGraph) -> Result<ContractionOutcome, ContractionError> {
    classify_detailed_with(g, |_| 0).map(|c| c.outcome)
}

pub fn classify_with(
    g: &DualGraph,
    choose: impl FnMut(&[String]) -> usize,
) -> Result<ContractionOutcome, ContractionError> {
    classify_detailed_with(g, choose).map(|c| c.outcome)
}

pub fn classify_detailed(g: &DualGraph) -> Result<Classification, ContractionError> {
    classify_detailed_with(g, |_| 0)
}

pub fn classify_detailed_with(
    g: &DualGraph,
    choose: impl FnMut(&[String]) -> usize,
) -> Result<Classification, ContractionError> {
    let complete = g.complete_ids();
    if complete.is_empty() {
        return Err(ContractionError::NoCompleteVertices);
    }
    let m = intersection_matrix(g, &complete)?;
    let def = definiteness(&m);
    let not = |reason: String| ContractionOutcome::NotContractible(reason);
    let (outcome, contracted) = match &def {
        Definiteness::NegativeDefinite => {
            let (residual, seq) = contract_with(g, choose);
            let rest = residual.complete_ids();
            let outcome = if rest.is_empty() {
                ContractionOutcome::SmoothPoint
            } else if let Some(t) = recognize_duval(&residual) {
                ContractionOutcome::DuValPoint(t)
            } else {
                ContractionOutcome::RationalPoint(residual)
            };
            (outcome, seq)
        }
        Definiteness::NegativeSemidefinite { corank: 1, kernel } => {
            let z: Vec<Rational> = kernel[0].iter().cloned().map(Rational::from).collect();
            if z.iter().any(|c| !c.is_positive()) {
                (
                    not("kernel vector is not strictly positive".into()),
                    Vec::new(),
                )
            } else {
                let (residual, seq) = contract_with(g, choose);
                let rest = residual.complete_ids();
                let single_zero = rest.len() == 1
                    && residual.vertex(&rest[0]).and_then(|v| v.self_int) == Some(0);
                if single_zero {
                    let fiber = Cycle::from_pairs(complete.iter().cloned().zip(z));
                    (ContractionOutcome::CurveFiber(fiber), seq)
                } else {
                    (
                        not(format!(
                            "blow-down ends with {} complete curves instead of a single 0-curve",
                            rest.len()
                        )),
                        seq,
                    )
                }
            }
        }
        Definiteness::NegativeSemidefinite { corank, .. } => (
            not(format!(
                "intersection form is negative semidefinite of corank {corank}"
            )),
            Vec::new(),
        ),
        Definiteness::Indefinite => (not("intersection form is indefinite".into()), Vec::new()),
    };
    Ok(Classification {
        definiteness: def,
        contracted,
        outcome,
    })
}

/// Classifies each connected component of the complete part separately,
/// keeping transversal vertices attached to each component.
pub fn classify_components(
    g: &DualGraph,
) -> Result<Vec<(Vec<String>, ContractionOutcome)>, ContractionError> {
    let complete = g.complete_ids();
    if complete.is_empty() {
        return Err(ContractionError::NoCompleteVertices);
    }
    let mut out = Vec::new();
    for comp in g.components(&complete) {
        let mut sub = g.clone();
        for v in g.vertices() {
            if v.is_complete() && !comp.contains(&v.id) {
                sub.remove_vertex(&v.id)?;
            }
        }
        out.push((comp, classify(&sub)?));
    }
    Ok(out)
}

/// True when every complete vertex has self-intersection at most -2, i.e.
/// the graph is a minimal resolution graph.
pub fn is_minimal(g: &DualGraph) -> bool {
    g.vertices()
        .iter()
        .filter(|v| v.kind != VertexKind::Transversal)
        .all(|v| v.self_int.is_some_and(|s| s <= -2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::graph::{cycle_dot, cycle_square};
    use crate::linalg::int;

    fn g(text: &str) -> DualGraph {
        parse(text).unwrap().graph
    }

    #[test]
    fn isolated_minus_one() {
        let h = g("graph g\nv a -1 cen");
        assert!(blow_down_once(&h, "a").unwrap().is_empty());
        assert_eq!(classify(&h).unwrap(), ContractionOutcome::SmoothPoint);
    }

    #[test]
    fn chain_end() {
        let h = g("graph g\nv a -1\nv b\ne a b");
        let r = blow_down_once(&h, "a").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.vertex("b").unwrap().self_int, Some(-1));
    }

    #[test]
    fn blow_down_errors() {
        let h = g("graph g\nv a\nv t ~\ne a t");
        assert_eq!(
            blow_down_once(&h, "a"),
            Err(ContractionError::NotMinusOne("a".into()))
        );
        assert_eq!(
            blow_down_once(&h, "t"),
            Err(ContractionError::NotComplete("t".into()))
        );
        assert_eq!(
            blow_down_once(&h, "z"),
            Err(ContractionError::UnknownVertex("z".into()))
        );
        let empty = DualGraph::new("e");
        assert_eq!(classify(&empty), Err(ContractionError::NoCompleteVertices));
    }

    #[test]
    fn blow_down_creates_edges_and_keeps_transversals() {
        // a (-1)-curve meeting two curves and a germ
        let h = g("graph g\nv c -1\nv a -3\nv b -4\nv t ~\ne c a\ne c b m=2\ne c t");
        let r = blow_down_once(&h, "c").unwrap();
        assert_eq!(r.vertex("a").unwrap().self_int, Some(-2));
        assert_eq!(r.vertex("b").unwrap().self_int, Some(0));
        assert_eq!(r.edge_multiplicity("a", "b"), 2);
        assert_eq!(r.edge_multiplicity("a", "t"), 1);
        assert_eq!(r.edge_multiplicity("b", "t"), 2);
        assert_eq!(r.vertex("t").unwrap().self_int, None);
    }

    #[test]
    fn duval_shapes() {
        assert_eq!(recognize_duval(&g("graph g\nv a")), Some(AdeType::a(1)));
        assert_eq!(
            recognize_duval(&g("graph g\nv c\nv a\nv b\nv d\ne c a\ne c b\ne c d")),
            Some(AdeType::d(4))
        );
        let e6 = "graph g\nv a\nv b\nv c\nv d\nv e\nv t\ne a b\ne b c\ne c d\ne d e\ne c t";
        assert_eq!(recognize_duval(&g(e6)), Some(AdeType::e(6)));
        let e8 = "graph g\nv a\nv b\nv c\nv d\nv e\nv f\nv h\nv t\ne a b\ne b c\ne c d\ne d e\ne e f\ne f h\ne c t";
        assert_eq!(recognize_duval(&g(e8)), Some(AdeType::e(8)));
        let d6 = "graph g\nv a\nv b\nv c\nv d\nv e\nv f\ne a b\ne b c\ne c d\ne d e\ne d f";
        assert_eq!(recognize_duval(&g(d6)), Some(AdeType::d(6)));
        assert_eq!(recognize_duval(&g("graph g\nv a\nv b -3\ne a b")), None);
        // affine A2: a cycle of three (-2)-curves
        assert_eq!(
            recognize_duval(&g("graph g\nv a\nv b\nv c\ne a b\ne b c\ne a c")),
            None
        );
        assert_eq!(recognize_duval(&g("graph g\nv a\nv b\ne a b m=2")), None);
        // transversal germs do not matter
        assert_eq!(
            recognize_duval(&g("graph g\nv a\nv t ~\ne a t")),
            Some(AdeType::a(1))
        );
    }

    #[test]
    fn ade_parse_display() {
        for s in ["A1", "A2", "D4", "D7", "E6", "E8"] {
            assert_eq!(s.parse::<AdeType>().unwrap().to_string(), s);
        }
        for s in ["A0", "D3", "E5", "E9", "X2", ""] {
            assert!(s.parse::<AdeType>().is_err());
        }
    }

    #[test]
    fn ruled_fiber() {
        // (-1)-(-2)-(-1) chain is a degenerate ruling fiber with kernel (1,1,1)
        let h = g("graph g\nv a -1\nv b\nv c -1\ne a b\ne b c");
        match classify(&h).unwrap() {
            ContractionOutcome::CurveFiber(z) => {
                assert_eq!(z.get("b"), int(1));
                assert_eq!(cycle_square(&h, &z).unwrap(), int(0));
                for id in ["a", "b", "c"] {
                    assert_eq!(cycle_dot(&h, &z, id).unwrap(), int(0));
                }
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn failure_reasons() {
        let indefinite = g("graph g\nv a -1\nv b -1\ne a b m=2");
        assert_eq!(
            classify(&indefinite).unwrap(),
            ContractionOutcome::NotContractible("intersection form is indefinite".into())
        );
        // affine D4 is corank 1 with positive kernel but has no (-1)-curve
        let d4 = g("graph g\nv c\nv a\nv b\nv d\nv e\ne c a\ne c b\ne c d\ne c e");
        assert!(matches!(
            classify(&d4).unwrap(),
            ContractionOutcome::NotContractible(r) if r.contains("single 0-curve")
        ));
        let two = g("graph g\nv a -1\nv b\ne a b m=2");
        assert!(matches!(
            classify(&two).unwrap(),
            ContractionOutcome::NotContractible(_)
        ));
    }

    #[test]
    fn rational_point_residual() {
        let h = g("graph g\nv a -3");
        match classify(&h).unwrap() {
            ContractionOutcome::RationalPoint(r) => assert_eq!(r.len(), 1),
            other => panic!("{other}"),
        }
        let two = g("graph g\nv a\nv b");
        let parts = classify_components(&two).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(parts
            .iter()
            .all(|(_, o)| *o == ContractionOutcome::DuValPoint(AdeType::a(1))));
    }

    #[test]
    fn minimality() {
        assert!(is_minimal(&g("graph g\nv a -3\nv t ~\ne a t")));
        assert!(!is_minimal(&g("graph g\nv a -1")));
    }
}
