//! Weighted dual graphs of curve configurations on a smooth surface.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{int, Rational, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    /// A complete exceptional curve of the resolution.
    Exceptional,
    /// The complete central curve (usually a (-1)-curve).
    Central,
    /// A non-complete curve germ meeting the configuration; no self-intersection.
    Transversal,
}

impl VertexKind {
    pub fn is_complete(self) -> bool {
        !matches!(self, VertexKind::Transversal)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            VertexKind::Exceptional => "exc",
            VertexKind::Central => "cen",
            VertexKind::Transversal => "tra",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub id: String,
    pub self_int: Option<i64>,
    pub kind: VertexKind,
    pub label: Option<String>,
}

impl Vertex {
    pub fn is_complete(&self) -> bool {
        self.kind.is_complete()
    }

    /// `K · E` for a smooth rational curve `E`, by adjunction.
    pub fn canonical_degree(&self) -> Option<i64> {
        self.self_int.map(|s| -2 - s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate vertex id `{0}`")]
    DuplicateId(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("transversal vertex `{0}` cannot carry a self-intersection number")]
    SelfIntOnTransversal(String),
    #[error("complete vertex `{0}` needs a self-intersection number")]
    MissingSelfInt(String),
    #[error("self-loop at `{0}`")]
    SelfLoop(String),
    #[error("edge multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("transversal vertex `{0}` cannot enter an intersection matrix")]
    TransversalInSubset(String),
    #[error("vertex `{0}` is not complete")]
    NotComplete(String),
}

fn edge_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Vertices keep their insertion order; edges are stored with multiplicity
/// under a sorted id pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualGraph {
    name: String,
    vertices: Vec<Vertex>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(String, String), u64>,
}

impl DualGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            vertices: Vec::new(),
            index: HashMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn add_vertex(
        &mut self,
        id: impl Into<String>,
        self_int: Option<i64>,
        kind: VertexKind,
        label: Option<String>,
    ) -> Result<(), GraphError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateId(id));
        }
        match (kind.is_complete(), self_int) {
            (false, Some(_)) => return Err(GraphError::SelfIntOnTransversal(id)),
            (true, None) => return Err(GraphError::MissingSelfInt(id)),
            _ => {}
        }
        self.index.insert(id.clone(), self.vertices.len());
        self.vertices.push(Vertex {
            id,
            self_int,
            kind,
            label,
        });
        Ok(())
    }

    /// Adds `mult` to the multiplicity of the edge `a -- b`.
    pub fn add_edge(&mut self, a: &str, b: &str, mult: u64) -> Result<(), GraphError> {
        for id in [a, b] {
            if !self.index.contains_key(id) {
                return Err(GraphError::UnknownVertex(id.to_string()));
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a.to_string()));
        }
        if mult == 0 {
            return Err(GraphError::ZeroMultiplicity);
        }
        *self.edges.entry(edge_key(a, b)).or_insert(0) += mult;
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.index.get(id).map(|&i| &self.vertices[i])
    }

    pub fn vertex_or_err(&self, id: &str) -> Result<&Vertex, GraphError> {
        self.vertex(id)
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
    }

    pub fn set_self_int(&mut self, id: &str, value: i64) -> Result<(), GraphError> {
        let &i = self
            .index
            .get(id)
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))?;
        if !self.vertices[i].is_complete() {
            return Err(GraphError::SelfIntOnTransversal(id.to_string()));
        }
        self.vertices[i].self_int = Some(value);
        Ok(())
    }

    /// Edges in lexicographic order of their sorted endpoint ids.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges
            .iter()
            .map(|((a, b), &m)| (a.as_str(), b.as_str(), m))
    }

    pub fn edge_multiplicity(&self, a: &str, b: &str) -> u64 {
        self.edges.get(&edge_key(a, b)).copied().unwrap_or(0)
    }

    /// Neighbours of `id` with total edge multiplicity, in vertex order.
    pub fn neighbors(&self, id: &str) -> Vec<(&str, u64)> {
        self.vertices
            .iter()
            .filter_map(|v| {
                let m = if v.id == id {
                    0
                } else {
                    self.edge_multiplicity(id, &v.id)
                };
                (m > 0).then_some((v.id.as_str(), m))
            })
            .collect()
    }

    pub fn complete_ids(&self) -> Vec<String> {
        self.ids_where(|v| v.is_complete())
    }

    pub fn exceptional_ids(&self) -> Vec<String> {
        self.ids_where(|v| v.kind == VertexKind::Exceptional)
    }

    pub fn ids_where(&self, pred: impl Fn(&Vertex) -> bool) -> Vec<String> {
        self.vertices
            .iter()
            .filter(|v| pred(v))
            .map(|v| v.id.clone())
            .collect()
    }

    /// Removes a vertex together with its edges.
    pub fn remove_vertex(&mut self, id: &str) -> Result<Vertex, GraphError> {
        let i = self
            .index
            .remove(id)
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))?;
        let v = self.vertices.remove(i);
        for slot in self.index.values_mut() {
            if *slot > i {
                *slot -= 1;
            }
        }
        self.edges.retain(|(a, b), _| a != id && b != id);
        Ok(v)
    }

    /// Connected components of the subgraph induced on `ids`, each listed in
    /// vertex order; components are ordered by their first vertex.
    pub fn components(&self, ids: &[String]) -> Vec<Vec<String>> {
        let members: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        let ordered: Vec<&str> = self
            .vertices
            .iter()
            .map(|v| v.id.as_str())
            .filter(|id| members.contains(id))
            .collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &ordered {
            if seen.contains(start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                if !comp.insert(v) {
                    continue;
                }
                for (w, _) in self.neighbors(v) {
                    if members.contains(w) && !comp.contains(w) {
                        stack.push(w);
                    }
                }
            }
            seen.extend(comp.iter().copied());
            out.push(
                ordered
                    .iter()
                    .filter(|id| comp.contains(*id))
                    .map(|id| id.to_string())
                    .collect(),
            );
        }
        out
    }

    /// Renames vertices; ids missing from `map` are kept.
    pub fn relabeled(&self, map: &BTreeMap<String, String>) -> Result<DualGraph, GraphError> {
        let rename = |id: &str| map.get(id).cloned().unwrap_or_else(|| id.to_string());
        let mut g = DualGraph::new(self.name.clone());
        for v in &self.vertices {
            g.add_vertex(rename(&v.id), v.self_int, v.kind, v.label.clone())?;
        }
        for (a, b, m) in self.edges() {
            g.add_edge(&rename(a), &rename(b), m)?;
        }
        Ok(g)
    }

    /// Same graph with vertices inserted in the order given by `perm`
    /// (a permutation of `0..len`).
    pub fn reordered(&self, perm: &[usize]) -> DualGraph {
        let mut g = DualGraph::new(self.name.clone());
        for &i in perm {
            let v = &self.vertices[i];
            g.add_vertex(v.id.clone(), v.self_int, v.kind, v.label.clone())
                .expect("permutation of a valid graph");
        }
        for (a, b, m) in self.edges() {
            g.add_edge(a, b, m).expect("edges of a valid graph");
        }
        g
    }

    /// Structural equality ignoring vertex order and the graph name.
    pub fn same_structure(&self, other: &DualGraph) -> bool {
        let key = |g: &DualGraph| {
            g.vertices
                .iter()
                .map(|v| (v.id.clone(), (v.self_int, v.kind, v.label.clone())))
                .collect::<BTreeMap<_, _>>()
        };
        key(self) == key(other) && self.edges == other.edges
    }
}

/// Formal rational combination of vertices. Absent ids have coefficient 0,
/// and zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cycle {
    coeffs: BTreeMap<String, Rational>,
}

impl Cycle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Rational)>,
        S: Into<String>,
    {
        let mut c = Cycle::new();
        for (id, x) in pairs {
            c.add(id, &x);
        }
        c
    }

    pub fn get(&self, id: &str) -> Rational {
        self.coeffs.get(id).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, id: impl Into<String>, value: Rational) {
        let id = id.into();
        if value.is_zero() {
            self.coeffs.remove(&id);
        } else {
            self.coeffs.insert(id, value);
        }
    }

    pub fn add(&mut self, id: impl Into<String>, value: &Rational) {
        let id = id.into();
        let sum = self.get(&id) + value;
        self.set(id, sum);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.coeffs.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(String::as_str)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, factor: &Rational) -> Cycle {
        Cycle::from_pairs(self.iter().map(|(k, v)| (k, v * factor)))
    }

    pub fn plus(&self, other: &Cycle) -> Cycle {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.add(k, v);
        }
        out
    }

    /// Restriction to the given ids.
    pub fn restricted(&self, ids: &[String]) -> Cycle {
        Cycle::from_pairs(ids.iter().map(|id| (id.clone(), self.get(id))))
    }

    pub fn renamed(&self, map: &BTreeMap<String, String>) -> Cycle {
        Cycle::from_pairs(self.iter().map(|(k, v)| {
            (
                map.get(k).cloned().unwrap_or_else(|| k.to_string()),
                v.clone(),
            )
        }))
    }
}

/// Serialized as a map from vertex id to the coefficient written `p/q`.
impl Serialize for Cycle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.coeffs.iter().map(|(k, v)| (k, v.to_string())))
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, v)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Intersection form on `subset`, rows in the order of `subset`.
pub fn intersection_matrix(g: &DualGraph, subset: &[String]) -> Result<SymMatrix, GraphError> {
    let mut m = SymMatrix::zeros(subset.len());
    for (i, a) in subset.iter().enumerate() {
        let v = g.vertex_or_err(a)?;
        let Some(s) = v.self_int else {
            return Err(GraphError::TransversalInSubset(a.clone()));
        };
        m.set(i, i, int(s));
        for (j, b) in subset.iter().enumerate().skip(i + 1) {
            let mult = g.edge_multiplicity(a, b);
            if mult > 0 {
                m.set(i, j, Rational::from_integer(mult.into()));
            }
        }
    }
    Ok(m)
}

/// `Z · E_vertex` for a complete vertex.
pub fn cycle_dot(g: &DualGraph, z: &Cycle, vertex: &str) -> Result<Rational, GraphError> {
    let v = g.vertex_or_err(vertex)?;
    let Some(s) = v.self_int else {
        return Err(GraphError::NotComplete(vertex.to_string()));
    };
    let mut total = z.get(vertex) * int(s);
    for (w, mult) in g.neighbors(vertex) {
        let c = z.get(w);
        if !c.is_zero() {
            total += c * Rational::from_integer(mult.into());
        }
    }
    Ok(total)
}

/// `Z · Z`, taken over the complete part of `Z`.
pub fn cycle_square(g: &DualGraph, z: &Cycle) -> Result<Rational, GraphError> {
    let mut complete = Cycle::new();
    for (id, c) in z.iter() {
        if g.vertex_or_err(id)?.is_complete() {
            complete.set(id, c.clone());
        }
    }
    let mut total = Rational::zero();
    for (id, c) in complete.iter() {
        total += c * cycle_dot(g, &complete, id)?;
    }
    Ok(total)
}

/// `Z · K` with `K · E = -2 - E²` on every complete vertex.
pub fn canonical_pairing(g: &DualGraph, z: &Cycle) -> Result<Rational, GraphError> {
    let mut total = Rational::zero();
    for (id, c) in z.iter() {
        if let Some(k) = g.vertex_or_err(id)?.canonical_degree() {
            total += c * int(k);
        }
    }
    Ok(total)
}

/// `p_a(Z) = 1 + (Z² + Z·K) / 2`.
pub fn arithmetic_genus(g: &DualGraph, z: &Cycle) -> Result<Rational, GraphError> {
    Ok(int(1) + (cycle_square(g, z)? + canonical_pairing(g, z)?) / int(2))
}
