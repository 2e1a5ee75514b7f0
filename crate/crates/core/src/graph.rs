//! Weighted graph data model, JSON format and structural validation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};
use crate::scalar::Scalar;

/// Undirected edge between two vertex indices. One record per unordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub w: T,
}

/// A real-valued function on the vertex set, aligned with `Graph::vertex_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexFunction<T>(Vec<T>);

impl<T: Scalar> VertexFunction<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self(vec![c; n])
    }

    pub fn from_f64(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| T::of(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.iter().map(|&x| f(x)).collect())
    }

    /// Pointwise `self + a * other`.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&x, &y)| x + a * y).collect())
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|x| a * x)
    }

    /// Largest absolute value; zero for an empty function.
    pub fn sup_norm(&self) -> T {
        self.0.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> VertexFunction<U> {
        VertexFunction(self.0.iter().map(|&x| U::of(x.as_f64())).collect())
    }
}

impl<T> Index<usize> for VertexFunction<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    DuplicateVertex(String),
    NonpositiveMeasure(String),
    NonpositiveH(String),
    EndpointOutOfRange { i: usize, j: usize },
    SelfLoop(String),
    NonpositiveWeight(String, String),
    DuplicateEdge(String, String),
    LengthMismatch,
    Disconnected,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty vertex set"),
            Violation::DuplicateVertex(id) => write!(f, "duplicate vertex id `{id}`"),
            Violation::NonpositiveMeasure(id) => write!(f, "nonpositive measure at vertex `{id}`"),
            Violation::NonpositiveH(id) => write!(f, "nonpositive h at vertex `{id}`"),
            Violation::EndpointOutOfRange { i, j } => {
                write!(f, "edge endpoint out of range ({i}, {j})")
            }
            Violation::SelfLoop(id) => write!(f, "self-loop at vertex `{id}`"),
            Violation::NonpositiveWeight(a, b) => write!(f, "nonpositive weight on edge `{a}`-`{b}`"),
            Violation::DuplicateEdge(a, b) => write!(f, "duplicate edge `{a}`-`{b}`"),
            Violation::LengthMismatch => write!(f, "per-vertex data length mismatch"),
            Violation::Disconnected => write!(f, "disconnected"),
        }
    }
}

/// Finite weighted graph with vertex measure `mu` and prescribed positive `h`.
///
/// Vertex order is the canonical index order for every vector in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    vertex_ids: Vec<String>,
    mu: Vec<T>,
    h: Vec<T>,
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Graph<T> {
    /// Assembles a graph without checking invariants. Use [`validate`] (or
    /// [`Graph::new`]) before handing it to the numerical routines.
    pub fn from_parts(vertex_ids: Vec<String>, mu: Vec<T>, h: Vec<T>, edges: Vec<Edge<T>>) -> Self {
        let n = vertex_ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.i < n && e.j < n && e.i != e.j {
                adjacency[e.i].push((e.j, e.w));
                adjacency[e.j].push((e.i, e.w));
            }
        }
        Self { vertex_ids, mu, h, edges, adjacency }
    }

    /// Assembles and validates.
    pub fn new(vertex_ids: Vec<String>, mu: Vec<T>, h: Vec<T>, edges: Vec<Edge<T>>) -> Result<Self> {
        let g = Self::from_parts(vertex_ids, mu, h, edges);
        let v = validate(&g);
        if v.is_empty() {
            Ok(g)
        } else {
            Err(KwError::InvalidGraph(v))
        }
    }

    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Neighbours of vertex `x` with edge weights.
    pub fn neighbors(&self, x: usize) -> &[(usize, T)] {
        &self.adjacency[x]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertex_ids.iter().position(|v| v == id)
    }

    /// Vol(V) = sum of the vertex measure.
    pub fn volume(&self) -> T {
        self.mu.iter().copied().sum()
    }

    pub fn mu_min(&self) -> T {
        self.mu.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn h_min(&self) -> T {
        self.h.iter().copied().fold(T::infinity(), T::min)
    }

    /// Same graph with a different prescribed function.
    pub fn with_h(&self, h: Vec<T>) -> Result<Self> {
        if h.len() != self.len() {
            return Err(KwError::LengthMismatch { expected: self.len(), found: h.len() });
        }
        Self::new(self.vertex_ids.clone(), self.mu.clone(), h, self.edges.clone())
    }

    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        let c = |v: &[T]| v.iter().map(|&x| U::of(x.as_f64())).collect::<Vec<U>>();
        Graph::from_parts(
            self.vertex_ids.clone(),
            c(&self.mu),
            c(&self.h),
            self.edges.iter().map(|e| Edge { i: e.i, j: e.j, w: U::of(e.w.as_f64()) }).collect(),
        )
    }

    /// Serializes to the graph JSON format.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph document serializes")
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self
                .vertex_ids
                .iter()
                .zip(self.mu.iter().zip(&self.h))
                .map(|(id, (&mu, &h))| VertexRecord { id: id.clone(), mu: mu.as_f64(), h: h.as_f64() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: self.vertex_ids[e.i].clone(),
                    v: self.vertex_ids[e.j].clone(),
                    w: e.w.as_f64(),
                })
                .collect(),
        }
    }
}

/// On-disk graph document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    pub mu: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub w: f64,
}

impl GraphDocument {
    /// Maps the document onto a graph, resolving vertex ids, without validation.
    pub fn into_graph<T: Scalar>(self) -> Result<Graph<T>> {
        let mut index = HashMap::with_capacity(self.vertices.len());
        for (k, v) in self.vertices.iter().enumerate() {
            index.entry(v.id.clone()).or_insert(k);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let i = *index.get(&e.u).ok_or_else(|| KwError::UnknownVertex(e.u.clone()))?;
            let j = *index.get(&e.v).ok_or_else(|| KwError::UnknownVertex(e.v.clone()))?;
            edges.push(Edge { i, j, w: T::of(e.w) });
        }
        let ids = self.vertices.iter().map(|v| v.id.clone()).collect();
        let mu = self.vertices.iter().map(|v| T::of(v.mu)).collect();
        let h = self.vertices.iter().map(|v| T::of(v.h)).collect();
        Ok(Graph::from_parts(ids, mu, h, edges))
    }
}

/// Parses a graph JSON document without running [`validate`].
pub fn parse_graph_unchecked<T: Scalar>(text: &str) -> Result<Graph<T>> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| KwError::Malformed(e.to_string()))?;
    doc.into_graph()
}

/// Parses and validates a graph JSON document.
pub fn parse_graph<T: Scalar>(text: &str) -> Result<Graph<T>> {
    let g = parse_graph_unchecked(text)?;
    let v = validate(&g);
    if v.is_empty() {
        Ok(g)
    } else {
        Err(KwError::InvalidGraph(v))
    }
}

/// Lists every violated structural invariant; empty means valid.
pub fn validate<T: Scalar>(g: &Graph<T>) -> Vec<Violation> {
    let n = g.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::Empty);
        return out;
    }
    if g.mu.len() != n || g.h.len() != n {
        out.push(Violation::LengthMismatch);
        return out;
    }
    let mut seen = HashSet::new();
    for id in &g.vertex_ids {
        if !seen.insert(id.as_str()) {
            out.push(Violation::DuplicateVertex(id.clone()));
        }
    }
    for (id, (&mu, &h)) in g.vertex_ids.iter().zip(g.mu.iter().zip(&g.h)) {
        // `!(x > 0)` also catches NaN.
        if !(mu > T::zero()) || !mu.is_finite() {
            out.push(Violation::NonpositiveMeasure(id.clone()));
        }
        if !(h > T::zero()) || !h.is_finite() {
            out.push(Violation::NonpositiveH(id.clone()));
        }
    }
    let mut pairs = HashSet::new();
    for e in &g.edges {
        if e.i >= n || e.j >= n {
            out.push(Violation::EndpointOutOfRange { i: e.i, j: e.j });
            continue;
        }
        let (a, b) = (&g.vertex_ids[e.i], &g.vertex_ids[e.j]);
        if e.i == e.j {
            out.push(Violation::SelfLoop(a.clone()));
            continue;
        }
        if !(e.w > T::zero()) || !e.w.is_finite() {
            out.push(Violation::NonpositiveWeight(a.clone(), b.clone()));
        }
        if !pairs.insert((e.i.min(e.j), e.i.max(e.j))) {
            out.push(Violation::DuplicateEdge(a.clone(), b.clone()));
        }
    }
    if !is_connected(g) {
        out.push(Violation::Disconnected);
    }
    out
}

fn is_connected<T: Scalar>(g: &Graph<T>) -> bool {
    let n = g.len();
    let mut visited = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        for &(y, _) in g.neighbors(x) {
            if !visited[y] {
                visited[y] = true;
                count += 1;
                queue.push_back(y);
            }
        }
    }
    count == n
}
