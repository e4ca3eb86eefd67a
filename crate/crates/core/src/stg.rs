//! Symmetry type graphs.
//!
//! Flags at the base vertex correspond to elements of `Go`, automorphisms act
//! on the right, so flag-orbits are the cosets `g K'` and `i`-adjacency sends
//! `g K'` to `r_i g K'`. The map `g K' -> L g^-1` identifies cosets with the
//! orbit of the lattice `L`, and under it `i`-adjacency becomes `M -> M r_i`.
//! The graph is therefore built as the Schreier graph of the lattice orbit.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::toroid::{lattice_orbit, LatticeOrbit, Tessellation, Toroid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StgError {
    #[error("label {label} outside 0..={n}")]
    LabelOutOfRange { label: usize, n: usize },
}

/// Orbit graphs above this size get a key rooted at the base vertex only.
pub const FULL_KEY_LIMIT: usize = 512;

/// A pre-graph on flag-orbits: `adj[v][i]` is the `i`-neighbour of `v`,
/// with `adj[v][i] == v` encoding a semi-edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryTypeGraph {
    n: usize,
    adj: Vec<Vec<u32>>,
}

impl SymmetryTypeGraph {
    /// Builds a graph from an adjacency table; every label must act as an
    /// involution.
    pub fn from_adjacency(n: usize, adj: Vec<Vec<u32>>) -> Self {
        for (v, row) in adj.iter().enumerate() {
            assert_eq!(row.len(), n + 1, "one neighbour per label");
            for (i, &u) in row.iter().enumerate() {
                assert_eq!(adj[u as usize][i] as usize, v, "label {i} is not an involution");
            }
        }
        Self { n, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbour(&self, v: usize, i: usize) -> usize {
        self.adj[v][i] as usize
    }

    /// Semi-edge labels at `v`.
    pub fn semi_edges(&self, v: usize) -> BTreeSet<usize> {
        (0..=self.n).filter(|&i| self.neighbour(v, i) == v).collect()
    }

    /// Edges `(u, v, label)` with `u <= v`, semi-edges as `u == v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.adj.len() {
            for i in 0..=self.n {
                let u = self.neighbour(v, i);
                if v <= u {
                    out.push((v, u, i));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Number of proper (non-semi) edges at `v`.
    pub fn proper_degree(&self, v: usize) -> usize {
        (0..=self.n).filter(|&i| self.neighbour(v, i) != v).count()
    }

    pub fn is_connected(&self) -> bool {
        self.connected_without(None)
    }

    fn connected_without(&self, skip: Option<usize>) -> bool {
        let mut seen = vec![false; self.adj.len()];
        seen[0] = true;
        let mut stack = vec![0usize];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for i in 0..=self.n {
                if Some(i) == skip {
                    continue;
                }
                let u = self.neighbour(v, i);
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.adj.len()
    }

    /// Connectivity after deleting every `i`-labelled edge.
    pub fn i_face_transitive(&self, i: usize) -> Result<bool, StgError> {
        if i > self.n {
            return Err(StgError::LabelOutOfRange { label: i, n: self.n });
        }
        Ok(self.connected_without(Some(i)))
    }

    /// Relabels `i -> n - i`.
    pub fn dual(&self) -> Self {
        let adj = self
            .adj
            .iter()
            .map(|row| (0..=self.n).map(|i| row[self.n - i]).collect())
            .collect();
        Self { n: self.n, adj }
    }

    fn serialize_from(&self, root: usize) -> Vec<u32> {
        let m = self.adj.len();
        let mut order = vec![u32::MAX; m];
        order[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut next = 1u32;
        let mut out = Vec::with_capacity(m * (self.n + 1));
        while let Some(v) = queue.pop_front() {
            for i in 0..=self.n {
                let u = self.neighbour(v, i);
                if order[u] == u32::MAX {
                    order[u] = next;
                    next += 1;
                    queue.push_back(u);
                }
                out.push(order[u]);
            }
        }
        out
    }

    /// Deterministic serialization, equal for isomorphic labelled graphs.
    ///
    /// Vertices are renamed in breadth-first order (labels explored in
    /// increasing order); the key is the smallest serialization over all
    /// starting vertices. Graphs larger than [`FULL_KEY_LIMIT`] are keyed
    /// from vertex 0 only, which is marked by an `r` prefix.
    pub fn canonical_key(&self) -> String {
        let m = self.adj.len();
        let (prefix, best) = if m <= FULL_KEY_LIMIT {
            ("", (0..m).map(|r| self.serialize_from(r)).min().expect("nonempty"))
        } else {
            ("r", self.serialize_from(0))
        };
        let mut s = format!("{prefix}n{}v{m}:", self.n);
        for (k, chunk) in best.chunks(self.n + 1).enumerate() {
            if k > 0 {
                s.push('|');
            }
            let parts: Vec<String> = chunk.iter().map(u32::to_string).collect();
            s.push_str(&parts.join("."));
        }
        s
    }

    /// DOT rendering; semi-edges go to invisible stub nodes.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph stg {\n");
        for v in 0..self.adj.len() {
            writeln!(s, "  v{v} [label=\"{v}\"];").unwrap();
        }
        for (u, v, i) in self.edges() {
            if u == v {
                writeln!(s, "  s{u}_{i} [shape=point, style=invis];").unwrap();
                writeln!(s, "  v{u} -- s{u}_{i} [label={i}];").unwrap();
            } else {
                writeln!(s, "  v{u} -- v{v} [label={i}];").unwrap();
            }
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> StgJson {
        StgJson {
            n: self.n,
            vertices: self.adj.len(),
            edges: self.edges().into_iter().map(|(u, v, i)| [u, v, i]).collect(),
        }
    }

    pub fn from_json(j: &StgJson) -> Self {
        let mut adj = vec![vec![u32::MAX; j.n + 1]; j.vertices];
        for &[u, v, i] in &j.edges {
            adj[u][i] = v as u32;
            adj[v][i] = u as u32;
        }
        Self::from_adjacency(j.n, adj)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StgJson {
    pub n: usize,
    pub vertices: usize,
    pub edges: Vec<[usize; 3]>,
}

/// Graph on the orbit of a lattice, in the labels of the tessellation view.
pub fn stg_from_orbit(t: &Tessellation, orbit: &LatticeOrbit, root: usize) -> SymmetryTypeGraph {
    // Reorder so that `root` becomes vertex 0.
    let m = orbit.len();
    let mut perm: Vec<u32> = (0..m as u32).collect();
    perm.swap(0, root);
    let mut inv = vec![0u32; m];
    for (new, &old) in perm.iter().enumerate() {
        inv[old as usize] = new as u32;
    }
    let adj: Vec<Vec<u32>> = perm
        .iter()
        .map(|&old| orbit.adj[old as usize].iter().map(|&u| inv[u as usize]).collect())
        .collect();
    let g = SymmetryTypeGraph { n: t.n(), adj };
    if t.is_dual() {
        g.dual()
    } else {
        g
    }
}

/// The symmetry type graph of a toroid; vertex 0 is the base orbit `K'`.
pub fn build_stg(t: &Toroid) -> SymmetryTypeGraph {
    let tess = t.tessellation();
    let orbit = lattice_orbit(tess, t.lattice(), usize::MAX).expect("unbounded");
    debug_assert_eq!(orbit.len(), t.flag_orbit_count());
    stg_from_orbit(tess, &orbit, 0)
}
