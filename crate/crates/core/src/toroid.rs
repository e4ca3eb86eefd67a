//! Toroids as pairs (tessellation, lattice).
//!
//! The flag-orbit count of the toroid is the index of the lattice's
//! stabilizer `K'` in the point group, which equals the size of the orbit of
//! the lattice under the point group.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::group::{self, GroupElement, PointGroup, Subgroup};
use crate::lattice::{named, Lattice, LatticeError, NamedLattice};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToroidError {
    #[error("lattice is not a full-rank sublattice of the vertex lattice")]
    NotSublattice,
    #[error("toroid has {0} flag-orbits, not 2")]
    NotTwoOrbit(usize),
    #[error("toroids live on different tessellations")]
    TessellationMismatch,
    #[error("unsupported tessellation `{0}`")]
    UnsupportedTessellation(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Cubic,
    T3343,
}

/// A regular tessellation together with its point group and the linear
/// parts `r_0, ..., r_n` of its distinguished generators.
pub struct Tessellation {
    family: Family,
    n: usize,
    dual: bool,
    vertex_lattice: Lattice,
    point_group: Arc<PointGroup>,
    reflections: Vec<GroupElement>,
}

impl fmt::Debug for Tessellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tessellation({}, n={})", self.name(), self.n)
    }
}

impl Tessellation {
    /// `{4,3^(n-2),4}`.
    pub fn cubic(n: usize) -> Result<Arc<Self>, ToroidError> {
        if !(2..=6).contains(&n) {
            return Err(ToroidError::UnsupportedTessellation(format!("cubic n={n}")));
        }
        let mut reflections = vec![group::r0_linear(n)];
        reflections.extend(group::cubic_generators(n));
        Ok(Arc::new(Self {
            family: Family::Cubic,
            n,
            dual: false,
            vertex_lattice: Lattice::cubic(n),
            point_group: Arc::new(group::hyperoctahedral(n)),
            reflections,
        }))
    }

    /// `{3,3,4,3}`, or its dual `{3,4,3,3}` when `dual` is set.
    pub fn t3343(dual: bool) -> Arc<Self> {
        let mut reflections = vec![group::r0_linear(4)];
        reflections.extend(group::t3343_generators());
        Arc::new(Self {
            family: Family::T3343,
            n: 4,
            dual,
            vertex_lattice: named(NamedLattice::Vertex3343, 4, 1).expect("n = 4"),
            point_group: Arc::new(group::group_3343()),
            reflections,
        })
    }

    /// Parses `cubic`, `3343` or `3433`; `n` is only used for `cubic`.
    pub fn parse(spec: &str, n: usize) -> Result<Arc<Self>, ToroidError> {
        match spec {
            "cubic" => Self::cubic(n),
            "3343" => Ok(Self::t3343(false)),
            "3433" => Ok(Self::t3343(true)),
            other => Err(ToroidError::UnsupportedTessellation(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.family, self.dual) {
            (Family::Cubic, _) => "cubic",
            (Family::T3343, false) => "3343",
            (Family::T3343, true) => "3433",
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_dual(&self) -> bool {
        self.dual
    }

    pub fn vertex_lattice(&self) -> &Lattice {
        &self.vertex_lattice
    }

    pub fn point_group(&self) -> &Arc<PointGroup> {
        &self.point_group
    }

    /// `r_0_linear, R_1, ..., R_n` of the primal tessellation.
    pub fn reflections(&self) -> &[GroupElement] {
        &self.reflections
    }

    /// Label of primal label `i` in this view.
    pub fn view_label(&self, i: usize) -> usize {
        if self.dual {
            self.n - i
        } else {
            i
        }
    }

    /// Index of `l` inside the vertex lattice.
    pub fn relative_index(&self, l: &Lattice) -> i64 {
        l.index() / self.vertex_lattice.index()
    }
}

/// A lattice together with its derived stabilizer and flag-orbit count.
#[derive(Clone)]
pub struct Toroid {
    tessellation: Arc<Tessellation>,
    lattice: Lattice,
    stabilizer: Subgroup,
}

impl fmt::Debug for Toroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Toroid")
            .field("tessellation", &self.tessellation.name())
            .field("lattice", &self.lattice)
            .field("orbits", &self.flag_orbit_count())
            .finish()
    }
}

impl Toroid {
    pub fn new(tessellation: &Arc<Tessellation>, lattice: Lattice) -> Result<Self, ToroidError> {
        let stabilizer = stabilizer(tessellation, &lattice)?;
        Ok(Self {
            tessellation: Arc::clone(tessellation),
            lattice,
            stabilizer,
        })
    }

    pub fn tessellation(&self) -> &Arc<Tessellation> {
        &self.tessellation
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn stabilizer(&self) -> &Subgroup {
        &self.stabilizer
    }

    /// `[Go : K']`.
    pub fn flag_orbit_count(&self) -> usize {
        self.stabilizer.index()
    }

    /// The set of labels `i` with `r_i` in `K'`, in the labels of this view.
    pub fn two_orbit_class(&self) -> Result<BTreeSet<usize>, ToroidError> {
        let k = self.flag_orbit_count();
        if k != 2 {
            return Err(ToroidError::NotTwoOrbit(k));
        }
        Ok(self.semi_edge_labels())
    }

    /// Labels `i` with `r_i` in `K'`, for any orbit count.
    pub fn semi_edge_labels(&self) -> BTreeSet<usize> {
        let t = &self.tessellation;
        t.reflections
            .iter()
            .enumerate()
            .filter(|(_, r)| self.stabilizer.contains(r))
            .map(|(i, _)| t.view_label(i))
            .collect()
    }

    /// Whether `K'` is the rotation subgroup, which would make the toroid
    /// chiral.
    pub fn is_chiral_candidate(&self) -> bool {
        self.flag_orbit_count() == 2 && self.stabilizer.elements().all(|g| g.det() == 1)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "tessellation": self.tessellation.name(),
            "n": self.tessellation.n,
            "lattice": self.lattice.to_json(),
            "orbits": self.flag_orbit_count(),
        });
        if let Ok(c) = self.two_orbit_class() {
            v["class2I"] = serde_json::json!(c.into_iter().collect::<Vec<_>>());
        }
        v
    }
}

/// `K' = {S in Go : L S = L}` by exhaustive filtering.
pub fn stabilizer(t: &Tessellation, l: &Lattice) -> Result<Subgroup, ToroidError> {
    if l.dim() != t.n || !l.is_sublattice_of(&t.vertex_lattice) {
        return Err(ToroidError::NotSublattice);
    }
    let g = &t.point_group;
    let mask: Vec<bool> = g
        .elements()
        .par_iter()
        .map(|s| l.preserved_by(s))
        .collect();
    Ok(Subgroup::from_mask(g, mask))
}

/// Searches `Go` for `S` with `L1 S = L2`.
pub fn are_isomorphic(t1: &Toroid, t2: &Toroid) -> Result<Option<GroupElement>, ToroidError> {
    if !Arc::ptr_eq(&t1.tessellation, &t2.tessellation)
        && (t1.tessellation.family != t2.tessellation.family || t1.tessellation.n != t2.tessellation.n)
    {
        return Err(ToroidError::TessellationMismatch);
    }
    if t1.lattice.index() != t2.lattice.index() {
        return Ok(None);
    }
    let target = &t2.lattice;
    Ok(t1
        .tessellation
        .point_group
        .elements()
        .iter()
        .find(|s| t1.lattice.transform(s).as_ref() == Ok(target))
        .cloned())
}

/// The orbit of a lattice under the point group, with the action of the
/// reflections `r_0..r_n` recorded as a Schreier graph.
#[derive(Debug, Clone)]
pub struct LatticeOrbit {
    pub lattices: Vec<Lattice>,
    /// `adj[v][i]` is the vertex reached from `v` by `r_i`.
    pub adj: Vec<Vec<u32>>,
}

impl LatticeOrbit {
    pub fn len(&self) -> usize {
        self.lattices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattices.is_empty()
    }

    /// Vertex holding the lexicographically smallest HNF.
    pub fn min_vertex(&self) -> usize {
        (0..self.lattices.len())
            .min_by(|&a, &b| self.lattices[a].hnf().cmp(self.lattices[b].hnf()))
            .expect("orbit is nonempty")
    }
}

/// Orbit of `l` under `Go`, generated by `r_0..r_n`. Returns `None` once the
/// orbit exceeds `limit` lattices.
pub fn lattice_orbit(t: &Tessellation, l: &Lattice, limit: usize) -> Option<LatticeOrbit> {
    let k = t.reflections.len();
    let mut lattices = vec![l.clone()];
    let mut index: HashMap<Lattice, u32> = HashMap::from([(l.clone(), 0)]);
    let mut adj: Vec<Vec<u32>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let mut row = Vec::with_capacity(k);
        for r in &t.reflections {
            let img = lattices[v].transform(r).expect("point group preserves the vertex lattice");
            let id = match index.get(&img) {
                Some(&id) => id,
                None => {
                    if lattices.len() >= limit {
                        return None;
                    }
                    let id = lattices.len() as u32;
                    index.insert(img.clone(), id);
                    lattices.push(img);
                    queue.push_back(id as usize);
                    id
                }
            };
            row.push(id);
        }
        if adj.len() <= v {
            adj.resize(v + 1, Vec::new());
        }
        adj[v] = row;
    }
    Some(LatticeOrbit { lattices, adj })
}

/// Lexicographically smallest HNF in the orbit of `l` under `Go`.
pub fn canonical_form(t: &Tessellation, l: &Lattice) -> Lattice {
    let orbit = lattice_orbit(t, l, usize::MAX).expect("unbounded");
    let v = orbit.min_vertex();
    orbit.lattices[v].clone()
}

/// Convenience: the named lattice `s * name` on tessellation `t`.
pub fn named_toroid(t: &Arc<Tessellation>, name: NamedLattice, s: i64) -> Result<Toroid, ToroidError> {
    Toroid::new(t, named(name, t.n, s)?)
}

/// Parses a tessellation spec (see [`Tessellation::parse`]).
impl FromStr for Family {
    type Err = ToroidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cubic" => Ok(Family::Cubic),
            "3343" | "3433" => Ok(Family::T3343),
            other => Err(ToroidError::UnsupportedTessellation(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stabilizer_examples() {
        let c4 = Tessellation::cubic(4).unwrap();
        let z = named_toroid(&c4, NamedLattice::Cln, 1).unwrap();
        assert_eq!(z.stabilizer().order(), 384);
        assert_eq!(z.flag_orbit_count(), 1);
        let l1 = named_toroid(&c4, NamedLattice::Lambda1, 1).unwrap();
        assert_eq!(l1.stabilizer().order(), 192);
        let expected = group::named_group_in(c4.point_group(), group::ParentFamily::Cubic, "C2n_plus*S_n").unwrap();
        assert_eq!(*l1.stabilizer(), expected);
        assert_eq!(l1.flag_orbit_count(), 2);
        let l11 = named_toroid(&c4, NamedLattice::L11xL11, 1).unwrap();
        assert_eq!(l11.flag_orbit_count(), 3);

        // On {3,3,4,3} the triality symmetry R1 joins Lambda1 to 2Z^4, so
        // its stabilizer is a conjugate of B4 rather than an index-2 group.
        let t = Tessellation::t3343(false);
        let tl1 = named_toroid(&t, NamedLattice::Lambda1, 1).unwrap();
        assert_eq!(tl1.stabilizer().order(), 384);
        let r1r2 = group::named_group_in(t.point_group(), group::ParentFamily::T3343, "<R1R2>").unwrap();
        assert!(!r1r2.is_subset_of(tl1.stabilizer()));
        let two_z = Toroid::new(&t, Lattice::cubic(4).scaled(2)).unwrap();
        assert!(are_isomorphic(&tl1, &two_z).unwrap().is_some());
    }

    #[test]
    fn class_examples() {
        let c4 = Tessellation::cubic(4).unwrap();
        let l1 = named_toroid(&c4, NamedLattice::Lambda1, 1).unwrap();
        assert_eq!(l1.two_orbit_class().unwrap(), BTreeSet::from([1, 2, 3]));
        let t = named_toroid(&Tessellation::t3343(false), NamedLattice::Lambda1, 1).unwrap();
        assert_eq!(t.two_orbit_class(), Err(ToroidError::NotTwoOrbit(3)));
        assert_eq!(t.semi_edge_labels(), BTreeSet::from([1, 3, 4]));
        let d = named_toroid(&Tessellation::t3343(true), NamedLattice::Lambda1, 1).unwrap();
        assert_eq!(d.semi_edge_labels(), BTreeSet::from([0, 1, 3]));
        let z = named_toroid(&c4, NamedLattice::Cln, 1).unwrap();
        assert_eq!(z.two_orbit_class(), Err(ToroidError::NotTwoOrbit(1)));
    }

    #[test]
    fn isomorphism_examples() {
        let c4 = Tessellation::cubic(4).unwrap();
        let l0 = named_toroid(&c4, NamedLattice::Lambda0, 1).unwrap();
        let l1 = named_toroid(&c4, NamedLattice::Lambda1, 1).unwrap();
        let w = are_isomorphic(&l0, &l1).unwrap().unwrap();
        assert_eq!(l0.lattice().transform(&w).unwrap(), *l1.lattice());
        assert!(are_isomorphic(&l1, &l1).unwrap().unwrap().is_identity());
        let z = named_toroid(&c4, NamedLattice::Cln, 1).unwrap();
        let f = named_toroid(&c4, NamedLattice::Fcln, 1).unwrap();
        assert_eq!(are_isomorphic(&z, &f).unwrap(), None);
        assert_eq!(
            canonical_form(&c4, l0.lattice()),
            canonical_form(&c4, l1.lattice())
        );
        assert_eq!(canonical_form(&c4, z.lattice()), *z.lattice());
        let t = named_toroid(&Tessellation::t3343(false), NamedLattice::Lambda1, 1).unwrap();
        assert_eq!(are_isomorphic(&z, &t), Err(ToroidError::TessellationMismatch));
    }

    #[test]
    fn non_sublattice_is_rejected() {
        let t = Tessellation::t3343(false);
        assert_eq!(
            Toroid::new(&t, Lattice::cubic(4)).unwrap_err(),
            ToroidError::NotSublattice
        );
    }

    #[test]
    fn orbit_size_matches_index() {
        let c4 = Tessellation::cubic(4).unwrap();
        for name in [NamedLattice::Cln, NamedLattice::Lambda1, NamedLattice::L11xL11] {
            let t = named_toroid(&c4, name, 1).unwrap();
            let o = lattice_orbit(&c4, t.lattice(), usize::MAX).unwrap();
            assert_eq!(o.len(), t.flag_orbit_count());
        }
        assert!(lattice_orbit(&c4, &named(NamedLattice::L11xL11, 4, 1).unwrap(), 2).is_none());
    }
}
