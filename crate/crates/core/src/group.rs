//! Finite point groups fixing the origin.
//!
//! Elements are orthogonal matrices with entries in `(1/2)Z`, stored scaled
//! by two as small integers so that equality and hashing are literal. Maps
//! act on row vectors, `x -> x M`, so the product `A * B` means "apply `A`,
//! then `B`".

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ExactScalar, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("matrix is not orthogonal")]
    NotOrthogonal,
    #[error("matrix entries are not in (1/2)Z")]
    NotHalfIntegral,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("group order exceeds cap {0}")]
    OrderCapExceeded(usize),
    #[error("element is not a signed permutation")]
    NotSignedPermutation,
    #[error("not a subgroup of the given group")]
    NotASubgroup,
    #[error("unsupported group spec `{0}`")]
    UnsupportedSpec(String),
    #[error("low-index search outside supported regime: {0}")]
    TooLarge(String),
    #[error("element does not preserve the 24-cell block system")]
    BlockNotPreserved,
}

/// An isometry fixing the origin.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    n: usize,
    twice: Box<[i8]>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        let mut twice = vec![0i8; n * n];
        for i in 0..n {
            twice[i * n + i] = 2;
        }
        Self {
            n,
            twice: twice.into(),
        }
    }

    /// Central inversion `x -> -x`.
    pub fn chi(n: usize) -> Self {
        let mut g = Self::identity(n);
        g.twice.iter_mut().for_each(|x| *x = -*x);
        g
    }

    /// Coordinate reflection in the hyperplane `x_i = 0` (0-based `i`).
    pub fn coordinate_reflection(n: usize, i: usize) -> Self {
        let mut g = Self::identity(n);
        g.twice[i * n + i] = -2;
        g
    }

    /// The map `x -> (s_1 x_{p(1)}, ..., s_n x_{p(n)})`, i.e. new coordinate
    /// `i` is `signs[i] * x[perm[i]]`.
    pub fn from_coordinate_map(perm: &[usize], signs: &[i8]) -> Self {
        let n = perm.len();
        let mut twice = vec![0i8; n * n];
        for (i, (&p, &s)) in perm.iter().zip(signs).enumerate() {
            twice[p * n + i] = 2 * s;
        }
        Self {
            n,
            twice: twice.into(),
        }
    }

    /// Coordinate permutation `x -> (x_{p(1)}, ..., x_{p(n)})`.
    pub fn from_permutation(perm: &[usize]) -> Self {
        Self::from_coordinate_map(perm, &vec![1; perm.len()])
    }

    /// Builds an element from entries already scaled by two.
    pub fn from_twice(n: usize, twice: Vec<i8>) -> Result<Self, GroupError> {
        if twice.len() != n * n {
            return Err(GroupError::DimensionMismatch {
                expected: n * n,
                found: twice.len(),
            });
        }
        let g = Self {
            n,
            twice: twice.into(),
        };
        if !g.is_orthogonal() {
            return Err(GroupError::NotOrthogonal);
        }
        Ok(g)
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self, GroupError> {
        if !m.is_square() {
            return Err(GroupError::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let n = m.rows();
        let two = ExactScalar::from_integer(BigInt::from(2));
        let mut twice = Vec::with_capacity(n * n);
        for i in 0..n {
            for x in m.row(i) {
                let y = x * &two;
                if !y.is_integer() {
                    return Err(GroupError::NotHalfIntegral);
                }
                twice.push(y.to_integer().to_i8().ok_or(GroupError::NotOrthogonal)?);
            }
        }
        Self::from_twice(n, twice)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entries scaled by two, row-major.
    pub fn twice_entries(&self) -> &[i8] {
        &self.twice
    }

    pub fn matrix(&self) -> Matrix {
        let data = self
            .twice
            .iter()
            .map(|&x| ExactScalar::new(BigInt::from(x), BigInt::from(2)))
            .collect();
        Matrix::new(self.n, self.n, data).expect("nonempty square")
    }

    fn is_orthogonal(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let s: i32 = (0..n)
                    .map(|k| self.twice[i * n + k] as i32 * self.twice[j * n + k] as i32)
                    .sum();
                s == if i == j { 4 } else { 0 }
            })
        })
    }

    pub fn try_mul(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        if self.n != other.n {
            return Err(GroupError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        let mut out = vec![0i8; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: i32 = (0..n)
                    .map(|k| self.twice[i * n + k] as i32 * other.twice[k * n + j] as i32)
                    .sum();
                if s % 2 != 0 {
                    return Err(GroupError::NotHalfIntegral);
                }
                out[i * n + j] = (s / 2) as i8;
            }
        }
        Ok(GroupElement {
            n,
            twice: out.into(),
        })
    }

    /// Product "apply `self`, then `other`".
    ///
    /// Panics if the product leaves `(1/2)Z`, which cannot happen inside any
    /// of the groups built by this crate.
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        self.try_mul(other).expect("product of compatible point-group elements")
    }

    pub fn inverse(&self) -> GroupElement {
        let n = self.n;
        let mut t = vec![0i8; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = self.twice[i * n + j];
            }
        }
        GroupElement { n, twice: t.into() }
    }

    /// `g^-1 self g`.
    pub fn conjugate_by(&self, g: &GroupElement) -> GroupElement {
        g.inverse().mul(self).mul(g)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// Determinant, always +1 or -1.
    pub fn det(&self) -> i32 {
        let n = self.n;
        let mut a: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| self.twice[i * n + j] as i64).collect())
            .collect();
        // Bareiss elimination on the doubled matrix; det(2M) = 2^n det(M).
        let mut sign = 1i64;
        let mut prev = 1i64;
        for k in 0..n {
            if a[k][k] == 0 {
                let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                    return 0;
                };
                a.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        (sign * a[n - 1][n - 1] / (1i64 << n)) as i32
    }

    pub fn order(&self) -> usize {
        let id = Self::identity(self.n);
        let mut x = self.clone();
        let mut k = 1;
        while x != id {
            x = x.mul(self);
            k += 1;
        }
        k
    }

    /// Image `v M` of an integer row vector, or `None` if it is not integral.
    pub fn apply(&self, v: &[i64]) -> Option<Vec<i64>> {
        let mut out = vec![0i64; self.n];
        self.apply_into(v, &mut out).then_some(out)
    }

    /// Like [`apply`](Self::apply) but writes into `out`; returns false if
    /// the image is not integral.
    pub fn apply_into(&self, v: &[i64], out: &mut [i64]) -> bool {
        let n = self.n;
        debug_assert_eq!(v.len(), n);
        for (j, o) in out.iter_mut().enumerate().take(n) {
            let s: i64 = (0..n).map(|i| v[i] * self.twice[i * n + j] as i64).sum();
            if s % 2 != 0 {
                return false;
            }
            *o = s / 2;
        }
        true
    }

    /// Whether the matrix is a signed permutation matrix.
    pub fn is_signed_permutation(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            let row = &self.twice[i * n..(i + 1) * n];
            row.iter().filter(|&&x| x != 0).count() == 1 && row.iter().all(|&x| x.abs() != 1)
        })
    }

    /// The sign vector of a signed permutation: entry `i` is the sign with
    /// which `e_i` is mapped.
    pub fn sign_vector(&self) -> Result<Vec<i8>, GroupError> {
        if !self.is_signed_permutation() {
            return Err(GroupError::NotSignedPermutation);
        }
        let n = self.n;
        Ok((0..n)
            .map(|i| {
                let x = self.twice[i * n..(i + 1) * n]
                    .iter()
                    .copied()
                    .find(|&x| x != 0)
                    .unwrap();
                x.signum()
            })
            .collect())
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.matrix())
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.matrix())
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.matrix().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = Matrix::deserialize(deserializer)?;
        GroupElement::from_matrix(&m).map_err(serde::de::Error::custom)
    }
}

/// Permutation of `0..k`, stored as the image list; composition follows the
/// same left-to-right convention as group elements.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Self((0..k).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    /// "apply `self`, then `other`".
    pub fn then(&self, other: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&i| other.0[i]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn order(&self) -> usize {
        let mut x = self.clone();
        let mut k = 1;
        while !x.is_identity() {
            x = x.then(self);
            k += 1;
        }
        k
    }

    /// All permutations of `0..k` in lexicographic order.
    pub fn all(k: usize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
            if prefix.len() == used.len() {
                out.push(Permutation(prefix.clone()));
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; k], &mut out);
        out
    }
}

/// The coordinate permutation underlying a signed permutation matrix:
/// `e_i` is sent to `+-e_{p(i)}`.
pub fn eta_projection(g: &GroupElement) -> Result<Permutation, GroupError> {
    if !g.is_signed_permutation() {
        return Err(GroupError::NotSignedPermutation);
    }
    let n = g.n;
    Ok(Permutation(
        (0..n)
            .map(|i| (0..n).find(|&j| g.twice[i * n + j] != 0).unwrap())
            .collect(),
    ))
}

/// A finite matrix group with its full element list.
pub struct PointGroup {
    n: usize,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    /// `(parent, generator)` of each element in the BFS tree; root is identity.
    tree: Vec<Option<(usize, usize)>>,
    named: Vec<(String, GroupElement)>,
    right_table: OnceLock<Vec<u32>>,
}

impl fmt::Debug for PointGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointGroup")
            .field("n", &self.n)
            .field("order", &self.elements.len())
            .field("generators", &self.generators.len())
            .finish()
    }
}

/// Breadth-first closure of `generators` under multiplication.
pub fn generate(generators: &[GroupElement], order_cap: usize) -> Result<PointGroup, GroupError> {
    let n = generators.first().map(|g| g.n).ok_or(GroupError::DimensionMismatch {
        expected: 1,
        found: 0,
    })?;
    generate_in_dim(n, generators, order_cap)
}

/// Like [`generate`] but allows an empty generating set (trivial group).
pub fn generate_in_dim(
    n: usize,
    generators: &[GroupElement],
    order_cap: usize,
) -> Result<PointGroup, GroupError> {
    for g in generators {
        if g.n != n {
            return Err(GroupError::DimensionMismatch {
                expected: n,
                found: g.n,
            });
        }
    }
    let id = GroupElement::identity(n);
    let mut elements = vec![id.clone()];
    let mut index = HashMap::from([(id, 0usize)]);
    let mut tree = vec![None];
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        for (j, g) in generators.iter().enumerate() {
            let p = elements[e].try_mul(g)?;
            if !index.contains_key(&p) {
                if elements.len() >= order_cap {
                    return Err(GroupError::OrderCapExceeded(order_cap));
                }
                index.insert(p.clone(), elements.len());
                elements.push(p);
                tree.push(Some((e, j)));
                queue.push_back(elements.len() - 1);
            }
        }
    }
    let mut named = vec![("chi".to_string(), GroupElement::chi(n))];
    named.retain(|(_, g)| index.contains_key(g));
    Ok(PointGroup {
        n,
        generators: generators.to_vec(),
        elements,
        index,
        tree,
        named,
        right_table: OnceLock::new(),
    })
}

impl PointGroup {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &GroupElement {
        &self.elements[id]
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    pub fn identity_id(&self) -> usize {
        0
    }

    /// Registers a named element (e.g. a distinguished generator).
    pub fn with_named(mut self, name: &str, g: GroupElement) -> Self {
        assert!(self.contains(&g), "named element {name} not in group");
        self.named.retain(|(k, _)| k != name);
        self.named.push((name.to_string(), g));
        self
    }

    pub fn named(&self, name: &str) -> Option<&GroupElement> {
        self.named.iter().find(|(k, _)| k == name).map(|(_, g)| g)
    }

    pub fn named_elements(&self) -> &[(String, GroupElement)] {
        &self.named
    }

    pub fn mul_ids(&self, a: usize, b: usize) -> usize {
        self.index[&self.elements[a].mul(&self.elements[b])]
    }

    pub fn inverse_id(&self, a: usize) -> usize {
        self.index[&self.elements[a].inverse()]
    }

    /// `right_table[e * gens + j]` is the id of `e * g_j`.
    pub fn right_table(&self) -> &[u32] {
        self.right_table.get_or_init(|| {
            let k = self.generators.len();
            let mut t = vec![0u32; self.elements.len() * k];
            for (e, x) in self.elements.iter().enumerate() {
                for (j, g) in self.generators.iter().enumerate() {
                    t[e * k + j] = self.index[&x.mul(g)] as u32;
                }
            }
            t
        })
    }

    pub fn bfs_tree(&self) -> &[Option<(usize, usize)>] {
        &self.tree
    }

    /// Elements with determinant +1.
    pub fn rotation_subgroup(self: &Arc<Self>) -> Subgroup {
        Subgroup::from_predicate(self, |g| g.det() == 1)
    }

    pub fn whole(self: &Arc<Self>) -> Subgroup {
        Subgroup::from_predicate(self, |_| true)
    }
}

/// A subgroup of a [`PointGroup`], stored as a membership mask over the
/// parent's element ids.
#[derive(Clone)]
pub struct Subgroup {
    parent: Arc<PointGroup>,
    members: Vec<u32>,
    mask: Vec<bool>,
    gens: OnceLock<Vec<usize>>,
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subgroup")
            .field("order", &self.order())
            .field("index", &self.index())
            .finish()
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.parent, &other.parent) && self.members == other.members
    }
}

impl Eq for Subgroup {}

impl Subgroup {
    /// Elements of the parent satisfying `pred`. The caller guarantees the
    /// selected set is closed; this is checked in debug builds.
    pub fn from_predicate(parent: &Arc<PointGroup>, mut pred: impl FnMut(&GroupElement) -> bool) -> Self {
        let mask: Vec<bool> = parent.elements.iter().map(&mut pred).collect();
        let s = Self::from_mask(parent, mask);
        debug_assert!(s.is_closed(), "predicate does not define a subgroup");
        s
    }

    pub fn from_mask(parent: &Arc<PointGroup>, mask: Vec<bool>) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i as u32))
            .collect();
        Self {
            parent: Arc::clone(parent),
            members,
            mask,
            gens: OnceLock::new(),
        }
    }

    /// Subgroup generated by the given elements of the parent.
    pub fn generated_by(parent: &Arc<PointGroup>, gens: &[GroupElement]) -> Result<Self, GroupError> {
        let mut mask = vec![false; parent.order()];
        mask[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let gen_ids: Vec<usize> = gens
            .iter()
            .map(|g| parent.index_of(g).ok_or(GroupError::NotASubgroup))
            .collect::<Result<_, _>>()?;
        while let Some(e) = queue.pop_front() {
            for &g in &gen_ids {
                let p = parent.mul_ids(e, g);
                if !mask[p] {
                    mask[p] = true;
                    queue.push_back(p);
                }
            }
        }
        Ok(Self::from_mask(parent, mask))
    }

    pub fn parent(&self) -> &Arc<PointGroup> {
        &self.parent
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn index(&self) -> usize {
        self.parent.order() / self.order()
    }

    pub fn member_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|&x| x as usize)
    }

    pub fn elements(&self) -> impl Iterator<Item = &GroupElement> + '_ {
        self.members.iter().map(|&x| &self.parent.elements[x as usize])
    }

    pub fn contains_id(&self, id: usize) -> bool {
        self.mask[id]
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.parent.index_of(g).is_some_and(|i| self.mask[i])
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.members.iter().all(|&m| other.mask[m as usize])
    }

    pub fn is_closed(&self) -> bool {
        if !self.mask[0] {
            return false;
        }
        let gens = self.greedy_generators();
        self.members
            .iter()
            .all(|&a| gens.iter().all(|&g| self.mask[self.parent.mul_ids(a as usize, g)]))
    }

    fn greedy_generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![false; self.parent.order()];
        span[0] = true;
        let mut span_list = vec![0usize];
        for &m in &self.members {
            let m = m as usize;
            if span[m] {
                continue;
            }
            gens.push(m);
            // Re-close the span under the enlarged generating set.
            let mut queue: VecDeque<usize> = span_list.iter().copied().collect();
            while let Some(e) = queue.pop_front() {
                for &g in &gens {
                    let p = self.parent.mul_ids(e, g);
                    if !span[p] {
                        span[p] = true;
                        span_list.push(p);
                        queue.push_back(p);
                    }
                }
            }
        }
        gens
    }

    /// A small generating set (greedy over member order).
    pub fn generator_ids(&self) -> &[usize] {
        self.gens.get_or_init(|| self.greedy_generators())
    }

    pub fn generators(&self) -> Vec<GroupElement> {
        self.generator_ids()
            .iter()
            .map(|&i| self.parent.elements[i].clone())
            .collect()
    }

    /// `g^-1 H g` as a subgroup of the same parent.
    pub fn conjugate(&self, g: &GroupElement) -> Subgroup {
        let gi = g.inverse();
        let mut mask = vec![false; self.parent.order()];
        for h in self.elements() {
            mask[self.parent.index[&gi.mul(h).mul(g)]] = true;
        }
        Subgroup::from_mask(&self.parent, mask)
    }

    /// Whether this subgroup contains the central inversion.
    pub fn contains_chi(&self) -> bool {
        self.contains(&GroupElement::chi(self.parent.n))
    }

    /// Elements as a JSON array of matrices.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.elements()
                .map(|g| serde_json::to_value(g).expect("matrix serializes"))
                .collect(),
        )
    }
}

/// `[G : H]`, checking that `H` is contained in `G`.
pub fn index(g: &Subgroup, h: &Subgroup) -> Result<usize, GroupError> {
    if !Arc::ptr_eq(g.parent(), h.parent()) || !h.is_subset_of(g) {
        return Err(GroupError::NotASubgroup);
    }
    Ok(g.order() / h.order())
}

/// Searches `g` for an element `x` with `x^-1 H1 x = H2`.
pub fn is_conjugate(g: &Subgroup, h1: &Subgroup, h2: &Subgroup) -> Option<GroupElement> {
    if h1.order() != h2.order() {
        return None;
    }
    let gens = h1.generators();
    g.elements()
        .find(|x| {
            let xi = x.inverse();
            gens.iter().all(|h| h2.contains(&xi.mul(h).mul(x)))
        })
        .cloned()
}

/// Whether `h` is normalized by every element of `by`.
pub fn is_normalized_by(h: &Subgroup, by: &[GroupElement]) -> bool {
    let gens = h.generators();
    by.iter().all(|x| {
        let xi = x.inverse();
        gens.iter().all(|y| h.contains(&xi.mul(y).mul(x)))
    })
}

/// Groups every subgroup into conjugacy classes under `g`, keeping the
/// first member of each class as representative.
pub fn conjugacy_representatives(g: &Subgroup, subgroups: Vec<Subgroup>) -> Vec<Subgroup> {
    let mut reps: Vec<Subgroup> = Vec::new();
    for s in subgroups {
        if !reps.iter().any(|r| is_conjugate(g, r, &s).is_some()) {
            reps.push(s);
        }
    }
    reps
}

/// One representative per conjugacy class of subgroups of index `k` in the
/// group generated by the parent's generators (which must be the whole
/// parent).
///
/// Index-`k` subgroups are exactly point stabilizers of transitive actions
/// on `k` points. Actions are found by assigning generator images in `S_k`
/// one generator at a time and checking consistency against the parent's
/// multiplication on the subgroup generated so far.
pub fn low_index_subgroups(
    parent: &Arc<PointGroup>,
    k: usize,
    require_chi: bool,
) -> Result<Vec<Subgroup>, GroupError> {
    if k == 0 {
        return Err(GroupError::TooLarge("index must be positive".into()));
    }
    let supported = k == 2 || (matches!(k, 3 | 4) && parent.order() <= 4000);
    if !supported {
        return Err(GroupError::TooLarge(format!(
            "index {k} in a group of order {}",
            parent.order()
        )));
    }
    let whole = parent.whole();
    if k == 1 {
        return Ok(vec![whole]);
    }
    let table = parent.right_table();
    let ngens = parent.generators.len();
    let order = parent.order();
    let gen_orders: Vec<usize> = parent.generators.iter().map(GroupElement::order).collect();
    let perms = Permutation::all(k);

    // Consistency of images for generators 0..=j on the subgroup they generate.
    let consistent = |images: &[Permutation]| -> bool {
        let j = images.len();
        let mut phi: Vec<Option<Permutation>> = vec![None; order];
        phi[0] = Some(Permutation::identity(k));
        let mut queue = VecDeque::from([0usize]);
        while let Some(e) = queue.pop_front() {
            let pe = phi[e].clone().unwrap();
            for (gi, img) in images.iter().enumerate().take(j) {
                let t = table[e * ngens + gi] as usize;
                let pt = pe.then(img);
                match &phi[t] {
                    Some(existing) => {
                        if *existing != pt {
                            return false;
                        }
                    }
                    None => {
                        phi[t] = Some(pt);
                        queue.push_back(t);
                    }
                }
            }
        }
        true
    };

    let mut found: Vec<Subgroup> = Vec::new();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut stack: Vec<Vec<Permutation>> = vec![Vec::new()];
    while let Some(images) = stack.pop() {
        if images.len() == ngens {
            // Transitive on k points?
            let mut reached = vec![false; k];
            reached[0] = true;
            let mut frontier = vec![0usize];
            while let Some(p) = frontier.pop() {
                for img in &images {
                    let q = img.image(p);
                    if !reached[q] {
                        reached[q] = true;
                        frontier.push(q);
                    }
                }
            }
            if !reached.iter().all(|&b| b) {
                continue;
            }
            // Point stabilizer of 0.
            let mut phi: Vec<Option<Permutation>> = vec![None; order];
            phi[0] = Some(Permutation::identity(k));
            for e in 1..order {
                let (p, g) = parent.tree[e].unwrap();
                phi[e] = Some(phi[p].as_ref().unwrap().then(&images[g]));
            }
            let mask: Vec<bool> = phi.iter().map(|p| p.as_ref().unwrap().image(0) == 0).collect();
            let s = Subgroup::from_mask(parent, mask);
            if seen.insert(s.members.clone()) {
                found.push(s);
            }
            continue;
        }
        let j = images.len();
        for p in perms.iter().rev() {
            if gen_orders[j] % p.order() != 0 {
                continue;
            }
            let mut next = images.clone();
            next.push(p.clone());
            if consistent(&next) {
                stack.push(next);
            }
        }
    }
    found.sort_by(|a, b| a.members.cmp(&b.members));
    let mut reps = conjugacy_representatives(&whole, found);
    if require_chi {
        reps.retain(Subgroup::contains_chi);
    }
    Ok(reps)
}

// ---------------------------------------------------------------------------
// Concrete groups.

/// Distinguished generators `R_1..R_n` of the vertex stabilizer of the cubic
/// tessellation: adjacent transpositions followed by the sign change of the
/// last coordinate.
pub fn cubic_generators(n: usize) -> Vec<GroupElement> {
    let mut gens: Vec<GroupElement> = (0..n - 1)
        .map(|i| {
            let mut p: Vec<usize> = (0..n).collect();
            p.swap(i, i + 1);
            GroupElement::from_permutation(&p)
        })
        .collect();
    gens.push(GroupElement::coordinate_reflection(n, n - 1));
    gens
}

/// Distinguished generators `R_1..R_4` of `[3,4,3]`, the vertex stabilizer
/// of the `{3,3,4,3}` tessellation.
pub fn t3343_generators() -> Vec<GroupElement> {
    #[rustfmt::skip]
    let r1 = GroupElement::from_twice(4, vec![
        1,  1,  1,  1,
        1,  1, -1, -1,
        1, -1,  1, -1,
        1, -1, -1,  1,
    ]).expect("R1 is orthogonal");
    let r2 = GroupElement::coordinate_reflection(4, 3);
    let r3 = GroupElement::from_permutation(&[0, 1, 3, 2]);
    let r4 = GroupElement::from_permutation(&[0, 2, 1, 3]);
    vec![r1, r2, r3, r4]
}

/// Linear part of `R_0` for both tessellation families: `diag(-1, 1, ..., 1)`.
pub fn r0_linear(n: usize) -> GroupElement {
    GroupElement::coordinate_reflection(n, 0)
}

pub const DEFAULT_ORDER_CAP: usize = 50_000;

/// The hyperoctahedral group `B_n` with its distinguished generators named
/// `R1..Rn`, coordinate reflections `E1..En` and `chi`.
pub fn hyperoctahedral(n: usize) -> PointGroup {
    let gens = cubic_generators(n);
    let mut g = generate(&gens, DEFAULT_ORDER_CAP).expect("B_n closes");
    for (i, r) in gens.iter().enumerate() {
        g = g.with_named(&format!("R{}", i + 1), r.clone());
    }
    for i in 0..n {
        g = g.with_named(&format!("E{}", i + 1), GroupElement::coordinate_reflection(n, i));
    }
    g.with_named("R0_linear", r0_linear(n))
}

/// `[3,4,3]` in its 4-dimensional representation with generators `R1..R4`.
pub fn group_3343() -> PointGroup {
    let gens = t3343_generators();
    let mut g = generate(&gens, DEFAULT_ORDER_CAP).expect("[3,4,3] closes");
    for (i, r) in gens.iter().enumerate() {
        g = g.with_named(&format!("R{}", i + 1), r.clone());
    }
    for i in 0..4 {
        g = g.with_named(&format!("E{}", i + 1), GroupElement::coordinate_reflection(4, i));
    }
    g.with_named("R0_linear", r0_linear(4))
}

fn transposition(n: usize, a: usize, b: usize) -> GroupElement {
    let mut p: Vec<usize> = (0..n).collect();
    p.swap(a, b);
    GroupElement::from_permutation(&p)
}

/// Generators of the coordinate action of `PGL_2(5)` on the projective line
/// `{0,1,2,3,4,inf}` (coordinates `1..6`): `x+1`, `2x`, `1/x`.
pub fn pgl25_generators() -> Vec<GroupElement> {
    const INF: usize = 5;
    let maps: [fn(usize) -> usize; 3] = [
        |x| if x == INF { INF } else { (x + 1) % 5 },
        |x| if x == INF { INF } else { (2 * x) % 5 },
        |x| match x {
            INF => 0,
            0 => INF,
            x => (1..5).find(|y| (x * y) % 5 == 1).unwrap(),
        },
    ];
    // A point map f sends e_x to e_{f(x)}: new coordinate f(x) is old x.
    maps.iter()
        .map(|f| {
            let mut p = vec![0usize; 6];
            for x in 0..6 {
                p[f(x)] = x;
            }
            GroupElement::from_permutation(&p)
        })
        .collect()
}

/// The two reflections generating the dihedral coordinate action on four
/// points: `(x1,x2,x3,x4) -> (x2,x1,x4,x3)` and `-> (x1,x4,x3,x2)`.
pub fn d4_generators() -> Vec<GroupElement> {
    vec![
        GroupElement::from_permutation(&[1, 0, 3, 2]),
        GroupElement::from_permutation(&[0, 3, 2, 1]),
    ]
}

/// Parent family for group specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentFamily {
    Cubic,
    T3343,
}

/// Parses a group spec and returns it as a subgroup of `B_n` or `[3,4,3]`.
///
/// A spec is a `*`-separated list of factors; the result is the subgroup
/// generated by all of them. Factors: `B_n`, `B_n_plus`, `C2n`, `C2n_plus`,
/// `S_n`, `A_n`, `S_n_minus_1`, `D4`, `PGL25`, `G3343`, `G3343_plus`, and
/// words in the distinguished generators such as `<R1,R2>` or `<R1R2>`.
/// A `G3343:` prefix makes `[3,4,3]` the parent; so does the bare `G3343`
/// factor.
pub fn named_group(spec: &str, n: usize) -> Result<Subgroup, GroupError> {
    let unsupported = || GroupError::UnsupportedSpec(spec.to_string());
    let (family, body) = match spec.strip_prefix("G3343:") {
        Some(rest) => (ParentFamily::T3343, rest),
        None if spec.split('*').any(|t| t.trim().starts_with("G3343")) => {
            (ParentFamily::T3343, spec)
        }
        None => (ParentFamily::Cubic, spec),
    };
    if n < 2 || n > 8 || (family == ParentFamily::T3343 && n != 4) {
        return Err(unsupported());
    }
    let parent = Arc::new(match family {
        ParentFamily::Cubic => hyperoctahedral(n),
        ParentFamily::T3343 => group_3343(),
    });
    named_group_in(&parent, family, body).map_err(|_| unsupported())
}

/// As [`named_group`], inside an already constructed parent.
pub fn named_group_in(
    parent: &Arc<PointGroup>,
    family: ParentFamily,
    spec: &str,
) -> Result<Subgroup, GroupError> {
    let n = parent.dim();
    let unsupported = || GroupError::UnsupportedSpec(spec.to_string());
    let dist = match family {
        ParentFamily::Cubic => cubic_generators(n),
        ParentFamily::T3343 => t3343_generators(),
    };
    let mut gens: Vec<GroupElement> = Vec::new();
    let mut filters: Vec<fn(&GroupElement) -> bool> = Vec::new();
    for term in spec.split('*').map(str::trim) {
        match term {
            "B_n" => gens.extend(cubic_generators(n)),
            "B_n_plus" => {
                gens.extend(cubic_generators(n));
                filters.push(|g| g.det() == 1);
            }
            "C2n" => gens.extend((0..n).map(|i| GroupElement::coordinate_reflection(n, i))),
            "C2n_plus" => gens.extend((0..n - 1).map(|i| {
                GroupElement::coordinate_reflection(n, i)
                    .mul(&GroupElement::coordinate_reflection(n, i + 1))
            })),
            "S_n" => gens.extend((0..n - 1).map(|i| transposition(n, i, i + 1))),
            "A_n" => gens.extend((2..n).map(|k| {
                let mut p: Vec<usize> = (0..n).collect();
                p[0] = 1;
                p[1] = k;
                p[k] = 0;
                GroupElement::from_permutation(&p)
            })),
            "S_n_minus_1" => gens.extend((0..n.saturating_sub(2)).map(|i| transposition(n, i, i + 1))),
            "D4" if n == 4 => gens.extend(d4_generators()),
            "PGL25" if n == 6 => gens.extend(pgl25_generators()),
            "G3343" if n == 4 => gens.extend(t3343_generators()),
            "G3343_plus" if n == 4 => {
                gens.extend(t3343_generators());
                filters.push(|g| g.det() == 1);
            }
            t if t.starts_with('<') && t.ends_with('>') => {
                for word in t[1..t.len() - 1].split(',') {
                    let word = word.trim();
                    let mut g = GroupElement::identity(n);
                    let mut rest = word;
                    if rest.is_empty() {
                        return Err(unsupported());
                    }
                    while let Some(r) = rest.strip_prefix('R') {
                        let digits: String = r.chars().take_while(char::is_ascii_digit).collect();
                        let i: usize = digits.parse().map_err(|_| unsupported())?;
                        if i == 0 || i > dist.len() {
                            return Err(unsupported());
                        }
                        g = g.mul(&dist[i - 1]);
                        rest = &r[digits.len()..];
                    }
                    if !rest.is_empty() {
                        return Err(unsupported());
                    }
                    gens.push(g);
                }
            }
            _ => return Err(unsupported()),
        }
    }
    if !gens.iter().all(|g| parent.contains(g)) {
        return Err(GroupError::NotASubgroup);
    }
    let sub = Subgroup::generated_by(parent, &gens)?;
    if filters.is_empty() {
        return Ok(sub);
    }
    let mask: Vec<bool> = (0..parent.order())
        .map(|i| sub.contains_id(i) && filters.iter().all(|f| f(parent.element(i))))
        .collect();
    Ok(Subgroup::from_mask(parent, mask))
}

/// Representatives of the conjugacy classes of subgroups of index 2, 3 and
/// 4 in `[3,4,3]` that contain the central inversion, as `(index, spec)`.
pub const LOW_INDEX_REPRESENTATIVES: [(usize, &str); 6] = [
    (2, "G3343:G3343_plus"),
    (2, "G3343:C2n_plus*A_n*<R1,R2>"),
    (2, "G3343:C2n_plus*S_n*<R1R2>"),
    (3, "G3343:C2n_plus*S_n*<R2>"),
    (3, "G3343:C2n_plus*D4*<R1,R2>"),
    (4, "G3343:C2n_plus*A_n*<R1R2>"),
];

/// Block of a vertex of the reference 24-cell: 0 for `+-2e_i`, 1 for
/// `(+-1)^4` with an even number of `-1`, 2 for an odd number.
pub fn block_of(v: &[i64]) -> Option<usize> {
    if v.len() != 4 {
        return None;
    }
    let nonzero = v.iter().filter(|&&x| x != 0).count();
    if nonzero == 1 && v.iter().any(|&x| x.abs() == 2) {
        return Some(0);
    }
    if v.iter().all(|&x| x.abs() == 1) {
        let neg = v.iter().filter(|&&x| x < 0).count();
        return Some(if neg % 2 == 0 { 1 } else { 2 });
    }
    None
}

/// Permutation induced on the blocks `{O0, O1, O2}` of the 24-cell.
pub fn block_action(g: &GroupElement) -> Result<Permutation, GroupError> {
    if g.dim() != 4 {
        return Err(GroupError::DimensionMismatch {
            expected: 4,
            found: g.dim(),
        });
    }
    let reps: [[i64; 4]; 3] = [[2, 0, 0, 0], [1, 1, 1, 1], [1, 1, 1, -1]];
    let mut img = Vec::with_capacity(3);
    for r in &reps {
        let v = g.apply(r).ok_or(GroupError::BlockNotPreserved)?;
        img.push(block_of(&v).ok_or(GroupError::BlockNotPreserved)?);
    }
    let mut seen = [false; 3];
    for &b in &img {
        if seen[b] {
            return Err(GroupError::BlockNotPreserved);
        }
        seen[b] = true;
    }
    Ok(Permutation(img))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_closures() {
        let g = generate(&[GroupElement::coordinate_reflection(2, 0)], 10).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(hyperoctahedral(4).order(), 384);
        assert_eq!(group_3343().order(), 1152);
        assert!(matches!(
            generate(&cubic_generators(4), 100),
            Err(GroupError::OrderCapExceeded(100))
        ));
    }

    #[test]
    fn named_group_orders() {
        assert_eq!(named_group("C2n_plus", 4).unwrap().order(), 8);
        assert_eq!(named_group("B_n_plus", 4).unwrap().order(), 192);
        assert_eq!(named_group("S_n_minus_1", 5).unwrap().order(), 24);
        assert_eq!(named_group("A_n", 5).unwrap().order(), 60);
        let d4 = named_group("D4", 4).unwrap();
        assert_eq!(d4.order(), 8);
        assert_eq!(named_group("PGL25", 6).unwrap().order(), 120);
        assert!(matches!(named_group("D4", 5), Err(GroupError::UnsupportedSpec(_))));
        assert!(matches!(named_group("nonsense", 4), Err(GroupError::UnsupportedSpec(_))));
    }

    #[test]
    fn d4_is_transitive_on_coordinates() {
        let d4 = named_group("D4", 4).unwrap();
        let orbit: HashSet<usize> = d4
            .elements()
            .map(|g| eta_projection(g).unwrap().image(0))
            .collect();
        assert_eq!(orbit.len(), 4);
    }

    #[test]
    fn eta_examples() {
        let b4 = hyperoctahedral(4);
        assert!(eta_projection(b4.named("E1").unwrap()).unwrap().is_identity());
        assert!(eta_projection(&GroupElement::chi(4)).unwrap().is_identity());
        assert_eq!(
            eta_projection(b4.named("R1").unwrap()).unwrap(),
            Permutation(vec![1, 0, 2, 3])
        );
        let r1 = &t3343_generators()[0];
        assert_eq!(eta_projection(r1), Err(GroupError::NotSignedPermutation));
    }

    #[test]
    fn element_arithmetic() {
        let r1 = &t3343_generators()[0];
        assert_eq!(r1.apply(&[2, 0, 0, 0]).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(r1.apply(&[1, 0, 0, 0]), None);
        assert_eq!(r1.det(), -1);
        assert_eq!(r1.order(), 2);
        assert!(r1.mul(&r1.inverse()).is_identity());
        let m = r1.matrix();
        assert_eq!(GroupElement::from_matrix(&m).unwrap(), *r1);
        let bad = Matrix::from_int_rows(&[[1, 1], [0, 1]]).unwrap();
        assert_eq!(GroupElement::from_matrix(&bad), Err(GroupError::NotOrthogonal));
        let mut third = Matrix::identity(2);
        third.set(0, 0, ExactScalar::new(1.into(), 3.into()));
        assert_eq!(GroupElement::from_matrix(&third), Err(GroupError::NotHalfIntegral));
    }

    #[test]
    fn index_checks_containment() {
        let b4 = Arc::new(hyperoctahedral(4));
        let whole = b4.whole();
        let plus = b4.rotation_subgroup();
        assert_eq!(index(&whole, &plus).unwrap(), 2);
        assert_eq!(index(&plus, &whole), Err(GroupError::NotASubgroup));
    }

    #[test]
    fn block_action_examples() {
        let g = group_3343();
        assert!(block_action(&GroupElement::identity(4)).unwrap().is_identity());
        let r1 = g.named("R1").unwrap();
        let p = block_action(r1).unwrap();
        assert_eq!(p.image(0), 1);
        assert_eq!(p.order(), 2);
    }
}
