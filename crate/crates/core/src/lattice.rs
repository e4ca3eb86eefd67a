//! Full-rank integer lattices in canonical Hermite normal form.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, hnf_modular, in_lattice_i64, solve_integer_i64, ExactScalar, LinearError, Matrix};
use crate::group::{GroupElement, Subgroup};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("unsupported dimension {0} for this lattice")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis does not have full rank")]
    RankDeficient,
    #[error("image of the lattice is not integral")]
    NonIntegralImage,
    #[error("lattice is not invariant under the reflection in coordinate {0}")]
    NotReflectionInvariant(usize),
    #[error("projected sublattice count {projected} exceeds cap {cap}")]
    BoundTooLarge { projected: u128, cap: u128 },
    #[error("lattice entries exceed machine range")]
    Overflow,
    #[error("cannot parse lattice spec `{0}`")]
    Parse(String),
    #[error(transparent)]
    Linear(#[from] LinearError),
}

/// A full-rank sublattice of `Z^n`, stored as its row-style HNF basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    n: usize,
    hnf: Vec<i64>,
    index: i64,
    scale_denominator: u8,
}

impl Lattice {
    /// Lattice spanned by the given integer rows.
    pub fn from_basis<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, LatticeError> {
        let m = Matrix::from_int_rows(rows)?;
        if !m.is_square() {
            return Err(if m.rows() < m.cols() {
                LatticeError::RankDeficient
            } else {
                LatticeError::DimensionMismatch {
                    expected: m.cols(),
                    found: m.rows(),
                }
            });
        }
        let (h, _) = exact::hnf(&m).map_err(|e| match e {
            LinearError::SingularBasis => LatticeError::RankDeficient,
            other => other.into(),
        })?;
        Self::from_hnf_matrix(&h)
    }

    fn from_hnf_matrix(h: &Matrix) -> Result<Self, LatticeError> {
        let n = h.rows();
        let rows = h.to_i64_rows().map_err(|_| LatticeError::Overflow)?;
        let hnf: Vec<i64> = rows.into_iter().flatten().collect();
        let index = (0..n).try_fold(1i64, |acc, i| acc.checked_mul(hnf[i * n + i]));
        Ok(Self {
            n,
            hnf,
            index: index.ok_or(LatticeError::Overflow)?,
            scale_denominator: 1,
        })
    }

    /// Lattice spanned by `gens` (flat, length a multiple of `n`) given that
    /// it contains `modulus * Z^n`.
    pub fn from_generators_mod(n: usize, gens: &[i64], modulus: i64) -> Self {
        let hnf = hnf_modular(gens, n, modulus);
        let index = (0..n).map(|i| hnf[i * n + i]).product();
        Self {
            n,
            hnf,
            index,
            scale_denominator: 1,
        }
    }

    /// Wraps a flat matrix that is already in canonical HNF.
    pub fn from_hnf_unchecked(n: usize, hnf: Vec<i64>) -> Self {
        debug_assert_eq!(hnf.len(), n * n);
        let index = (0..n).map(|i| hnf[i * n + i]).product();
        Self {
            n,
            hnf,
            index,
            scale_denominator: 1,
        }
    }

    pub fn cubic(n: usize) -> Self {
        let mut hnf = vec![0; n * n];
        for i in 0..n {
            hnf[i * n + i] = 1;
        }
        Self::from_hnf_unchecked(n, hnf)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `|det|` of the basis, i.e. the index in `Z^n`.
    pub fn index(&self) -> i64 {
        self.index
    }

    pub fn scale_denominator(&self) -> u8 {
        self.scale_denominator
    }

    /// Row-major HNF entries.
    pub fn hnf(&self) -> &[i64] {
        &self.hnf
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.hnf.chunks_exact(self.n)
    }

    pub fn row_vecs(&self) -> Vec<Vec<i64>> {
        self.rows().map(<[i64]>::to_vec).collect()
    }

    pub fn basis_matrix(&self) -> Matrix {
        Matrix::from_int_rows(&self.row_vecs()).expect("nonempty")
    }

    pub fn contains(&self, v: &[i64]) -> Result<bool, LatticeError> {
        self.check_dim(v.len())?;
        Ok(in_lattice_i64(&self.hnf, self.n, v))
    }

    /// Integer coordinates of `v` in the HNF basis, if `v` is in the lattice.
    pub fn coordinates(&self, v: &[i64]) -> Result<Option<Vec<i64>>, LatticeError> {
        self.check_dim(v.len())?;
        Ok(solve_integer_i64(&self.hnf, self.n, v))
    }

    fn check_dim(&self, found: usize) -> Result<(), LatticeError> {
        if found != self.n {
            return Err(LatticeError::DimensionMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: i64) -> Lattice {
        assert!(s >= 1, "scale must be positive");
        let hnf: Vec<i64> = self.hnf.iter().map(|x| x * s).collect();
        Self::from_hnf_unchecked(self.n, hnf)
    }

    /// Whether every vector of `self` lies in `other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.n == other.n && self.rows().all(|r| in_lattice_i64(&other.hnf, other.n, r))
    }

    /// The image `{v S : v in L}` in canonical form.
    pub fn transform(&self, s: &GroupElement) -> Result<Lattice, LatticeError> {
        self.check_dim(s.dim())?;
        let mut images = vec![0i64; self.n * self.n];
        for (r, out) in self.rows().zip(images.chunks_exact_mut(self.n)) {
            if !s.apply_into(r, out) {
                return Err(LatticeError::NonIntegralImage);
            }
        }
        Ok(Self::from_generators_mod(self.n, &images, self.index))
    }

    /// Whether `L S = L`; checked on basis images since `|det S| = 1`.
    pub fn is_invariant(&self, s: &GroupElement) -> Result<bool, LatticeError> {
        self.check_dim(s.dim())?;
        let mut out = vec![0i64; self.n];
        for r in self.rows() {
            if !s.apply_into(r, &mut out) {
                return Err(LatticeError::NonIntegralImage);
            }
            if !in_lattice_i64(&self.hnf, self.n, &out) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Like [`is_invariant`](Self::is_invariant) but treats a non-integral
    /// image as "not invariant".
    pub fn preserved_by(&self, s: &GroupElement) -> bool {
        self.is_invariant(s).unwrap_or(false)
    }

    /// Intersection with the hyperplane `x_axis = 0` and the layer
    /// structure along `e_axis` (0-based axis).
    pub fn layer_decompose(&self, axis: usize) -> Result<LayerDecomposition, LatticeError> {
        let n = self.n;
        if axis >= n {
            return Err(LatticeError::DimensionMismatch {
                expected: n,
                found: axis + 1,
            });
        }
        if !self.is_invariant(&GroupElement::coordinate_reflection(n, axis))? {
            return Err(LatticeError::NotReflectionInvariant(axis));
        }
        // Move the axis to the last coordinate, keeping the others in order.
        let others: Vec<usize> = (0..n).filter(|&i| i != axis).collect();
        let mut perm = others.clone();
        perm.push(axis);
        let p = GroupElement::from_permutation(&perm);
        let moved = self.transform(&p)?;
        let m = n - 1;
        let h = moved.hnf();
        let mut base = Vec::with_capacity(m * m);
        for i in 0..m {
            base.extend_from_slice(&h[i * n..i * n + m]);
        }
        let lambda0 = Lattice::from_hnf_unchecked(m, base);
        let rest: Vec<i64> = h[m * n..m * n + m].to_vec();
        let d = h[m * n + m];
        // The reflection maps (rest, d) to (rest, -d), so 2d e_axis is in L.
        let k = if in_lattice_i64(lambda0.hnf(), m, &rest) { 1 } else { 2 };
        let embed = |v: &[i64], last: i64| -> Vec<i64> {
            let mut out = vec![0i64; n];
            for (j, &o) in others.iter().enumerate() {
                out[o] = v[j];
            }
            out[axis] = last;
            out
        };
        let u = embed(&vec![0; m], k * d);
        if k == 1 {
            return Ok(LayerDecomposition {
                axis,
                lambda0,
                u,
                w: embed(&vec![0; m], d),
                d,
                is_vertical: true,
                alphas: None,
            });
        }
        let twice: Vec<i64> = rest.iter().map(|x| 2 * x).collect();
        let coeffs = solve_integer_i64(lambda0.hnf(), m, &twice).expect("2w0 - u lies in the base layer");
        let alphas: Vec<u8> = coeffs.iter().map(|c| c.rem_euclid(2) as u8).collect();
        let mut sum = vec![0i64; m];
        for (a, row) in alphas.iter().zip(lambda0.rows()) {
            if *a == 1 {
                for (s, x) in sum.iter_mut().zip(row) {
                    *s += x;
                }
            }
        }
        let w_base: Vec<i64> = sum.iter().map(|x| x / 2).collect();
        debug_assert!(sum.iter().all(|x| x % 2 == 0));
        Ok(LayerDecomposition {
            axis,
            lambda0,
            u,
            w: embed(&w_base, d),
            d,
            is_vertical: false,
            alphas: Some(alphas),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("lattice serializes")
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice{:?}", self.row_vecs())
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string(&self.row_vecs()).expect("rows serialize"))
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    n: usize,
    hnf: Vec<Vec<i64>>,
    index: i64,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LatticeJson {
            n: self.n,
            hnf: self.row_vecs(),
            index: self.index,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = LatticeJson::deserialize(deserializer)?;
        if j.hnf.len() != j.n || j.hnf.iter().any(|r| r.len() != j.n) {
            return Err(D::Error::custom("hnf must be n x n"));
        }
        let l = Lattice::from_basis(&j.hnf).map_err(D::Error::custom)?;
        if l.index != j.index {
            return Err(D::Error::custom(format!(
                "index {} does not match basis determinant {}",
                j.index, l.index
            )));
        }
        Ok(l)
    }
}

/// Decomposition of a reflection-invariant lattice into layers parallel to
/// the mirror `x_axis = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerDecomposition {
    pub axis: usize,
    /// `L` intersected with the mirror, in the remaining coordinates.
    pub lambda0: Lattice,
    /// Shortest nonzero lattice vector orthogonal to the mirror.
    pub u: Vec<i64>,
    /// Offset between consecutive layers.
    pub w: Vec<i64>,
    /// Distance between consecutive layers.
    pub d: i64,
    pub is_vertical: bool,
    /// Parity coefficients of `2w - u` in the HNF basis of `lambda0`.
    pub alphas: Option<Vec<u8>>,
}

impl LayerDecomposition {
    pub fn d_squared(&self) -> i64 {
        self.d * self.d
    }

    /// Whether `v` lies in `lambda0 + k w` for some integer `k`.
    pub fn reconstructs(&self, v: &[i64]) -> bool {
        let t = v[self.axis];
        if t % self.d != 0 {
            return false;
        }
        let k = t / self.d;
        let rest: Vec<i64> = (0..v.len())
            .filter(|&i| i != self.axis)
            .map(|i| v[i] - k * self.w[i])
            .collect();
        in_lattice_i64(self.lambda0.hnf(), self.lambda0.dim(), &rest)
    }
}

/// Lattices with names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedLattice {
    Cln,
    Fcln,
    Bcln,
    Lambda0,
    Lambda1,
    L11xL11,
    Vertex3343,
}

impl NamedLattice {
    pub const ALL: [NamedLattice; 7] = [
        NamedLattice::Cln,
        NamedLattice::Fcln,
        NamedLattice::Bcln,
        NamedLattice::Lambda0,
        NamedLattice::Lambda1,
        NamedLattice::L11xL11,
        NamedLattice::Vertex3343,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NamedLattice::Cln => "cln",
            NamedLattice::Fcln => "fcln",
            NamedLattice::Bcln => "bcln",
            NamedLattice::Lambda0 => "lambda0",
            NamedLattice::Lambda1 => "lambda1",
            NamedLattice::L11xL11 => "l11xl11",
            NamedLattice::Vertex3343 => "vertex3343",
        }
    }

    /// Basis rows before scaling.
    pub fn basis(&self, n: usize) -> Result<Vec<Vec<i64>>, LatticeError> {
        let four_only = matches!(self, NamedLattice::L11xL11 | NamedLattice::Vertex3343);
        if n < 2 || n > 12 || (four_only && n != 4) {
            return Err(LatticeError::UnsupportedDimension(n));
        }
        let e = |i: usize| -> Vec<i64> {
            let mut v = vec![0; n];
            v[i] = 1;
            v
        };
        Ok(match self {
            NamedLattice::Cln => (0..n).map(e).collect(),
            NamedLattice::Fcln => fcln_basis(n),
            NamedLattice::Bcln | NamedLattice::Vertex3343 => bcln_basis(n),
            NamedLattice::Lambda0 => (1..=n)
                .map(|k| {
                    let mut v = vec![1; n];
                    if k >= 2 {
                        v[0] = -1;
                        v[k - 1] = -1;
                    }
                    v
                })
                .collect(),
            NamedLattice::Lambda1 => (0..n)
                .map(|k| {
                    let mut v = vec![1; n];
                    v[k] = -1;
                    v
                })
                .collect(),
            NamedLattice::L11xL11 => vec![
                vec![1, 0, 1, 0],
                vec![1, 0, -1, 0],
                vec![0, 1, 0, 1],
                vec![0, 1, 0, -1],
            ],
        })
    }
}

fn fcln_basis(n: usize) -> Vec<Vec<i64>> {
    let mut rows = Vec::with_capacity(n);
    let mut first = vec![0; n];
    first[0] = 2;
    rows.push(first);
    for i in 1..n {
        let mut v = vec![0; n];
        v[i] = 1;
        v[i - 1] = -1;
        rows.push(v);
    }
    rows
}

fn bcln_basis(n: usize) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> = (0..n - 1)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 2;
            v
        })
        .collect();
    rows.push(vec![1; n]);
    rows
}

impl FromStr for NamedLattice {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamedLattice::ALL
            .into_iter()
            .find(|l| l.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| LatticeError::Parse(s.to_string()))
    }
}

/// The lattice `s * name` in dimension `n`.
pub fn named(name: NamedLattice, n: usize, s: i64) -> Result<Lattice, LatticeError> {
    if n < 3 {
        return Err(LatticeError::UnsupportedDimension(n));
    }
    if s < 1 {
        return Err(LatticeError::Parse(format!("scale {s} must be positive")));
    }
    Ok(Lattice::from_basis(&name.basis(n)?)?.scaled(s))
}

/// Parses specs such as `lambda1` or `lambda1@2`.
pub fn parse_named_spec(spec: &str, n: usize) -> Result<Lattice, LatticeError> {
    let (name, scale) = match spec.split_once('@') {
        Some((a, b)) => (
            a,
            b.trim()
                .parse::<i64>()
                .map_err(|_| LatticeError::Parse(spec.to_string()))?,
        ),
        None => (spec, 1),
    };
    named(name.trim().parse()?, n, scale)
}

// ---------------------------------------------------------------------------
// Sublattice enumeration.

/// Number of sublattices of index exactly `m` in a rank-`n` lattice.
pub fn count_sublattices(n: usize, m: u64) -> u128 {
    fn go(j: usize, n: usize, rem: u64, weight: u128) -> u128 {
        if j + 1 == n {
            return weight;
        }
        let mut total = 0;
        for d in 1..=rem {
            if rem % d == 0 {
                total += go(j + 1, n, rem / d, weight * (d as u128).pow((n - 1 - j) as u32));
            }
        }
        total
    }
    if n == 0 || m == 0 {
        return 0;
    }
    go(0, n, m, 1)
}

/// Number of sublattices of index at most `max_index`.
pub fn count_sublattices_up_to(n: usize, max_index: u64) -> u128 {
    (1..=max_index).map(|m| count_sublattices(n, m)).sum()
}

/// Like [`count_sublattices_up_to`], but stops as soon as the running total
/// exceeds `cap`; the result is then some value above `cap`.
pub fn count_sublattices_up_to_capped(n: usize, max_index: u64, cap: u128) -> u128 {
    let mut total = 0u128;
    for m in 1..=max_index {
        total += count_sublattices(n, m);
        if total > cap {
            break;
        }
    }
    total
}

/// Default cap on the number of lattices a stream may produce.
pub const DEFAULT_SUBLATTICE_CAP: u128 = 2_000_000;

/// Odometer over the HNF matrices of a fixed index, in lexicographic order
/// of their row-major entries.
#[derive(Debug, Clone)]
pub struct HnfOdometer {
    n: usize,
    m: u64,
    h: Vec<i64>,
    /// Flat positions of the free entries in row-major order.
    free: Vec<usize>,
    started: bool,
    done: bool,
}

impl HnfOdometer {
    pub fn new(n: usize, m: u64) -> Self {
        let mut free = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                if i == n - 1 && j == n - 1 {
                    continue;
                }
                free.push(i * n + j);
            }
        }
        let mut h = vec![0i64; n * n];
        for i in 0..n {
            h[i * n + i] = 1;
        }
        h[n * n - 1] = m as i64;
        Self {
            n,
            m,
            h,
            free,
            started: false,
            done: m == 0,
        }
    }

    fn remaining_before(&self, i: usize) -> u64 {
        let used: u64 = (0..i).map(|k| self.h[k * self.n + k] as u64).product();
        self.m / used
    }

    fn fix_last(&mut self) {
        let n = self.n;
        self.h[n * n - 1] = self.remaining_before(n - 1) as i64;
    }

    /// Advances to the next matrix; returns the current one.
    pub fn next_hnf(&mut self) -> Option<&[i64]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.h);
        }
        let n = self.n;
        for idx in (0..self.free.len()).rev() {
            let p = self.free[idx];
            let (i, j) = (p / n, p % n);
            let advanced = if i == j {
                let rem = self.remaining_before(i);
                let cur = self.h[p] as u64;
                (cur + 1..=rem).find(|d| rem % d == 0).map(|d| d as i64)
            } else {
                let cur = self.h[p];
                (cur + 1 < self.h[j * n + j]).then_some(cur + 1)
            };
            if let Some(v) = advanced {
                self.h[p] = v;
                for &q in &self.free[idx + 1..] {
                    let (a, b) = (q / n, q % n);
                    self.h[q] = if a == b { 1 } else { 0 };
                }
                self.fix_last();
                return Some(&self.h);
            }
        }
        self.done = true;
        None
    }
}

/// Maps an HNF in ambient coordinates to a lattice in standard coordinates.
fn to_standard(coeffs: &[i64], ambient: &Lattice, coeff_index: i64) -> Lattice {
    let n = ambient.dim();
    if ambient.index() == 1 {
        return Lattice::from_hnf_unchecked(n, coeffs.to_vec());
    }
    let b = ambient.hnf();
    let mut rows = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let c = coeffs[i * n + k];
            if c != 0 {
                for j in 0..n {
                    rows[i * n + j] += c * b[k * n + j];
                }
            }
        }
    }
    Lattice::from_generators_mod(n, &rows, coeff_index * ambient.index())
}

/// Streams every full-rank sublattice of `ambient` with index (in
/// `ambient`) at most `max_index`, ordered by index and then
/// lexicographically by the HNF in ambient coordinates.
pub fn enumerate_sublattices(
    max_index: u64,
    ambient: &Lattice,
    cap: u128,
) -> Result<SublatticeStream, LatticeError> {
    let projected = count_sublattices_up_to(ambient.dim(), max_index);
    if projected > cap {
        return Err(LatticeError::BoundTooLarge { projected, cap });
    }
    Ok(SublatticeStream {
        ambient: ambient.clone(),
        max_index,
        current: 1,
        odometer: HnfOdometer::new(ambient.dim(), 1),
    })
}

pub struct SublatticeStream {
    ambient: Lattice,
    max_index: u64,
    current: u64,
    odometer: HnfOdometer,
}

impl Iterator for SublatticeStream {
    type Item = Lattice;

    fn next(&mut self) -> Option<Lattice> {
        loop {
            if self.current > self.max_index {
                return None;
            }
            if let Some(h) = self.odometer.next_hnf() {
                return Some(to_standard(h, &self.ambient, self.current as i64));
            }
            self.current += 1;
            self.odometer = HnfOdometer::new(self.ambient.dim(), self.current);
        }
    }
}

/// Every sublattice of `ambient` with index exactly `m` (in `ambient`), in
/// stream order.
pub fn sublattices_of_index(ambient: &Lattice, m: u64) -> impl Iterator<Item = Lattice> + '_ {
    let mut odo = HnfOdometer::new(ambient.dim(), m);
    std::iter::from_fn(move || odo.next_hnf().map(|h| to_standard(h, ambient, m as i64)))
}

/// Integer matrix of `g` in the coordinates of the `ambient` basis, as a
/// flat row-major vector. Returns `None` if `g` does not preserve `ambient`.
pub fn ambient_matrix(g: &GroupElement, ambient: &Lattice) -> Option<Vec<i64>> {
    let n = ambient.dim();
    if ambient.index() == 1 {
        return Some(
            g.twice_entries()
                .iter()
                .map(|&x| if x % 2 == 0 { (x / 2) as i64 } else { i64::MAX })
                .collect::<Vec<_>>(),
        )
        .filter(|v| v.iter().all(|&x| x != i64::MAX));
    }
    let b = ambient.basis_matrix();
    let binv = inverse(&b);
    let a = b.mul(&g.matrix()).ok()?.mul(&binv).ok()?;
    if !a.is_integral() {
        return None;
    }
    let rows = a.to_i64_rows().ok()?;
    debug_assert_eq!(rows.len(), n);
    Some(rows.into_iter().flatten().collect())
}

fn inverse(m: &Matrix) -> Matrix {
    let n = m.rows();
    // Gauss-Jordan on [m | I].
    let mut a: Vec<Vec<ExactScalar>> = (0..n)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.extend((0..n).map(|j| ExactScalar::from_integer(BigInt::from((i == j) as i64))));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| a[r][c] != ExactScalar::from_integer(BigInt::from(0))).expect("invertible");
        a.swap(p, c);
        let piv = a[c][c].clone();
        for x in a[c].iter_mut() {
            *x = &*x / &piv;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c].clone();
                if f != ExactScalar::from_integer(BigInt::from(0)) {
                    let pivot_row = a[c].clone();
                    for (x, y) in a[r].iter_mut().zip(pivot_row) {
                        *x = &*x - &f * y;
                    }
                }
            }
        }
    }
    let data = a.into_iter().flat_map(|r| r.into_iter().skip(n)).collect();
    Matrix::new(n, n, data).expect("square")
}

/// Membership of `v` (first `k` coordinates) in the lattice spanned by the
/// first `k` rows of the flat lower-triangular `h` with stride `n`.
fn in_partial(h: &[i64], n: usize, k: usize, v: &[i64]) -> bool {
    let mut c = [0i64; 16];
    for j in (0..k).rev() {
        let mut rest = v[j];
        for i in j + 1..k {
            rest -= c[i] * h[i * n + j];
        }
        let d = h[j * n + j];
        if rest % d != 0 {
            return false;
        }
        c[j] = rest / d;
    }
    true
}

/// Every sublattice of `ambient` with index at most `max_index` (in
/// `ambient`) that is invariant under the subgroup `h`.
///
/// Rows of the HNF (in ambient coordinates) are chosen one at a time. After
/// row `i` the partial lattice equals `L` intersected with the span of the
/// first `i + 1` ambient basis vectors, so it must already be invariant
/// under the elements of `h` that preserve that span.
pub fn invariant_sublattices(
    ambient: &Lattice,
    max_index: u64,
    h: &Subgroup,
) -> Result<Vec<Lattice>, LatticeError> {
    let n = ambient.dim();
    if n > 16 {
        return Err(LatticeError::UnsupportedDimension(n));
    }
    let parent = h.parent();
    let mats: Vec<Option<Vec<i64>>> = (0..parent.order())
        .map(|id| {
            if h.contains_id(id) {
                ambient_matrix(parent.element(id), ambient)
            } else {
                None
            }
        })
        .collect();
    if h.member_ids().any(|id| mats[id].is_none()) {
        return Err(LatticeError::NonIntegralImage);
    }
    // Generators of the span-preserving subgroup at each level.
    let mut level_gens: Vec<Vec<Vec<i64>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mask: Vec<bool> = (0..parent.order())
            .map(|id| {
                mats[id].as_ref().is_some_and(|a| {
                    (0..=i).all(|r| (i + 1..n).all(|c| a[r * n + c] == 0))
                })
            })
            .collect();
        let sub = Subgroup::from_mask(parent, mask);
        level_gens.push(
            sub.generator_ids()
                .iter()
                .map(|&id| mats[id].clone().unwrap())
                .filter(|a| !is_identity_flat(a, n))
                .collect(),
        );
    }

    let mut out = Vec::new();
    let mut hm = vec![0i64; n * n];
    let mut img = [0i64; 16];
    let check = |hm: &[i64], i: usize, gens: &[Vec<i64>], img: &mut [i64; 16]| -> bool {
        for a in gens {
            for r in 0..=i {
                for c in 0..=i {
                    img[c] = (0..=i).map(|k| hm[r * n + k] * a[k * n + c]).sum();
                }
                if !in_partial(hm, n, i + 1, &img[..]) {
                    return false;
                }
            }
        }
        true
    };

    fn rec(
        i: usize,
        budget: u64,
        n: usize,
        hm: &mut Vec<i64>,
        img: &mut [i64; 16],
        level_gens: &[Vec<Vec<i64>>],
        check: &dyn Fn(&[i64], usize, &[Vec<i64>], &mut [i64; 16]) -> bool,
        out: &mut Vec<Vec<i64>>,
    ) {
        for d in 1..=budget {
            hm[i * n + i] = d as i64;
            // Odometer over the i off-diagonal entries of row i.
            for j in 0..i {
                hm[i * n + j] = 0;
            }
            loop {
                if check(hm, i, &level_gens[i], img) {
                    if i + 1 == n {
                        out.push(hm.clone());
                    } else {
                        rec(i + 1, budget / d, n, hm, img, level_gens, check, out);
                    }
                }
                let mut advanced = false;
                for j in (0..i).rev() {
                    hm[i * n + j] += 1;
                    if hm[i * n + j] < hm[j * n + j] {
                        advanced = true;
                        break;
                    }
                    hm[i * n + j] = 0;
                }
                if !advanced {
                    break;
                }
            }
            hm[i * n + i] = 0;
            for j in 0..i {
                hm[i * n + j] = 0;
            }
        }
    }

    let mut raw = Vec::new();
    rec(0, max_index, n, &mut hm, &mut img, &level_gens, &check, &mut raw);
    for c in raw {
        let idx: i64 = (0..n).map(|i| c[i * n + i]).product();
        out.push(to_standard(&c, ambient, idx));
    }
    out.sort_by(|a, b| a.index().cmp(&b.index()).then_with(|| a.hnf().cmp(b.hnf())));
    Ok(out)
}

fn is_identity_flat(a: &[i64], n: usize) -> bool {
    (0..n).all(|i| (0..n).all(|j| a[i * n + j] == (i == j) as i64))
}

/// Exact determinant of the basis through the rational route.
pub fn exact_index(l: &Lattice) -> BigInt {
    exact::det(&l.basis_matrix())
        .expect("square")
        .to_integer()
        .abs()
}

/// Converts a lattice index to `u64` if it fits.
pub fn index_u64(l: &Lattice) -> Option<u64> {
    l.index().to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{hyperoctahedral, named_group};
    use std::sync::Arc;

    #[test]
    fn named_indices() {
        assert_eq!(named(NamedLattice::Cln, 4, 1).unwrap().index(), 1);
        assert_eq!(named(NamedLattice::Fcln, 4, 1).unwrap().index(), 2);
        assert_eq!(named(NamedLattice::Bcln, 4, 1).unwrap().index(), 8);
        assert_eq!(named(NamedLattice::Lambda1, 4, 1).unwrap().index(), 16);
        assert_eq!(named(NamedLattice::Lambda1, 5, 1).unwrap().index(), 48);
        assert_eq!(named(NamedLattice::L11xL11, 4, 1).unwrap().index(), 4);
        assert_eq!(parse_named_spec("lambda1@2", 4).unwrap().index(), 256);
        assert!(matches!(
            named(NamedLattice::L11xL11, 5, 1),
            Err(LatticeError::UnsupportedDimension(5))
        ));
        assert!(parse_named_spec("hexagonal", 4).is_err());
    }

    #[test]
    fn membership_examples() {
        let l1 = named(NamedLattice::Lambda1, 5, 1).unwrap();
        assert!(l1.contains(&[2, -2, 0, 0, 0]).unwrap());
        assert!(!l1.contains(&[-1, -1, -1, 1, 1]).unwrap());
        let b = named(NamedLattice::Bcln, 4, 1).unwrap();
        assert!(b.contains(&[1, 1, 1, 1]).unwrap());
        assert!(l1.contains(&[1, 1]).is_err());
    }

    #[test]
    fn transform_examples() {
        let l1 = named(NamedLattice::Lambda1, 4, 1).unwrap();
        let l0 = named(NamedLattice::Lambda0, 4, 1).unwrap();
        let e1 = GroupElement::coordinate_reflection(4, 0);
        assert_eq!(l1.transform(&e1).unwrap(), l0);
        assert_eq!(l1.transform(&GroupElement::identity(4)).unwrap(), l1);
        let l15 = named(NamedLattice::Lambda1, 5, 1).unwrap();
        let e1e2 = e1_e2(5);
        assert!(!l15.is_invariant(&e1e2).unwrap());
        let r1 = &crate::group::t3343_generators()[0];
        let z4 = Lattice::cubic(4);
        assert_eq!(z4.transform(r1), Err(LatticeError::NonIntegralImage));
    }

    fn e1_e2(n: usize) -> GroupElement {
        GroupElement::coordinate_reflection(n, 0).mul(&GroupElement::coordinate_reflection(n, 1))
    }

    #[test]
    fn lambda1_preserved_by_even_sign_changes_and_permutations() {
        let l1 = named(NamedLattice::Lambda1, 4, 1).unwrap();
        let g = named_group("C2n_plus*S_n", 4).unwrap();
        assert_eq!(g.order(), 192);
        assert!(g.elements().all(|s| l1.is_invariant(s).unwrap()));
    }

    #[test]
    fn layer_examples() {
        let z = Lattice::cubic(4).layer_decompose(3).unwrap();
        assert!(z.is_vertical);
        assert_eq!(z.w, vec![0, 0, 0, 1]);
        assert_eq!(z.lambda0, Lattice::cubic(3));

        let f = named(NamedLattice::Fcln, 4, 1).unwrap().layer_decompose(3).unwrap();
        assert!(!f.is_vertical);
        assert_eq!(f.u, vec![0, 0, 0, 2]);
        assert_eq!(f.w, vec![1, 0, 0, 1]);
        assert_eq!(f.alphas, Some(vec![1, 0, 0]));

        let b = named(NamedLattice::Bcln, 4, 1).unwrap().layer_decompose(3).unwrap();
        assert!(!b.is_vertical);
        assert_eq!(b.lambda0, Lattice::cubic(3).scaled(2));
        assert_eq!(b.u, vec![0, 0, 0, 2]);
        assert_eq!(b.alphas, Some(vec![1, 1, 1]));

        let skew = Lattice::from_basis(&[[1, 1], [0, 3]]).unwrap();
        assert!(matches!(
            skew.layer_decompose(1),
            Err(LatticeError::NotReflectionInvariant(1))
        ));
    }

    #[test]
    fn odometer_counts() {
        for n in 1..=4 {
            for m in 1..=12u64 {
                let mut o = HnfOdometer::new(n, m);
                let mut k = 0u128;
                let mut prev: Option<Vec<i64>> = None;
                while let Some(h) = o.next_hnf() {
                    if let Some(p) = &prev {
                        assert!(p.as_slice() < h, "not lexicographic");
                    }
                    prev = Some(h.to_vec());
                    k += 1;
                }
                assert_eq!(k, count_sublattices(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn stream_small_cases() {
        let z2 = Lattice::cubic(2);
        let all: Vec<_> = enumerate_sublattices(2, &z2, 1000).unwrap().collect();
        assert_eq!(all.len(), 4);
        assert_eq!(all[0], z2);
        let one: Vec<_> = enumerate_sublattices(1, &z2, 1000).unwrap().collect();
        assert_eq!(one, vec![z2]);
        let l11 = named(NamedLattice::L11xL11, 4, 1).unwrap();
        assert!(enumerate_sublattices(4, &Lattice::cubic(4), 1_000_000)
            .unwrap()
            .any(|l| l == l11));
        assert!(matches!(
            enumerate_sublattices(256, &Lattice::cubic(4), 1000),
            Err(LatticeError::BoundTooLarge { .. })
        ));
    }

    #[test]
    fn stream_in_nontrivial_ambient() {
        let b = named(NamedLattice::Vertex3343, 4, 1).unwrap();
        let subs: Vec<_> = enumerate_sublattices(2, &b, 1000).unwrap().collect();
        assert_eq!(subs.len(), 16);
        assert!(subs.iter().all(|l| l.is_sublattice_of(&b)));
        assert!(subs.contains(&named(NamedLattice::Lambda1, 4, 1).unwrap()));
    }

    #[test]
    fn invariant_enumeration_matches_filter() {
        let b3 = Arc::new(hyperoctahedral(3));
        let whole = b3.whole();
        let fast = invariant_sublattices(&Lattice::cubic(3), 16, &whole).unwrap();
        let slow: Vec<Lattice> = enumerate_sublattices(16, &Lattice::cubic(3), 1_000_000)
            .unwrap()
            .filter(|l| whole.generators().iter().all(|g| l.is_invariant(g).unwrap()))
            .collect();
        let mut slow = slow;
        slow.sort_by(|a, b| a.index().cmp(&b.index()).then_with(|| a.hnf().cmp(b.hnf())));
        assert_eq!(fast, slow);
    }
}
