//! Exact rational matrices and the integer-lattice linear algebra used
//! everywhere else: Hermite normal form, determinants and integer solving.
//!
//! Two HNF routes are provided. [`hnf`] is the general arbitrary-precision
//! algorithm that also returns the unimodular transform. [`hnf_modular`]
//! works on machine integers and reduces every intermediate entry modulo a
//! known multiple of the determinant; lattices use it on hot paths.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar. Always stored in lowest terms with positive denominator.
pub type ExactScalar = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearError {
    #[error("basis is singular (determinant 0)")]
    SingularBasis,
    #[error("matrix entries are not integral")]
    NonIntegral,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimensions must be positive")]
    Empty,
}

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<ExactScalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<ExactScalar>) -> Result<Self, LinearError> {
        if rows == 0 || cols == 0 {
            return Err(LinearError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinearError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ExactScalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ExactScalar::one();
        }
        m
    }

    /// Builds a matrix from integer rows. All rows must have equal length.
    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, LinearError> {
        let r = rows.len();
        let c = rows.first().map(|x| x.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            if row.len() != c {
                return Err(LinearError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row.iter().map(|&x| ExactScalar::from_integer(BigInt::from(x))));
        }
        Self::new(r, c, data)
    }

    pub fn from_bigint_rows(rows: &[Vec<BigInt>]) -> Result<Self, LinearError> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinearError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row.iter().cloned().map(ExactScalar::from_integer));
        }
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ExactScalar {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: ExactScalar) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[ExactScalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinearError> {
        if self.cols != other.rows {
            return Err(LinearError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn apply_row(&self, v: &[ExactScalar]) -> Result<Vec<ExactScalar>, LinearError> {
        if v.len() != self.rows {
            return Err(LinearError::DimensionMismatch {
                expected: self.rows,
                found: v.len(),
            });
        }
        let mut out = vec![ExactScalar::zero(); self.cols];
        for (k, a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += a * self.get(k, j);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, k: &ExactScalar) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    /// Least common multiple of all entry denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.data
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn to_bigint_rows(&self) -> Result<Vec<Vec<BigInt>>, LinearError> {
        if !self.is_integral() {
            return Err(LinearError::NonIntegral);
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_integer()).collect())
            .collect())
    }

    /// Integer rows as machine integers, if every entry is integral and fits.
    pub fn to_i64_rows(&self) -> Result<Vec<Vec<i64>>, LinearError> {
        let big = self.to_bigint_rows()?;
        big.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| x.to_i64().ok_or(LinearError::NonIntegral))
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Scales a matrix by the lcm of its denominators, returning the integral
/// matrix and the scale that was applied.
pub fn clear_denominators(m: &Matrix) -> (Matrix, BigInt) {
    let scale = m.denominator_lcm();
    (m.scale(&ExactScalar::from_integer(scale.clone())), scale)
}

// JSON: entries are bare integers when the denominator is 1 and
// `[numerator, denominator]` pairs otherwise.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonScalar {
    Int(i64),
    Big(String),
    Frac([i64; 2]),
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<JsonScalar>> = (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|x| {
                        let (n, d) = (x.numer(), x.denom());
                        match (n.to_i64(), d.to_i64()) {
                            (Some(n), Some(1)) => JsonScalar::Int(n),
                            (Some(n), Some(d)) => JsonScalar::Frac([n, d]),
                            _ => JsonScalar::Big(x.to_string()),
                        }
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<JsonScalar>> = Vec::deserialize(deserializer)?;
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(D::Error::custom("ragged matrix"));
            }
            for x in row {
                data.push(match x {
                    JsonScalar::Int(n) => ExactScalar::from_integer(n.into()),
                    JsonScalar::Frac([n, d]) => {
                        if d <= 0 {
                            return Err(D::Error::custom("denominator must be positive"));
                        }
                        ExactScalar::new(n.into(), d.into())
                    }
                    JsonScalar::Big(s) => s
                        .parse::<ExactScalar>()
                        .map_err(|_| D::Error::custom("invalid rational"))?,
                });
            }
        }
        Matrix::new(r, c, data).map_err(D::Error::custom)
    }
}

/// Exact determinant by rational Gaussian elimination.
pub fn det(m: &Matrix) -> Result<ExactScalar, LinearError> {
    if !m.is_square() {
        return Err(LinearError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut a: Vec<Vec<ExactScalar>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut result = ExactScalar::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Ok(ExactScalar::zero());
        };
        if p != c {
            a.swap(p, c);
            result = -result;
        }
        let pivot = a[c][c].clone();
        result *= &pivot;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &pivot;
            for j in c..n {
                let t = &f * &a[c][j];
                a[r][j] -= t;
            }
        }
    }
    Ok(result)
}

/// Row-style Hermite normal form of a square full-rank integral basis.
///
/// Returns `(H, U)` with `H = U * basis`, `U` unimodular and `H` lower
/// triangular with positive diagonal, each below-diagonal entry in column
/// `j` reduced into `[0, H[j][j])`.
pub fn hnf(basis: &Matrix) -> Result<(Matrix, Matrix), LinearError> {
    if !basis.is_square() {
        return Err(LinearError::NotSquare {
            rows: basis.rows,
            cols: basis.cols,
        });
    }
    let n = basis.rows;
    let mut a = basis.to_bigint_rows()?;
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
        .collect();

    fn sub_mul(rows: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        let (s, d) = if dst < src {
            let (lo, hi) = rows.split_at_mut(src);
            (&hi[0], &mut lo[dst])
        } else {
            let (lo, hi) = rows.split_at_mut(dst);
            (&lo[src], &mut hi[0])
        };
        for (x, y) in d.iter_mut().zip(s.iter()) {
            if !y.is_zero() {
                *x -= q * y;
            }
        }
    }

    for c in (0..n).rev() {
        // Euclid on column c among the still-active rows 0..=c.
        loop {
            let pivot = (0..=c)
                .filter(|&r| !a[r][c].is_zero())
                .min_by(|&x, &y| a[x][c].abs().cmp(&a[y][c].abs()));
            let Some(p) = pivot else {
                return Err(LinearError::SingularBasis);
            };
            a.swap(p, c);
            u.swap(p, c);
            let mut done = true;
            for r in 0..c {
                if a[r][c].is_zero() {
                    continue;
                }
                let q = a[r][c].div_floor(&a[c][c]);
                sub_mul(&mut a, r, c, &q);
                sub_mul(&mut u, r, c, &q);
                if !a[r][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[c][c].is_negative() {
            for x in a[c].iter_mut() {
                *x = -x.clone();
            }
            for x in u[c].iter_mut() {
                *x = -x.clone();
            }
        }
    }
    for i in 0..n {
        for j in (0..i).rev() {
            let q = a[i][j].div_floor(&a[j][j]);
            sub_mul(&mut a, i, j, &q);
            sub_mul(&mut u, i, j, &q);
        }
    }
    Ok((Matrix::from_bigint_rows(&a)?, Matrix::from_bigint_rows(&u)?))
}

/// Solves `c * H = v` for an integer row vector `c`, where `H` is a
/// full-rank lower-triangular basis. Returns `None` if no integral solution
/// exists.
pub fn solve_integer(h: &Matrix, v: &[ExactScalar]) -> Result<Option<Vec<BigInt>>, LinearError> {
    if !h.is_square() {
        return Err(LinearError::NotSquare {
            rows: h.rows,
            cols: h.cols,
        });
    }
    let n = h.rows;
    if v.len() != n {
        return Err(LinearError::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if !v.iter().all(|x| x.is_integer()) {
        return Ok(None);
    }
    let hb = h.to_bigint_rows()?;
    let mut c = vec![BigInt::zero(); n];
    for j in (0..n).rev() {
        let mut rest = v[j].to_integer();
        for i in j + 1..n {
            rest -= &c[i] * &hb[i][j];
        }
        let d = &hb[j][j];
        if d.is_zero() {
            return Err(LinearError::SingularBasis);
        }
        let (q, r) = rest.div_rem(d);
        if !r.is_zero() {
            return Ok(None);
        }
        c[j] = q;
    }
    Ok(Some(c))
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    // Returns (g, x, y) with g = x a + y b >= 0.
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Hermite normal form of the lattice spanned by `gens` (flat rows of
/// length `n`) together with `modulus * Z^n`.
///
/// When `modulus` is a multiple of the determinant of the spanned lattice,
/// the extra generators change nothing and the result is the HNF of that
/// lattice. Every intermediate entry stays below `modulus` in absolute
/// value, so machine integers suffice for desk-scale indices. Output is flat
/// row-major in the same convention as [`hnf`].
pub fn hnf_modular(gens: &[i64], n: usize, modulus: i64) -> Vec<i64> {
    assert!(modulus > 0, "modulus must be positive");
    assert_eq!(gens.len() % n, 0, "generator length must be a multiple of n");
    let m = modulus as i128;
    let mut b = vec![0i128; n * n];
    for i in 0..n {
        b[i * n + i] = m;
    }
    let mut v = vec![0i128; n];
    for g in gens.chunks_exact(n) {
        for (x, &y) in v.iter_mut().zip(g) {
            *x = (y as i128).rem_euclid(m);
        }
        for c in (0..n).rev() {
            if v[c] == 0 {
                continue;
            }
            let p = b[c * n + c];
            let (g, x, y) = ext_gcd(p, v[c]);
            let (pa, va) = (p / g, v[c] / g);
            for j in 0..c {
                let bj = b[c * n + j];
                let vj = v[j];
                b[c * n + j] = (x * bj + y * vj).rem_euclid(m);
                v[j] = (va * bj - pa * vj).rem_euclid(m);
            }
            b[c * n + c] = g;
            v[c] = 0;
        }
    }
    for i in 0..n {
        for j in (0..i).rev() {
            let d = b[j * n + j];
            let q = b[i * n + j].div_euclid(d);
            if q != 0 {
                for k in 0..=j {
                    b[i * n + k] -= q * b[j * n + k];
                }
            }
        }
    }
    b.into_iter().map(|x| x as i64).collect()
}

/// Solves `c * H = v` over machine integers for a flat lower-triangular `H`.
pub fn solve_integer_i64(h: &[i64], n: usize, v: &[i64]) -> Option<Vec<i64>> {
    debug_assert_eq!(h.len(), n * n);
    debug_assert_eq!(v.len(), n);
    let mut c = vec![0i64; n];
    for j in (0..n).rev() {
        let mut rest = v[j] as i128;
        for i in j + 1..n {
            rest -= c[i] as i128 * h[i * n + j] as i128;
        }
        let d = h[j * n + j] as i128;
        if rest % d != 0 {
            return None;
        }
        c[j] = i64::try_from(rest / d).ok()?;
    }
    Some(c)
}

/// Membership test in the row lattice of a flat lower-triangular HNF.
pub fn in_lattice_i64(h: &[i64], n: usize, v: &[i64]) -> bool {
    let mut c = [0i128; 8];
    let c = if n <= 8 { &mut c[..n] } else { return solve_integer_i64(h, n, v).is_some() };
    for j in (0..n).rev() {
        let mut rest = v[j] as i128;
        for i in j + 1..n {
            rest -= c[i] * h[i * n + j] as i128;
        }
        let d = h[j * n + j] as i128;
        if rest % d != 0 {
            return false;
        }
        c[j] = rest / d;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: i64) -> ExactScalar {
        ExactScalar::from_integer(x.into())
    }

    fn w_rows(n: usize) -> Vec<Vec<i64>> {
        (0..n)
            .map(|k| (0..n).map(|j| if j == k { -1 } else { 1 }).collect())
            .collect()
    }

    #[test]
    fn hnf_of_identity_and_diagonal() {
        let (h, u) = hnf(&Matrix::identity(4)).unwrap();
        assert_eq!(h, Matrix::identity(4));
        assert_eq!(u, Matrix::identity(4));
        let d = Matrix::from_int_rows(&[[2, 0], [0, 2]]).unwrap();
        let (h, u) = hnf(&d).unwrap();
        assert_eq!(h, d);
        assert_eq!(u, Matrix::identity(2));
    }

    #[test]
    fn hnf_of_lambda1_basis() {
        let b = Matrix::from_int_rows(&w_rows(4)).unwrap();
        let (h, u) = hnf(&b).unwrap();
        assert_eq!(det(&h).unwrap().abs(), q(16));
        assert_eq!(u.mul(&b).unwrap(), h);
        assert_eq!(det(&u).unwrap().abs(), q(1));
        for i in 0..4 {
            assert!(h.get(i, i) > &q(0));
            for j in i + 1..4 {
                assert_eq!(h.get(i, j), &q(0));
            }
            for j in 0..i {
                assert!(h.get(i, j) >= &q(0) && h.get(i, j) < h.get(j, j));
            }
        }
    }

    #[test]
    fn hnf_errors() {
        let s = Matrix::from_int_rows(&[[1, 2], [2, 4]]).unwrap();
        assert_eq!(hnf(&s), Err(LinearError::SingularBasis));
        let mut f = Matrix::identity(2);
        f.set(0, 1, ExactScalar::new(1.into(), 2.into()));
        assert_eq!(hnf(&f), Err(LinearError::NonIntegral));
        let (scaled, k) = clear_denominators(&f);
        assert_eq!(k, BigInt::from(2));
        assert!(hnf(&scaled).is_ok());
    }

    #[test]
    fn determinants() {
        assert_eq!(det(&Matrix::identity(5)).unwrap(), q(1));
        assert_eq!(det(&Matrix::from_int_rows(&w_rows(4)).unwrap()).unwrap(), q(-16));
        assert_eq!(det(&Matrix::from_int_rows(&w_rows(5)).unwrap()).unwrap(), q(48));
        let s = Matrix::from_int_rows(&[[1, 2], [2, 4]]).unwrap();
        assert_eq!(det(&s).unwrap(), q(0));
    }

    #[test]
    fn solve_examples() {
        let id = Matrix::identity(3);
        let got = solve_integer(&id, &[q(2), q(-1), q(0)]).unwrap().unwrap();
        assert_eq!(got, vec![BigInt::from(2), BigInt::from(-1), BigInt::from(0)]);
        let two = Matrix::from_int_rows(&[[2, 0], [0, 2]]).unwrap();
        assert_eq!(solve_integer(&two, &[q(1), q(0)]).unwrap(), None);
        let (h, _) = hnf(&Matrix::from_int_rows(&w_rows(4)).unwrap()).unwrap();
        // (2,2,0,0) = w3 + w4
        assert!(solve_integer(&h, &[q(2), q(2), q(0), q(0)]).unwrap().is_some());
        assert_eq!(
            solve_integer(&h, &[q(1)]),
            Err(LinearError::DimensionMismatch { expected: 4, found: 1 })
        );
    }

    #[test]
    fn modular_route_agrees_with_bigint_route() {
        let rows = w_rows(5);
        let flat: Vec<i64> = rows.concat();
        let (h, _) = hnf(&Matrix::from_int_rows(&rows).unwrap()).unwrap();
        let expected: Vec<i64> = h.to_i64_rows().unwrap().concat();
        assert_eq!(hnf_modular(&flat, 5, 48), expected);
        // Any multiple of the determinant works as the modulus.
        assert_eq!(hnf_modular(&flat, 5, 96), expected);
    }

    #[test]
    fn json_uses_pairs_only_for_fractions() {
        let mut m = Matrix::identity(2);
        m.set(1, 0, ExactScalar::new((-1).into(), 2.into()));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1,0],[[-1,2],1]]");
        let back: Matrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
