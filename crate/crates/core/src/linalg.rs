//! Exact rational linear algebra over symmetric intersection forms.
//!
//! Everything here works over [`Rational`]; there is no floating point in the
//! crate. Matrices are small (tens of rows), so dense storage and plain
//! Gaussian elimination are the right tools.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `p/q` or a bare integer, with an optional sign on the numerator.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let invalid = || ParseRationalError::Invalid(text.to_string());
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text, None),
    };
    let numer: BigInt = numer.parse().map_err(|_| invalid())?;
    let denom: BigInt = match denom {
        Some(d) => {
            if d.starts_with(['-', '+']) {
                return Err(invalid());
            }
            d.parse().map_err(|_| invalid())?
        }
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(numer, denom))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: matrix is {matrix}x{matrix}, vector has length {vector}")]
    DimensionMismatch { matrix: usize, vector: usize },
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("rows have inconsistent lengths")]
    Ragged,
    #[error("singular matrix: right-hand side is not in the column space")]
    SingularMatrix,
    #[error(
        "singular matrix: system is consistent but has a {nullity}-dimensional solution space"
    )]
    UnderdeterminedSystem { nullity: usize },
}

/// Square symmetric matrix with rational entries.
#[derive(Clone, PartialEq, Eq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<Rational>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Rational::zero(); dim * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(LinalgError::Ragged);
        }
        let entries: Vec<Rational> = rows.into_iter().flatten().collect();
        let m = Self { dim, entries };
        for i in 0..dim {
            for j in (i + 1)..dim {
                if m.get(i, j) != m.get(j, i) {
                    return Err(LinalgError::NotSymmetric(i, j));
                }
            }
        }
        Ok(m)
    }

    /// Convenience constructor for integer matrices; panics if not symmetric.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&x| int(x)).collect())
            .collect();
        Self::from_rows(rows).expect("integer matrix must be square and symmetric")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.entries[j * self.dim + i] = value.clone();
        self.entries[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        self.check_len(x.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), x)).collect())
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[Rational]) -> Result<Rational, LinalgError> {
        let mx = self.mul_vec(x)?;
        Ok(dot(x, &mx))
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn principal(&self, indices: &[usize]) -> SymMatrix {
        let mut out = SymMatrix::zeros(indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out.entries[a * indices.len() + b] = self.get(i, j).clone();
            }
        }
        out
    }

    fn check_len(&self, len: usize) -> Result<(), LinalgError> {
        if len != self.dim {
            return Err(LinalgError::DimensionMismatch {
                matrix: self.dim,
                vector: len,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.dim {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.dim {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Reduced row echelon form in place; returns the pivot column of each
/// pivot row. Pivots are the first nonzero entry scanning rows top-down, so
/// the result is deterministic.
fn rref(rows: &mut [Vec<Rational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][col].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let factor = rows[i][col].clone();
                let (pivot_row, other) = if i < r {
                    let (a, b) = rows.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = rows.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for (x, y) in other.iter_mut().zip(pivot_row) {
                    *x = &*x - &factor * y;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}

/// Exact solution of `M x = b` for invertible `M`.
pub fn solve(m: &SymMatrix, b: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
    m.check_len(b.len())?;
    let n = m.dim;
    let mut rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row = m.row(i).to_vec();
            row.push(b[i].clone());
            row
        })
        .collect();
    let pivots = rref(&mut rows, n + 1);
    if pivots.contains(&n) {
        return Err(LinalgError::SingularMatrix);
    }
    if pivots.len() < n {
        return Err(LinalgError::UnderdeterminedSystem {
            nullity: n - pivots.len(),
        });
    }
    Ok(rows.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

/// Basis of the null space of `M`, each vector scaled to a primitive integer
/// vector whose first nonzero entry is positive.
pub fn kernel_basis(m: &SymMatrix) -> Vec<Vec<BigInt>> {
    let n = m.dim;
    let mut rows: Vec<Vec<Rational>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let pivots = rref(&mut rows, n);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -rows[r][f].clone();
            }
            primitive_integer_vector(&v)
        })
        .collect()
}

/// Clears denominators and divides by the gcd; the first nonzero entry of
/// the result is positive. The zero vector maps to itself.
pub fn primitive_integer_vector(v: &[Rational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return ints;
    }
    let negate = ints
        .iter()
        .find(|x| !x.is_zero())
        .is_some_and(|x| x.is_negative());
    for x in ints.iter_mut() {
        *x = &*x / &gcd;
        if negate {
            *x = -&*x;
        }
    }
    ints
}

fn serialize_int_rows<S: serde::Serializer>(rows: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let strs: Vec<String> = row.iter().map(ToString::to_string).collect();
        seq.serialize_element(&strs)?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Definiteness {
    NegativeDefinite,
    NegativeSemidefinite {
        corank: usize,
        #[serde(serialize_with = "serialize_int_rows")]
        kernel: Vec<Vec<BigInt>>,
    },
    Indefinite,
}

impl Definiteness {
    pub fn is_negative_definite(&self) -> bool {
        matches!(self, Definiteness::NegativeDefinite)
    }

    pub fn corank(&self) -> Option<usize> {
        match self {
            Definiteness::NegativeDefinite => Some(0),
            Definiteness::NegativeSemidefinite { corank, .. } => Some(*corank),
            Definiteness::Indefinite => None,
        }
    }
}

impl fmt::Display for Definiteness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Definiteness::NegativeDefinite => f.write_str("negative definite"),
            Definiteness::NegativeSemidefinite { corank, .. } => {
                write!(f, "negative semidefinite (corank {corank})")
            }
            Definiteness::Indefinite => f.write_str("indefinite"),
        }
    }
}

/// Classifies the quadratic form of `M` by symmetric elimination on `-M`.
///
/// At each step the first remaining positive diagonal entry of `-M` is used
/// as pivot and the Schur complement is formed. A negative diagonal entry, or
/// a zero diagonal entry with a nonzero row, certifies an indefinite form.
pub fn definiteness(m: &SymMatrix) -> Definiteness {
    let n = m.dim;
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|i| m.row(i).iter().map(|x| -x).collect())
        .collect();
    let mut remaining: Vec<usize> = (0..n).collect();
    loop {
        if remaining.iter().any(|&i| a[i][i].is_negative()) {
            return Definiteness::Indefinite;
        }
        let Some(pos) = remaining.iter().position(|&i| a[i][i].is_positive()) else {
            break;
        };
        let p = remaining.remove(pos);
        let pivot = a[p][p].clone();
        for &i in &remaining {
            if a[i][p].is_zero() {
                continue;
            }
            let factor = &a[i][p] / &pivot;
            for &j in &remaining {
                let delta = &factor * &a[p][j];
                a[i][j] = &a[i][j] - delta;
            }
        }
    }
    // Every remaining diagonal entry is zero; a PSD form then has zero rows.
    let zero_block = remaining
        .iter()
        .all(|&i| remaining.iter().all(|&j| a[i][j].is_zero()));
    if !zero_block {
        return Definiteness::Indefinite;
    }
    if remaining.is_empty() {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::NegativeSemidefinite {
            corank: remaining.len(),
            kernel: kernel_basis(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-6/8").unwrap(), rat(-3, 4));
        assert_eq!(parse_rational(" 5 ").unwrap(), int(5));
        assert_eq!(parse_rational("0/7").unwrap(), Rational::zero());
        assert!(matches!(
            parse_rational("1/0"),
            Err(ParseRationalError::ZeroDenominator(_))
        ));
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("a").is_err());
        assert!(parse_rational("").is_err());
        assert_eq!(rat(-2, 3).to_string(), "-2/3");
        assert_eq!(rat(4, 2).to_string(), "2");
        assert_eq!(*rat(0, 5).denom(), BigInt::one());
    }

    #[test]
    fn solve_one_by_one() {
        let m = SymMatrix::from_i64(&[&[-1]]);
        assert_eq!(solve(&m, &v(&[-2])).unwrap(), v(&[2]));
    }

    #[test]
    fn solve_a2_homogeneous() {
        let m = SymMatrix::from_i64(&[&[-2, 1], &[1, -2]]);
        assert_eq!(solve(&m, &v(&[0, 0])).unwrap(), v(&[0, 0]));
        let x = solve(&m, &v(&[1, 0])).unwrap();
        assert_eq!(x, vec![rat(-2, 3), rat(-1, 3)]);
        assert_eq!(m.mul_vec(&x).unwrap(), v(&[1, 0]));
    }

    #[test]
    fn singular_systems() {
        let m = SymMatrix::from_i64(&[&[-2, 2], &[2, -2]]);
        assert_eq!(solve(&m, &v(&[1, 0])), Err(LinalgError::SingularMatrix));
        assert_eq!(
            solve(&m, &v(&[1, -1])),
            Err(LinalgError::UnderdeterminedSystem { nullity: 1 })
        );
        assert!(matches!(
            solve(&m, &v(&[1])),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn asymmetric_rows_rejected() {
        let rows = vec![v(&[1, 2]), v(&[3, 4])];
        assert_eq!(
            SymMatrix::from_rows(rows),
            Err(LinalgError::NotSymmetric(0, 1))
        );
        assert_eq!(
            SymMatrix::from_rows(vec![v(&[1, 2])]),
            Err(LinalgError::Ragged)
        );
    }

    #[test]
    fn definiteness_examples() {
        assert_eq!(
            definiteness(&SymMatrix::from_i64(&[&[-1]])),
            Definiteness::NegativeDefinite
        );
        let degenerate = definiteness(&SymMatrix::from_i64(&[&[-2, 2], &[2, -2]]));
        assert_eq!(
            degenerate,
            Definiteness::NegativeSemidefinite {
                corank: 1,
                kernel: vec![vec![BigInt::from(1), BigInt::from(1)]],
            }
        );
        assert_eq!(
            definiteness(&SymMatrix::from_i64(&[&[-1, 2], &[2, -1]])),
            Definiteness::Indefinite
        );
        assert_eq!(
            definiteness(&SymMatrix::from_i64(&[&[1]])),
            Definiteness::Indefinite
        );
        // zero diagonal with a nonzero off-diagonal entry
        assert_eq!(
            definiteness(&SymMatrix::from_i64(&[&[0, 1], &[1, -3]])),
            Definiteness::Indefinite
        );
        assert_eq!(definiteness(&SymMatrix::zeros(2)).corank(), Some(2));
        assert_eq!(
            definiteness(&SymMatrix::zeros(0)),
            Definiteness::NegativeDefinite
        );
    }

    #[test]
    fn affine_d4_kernel_is_primitive() {
        // extended D4: centre with four leaves
        let m = SymMatrix::from_i64(&[
            &[-2, 1, 1, 1, 1],
            &[1, -2, 0, 0, 0],
            &[1, 0, -2, 0, 0],
            &[1, 0, 0, -2, 0],
            &[1, 0, 0, 0, -2],
        ]);
        match definiteness(&m) {
            Definiteness::NegativeSemidefinite { corank, kernel } => {
                assert_eq!(corank, 1);
                let expected: Vec<BigInt> =
                    [2, 1, 1, 1, 1].iter().map(|&x| BigInt::from(x)).collect();
                assert_eq!(kernel, vec![expected]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn primitive_vector_normalisation() {
        let p = primitive_integer_vector(&[rat(-1, 2), rat(-3, 4), Rational::zero()]);
        assert_eq!(p, vec![BigInt::from(2), BigInt::from(3), BigInt::from(0)]);
        let p = primitive_integer_vector(&[Rational::zero(), rat(6, 1), rat(-4, 1)]);
        assert_eq!(p, vec![BigInt::from(0), BigInt::from(3), BigInt::from(-2)]);
    }
}
