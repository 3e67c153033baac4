//! Dense exact matrices: rank, reduced row-echelon form, fraction-free
//! determinants and canonical left null-space bases.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Expression, Rational, VarTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix dimensions must be positive (got {rows}x{cols})")]
    EmptyDimension { rows: usize, cols: usize },
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(RationalMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![Rational::zero(); rows * cols]).expect("positive dimensions")
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Mismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Convenience constructor from integer rows.
    pub fn from_i64(rows: &[&[i64]]) -> Result<Self, LinalgError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Rational::from_integer(x.into())).collect())
                .collect(),
        )
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

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Mismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
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
    pub fn left_apply(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Rational::zero(); self.cols];
        for (r, vr) in v.iter().enumerate() {
            if vr.is_zero() {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(r)) {
                if !m.is_zero() {
                    *o += vr * m;
                }
            }
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (i..self.cols).all(|j| *self.get(i, j) == -self.get(j, i).clone()))
    }

    /// Reduced row-echelon form and its pivot columns.
    pub fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).recip();
            for j in c..m.cols {
                let x = m.get(r, j) * &inv;
                m.set(r, j, x);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let k = m.get(i, c).clone();
                for j in c..m.cols {
                    let pivot_entry = m.get(r, j);
                    if pivot_entry.is_zero() {
                        continue;
                    }
                    let x = m.get(i, j) - &k * pivot_entry;
                    m.set(i, j, x);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<Rational, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // clear denominators row by row; det(M) = det(scaled) / Π scale
        let mut scale = BigInt::one();
        let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for r in 0..n {
            let l = self
                .row(r)
                .iter()
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            a.push(
                self.row(r)
                    .iter()
                    .map(|x| x.numer() * (&l / x.denom()))
                    .collect(),
            );
            scale *= l;
        }
        let det = bareiss(&mut a);
        Ok(Rational::new(det, scale))
    }

    /// Canonical basis of `{v : v·M = 0}`.
    pub fn left_null_space(&self) -> NullBasis {
        let t = self.transpose();
        let (r, pivots) = t.rref();
        let n = t.cols;
        let mut vectors = Vec::new();
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        for free in (0..n).filter(|&j| !is_pivot[j]) {
            let mut v = vec![Rational::zero(); n];
            v[free] = Rational::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, free).clone();
            }
            vectors.push(primitive_integer(v));
        }
        NullBasis { vectors }
    }
}

/// In-place Bareiss elimination over the integers; returns the determinant.
fn bareiss(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Scales a nonzero rational vector to the primitive integer vector on the
/// same ray.
fn primitive_integer(v: Vec<Rational>) -> Vec<Rational> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v;
    }
    ints.into_iter()
        .map(|x| Rational::from_integer(x / &g))
        .collect()
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

/// Basis of a left null space.
///
/// Vectors are primitive integer vectors in reduced echelon form read from
/// the right: each has its last nonzero entry positive, at a coordinate
/// where every other basis vector is zero. Basis order follows that
/// coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NullBasis {
    vectors: Vec<Vec<Rational>>,
}

impl NullBasis {
    pub fn vectors(&self) -> &[Vec<Rational>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn into_vectors(self) -> Vec<Vec<Rational>> {
        self.vectors
    }
}

/// Canonical left null-space basis of `m`.
pub fn left_null_space(m: &RationalMatrix) -> NullBasis {
    m.left_null_space()
}

/// Exact determinant of a square matrix.
pub fn determinant(m: &RationalMatrix) -> Result<Rational, LinalgError> {
    m.determinant()
}

/// Matrix of polynomial entries over one variable table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    vars: Arc<VarTable>,
    data: Vec<Expression>,
}

impl PolyMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        vars: &Arc<VarTable>,
        data: Vec<Expression>,
    ) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|e| **e.vars() != **vars) {
            return Err(LinalgError::Mismatch("entries over a different table".into()));
        }
        Ok(PolyMatrix {
            rows,
            cols,
            vars: Arc::clone(vars),
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, vars: &Arc<VarTable>) -> Self {
        PolyMatrix {
            rows,
            cols,
            vars: Arc::clone(vars),
            data: vec![Expression::zero(vars); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn get(&self, r: usize, c: usize) -> &Expression {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: Expression) {
        assert!(**e.vars() == *self.vars);
        self.data[r * self.cols + c] = e;
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (i..self.cols).all(|j| *self.get(i, j) == -self.get(j, i)))
    }

    pub fn is_constant(&self) -> bool {
        self.data.iter().all(|e| e.as_constant().is_some())
    }

    /// The matrix as rationals, if every entry is constant.
    pub fn to_constant(&self) -> Option<RationalMatrix> {
        if self.rows == 0 || self.cols == 0 {
            return None;
        }
        let data: Option<Vec<Rational>> = self.data.iter().map(Expression::as_constant).collect();
        RationalMatrix::new(self.rows, self.cols, data?).ok()
    }

    pub fn evaluate_at(&self, point: &[Rational]) -> RationalMatrix {
        let data = self.data.iter().map(|e| e.evaluate_at(point)).collect();
        RationalMatrix::new(self.rows, self.cols, data).expect("positive dimensions")
    }

    /// Maximum rank over `trials` seeded random rational points; the range
    /// of sampled values widens with each trial.
    pub fn generic_rank(&self, trials: usize, seed: u64) -> usize {
        assert!(trials >= 1, "generic_rank needs at least one trial");
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0;
        for t in 0..trials {
            let point = random_point(&mut rng, self.vars.len(), t);
            best = best.max(self.evaluate_at(&point).rank());
            if best == self.rows.min(self.cols) {
                break;
            }
        }
        best
    }
}

/// Random rational point whose numerators grow with `round`.
pub fn random_point<R: Rng>(rng: &mut R, n: usize, round: usize) -> Vec<Rational> {
    let bound: i64 = 97i64.saturating_mul(1i64 << round.min(40));
    (0..n)
        .map(|_| {
            let num = rng.gen_range(-bound..=bound);
            let den = rng.gen_range(1..=16);
            Rational::new(num.into(), BigInt::from(den))
        })
        .collect()
}

/// Generic rank of a polynomial matrix (see [`PolyMatrix::generic_rank`]).
pub fn generic_rank(m: &PolyMatrix, trials: usize) -> usize {
    m.generic_rank(trials, 0x5eed)
}

/// Returns true if every entry is an integer and the vector is nonzero.
pub fn is_integral(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_integer()) && v.iter().any(|x| !x.is_zero())
}

/// `true` when `a = k·b` for some nonzero `k`.
pub fn proportional(a: &[Rational], b: &[Rational]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let Some(i) = a.iter().position(|x| !x.is_zero()) else {
        return false;
    };
    if b[i].is_zero() {
        return false;
    }
    let k = &a[i] / &b[i];
    a.iter().zip(b).all(|(x, y)| *x == &k * y)
}

/// `true` when the last nonzero entry of `v` is positive.
pub fn last_nonzero_positive(v: &[Rational]) -> bool {
    v.iter().rev().find(|x| !x.is_zero()).is_some_and(|x| x.is_positive())
}
