#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use symchain::expr::{rat, Expression, Rational, VarTable};
use symchain::linalg::RationalMatrix;

/// A polynomial kept as a plain term list, independent of `Expression`.
#[derive(Debug, Clone)]
pub struct RawPoly {
    pub terms: Vec<(Rational, Vec<u32>)>,
}

impl RawPoly {
    pub fn build(&self, vars: &Arc<VarTable>) -> Expression {
        let mut e = Expression::zero(vars);
        for (c, exps) in &self.terms {
            let mut t = Expression::constant(vars, c.clone());
            for (i, &k) in exps.iter().enumerate() {
                t = &t * &Expression::var(vars, i).pow(k);
            }
            e = e + t;
        }
        e
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(c, exps)| {
                exps.iter()
                    .zip(point)
                    .fold(c.clone(), |acc, (&k, x)| acc * pow(x, k))
            })
            .sum()
    }

    /// Power rule, term by term.
    pub fn derivative(&self, i: usize) -> RawPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[i] > 0)
            .map(|(c, e)| {
                let mut e = e.clone();
                let k = e[i];
                e[i] -= 1;
                (c * Rational::from_integer(k.into()), e)
            })
            .collect();
        RawPoly { terms }
    }

    pub fn max_degree(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|(_, e)| e.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

pub fn pow(x: &Rational, k: u32) -> Rational {
    (0..k).fold(Rational::from_integer(1.into()), |acc, _| acc * x)
}

pub fn random_rational<R: Rng>(rng: &mut R, span: i64) -> Rational {
    rat(rng.gen_range(-span..=span), rng.gen_range(1..=4))
}

/// Up to `max_terms` terms of total degree at most `max_deg`.
pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, max_terms: usize, max_deg: u32) -> RawPoly {
    let n = rng.gen_range(1..=max_terms);
    let terms = (0..n)
        .map(|_| {
            let mut e = vec![0u32; nvars];
            let deg = rng.gen_range(0..=max_deg);
            for _ in 0..deg {
                e[rng.gen_range(0..nvars)] += 1;
            }
            (random_rational(rng, 5), e)
        })
        .collect();
    RawPoly { terms }
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> RationalMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            // bias towards zeros so singular matrices turn up
            if rng.gen_bool(0.3) {
                Rational::from_integer(0.into())
            } else {
                random_rational(rng, 6)
            }
        })
        .collect();
    RationalMatrix::new(rows, cols, data).unwrap()
}

/// Laplace expansion along the first row.
pub fn cofactor_det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = Rational::from_integer(0.into());
    for j in 0..n {
        if m[0][j] == Rational::from_integer(0.into()) {
            continue;
        }
        let minor: Vec<Vec<Rational>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * cofactor_det(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

pub fn rows_of(m: &RationalMatrix) -> Vec<Vec<Rational>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Column-space dimension by naive Gaussian elimination on a copy.
pub fn naive_rank(m: &RationalMatrix) -> usize {
    let mut a = rows_of(m);
    let (rows, cols) = (m.rows(), m.cols());
    let zero = Rational::from_integer(0.into());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][c] != zero) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != rank && row[c] != zero {
                let k = &row[c] / &pivot[c];
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &k * p;
                }
            }
        }
        rank += 1;
    }
    rank
}
