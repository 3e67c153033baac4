//! Dirac–Bergmann consistency algorithm on canonical Poisson brackets.
//!
//! This module shares no code path with the symplectic chain beyond the
//! polynomial layer and the span bookkeeping, so agreement between the two
//! is a meaningful check.

use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::chain::{Constraint, Origin};
use crate::expr::{ExprError, Expression, LinearSpan, Rational, VarTable};
use crate::linalg::{PolyMatrix, RationalMatrix};
use crate::model::FirstOrderModel;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("`{0}` mentions a variable outside the canonical coordinates")]
    NotCanonical(String),
    #[error("model has no canonical pairing: {0}")]
    NoPairing(String),
    #[error("bracket `{0}` is not constant; only linear constraint sets are supported")]
    NonConstantBracket(String),
    #[error("constraint set is not linearly independent (`{0}` is redundant)")]
    Dependent(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Canonical `(q_i, p_i)` index pairs into a variable table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalPairing {
    pairs: Vec<(usize, usize)>,
    /// Number of canonical coordinates; indices at or above this bound are
    /// multipliers and may not appear in bracket arguments.
    dim: usize,
}

impl CanonicalPairing {
    pub fn new(pairs: Vec<(usize, usize)>, dim: usize) -> Result<Self, OracleError> {
        let mut seen = vec![false; dim];
        for &(q, p) in &pairs {
            for i in [q, p] {
                if i >= dim || seen[i] {
                    return Err(OracleError::NoPairing(format!(
                        "index {i} repeated or out of range"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(OracleError::NoPairing("pairs do not cover every coordinate".into()));
        }
        Ok(CanonicalPairing { pairs, dim })
    }

    /// Pairs `ζ^i` with `ζ^{N+i}` (coordinates first, then momenta), after
    /// checking that the model's symplectic form really is canonical in that
    /// ordering, i.e. `c_β` differentiates to `∂_q c_p − ∂_p c_q = −1` on each
    /// pair and vanishes elsewhere.
    pub fn from_model(m: &FirstOrderModel) -> Result<Self, OracleError> {
        let dim = m.dim();
        if !dim.is_multiple_of(2) {
            return Err(OracleError::NoPairing(format!("odd phase-space dimension {dim}")));
        }
        let n = dim / 2;
        for a in 0..dim {
            for b in 0..dim {
                let fab = &m.c()[b].derivative(a) - &m.c()[a].derivative(b);
                let want: i64 = if a < n && b == a + n {
                    -1
                } else if b < n && a == b + n {
                    1
                } else {
                    0
                };
                if fab.as_constant() != Some(Rational::from_integer(want.into())) {
                    return Err(OracleError::NoPairing(format!(
                        "symplectic form entry ({}, {}) is `{fab}`",
                        m.table().name(a),
                        m.table().name(b)
                    )));
                }
            }
        }
        CanonicalPairing::new((0..n).map(|i| (i, i + n)).collect(), dim)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn check(&self, e: &Expression) -> Result<(), OracleError> {
        if e.support().into_iter().any(|i| i >= self.dim) {
            return Err(OracleError::NotCanonical(e.to_string()));
        }
        Ok(())
    }
}

/// `{a, b} = Σ_i ∂a/∂q_i ∂b/∂p_i − ∂a/∂p_i ∂b/∂q_i`.
pub fn poisson_bracket(
    a: &Expression,
    b: &Expression,
    pairing: &CanonicalPairing,
) -> Result<Expression, OracleError> {
    pairing.check(a)?;
    pairing.check(b)?;
    let mut out = Expression::zero(a.vars());
    for &(q, p) in &pairing.pairs {
        let t1 = &a.derivative(q) * &b.derivative(p);
        let t2 = &a.derivative(p) * &b.derivative(q);
        out = out + &t1 - &t2;
    }
    Ok(out)
}

/// Outcome of the consistency algorithm.
#[derive(Debug, Clone)]
pub struct DiracResult {
    pub constraints: Vec<Constraint>,
    /// `φ̇_a = {φ_a, H_C} + Σ_μ λ_μ {φ_a, φ^(1)_μ}` for every final
    /// constraint that involves a multiplier.
    pub multiplier_conditions: Vec<Expression>,
    /// Solved multipliers, `None` where a multiplier stays undetermined.
    pub multipliers: Vec<(String, Option<Expression>)>,
}

/// Iterates `φ̇ = {φ, H_T} ≈ 0` to closure.
///
/// Each round collects, over all constraints found so far, the constant
/// matrix `B_aμ = {φ_a, φ^(1)_μ}`. For every left null vector `w` of `B` the
/// multipliers drop out of `Σ_a w_a φ̇_a`, and that combination of
/// `{φ_a, H_C}` is a candidate; candidates outside the current span become
/// the next level.
pub fn consistency_algorithm(m: &FirstOrderModel) -> Result<DiracResult, OracleError> {
    let pairing = CanonicalPairing::from_model(m)?;
    let t = m.table();
    let h = m.hamiltonian();
    let primaries = m.primaries();
    let nmult = primaries.len();

    let mut constraints: Vec<Constraint> = primaries
        .iter()
        .map(|p| Constraint::new(1, p.clone(), Origin::Primary, None))
        .collect();
    let mut span = LinearSpan::new(t);
    for c in &constraints {
        span.insert(&c.raw)?;
    }

    let mut level = 1;
    let (hdots, bmat) = loop {
        if constraints.is_empty() {
            break (Vec::new(), Vec::new());
        }
        let hdots: Vec<Expression> = constraints
            .iter()
            .map(|c| poisson_bracket(&c.raw, h, &pairing))
            .collect::<Result<_, _>>()?;
        let bmat = bracket_rows(&constraints, primaries, &pairing)?;
        let combos = left_kernel(&bmat, constraints.len(), nmult);
        let mut fresh = Vec::new();
        for w in combos {
            let cand = w
                .iter()
                .zip(&hdots)
                .filter(|(x, _)| !x.is_zero())
                .fold(Expression::zero(t), |acc, (x, e)| acc + e.scale(x));
            if cand.is_zero() {
                continue;
            }
            if !cand.is_linear() {
                return Err(ExprError::Nonlinear(cand.to_string()).into());
            }
            if span.insert(&cand)? {
                fresh.push(Constraint::new(level + 1, cand, Origin::NullVector, Some(w)));
            }
        }
        if fresh.is_empty() {
            break (hdots, bmat);
        }
        constraints.extend(fresh);
        level += 1;
    };

    let n = m.dim();
    let mut multiplier_conditions = Vec::new();
    for (a, row) in bmat.iter().enumerate() {
        if row.iter().all(Zero::is_zero) {
            continue;
        }
        let cond = row
            .iter()
            .enumerate()
            .fold(hdots[a].clone(), |acc, (mu, b)| {
                acc + Expression::var(t, n + mu).scale(b)
            });
        multiplier_conditions.push(cond);
    }
    let multipliers = solve_multipliers(m, &bmat, &hdots);
    Ok(DiracResult {
        constraints,
        multiplier_conditions,
        multipliers,
    })
}

fn bracket_rows(
    constraints: &[Constraint],
    primaries: &[Expression],
    pairing: &CanonicalPairing,
) -> Result<Vec<Vec<Rational>>, OracleError> {
    constraints
        .iter()
        .map(|c| {
            primaries
                .iter()
                .map(|p| {
                    let b = poisson_bracket(&c.raw, p, pairing)?;
                    b.as_constant()
                        .ok_or_else(|| OracleError::NonConstantBracket(b.to_string()))
                })
                .collect()
        })
        .collect()
}

/// Left kernel of a `rows × cols` matrix given as rows; with no columns the
/// whole space is the kernel.
fn left_kernel(rows: &[Vec<Rational>], nrows: usize, ncols: usize) -> Vec<Vec<Rational>> {
    if ncols == 0 {
        return (0..nrows)
            .map(|i| {
                (0..nrows)
                    .map(|j| Rational::from_integer(((i == j) as i64).into()))
                    .collect()
            })
            .collect();
    }
    let m = RationalMatrix::from_rows(rows.to_vec()).expect("nonempty bracket matrix");
    m.left_null_space().into_vectors()
}

fn solve_multipliers(
    m: &FirstOrderModel,
    bmat: &[Vec<Rational>],
    hdots: &[Expression],
) -> Vec<(String, Option<Expression>)> {
    let names = m.phase().multipliers().names();
    let t = m.table();
    if names.is_empty() {
        return Vec::new();
    }
    let undetermined = || names.iter().map(|n| (n.clone(), None)).collect();
    let Ok(b) = RationalMatrix::from_rows(bmat.to_vec()) else {
        return undetermined();
    };
    // independent rows of B: pivots of Bᵀ
    let (_, rows) = b.transpose().rref();
    if rows.len() < names.len() {
        return undetermined();
    }
    let k = names.len();
    let mut aug = RationalMatrix::zeros(k, 2 * k);
    for (i, &r) in rows.iter().enumerate() {
        for j in 0..k {
            aug.set(i, j, b.get(r, j).clone());
        }
        aug.set(i, k + i, Rational::from_integer(1.into()));
    }
    let (inv, _) = aug.rref();
    // λ = −B_P⁻¹ h_P
    (0..k)
        .map(|mu| {
            let val = rows.iter().enumerate().fold(Expression::zero(t), |acc, (i, &r)| {
                acc - hdots[r].scale(inv.get(mu, k + i))
            });
            (names[mu].clone(), Some(val))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintClass {
    First,
    Second,
}

/// Bracket matrix `C_ab = {φ_a, φ_b}` of a constraint set.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub matrix: Option<PolyMatrix>,
    pub rank: usize,
    pub classes: Vec<ConstraintClass>,
    pub determinant: Option<Rational>,
}

/// Classifies a closed constraint set. A constraint whose brackets with
/// every member of the set vanish is first-class.
pub fn classify(
    constraints: &[Expression],
    pairing: &CanonicalPairing,
) -> Result<ConstraintMatrix, OracleError> {
    if constraints.is_empty() {
        return Ok(ConstraintMatrix {
            matrix: None,
            rank: 0,
            classes: Vec::new(),
            determinant: None,
        });
    }
    let t: Arc<VarTable> = Arc::clone(constraints[0].vars());
    let mut span = LinearSpan::new(&t);
    for c in constraints {
        if c.is_linear() && !span.insert(c)? {
            return Err(OracleError::Dependent(c.to_string()));
        }
    }
    let k = constraints.len();
    let mut data = Vec::with_capacity(k * k);
    for a in constraints {
        for b in constraints {
            data.push(poisson_bracket(a, b, pairing)?);
        }
    }
    let pm = PolyMatrix::new(k, k, &t, data).expect("square bracket matrix");
    let classes = (0..k)
        .map(|a| {
            if (0..k).all(|b| pm.get(a, b).is_zero()) {
                ConstraintClass::First
            } else {
                ConstraintClass::Second
            }
        })
        .collect();
    let (rank, determinant) = match pm.to_constant() {
        Some(c) => (c.rank(), Some(c.determinant().expect("square"))),
        None => (pm.generic_rank(8, 0x5eed), None),
    };
    Ok(ConstraintMatrix {
        matrix: Some(pm),
        rank,
        classes,
        determinant,
    })
}

/// Result of comparing two constraint spans.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanVerdict {
    pub equal: bool,
    /// Directions of the oracle set missing from the chain set, reduced and
    /// made monic.
    pub missing_from_chain: Vec<Expression>,
    /// Directions of the chain set missing from the oracle set.
    pub missing_from_oracle: Vec<Expression>,
}

/// Compares the linear spans of two constraint sets by their reduced
/// row-echelon forms.
pub fn compare_spans(
    vars: &Arc<VarTable>,
    chain: &[Expression],
    oracle: &[Expression],
) -> Result<SpanVerdict, OracleError> {
    let a = LinearSpan::from_exprs(vars, chain)?;
    let b = LinearSpan::from_exprs(vars, oracle)?;
    let residue = |from: &[Expression], span: &LinearSpan| -> Result<Vec<Expression>, OracleError> {
        let mut extra = span.clone();
        let mut out = Vec::new();
        for e in from {
            let r = extra.reduce(e)?;
            if !r.is_zero() {
                extra.insert(&r)?;
                out.push(r.monic());
            }
        }
        Ok(out)
    };
    let missing_from_chain = residue(oracle, &a)?;
    let missing_from_oracle = residue(chain, &b)?;
    Ok(SpanVerdict {
        equal: a == b,
        missing_from_chain,
        missing_from_oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::int;
    use crate::model::parse_model;

    fn example2() -> FirstOrderModel {
        parse_model("model example2\nvars x y z\nL xdot*ydot - z*(x+y)\n", "x").unwrap()
    }

    fn e(m: &FirstOrderModel, s: &str) -> Expression {
        Expression::parse(s, m.table()).unwrap()
    }

    #[test]
    fn canonical_brackets() {
        let m = example2();
        let pr = CanonicalPairing::from_model(&m).unwrap();
        assert_eq!(
            poisson_bracket(&e(&m, "x"), &e(&m, "p_x"), &pr).unwrap(),
            e(&m, "1")
        );
        assert_eq!(
            poisson_bracket(&e(&m, "p_z"), m.hamiltonian(), &pr).unwrap(),
            e(&m, "-x - y")
        );
        let a = e(&m, "x*p_y + z^2");
        assert!(poisson_bracket(&a, &a, &pr).unwrap().is_zero());
        assert!(matches!(
            poisson_bracket(&e(&m, "lambda1"), &a, &pr),
            Err(OracleError::NotCanonical(_))
        ));
    }

    #[test]
    fn mechanical_constraints() {
        let m = example2();
        let r = consistency_algorithm(&m).unwrap();
        let exprs: Vec<Expression> = r.constraints.iter().map(|c| c.raw.clone()).collect();
        let printed = ["p_z", "-x - y", "p_x + p_y", "-2*z"];
        assert_eq!(exprs.len(), 4);
        for (got, want) in exprs.iter().zip(printed) {
            assert!(got.proportional_to(&e(&m, want)), "{got} vs {want}");
        }
        let levels: Vec<usize> = r.constraints.iter().map(|c| c.level).collect();
        assert_eq!(levels, [1, 2, 3, 4]);
        // φ̇4 = {φ4, H} + λ{φ4, p_z} fixes λ
        assert_eq!(r.multipliers.len(), 1);
        assert!(r.multipliers[0].1.is_some());
        assert_eq!(r.multiplier_conditions.len(), 1);
    }

    #[test]
    fn free_particle_is_unconstrained() {
        let m = parse_model("vars q\nL 1/2*qdot^2\n", "free").unwrap();
        let r = consistency_algorithm(&m).unwrap();
        assert!(r.constraints.is_empty());
        assert!(r.multipliers.is_empty());
    }

    #[test]
    fn classification_of_mechanical_set() {
        let m = example2();
        let pr = CanonicalPairing::from_model(&m).unwrap();
        let set: Vec<Expression> = ["p_z", "-x-y", "p_x+p_y", "-2*z"]
            .iter()
            .map(|s| e(&m, s))
            .collect();
        let cm = classify(&set, &pr).unwrap();
        let c = cm.matrix.as_ref().unwrap().to_constant().unwrap();
        let expected = RationalMatrix::from_i64(&[
            &[0, 0, 0, 2],
            &[0, 0, -2, 0],
            &[0, 2, 0, 0],
            &[-2, 0, 0, 0],
        ])
        .unwrap();
        assert_eq!(c, expected);
        assert_eq!(cm.rank, 4);
        assert_eq!(cm.determinant, Some(int(16)));
        assert!(cm.classes.iter().all(|k| *k == ConstraintClass::Second));
    }

    #[test]
    fn classification_edge_cases() {
        let m = example2();
        let pr = CanonicalPairing::from_model(&m).unwrap();
        let empty = classify(&[], &pr).unwrap();
        assert!(empty.matrix.is_none());
        assert!(empty.classes.is_empty());
        let dup = [e(&m, "p_z"), e(&m, "p_z")];
        assert!(matches!(classify(&dup, &pr), Err(OracleError::Dependent(_))));
        let first = classify(&[e(&m, "p_z"), e(&m, "x")], &pr).unwrap();
        assert_eq!(first.classes, [ConstraintClass::First, ConstraintClass::First]);
        assert_eq!(first.rank, 0);
    }

    #[test]
    fn span_comparison() {
        let m = example2();
        let t = m.table();
        let full: Vec<Expression> = ["p_z", "-x-y", "p_x+p_y", "-2*z"]
            .iter()
            .map(|s| e(&m, s))
            .collect();
        let scaled: Vec<Expression> = ["3*p_z", "x+y", "-p_x-p_y", "z"]
            .iter()
            .map(|s| e(&m, s))
            .collect();
        assert!(compare_spans(t, &scaled, &full).unwrap().equal);
        let partial = &full[..3];
        let v = compare_spans(t, partial, &full).unwrap();
        assert!(!v.equal);
        assert_eq!(v.missing_from_chain, [e(&m, "z")]);
        assert!(v.missing_from_oracle.is_empty());
    }

    #[test]
    fn non_canonical_models_are_rejected() {
        let m = FirstOrderModel::from_strings("nc", &["q", "p"], &["q*p", "0"], "p^2", &[]).unwrap();
        assert!(matches!(
            consistency_algorithm(&m),
            Err(OracleError::NoPairing(_))
        ));
    }
}
