use std::sync::Arc;

use num_traits::{One, Zero};

use super::{ExprError, Expression, Rational, VarTable};

/// Affine-linear span of linear expressions, kept in reduced row-echelon
/// form over the coordinates `(var_0, …, var_{n-1}, 1)`.
///
/// Pivots are chosen in variable-table order with the constant coordinate
/// last, so remainders are canonical: they depend only on the span and on
/// the reduced expression, never on the order of insertion.
#[derive(Debug, Clone)]
pub struct LinearSpan {
    vars: Arc<VarTable>,
    rows: Vec<(usize, Vec<Rational>)>,
}

impl LinearSpan {
    pub fn new(vars: &Arc<VarTable>) -> Self {
        LinearSpan {
            vars: Arc::clone(vars),
            rows: Vec::new(),
        }
    }

    /// Builds the span of `exprs`, failing on any nonlinear member.
    pub fn from_exprs<'a, I>(vars: &Arc<VarTable>, exprs: I) -> Result<Self, ExprError>
    where
        I: IntoIterator<Item = &'a Expression>,
    {
        let mut span = LinearSpan::new(vars);
        for e in exprs {
            span.insert(e)?;
        }
        Ok(span)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn coords(e: &Expression) -> Result<Vec<Rational>, ExprError> {
        e.linear_coefficients()
            .ok_or_else(|| ExprError::Nonlinear(e.to_string()))
    }

    fn reduce_coords(&self, mut v: Vec<Rational>) -> Vec<Rational> {
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let k = v[*p].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &k * r;
                }
            }
        }
        v
    }

    /// Canonical remainder of `e` modulo the span.
    pub fn reduce(&self, e: &Expression) -> Result<Expression, ExprError> {
        let v = self.reduce_coords(Self::coords(e)?);
        Ok(Expression::from_linear(&self.vars, &v))
    }

    pub fn contains(&self, e: &Expression) -> Result<bool, ExprError> {
        Ok(self.reduce(e)?.is_zero())
    }

    /// Adds `e` to the span. Returns `true` if the span grew.
    pub fn insert(&mut self, e: &Expression) -> Result<bool, ExprError> {
        let mut v = self.reduce_coords(Self::coords(e)?);
        let Some(p) = v.iter().position(|x| !x.is_zero()) else {
            return Ok(false);
        };
        let inv = v[p].recip();
        for x in v.iter_mut() {
            *x *= &inv;
        }
        debug_assert!(v[p].is_one());
        for (_, row) in self.rows.iter_mut() {
            if row[p].is_zero() {
                continue;
            }
            let k = row[p].clone();
            for (x, r) in row.iter_mut().zip(&v) {
                if !r.is_zero() {
                    *x -= &k * r;
                }
            }
        }
        let at = self.rows.partition_point(|(q, _)| *q < p);
        self.rows.insert(at, (p, v));
        Ok(true)
    }

    /// The reduced row-echelon basis, as expressions with pivot coefficient 1.
    pub fn basis(&self) -> Vec<Expression> {
        self.rows
            .iter()
            .map(|(_, row)| Expression::from_linear(&self.vars, row))
            .collect()
    }
}

impl PartialEq for LinearSpan {
    fn eq(&self, other: &Self) -> bool {
        *self.vars == *other.vars && self.rows == other.rows
    }
}

/// Remainder of the linear expression `e` after elimination by the
/// row-reduced form of `basis`; zero exactly when `e` is in the affine-linear
/// span of `basis`.
pub fn reduce_modulo_linear(e: &Expression, basis: &[Expression]) -> Result<Expression, ExprError> {
    let span = LinearSpan::from_exprs(e.vars(), basis)?;
    span.reduce(e)
}
