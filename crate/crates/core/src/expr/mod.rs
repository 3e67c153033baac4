//! Exact multivariate polynomials over the rationals.
//!
//! Every quantity the analyzer manipulates (the coefficients `c_α`, the
//! Hamiltonian, constraints, bracket values) is an [`Expression`]: a sparse
//! map from monomials to [`Rational`] coefficients over a shared
//! [`VarTable`]. The map is kept in canonical form, so structural equality
//! is mathematical equality.

mod parse;
mod span;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use parse::parse_expression;
pub use span::{reduce_modulo_linear, LinearSpan};

/// Exact rational number, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

/// Shorthand for building a rational from machine integers.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Shorthand for an integral rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("exponent at byte {offset} must be a nonnegative integer literal")]
    BadExponent { offset: usize },
    #[error("division by a non-constant or zero expression at byte {offset}")]
    BadDivision { offset: usize },
    #[error("unknown variable `{0}`")]
    NoSuchVariable(String),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("no value assigned to variable `{0}`")]
    MissingAssignment(String),
    #[error("expression `{0}` is not linear")]
    Nonlinear(String),
}

/// Returns true if `name` is a legal variable identifier: a letter or `_`
/// followed by letters, digits or `_`.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Ordered set of variable names. The order fixes the monomial order used
/// for canonical printing and for pivot selection in linear reductions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    pub fn new<I, S>(names: I) -> Result<Self, ExprError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = VarTable {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            table.push(name.into())?;
        }
        Ok(table)
    }

    fn push(&mut self, name: String) -> Result<(), ExprError> {
        if !is_valid_name(&name) {
            return Err(ExprError::InvalidName(name));
        }
        if self.index.contains_key(&name) {
            return Err(ExprError::DuplicateName(name));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        Ok(())
    }

    /// Table holding the names of `self` followed by those of `other`.
    pub fn concat(&self, other: &VarTable) -> Result<VarTable, ExprError> {
        VarTable::new(self.names.iter().chain(other.names.iter()).cloned())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

/// Exponent vector over a [`VarTable`].
///
/// The `Ord` impl is *descending* graded-lexicographic: higher total degree
/// sorts first, ties are broken lexicographically with earlier variables
/// ranking higher. Iterating a `BTreeMap<Monomial, _>` therefore walks terms
/// in printing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = Monomial::one(nvars);
        m.0[i] = 1;
        m
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial with exact rational coefficients in canonical form.
#[derive(Clone)]
pub struct Expression {
    vars: Arc<VarTable>,
    terms: BTreeMap<Monomial, Rational>,
}

impl Expression {
    pub fn zero(vars: &Arc<VarTable>) -> Self {
        Expression {
            vars: Arc::clone(vars),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<VarTable>, value: Rational) -> Self {
        let mut e = Expression::zero(vars);
        if !value.is_zero() {
            e.terms.insert(Monomial::one(vars.len()), value);
        }
        e
    }

    pub fn var(vars: &Arc<VarTable>, i: usize) -> Self {
        assert!(i < vars.len(), "variable index {i} out of range");
        let mut e = Expression::zero(vars);
        e.terms.insert(Monomial::var(vars.len(), i), Rational::one());
        e
    }

    pub fn var_named(vars: &Arc<VarTable>, name: &str) -> Result<Self, ExprError> {
        let i = vars
            .index_of(name)
            .ok_or_else(|| ExprError::NoSuchVariable(name.to_string()))?;
        Ok(Expression::var(vars, i))
    }

    /// Builds `Σ coeffs[i]·var_i + coeffs[n]` from a dense coefficient
    /// vector of length `vars.len() + 1` (constant last).
    pub fn from_linear(vars: &Arc<VarTable>, coeffs: &[Rational]) -> Self {
        let n = vars.len();
        assert_eq!(coeffs.len(), n + 1, "linear coefficient vector length");
        let mut e = Expression::zero(vars);
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let m = if i < n {
                Monomial::var(n, i)
            } else {
                Monomial::one(n)
            };
            e.terms.insert(m, c.clone());
        }
        e
    }

    pub fn parse(text: &str, vars: &Arc<VarTable>) -> Result<Self, ExprError> {
        parse_expression(text, vars)
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    /// Total degree counting only the variables selected by `pred`.
    pub fn degree_in_set(&self, pred: impl Fn(usize) -> bool) -> u32 {
        self.terms
            .keys()
            .map(|m| {
                m.0.iter()
                    .enumerate()
                    .filter(|(i, _)| pred(*i))
                    .map(|(_, e)| *e)
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] > 0)
    }

    /// Indices of the variables that occur with nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.depends_on(i)).collect()
    }

    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Dense coefficients `[c_0, …, c_{n-1}, constant]`, or `None` when the
    /// expression has degree above one.
    pub fn linear_coefficients(&self) -> Option<Vec<Rational>> {
        if !self.is_linear() {
            return None;
        }
        let n = self.vars.len();
        let mut out = vec![Rational::zero(); n + 1];
        for (m, c) in &self.terms {
            match m.0.iter().position(|&e| e > 0) {
                Some(i) => out[i] = c.clone(),
                None => out[n] = c.clone(),
            }
        }
        Some(out)
    }

    /// Coefficient of the first term in printing order.
    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.terms.values().next()
    }

    pub fn scale(&self, k: &Rational) -> Expression {
        if k.is_zero() {
            return Expression::zero(&self.vars);
        }
        Expression {
            vars: Arc::clone(&self.vars),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * k))
                .collect(),
        }
    }

    /// Scales so the leading coefficient is `+1`. Zero stays zero.
    pub fn monic(&self) -> Expression {
        match self.leading_coefficient() {
            Some(lc) => self.scale(&lc.recip()),
            None => self.clone(),
        }
    }

    /// True when `self = k·other` for some nonzero rational `k`.
    pub fn proportional_to(&self, other: &Expression) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        self.monic() == other.monic()
    }

    pub fn pow(&self, exp: u32) -> Expression {
        let mut acc = Expression::constant(&self.vars, Rational::one());
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Exact partial derivative with respect to variable index `i`.
    pub fn derivative(&self, i: usize) -> Expression {
        let mut out = Expression::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.add_term(dm, c * Rational::from_integer(BigInt::from(e)));
        }
        out
    }

    pub fn differentiate(&self, name: &str) -> Result<Expression, ExprError> {
        let i = self
            .vars
            .index_of(name)
            .ok_or_else(|| ExprError::NoSuchVariable(name.to_string()))?;
        Ok(self.derivative(i))
    }

    /// Evaluates at a point given by name. Only variables that actually
    /// occur need an assignment.
    pub fn evaluate(&self, point: &HashMap<String, Rational>) -> Result<Rational, ExprError> {
        let mut values: Vec<Option<&Rational>> = vec![None; self.vars.len()];
        for i in self.support() {
            let name = self.vars.name(i);
            values[i] = Some(
                point
                    .get(name)
                    .ok_or_else(|| ExprError::MissingAssignment(name.to_string()))?,
            );
        }
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term *= num_traits::pow(values[i].unwrap().clone(), e as usize);
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Evaluates at a dense point indexed like the variable table.
    pub fn evaluate_at(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.vars.len());
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .fold(c.clone(), |acc, (i, &e)| {
                        acc * num_traits::pow(point[i].clone(), e as usize)
                    })
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Re-expresses this polynomial over another table, matching variables
    /// by name.
    pub fn remap(&self, target: &Arc<VarTable>) -> Result<Expression, ExprError> {
        let mut map = Vec::with_capacity(self.vars.len());
        for name in self.vars.names() {
            map.push(target.index_of(name));
        }
        let mut out = Expression::zero(target);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; target.len()];
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let j = map[i].ok_or_else(|| ExprError::NoSuchVariable(self.vars.name(i).into()))?;
                exps[j] = e;
            }
            out.add_term(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_table(&self, other: &Expression) {
        assert!(
            Arc::ptr_eq(&self.vars, &other.vars) || *self.vars == *other.vars,
            "expressions over different variable tables"
        );
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.vars, &other.vars) || *self.vars == *other.vars)
            && self.terms == other.terms
    }
}

impl Eq for Expression {}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({self})")
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, vars: &VarTable, m: &Monomial) -> fmt::Result {
    let mut first = true;
    for (i, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            f.write_str("*")?;
        }
        first = false;
        f.write_str(vars.name(i))?;
        if e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if k == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                write_monomial(f, &self.vars, m)?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a Expression> for &'a Expression {
    type Output = Expression;
    fn add(self, rhs: &'a Expression) -> Expression {
        self.check_table(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a Expression> for &'a Expression {
    type Output = Expression;
    fn sub(self, rhs: &'a Expression) -> Expression {
        self.check_table(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a Expression> for &'a Expression {
    type Output = Expression;
    fn mul(self, rhs: &'a Expression) -> Expression {
        self.check_table(rhs);
        let mut out = Expression::zero(&self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        self.scale(&-Rational::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: &'a Expression) -> Expression {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}
