//! Periodic 1-D lattice discretization of the bosonized chiral Schwinger
//! model.
//!
//! Derivatives become a circulant difference matrix `D`, the delta function
//! becomes the identity over the spacing, and densities are summed with
//! weight `a`. The site variables use unit symplectic coefficients, so the
//! spacing only enters through `D` and the weight on the Hamiltonian.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::chain::Constraint;
use crate::expr::{Expression, Rational, VarTable};
use crate::linalg::RationalMatrix;
use crate::model::{multiplier_names, FirstOrderModel, PhaseSpace};

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("a lattice needs at least 3 sites, got {0}")]
    TooFewSites(usize),
    #[error("lattice spacing must be positive, got {0}")]
    NonPositiveSpacing(Rational),
    #[error("the central scheme needs an odd number of sites, got {0}")]
    EvenCentral(usize),
    #[error("unknown difference scheme `{0}` (expected `central` or `forward`)")]
    UnknownScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Central,
    Forward,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Central => "central",
            Scheme::Forward => "forward",
        }
    }
}

impl FromStr for Scheme {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "central" => Ok(Scheme::Central),
            "forward" => Ok(Scheme::Forward),
            other => Err(LatticeError::UnknownScheme(other.to_string())),
        }
    }
}

/// A periodic lattice of `sites` points with spacing `spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    sites: usize,
    spacing: Rational,
    scheme: Scheme,
}

impl LatticeSpec {
    /// With the central scheme the site count must be odd: for even `N` the
    /// central difference also annihilates the staggered mode.
    pub fn new(sites: usize, spacing: Rational, scheme: Scheme) -> Result<Self, LatticeError> {
        if sites < 3 {
            return Err(LatticeError::TooFewSites(sites));
        }
        if !spacing.is_positive() {
            return Err(LatticeError::NonPositiveSpacing(spacing));
        }
        if scheme == Scheme::Central && sites.is_multiple_of(2) {
            return Err(LatticeError::EvenCentral(sites));
        }
        Ok(LatticeSpec {
            sites,
            spacing,
            scheme,
        })
    }

    /// Central scheme, unit spacing.
    pub fn unit(sites: usize) -> Result<Self, LatticeError> {
        LatticeSpec::new(sites, Rational::one(), Scheme::Central)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spacing(&self) -> &Rational {
        &self.spacing
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
}

/// Circulant difference matrix; `(D·x)_i` approximates `∂x` at site `i`.
pub fn difference_matrix(spec: &LatticeSpec) -> RationalMatrix {
    let n = spec.sites;
    let mut d = RationalMatrix::zeros(n, n);
    match spec.scheme {
        Scheme::Central => {
            let h = (Rational::from_integer(2.into()) * &spec.spacing).recip();
            for i in 0..n {
                d.set(i, (i + 1) % n, h.clone());
                d.set(i, (i + n - 1) % n, -h.clone());
            }
        }
        Scheme::Forward => {
            let h = spec.spacing.recip();
            for i in 0..n {
                d.set(i, (i + 1) % n, h.clone());
                d.set(i, i, -h.clone());
            }
        }
    }
    d
}

/// Field and momentum names, in phase-space block order.
pub const FIELDS: [&str; 6] = ["A0", "A1", "phi", "pi0", "pi1", "piphi"];

const A0: usize = 0;
const A1: usize = 1;
const PHI: usize = 2;
const PI0: usize = 3;
const E: usize = 4;
const PI: usize = 5;

/// The six site blocks of a lattice phase space together with the
/// difference matrix used to build it.
#[derive(Debug, Clone)]
pub struct FieldSet {
    sites: usize,
    table: Arc<VarTable>,
    d: RationalMatrix,
}

impl FieldSet {
    pub fn new(spec: &LatticeSpec, table: &Arc<VarTable>) -> Self {
        FieldSet {
            sites: spec.sites,
            table: Arc::clone(table),
            d: difference_matrix(spec),
        }
    }

    /// Site variable names: `A0_1 … A0_N, A1_1 …, piphi_N`.
    pub fn names(sites: usize) -> Vec<String> {
        FIELDS
            .iter()
            .flat_map(|f| (1..=sites).map(move |i| format!("{f}_{i}")))
            .collect()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn difference(&self) -> &RationalMatrix {
        &self.d
    }

    /// Table index of field `block` at zero-based site `i`.
    pub fn index(&self, block: usize, i: usize) -> usize {
        block * self.sites + i
    }

    fn var(&self, block: usize, i: usize) -> Expression {
        Expression::var(&self.table, self.index(block, i))
    }

    /// `(D·field)_i`.
    fn diff(&self, block: usize, i: usize) -> Expression {
        let mut v = vec![Rational::zero(); self.table.len() + 1];
        for j in 0..self.sites {
            v[self.index(block, j)] = self.d.get(i, j).clone();
        }
        Expression::from_linear(&self.table, &v)
    }
}

/// Lattice Hamiltonian and primaries `pi0_i`; momenta `pi0, pi1, piphi`
/// pair with `A0, A1, phi` site by site.
pub fn build_schwinger(spec: &LatticeSpec) -> FirstOrderModel {
    let n = spec.sites;
    let zeta = VarTable::new(FieldSet::names(n)).expect("lattice names are valid");
    let mult = VarTable::new(multiplier_names(n)).expect("multiplier names are valid");
    let phase = PhaseSpace::new(zeta, mult).expect("disjoint name sets");
    let t = Arc::clone(phase.table());
    let fs = FieldSet::new(spec, &t);

    let zero = Expression::zero(&t);
    let mut c = vec![zero.clone(); 6 * n];
    for block in 0..3 {
        for i in 0..n {
            c[fs.index(block, i)] = fs.var(block + 3, i);
        }
    }

    let half = Rational::new(1.into(), 2.into());
    let mut density = zero.clone();
    for i in 0..n {
        let e = fs.var(E, i);
        let pi = fs.var(PI, i);
        let dphi = fs.diff(PHI, i);
        let kinetic = &(&e * &e) + &(&(&pi * &pi) + &(&dphi * &dphi));
        let gauss = &e * &fs.diff(A0, i);
        let mass = &(&(&pi + &fs.var(A1, i)) + &dphi) * &(&fs.var(A1, i) - &fs.var(A0, i));
        density = density + kinetic.scale(&half) + gauss + mass;
    }
    let h = density.scale(&spec.spacing);
    let primaries = (0..n).map(|i| fs.var(PI0, i)).collect();
    FirstOrderModel::new(format!("schwinger_n{n}"), phase, c, h, primaries)
        .expect("lattice model is well formed")
}

/// The four per-site constraint families `π⁰`, `D·E + π + D·φ + A1`, `E`,
/// `−π − D·φ − 2A1 + A0`, one list per level.
pub fn expected_constraints(spec: &LatticeSpec, table: &Arc<VarTable>) -> Vec<Vec<Expression>> {
    let fs = FieldSet::new(spec, table);
    let n = spec.sites;
    let two = Rational::from_integer(2.into());
    let level = |f: &dyn Fn(usize) -> Expression| (0..n).map(f).collect::<Vec<_>>();
    vec![
        level(&|i| fs.var(PI0, i)),
        level(&|i| &(&(&fs.diff(E, i) + &fs.var(PI, i)) + &fs.diff(PHI, i)) + &fs.var(A1, i)),
        level(&|i| fs.var(E, i)),
        level(&|i| {
            &(&fs.var(A0, i) - &fs.var(PI, i)) - &(&fs.diff(PHI, i) + &fs.var(A1, i).scale(&two))
        }),
    ]
}

/// One field's contribution at a site: `local·f_i + diff·(D·f)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilTerm {
    pub field: &'static str,
    pub local: Rational,
    pub diff: Rational,
}

/// Per-site reading of a lattice constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteForm {
    /// `Σ terms` at one-based `site`.
    Stencil { site: usize, terms: Vec<StencilTerm> },
    /// Not a single-site stencil pattern.
    Raw(Expression),
}

impl fmt::Display for SiteForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (site, terms) = match self {
            SiteForm::Raw(e) => return write!(f, "{e}"),
            SiteForm::Stencil { site, terms } => (site, terms),
        };
        let mut first = true;
        for t in terms {
            for (k, prefix) in [(&t.local, ""), (&t.diff, "D·")] {
                if k.is_zero() {
                    continue;
                }
                let mag = k.abs();
                if first {
                    if k.is_negative() {
                        write!(f, "-")?;
                    }
                } else {
                    write!(f, " {} ", if k.is_negative() { '-' } else { '+' })?;
                }
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                write!(f, "{prefix}{}", t.field)?;
                first = false;
            }
        }
        write!(f, " at site {site}")
    }
}

/// Reads a constraint as a stencil at a single site, falling back to its
/// raw form.
pub fn map_constraint_to_sites(c: &Constraint, fields: &FieldSet) -> SiteForm {
    describe_sites(&c.expr, fields)
}

/// [`map_constraint_to_sites`] for a bare expression.
pub fn describe_sites(e: &Expression, fields: &FieldSet) -> SiteForm {
    let raw = || SiteForm::Raw(e.clone());
    let n = fields.sites;
    let Some(v) = e.linear_coefficients() else {
        return raw();
    };
    if e.is_zero() || v[6 * n..].iter().any(|x| !x.is_zero()) {
        return raw();
    }
    let d = &fields.d;
    'site: for i in 0..n {
        // D_{i,i+1} is nonzero and e_i vanishes there in both schemes
        let next = (i + 1) % n;
        let mut terms = Vec::new();
        for (block, name) in FIELDS.iter().enumerate() {
            let coeffs = &v[block * n..(block + 1) * n];
            let diff = &coeffs[next] / d.get(i, next);
            let local = &coeffs[i] - &diff * d.get(i, i);
            for (j, c) in coeffs.iter().enumerate() {
                let want = &diff * d.get(i, j) + if j == i { local.clone() } else { Rational::zero() };
                if *c != want {
                    continue 'site;
                }
            }
            if !local.is_zero() || !diff.is_zero() {
                terms.push(StencilTerm {
                    field: name,
                    local,
                    diff,
                });
            }
        }
        return SiteForm::Stencil { site: i + 1, terms };
    }
    raw()
}
