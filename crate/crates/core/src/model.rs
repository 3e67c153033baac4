//! Phase space and first-order Lagrangian data `L = c_α(ζ) ζ̇^α − H(ζ)`,
//! a Legendre front-end for velocity-quadratic Lagrangians, and the
//! line-oriented model file format.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{ExprError, Expression, LinearSpan, Rational, VarTable};
use crate::linalg::RationalMatrix;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}, byte {offset}: {source}")]
    Expression {
        line: usize,
        offset: usize,
        #[source]
        source: ExprError,
    },
    #[error("invalid model: {0}")]
    Invariant(String),
    #[error("velocity Hessian is not constant: {0}")]
    NonConstantHessian(String),
    #[error("Lagrangian is more than quadratic in velocities")]
    NotQuadratic,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
}

/// Coordinates `ζ^α`, Lagrange multipliers `λ^μ`, and the auxiliary `ξ`
/// names added as a chain grows.
///
/// All polynomials of a model live over [`PhaseSpace::table`], which lists
/// the ζ names followed by the multiplier names.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpace {
    zeta: VarTable,
    multipliers: VarTable,
    xi: Vec<String>,
    table: Arc<VarTable>,
}

impl PhaseSpace {
    pub fn new(zeta: VarTable, multipliers: VarTable) -> Result<Self, ModelError> {
        if zeta.is_empty() {
            return Err(ModelError::Invariant("phase space has no coordinates".into()));
        }
        let table = zeta.concat(&multipliers).map_err(|e| match e {
            ExprError::DuplicateName(n) => {
                ModelError::Invariant(format!("multiplier name `{n}` clashes with a coordinate"))
            }
            other => other.into(),
        })?;
        Ok(PhaseSpace {
            zeta,
            multipliers,
            xi: Vec::new(),
            table: Arc::new(table),
        })
    }

    pub fn zeta(&self) -> &VarTable {
        &self.zeta
    }

    pub fn multipliers(&self) -> &VarTable {
        &self.multipliers
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_multiplier(&self, index: usize) -> bool {
        index >= self.zeta.len()
    }

    pub fn xi(&self) -> &[String] {
        &self.xi
    }

    /// Registers `count` auxiliary names for chain level `level` and returns
    /// them. A single constraint gets `xi<level>`, a block gets
    /// `xi<level>_<k>`.
    pub fn register_xi(&mut self, level: usize, count: usize) -> Vec<String> {
        let names: Vec<String> = if count == 1 {
            vec![format!("xi{level}")]
        } else {
            (1..=count).map(|k| format!("xi{level}_{k}")).collect()
        };
        self.xi.extend(names.iter().cloned());
        names
    }
}

/// A constrained system in first-order form.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderModel {
    name: String,
    phase: PhaseSpace,
    c: Vec<Expression>,
    hamiltonian: Expression,
    primaries: Vec<Expression>,
}

/// Multiplier names `lambda1, lambda2, …`.
pub(crate) fn multiplier_names(count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("lambda{k}")).collect()
}

impl FirstOrderModel {
    /// Builds and validates a model from already-constructed expressions over
    /// `phase.table()`.
    pub fn new(
        name: impl Into<String>,
        phase: PhaseSpace,
        c: Vec<Expression>,
        hamiltonian: Expression,
        primaries: Vec<Expression>,
    ) -> Result<Self, ModelError> {
        let model = FirstOrderModel {
            name: name.into(),
            phase,
            c,
            hamiltonian,
            primaries,
        };
        model.validate()?;
        Ok(model)
    }

    /// Parses the pieces of a first-order model from text. Multipliers are
    /// named `lambda1..lambdaM`, one per primary.
    pub fn from_strings(
        name: &str,
        zeta: &[&str],
        c: &[&str],
        hamiltonian: &str,
        primaries: &[&str],
    ) -> Result<Self, ModelError> {
        let zeta = VarTable::new(zeta.iter().copied())?;
        let phase = PhaseSpace::new(zeta, VarTable::new(multiplier_names(primaries.len()))?)?;
        let t = Arc::clone(phase.table());
        let c = c
            .iter()
            .map(|s| Expression::parse(s, &t))
            .collect::<Result<_, _>>()?;
        let h = Expression::parse(hamiltonian, &t)?;
        let primaries = primaries
            .iter()
            .map(|s| Expression::parse(s, &t))
            .collect::<Result<_, _>>()?;
        FirstOrderModel::new(name, phase, c, h, primaries)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let t = self.phase.table();
        let n = self.phase.dim();
        if self.c.len() != n {
            return Err(ModelError::Invariant(format!(
                "{} coefficients c_α for {} coordinates",
                self.c.len(),
                n
            )));
        }
        if self.primaries.len() != self.phase.multipliers().len() {
            return Err(ModelError::Invariant(format!(
                "{} primaries but {} multipliers",
                self.primaries.len(),
                self.phase.multipliers().len()
            )));
        }
        let all = self
            .c
            .iter()
            .map(|e| ("c", e))
            .chain(std::iter::once(("H", &self.hamiltonian)))
            .chain(self.primaries.iter().map(|e| ("primary", e)));
        for (what, e) in all {
            if **e.vars() != **t {
                return Err(ModelError::Invariant(format!(
                    "{what} `{e}` is over a foreign variable table"
                )));
            }
            if let Some(i) = e.support().into_iter().find(|&i| self.phase.is_multiplier(i)) {
                return Err(ModelError::Invariant(format!(
                    "{what} `{e}` depends on multiplier `{}`",
                    t.name(i)
                )));
            }
        }
        for (i, p) in self.primaries.iter().enumerate() {
            if p.is_zero() {
                return Err(ModelError::Invariant("primary constraint is zero".into()));
            }
            if let Some(q) = self.primaries[..i].iter().find(|q| q.proportional_to(p)) {
                return Err(ModelError::Invariant(format!(
                    "primary constraints `{q}` and `{p}` are linearly dependent"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phase(&self) -> &PhaseSpace {
        &self.phase
    }

    pub fn table(&self) -> &Arc<VarTable> {
        self.phase.table()
    }

    pub fn dim(&self) -> usize {
        self.phase.dim()
    }

    pub fn c(&self) -> &[Expression] {
        &self.c
    }

    pub fn hamiltonian(&self) -> &Expression {
        &self.hamiltonian
    }

    pub fn primaries(&self) -> &[Expression] {
        &self.primaries
    }

    /// `H_T = H_C + Σ λ_μ φ^(1)_μ`, formed on demand.
    pub fn total_hamiltonian(&self) -> Expression {
        let t = self.table();
        let n = self.dim();
        self.primaries
            .iter()
            .enumerate()
            .fold(self.hamiltonian.clone(), |acc, (mu, phi)| {
                acc + &Expression::var(t, n + mu) * phi
            })
    }

    /// Same model under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Reads a model file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        load_model(path)
    }

    /// Writes the model in first-order form.
    pub fn to_model_string(&self) -> String {
        save_model(self)
    }
}

/// A Lagrangian `L(q, q̇)` at most quadratic in the velocities. Velocity
/// names are generated as `<q>dot`.
#[derive(Debug, Clone)]
pub struct SecondOrderLagrangian {
    coordinates: VarTable,
    table: Arc<VarTable>,
    lagrangian: Expression,
}

impl SecondOrderLagrangian {
    pub fn new(coordinates: VarTable, lagrangian: &str) -> Result<Self, ModelError> {
        let table = Arc::new(Self::velocity_table(&coordinates)?);
        let lagrangian = Expression::parse(lagrangian, &table)?;
        Self::from_expression(coordinates, lagrangian)
    }

    fn velocity_table(coordinates: &VarTable) -> Result<VarTable, ModelError> {
        let dots = VarTable::new(coordinates.names().iter().map(|q| format!("{q}dot")))?;
        coordinates.concat(&dots).map_err(|e| match e {
            ExprError::DuplicateName(n) => {
                ModelError::Invariant(format!("velocity name `{n}` clashes with a coordinate"))
            }
            other => other.into(),
        })
    }

    fn from_expression(coordinates: VarTable, lagrangian: Expression) -> Result<Self, ModelError> {
        let n = coordinates.len();
        if lagrangian.degree_in_set(|i| i >= n) > 2 {
            return Err(ModelError::NotQuadratic);
        }
        Ok(SecondOrderLagrangian {
            table: Arc::clone(lagrangian.vars()),
            coordinates,
            lagrangian,
        })
    }

    pub fn coordinates(&self) -> &VarTable {
        &self.coordinates
    }

    pub fn lagrangian(&self) -> &Expression {
        &self.lagrangian
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }
}

/// Legendre transform of a velocity-quadratic Lagrangian.
///
/// With `L = ½ q̇ᵀ W q̇ + b(q)·q̇ − V(q)` and `W` constant, the momenta are
/// `p = W q̇ + b`. Each left null vector `u` of `W` yields the primary
/// constraint `u·(p − b)`. On a maximal independent row set `P` of the
/// symmetric `W` the principal block `W_PP` is invertible, and
/// `H_C = ½ (p − b)_Pᵀ W_PP⁻¹ (p − b)_P + V`.
pub fn legendre_transform(l: &SecondOrderLagrangian, name: &str) -> Result<FirstOrderModel, ModelError> {
    let q = l.coordinates();
    let n = q.len();
    let lt = l.table();
    let is_vel = |i: usize| i >= n;

    let mut w = RationalMatrix::zeros(n, n);
    let mut b = vec![Expression::zero(lt); n];
    let mut potential = Expression::zero(lt);
    for (m, coeff) in l.lagrangian().terms() {
        let exps = m.exponents();
        let vel: Vec<usize> = (n..2 * n).filter(|&i| exps[i] > 0).collect();
        let vdeg: u32 = vel.iter().map(|&i| exps[i]).sum();
        let mut rest = exps.to_vec();
        for &i in &vel {
            rest[i] = 0;
        }
        let rest_is_one = rest.iter().all(|&e| e == 0);
        let mono = monomial_expr(lt, &rest, coeff.clone());
        match vdeg {
            0 => potential = potential - &mono,
            1 => b[vel[0] - n] = &b[vel[0] - n] + &mono,
            2 => {
                if !rest_is_one {
                    return Err(ModelError::NonConstantHessian(l.lagrangian().to_string()));
                }
                if vel.len() == 1 {
                    let i = vel[0] - n;
                    let v = w.get(i, i) + coeff * Rational::from_integer(2.into());
                    w.set(i, i, v);
                } else {
                    let (i, j) = (vel[0] - n, vel[1] - n);
                    let v = w.get(i, j) + coeff;
                    w.set(i, j, v.clone());
                    w.set(j, i, v);
                }
            }
            _ => return Err(ModelError::NotQuadratic),
        }
    }
    debug_assert!(b.iter().chain([&potential]).all(|e| e.degree_in_set(is_vel) == 0));

    let zeta_names: Vec<String> = q
        .names()
        .iter()
        .cloned()
        .chain(q.names().iter().map(|s| format!("p_{s}")))
        .collect();
    let zeta = VarTable::new(zeta_names).map_err(|e| match e {
        ExprError::DuplicateName(d) => {
            ModelError::Invariant(format!("momentum name `{d}` clashes with a coordinate"))
        }
        other => other.into(),
    })?;

    let null = w.left_null_space();
    let phase = PhaseSpace::new(zeta, VarTable::new(multiplier_names(null.len()))?)?;
    let t = Arc::clone(phase.table());
    let b: Vec<Expression> = b.iter().map(|e| e.remap(&t)).collect::<Result<_, _>>()?;
    let shifted: Vec<Expression> = (0..n)
        .map(|i| &Expression::var(&t, n + i) - &b[i])
        .collect();

    let primaries = null
        .vectors()
        .iter()
        .map(|u| {
            u.iter()
                .zip(&shifted)
                .fold(Expression::zero(&t), |acc, (ui, s)| acc + s.scale(ui))
        })
        .collect();

    let (_, rows) = w.transpose().rref();
    let mut h = potential.remap(&t)?;
    if !rows.is_empty() {
        let k = rows.len();
        let mut block = RationalMatrix::zeros(k, k);
        for (a, &i) in rows.iter().enumerate() {
            for (c, &j) in rows.iter().enumerate() {
                block.set(a, c, w.get(i, j).clone());
            }
        }
        let inv = invert(&block);
        let half = Rational::new(1.into(), 2.into());
        for (a, &i) in rows.iter().enumerate() {
            for (c, &j) in rows.iter().enumerate() {
                let k = inv.get(a, c) * &half;
                if !k.is_zero() {
                    h = h + (&shifted[i] * &shifted[j]).scale(&k);
                }
            }
        }
    }

    let c = (0..2 * n)
        .map(|i| {
            if i < n {
                Expression::var(&t, n + i)
            } else {
                Expression::zero(&t)
            }
        })
        .collect();
    FirstOrderModel::new(name, phase, c, h, primaries)
}

fn monomial_expr(t: &Arc<VarTable>, exps: &[u32], coeff: Rational) -> Expression {
    exps.iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .fold(Expression::constant(t, coeff), |acc, (i, &e)| {
            acc * Expression::var(t, i).pow(e)
        })
}

/// Inverse of a nonsingular square matrix by Gauss–Jordan on `[A | I]`.
fn invert(a: &RationalMatrix) -> RationalMatrix {
    let n = a.rows();
    let mut aug = RationalMatrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, n + i, Rational::one());
    }
    let (r, pivots) = aug.rref();
    assert_eq!(pivots, (0..n).collect::<Vec<_>>(), "singular block");
    let mut inv = RationalMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, r.get(i, n + j).clone());
        }
    }
    inv
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Splits a `c` line into entries: on commas if any are present, otherwise
/// on whitespace.
fn split_entries(rest: &str) -> Vec<(usize, &str)> {
    let base = rest.as_ptr() as usize;
    let offset = |s: &str| s.as_ptr() as usize - base;
    if rest.contains(',') {
        rest.split(',')
            .map(|s| {
                let trimmed = s.trim_start();
                (offset(trimmed), trimmed.trim_end())
            })
            .collect()
    } else {
        rest.split_whitespace().map(|s| (offset(s), s)).collect()
    }
}

/// Parses the model file format.
///
/// ```text
/// model   example2
/// vars    x y z                 # second-order form with
/// L       xdot*ydot - z*(x+y)
///
/// zeta    x y z p_x p_y p_z     # or first-order form with
/// c       p_x p_y p_z 0 0 0
/// H       p_x*p_y + z*(x+y)
/// primary p_z
/// ```
pub fn parse_model(text: &str, default_name: &str) -> Result<FirstOrderModel, ModelError> {
    struct Line<'a> {
        no: usize,
        rest: &'a str,
        col: usize,
    }
    let mut name: Option<String> = None;
    let mut vars: Option<Line> = None;
    let mut zeta: Option<Line> = None;
    let mut lag: Option<Line> = None;
    let mut c: Option<Line> = None;
    let mut h: Option<Line> = None;
    let mut primaries: Vec<Line> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let kw_end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let kw = &trimmed[..kw_end];
        let after = &trimmed[kw_end..];
        let rest_trim = after.trim_start();
        let col = line.len() - rest_trim.len();
        let entry = Line {
            no,
            rest: rest_trim.trim_end(),
            col,
        };
        let dup = |slot: &Option<Line>| -> Result<(), ModelError> {
            if slot.is_some() {
                Err(ModelError::Parse {
                    line: no,
                    message: format!("duplicate `{kw}` line"),
                })
            } else {
                Ok(())
            }
        };
        match kw {
            "model" => {
                if name.is_some() {
                    return Err(ModelError::Parse {
                        line: no,
                        message: "duplicate `model` line".into(),
                    });
                }
                let n = entry.rest.trim();
                if n.is_empty() || n.contains(char::is_whitespace) {
                    return Err(ModelError::Parse {
                        line: no,
                        message: "model name must be a single word".into(),
                    });
                }
                name = Some(n.to_string());
            }
            "vars" => {
                dup(&vars)?;
                vars = Some(entry);
            }
            "zeta" => {
                dup(&zeta)?;
                zeta = Some(entry);
            }
            "L" => {
                dup(&lag)?;
                lag = Some(entry);
            }
            "c" => {
                dup(&c)?;
                c = Some(entry);
            }
            "H" => {
                dup(&h)?;
                h = Some(entry);
            }
            "primary" => primaries.push(entry),
            other => {
                return Err(ModelError::Parse {
                    line: no,
                    message: format!("unknown keyword `{other}`"),
                })
            }
        }
    }

    let name = name.unwrap_or_else(|| default_name.to_string());
    let names_of = |l: &Line| -> Result<VarTable, ModelError> {
        VarTable::new(l.rest.split_whitespace()).map_err(|e| match e {
            ExprError::DuplicateName(d) => ModelError::Invariant(format!(
                "line {}: duplicate variable name `{d}`",
                l.no
            )),
            other => ModelError::Parse {
                line: l.no,
                message: other.to_string(),
            },
        })
    };
    let expr_at = |l: &Line, text: &str, extra: usize, t: &Arc<VarTable>| {
        Expression::parse(text, t).map_err(|source| {
            let inner = match &source {
                ExprError::Syntax { offset, .. }
                | ExprError::UnknownVariable { offset, .. }
                | ExprError::BadExponent { offset }
                | ExprError::BadDivision { offset } => *offset,
                _ => 0,
            };
            ModelError::Expression {
                line: l.no,
                offset: l.col + extra + inner,
                source,
            }
        })
    };

    match (lag, c, h) {
        (Some(l), None, None) => {
            if zeta.is_some() || !primaries.is_empty() {
                return Err(ModelError::Parse {
                    line: l.no,
                    message: "second-order form takes `vars` and `L` only".into(),
                });
            }
            let v = vars.ok_or_else(|| ModelError::Parse {
                line: l.no,
                message: "`L` requires a `vars` line".into(),
            })?;
            let coords = names_of(&v)?;
            let table = Arc::new(SecondOrderLagrangian::velocity_table(&coords)?);
            let lexpr = expr_at(&l, l.rest, 0, &table)?;
            let sol = SecondOrderLagrangian::from_expression(coords, lexpr)?;
            legendre_transform(&sol, &name)
        }
        (None, Some(cl), Some(hl)) => {
            if vars.is_some() {
                return Err(ModelError::Parse {
                    line: cl.no,
                    message: "first-order form takes `zeta`, not `vars`".into(),
                });
            }
            let z = zeta.ok_or_else(|| ModelError::Parse {
                line: cl.no,
                message: "first-order form requires a `zeta` line".into(),
            })?;
            let zt = names_of(&z)?;
            let phase = PhaseSpace::new(zt, VarTable::new(multiplier_names(primaries.len()))?)?;
            let t = Arc::clone(phase.table());
            let mut cs = Vec::new();
            for (off, s) in split_entries(cl.rest) {
                cs.push(expr_at(&cl, s, off, &t)?);
            }
            let hexpr = expr_at(&hl, hl.rest, 0, &t)?;
            let mut prims = Vec::new();
            for p in &primaries {
                prims.push(expr_at(p, p.rest, 0, &t)?);
            }
            FirstOrderModel::new(name, phase, cs, hexpr, prims)
        }
        (None, None, None) => Err(ModelError::Parse {
            line: 0,
            message: "model needs either `L` or both `c` and `H`".into(),
        }),
        (Some(l), _, _) => Err(ModelError::Parse {
            line: l.no,
            message: "`L` cannot be combined with `c`/`H`".into(),
        }),
        (None, Some(cl), None) => Err(ModelError::Parse {
            line: cl.no,
            message: "`c` given without `H`".into(),
        }),
        (None, None, Some(hl)) => Err(ModelError::Parse {
            line: hl.no,
            message: "`H` given without `c`".into(),
        }),
    }
}

/// Loads a model file; the default model name is the file stem.
pub fn load_model(path: impl AsRef<Path>) -> Result<FirstOrderModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("model");
    parse_model(&text, stem)
}

/// Serializes a model in first-order form.
pub fn save_model(m: &FirstOrderModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", m.name());
    let _ = writeln!(out, "zeta {}", m.phase().zeta().names().join(" "));
    let cs: Vec<String> = m.c().iter().map(|e| e.to_string()).collect();
    let sep = if cs.iter().any(|s| s.contains(' ')) { ", " } else { " " };
    let _ = writeln!(out, "c {}", cs.join(sep));
    let _ = writeln!(out, "H {}", m.hamiltonian());
    for p in m.primaries() {
        let _ = writeln!(out, "primary {p}");
    }
    out
}

/// Writes [`save_model`] output to `path`.
pub fn write_model(m: &FirstOrderModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, save_model(m))?;
    Ok(())
}

/// Checks that the primaries span a space of full dimension (the loader only
/// rejects pairwise proportional ones).
pub fn primaries_independent(m: &FirstOrderModel) -> Result<bool, ExprError> {
    let span = LinearSpan::from_exprs(m.table(), m.primaries())?;
    Ok(span.dim() == m.primaries().len())
}
