//! Symplectic constraint chain.
//!
//! Starting from the primary constraints, each step assembles the extended
//! symplectic matrix
//!
//! ```text
//!         ζ        ξ_1      …   ξ_k
//! ζ   (   f       A1ᵀ      …   Akᵀ )
//! ξ_1 (  -A1       0       …    0  )
//! …   (   …                        )
//! ξ_k (  -Ak       0       …    0  )
//! ```
//!
//! with `f_αβ = ∂_α c_β − ∂_β c_α` and `(A_γ)_μα = ∂_α φ^(γ)_μ`, contracts its
//! left null vectors with the right-hand side `(∂H_T, 0, …, 0)` and keeps the
//! contractions that are new constraints. When the full matrix yields
//! nothing new but is still singular, the ξ-columns beyond the first block
//! are dropped and the extraction is retried on the truncated matrix.

use std::sync::Arc;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{ExprError, Expression, LinearSpan, Rational, VarTable};
use crate::linalg::{random_point, LinalgError, NullBasis, PolyMatrix, RationalMatrix};
use crate::model::FirstOrderModel;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("constraint level {0} is missing")]
    MissingLevel(usize),
    #[error("cannot decide whether `{candidate}` is a new constraint: reduction against nonlinear constraints is not supported")]
    NonlinearReduction { candidate: String },
    #[error("extended symplectic matrix at level {0} is not antisymmetric")]
    NotAntisymmetric(usize),
    #[error("max_level must be at least 1")]
    BadMaxLevel,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Primary,
    NullVector,
    TruncatedNullVector,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Primary => "primary",
            Origin::NullVector => "null-vector",
            Origin::TruncatedNullVector => "truncated-null-vector",
        }
    }
}

/// One constraint `φ^(γ)` of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub level: usize,
    /// Monic normal form of `raw`.
    pub expr: Expression,
    /// The constraint as generated (`v · rhs`, or the primary as given).
    /// The border blocks of the extended matrix are built from this form.
    pub raw: Expression,
    pub origin: Origin,
    pub generator: Option<Vec<Rational>>,
}

impl Constraint {
    pub fn new(level: usize, raw: Expression, origin: Origin, generator: Option<Vec<Rational>>) -> Self {
        Constraint {
            level,
            expr: raw.monic(),
            raw,
            origin,
            generator,
        }
    }
}

/// Which ξ-blocks keep their columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// All ξ columns present; the matrix is square.
    Full,
    /// Keep the ξ columns of blocks `1..=n` only; every row stays.
    KeepBlocks(usize),
}

impl Truncation {
    /// The standard rule: keep only the ξ₁ columns.
    pub const FIRST_BLOCK: Truncation = Truncation::KeepBlocks(1);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncateMode {
    /// Drop the ξ columns of every block after the first.
    #[default]
    FirstBlock,
    /// Drop trailing ξ blocks one at a time until something new appears.
    Iterative,
}

/// `F^(k)` (or its truncation) with row and column labels.
#[derive(Debug, Clone)]
pub struct ExtendedSymplecticMatrix {
    pub level: usize,
    pub truncation: Truncation,
    pub matrix: PolyMatrix,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Number of constraints in each level block.
    pub block_sizes: Vec<usize>,
}

impl ExtendedSymplecticMatrix {
    pub fn is_truncated(&self) -> bool {
        matches!(self.truncation, Truncation::KeepBlocks(n) if n < self.block_sizes.len())
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn constant(&self) -> Option<RationalMatrix> {
        self.matrix.to_constant()
    }
}

/// `f_αβ = ∂_α c_β − ∂_β c_α`.
pub fn build_base_tensor(m: &FirstOrderModel) -> PolyMatrix {
    let n = m.dim();
    let t = m.table();
    let mut f = PolyMatrix::zeros(n, n, t);
    for a in 0..n {
        for b in (a + 1)..n {
            let e = &m.c()[b].derivative(a) - &m.c()[a].derivative(b);
            f.set(b, a, -&e);
            f.set(a, b, e);
        }
    }
    f
}

fn xi_labels(level: usize, count: usize) -> Vec<String> {
    if count == 1 {
        vec![format!("xi{level}")]
    } else {
        (1..=count).map(|k| format!("xi{level}_{k}")).collect()
    }
}

/// Assembles `F^(k)` from the constraint blocks of levels `1..=k`.
///
/// `levels[γ-1]` holds the raw expressions of level `γ`. The `(ζ, ξ_γ)` block
/// is `+A_γᵀ`, the `(ξ_γ, ζ)` block is `−A_γ`, and ξ–ξ blocks vanish. Under
/// [`Truncation::KeepBlocks`] only the listed ξ column blocks are kept.
pub fn assemble_f(
    m: &FirstOrderModel,
    levels: &[Vec<Expression>],
    k: usize,
    truncation: Truncation,
) -> Result<ExtendedSymplecticMatrix, ChainError> {
    if levels.len() < k {
        return Err(ChainError::MissingLevel(levels.len() + 1));
    }
    if let Some(g) = levels[..k].iter().position(Vec::is_empty) {
        return Err(ChainError::MissingLevel(g + 1));
    }
    let n = m.dim();
    let t = m.table();
    let f = build_base_tensor(m);
    let block_sizes: Vec<usize> = levels[..k].iter().map(Vec::len).collect();
    let kept = match truncation {
        Truncation::Full => k,
        Truncation::KeepBlocks(b) => b.min(k),
    };
    let border_rows: usize = block_sizes.iter().sum();
    let border_cols: usize = block_sizes[..kept].iter().sum();
    let rows = n + border_rows;
    let cols = n + border_cols;

    let mut mat = PolyMatrix::zeros(rows, cols, t);
    for a in 0..n {
        for b in 0..n {
            mat.set(a, b, f.get(a, b).clone());
        }
    }
    let mut row_labels: Vec<String> = m.phase().zeta().names().to_vec();
    let mut col_labels = row_labels.clone();
    let mut offset = n;
    for (g, block) in levels[..k].iter().enumerate() {
        let labels = xi_labels(g + 1, block.len());
        for (mu, phi) in block.iter().enumerate() {
            let r = offset + mu;
            for a in 0..n {
                let d = phi.derivative(a);
                if d.is_zero() {
                    continue;
                }
                if g < kept {
                    mat.set(a, r, d.clone());
                }
                mat.set(r, a, -&d);
            }
        }
        row_labels.extend(labels.iter().cloned());
        if g < kept {
            col_labels.extend(labels);
        }
        offset += block.len();
    }
    Ok(ExtendedSymplecticMatrix {
        level: k,
        truncation,
        matrix: mat,
        row_labels,
        col_labels,
        block_sizes,
    })
}

/// Right-hand side `(∂H_T/∂ζ, 0, …, 0)` with `border_rows` trailing zeros.
pub fn assemble_rhs(m: &FirstOrderModel, border_rows: usize) -> Vec<Expression> {
    let ht = m.total_hamiltonian();
    let t = m.table();
    (0..m.dim())
        .map(|a| ht.derivative(a))
        .chain(std::iter::repeat_with(|| Expression::zero(t)).take(border_rows))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateClass {
    New,
    MultiplierFixing,
    Redundant,
}

impl CandidateClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateClass::New => "new",
            CandidateClass::MultiplierFixing => "multiplier-fixing",
            CandidateClass::Redundant => "redundant",
        }
    }
}

/// A null vector and its contraction with the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub vector: Vec<Rational>,
    pub value: Expression,
    pub class: CandidateClass,
}

/// Membership oracle for "is this candidate new?" over a growing set.
#[derive(Debug, Clone)]
pub struct KnownConstraints {
    span: LinearSpan,
    has_nonlinear: bool,
}

impl KnownConstraints {
    pub fn new<'a>(
        vars: &Arc<VarTable>,
        existing: impl IntoIterator<Item = &'a Expression>,
    ) -> Self {
        let mut k = KnownConstraints {
            span: LinearSpan::new(vars),
            has_nonlinear: false,
        };
        for e in existing {
            k.push(e);
        }
        k
    }

    fn push(&mut self, e: &Expression) {
        if e.is_linear() {
            self.span.insert(e).expect("linear");
        } else {
            self.has_nonlinear = true;
        }
    }

    /// Classifies `value` and, when it is new, adds it to the set.
    pub fn classify(
        &mut self,
        value: &Expression,
        is_multiplier: impl Fn(usize) -> bool,
    ) -> Result<CandidateClass, ChainError> {
        if value.is_zero() {
            return Ok(CandidateClass::Redundant);
        }
        if value.support().into_iter().any(is_multiplier) {
            return Ok(CandidateClass::MultiplierFixing);
        }
        if self.has_nonlinear {
            return Err(ChainError::NonlinearReduction {
                candidate: value.to_string(),
            });
        }
        if !value.is_linear() {
            // a nonlinear polynomial never lies in a linear span
            self.has_nonlinear = true;
            return Ok(CandidateClass::New);
        }
        if self.span.insert(value)? {
            Ok(CandidateClass::New)
        } else {
            Ok(CandidateClass::Redundant)
        }
    }
}

/// Contracts every canonical left null vector of `f` with `rhs` and
/// classifies the result against `existing` constraints. Candidates are
/// processed in basis order, so of several mutually dependent new
/// candidates only the first counts as new.
pub fn find_new_constraints(
    m: &FirstOrderModel,
    f: &RationalMatrix,
    rhs: &[Expression],
    existing: &[Expression],
) -> Result<(NullBasis, Vec<Candidate>), ChainError> {
    if rhs.len() != f.rows() {
        return Err(LinalgError::Mismatch(format!(
            "rhs has {} entries for {} rows",
            rhs.len(),
            f.rows()
        ))
        .into());
    }
    let basis = f.left_null_space();
    let mut known = KnownConstraints::new(m.table(), existing);
    let phase = m.phase();
    let mut out = Vec::with_capacity(basis.len());
    for v in basis.vectors() {
        let value = contract(v, rhs, m.table());
        let class = known.classify(&value, |i| phase.is_multiplier(i))?;
        out.push(Candidate {
            vector: v.clone(),
            value,
            class,
        });
    }
    Ok((basis, out))
}

fn contract(v: &[Rational], rhs: &[Expression], t: &Arc<VarTable>) -> Expression {
    v.iter()
        .zip(rhs)
        .filter(|(c, _)| !c.is_zero())
        .fold(Expression::zero(t), |acc, (c, e)| acc + e.scale(c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOptions {
    pub max_level: usize,
    pub allow_truncation: bool,
    pub truncate: TruncateMode,
    /// Seed for the generic evaluation point used when a matrix has
    /// non-constant entries.
    pub seed: u64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            max_level: 12,
            allow_truncation: true,
            truncate: TruncateMode::FirstBlock,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// `F^(level)` is square and non-singular.
    Nonsingular { level: usize, determinant: Rational },
    /// `F^(level)` is singular and neither it nor its truncations give a
    /// new constraint.
    Exhausted { level: usize },
    /// A new constraint would exceed the configured maximum level.
    MaxLevelReached { level: usize },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Nonsingular { .. } => "nonsingular",
            Termination::Exhausted { .. } => "exhausted",
            Termination::MaxLevelReached { .. } => "max-level-reached",
        }
    }
}

/// A null vector recorded during the run.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRecord {
    /// Level `k` of the matrix `F^(k)` it was extracted from.
    pub level: usize,
    pub truncation: Truncation,
    pub vector: Vec<Rational>,
    pub value: Expression,
    pub class: CandidateClass,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub model: String,
    pub zeta: Vec<String>,
    pub multipliers: Vec<String>,
    pub xi: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub eigenvectors: Vec<EigenRecord>,
    /// Levels at which a truncated matrix was consulted.
    pub truncations: Vec<usize>,
    pub termination: Termination,
    /// Set when some matrix had non-constant entries and was evaluated at a
    /// random point.
    pub generic: bool,
    pub warnings: Vec<String>,
    pub(crate) table: Arc<VarTable>,
}

impl ChainReport {
    pub fn levels(&self) -> usize {
        self.constraints.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn at_level(&self, level: usize) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.level == level)
    }

    pub fn exprs(&self) -> Vec<Expression> {
        self.constraints.iter().map(|c| c.expr.clone()).collect()
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    /// Reduced row-echelon basis of the constraint span; identical for any
    /// two chains with the same span. `None` if a constraint is nonlinear.
    pub fn span_fingerprint(&self) -> Option<Vec<Expression>> {
        LinearSpan::from_exprs(&self.table, self.constraints.iter().map(|c| &c.expr))
            .ok()
            .map(|s| s.basis())
    }

    pub fn determinant(&self) -> Option<&Rational> {
        match &self.termination {
            Termination::Nonsingular { determinant, .. } => Some(determinant),
            _ => None,
        }
    }
}

struct Numeric {
    matrix: RationalMatrix,
    generic: bool,
}

fn numeric(esm: &ExtendedSymplecticMatrix, seed: u64) -> Numeric {
    match esm.constant() {
        Some(matrix) => Numeric {
            matrix,
            generic: false,
        },
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ esm.level as u64);
            let point = random_point(&mut rng, esm.matrix.vars().len(), 2);
            Numeric {
                matrix: esm.matrix.evaluate_at(&point),
                generic: true,
            }
        }
    }
}

/// Runs the chain to termination.
pub fn run_chain(m: &FirstOrderModel, opts: &ChainOptions) -> Result<ChainReport, ChainError> {
    if opts.max_level == 0 {
        return Err(ChainError::BadMaxLevel);
    }
    let t = m.table();
    let mut phase = m.phase().clone();
    let mut constraints: Vec<Constraint> = m
        .primaries()
        .iter()
        .map(|p| Constraint::new(1, p.clone(), Origin::Primary, None))
        .collect();
    let mut eigenvectors = Vec::new();
    let mut truncations = Vec::new();
    let mut generic = false;
    let mut warnings = Vec::new();

    let blocks = |cs: &[Constraint]| -> Vec<Vec<Expression>> {
        let top = cs.iter().map(|c| c.level).max().unwrap_or(0);
        (1..=top)
            .map(|g| cs.iter().filter(|c| c.level == g).map(|c| c.raw.clone()).collect())
            .collect()
    };

    let termination = loop {
        let levels = blocks(&constraints);
        let k = levels.len();
        let existing: Vec<Expression> = constraints.iter().map(|c| c.raw.clone()).collect();
        let full = assemble_f(m, &levels, k, Truncation::Full)?;
        if !full.matrix.is_antisymmetric() {
            return Err(ChainError::NotAntisymmetric(k));
        }
        let num = numeric(&full, opts.seed);
        generic |= num.generic;
        let rhs = assemble_rhs(m, full.rows() - m.dim());
        let (basis, cands) = find_new_constraints(m, &num.matrix, &rhs, &existing)?;
        record(&mut eigenvectors, k, Truncation::Full, &cands);

        let mut fresh = accepted(&cands, k + 1, Origin::NullVector);
        if fresh.is_empty() && basis.is_empty() {
            let determinant = num.matrix.determinant()?;
            debug_assert!(!determinant.is_zero());
            break Termination::Nonsingular { level: k, determinant };
        }
        if fresh.is_empty() && opts.allow_truncation && k >= 2 {
            truncations.push(k);
            let attempts: Vec<usize> = match opts.truncate {
                TruncateMode::FirstBlock => vec![1],
                TruncateMode::Iterative => (1..k).rev().collect(),
            };
            for keep in attempts {
                let tr = Truncation::KeepBlocks(keep);
                let esm = assemble_f(m, &levels, k, tr)?;
                let num = numeric(&esm, opts.seed);
                generic |= num.generic;
                let (_, cands) = find_new_constraints(m, &num.matrix, &rhs, &existing)?;
                record(&mut eigenvectors, k, tr, &cands);
                fresh = accepted(&cands, k + 1, Origin::TruncatedNullVector);
                if !fresh.is_empty() {
                    break;
                }
            }
        }
        if fresh.is_empty() {
            warnings.push(format!(
                "F^({k}) is singular but yields no new constraint; the chain may be incomplete or contain first-class constraints"
            ));
            break Termination::Exhausted { level: k };
        }
        if k + 1 > opts.max_level {
            break Termination::MaxLevelReached { level: k };
        }
        constraints.extend(fresh);
    };

    for (g, block) in blocks(&constraints).iter().enumerate() {
        phase.register_xi(g + 1, block.len());
    }
    if generic {
        warnings.push("some matrices had non-constant entries; null spaces were computed at a generic point".into());
    }
    Ok(ChainReport {
        model: m.name().to_string(),
        zeta: m.phase().zeta().names().to_vec(),
        multipliers: m.phase().multipliers().names().to_vec(),
        xi: phase.xi().to_vec(),
        constraints,
        eigenvectors,
        truncations,
        termination,
        generic,
        warnings,
        table: Arc::clone(t),
    })
}

fn record(out: &mut Vec<EigenRecord>, level: usize, truncation: Truncation, cands: &[Candidate]) {
    out.extend(cands.iter().map(|c| EigenRecord {
        level,
        truncation,
        vector: c.vector.clone(),
        value: c.value.clone(),
        class: c.class,
    }));
}

fn accepted(cands: &[Candidate], level: usize, origin: Origin) -> Vec<Constraint> {
    cands
        .iter()
        .filter(|c| c.class == CandidateClass::New)
        .map(|c| Constraint::new(level, c.value.clone(), origin, Some(c.vector.clone())))
        .collect()
}

/// Row-vector helper: `v · M` for a null-space check.
pub fn annihilates(v: &[Rational], m: &RationalMatrix) -> bool {
    m.left_apply(v).iter().all(Zero::is_zero)
}

/// The scalar `k` with `a = k·b`, if one exists.
pub fn scale_between(a: &Expression, b: &Expression) -> Option<Rational> {
    let lb = b.leading_coefficient()?;
    let la = a.leading_coefficient()?;
    let k = la / lb;
    (b.scale(&k) == *a).then_some(k)
}
