//! Families, domains and target submanifolds.
//!
//! A [`ParamFamily`] is an `ell`-component map `F(x, a)` with `x` in an
//! `n`-dimensional slice and `a` in an `m`-dimensional parameter space,
//! restricted to an open domain `U` given by an open box plus strict
//! predicate inequalities. The target submanifold `Z` is either a
//! coordinate slice (a chosen set of target coordinates vanishes) or the
//! zero set of level-set equations, optionally cut down by open
//! constraints. Points are always carried as exact rationals and lifted
//! into the backend scalar on use.

use crate::expr::{self, Bindings, EvalError, Expr, Var};
use crate::linalg::{Backend, Matrix, Rat, Scalar};
use num::BigInt;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected {expected} components, got {got}")]
    BadComponentCount { expected: usize, got: usize },
    #[error("dimensions n, m and ell must all be at least 1")]
    EmptyDimension,
    #[error("variable {var} is out of range here (allowed: {allowed})")]
    VariableOutOfRange { var: Var, allowed: String },
    #[error("domain needs one interval per x and a variable: expected {expected}, got {got}")]
    BadDomainLength { expected: usize, got: usize },
    #[error("interval lower bound must lie strictly below the upper bound")]
    EmptyInterval,
    #[error("zeroed coordinate index {index} is out of range 1..={ell}")]
    ZeroedIndexOutOfRange { index: usize, ell: usize },
    #[error("level set needs between 1 and {ell} equations, got {got}")]
    LevelSetCount { got: usize, ell: usize },
    #[error("level set is not regular at this point: jacobian rank {actual}, need {expected}")]
    RegularityViolation { expected: usize, actual: usize },
    #[error("declared smoothness must be at least 1")]
    SmoothnessZero,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Open interval; `None` bounds are unbounded ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
}

impl Interval {
    pub fn new(lower: Option<Rat>, upper: Option<Rat>) -> Result<Self, GeometryError> {
        if let (Some(lo), Some(hi)) = (&lower, &upper) {
            if lo >= hi {
                return Err(GeometryError::EmptyInterval);
            }
        }
        Ok(Interval { lower, upper })
    }

    pub fn unbounded() -> Self {
        Interval {
            lower: None,
            upper: None,
        }
    }

    pub fn bounded(lo: Rat, hi: Rat) -> Result<Self, GeometryError> {
        Interval::new(Some(lo), Some(hi))
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    fn admits<S: Scalar>(&self, v: &S) -> bool {
        if let Some(lo) = &self.lower {
            if *v <= S::from_rational(lo) {
                return false;
            }
        }
        if let Some(hi) = &self.upper {
            if *v >= S::from_rational(hi) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lower {
            Some(lo) => write!(f, "({}", lo)?,
            None => write!(f, "(-inf")?,
        }
        match &self.upper {
            Some(hi) => write!(f, ", {})", hi),
            None => write!(f, ", inf)"),
        }
    }
}

/// Open domain `U`: an open box (one interval per x variable, then one per
/// a variable) intersected with strict inequalities `predicate > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub intervals: Vec<Interval>,
    pub predicates: Vec<Expr>,
}

impl DomainSpec {
    pub fn unbounded(axes: usize) -> Self {
        DomainSpec {
            intervals: vec![Interval::unbounded(); axes],
            predicates: Vec::new(),
        }
    }
}

/// Point in slice-by-parameter space, exact in both blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PointXA {
    pub x: Vec<Rat>,
    pub a: Vec<Rat>,
}

impl PointXA {
    pub fn new(x: Vec<Rat>, a: Vec<Rat>) -> Self {
        PointXA { x, a }
    }

    pub fn lift<S: Scalar>(&self) -> (Vec<S>, Vec<S>) {
        (
            self.x.iter().map(S::from_rational).collect(),
            self.a.iter().map(S::from_rational).collect(),
        )
    }

    fn coords(&self) -> impl Iterator<Item = &Rat> {
        self.x.iter().chain(self.a.iter())
    }
}

impl fmt::Display for PointXA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let xs: Vec<String> = self.x.iter().map(expr::format_rat).collect();
        let as_: Vec<String> = self.a.iter().map(expr::format_rat).collect();
        write!(f, "({}; {})", xs.join(", "), as_.join(", "))
    }
}

/// True iff `p` lies strictly inside the box and every predicate is
/// positive in the backend's sense.
pub fn contains<B: Backend>(
    backend: &B,
    domain: &DomainSpec,
    p: &PointXA,
) -> Result<bool, EvalError> {
    let (x, a) = p.lift::<B::S>();
    for (interval, value) in domain.intervals.iter().zip(x.iter().chain(a.iter())) {
        if !interval.admits(value) {
            return Ok(false);
        }
    }
    debug_assert_eq!(domain.intervals.len(), p.coords().count());
    let env = Bindings::xa(&x, &a);
    for pred in &domain.predicates {
        let v = expr::evaluate(pred, &env)?;
        if !backend.is_positive(&v) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Declared smoothness class of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Finite(u32),
    Infinite,
}

impl Smoothness {
    /// Whether the declared class is strictly above an integer bound.
    pub fn exceeds(&self, bound: usize) -> bool {
        match self {
            Smoothness::Infinite => true,
            Smoothness::Finite(r) => (*r as usize) > bound,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Finite(r) => write!(f, "{r}"),
            Smoothness::Infinite => f.write_str("inf"),
        }
    }
}

/// Parametrized family of maps with its domain and declared smoothness.
/// The full Jacobian with respect to `(x, a)` is differentiated once at
/// construction and evaluated per point afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFamily {
    n: usize,
    m: usize,
    ell: usize,
    components: Vec<Expr>,
    pub domain: DomainSpec,
    pub declared_r: Smoothness,
    jacobian: Vec<Vec<Expr>>,
}

impl ParamFamily {
    pub fn new(
        n: usize,
        m: usize,
        ell: usize,
        components: Vec<Expr>,
        domain: DomainSpec,
        declared_r: Smoothness,
    ) -> Result<Self, GeometryError> {
        if n == 0 || m == 0 || ell == 0 {
            return Err(GeometryError::EmptyDimension);
        }
        if let Smoothness::Finite(0) = declared_r {
            return Err(GeometryError::SmoothnessZero);
        }
        if components.len() != ell {
            return Err(GeometryError::BadComponentCount {
                expected: ell,
                got: components.len(),
            });
        }
        for component in &components {
            check_xa_bounds(component, n, m)?;
        }
        if domain.intervals.len() != n + m {
            return Err(GeometryError::BadDomainLength {
                expected: n + m,
                got: domain.intervals.len(),
            });
        }
        for predicate in &domain.predicates {
            check_xa_bounds(predicate, n, m)?;
        }
        let variables: Vec<Var> = (1..=n)
            .map(Var::x)
            .chain((1..=m).map(Var::a))
            .collect();
        let jacobian = components
            .iter()
            .map(|c| variables.iter().map(|&v| expr::derive(c, v)).collect())
            .collect();
        Ok(ParamFamily {
            n,
            m,
            ell,
            components,
            domain,
            declared_r,
            jacobian,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Value of the family at a point, in the backend scalar.
    pub fn eval<B: Backend>(&self, backend: &B, p: &PointXA) -> Result<Vec<B::S>, EvalError> {
        let _ = backend;
        let (x, a) = p.lift::<B::S>();
        let env = Bindings::xa(&x, &a);
        self.components
            .iter()
            .map(|c| expr::evaluate(c, &env))
            .collect()
    }

    /// Full Jacobian at `p`: `ell` rows, `n + m` columns ordered x then a.
    pub fn jacobian_at<B: Backend>(
        &self,
        backend: &B,
        p: &PointXA,
    ) -> Result<Matrix<B::S>, EvalError> {
        let _ = backend;
        let (x, a) = p.lift::<B::S>();
        let env = Bindings::xa(&x, &a);
        let mut entries = Vec::with_capacity(self.ell * (self.n + self.m));
        for row in &self.jacobian {
            for cell in row {
                entries.push(expr::evaluate(cell, &env)?);
            }
        }
        Ok(Matrix::new(self.ell, self.n + self.m, entries))
    }

    pub fn jacobian_expr(&self, component: usize, variable: usize) -> &Expr {
        &self.jacobian[component][variable]
    }
}

fn check_xa_bounds(e: &Expr, n: usize, m: usize) -> Result<(), GeometryError> {
    let b = e.var_bounds();
    if b.max_y > 0 {
        return Err(GeometryError::VariableOutOfRange {
            var: Var::y(b.max_y),
            allowed: format!("x1..x{n}, a1..a{m}"),
        });
    }
    if b.max_x > n {
        return Err(GeometryError::VariableOutOfRange {
            var: Var::x(b.max_x),
            allowed: format!("x1..x{n}"),
        });
    }
    if b.max_a > m {
        return Err(GeometryError::VariableOutOfRange {
            var: Var::a(b.max_a),
            allowed: format!("a1..a{m}"),
        });
    }
    Ok(())
}

fn check_y_bounds(e: &Expr, ell: usize) -> Result<(), GeometryError> {
    let b = e.var_bounds();
    if b.max_x > 0 || b.max_a > 0 {
        let var = if b.max_x > 0 {
            Var::x(b.max_x)
        } else {
            Var::a(b.max_a)
        };
        return Err(GeometryError::VariableOutOfRange {
            var,
            allowed: format!("y1..y{ell}"),
        });
    }
    if b.max_y > ell {
        return Err(GeometryError::VariableOutOfRange {
            var: Var::y(b.max_y),
            allowed: format!("y1..y{ell}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubmanifoldKind {
    /// Coordinates with the given 1-based indices vanish. Sorted, no
    /// duplicates. An empty set is the whole (open) target chart.
    Slice { zeroed: Vec<usize> },
    /// Common zero set of the equations, each over y variables.
    LevelSet { equations: Vec<Expr> },
}

/// Target submanifold `Z` with open constraints (strict inequalities over
/// y variables) cutting the region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmanifoldSpec {
    pub ambient_dim: usize,
    pub kind: SubmanifoldKind,
    pub open_constraints: Vec<Expr>,
}

impl SubmanifoldSpec {
    pub fn slice(
        ambient_dim: usize,
        mut zeroed: Vec<usize>,
        open_constraints: Vec<Expr>,
    ) -> Result<Self, GeometryError> {
        zeroed.sort_unstable();
        zeroed.dedup();
        for &index in &zeroed {
            if index == 0 || index > ambient_dim {
                return Err(GeometryError::ZeroedIndexOutOfRange {
                    index,
                    ell: ambient_dim,
                });
            }
        }
        for c in &open_constraints {
            check_y_bounds(c, ambient_dim)?;
        }
        Ok(SubmanifoldSpec {
            ambient_dim,
            kind: SubmanifoldKind::Slice { zeroed },
            open_constraints,
        })
    }

    pub fn level_set(
        ambient_dim: usize,
        equations: Vec<Expr>,
        open_constraints: Vec<Expr>,
    ) -> Result<Self, GeometryError> {
        if equations.is_empty() || equations.len() > ambient_dim {
            return Err(GeometryError::LevelSetCount {
                got: equations.len(),
                ell: ambient_dim,
            });
        }
        for e in equations.iter().chain(open_constraints.iter()) {
            check_y_bounds(e, ambient_dim)?;
        }
        Ok(SubmanifoldSpec {
            ambient_dim,
            kind: SubmanifoldKind::LevelSet { equations },
            open_constraints,
        })
    }

    /// Dimension of `Z` (codimension subtracted from the ambient target).
    pub fn q(&self) -> usize {
        match &self.kind {
            SubmanifoldKind::Slice { zeroed } => self.ambient_dim - zeroed.len(),
            SubmanifoldKind::LevelSet { equations } => self.ambient_dim - equations.len(),
        }
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - self.q()
    }
}

/// True iff `y` lies on `Z`: defining conditions vanish and every open
/// constraint is positive, both in the backend's sense.
pub fn on_submanifold<B: Backend>(
    backend: &B,
    z: &SubmanifoldSpec,
    y: &[B::S],
) -> Result<bool, EvalError> {
    let env = Bindings::y_only(y);
    match &z.kind {
        SubmanifoldKind::Slice { zeroed } => {
            for &index in zeroed {
                if !backend.vanishes(&y[index - 1]) {
                    return Ok(false);
                }
            }
        }
        SubmanifoldKind::LevelSet { equations } => {
            for g in equations {
                let v = expr::evaluate(g, &env)?;
                if !backend.vanishes(&v) {
                    return Ok(false);
                }
            }
        }
    }
    for c in &z.open_constraints {
        let v = expr::evaluate(c, &env)?;
        if !backend.is_positive(&v) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Basis of a tangent space, one column per direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBasis<S> {
    pub columns: Matrix<S>,
}

impl<S: Scalar> TangentBasis<S> {
    pub fn ambient_dim(&self) -> usize {
        self.columns.rows()
    }

    pub fn dim(&self) -> usize {
        self.columns.cols()
    }
}

/// Tangent space of `Z` at a point `y` assumed to lie on `Z`. For slices
/// this is the coordinate basis of the non-zeroed directions; for level
/// sets it is the kernel of the defining Jacobian, which must have full
/// rank at `y` or the spec is rejected as non-regular there.
pub fn tangent_of_z<B: Backend>(
    backend: &B,
    z: &SubmanifoldSpec,
    y: &[B::S],
) -> Result<TangentBasis<B::S>, GeometryError> {
    let ell = z.ambient_dim;
    match &z.kind {
        SubmanifoldKind::Slice { zeroed } => {
            let mut columns = Matrix::zeros(ell, z.q());
            let mut k = 0;
            for i in 1..=ell {
                if !zeroed.contains(&i) {
                    columns.set(i - 1, k, B::S::one());
                    k += 1;
                }
            }
            Ok(TangentBasis { columns })
        }
        SubmanifoldKind::LevelSet { equations } => {
            let env = Bindings::y_only(y);
            let mut entries = Vec::with_capacity(equations.len() * ell);
            for g in equations {
                for j in 1..=ell {
                    entries.push(expr::evaluate(&expr::derive(g, Var::y(j)), &env)?);
                }
            }
            let jg = Matrix::new(equations.len(), ell, entries);
            let rank = backend.rank(&jg);
            if rank < equations.len() {
                return Err(GeometryError::RegularityViolation {
                    expected: equations.len(),
                    actual: rank,
                });
            }
            Ok(TangentBasis {
                columns: backend.kernel_basis(&jg),
            })
        }
    }
}

/// Rational from an integer, handy for building points in tests and plans.
pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Exact rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::linalg::{ExactBackend, FloatBackend};

    fn family_example2() -> ParamFamily {
        ParamFamily::new(
            1,
            1,
            1,
            vec![parse("a1^2 * x1^2").unwrap()],
            DomainSpec::unbounded(2),
            Smoothness::Infinite,
        )
        .unwrap()
    }

    #[test]
    fn family_validation() {
        let err = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("x2").unwrap()],
            DomainSpec::unbounded(2),
            Smoothness::Infinite,
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::VariableOutOfRange { .. }));

        let err = ParamFamily::new(
            1,
            1,
            2,
            vec![parse("x1").unwrap()],
            DomainSpec::unbounded(2),
            Smoothness::Infinite,
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::BadComponentCount { .. }));

        let err = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("y1").unwrap()],
            DomainSpec::unbounded(2),
            Smoothness::Infinite,
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::VariableOutOfRange { .. }));
    }

    #[test]
    fn jacobian_matches_hand_derivative() {
        // For F = a^2 x^2 the gradient is (2 a^2 x, 2 a x^2).
        let family = family_example2();
        let b = ExactBackend;
        let p = PointXA::new(vec![rat_int(1)], vec![rat_int(2)]);
        let j = family.jacobian_at(&b, &p).unwrap();
        assert_eq!((j.rows(), j.cols()), (1, 2));
        assert_eq!(j.at(0, 0), &rat_int(8));
        assert_eq!(j.at(0, 1), &rat_int(4));
    }

    #[test]
    fn domain_membership_box_and_predicates() {
        let b = ExactBackend;
        let domain = DomainSpec {
            intervals: vec![
                Interval::bounded(rat_int(-1), rat_int(1)).unwrap(),
                Interval::unbounded(),
            ],
            predicates: vec![parse("x1 + a1").unwrap()],
        };
        let inside = PointXA::new(vec![rat(1, 2)], vec![rat_int(1)]);
        let on_edge = PointXA::new(vec![rat_int(1)], vec![rat_int(1)]);
        let pred_fails = PointXA::new(vec![rat(1, 2)], vec![rat_int(-1)]);
        assert!(contains(&b, &domain, &inside).unwrap());
        assert!(!contains(&b, &domain, &on_edge).unwrap());
        assert!(!contains(&b, &domain, &pred_fails).unwrap());
    }

    #[test]
    fn float_predicates_use_membership_tolerance() {
        let b = FloatBackend::default();
        let domain = DomainSpec {
            intervals: vec![Interval::unbounded(), Interval::unbounded()],
            predicates: vec![parse("x1").unwrap()],
        };
        let tiny = PointXA::new(vec![Rat::new(1.into(), 10_000_000_000i64.into())], vec![rat_int(0)]);
        // 1e-10 is below the default membership tolerance of 1e-9
        assert!(!contains(&b, &domain, &tiny).unwrap());
    }

    #[test]
    fn slice_membership_and_constraints() {
        let b = ExactBackend;
        let z = SubmanifoldSpec::slice(
            3,
            vec![2, 3],
            vec![parse("y1").unwrap(), parse("1 - y1").unwrap()],
        )
        .unwrap();
        assert_eq!(z.q(), 1);
        let on = vec![rat(1, 2), rat_int(0), rat_int(0)];
        let off_constraint = vec![rat_int(2), rat_int(0), rat_int(0)];
        let off_zeroed = vec![rat(1, 2), rat_int(1), rat_int(0)];
        assert!(on_submanifold(&b, &z, &on).unwrap());
        assert!(!on_submanifold(&b, &z, &off_constraint).unwrap());
        assert!(!on_submanifold(&b, &z, &off_zeroed).unwrap());
    }

    #[test]
    fn slice_tangent_basis() {
        let b = ExactBackend;
        let z = SubmanifoldSpec::slice(3, vec![2, 3], vec![]).unwrap();
        let y = vec![rat(1, 2), rat_int(0), rat_int(0)];
        let t = tangent_of_z(&b, &z, &y).unwrap();
        assert_eq!(t.ambient_dim(), 3);
        assert_eq!(t.dim(), 1);
        assert_eq!(t.columns.at(0, 0), &rat_int(1));
        assert_eq!(t.columns.at(1, 0), &rat_int(0));
    }

    #[test]
    fn level_set_tangent_is_kernel() {
        let b = ExactBackend;
        let z = SubmanifoldSpec::level_set(
            2,
            vec![parse("y1^2 + y2^2 - 1").unwrap()],
            vec![],
        )
        .unwrap();
        let y = vec![rat_int(1), rat_int(0)];
        let t = tangent_of_z(&b, &z, &y).unwrap();
        assert_eq!(t.dim(), 1);
        // gradient at (1, 0) is (2, 0), so the tangent line is the y2 axis
        assert_eq!(t.columns.at(0, 0), &rat_int(0));
        assert_eq!(t.columns.at(1, 0), &rat_int(1));
    }

    #[test]
    fn level_set_regularity_violation() {
        let b = ExactBackend;
        let z = SubmanifoldSpec::level_set(2, vec![parse("y1^2").unwrap()], vec![]).unwrap();
        let y = vec![rat_int(0), rat_int(1)];
        let err = tangent_of_z(&b, &z, &y).unwrap_err();
        assert!(matches!(err, GeometryError::RegularityViolation { .. }));
    }

    #[test]
    fn submanifold_validation() {
        assert!(SubmanifoldSpec::slice(2, vec![3], vec![]).is_err());
        assert!(SubmanifoldSpec::slice(2, vec![0], vec![]).is_err());
        assert!(SubmanifoldSpec::level_set(2, vec![], vec![]).is_err());
        let err = SubmanifoldSpec::slice(2, vec![1], vec![parse("x1").unwrap()]).unwrap_err();
        assert!(matches!(err, GeometryError::VariableOutOfRange { .. }));
    }

    #[test]
    fn smoothness_comparison() {
        assert!(Smoothness::Infinite.exceeds(1_000_000));
        assert!(Smoothness::Finite(2).exceeds(1));
        assert!(!Smoothness::Finite(1).exceeds(1));
    }
}
