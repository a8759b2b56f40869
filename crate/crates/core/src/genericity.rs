//! Seeded sampling and the empirical genericity scan.
//!
//! The scan walks a deterministic set of parameter samples; for each
//! parameter it classifies a deterministic set of slice points and flags
//! the parameter if any point lands in `W`, in some `Wtilde`, or has a
//! positive slice defect at all. The three flagged index sets feed the
//! frequency verdicts: "alpha" asks whether `W` projects to a negligible
//! parameter set, "beta" whether non-transverse parameters are negligible.
//! Everything is keyed by `(seed, sample index)`, so regenerating any one
//! sample in isolation gives the same point and re-running a scan twice
//! gives identical output byte for byte.

use crate::defect::{self, DefectError, DefectReport, Stratum};
use crate::expr::EvalError;
use crate::geometry::{
    self, GeometryError, Interval, ParamFamily, PointXA, Smoothness, SubmanifoldKind,
    SubmanifoldSpec,
};
use crate::linalg::{Backend, LinalgError, Matrix, Rat};
use num::{BigInt, FromPrimitive, Signed, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("sampling plan field `{field}`: {message}")]
pub struct PlanError {
    pub field: &'static str,
    pub message: String,
}

fn plan_error(field: &'static str, message: impl Into<String>) -> PlanError {
    PlanError {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenericityError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("image of {point} is not on Z, so it has no preimage tangent")]
    NotOnZ { point: PointXA },
    #[error("family is not transverse at {point} (defect {delta}); the preimage is not cut out cleanly there")]
    NotTransverse { point: PointXA, delta: usize },
    #[error(transparent)]
    Defect(#[from] DefectError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Grid,
    MonteCarlo,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Grid => "grid",
            SamplingMode::MonteCarlo => "monte_carlo",
        })
    }
}

/// Deterministic sampling recipe over a bounded box in slice and parameter
/// space. Grid counts are per axis; Monte Carlo counts are totals.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub seed: u64,
    pub mode: SamplingMode,
    pub x_box: Vec<Interval>,
    pub a_box: Vec<Interval>,
    pub x_count: usize,
    pub a_count: usize,
    pub eps_alpha: Rat,
    pub eps_beta: Rat,
}

impl SamplingPlan {
    /// Grid plan over the given bounded boxes with zero thresholds.
    pub fn grid(
        x_box: Vec<Interval>,
        a_box: Vec<Interval>,
        x_count: usize,
        a_count: usize,
        seed: u64,
    ) -> Self {
        SamplingPlan {
            seed,
            mode: SamplingMode::Grid,
            x_box,
            a_box,
            x_count,
            a_count,
            eps_alpha: Rat::zero(),
            eps_beta: Rat::zero(),
        }
    }

    pub fn validate(&self, family: &ParamFamily) -> Result<(), PlanError> {
        if self.x_count == 0 {
            return Err(plan_error("x_count", "must be at least 1"));
        }
        if self.a_count == 0 {
            return Err(plan_error("a_count", "must be at least 1"));
        }
        if self.x_box.len() != family.n() {
            return Err(plan_error(
                "x_box",
                format!("expected {} axes, got {}", family.n(), self.x_box.len()),
            ));
        }
        if self.a_box.len() != family.m() {
            return Err(plan_error(
                "a_box",
                format!("expected {} axes, got {}", family.m(), self.a_box.len()),
            ));
        }
        for (field, boxes) in [("x_box", &self.x_box), ("a_box", &self.a_box)] {
            for axis in boxes.iter() {
                if !axis.is_bounded() {
                    return Err(plan_error(field, "every sampling axis must be bounded"));
                }
            }
        }
        // The sampling box must sit inside the domain's box projection;
        // predicates are still rechecked pointwise during a scan.
        for (k, (axis, dom)) in self
            .x_box
            .iter()
            .chain(self.a_box.iter())
            .zip(family.domain.intervals.iter())
            .enumerate()
        {
            let lo_ok = match (&axis.lower, &dom.lower) {
                (_, None) => true,
                (Some(lo), Some(dlo)) => lo >= dlo,
                (None, Some(_)) => false,
            };
            let hi_ok = match (&axis.upper, &dom.upper) {
                (_, None) => true,
                (Some(hi), Some(dhi)) => hi <= dhi,
                (None, Some(_)) => false,
            };
            if !lo_ok || !hi_ok {
                return Err(plan_error(
                    "x_box",
                    format!("axis {} extends beyond the family domain box", k + 1),
                ));
            }
        }
        if self.eps_alpha.is_negative() {
            return Err(plan_error("eps_alpha", "must be non-negative"));
        }
        if self.eps_beta.is_negative() {
            return Err(plan_error("eps_beta", "must be non-negative"));
        }
        Ok(())
    }
}

fn bounded(interval: &Interval, field: &'static str) -> Result<(Rat, Rat), PlanError> {
    match (&interval.lower, &interval.upper) {
        (Some(lo), Some(hi)) => Ok((lo.clone(), hi.clone())),
        _ => Err(plan_error(field, "axis must be bounded for sampling")),
    }
}

/// `count` evenly spaced exact rationals covering `[lo, hi]` inclusive; a
/// single-point axis collapses to the midpoint.
fn linspace(lo: &Rat, hi: &Rat, count: usize) -> Vec<Rat> {
    if count == 1 {
        return vec![(lo + hi) / Rat::from_integer(BigInt::from(2))];
    }
    let step = (hi - lo) / Rat::from_integer(BigInt::from((count - 1) as u64));
    (0..count)
        .map(|i| lo + &step * Rat::from_integer(BigInt::from(i as u64)))
        .collect()
}

fn insert_sorted(values: &mut Vec<Rat>, v: Rat) {
    if let Err(pos) = values.binary_search(&v) {
        values.insert(pos, v);
    }
}

fn cartesian(axes: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let mut out: Vec<Vec<Rat>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// Stream ids keep x samples and a samples on disjoint counters, so both
/// sequences depend only on `(seed, index)`.
const X_STREAM_BASE: u64 = 1 << 32;

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

fn monte_carlo_point(
    seed: u64,
    stream: u64,
    boxes: &[(Rat, Rat)],
) -> Vec<Rat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    boxes
        .iter()
        .map(|(lo, hi)| {
            let t = Rat::from_f64(unit_f64(&mut rng)).expect("finite in [0,1)");
            lo + (hi - lo) * t
        })
        .collect()
}

/// Slice-space samples. Grid axes always include the box midpoint and, when
/// the axis straddles it, zero, because witness sets of interest tend to sit
/// on coordinate axes.
pub fn x_samples(plan: &SamplingPlan) -> Result<Vec<Vec<Rat>>, PlanError> {
    let boxes: Vec<(Rat, Rat)> = plan
        .x_box
        .iter()
        .map(|i| bounded(i, "x_box"))
        .collect::<Result<_, _>>()?;
    match plan.mode {
        SamplingMode::Grid => {
            let axes: Vec<Vec<Rat>> = boxes
                .iter()
                .map(|(lo, hi)| {
                    let mut axis = linspace(lo, hi, plan.x_count);
                    axis.sort();
                    insert_sorted(&mut axis, (lo + hi) / Rat::from_integer(BigInt::from(2)));
                    let zero = Rat::zero();
                    if lo < &zero && hi > &zero {
                        insert_sorted(&mut axis, zero);
                    }
                    axis
                })
                .collect();
            Ok(cartesian(&axes))
        }
        SamplingMode::MonteCarlo => Ok((0..plan.x_count)
            .map(|i| monte_carlo_point(plan.seed, X_STREAM_BASE + i as u64, &boxes))
            .collect()),
    }
}

/// Parameter-space samples: a plain grid (or Monte Carlo draw) with no
/// inserted points, so parameter grids can deliberately avoid special
/// values such as zero.
pub fn a_samples(plan: &SamplingPlan) -> Result<Vec<Vec<Rat>>, PlanError> {
    let boxes: Vec<(Rat, Rat)> = plan
        .a_box
        .iter()
        .map(|i| bounded(i, "a_box"))
        .collect::<Result<_, _>>()?;
    match plan.mode {
        SamplingMode::Grid => {
            let axes: Vec<Vec<Rat>> = boxes
                .iter()
                .map(|(lo, hi)| linspace(lo, hi, plan.a_count))
                .collect();
            Ok(cartesian(&axes))
        }
        SamplingMode::MonteCarlo => Ok((0..plan.a_count)
            .map(|i| monte_carlo_point(plan.seed, i as u64, &boxes))
            .collect()),
    }
}

/// Hit count over a total; kept exact so threshold comparisons are too.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frequency {
    pub hits: usize,
    pub total: usize,
}

impl Frequency {
    pub fn as_rational(&self) -> Rat {
        if self.total == 0 {
            Rat::zero()
        } else {
            Rat::new(BigInt::from(self.hits), BigInt::from(self.total))
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.hits, self.total)
    }
}

/// Empirical verdict on one side of the equivalence; never a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// The smoothness the main equivalence asks for: strictly more than
/// `n + q - ell + delta_sup`, floored at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RCondition {
    pub bound: usize,
    pub declared: Smoothness,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericityReport {
    pub a_sample_count: usize,
    pub x_sample_count: usize,
    pub classified_points: usize,
    pub skipped_points: usize,
    /// Parameter indices where some slice point landed in `W`.
    pub flagged_w: Vec<usize>,
    /// Parameter indices where some slice point landed in a `Wtilde`.
    pub flagged_wtilde: Vec<usize>,
    /// Parameter indices whose slice is non-transverse somewhere.
    pub flagged_nontransverse: Vec<usize>,
    pub freq_w: Frequency,
    pub freq_wtilde: Frequency,
    pub freq_nontransverse: Frequency,
    pub delta_sup_estimate: usize,
    pub r_condition: RCondition,
    pub verdict_alpha: Verdict,
    pub verdict_beta: Verdict,
    /// Whether the two empirical verdicts agree, as the equivalence
    /// predicts under the smoothness condition.
    pub agreement: bool,
}

/// Scan output: the aggregate report plus the per-point classification
/// table (only points inside the domain appear).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub report: GenericityReport,
    pub table: Vec<DefectReport>,
}

fn verdict(freq: &Frequency, eps: &Rat, any_data: bool) -> Verdict {
    if !any_data {
        return Verdict::Inconclusive;
    }
    if freq.as_rational() <= *eps {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

/// Classify the full sample product and aggregate per-parameter flags.
pub fn scan<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    plan: &SamplingPlan,
) -> Result<ScanResult, GenericityError> {
    plan.validate(family)?;
    let xs = x_samples(plan)?;
    let as_ = a_samples(plan)?;
    let mut table = Vec::new();
    let mut flagged_w = Vec::new();
    let mut flagged_wtilde = Vec::new();
    let mut flagged_nontransverse = Vec::new();
    let mut classified_points = 0usize;
    let mut skipped_points = 0usize;
    let mut delta_sup_estimate = 0usize;
    for (ia, a) in as_.iter().enumerate() {
        let mut saw_w = false;
        let mut saw_wtilde = false;
        let mut saw_nontransverse = false;
        for x in &xs {
            let p = PointXA::new(x.clone(), a.clone());
            if !geometry::contains(backend, &family.domain, &p)? {
                skipped_points += 1;
                continue;
            }
            let report = defect::classify(backend, family, z, &p)?;
            classified_points += 1;
            delta_sup_estimate = delta_sup_estimate.max(report.delta_family);
            match report.stratum {
                Stratum::W => {
                    saw_w = true;
                    saw_nontransverse = true;
                }
                Stratum::Wtilde(_) => {
                    saw_wtilde = true;
                    saw_nontransverse = true;
                }
                Stratum::NotOnZ | Stratum::Transverse => {}
            }
            table.push(report);
        }
        if saw_w {
            flagged_w.push(ia);
        }
        if saw_wtilde {
            flagged_wtilde.push(ia);
        }
        if saw_nontransverse {
            flagged_nontransverse.push(ia);
        }
    }
    let total = as_.len();
    let freq_w = Frequency {
        hits: flagged_w.len(),
        total,
    };
    let freq_wtilde = Frequency {
        hits: flagged_wtilde.len(),
        total,
    };
    let freq_nontransverse = Frequency {
        hits: flagged_nontransverse.len(),
        total,
    };
    let any_data = classified_points > 0;
    let verdict_alpha = verdict(&freq_w, &plan.eps_alpha, any_data);
    let verdict_beta = verdict(&freq_nontransverse, &plan.eps_beta, any_data);
    let raw_bound =
        family.n() as isize + z.q() as isize - family.ell() as isize + delta_sup_estimate as isize;
    let bound = raw_bound.max(0) as usize;
    let r_condition = RCondition {
        bound,
        declared: family.declared_r,
        satisfied: family.declared_r.exceeds(bound),
    };
    let report = GenericityReport {
        a_sample_count: total,
        x_sample_count: xs.len(),
        classified_points,
        skipped_points,
        flagged_w,
        flagged_wtilde,
        flagged_nontransverse,
        freq_w,
        freq_wtilde,
        freq_nontransverse,
        delta_sup_estimate,
        r_condition,
        verdict_alpha,
        verdict_beta,
        agreement: verdict_alpha == verdict_beta,
    };
    Ok(ScanResult { report, table })
}

/// Basis of the tangent space of the preimage `F^{-1}(Z)` at a point where
/// the family is transverse: the kernel of `N . JF`, with `N` the normal
/// rows of `Z` at the image point. Expect `n + m - (ell - q)` columns.
pub fn preimage_tangent<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<Matrix<B::S>, GenericityError> {
    let y = family.eval(backend, p)?;
    if !geometry::on_submanifold(backend, z, &y)? {
        return Err(GenericityError::NotOnZ { point: p.clone() });
    }
    let delta = defect::delta_family(backend, family, z, p)?;
    if delta > 0 {
        return Err(GenericityError::NotTransverse {
            point: p.clone(),
            delta,
        });
    }
    let j = family.jacobian_at(backend, p)?;
    let normal_j = match &z.kind {
        SubmanifoldKind::Slice { zeroed } => {
            let rows: Vec<usize> = zeroed.iter().map(|i| i - 1).collect();
            j.select_rows(&rows)
        }
        SubmanifoldKind::LevelSet { equations } => {
            let env = crate::expr::Bindings::y_only(&y);
            let ell = z.ambient_dim;
            let mut entries = Vec::with_capacity(equations.len() * ell);
            for g in equations {
                for col in 1..=ell {
                    entries.push(crate::expr::evaluate(
                        &crate::expr::derive(g, crate::expr::Var::y(col)),
                        &env,
                    )?);
                }
            }
            Matrix::new(equations.len(), ell, entries).mul(&j)?
        }
    };
    Ok(backend.kernel_basis(&normal_j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Regular,
    Critical,
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularity::Regular => "regular",
            Regularity::Critical => "critical",
        })
    }
}

/// Whether the parameter projection restricted to the preimage manifold is
/// a submersion at `p`: the parameter block of the preimage tangent must
/// have full rank `m`.
pub fn projection_regularity<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<Regularity, GenericityError> {
    let tangent = preimage_tangent(backend, family, z, p)?;
    let a_rows: Vec<usize> = (family.n()..family.n() + family.m()).collect();
    let a_block = tangent.select_rows(&a_rows);
    if backend.rank(&a_block) == family.m() {
        Ok(Regularity::Regular)
    } else {
        Ok(Regularity::Critical)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{rat, rat_int, DomainSpec};
    use crate::linalg::ExactBackend;

    fn plan_11(x_count: usize, a_count: usize) -> SamplingPlan {
        SamplingPlan::grid(
            vec![Interval::bounded(rat_int(-1), rat_int(1)).unwrap()],
            vec![Interval::bounded(rat_int(-1), rat_int(1)).unwrap()],
            x_count,
            a_count,
            7,
        )
    }

    #[test]
    fn linspace_is_exact_and_symmetric() {
        let vals = linspace(&rat_int(-1), &rat_int(1), 101);
        assert_eq!(vals.len(), 101);
        assert_eq!(vals[0], rat_int(-1));
        assert_eq!(vals[50], rat_int(0));
        assert_eq!(vals[100], rat_int(1));
        assert_eq!(vals[51], rat(1, 50));
    }

    #[test]
    fn x_grid_inserts_zero_and_midpoint() {
        let plan = SamplingPlan::grid(
            vec![Interval::bounded(rat_int(-1), rat_int(2)).unwrap()],
            vec![Interval::bounded(rat_int(-1), rat_int(1)).unwrap()],
            4,
            2,
            7,
        );
        let xs = x_samples(&plan).unwrap();
        let flat: Vec<Rat> = xs.into_iter().map(|mut v| v.pop().unwrap()).collect();
        assert_eq!(
            flat,
            vec![rat_int(-1), rat_int(0), rat(1, 2), rat_int(1), rat_int(2)]
        );
    }

    #[test]
    fn a_grid_stays_plain() {
        let plan = plan_11(3, 20);
        let as_ = a_samples(&plan).unwrap();
        assert_eq!(as_.len(), 20);
        assert!(as_.iter().all(|a| !a[0].is_zero()));
    }

    #[test]
    fn monte_carlo_samples_are_recomputable_pointwise() {
        let mut plan = plan_11(5, 5);
        plan.mode = SamplingMode::MonteCarlo;
        let all = a_samples(&plan).unwrap();
        // regenerate the fourth sample alone from (seed, index)
        let boxes = vec![(rat_int(-1), rat_int(1))];
        let alone = monte_carlo_point(plan.seed, 3, &boxes);
        assert_eq!(all[3], alone);
        // samples stay inside the box and differ from each other
        assert!(all.iter().all(|a| a[0] > rat_int(-1) && a[0] < rat_int(1)));
        assert_ne!(all[0], all[1]);
    }

    #[test]
    fn plan_validation_names_fields() {
        let family = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("0").unwrap()],
            DomainSpec::unbounded(2),
            crate::geometry::Smoothness::Infinite,
        )
        .unwrap();
        let mut plan = plan_11(0, 1);
        assert_eq!(plan.validate(&family).unwrap_err().field, "x_count");
        plan = plan_11(1, 1);
        plan.a_box = vec![Interval::unbounded()];
        assert_eq!(plan.validate(&family).unwrap_err().field, "a_box");
    }

    #[test]
    fn scan_flags_constant_zero_family_everywhere() {
        let b = ExactBackend;
        let family = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("0").unwrap()],
            DomainSpec::unbounded(2),
            crate::geometry::Smoothness::Infinite,
        )
        .unwrap();
        let z = SubmanifoldSpec::slice(1, vec![1], vec![]).unwrap();
        let result = scan(&b, &family, &z, &plan_11(5, 5)).unwrap();
        let report = &result.report;
        assert_eq!(report.freq_w, Frequency { hits: 5, total: 5 });
        assert_eq!(report.verdict_alpha, Verdict::Fails);
        assert_eq!(report.verdict_beta, Verdict::Fails);
        assert!(report.agreement);
        assert_eq!(report.delta_sup_estimate, 1);
        // identity: non-transverse parameters are exactly those from W and Wtilde
        let mut union = report.flagged_w.clone();
        union.extend(&report.flagged_wtilde);
        union.sort_unstable();
        union.dedup();
        assert_eq!(union, report.flagged_nontransverse);
        // r bound: n + q - ell + sup = 1 + 0 - 1 + 1
        assert_eq!(report.r_condition.bound, 1);
        assert!(report.r_condition.satisfied);
    }

    #[test]
    fn preimage_tangent_of_parabola() {
        let b = ExactBackend;
        let family = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("x1^2 - a1").unwrap()],
            DomainSpec::unbounded(2),
            crate::geometry::Smoothness::Infinite,
        )
        .unwrap();
        let z = SubmanifoldSpec::slice(1, vec![1], vec![]).unwrap();
        // on the parabola a = x^2 the kernel of (2x, -1) is spanned by (1, 2x)
        let p = PointXA::new(vec![rat_int(1)], vec![rat_int(1)]);
        let t = preimage_tangent(&b, &family, &z, &p).unwrap();
        assert_eq!((t.rows(), t.cols()), (2, 1));
        let ratio = t.at(1, 0) / t.at(0, 0);
        assert_eq!(ratio, rat_int(2));
        assert_eq!(
            projection_regularity(&b, &family, &z, &p).unwrap(),
            Regularity::Regular
        );
        // at the vertex the tangent is horizontal and the projection folds
        let vertex = PointXA::new(vec![rat_int(0)], vec![rat_int(0)]);
        assert_eq!(
            projection_regularity(&b, &family, &z, &vertex).unwrap(),
            Regularity::Critical
        );
    }

    #[test]
    fn preimage_tangent_requires_membership_and_transversality() {
        let b = ExactBackend;
        let family = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("x1^2 - a1").unwrap()],
            DomainSpec::unbounded(2),
            crate::geometry::Smoothness::Infinite,
        )
        .unwrap();
        let z = SubmanifoldSpec::slice(1, vec![1], vec![]).unwrap();
        let off = PointXA::new(vec![rat_int(1)], vec![rat_int(0)]);
        assert!(matches!(
            preimage_tangent(&b, &family, &z, &off),
            Err(GenericityError::NotOnZ { .. })
        ));

        let degenerate = ParamFamily::new(
            1,
            1,
            1,
            vec![parse("0").unwrap()],
            DomainSpec::unbounded(2),
            crate::geometry::Smoothness::Infinite,
        )
        .unwrap();
        let origin = PointXA::new(vec![rat_int(0)], vec![rat_int(0)]);
        assert!(matches!(
            preimage_tangent(&b, &degenerate, &z, &origin),
            Err(GenericityError::NotTransverse { .. })
        ));
    }

    #[test]
    fn level_set_preimage_tangent_dimension() {
        let b = ExactBackend;
        // F(x, a) = (x, a) against the circle: preimage is the circle itself
        let family = ParamFamily::new(
            1,
            1,
            2,
            vec![parse("x1").unwrap(), parse("a1").unwrap()],
            DomainSpec::unbounded(2),
            crate::geometry::Smoothness::Infinite,
        )
        .unwrap();
        let z = SubmanifoldSpec::level_set(2, vec![parse("y1^2 + y2^2 - 1").unwrap()], vec![])
            .unwrap();
        let p = PointXA::new(vec![rat_int(0)], vec![rat_int(1)]);
        let t = preimage_tangent(&b, &family, &z, &p).unwrap();
        assert_eq!((t.rows(), t.cols()), (2, 1));
        // tangent to the circle at (0, 1) is horizontal: a-block vanishes
        assert_eq!(
            projection_regularity(&b, &family, &z, &p).unwrap(),
            Regularity::Critical
        );
    }
}
