//! Local models that trade defect for codimension.
//!
//! At a base point where the family has defect `rho` against a coordinate
//! slice `Z` (with `rho < ell`), one can pick a larger slice `Ztilde` of
//! dimension `q + rho` and a small neighborhood `Utilde` of the base such
//! that every point of `Z` hit from `Utilde` already lies on `Ztilde`, the
//! family restricted to `Utilde` is transverse to `Ztilde`, and slice
//! defects drop by at most `rho` when passing from `Z` to `Ztilde`.
//!
//! The construction is a case split on the target dimension `q` of `Z` and
//! on the rank of the Jacobian rows that define `Z`:
//!
//! * `Q0` (`q = 0`): keep the `ell - rho` independent rows of the full
//!   Jacobian; their coordinates stay zeroed in `Ztilde`.
//! * `QPosFull` (`q > 0`, defining rows all dependent): `Ztilde` is the
//!   whole target chart.
//! * `QPosPartial` (`q > 0`, defining rows of intermediate rank): keep
//!   `ell - q - rho` independent defining rows zeroed.
//!
//! Row choices are recorded in `row_permutation` (chosen rows first within
//! their block), and the verifier rebuilds the standard block matrices
//! through that permutation, so a wrong bookkeeping step shows up as a
//! failed rank check rather than silent misclassification.

use crate::defect::{self, DefectError};
use crate::expr::EvalError;
use crate::genericity::{PlanError, SamplingPlan};
use crate::geometry::{
    self, DomainSpec, GeometryError, Interval, ParamFamily, PointXA, SubmanifoldKind,
    SubmanifoldSpec,
};
use crate::linalg::{Backend, LinalgError, Matrix, Rat, Scalar};
use num::BigInt;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalModelError {
    #[error("local models need a coordinate-slice target, not a level set")]
    SliceRequired,
    #[error("base point {point} lies outside the family domain")]
    BaseOutsideDomain { point: PointXA },
    #[error("image of base point {point} is not on Z")]
    BaseNotOnZ { point: PointXA },
    #[error("family defect {rho} fills the whole target; need rho < ell for a local model")]
    DefectFull { rho: usize },
    #[error("rank bookkeeping disagrees at the base: expected {expected} independent rows, found {actual}")]
    RankMismatch { expected: usize, actual: usize },
    #[error("no stable neighborhood found after {iterations} shrink steps")]
    NoStableNeighborhood { iterations: usize },
    #[error(transparent)]
    Defect(#[from] DefectError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    Q0,
    QPosFull,
    QPosPartial,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::Q0 => "Q0",
            CaseTag::QPosFull => "QPosFull",
            CaseTag::QPosPartial => "QPosPartial",
        })
    }
}

/// Output of the construction at one base point.
///
/// `row_permutation` lists 0-based component indices: for `Q0` the chosen
/// independent rows come first; for `QPosPartial` the order is non-zeroed
/// rows, then chosen defining rows, then the remaining defining rows; for
/// `QPosFull` it is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub base: PointXA,
    pub rho: usize,
    pub q: usize,
    pub case_tag: CaseTag,
    pub row_permutation: Vec<usize>,
    pub ztilde: SubmanifoldSpec,
    /// Shrunk open box around the base, carrying over the domain
    /// predicates, so membership in `utilde` implies membership in `U`.
    pub utilde: DomainSpec,
    pub shrink_iterations: usize,
}

impl LocalModel {
    pub fn ell(&self) -> usize {
        self.ztilde.ambient_dim
    }

    /// Rows whose coordinates stay zeroed in `Ztilde`.
    pub fn selected_rows(&self) -> &[usize] {
        match self.case_tag {
            CaseTag::Q0 => &self.row_permutation[..self.ell() - self.rho],
            CaseTag::QPosFull => &[],
            CaseTag::QPosPartial => {
                let s = self.ell() - self.q - self.rho;
                &self.row_permutation[self.q..self.q + s]
            }
        }
    }

    /// `Q0` transversality block: permuted Jacobian rows next to the
    /// tangent of `Ztilde`, which the permutation turns into a bottom
    /// identity of size `rho`. Full rank `ell` here means the restricted
    /// family is transverse to `Ztilde`.
    pub fn block_m2<S: Scalar>(&self, j: &Matrix<S>) -> Matrix<S> {
        let ell = self.ell();
        let keep = ell - self.rho;
        let mut m = Matrix::zeros(ell, j.cols() + self.rho);
        for (r, &component) in self.row_permutation.iter().enumerate() {
            for c in 0..j.cols() {
                m.set(r, c, j.at(component, c).clone());
            }
            if r >= keep {
                m.set(r, j.cols() + (r - keep), S::one());
            }
        }
        m
    }

    /// `QPosPartial` defining-row block: the chosen rows of the Jacobian
    /// restricted to the coordinates that define `Z`.
    pub fn block_m4<S: Scalar>(&self, j: &Matrix<S>) -> Matrix<S> {
        j.select_rows(self.selected_rows())
    }

    /// `QPosPartial` transversality block: permuted Jacobian rows next to
    /// the tangent of `Ztilde`, which splits into a top identity of size
    /// `q` and a bottom identity of size `rho`.
    pub fn block_m5<S: Scalar>(&self, j: &Matrix<S>) -> Matrix<S> {
        let ell = self.ell();
        let s = ell - self.q - self.rho;
        let mut m = Matrix::zeros(ell, j.cols() + self.q + self.rho);
        for (r, &component) in self.row_permutation.iter().enumerate() {
            for c in 0..j.cols() {
                m.set(r, c, j.at(component, c).clone());
            }
            if r < self.q {
                m.set(r, j.cols() + r, S::one());
            } else if r >= self.q + s {
                m.set(r, j.cols() + self.q + (r - self.q - s), S::one());
            }
        }
        m
    }
}

fn half() -> Rat {
    Rat::new(BigInt::from(1), BigInt::from(2))
}

fn box_around(base: &PointXA, h: &Rat, domain: &DomainSpec) -> Vec<Interval> {
    base.x
        .iter()
        .chain(base.a.iter())
        .zip(domain.intervals.iter())
        .map(|(c, dom)| {
            let mut lo = c - h;
            let mut hi = c + h;
            if let Some(dlo) = &dom.lower {
                if dlo > &lo {
                    lo = dlo.clone();
                }
            }
            if let Some(dhi) = &dom.upper {
                if dhi < &hi {
                    hi = dhi.clone();
                }
            }
            Interval { lower: Some(lo), upper: Some(hi) }
        })
        .collect()
}

/// Three interior probe values per axis (the quarter points).
fn probe_axis(interval: &Interval) -> Vec<Rat> {
    let lo = interval.lower.clone().expect("probe axis is bounded");
    let hi = interval.upper.clone().expect("probe axis is bounded");
    let quarter = (&hi - &lo) / Rat::from_integer(BigInt::from(4));
    (1..=3)
        .map(|k| &lo + &quarter * Rat::from_integer(BigInt::from(k)))
        .collect()
}

fn grid_points(intervals: &[Interval], values_per_axis: impl Fn(&Interval) -> Vec<Rat>, n: usize) -> Vec<PointXA> {
    let axes: Vec<Vec<Rat>> = intervals.iter().map(values_per_axis).collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for prefix in &points {
            for v in axis {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|mut coords| {
            let a = coords.split_off(n);
            PointXA::new(coords, a)
        })
        .collect()
}

const MAX_SHRINK_STEPS: usize = 50;

/// Construct the local model at `base`. Requires a slice target, a base
/// point in the domain whose image is on `Z`, and `rho < ell`.
pub fn build_local_model<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    base: &PointXA,
) -> Result<LocalModel, LocalModelError> {
    let SubmanifoldKind::Slice { zeroed } = &z.kind else {
        return Err(LocalModelError::SliceRequired);
    };
    if !geometry::contains(backend, &family.domain, base)? {
        return Err(LocalModelError::BaseOutsideDomain { point: base.clone() });
    }
    let y = family.eval(backend, base)?;
    if !geometry::on_submanifold(backend, z, &y)? {
        return Err(LocalModelError::BaseNotOnZ { point: base.clone() });
    }
    let ell = family.ell();
    let rho = defect::delta_family(backend, family, z, base)?;
    if rho == ell {
        return Err(LocalModelError::DefectFull { rho });
    }
    let q = z.q();
    let j = family.jacobian_at(backend, base)?;

    let (case_tag, row_permutation, ztilde_zeroed) = if q == 0 {
        // Every coordinate of Z is zeroed; keep the independent rows.
        let selected = backend.pivot_columns(&j.transpose());
        if selected.len() != ell - rho {
            return Err(LocalModelError::RankMismatch {
                expected: ell - rho,
                actual: selected.len(),
            });
        }
        let mut perm = selected.clone();
        perm.extend((0..ell).filter(|i| !selected.contains(i)));
        let zeroed_coords: Vec<usize> = selected.iter().map(|i| i + 1).collect();
        (CaseTag::Q0, perm, zeroed_coords)
    } else {
        let defining_rows: Vec<usize> = zeroed.iter().map(|i| i - 1).collect();
        let j2 = j.select_rows(&defining_rows);
        let picked = backend.pivot_columns(&j2.transpose());
        if picked.len() != ell - q - rho {
            return Err(LocalModelError::RankMismatch {
                expected: ell - q - rho,
                actual: picked.len(),
            });
        }
        if picked.is_empty() {
            // The defining rows vanish to first order: rho = ell - q and
            // the whole chart is the model.
            (CaseTag::QPosFull, (0..ell).collect(), Vec::new())
        } else {
            let selected: Vec<usize> = picked.iter().map(|k| defining_rows[*k]).collect();
            let mut perm: Vec<usize> = (0..ell).filter(|i| !defining_rows.contains(i)).collect();
            perm.extend(selected.iter().copied());
            perm.extend(
                defining_rows
                    .iter()
                    .copied()
                    .filter(|i| !selected.contains(i)),
            );
            let zeroed_coords: Vec<usize> = selected.iter().map(|i| i + 1).collect();
            (CaseTag::QPosPartial, perm, zeroed_coords)
        }
    };

    let ztilde = SubmanifoldSpec::slice(ell, ztilde_zeroed, Vec::new())?;
    let model_stub = LocalModel {
        base: base.clone(),
        rho,
        q,
        case_tag,
        row_permutation,
        ztilde,
        utilde: DomainSpec::unbounded(family.n() + family.m()),
        shrink_iterations: 0,
    };

    // Shrink an open box toward the base until the chosen rows keep full
    // rank and the domain predicates hold on a 3-per-axis probe grid.
    let expected_rank = match case_tag {
        CaseTag::Q0 => Some(ell - rho),
        CaseTag::QPosFull => None,
        CaseTag::QPosPartial => Some(ell - q - rho),
    };
    let mut h = half();
    for iteration in 0..=MAX_SHRINK_STEPS {
        let intervals = box_around(base, &h, &family.domain);
        let candidate = DomainSpec {
            intervals,
            predicates: family.domain.predicates.clone(),
        };
        let mut stable = true;
        'probe: for p in grid_points(&candidate.intervals, probe_axis, family.n()) {
            if !geometry::contains(backend, &candidate, &p)? {
                stable = false;
                break 'probe;
            }
            if let Some(expected) = expected_rank {
                let jp = family.jacobian_at(backend, &p)?;
                let rows = jp.select_rows(model_stub.selected_rows());
                if backend.rank(&rows) != expected {
                    stable = false;
                    break 'probe;
                }
            }
        }
        if stable {
            return Ok(LocalModel {
                utilde: candidate,
                shrink_iterations: iteration,
                ..model_stub
            });
        }
        h *= half();
    }
    Err(LocalModelError::NoStableNeighborhood {
        iterations: MAX_SHRINK_STEPS,
    })
}

/// One verified property over the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub samples_checked: usize,
    pub passed: bool,
    pub first_counterexample: Option<PointXA>,
}

impl PropertyCheck {
    fn new() -> Self {
        PropertyCheck {
            samples_checked: 0,
            passed: true,
            first_counterexample: None,
        }
    }

    fn record(&mut self, p: &PointXA, ok: bool) {
        self.samples_checked += 1;
        if !ok && self.passed {
            self.passed = false;
            self.first_counterexample = Some(p.clone());
        }
    }
}

/// Results of checking the construction's four properties on a grid in
/// `Utilde`, plus the block-rank identity for `QPosPartial` models.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    /// Property 1: `dim Ztilde = q + rho`, checked structurally.
    pub dim_ztilde_ok: bool,
    /// Property 2: images on `Z` stay on `Ztilde`.
    pub containment: PropertyCheck,
    /// Property 3: the family is transverse to `Ztilde` on `Utilde`, both
    /// by a zero defect and by full rank of the permuted block matrix.
    pub transversality: PropertyCheck,
    /// Property 4: slice defects drop by at most `rho`.
    pub defect_drop: PropertyCheck,
    /// `rank M5 = rank M4 + q + rho` at every sample (`QPosPartial` only).
    pub block_identity: Option<PropertyCheck>,
}

impl VerificationRecord {
    pub fn all_passed(&self) -> bool {
        self.dim_ztilde_ok
            && self.containment.passed
            && self.transversality.passed
            && self.defect_drop.passed
            && self.block_identity.as_ref().is_none_or(|c| c.passed)
    }
}

fn interior_axis(interval: &Interval, count: usize) -> Vec<Rat> {
    let lo = interval.lower.clone().expect("utilde axis is bounded");
    let hi = interval.upper.clone().expect("utilde axis is bounded");
    let step = (&hi - &lo) / Rat::from_integer(BigInt::from((count + 1) as u64));
    (1..=count)
        .map(|k| &lo + &step * Rat::from_integer(BigInt::from(k as u64)))
        .collect()
}

/// Check the four properties on an interior grid of `Utilde` sized by the
/// plan's per-axis counts (x axes use `x_count`, a axes use `a_count`).
pub fn verify_local_model<B: Backend>(
    backend: &B,
    model: &LocalModel,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    plan: &SamplingPlan,
) -> Result<VerificationRecord, LocalModelError> {
    let ell = family.ell();
    let n = family.n();
    let dim_ztilde_ok = model.ztilde.q() == model.q + model.rho;
    let mut containment = PropertyCheck::new();
    let mut transversality = PropertyCheck::new();
    let mut defect_drop = PropertyCheck::new();
    let mut block_identity = match model.case_tag {
        CaseTag::QPosPartial => Some(PropertyCheck::new()),
        _ => None,
    };

    let x_axes: Vec<Vec<Rat>> = model.utilde.intervals[..n]
        .iter()
        .map(|axis| interior_axis(axis, plan.x_count))
        .collect();
    let a_axes: Vec<Vec<Rat>> = model.utilde.intervals[n..]
        .iter()
        .map(|axis| interior_axis(axis, plan.a_count))
        .collect();
    let mut axes = x_axes;
    axes.extend(a_axes);
    let mut points = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for prefix in &points {
            for v in axis {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        points = next;
    }

    for mut coords in points {
        let a = coords.split_off(n);
        let p = PointXA::new(coords, a);
        if !geometry::contains(backend, &model.utilde, &p)? {
            continue;
        }
        let y = family.eval(backend, &p)?;
        let j = family.jacobian_at(backend, &p)?;

        let on_z = geometry::on_submanifold(backend, z, &y)?;
        let on_ztilde = geometry::on_submanifold(backend, &model.ztilde, &y)?;
        containment.record(&p, !on_z || on_ztilde);

        let delta = defect::delta_family(backend, family, &model.ztilde, &p)?;
        let block_rank_ok = match model.case_tag {
            CaseTag::Q0 => backend.rank(&model.block_m2(&j)) == ell,
            CaseTag::QPosFull => true,
            CaseTag::QPosPartial => backend.rank(&model.block_m5(&j)) == ell,
        };
        transversality.record(&p, delta == 0 && block_rank_ok);

        let drop_z = defect::delta_slice(backend, family, z, &p)? as isize;
        let drop_zt = defect::delta_slice(backend, family, &model.ztilde, &p)? as isize;
        defect_drop.record(&p, drop_z - drop_zt <= model.rho as isize);

        if let Some(check) = block_identity.as_mut() {
            let rank_m5 = backend.rank(&model.block_m5(&j));
            let rank_m4 = backend.rank(&model.block_m4(&j));
            check.record(&p, rank_m5 == rank_m4 + model.q + model.rho);
        }
    }

    Ok(VerificationRecord {
        dim_ztilde_ok,
        containment,
        transversality,
        defect_drop,
        block_identity,
    })
}
