//! Transversality defects and the strata they cut out.
//!
//! At a point `p = (x, a)` with `F(p)` on `Z`, the family defect is
//! `ell - dim(im dF + T Z)` over the full Jacobian in `(x, a)`, and the
//! slice defect is the same with only the x columns, i.e. for the single
//! map `F_a`. Both are zero exactly at transverse points and the slice
//! defect can never be smaller than the family defect, since the slice
//! image is a subspace of the family image.
//!
//! Strata: points off `Z` are `NotOnZ`; transverse slice points are
//! `Transverse`; equal positive defects land in `W`; a strictly larger
//! slice defect lands in `Wtilde(rho)` where `rho` is the family defect.

use crate::expr::EvalError;
use crate::genericity::{self, PlanError, SamplingPlan};
use crate::geometry::{
    self, GeometryError, ParamFamily, PointXA, SubmanifoldSpec, TangentBasis,
};
use crate::linalg::{dim_span_union, Backend, LinalgError, Matrix};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DefectError {
    #[error("point {point} lies outside the family domain")]
    PointOutsideDomain { point: PointXA },
    #[error("slice defect {delta_slice} below family defect {delta_family}: rank tolerances are inconsistent at this point")]
    RankInconsistency {
        delta_family: usize,
        delta_slice: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Which map a transversality question refers to: the whole family over
/// `(x, a)` or the single slice `F_a` at the point's parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Family,
    Slice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    NotOnZ,
    Transverse,
    W,
    Wtilde(usize),
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::NotOnZ => f.write_str("NotOnZ"),
            Stratum::Transverse => f.write_str("Transverse"),
            Stratum::W => f.write_str("W"),
            Stratum::Wtilde(rho) => write!(f, "Wtilde({rho})"),
        }
    }
}

/// Everything the classifier knows about one point.
///
/// `sum_dim_*` is the dimension of `im(dF) + T Z` (family) respectively
/// `im(dF_a) + T Z` (slice) at `F(p)`; off `Z` there is no tangent space
/// and both sums are reported as 0 alongside zero defects.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub point: PointXA,
    pub on_z: bool,
    pub delta_family: usize,
    pub delta_slice: usize,
    pub sum_dim_family: usize,
    pub sum_dim_slice: usize,
    pub stratum: Stratum,
    pub mather_hypothesis: bool,
}

/// Full Jacobian of the family at `p` in the backend scalar.
pub fn jacobian_family<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    p: &PointXA,
) -> Result<Matrix<B::S>, DefectError> {
    Ok(family.jacobian_at(backend, p)?)
}

fn tangent_at<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<Option<TangentBasis<B::S>>, DefectError> {
    let y = family.eval(backend, p)?;
    if !geometry::on_submanifold(backend, z, &y)? {
        return Ok(None);
    }
    Ok(Some(geometry::tangent_of_z(backend, z, &y)?))
}

fn require_in_domain<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    p: &PointXA,
) -> Result<(), DefectError> {
    if geometry::contains(backend, &family.domain, p)? {
        Ok(())
    } else {
        Err(DefectError::PointOutsideDomain { point: p.clone() })
    }
}

/// Family defect at `p`; zero when `F(p)` is off `Z`.
pub fn delta_family<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<usize, DefectError> {
    require_in_domain(backend, family, p)?;
    let Some(tangent) = tangent_at(backend, family, z, p)? else {
        return Ok(0);
    };
    let j = family.jacobian_at(backend, p)?;
    let sum = dim_span_union(backend, &j, &tangent.columns)?;
    Ok(family.ell() - sum)
}

/// Slice defect at `p`, using only the x columns of the Jacobian; zero when
/// `F(p)` is off `Z`.
pub fn delta_slice<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<usize, DefectError> {
    require_in_domain(backend, family, p)?;
    let Some(tangent) = tangent_at(backend, family, z, p)? else {
        return Ok(0);
    };
    let j = family.jacobian_at(backend, p)?;
    let jx = j.column_range(0, family.n());
    let sum = dim_span_union(backend, &jx, &tangent.columns)?;
    Ok(family.ell() - sum)
}

pub fn is_transverse_at<B: Backend>(
    backend: &B,
    kind: MapKind,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<bool, DefectError> {
    let delta = match kind {
        MapKind::Family => delta_family(backend, family, z, p)?,
        MapKind::Slice => delta_slice(backend, family, z, p)?,
    };
    Ok(delta == 0)
}

/// Classify one point: membership, both defects, stratum, and whether the
/// hypothesis `delta_slice = 0 or delta_family < delta_slice` holds.
pub fn classify<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    p: &PointXA,
) -> Result<DefectReport, DefectError> {
    require_in_domain(backend, family, p)?;
    let ell = family.ell();
    let Some(tangent) = tangent_at(backend, family, z, p)? else {
        return Ok(DefectReport {
            point: p.clone(),
            on_z: false,
            delta_family: 0,
            delta_slice: 0,
            sum_dim_family: 0,
            sum_dim_slice: 0,
            stratum: Stratum::NotOnZ,
            mather_hypothesis: true,
        });
    };
    let j = family.jacobian_at(backend, p)?;
    let jx = j.column_range(0, family.n());
    let sum_dim_family = dim_span_union(backend, &j, &tangent.columns)?;
    let sum_dim_slice = dim_span_union(backend, &jx, &tangent.columns)?;
    let delta_family = ell - sum_dim_family;
    let delta_slice = ell - sum_dim_slice;
    if delta_slice < delta_family {
        return Err(DefectError::RankInconsistency {
            delta_family,
            delta_slice,
        });
    }
    let stratum = if delta_slice == 0 {
        Stratum::Transverse
    } else if delta_slice == delta_family {
        Stratum::W
    } else {
        Stratum::Wtilde(delta_family)
    };
    Ok(DefectReport {
        point: p.clone(),
        on_z: true,
        delta_family,
        delta_slice,
        sum_dim_family,
        sum_dim_slice,
        stratum,
        mather_hypothesis: delta_slice == 0 || delta_family < delta_slice,
    })
}

/// Sampled estimate of the family defect supremum over the plan's box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupEstimate {
    /// Largest family defect seen; a lower bound for the true supremum.
    pub value: usize,
    /// How many samples fell inside the domain and were classified.
    pub points_classified: usize,
}

pub fn delta_sup_estimate<B: Backend>(
    backend: &B,
    family: &ParamFamily,
    z: &SubmanifoldSpec,
    plan: &SamplingPlan,
) -> Result<SupEstimate, DefectError> {
    let xs = genericity::x_samples(plan)?;
    let as_ = genericity::a_samples(plan)?;
    let mut value = 0usize;
    let mut points_classified = 0usize;
    for a in &as_ {
        for x in &xs {
            let p = PointXA::new(x.clone(), a.clone());
            if !geometry::contains(backend, &family.domain, &p)? {
                continue;
            }
            value = value.max(delta_family(backend, family, z, &p)?);
            points_classified += 1;
        }
    }
    Ok(SupEstimate {
        value,
        points_classified,
    })
}
