//! Self-checks behind `examples --check`: each built-in scenario carries a
//! small set of ground-truth assertions (known strata, frequencies,
//! verdicts, and model shapes) evaluated with the exact backend.

use num::Zero;
use transversal::defect::{self, Stratum};
use transversal::genericity::{self, GenericityReport, Verdict};
use transversal::geometry::{rat, rat_int, PointXA, SubmanifoldKind};
use transversal::local_model::{self, CaseTag};
use transversal::scenario::{self, Scenario};
use transversal::ExactBackend;

pub fn run_check(name: &str) -> Result<(), String> {
    let s = scenario::builtin(name).map_err(|e| e.to_string())?;
    match name {
        "example1" => check_example1(&s),
        "example2" => check_example2(&s),
        "example3" => check_example3(&s),
        "parabola" => check_parabola(&s),
        other => Err(format!("no self-check for {other:?}")),
    }
}

fn check(condition: bool, what: &str) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn scan(s: &Scenario) -> Result<genericity::ScanResult, String> {
    genericity::scan(&ExactBackend, &s.family, &s.z, &s.plan).map_err(fail)
}

fn verdicts(report: &GenericityReport, expected: Verdict, what: &str) -> Result<(), String> {
    check(
        report.verdict_alpha == expected
            && report.verdict_beta == expected
            && report.agreement,
        what,
    )
}

fn check_example1(s: &Scenario) -> Result<(), String> {
    let result = scan(s)?;
    check(
        result.table.iter().all(|r| {
            r.on_z && r.stratum == Stratum::W && r.delta_family == 1 && r.delta_slice == 1
        }),
        "every sampled point lies in W with both defects 1",
    )?;
    check(
        result.report.freq_w.hits == result.report.freq_w.total
            && result.report.freq_w.total == s.plan.a_count,
        "W is seen over every sampled parameter",
    )?;
    verdicts(&result.report, Verdict::Fails, "both verdicts fail together")?;
    check(
        result.report.r_condition.bound == 1 && result.report.r_condition.satisfied,
        "smoothness bound is 1 and satisfied",
    )
}

fn check_example2(s: &Scenario) -> Result<(), String> {
    let result = scan(s)?;
    for row in &result.table {
        let on_cross = row.point.x[0].is_zero() || row.point.a[0].is_zero();
        check(row.on_z == on_cross, "Z membership is exactly the cross ax = 0")?;
        check(
            (row.stratum == Stratum::W) == on_cross,
            "W is exactly the cross ax = 0",
        )?;
        if on_cross {
            check(
                row.delta_family == 1 && row.delta_slice == 1,
                "points on the cross have both defects 1",
            )?;
        }
    }
    check(
        result.report.freq_w.hits == result.report.freq_w.total,
        "W is seen over every sampled parameter",
    )?;
    verdicts(&result.report, Verdict::Fails, "both verdicts fail together")?;
    check(
        result.report.r_condition.bound == 1 && result.report.r_condition.satisfied,
        "smoothness bound is 1 and satisfied",
    )
}

fn check_example3(s: &Scenario) -> Result<(), String> {
    let b = ExactBackend;
    let result = scan(s)?;
    check(
        result.table.iter().all(|r| r.stratum == Stratum::NotOnZ),
        "the parameter grid steps over a = 0, so no sample meets Z",
    )?;
    check(
        result.report.freq_nontransverse.hits == 0,
        "no sampled parameter is flagged",
    )?;
    verdicts(&result.report, Verdict::Holds, "both verdicts hold together")?;
    check(
        result.report.r_condition.bound == 0 && result.report.r_condition.satisfied,
        "smoothness bound is 0 and satisfied",
    )?;

    let base = PointXA::new(vec![rat(1, 2)], vec![rat_int(0)]);
    let report = defect::classify(&b, &s.family, &s.z, &base).map_err(fail)?;
    check(
        report.stratum == Stratum::Wtilde(1)
            && report.delta_family == 1
            && report.delta_slice == 2
            && report.mather_hypothesis,
        "(1/2, 0) sits in Wtilde(1) with defects 1 and 2",
    )?;
    let endpoint = PointXA::new(vec![rat_int(0)], vec![rat_int(0)]);
    let report = defect::classify(&b, &s.family, &s.z, &endpoint).map_err(fail)?;
    check(
        report.stratum == Stratum::NotOnZ && report.delta_family == 0,
        "(0, 0) misses the open segment, so its defect vanishes",
    )?;

    let model = local_model::build_local_model(&b, &s.family, &s.z, &base).map_err(fail)?;
    check(model.case_tag == CaseTag::QPosPartial, "base case is QPosPartial")?;
    let SubmanifoldKind::Slice { zeroed } = &model.ztilde.kind else {
        return Err("model target is not a slice".to_string());
    };
    check(
        zeroed == &[2] && model.ztilde.q() == 2,
        "the model zeroes y2 and has dimension 2",
    )?;
    let record =
        local_model::verify_local_model(&b, &model, &s.family, &s.z, &s.plan).map_err(fail)?;
    check(record.all_passed(), "local model verification passes")
}

fn check_parabola(s: &Scenario) -> Result<(), String> {
    let b = ExactBackend;
    let result = scan(s)?;
    check(
        result
            .table
            .iter()
            .all(|r| !r.on_z || r.stratum == Stratum::Transverse),
        "every sampled point on Z is transverse",
    )?;
    check(
        result.report.freq_nontransverse.hits == 0,
        "no sampled parameter is flagged",
    )?;
    verdicts(&result.report, Verdict::Holds, "both verdicts hold together")?;
    check(
        result.report.r_condition.bound == 0 && result.report.r_condition.satisfied,
        "smoothness bound is 0 and satisfied",
    )?;

    let vertex = PointXA::new(vec![rat_int(0)], vec![rat_int(0)]);
    let report = defect::classify(&b, &s.family, &s.z, &vertex).map_err(fail)?;
    check(
        report.stratum == Stratum::Wtilde(0) && report.delta_slice == 1,
        "the vertex has slice defect 1 over a transverse family",
    )?;
    check(
        genericity::projection_regularity(&b, &s.family, &s.z, &vertex).map_err(fail)?
            == genericity::Regularity::Critical,
        "the projection is critical at the vertex",
    )?;
    let side = PointXA::new(vec![rat(1, 10)], vec![rat(1, 100)]);
    check(
        genericity::projection_regularity(&b, &s.family, &s.z, &side).map_err(fail)?
            == genericity::Regularity::Regular,
        "the projection is regular away from the vertex",
    )?;
    let kernel = genericity::preimage_tangent(&b, &s.family, &s.z, &side).map_err(fail)?;
    check(
        kernel.cols() == 1,
        "the preimage is a curve: kernel dimension n + m - (ell - q) = 1",
    )
}
