//! The acceptance suite: every criterion as a list of report checks.
//!
//! Criteria 1–8 are pure functions of the seed. Criterion 9 reruns the
//! whole suite and compares the serialized reports byte for byte.

use std::time::{Duration, Instant};

use crate::bivector::{curvature_operator, FiberVector3};
use crate::builtin;
use crate::error::Result;
use crate::expr::ScalarField;
use crate::geometry::{curvature_summary, MetricSpec};
use crate::parahermitian::structure_tests;
use crate::petean::{assemble_atlas, solve_dbar_constant, verify_coordinates, verify_petean, PeteanSpec};
use crate::report::{Check, Report};
use crate::sampling::{sample_points, Sampler};
use crate::twistor::{CoordinateOracle, Structure, TwistorContext, TwistorTangent};

/// Wall-clock budget of one full run.
pub const TIME_BUDGET: Duration = Duration::from_secs(120);

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "flat space"),
    (2, "constant curvature"),
    (3, "oracle equivalence"),
    (4, "semi-Kaehler and co-differential"),
    (5, "Weingarten map"),
    (6, "Petean family"),
    (7, "dbar system"),
    (8, "hyperhermitian structures"),
    (9, "timing and determinism"),
];

const PETEAN_F: [&str; 3] = ["1", "1+x1^2+x2^2", "exp(x1)"];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub number: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Name and margin of the worst failing check, if any.
    pub fn summary(&self) -> String {
        match self.checks.iter().find(|c| !c.pass) {
            None => format!("{} checks", self.checks.len()),
            Some(c) => format!("{} residual {:e} vs {:e}", c.name, c.residual, c.tolerance),
        }
    }
}

fn title(number: u8) -> &'static str {
    CRITERIA.iter().find(|(n, _)| *n == number).map_or("", |(_, t)| t)
}

/// Runs criterion `number` (1–8).
pub fn criterion(number: u8, seed: u64) -> Result<CriterionResult> {
    let checks = match number {
        1 => flat_space(seed)?,
        2 => constant_curvature(seed)?,
        3 => oracle_equivalence(seed)?,
        4 => co_differential(seed)?,
        5 => weingarten(seed)?,
        6 => petean_family(seed)?,
        7 => dbar_system(seed)?,
        8 => hyperhermitian(seed)?,
        _ => {
            return Err(crate::Error::InvalidParameter(format!(
                "criterion {number} is not a standalone suite"
            )))
        }
    };
    Ok(CriterionResult {
        number,
        title: title(number),
        checks,
    })
}

/// Criteria 1–8 as one report.
pub fn run(seed: u64) -> Result<Report> {
    let mut report = Report::new("selftest", seed);
    for number in 1..=8 {
        let result = criterion(number, seed)?;
        report.extend(result.checks.into_iter().map(|mut c| {
            c.name = format!("c{number}_{}", c.name);
            c
        }));
    }
    Ok(report)
}

/// The full suite: criteria 1–8 twice, plus the timing and determinism
/// checks of criterion 9. Returns the report and the duration of the
/// first run.
pub fn run_full(seed: u64) -> Result<(Report, Duration)> {
    let start = Instant::now();
    let mut report = run(seed)?;
    let elapsed = start.elapsed();
    let again = run(seed)?;
    let identical = report.to_json() == again.to_json();
    report.push(Check::expect(
        "c9_wall_clock",
        elapsed < TIME_BUDGET,
        "full suite within 120 s",
        1,
    ));
    report.push(Check::expect(
        "c9_deterministic",
        identical,
        "byte-identical reports for the same seed",
        2,
    ));
    Ok((report, elapsed))
}

fn max_over<T>(items: impl IntoIterator<Item = T>, f: impl FnMut(T) -> Result<f64>) -> Result<f64> {
    items.into_iter().map(f).try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
}

fn general_tangent(s: &mut Sampler, y: &FiberVector3) -> TwistorTangent {
    TwistorTangent::new(s.vector(), s.fiber_tangent(y))
}

fn flat_space(seed: u64) -> Result<Vec<Check>> {
    let spec = builtin::flat()?;
    let points = sample_points(&spec.bounds, 100, seed)?;
    let curvature = max_over(&points, |p| {
        let op = curvature_operator(&spec, p)?;
        let summary = curvature_summary(&spec, p)?;
        Ok(op.matrix.amax().max(summary.ricci.amax()).max(summary.tau.abs()))
    })?;

    let mut s = Sampler::new(seed ^ 0x01);
    let (mut n1, mut pairing_err, mut pairing_max) = (0.0f64, 0.0f64, 0.0f64);
    let sigma = FiberVector3::new(1.0, 0.0, 0.0);
    let v = TwistorTangent::vertical(FiberVector3::new(0.0, 1.0, 1.0));
    for p in &points {
        let ctx = TwistorContext::at(&spec, p)?;
        let y = s.fiber();
        let (a, b) = (general_tangent(&mut s, &y), general_tangent(&mut s, &y));
        n1 = n1.max(ctx.nijenhuis(Structure::J1, &y, &a, &b).norm());

        let (x, w) = (s.vector(), s.vector());
        let t = s.uniform(0.5, 2.0) * if s.uniform(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
        let n = ctx.nijenhuis(Structure::J2, &sigma, &v, &TwistorTangent::horizontal(x));
        let got = ctx.ht_inner(t, &n, &TwistorTangent::horizontal(w))?;
        let (j2, j3) = (ctx.j[1].value, ctx.j[2].value);
        let expected = -2.0 * (ctx.geom.inner(&x, &(j2 * w)) - ctx.geom.inner(&x, &(j3 * w)));
        pairing_err = pairing_err.max((got - expected).abs());
        pairing_max = pairing_max.max(got.abs());
    }
    let n = points.len();
    Ok(vec![
        Check::at_most("curvature", curvature, 1e-10, "flat metric has R = 0", n),
        Check::at_most("N1", n1, 1e-8, "J1 integrable on flat space", n),
        Check::at_most(
            "N2_pairing",
            pairing_err,
            1e-8,
            "h_t(N2(V,X^h),Y^h) = -2[g(X,J2Y) - g(X,J3Y)]",
            n,
        ),
        Check::exceeds("N2_pairing_nonzero", pairing_max, 1e-3, "N2 not identically zero", n),
    ])
}

fn constant_curvature(seed: u64) -> Result<Vec<Check>> {
    let spec = builtin::constant_curvature(1.0)?;
    let points = sample_points(&spec.bounds, 100, seed)?;
    let (mut tau, mut w_minus, mut w_plus, mut b) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in &points {
        let op = curvature_operator(&spec, p)?;
        tau = tau.max((curvature_summary(&spec, p)?.tau - 12.0).abs());
        w_minus = w_minus.max(op.w_minus_norm());
        w_plus = w_plus.max(op.w_plus_norm());
        b = b.max(op.b_norm());
    }

    let twistor_points = sample_points(&spec.bounds, 30, seed ^ 0x02)?;
    let mut s = Sampler::new(seed ^ 0x03);
    let (mut d1, mut d2, mut nk, mut n2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in &twistor_points {
        let ctx = TwistorContext::at(&spec, p)?;
        let y = s.fiber();
        let (a, bt, c) = (
            general_tangent(&mut s, &y),
            general_tangent(&mut s, &y),
            general_tangent(&mut s, &y),
        );
        let o1 = CoordinateOracle::new(&spec, ctx.plan().clone(), Structure::J1, -1.0)?;
        d1 = d1.max(o1.d_omega(&ctx, &y, &a, &bt, &c)?.abs());
        let o2 = CoordinateOracle::new(&spec, ctx.plan().clone(), Structure::J2, 1.0)?;
        d2 = d2.max(o2.d_omega(&ctx, &y, &a, &bt, &c)?.abs());
        nk = nk.max(
            ctx.nearly_kahler_residual(Structure::J2, -0.5, &y, &a.x, &bt.x, &c.v)?
                .max_abs(),
        );
        n2 = n2.max(ctx.nijenhuis_horizontal(Structure::J2, &y, &a.x, &bt.x).norm());
    }
    let (n, m) = (points.len(), twistor_points.len());
    Ok(vec![
        Check::at_most("tau", tau, 1e-6, "tau = 12 for kappa = 1", n),
        Check::at_most("W_minus", w_minus, 1e-7, "space form is self-dual", n),
        Check::at_most("W_plus", w_plus, 1e-7, "space form is anti-self-dual", n),
        Check::at_most("B", b, 1e-7, "space form is Einstein", n),
        Check::at_most("dOmega1_t-1_oracle", d1, 1e-6, "(J1,h_t) Kaehler at t*tau = -12", m),
        Check::at_most(
            "dOmega2_t1_oracle",
            d2,
            1e-6,
            "(J2,h_t) almost Kaehler at t*tau = 12",
            m,
        ),
        Check::at_most(
            "nearly_kahler_t-0.5",
            nk,
            1e-6,
            "(J2,h_t) nearly Kaehler at t*tau = -6",
            m,
        ),
        Check::exceeds("N2_horizontal", n2, 1e-3, "J2 never integrable", m),
    ])
}

fn oracle_equivalence(seed: u64) -> Result<Vec<Check>> {
    let specs = [
        builtin::flat()?,
        builtin::constant_curvature(1.0)?,
        PeteanSpec::parse("1+x1^2+x2^2")?.metric().clone(),
    ];
    let labels = ["flat", "constcurv1", "petean"];
    let mut checks = Vec::new();
    for (spec, label) in specs.iter().zip(labels) {
        let (n_err, d_err, samples) = compare_with_oracle(spec, 50, seed)?;
        checks.push(Check::at_most(
            &format!("N_formula_vs_oracle_{label}"),
            n_err,
            1e-6,
            "closed-form Nijenhuis tensor vs coordinate brackets",
            samples,
        ));
        checks.push(Check::at_most(
            &format!("dOmega_formula_vs_oracle_{label}"),
            d_err,
            1e-6,
            "closed-form dOmega vs coordinate exterior derivative",
            samples,
        ));
    }
    Ok(checks)
}

fn compare_with_oracle(spec: &MetricSpec, samples: usize, seed: u64) -> Result<(f64, f64, usize)> {
    let points = sample_points(&spec.bounds, samples, seed ^ 0x04)?;
    let mut s = Sampler::new(seed ^ 0x05);
    let (mut n_err, mut d_err) = (0.0f64, 0.0f64);
    for (i, p) in points.iter().enumerate() {
        let k = if i % 2 == 0 { Structure::J1 } else { Structure::J2 };
        let t = [1.0, -0.5, 2.0, -1.0][i % 4];
        let ctx = TwistorContext::at(spec, p)?;
        let y = s.fiber();
        let (a, b, c) = (
            general_tangent(&mut s, &y),
            general_tangent(&mut s, &y),
            general_tangent(&mut s, &y),
        );
        let oracle = CoordinateOracle::new(spec, ctx.plan().clone(), k, t)?;
        let (n_oracle, d_oracle) = oracle.evaluate(&ctx, &y, &a, &b, &c)?;
        n_err = n_err.max(ctx.nijenhuis(k, &y, &a, &b).sub(&n_oracle).norm());
        d_err = d_err.max((ctx.d_omega(k, t, &a, &b, &c)? - d_oracle).abs());
    }
    Ok((n_err, d_err, points.len()))
}

fn delta_omega_max(spec: &MetricSpec, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut s = Sampler::new(seed ^ 0x06);
    let (mut delta, mut w_minus) = (0.0f64, 0.0f64);
    for (i, p) in sample_points(&spec.bounds, samples, seed ^ 0x07)?.iter().enumerate() {
        let ctx = TwistorContext::at(spec, p)?;
        let y = s.fiber();
        let a = general_tangent(&mut s, &y);
        let t = [1.0, -1.0, 0.5, -2.0][i % 4];
        delta = delta.max(ctx.delta_omega(t, &y, &a)?.abs());
        w_minus = w_minus.max(ctx.curvature.w_minus_norm());
    }
    Ok((delta, w_minus))
}

fn co_differential(seed: u64) -> Result<Vec<Check>> {
    let self_dual = [
        ("flat", builtin::flat()?),
        ("constcurv1", builtin::constant_curvature(1.0)?),
        ("constcurv-1", builtin::constant_curvature(-1.0)?),
        ("petean", PeteanSpec::parse("1+x1^2+x2^2")?.metric().clone()),
    ];
    let samples = 50;
    let mut checks = Vec::new();
    for (label, spec) in &self_dual {
        let (delta, _) = delta_omega_max(spec, samples, seed)?;
        checks.push(Check::at_most(
            &format!("delta_omega_{label}"),
            delta,
            1e-8,
            "co-closed fundamental form on a self-dual metric",
            samples,
        ));
    }
    let (delta, w_minus) = delta_omega_max(&builtin::perturbed_non_self_dual()?, samples, seed)?;
    checks.push(Check::exceeds(
        "W_minus_perturbed",
        w_minus,
        1e-3,
        "perturbed metric is not self-dual",
        samples,
    ));
    checks.push(Check::exceeds(
        "delta_omega_perturbed",
        delta,
        1e-4,
        "g(W-(sigma), sigma x U) != 0 obstructs semi-Kaehler",
        samples,
    ));
    Ok(checks)
}

fn weingarten(seed: u64) -> Result<Vec<Check>> {
    let specs = [builtin::constant_curvature(1.0)?, builtin::perturbed_non_self_dual()?];
    let mut checks = Vec::new();
    for t in [-2.0, -1.0, 1.0, 4.0] {
        let mut s = Sampler::new(seed ^ 0x08);
        let mut err = 0.0f64;
        let mut count = 0;
        for spec in &specs {
            for p in sample_points(&spec.bounds, 10, seed ^ 0x09)? {
                let ctx = TwistorContext::at(spec, &p)?;
                let y = s.fiber();
                let a = general_tangent(&mut s, &y);
                let formula = ctx.weingarten(t, &a)?;
                let numeric = ctx.weingarten_from_connection(t, &y, &a)?;
                err = err.max(formula.sub(&numeric).norm());
                count += 1;
            }
        }
        checks.push(Check::at_most(
            &format!("weingarten_t{t}"),
            err,
            1e-8,
            "A_t = (sqrt|t|/t) vertical projection",
            count,
        ));
    }
    Ok(checks)
}

fn petean_family(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, f) in PETEAN_F.iter().enumerate() {
        let fspec = PeteanSpec::parse(f)?;
        let label = ["f1", "f_quadratic", "f_exp"][i];
        let r = verify_petean(&fspec, 100, seed)?;
        checks.push(Check::at_most(
            &format!("ricci_{label}"),
            r.ricci,
            1e-8,
            "Ricci-flat",
            r.samples,
        ));
        checks.push(Check::at_most(
            &format!("W_minus_{label}"),
            r.w_minus,
            1e-8,
            "self-dual",
            r.samples,
        ));
        checks.push(Check::at_most(
            &format!("parallel_{label}"),
            r.parallel,
            1e-8,
            "D s_a = 0",
            r.samples,
        ));
        let c = verify_coordinates(&fspec, 50, seed ^ 0x0a)?;
        checks.push(Check::at_most(
            &format!("cr_G1_{label}"),
            c.cr_g1,
            1e-10,
            "G1 is J1-holomorphic",
            c.samples,
        ));
        checks.push(Check::at_most(
            &format!("cr_G2_{label}"),
            c.cr_g2,
            1e-10,
            "G2 is J1-holomorphic",
            c.samples,
        ));
        checks.push(Check::at_most(
            &format!("cr_frame_form_{label}"),
            c.frame_cr,
            1e-10,
            "G1, G2 annihilated by W + iJ1W",
            c.samples,
        ));
        checks.push(Check::at_most(
            &format!("compatibility_identity_{label}"),
            c.identity,
            1e-8,
            "solvability identity of the dbar system",
            c.samples,
        ));
        checks.push(Check::at_most(
            &format!("displayed_partials_{label}"),
            c.partials.max(c.closed_forms),
            1e-10,
            "closed-form partials of x1, x2 in z, w",
            c.samples,
        ));
    }
    Ok(checks)
}

fn dbar_system(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for c in [1.0, 2.5] {
        let fspec = PeteanSpec::parse(&c.to_string())?;
        let h = solve_dbar_constant(c)?;
        let atlas = assemble_atlas(&fspec, &h, 100, seed ^ 0x0b)?;
        let n = atlas.samples;
        checks.push(Check::at_most(
            &format!("dbar_c{c}"),
            atlas.dbar,
            1e-12,
            "H solves the dbar system",
            n,
        ));
        let cr = atlas.cr_g1.max(atlas.cr_g2).max(atlas.cr_g3);
        checks.push(Check::at_most(
            &format!("cr_G123_c{c}"),
            cr,
            1e-9,
            "G1, G2, G3 are J1-holomorphic",
            n,
        ));
        checks.push(Check::exceeds(
            &format!("jacobian_c{c}"),
            atlas.min_abs_det,
            1e-6,
            "(G1, G2, G3) is a local chart",
            n,
        ));
    }
    Ok(checks)
}

fn hyperhermitian(seed: u64) -> Result<Vec<Check>> {
    let fspec = PeteanSpec::parse("1+x1^2+x2^2")?;
    let triple = fspec.triple();
    let samples = 30;
    let plain = structure_tests(fspec.metric(), &triple, samples, seed ^ 0x0c)?;
    let theta = ScalarField::parse("0.7*x1 + 0.3*x1^2")?;
    let rotated = structure_tests(fspec.metric(), &triple.rotated(&theta)?, samples, seed ^ 0x0c)?;
    Ok(vec![
        Check::at_most(
            "hyperkahler_petean",
            plain.hyperkahler_residual,
            1e-8,
            "alpha = beta = gamma = 0",
            samples,
        ),
        Check::at_most(
            "integrable_all_Jy_petean",
            plain.integrable_residual,
            1e-8,
            "every J_y integrable",
            samples,
        ),
        Check::expect(
            "y_grid_agrees_petean",
            plain.consistent(),
            "form criterion vs y-grid",
            samples,
        ),
        Check::exceeds(
            "hyperkahler_rotated",
            rotated.hyperkahler_residual,
            1e-3,
            "rotated triple is not parallel",
            samples,
        ),
        Check::expect(
            "y_grid_agrees_rotated",
            rotated.consistent(),
            "form criterion vs y-grid",
            samples,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(criterion(9, 0).is_err());
        assert!(criterion(0, 0).is_err());
    }

    #[test]
    fn fast_criteria_pass() {
        for n in [1, 5] {
            let r = criterion(n, 3).unwrap();
            assert!(r.pass(), "{}", r.summary());
        }
    }
}
