//! Classification of the almost Hermitian structures `(𝒥_k, h_t)`.
//!
//! Verdicts follow the curvature criteria: integrability of `𝒥₁` and the
//! semi-Kähler property are governed by `W⁻`; the Kähler, almost Kähler
//! and nearly Kähler properties additionally need the Einstein condition
//! and a specific value of `tτ`. Each verdict can be cross-checked against
//! the closed-form tensors (or the coordinate oracles) on random twistor
//! samples.

use serde::Serialize;

use super::{CoordinateOracle, Structure, TwistorContext, TwistorTangent};
use crate::bivector::FiberVector3;
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::report::Check;
use crate::sampling::{sample_points, Sampler};

/// Relative verdict tolerance: equality conditions pass when the residual
/// is at most `EQUALITY_TOLERANCE · (1 + |τ|)`.
pub const EQUALITY_TOLERANCE: f64 = 1e-7;

/// Tolerance for cross-checks evaluated with the coordinate oracles.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub t: f64,
    pub samples: usize,
    pub seed: u64,
    /// Recompute each verdict from the twistor tensors on random samples.
    pub cross_check: bool,
    /// Use the coordinate oracles instead of the closed forms for the
    /// cross-checks.
    pub oracle: bool,
    /// Real dimension of the base; only 4 is supported.
    pub dimension: usize,
}

impl ClassifyOptions {
    pub fn new(t: f64) -> Self {
        ClassifyOptions {
            t,
            samples: 100,
            seed: 0,
            cross_check: true,
            oracle: false,
            dimension: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub residual: f64,
    pub tolerance: f64,
    /// Largest value of the corresponding twistor tensor over the samples.
    pub cross_check: Option<f64>,
    pub cross_tolerance: Option<f64>,
    /// Whether the cross-check agrees with the verdict.
    pub consistent: bool,
}

impl Verdict {
    fn new(residual: f64, tolerance: f64, cross: Option<(f64, f64)>) -> Self {
        let holds = residual <= tolerance;
        let consistent = cross.is_none_or(|(value, tol)| (value <= tol) == holds);
        Verdict {
            holds,
            residual,
            tolerance,
            cross_check: cross.map(|c| c.0),
            cross_tolerance: cross.map(|c| c.1),
            consistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub t: f64,
    pub samples: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub einstein_residual: f64,
    pub sd_residual: f64,
    pub tolerance: f64,
    pub j1_integrable: Verdict,
    pub j2_integrable: Verdict,
    pub semi_kahler_k1: Verdict,
    pub semi_kahler_k2: Verdict,
    pub kahler_j1: Verdict,
    pub almost_kahler_j2: Verdict,
    pub nearly_kahler_j2: Verdict,
}

impl ClassificationReport {
    pub fn verdicts(&self) -> [(&'static str, &Verdict, &'static str); 7] {
        [
            ("J1_integrable", &self.j1_integrable, "J1 integrable iff self-dual"),
            ("J2_integrable", &self.j2_integrable, "J2 never integrable"),
            (
                "semi_kahler_k1",
                &self.semi_kahler_k1,
                "(J1,h_t) semi-Kaehler iff W- = 0",
            ),
            (
                "semi_kahler_k2",
                &self.semi_kahler_k2,
                "(J2,h_t) semi-Kaehler iff W- = 0",
            ),
            ("kahler_J1", &self.kahler_j1, "Einstein, self-dual, t*tau = -12"),
            (
                "almost_kahler_J2",
                &self.almost_kahler_j2,
                "Einstein, self-dual, t*tau = 12",
            ),
            (
                "nearly_kahler_J2",
                &self.nearly_kahler_j2,
                "Einstein, self-dual, t*tau = -6",
            ),
        ]
    }

    /// One check per verdict: it passes when the cross-check agrees.
    pub fn checks(&self) -> Vec<Check> {
        self.verdicts()
            .into_iter()
            .map(|(name, v, anchor)| Check::expect(&format!("{name}_consistent"), v.consistent, anchor, self.samples))
            .collect()
    }
}

#[derive(Default)]
struct CrossMax {
    n1: f64,
    n2_mixed: f64,
    delta: f64,
    d1: f64,
    d2: f64,
    nearly: f64,
}

pub fn classify(spec: &MetricSpec, options: &ClassifyOptions) -> Result<ClassificationReport> {
    if options.dimension != 4 {
        return Err(Error::OutOfScope(format!(
            "classification in dimension {} (only four-dimensional bases are supported)",
            options.dimension
        )));
    }
    let t = options.t;
    super::check_t(t)?;
    let points = sample_points(&spec.bounds, options.samples, options.seed)?;
    let mut sampler = Sampler::new(options.seed.wrapping_add(1));

    let (mut tau_min, mut tau_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut einstein, mut sd) = (0.0f64, 0.0f64);
    let (mut r_kahler, mut r_almost, mut r_nearly) = (0.0f64, 0.0f64, 0.0f64);
    let mut cross = CrossMax::default();

    for p in &points {
        let ctx = TwistorContext::at(spec, p)?;
        let summary = ctx.geom.curvature_summary(&ctx.frame);
        tau_min = tau_min.min(summary.tau);
        tau_max = tau_max.max(summary.tau);
        einstein = einstein.max(summary.einstein_residual);
        sd = sd.max(ctx.curvature.w_minus_norm());
        let tt = t * summary.tau;
        r_kahler = r_kahler.max((tt + 12.0).abs());
        r_almost = r_almost.max((tt - 12.0).abs());
        r_nearly = r_nearly.max((tt + 6.0).abs());

        if options.cross_check {
            let y = sampler.fiber();
            let tangent = |s: &mut Sampler| TwistorTangent::new(s.vector(), s.fiber_tangent(&y));
            let (a, b, c) = (tangent(&mut sampler), tangent(&mut sampler), tangent(&mut sampler));
            accumulate(spec, &ctx, &y, t, (&a, &b, &c), options.oracle, &mut cross)?;
        }
    }

    let tau_scale = tau_min.abs().max(tau_max.abs());
    let tol = EQUALITY_TOLERANCE * (1.0 + tau_scale);
    let cross_tol = if options.oracle { ORACLE_TOLERANCE } else { tol };
    let with = |value: f64| options.cross_check.then_some((value, cross_tol));
    let base = einstein.max(sd);

    Ok(ClassificationReport {
        t,
        samples: points.len(),
        tau_min,
        tau_max,
        einstein_residual: einstein,
        sd_residual: sd,
        tolerance: tol,
        j1_integrable: Verdict::new(sd, tol, with(cross.n1)),
        j2_integrable: Verdict::new(cross.n2_mixed, tol, None),
        semi_kahler_k1: Verdict::new(sd, tol, with(cross.delta)),
        semi_kahler_k2: Verdict::new(sd, tol, with(cross.delta)),
        kahler_j1: Verdict::new(base.max(r_kahler), tol, with(cross.d1.max(cross.n1))),
        almost_kahler_j2: Verdict::new(base.max(r_almost), tol, with(cross.d2)),
        nearly_kahler_j2: Verdict::new(base.max(r_nearly), tol, with(cross.nearly)),
    })
}

fn accumulate(
    spec: &MetricSpec,
    ctx: &TwistorContext,
    y: &FiberVector3,
    t: f64,
    (a, b, c): (&TwistorTangent, &TwistorTangent, &TwistorTangent),
    oracle: bool,
    out: &mut CrossMax,
) -> Result<()> {
    let hx = TwistorTangent::horizontal(a.x);
    let hy = TwistorTangent::horizontal(b.x);
    let v = TwistorTangent::vertical(c.v);
    out.n2_mixed = out.n2_mixed.max(ctx.nijenhuis(Structure::J2, y, &hx, &v).norm());
    out.delta = out.delta.max(ctx.delta_omega(t, y, a)?.abs());
    out.nearly = out.nearly.max(
        ctx.nearly_kahler_residual(Structure::J2, t, y, &a.x, &b.x, &c.v)?
            .max_abs(),
    );
    if oracle {
        let o1 = CoordinateOracle::new(spec, ctx.plan().clone(), Structure::J1, t)?;
        let o2 = CoordinateOracle::new(spec, ctx.plan().clone(), Structure::J2, t)?;
        out.n1 = out.n1.max(o1.nijenhuis(ctx, y, &hx, &hy)?.norm());
        out.d1 = out.d1.max(o1.d_omega(ctx, y, a, b, c)?.abs());
        out.d2 = out.d2.max(o2.d_omega(ctx, y, a, b, c)?.abs());
    } else {
        out.n1 = out
            .n1
            .max(ctx.nijenhuis_horizontal(Structure::J1, y, &a.x, &b.x).norm());
        out.d1 = out.d1.max(ctx.d_omega(Structure::J1, t, a, b, c)?.abs());
        out.d2 = out.d2.max(ctx.d_omega(Structure::J2, t, a, b, c)?.abs());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    fn run(spec: &MetricSpec, t: f64) -> ClassificationReport {
        let mut o = ClassifyOptions::new(t);
        o.samples = 12;
        classify(spec, &o).unwrap()
    }

    #[test]
    fn flat_space() {
        let r = run(&builtin::flat().unwrap(), 1.0);
        assert!(r.j1_integrable.holds);
        assert!(!r.j2_integrable.holds);
        assert!(!r.kahler_j1.holds);
        assert!(r.semi_kahler_k1.holds && r.semi_kahler_k2.holds);
        assert!(r.verdicts().iter().all(|(_, v, _)| v.consistent));
    }

    #[test]
    fn space_form_thresholds() {
        let spec = builtin::constant_curvature(1.0).unwrap();
        let r = run(&spec, -1.0);
        assert!(r.kahler_j1.holds && !r.almost_kahler_j2.holds);
        let r = run(&spec, 1.0);
        assert!(r.almost_kahler_j2.holds && !r.kahler_j1.holds);
        let r = run(&spec, -0.5);
        assert!(r.nearly_kahler_j2.holds);
        assert!(r.verdicts().iter().all(|(_, v, _)| v.consistent));
    }

    #[test]
    fn non_self_dual_metric() {
        let r = run(&builtin::perturbed_non_self_dual().unwrap(), 1.0);
        assert!(!r.j1_integrable.holds && !r.semi_kahler_k1.holds);
        assert!(r.verdicts().iter().all(|(_, v, _)| v.consistent), "{r:#?}");
    }

    #[test]
    fn higher_dimension_is_out_of_scope() {
        let mut o = ClassifyOptions::new(1.0);
        o.dimension = 8;
        assert!(matches!(
            classify(&builtin::flat().unwrap(), &o),
            Err(Error::OutOfScope(_))
        ));
    }
}
