//! Connection-free oracles on the twistor space.
//!
//! The twistor space is charted by `ξ = (x1, x2, x3, x4, y2, y3)` with
//! `y1 = ±√(1 + y2² + y3²)`. In this chart `𝒥_k` and `h_t` are 6×6 matrix
//! fields assembled pointwise from the base geometry. The Nijenhuis tensor
//! is then evaluated from coordinate brackets of constant fields and `dΩ`
//! from coordinate derivatives of `Ω = h_t 𝒥_k`, with all partials taken by
//! Richardson-extrapolated central differences.

use nalgebra::{Matrix6, Vector6};

use super::{check_t, BundleTangent, Structure, TwistorContext, TwistorTangent};
use crate::bivector::FiberVector3;
use crate::error::Result;
use crate::geometry::{FramePlan, MetricSpec, Point4, TangentVector4};

/// Base step of the central differences.
pub const ORACLE_STEP: f64 = 1e-4;

/// `𝒥_k`, `h_t` and their partials at one chart point.
struct Jet6 {
    j: Matrix6<f64>,
    h: Matrix6<f64>,
    dj: [Matrix6<f64>; 6],
    dh: [Matrix6<f64>; 6],
}

pub struct CoordinateOracle<'a> {
    spec: &'a MetricSpec,
    plan: FramePlan,
    k: Structure,
    t: f64,
    step: f64,
}

impl<'a> CoordinateOracle<'a> {
    pub fn new(spec: &'a MetricSpec, plan: FramePlan, k: Structure, t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(CoordinateOracle {
            spec,
            plan,
            k,
            t,
            step: ORACLE_STEP,
        })
    }

    fn split(ctx: &TwistorContext, y: &FiberVector3, xi: &Vector6<f64>) -> TwistorTangent {
        let ydot = FiberVector3::new((y[1] * xi[4] + y[2] * xi[5]) / y[0], xi[4], xi[5]);
        ctx.from_bundle(
            y,
            &BundleTangent {
                x: TangentVector4::new(xi[0], xi[1], xi[2], xi[3]),
                ydot,
            },
        )
    }

    fn unsplit(ctx: &TwistorContext, y: &FiberVector3, a: &TwistorTangent) -> Vector6<f64> {
        let b = ctx.to_bundle(y, a);
        Vector6::new(b.x[0], b.x[1], b.x[2], b.x[3], b.ydot[1], b.ydot[2])
    }

    fn fiber_at(xi: &[f64; 6], sheet: f64) -> FiberVector3 {
        let (y2, y3) = (xi[4], xi[5]);
        FiberVector3::new(sheet * (1.0 + y2 * y2 + y3 * y3).sqrt(), y2, y3)
    }

    fn assemble(&self, ctx: &TwistorContext, y: &FiberVector3) -> Result<(Matrix6<f64>, Matrix6<f64>)> {
        let basis: Vec<TwistorTangent> = (0..6)
            .map(|m| Self::split(ctx, y, &Vector6::from_fn(|i, _| if i == m { 1.0 } else { 0.0 })))
            .collect();
        let mut j = Matrix6::zeros();
        let mut h = Matrix6::zeros();
        for m in 0..6 {
            let image = Self::unsplit(ctx, y, &ctx.acs_apply(self.k, y, &basis[m]));
            j.set_column(m, &image);
            for n in 0..6 {
                h[(m, n)] = ctx.ht_inner(self.t, &basis[m], &basis[n])?;
            }
        }
        Ok((j, h))
    }

    fn fields_at(&self, xi: &[f64; 6], sheet: f64) -> Result<(Matrix6<f64>, Matrix6<f64>)> {
        let base = Point4([xi[0], xi[1], xi[2], xi[3]]);
        let ctx = TwistorContext::with_plan(self.spec, &base, &self.plan)?;
        self.assemble(&ctx, &Self::fiber_at(xi, sheet))
    }

    fn jet(&self, ctx: &TwistorContext, y: &FiberVector3) -> Result<Jet6> {
        let p = ctx.point();
        let xi0 = [p.0[0], p.0[1], p.0[2], p.0[3], y[1], y[2]];
        let sheet = y[0].signum();
        let (j, h) = self.assemble(ctx, y)?;
        let mut dj = [Matrix6::zeros(); 6];
        let mut dh = [Matrix6::zeros(); 6];
        for m in 0..6 {
            let central = |step: f64| -> Result<(Matrix6<f64>, Matrix6<f64>)> {
                let mut plus = xi0;
                let mut minus = xi0;
                plus[m] += step;
                minus[m] -= step;
                let (jp, hp) = self.fields_at(&plus, sheet)?;
                let (jm, hm) = self.fields_at(&minus, sheet)?;
                Ok(((jp - jm) / (2.0 * step), (hp - hm) / (2.0 * step)))
            };
            let (j1, h1) = central(self.step)?;
            let (j2, h2) = central(0.5 * self.step)?;
            dj[m] = (j2 * 4.0 - j1) / 3.0;
            dh[m] = (h2 * 4.0 - h1) / 3.0;
        }
        Ok(Jet6 { j, h, dj, dh })
    }

    /// `N(A, B) = [𝒥A, 𝒥B] - 𝒥[𝒥A, B] - 𝒥[A, 𝒥B] - [A, B]` for the
    /// constant-coefficient extensions of `A` and `B` in the chart.
    pub fn nijenhuis(
        &self,
        ctx: &TwistorContext,
        y: &FiberVector3,
        a: &TwistorTangent,
        b: &TwistorTangent,
    ) -> Result<TwistorTangent> {
        Ok(Self::nijenhuis_from(&self.jet(ctx, y)?, ctx, y, a, b))
    }

    /// `A·Ω(B,C) + B·Ω(C,A) + C·Ω(A,B)` with `Ω(U, W) = h_t(U, 𝒥W)`.
    pub fn d_omega(
        &self,
        ctx: &TwistorContext,
        y: &FiberVector3,
        a: &TwistorTangent,
        b: &TwistorTangent,
        c: &TwistorTangent,
    ) -> Result<f64> {
        Ok(Self::d_omega_from(&self.jet(ctx, y)?, ctx, y, a, b, c))
    }

    /// `N(A, B)` and `dΩ(A, B, C)` from one shared jet.
    pub fn evaluate(
        &self,
        ctx: &TwistorContext,
        y: &FiberVector3,
        a: &TwistorTangent,
        b: &TwistorTangent,
        c: &TwistorTangent,
    ) -> Result<(TwistorTangent, f64)> {
        let jet = self.jet(ctx, y)?;
        Ok((
            Self::nijenhuis_from(&jet, ctx, y, a, b),
            Self::d_omega_from(&jet, ctx, y, a, b, c),
        ))
    }

    fn nijenhuis_from(
        jet: &Jet6,
        ctx: &TwistorContext,
        y: &FiberVector3,
        a: &TwistorTangent,
        b: &TwistorTangent,
    ) -> TwistorTangent {
        let (av, bv) = (Self::unsplit(ctx, y, a), Self::unsplit(ctx, y, b));
        let directional =
            |dir: &Vector6<f64>| -> Matrix6<f64> { (0..6).fold(Matrix6::zeros(), |acc, m| acc + jet.dj[m] * dir[m]) };
        let (ja, jb) = (jet.j * av, jet.j * bv);
        // [U, W] = ∂_U W - ∂_W U for U = 𝒥A, W = 𝒥B
        let ja_jb = directional(&ja) * bv - directional(&jb) * av;
        let ja_b = -(directional(&bv) * av);
        let a_jb = directional(&av) * bv;
        let n = ja_jb - jet.j * (ja_b + a_jb);
        Self::split(ctx, y, &n)
    }

    fn d_omega_from(
        jet: &Jet6,
        ctx: &TwistorContext,
        y: &FiberVector3,
        a: &TwistorTangent,
        b: &TwistorTangent,
        c: &TwistorTangent,
    ) -> f64 {
        let (av, bv, cv) = (
            Self::unsplit(ctx, y, a),
            Self::unsplit(ctx, y, b),
            Self::unsplit(ctx, y, c),
        );
        let d_omega_along = |dir: &Vector6<f64>| -> Matrix6<f64> {
            (0..6).fold(Matrix6::zeros(), |acc, m| {
                acc + (jet.dh[m] * jet.j + jet.h * jet.dj[m]) * dir[m]
            })
        };
        let term =
            |d: &Vector6<f64>, u: &Vector6<f64>, w: &Vector6<f64>| (u.transpose() * d_omega_along(d) * w)[(0, 0)];
        term(&av, &bv, &cv) + term(&bv, &cv, &av) + term(&cv, &av, &bv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::sampling::Sampler;

    fn compare(spec: &MetricSpec, seed: u64, samples: usize) -> (f64, f64) {
        let mut s = Sampler::new(seed);
        let (mut n_err, mut d_err) = (0.0f64, 0.0f64);
        for i in 0..samples {
            let k = if i % 2 == 0 { Structure::J1 } else { Structure::J2 };
            let t = [1.0, -0.5, 2.0][i % 3];
            let p = s.point(&spec.bounds);
            let ctx = TwistorContext::at(spec, &p).unwrap();
            let y = s.fiber();
            let tangent = |s: &mut Sampler| TwistorTangent::new(s.vector(), s.fiber_tangent(&y));
            let (a, b, c) = (tangent(&mut s), tangent(&mut s), tangent(&mut s));
            let oracle = CoordinateOracle::new(spec, ctx.plan().clone(), k, t).unwrap();
            let n_formula = ctx.nijenhuis(k, &y, &a, &b);
            let n_oracle = oracle.nijenhuis(&ctx, &y, &a, &b).unwrap();
            n_err = n_err.max(n_formula.sub(&n_oracle).norm());
            let d_formula = ctx.d_omega(k, t, &a, &b, &c).unwrap();
            let d_oracle = oracle.d_omega(&ctx, &y, &a, &b, &c).unwrap();
            d_err = d_err.max((d_formula - d_oracle).abs());
        }
        (n_err, d_err)
    }

    #[test]
    fn formulas_match_oracle_on_flat_space() {
        let (n, d) = compare(&builtin::flat().unwrap(), 1, 6);
        assert!(n < 1e-6 && d < 1e-6, "nijenhuis {n:e}, dΩ {d:e}");
    }

    #[test]
    fn formulas_match_oracle_on_space_form() {
        let (n, d) = compare(&builtin::constant_curvature(1.0).unwrap(), 2, 6);
        assert!(n < 1e-6 && d < 1e-6, "nijenhuis {n:e}, dΩ {d:e}");
    }

    #[test]
    fn formulas_match_oracle_on_perturbed_metric() {
        let (n, d) = compare(&builtin::perturbed_non_self_dual().unwrap(), 3, 6);
        assert!(n < 1e-6 && d < 1e-6, "nijenhuis {n:e}, dΩ {d:e}");
    }
}
