//! Closed-form Nijenhuis tensor, fundamental-form derivatives and
//! co-differential on the twistor space, expressed through the curvature
//! operator of the base.

use nalgebra::Vector4;

use super::{check_t, Structure, TwistorContext, TwistorTangent};
use crate::bivector::{bivector_inner, fiber_bivector, fiber_cross_product, FiberVector3};
use crate::error::Result;
use crate::geometry::{TangentVector4, SIGNATURE};

/// The two symmetrized combinations of `∇Ω` whose vanishing characterizes
/// a nearly Kähler structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearlyKahlerResidual {
    /// `(∇_{X^h}Ω)(Y^h, V) + (∇_{Y^h}Ω)(X^h, V)`.
    pub horizontal: f64,
    /// `(∇_{X^h}Ω)(V, Y^h) + (∇_V Ω)(X^h, Y^h)`.
    pub mixed: f64,
}

impl NearlyKahlerResidual {
    pub fn max_abs(&self) -> f64 {
        self.horizontal.abs().max(self.mixed.abs())
    }
}

impl TwistorContext {
    /// `N_k(X^h, Y^h) = R(X∧Y - K_σX∧K_σY)σ + (-1)^{k-1} σ×R(K_σX∧Y + X∧K_σY)σ`,
    /// a vertical vector.
    pub fn nijenhuis_horizontal(
        &self,
        k: Structure,
        y: &FiberVector3,
        x: &TangentVector4,
        w: &TangentVector4,
    ) -> FiberVector3 {
        let ks = self.k_sigma(y);
        let (kx, kw) = (ks * x, ks * w);
        let first = self.wedge(x, w).sub(&self.wedge(&kx, &kw));
        let second = self.wedge(&kx, w).add(&self.wedge(x, &kw));
        self.curvature_action(&first, y)
            + fiber_cross_product(y, &self.curvature_action(&second, y)) * k.vertical_sign()
    }

    /// `h_t(N_k(X^h, V), Y^h) = 2[-1 + (-1)^{k-1}] g(V, X∧K_σY)`.
    pub fn nijenhuis_mixed_pairing(
        &self,
        k: Structure,
        y: &FiberVector3,
        x: &TangentVector4,
        v: &FiberVector3,
        w: &TangentVector4,
    ) -> f64 {
        2.0 * (k.vertical_sign() - 1.0) * self.pair(v, x, &(self.k_sigma(y) * w))
    }

    /// `N_k(X^h, V)`; horizontal, recovered from its pairings with a frame.
    pub fn nijenhuis_mixed(
        &self,
        k: Structure,
        y: &FiberVector3,
        x: &TangentVector4,
        v: &FiberVector3,
    ) -> TwistorTangent {
        let comps = Vector4::from_fn(|j, _| {
            let ej = self.frame.e.column(j).into_owned();
            SIGNATURE[j] * self.nijenhuis_mixed_pairing(k, y, x, v, &ej)
        });
        TwistorTangent::horizontal(self.frame.e * comps)
    }

    /// Full Nijenhuis tensor `N_k(A, B)` by bilinearity; `N_k(V, W) = 0`.
    pub fn nijenhuis(&self, k: Structure, y: &FiberVector3, a: &TwistorTangent, b: &TwistorTangent) -> TwistorTangent {
        let hh = TwistorTangent::vertical(self.nijenhuis_horizontal(k, y, &a.x, &b.x));
        let hv = self.nijenhuis_mixed(k, y, &a.x, &b.v);
        let vh = self.nijenhuis_mixed(k, y, &b.x, &a.v);
        hh.add(&hv).sub(&vh)
    }

    /// `3dΩ_{k,t}(A, B, C)`, normalized as the cyclic sum
    /// `A·Ω(B,C) + B·Ω(C,A) + C·Ω(A,B)` for commuting extensions.
    pub fn d_omega(
        &self,
        k: Structure,
        t: f64,
        a: &TwistorTangent,
        b: &TwistorTangent,
        c: &TwistorTangent,
    ) -> Result<f64> {
        check_t(t)?;
        let (x, y, z) = (&a.x, &b.x, &c.x);
        let (u, v, w) = (&a.v, &b.v, &c.v);
        let curv = self.pair_curvature(u, y, z) + self.pair_curvature(v, z, x) + self.pair_curvature(w, x, y);
        let plain = self.pair(u, y, z) + self.pair(v, z, x) + self.pair(w, x, y);
        Ok(t * k.parity() * curv - 2.0 * plain)
    }

    /// `δΩ_{k,t}(A) = t g(R(σ)σ, U)`.
    pub fn delta_omega(&self, t: f64, y: &FiberVector3, a: &TwistorTangent) -> Result<f64> {
        check_t(t)?;
        let r = self.curvature_action(&fiber_bivector(y), y);
        Ok(t * bivector_inner(&fiber_bivector(&r), &fiber_bivector(&a.v)).expect("frame-abstract bivectors"))
    }

    /// `(∇_{X^h}Ω_{k,t})(Y^h, V) = t/2 [(-1)^k g(𝓡(V), X∧Y) + g(𝓡(σ×V), X∧K_σY)]`.
    pub fn nabla_omega_hhv(
        &self,
        k: Structure,
        t: f64,
        y: &FiberVector3,
        x: &TangentVector4,
        w: &TangentVector4,
        v: &FiberVector3,
    ) -> f64 {
        let sv = fiber_cross_product(y, v);
        0.5 * t * (k.parity() * self.pair_curvature(v, x, w) + self.pair_curvature(&sv, x, &(self.k_sigma(y) * w)))
    }

    /// `(∇_V Ω_{k,t})(X^h, Y^h) = -2 g(V, X∧Y) - t/2 g(𝓡(σ×V), X∧K_σY + K_σX∧Y)`.
    pub fn nabla_omega_vhh(
        &self,
        t: f64,
        y: &FiberVector3,
        v: &FiberVector3,
        x: &TangentVector4,
        w: &TangentVector4,
    ) -> f64 {
        let ks = self.k_sigma(y);
        let sv = fiber_cross_product(y, v);
        let curv = self.pair_curvature(&sv, x, &(ks * w)) + self.pair_curvature(&sv, &(ks * x), w);
        -2.0 * self.pair(v, x, w) - 0.5 * t * curv
    }

    pub fn nearly_kahler_residual(
        &self,
        k: Structure,
        t: f64,
        y: &FiberVector3,
        x: &TangentVector4,
        w: &TangentVector4,
        v: &FiberVector3,
    ) -> Result<NearlyKahlerResidual> {
        check_t(t)?;
        let xy = self.nabla_omega_hhv(k, t, y, x, w, v);
        let yx = self.nabla_omega_hhv(k, t, y, w, x, v);
        Ok(NearlyKahlerResidual {
            horizontal: xy + yx,
            mixed: -xy + self.nabla_omega_vhh(t, y, v, x, w),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::geometry::Point4;
    use crate::sampling::Sampler;

    #[test]
    fn j2_mixed_pairing_on_flat_space() {
        let ctx = TwistorContext::at(&builtin::flat().unwrap(), &Point4::origin()).unwrap();
        let y = FiberVector3::new(1.0, 0.0, 0.0);
        let v = FiberVector3::new(0.0, 1.0, 1.0);
        let (j2, j3) = (ctx.j[1].value, ctx.j[2].value);
        let mut s = Sampler::new(5);
        for _ in 0..20 {
            let (x, w) = (s.vector(), s.vector());
            // h_t(N₂(V, X^h), Y^h) = -h_t(N₂(X^h, V), Y^h)
            let got = -ctx.nijenhuis_mixed_pairing(Structure::J2, &y, &x, &v, &w);
            let expected = -2.0 * (ctx.geom.inner(&x, &(j2 * w)) - ctx.geom.inner(&x, &(j3 * w)));
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn cyclic_sum_matches_d_omega() {
        let spec = builtin::perturbed_non_self_dual().unwrap();
        let mut s = Sampler::new(9);
        for k in [Structure::J1, Structure::J2] {
            let p = s.point(&spec.bounds);
            let ctx = TwistorContext::at(&spec, &p).unwrap();
            let y = s.fiber();
            let t = 1.7;
            let (x, w, z) = (s.vector(), s.vector(), s.vector());
            let vert = FiberVector3::zeros();
            let c = TwistorTangent::new(z, s.fiber_tangent(&y));
            let a = TwistorTangent::new(x, vert);
            let b = TwistorTangent::new(w, vert);
            let from_cyclic = ctx.nabla_omega_hhv(k, t, &y, &x, &w, &c.v) - ctx.nabla_omega_hhv(k, t, &y, &w, &x, &c.v)
                + ctx.nabla_omega_vhh(t, &y, &c.v, &x, &w);
            let direct = ctx.d_omega(k, t, &a, &b, &c).unwrap();
            assert!((from_cyclic - direct).abs() < 1e-10, "{from_cyclic} vs {direct}");
        }
    }

    #[test]
    fn space_form_thresholds() {
        let spec = builtin::constant_curvature(1.0).unwrap();
        let mut s = Sampler::new(2);
        let ctx = TwistorContext::at(&spec, &s.point(&spec.bounds)).unwrap();
        let y = s.fiber();
        let tangent = |s: &mut Sampler| TwistorTangent::new(s.vector(), s.fiber_tangent(&y));
        let (a, b, c) = (tangent(&mut s), tangent(&mut s), tangent(&mut s));
        assert!(ctx.d_omega(Structure::J1, -1.0, &a, &b, &c).unwrap().abs() < 1e-9);
        assert!(ctx.d_omega(Structure::J2, 1.0, &a, &b, &c).unwrap().abs() < 1e-9);
        assert!(ctx.d_omega(Structure::J2, -1.0, &a, &b, &c).unwrap().abs() > 1e-3);
        let nk = ctx
            .nearly_kahler_residual(Structure::J2, -0.5, &y, &a.x, &b.x, &c.v)
            .unwrap();
        assert!(nk.max_abs() < 1e-9);
        let off = ctx
            .nearly_kahler_residual(Structure::J2, 0.5, &y, &a.x, &b.x, &c.v)
            .unwrap();
        assert!(off.max_abs() > 1e-3);
        assert!(ctx.nijenhuis_horizontal(Structure::J1, &y, &a.x, &b.x).norm() < 1e-9);
        assert!(ctx.nijenhuis_horizontal(Structure::J2, &y, &a.x, &b.x).norm() > 1e-3);
    }
}
