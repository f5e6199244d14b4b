//! The hyperbolic twistor space of a neutral four-manifold.
//!
//! A point of the twistor space is a base point together with a unit
//! anti-self-dual bivector `σ = Σ y_a s_a`, `y1² - y2² - y3² = 1`. Tangent
//! vectors are handled in split form: a horizontal part `X` (coordinate
//! components on the base) and a vertical part `V` (components in the
//! `s`-frame, tangent to the hyperboloid).

mod classify;
mod formulas;
mod oracle;

pub use classify::{classify, ClassificationReport, ClassifyOptions, Verdict, EQUALITY_TOLERANCE, ORACLE_TOLERANCE};
pub use formulas::NearlyKahlerResidual;
pub use oracle::CoordinateOracle;

use nalgebra::{Matrix3, Matrix4, Vector4};

use crate::bivector::{
    bivector_inner, endo_inner, fiber_bivector, fiber_cross_product, fiber_endo, fiber_inner, s_endos, wedge, Bivector,
    CurvatureOperator, FiberVector3, FIBER_SIGNS,
};
use crate::error::{Error, Result};
use crate::geometry::{
    EndoJet, FrameJet, FramePlan, MetricSpec, OrientedFrame, Point4, PointGeometry, TangentVector4, SIGNATURE,
};

/// Tolerance on `-y1² + y2² + y3² = -1` for supplied fiber points.
pub const HYPERBOLOID_TOLERANCE: f64 = 1e-12;

/// Tolerance on `⟨σ, V⟩ = 0` for supplied vertical vectors.
pub const TANGENCY_TOLERANCE: f64 = 1e-10;

/// A point of the fiber hyperboloid `-y1² + y2² + y3² = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperboloidPoint {
    pub y: FiberVector3,
}

impl HyperboloidPoint {
    /// Point on the sheet `sign(y1) = sheet` over `(y2, y3)`.
    pub fn from_chart(y2: f64, y3: f64, sheet: f64) -> Self {
        let y1 = sheet.signum() * (1.0 + y2 * y2 + y3 * y3).sqrt();
        HyperboloidPoint {
            y: FiberVector3::new(y1, y2, y3),
        }
    }

    pub fn new(y: FiberVector3) -> Result<Self> {
        let residual = fiber_inner(&y, &y) + 1.0;
        if !(residual.abs() <= HYPERBOLOID_TOLERANCE * (1.0 + y.norm_squared())) {
            return Err(Error::InvalidParameter(format!(
                "fiber point {:?} is off the hyperboloid by {residual:e}",
                y.as_slice()
            )));
        }
        Ok(HyperboloidPoint { y })
    }

    pub fn sheet(&self) -> f64 {
        self.y[0].signum()
    }

    /// Vertical vector in the tangent plane with prescribed `V2, V3`.
    pub fn tangent(&self, v2: f64, v3: f64) -> FiberVector3 {
        FiberVector3::new((self.y[1] * v2 + self.y[2] * v3) / self.y[0], v2, v3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistorPoint {
    pub base: Point4,
    pub fiber: HyperboloidPoint,
}

impl TwistorPoint {
    pub fn new(base: Point4, fiber: HyperboloidPoint) -> Self {
        TwistorPoint { base, fiber }
    }

    pub fn sigma(&self) -> Bivector {
        fiber_bivector(&self.fiber.y).at(self.base)
    }
}

/// Tangent vector in split form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistorTangent {
    pub x: TangentVector4,
    pub v: FiberVector3,
}

impl TwistorTangent {
    pub fn new(x: TangentVector4, v: FiberVector3) -> Self {
        TwistorTangent { x, v }
    }

    pub fn horizontal(x: TangentVector4) -> Self {
        Self::new(x, FiberVector3::zeros())
    }

    pub fn vertical(v: FiberVector3) -> Self {
        Self::new(TangentVector4::zeros(), v)
    }

    pub fn zero() -> Self {
        Self::new(TangentVector4::zeros(), FiberVector3::zeros())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.v * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x + o.x, self.v + o.v)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.x - o.x, self.v - o.v)
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.v.norm_squared()).sqrt()
    }
}

/// Tangent vector of the bundle `E` in its coordinates: base components and
/// `∂/∂y_b` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleTangent {
    pub x: TangentVector4,
    pub ydot: FiberVector3,
}

/// Which almost complex structure: `𝒥₁` or `𝒥₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    J1,
    J2,
}

impl Structure {
    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Structure::J1),
            2 => Ok(Structure::J2),
            _ => Err(Error::InvalidParameter(format!("structure index {k} is not 1 or 2"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Structure::J1 => 1,
            Structure::J2 => 2,
        }
    }

    /// `(-1)^{k-1}`.
    pub fn vertical_sign(self) -> f64 {
        match self {
            Structure::J1 => 1.0,
            Structure::J2 => -1.0,
        }
    }

    /// `(-1)^k`.
    pub fn parity(self) -> f64 {
        -self.vertical_sign()
    }
}

/// One argument of the bundle connection: a horizontal lift of a
/// constant-coefficient coordinate field, or the vertical lift of a
/// constant-coefficient combination of the `s`-frame sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftArg {
    Horizontal(TangentVector4),
    Vertical(FiberVector3),
}

fn check_t(t: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "metric parameter t must be finite and nonzero, got {t}"
        )));
    }
    Ok(())
}

/// Everything about the base point that the twistor formulas use: the
/// metric geometry, the oriented frame, the `J_a = K_{s_a}` in
/// coordinates, the connection coefficients of the `s`-frame, and the
/// curvature operator.
#[derive(Debug, Clone)]
pub struct TwistorContext {
    pub geom: PointGeometry,
    pub frame: OrientedFrame,
    pub frame_inverse: Matrix4<f64>,
    /// `J_a` in coordinates with exact first and second partials.
    pub j: [EndoJet; 3],
    /// `theta[i][(b, a)]`: `D_{∂_i} J_a = Σ_b theta[i][(b, a)] J_b`.
    pub theta: [Matrix3<f64>; 4],
    pub curvature: CurvatureOperator,
}

impl TwistorContext {
    pub fn at(spec: &MetricSpec, p: &Point4) -> Result<Self> {
        spec.check_point(p)?;
        Self::build(spec, p, None)
    }

    /// Reuses a recorded frame plan and skips the chart check; used by
    /// finite-difference stencils.
    pub(crate) fn with_plan(spec: &MetricSpec, p: &Point4, plan: &FramePlan) -> Result<Self> {
        Self::build(spec, p, Some(plan))
    }

    fn build(spec: &MetricSpec, p: &Point4, plan: Option<&FramePlan>) -> Result<Self> {
        let geom = PointGeometry::at_unchecked(spec, p)?;
        let jets = FrameJet::at(spec, p, plan)?;
        let frame = jets.value();
        let frame_inverse = frame.inverse(geom.g());
        let k = s_endos();
        let j: [EndoJet; 3] = std::array::from_fn(|a| EndoJet::from_jets(&jets.endomorphism(&k[a])));
        let theta = std::array::from_fn(|i| {
            Matrix3::from_fn(|b, a| {
                let d = geom.endo_derivative(&j[a], i);
                FIBER_SIGNS[b] * endo_inner(&d, &j[b].value)
            })
        });
        let curvature = CurvatureOperator::from_geometry(&geom, &frame);
        Ok(TwistorContext {
            geom,
            frame,
            frame_inverse,
            j,
            theta,
            curvature,
        })
    }

    pub fn point(&self) -> Point4 {
        self.geom.point
    }

    pub fn plan(&self) -> &FramePlan {
        &self.frame.plan
    }

    /// Frame components of a coordinate vector.
    pub fn to_frame(&self, x: &TangentVector4) -> Vector4<f64> {
        self.frame_inverse * x
    }

    pub fn wedge(&self, x: &TangentVector4, y: &TangentVector4) -> Bivector {
        wedge(&self.to_frame(x), &self.to_frame(y))
    }

    /// `K_σ` in coordinates.
    pub fn k_sigma(&self, y: &FiberVector3) -> Matrix4<f64> {
        self.frame.e * fiber_endo(y) * self.frame_inverse
    }

    /// `D_X J_a = Σ_b theta_x[(b, a)] J_b`.
    pub fn theta_along(&self, x: &TangentVector4) -> Matrix3<f64> {
        (0..4).fold(Matrix3::zeros(), |acc, i| acc + self.theta[i] * x[i])
    }

    /// `∂/∂y` components of `X^h` at `σ = y`.
    pub fn lift_velocity(&self, y: &FiberVector3, x: &TangentVector4) -> FiberVector3 {
        -self.theta_along(x) * y
    }

    pub fn horizontal_lift(&self, y: &FiberVector3, x: &TangentVector4) -> BundleTangent {
        BundleTangent {
            x: *x,
            ydot: self.lift_velocity(y, x),
        }
    }

    pub fn to_bundle(&self, y: &FiberVector3, a: &TwistorTangent) -> BundleTangent {
        BundleTangent {
            x: a.x,
            ydot: a.v + self.lift_velocity(y, &a.x),
        }
    }

    pub fn from_bundle(&self, y: &FiberVector3, b: &BundleTangent) -> TwistorTangent {
        TwistorTangent::new(b.x, b.ydot - self.lift_velocity(y, &b.x))
    }

    /// `𝒥_k A`: `X ↦ K_σ X` horizontally, `V ↦ (-1)^{k-1} σ×V` vertically.
    pub fn acs_apply(&self, k: Structure, y: &FiberVector3, a: &TwistorTangent) -> TwistorTangent {
        TwistorTangent::new(self.k_sigma(y) * a.x, fiber_cross_product(y, &a.v) * k.vertical_sign())
    }

    /// `h_t(A, B) = g(X_A, X_B) + t ⟨V_A, V_B⟩`.
    pub fn ht_inner(&self, t: f64, a: &TwistorTangent, b: &TwistorTangent) -> Result<f64> {
        check_t(t)?;
        Ok(self.geom.inner(&a.x, &b.x) + t * fiber_inner(&a.v, &b.v))
    }

    /// `g(V, X∧Y)` with `V` in `Λ⁻` and `X, Y` coordinate vectors.
    pub fn pair(&self, v: &FiberVector3, x: &TangentVector4, y: &TangentVector4) -> f64 {
        bivector_inner(&fiber_bivector(v), &self.wedge(x, y)).expect("frame-abstract bivectors")
    }

    /// `g(𝓡(V), X∧Y)`.
    pub fn pair_curvature(&self, v: &FiberVector3, x: &TangentVector4, y: &TangentVector4) -> f64 {
        let rv = self.curvature.apply(&fiber_bivector(v));
        bivector_inner(&rv, &self.wedge(x, y)).expect("frame-abstract bivectors")
    }

    /// `R(a)σ` as an `s`-frame vector.
    pub fn curvature_action(&self, a: &Bivector, y: &FiberVector3) -> FiberVector3 {
        self.curvature.curvature_action(a, y)
    }

    /// `R̂_{σs} X`, defined by `g(R̂_{σs}X, Y) = ⟨R(X, Y)σ, s⟩`.
    pub fn r_hat(&self, y: &FiberVector3, s: &FiberVector3, x: &TangentVector4) -> TangentVector4 {
        let xf = self.to_frame(x);
        let comps = Vector4::from_fn(|j, _| {
            let ej = Vector4::from_fn(|i, _| if i == j { 1.0 } else { 0.0 });
            SIGNATURE[j] * fiber_inner(&self.curvature_action(&wedge(&xf, &ej), y), s)
        });
        self.frame.e * comps
    }

    /// Levi-Civita connection of `h_t` on lifted fields.
    pub fn bundle_connection(&self, t: f64, y: &FiberVector3, a: &LiftArg, b: &LiftArg) -> Result<TwistorTangent> {
        check_t(t)?;
        Ok(match (a, b) {
            (LiftArg::Horizontal(x), LiftArg::Horizontal(w)) => TwistorTangent::new(
                self.geom.covariant_derivative_const(x, w),
                self.curvature_action(&self.wedge(x, w), y) * -0.5,
            ),
            (LiftArg::Horizontal(x), LiftArg::Vertical(s)) => {
                TwistorTangent::new(self.r_hat(y, s, x) * (0.5 * t), self.theta_along(x) * s)
            }
            (LiftArg::Vertical(s), LiftArg::Horizontal(x)) => {
                TwistorTangent::horizontal(self.r_hat(y, s, x) * (0.5 * t))
            }
            (LiftArg::Vertical(_), LiftArg::Vertical(_)) => TwistorTangent::zero(),
        })
    }

    /// Weingarten map of the twistor space inside `E`:
    /// `A_t(X^h + V) = (√|t|/t) V`.
    pub fn weingarten(&self, t: f64, a: &TwistorTangent) -> Result<TwistorTangent> {
        check_t(t)?;
        Ok(TwistorTangent::vertical(a.v * (t.abs().sqrt() / t)))
    }

    /// The Weingarten map evaluated as `(|t|/t) ∇̄_A ν_t` with
    /// `ν_t = σ/√|t| = Σ y_c s_c^v / √|t|`, using the bundle connection.
    pub fn weingarten_from_connection(&self, t: f64, y: &FiberVector3, a: &TwistorTangent) -> Result<TwistorTangent> {
        check_t(t)?;
        let bundle = self.to_bundle(y, a);
        let mut acc = TwistorTangent::vertical(bundle.ydot);
        for c in 0..3 {
            let sc = FiberVector3::from_fn(|i, _| if i == c { 1.0 } else { 0.0 });
            let along_x = self.bundle_connection(t, y, &LiftArg::Horizontal(a.x), &LiftArg::Vertical(sc))?;
            let along_v = self.bundle_connection(t, y, &LiftArg::Vertical(a.v), &LiftArg::Vertical(sc))?;
            acc = acc.add(&along_x.add(&along_v).scale(y[c]));
        }
        Ok(acc.scale(t.signum() / t.abs().sqrt()))
    }
}

pub fn check_tangent(y: &FiberVector3, a: &TwistorTangent) -> Result<()> {
    let residual = fiber_inner(y, &a.v);
    if residual.abs() > TANGENCY_TOLERANCE * (1.0 + y.norm() * a.v.norm()) {
        return Err(Error::InvalidParameter(format!(
            "vertical vector {:?} is not tangent to the fiber (⟨σ,V⟩ = {residual:e})",
            a.v.as_slice()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::sampling::Sampler;

    #[test]
    fn acs_vertical_examples() {
        let ctx = TwistorContext::at(&builtin::flat().unwrap(), &Point4::origin()).unwrap();
        let y = FiberVector3::new(1.0, 0.0, 0.0);
        let v = TwistorTangent::vertical(FiberVector3::new(0.0, 1.0, 0.0));
        assert_eq!(ctx.acs_apply(Structure::J1, &y, &v).v, FiberVector3::new(0.0, 0.0, 1.0));
        assert_eq!(
            ctx.acs_apply(Structure::J2, &y, &v).v,
            FiberVector3::new(0.0, 0.0, -1.0)
        );
        assert_eq!(ctx.ht_inner(2.0, &v, &v).unwrap(), 2.0);
        let e1 = TwistorTangent::horizontal(TangentVector4::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(ctx.ht_inner(1.0, &e1, &e1).unwrap(), 1.0);
        assert!(ctx.ht_inner(0.0, &e1, &e1).is_err());
    }

    #[test]
    fn acs_squares_to_minus_one_and_is_hermitian() {
        let spec = builtin::constant_curvature(1.0).unwrap();
        let mut s = Sampler::new(11);
        for _ in 0..10 {
            let p = s.point(&spec.bounds);
            let ctx = TwistorContext::at(&spec, &p).unwrap();
            let y = s.fiber();
            let a = TwistorTangent::new(s.vector(), s.fiber_tangent(&y));
            let b = TwistorTangent::new(s.vector(), s.fiber_tangent(&y));
            for k in [Structure::J1, Structure::J2] {
                let jja = ctx.acs_apply(k, &y, &ctx.acs_apply(k, &y, &a));
                assert!(jja.add(&a).norm() < 1e-10);
                let lhs = ctx
                    .ht_inner(-0.7, &ctx.acs_apply(k, &y, &a), &ctx.acs_apply(k, &y, &b))
                    .unwrap();
                let rhs = ctx.ht_inner(-0.7, &a, &b).unwrap();
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn horizontal_lift_vanishes_for_parallel_frames() {
        let y = FiberVector3::new(2.0f64.sqrt(), 1.0, 0.0);
        let x = TangentVector4::new(0.3, -0.2, 0.5, 1.0);
        let flat = TwistorContext::at(&builtin::flat().unwrap(), &Point4::new(0.1, 0.2, 0.3, 0.4)).unwrap();
        assert_eq!(flat.horizontal_lift(&y, &x).ydot, FiberVector3::zeros());
        let petean = builtin::Builtin::parse("petean:1+x1^2+x2^2").unwrap().metric().unwrap();
        let ctx = TwistorContext::at(&petean, &Point4::new(0.3, -0.4, 0.2, 0.1)).unwrap();
        assert!(ctx.horizontal_lift(&y, &x).ydot.norm() < 1e-12);
    }

    #[test]
    fn weingarten_examples() {
        let ctx = TwistorContext::at(&builtin::flat().unwrap(), &Point4::origin()).unwrap();
        let v = FiberVector3::new(0.0, 1.0, 0.0);
        let a = TwistorTangent::new(TangentVector4::new(1.0, 0.0, 0.0, 0.0), v);
        assert_eq!(ctx.weingarten(1.0, &a).unwrap().v, v);
        assert_eq!(ctx.weingarten(4.0, &a).unwrap().v, v * 0.5);
        assert_eq!(ctx.weingarten(-1.0, &a).unwrap().v, -v);
        assert_eq!(ctx.weingarten(4.0, &a).unwrap().x, TangentVector4::zeros());
    }

    #[test]
    fn connection_on_vertical_pairs_vanishes() {
        let ctx = TwistorContext::at(
            &builtin::constant_curvature(1.0).unwrap(),
            &Point4::new(0.1, 0.2, 0.0, 0.3),
        )
        .unwrap();
        let y = FiberVector3::new(1.0, 0.0, 0.0);
        let k = LiftArg::Vertical(FiberVector3::new(0.0, 1.0, 0.0));
        let s = LiftArg::Vertical(FiberVector3::new(0.0, 0.0, 1.0));
        assert_eq!(ctx.bundle_connection(1.0, &y, &k, &s).unwrap(), TwistorTangent::zero());
    }
}
