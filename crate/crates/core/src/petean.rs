//! The Petean family of neutral hyperkähler metrics on ℝ⁴,
//!
//! ```text
//! g = f (dx1² + dx2²) + 2 dx1 dx3 + 2 dx2 dx4,    f = f(x1, x2) > 0,
//! ```
//!
//! together with the twistor space over it, identified with `ℝ⁴ × Δ`
//! through the upper hyperboloid sheet. The module provides the parallel
//! frame, the product complex structure `𝒥₁`, Cauchy–Riemann operators in
//! the original and the adapted coordinates
//! `(p, q, r, s, u, v)`, `w = p + iq`, `z = u + iv`, the solvability
//! identity of the `∂̄`-system, and the holomorphic atlas `(G1, G2, G3)`.

use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector4, Vector6};
use num_complex::Complex64;

use crate::bivector::{CurvatureOperator, FiberVector3};
use crate::error::{Error, Result};
use crate::expr::{self, Expr, ScalarField};
use crate::geometry::{ChartBounds, MetricSpec, OrientedFrame, Point4, PointGeometry};
use crate::parahermitian::HyperTriple;
use crate::sampling::Sampler;

/// Grid resolution used to check positivity of `f` on the chart.
const POSITIVITY_GRID: usize = 9;

/// Disk points must satisfy `|z| < 1 - DISK_EPSILON`.
pub const DISK_EPSILON: f64 = 1e-9;

/// Variable names of the adapted chart on `ℝ⁴ × Δ`.
pub const ADAPTED_VARS: [&str; 6] = ["p", "q", "r", "s", "u", "v"];

/// Variable names of the original chart on `ℝ⁴ × Δ`.
pub const PRODUCT_VARS: [&str; 6] = ["x1", "x2", "x3", "x4", "u", "v"];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A positive function `f(x1, x2)` together with its chart and metric.
#[derive(Debug, Clone)]
pub struct PeteanSpec {
    pub f: ScalarField,
    pub text: String,
    pub bounds: ChartBounds,
    metric: MetricSpec,
}

impl PeteanSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Self::with_bounds(text, ChartBounds::cube(1.0))
    }

    pub fn with_bounds(text: &str, bounds: ChartBounds) -> Result<Self> {
        let f = ScalarField::parse(text)?;
        if f.expr().max_var().is_some_and(|v| v > 1) {
            return Err(Error::InvalidParameter(format!(
                "Petean function `{text}` may depend on x1 and x2 only"
            )));
        }
        check_positive(&f, &bounds)?;
        let zero = || ScalarField::constant(0.0, 4);
        let one = || ScalarField::constant(1.0, 4);
        let upper = [
            [f.clone(), zero(), one(), zero()],
            [zero(), f.clone(), zero(), one()],
            [zero(), zero(), zero(), zero()],
            [zero(), zero(), zero(), zero()],
        ];
        let metric = MetricSpec::from_upper(&format!("petean:{text}"), upper, bounds);
        Ok(PeteanSpec {
            f,
            text: text.to_string(),
            bounds,
            metric,
        })
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    /// `f` at a base point, checked positive.
    pub fn f_at(&self, x: &[f64; 4]) -> Result<f64> {
        let v = self.f.eval(x)?;
        if !(v > 0.0) {
            return Err(Error::NonPositive {
                what: "Petean function f",
                value: v,
                point: *x,
            });
        }
        Ok(v)
    }

    /// Symbolic frame, `e[i][a]` = coordinate `i` of `e_{a+1}`:
    /// `e1 = ∂1/√f`, `e2 = ∂2/√f`, `e3 = -∂1/√f + √f ∂3`,
    /// `e4 = -∂2/√f + √f ∂4`.
    pub fn frame_exprs(&self) -> [[Arc<Expr>; 4]; 4] {
        let root = expr::call(expr::Func::Sqrt, self.f.expr().clone());
        let inv = expr::div(expr::constant(1.0), root.clone());
        let zero = expr::constant(0.0);
        let mut e: [[Arc<Expr>; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
        e[0][0] = inv.clone();
        e[1][1] = inv.clone();
        e[0][2] = expr::neg(inv.clone());
        e[2][2] = root.clone();
        e[1][3] = expr::neg(inv);
        e[3][3] = root;
        e
    }

    /// `(K_{s1}, K_{s2}, K_{s3})` over the Petean frame.
    pub fn triple(&self) -> HyperTriple {
        HyperTriple::from_frame(&self.metric, &self.frame_exprs())
    }
}

fn check_positive(f: &ScalarField, bounds: &ChartBounds) -> Result<()> {
    let n = POSITIVITY_GRID;
    for i in 0..n {
        for j in 0..n {
            let at = |k: usize, c: usize| bounds.lo[c] + (bounds.hi[c] - bounds.lo[c]) * k as f64 / (n - 1) as f64;
            let p = [at(i, 0), at(j, 1), 0.0, 0.0];
            let v = f.eval(&p)?;
            if !(v > 0.0) {
                return Err(Error::NonPositive {
                    what: "Petean function f",
                    value: v,
                    point: p,
                });
            }
        }
    }
    Ok(())
}

pub fn petean_metric(fspec: &PeteanSpec) -> MetricSpec {
    fspec.metric.clone()
}

fn frame_matrix(f: f64) -> Matrix4<f64> {
    let (a, b) = (1.0 / f.sqrt(), f.sqrt());
    Matrix4::new(
        a, 0.0, -a, 0.0, //
        0.0, a, 0.0, -a, //
        0.0, 0.0, b, 0.0, //
        0.0, 0.0, 0.0, b,
    )
}

pub fn petean_frame(fspec: &PeteanSpec, p: &Point4) -> Result<OrientedFrame> {
    Ok(OrientedFrame::explicit(frame_matrix(fspec.f_at(&p.0)?)))
}

/// Largest residuals of the hyperkähler and curvature claims.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeteanResiduals {
    /// `‖D_{∂_i} K_{s_a}‖` over coordinate directions and `a`.
    pub parallel: f64,
    /// Frame norm of the Ricci tensor.
    pub ricci: f64,
    pub w_minus: f64,
    pub samples: usize,
}

pub fn verify_petean(fspec: &PeteanSpec, samples: usize, seed: u64) -> Result<PeteanResiduals> {
    let triple = fspec.triple();
    let mut out = PeteanResiduals {
        parallel: 0.0,
        ricci: 0.0,
        w_minus: 0.0,
        samples,
    };
    for p in crate::sampling::sample_points(&fspec.bounds, samples, seed)? {
        let geom = PointGeometry::at(&fspec.metric, &p)?;
        let frame = petean_frame(fspec, &p)?;
        let jets = triple.jets(&fspec.metric, &p)?;
        for jet in &jets {
            for i in 0..4 {
                out.parallel = out.parallel.max(geom.endo_derivative(jet, i).norm());
            }
        }
        out.ricci = out.ricci.max(geom.curvature_summary(&frame).ricci_frame_norm);
        out.w_minus = out
            .w_minus
            .max(CurvatureOperator::from_geometry(&geom, &frame).w_minus_norm());
    }
    Ok(out)
}

/// A point `z = u + iv` of the unit disk, identified with the hyperboloid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    pub z: Complex64,
}

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        let modulus = z.norm();
        if !(modulus < 1.0 - DISK_EPSILON) {
            return Err(Error::OutsideDisk { modulus });
        }
        Ok(DiskPoint { z })
    }

    /// `1 - |z|²`.
    pub fn m(&self) -> f64 {
        1.0 - self.z.norm_sqr()
    }

    /// The point of the upper sheet `y1 > 0`:
    /// `y = ((1+|z|²), 2u, 2v) / (1-|z|²)`.
    pub fn fiber(&self) -> FiberVector3 {
        let m = self.m();
        FiberVector3::new((1.0 + self.z.norm_sqr()) / m, 2.0 * self.z.re / m, 2.0 * self.z.im / m)
    }

    /// The point of the sheet with sign `sheet`; the lower sheet is reached
    /// through `(y1, y2, y3) ↦ (-y1, y2, -y3)`.
    pub fn fiber_on_sheet(&self, sheet: f64) -> FiberVector3 {
        let y = self.fiber();
        if sheet > 0.0 {
            y
        } else {
            FiberVector3::new(-y[0], y[1], -y[2])
        }
    }

    /// Stereographic projection `(y2 ± i y3) / (1 ± y1)` of either sheet.
    pub fn from_fiber(y: &FiberVector3) -> Result<Self> {
        let z = if y[0] > 0.0 {
            Complex64::new(y[1], y[2]) / (1.0 + y[0])
        } else {
            Complex64::new(y[1], -y[2]) / (1.0 - y[0])
        };
        Self::new(z)
    }
}

/// A point of `ℝ⁴ × Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductPoint {
    pub base: Point4,
    pub disk: DiskPoint,
}

impl ProductPoint {
    pub fn new(base: Point4, disk: DiskPoint) -> Self {
        ProductPoint { base, disk }
    }

    /// `(x1, x2, x3, x4, u, v)`.
    pub fn original(&self) -> [f64; 6] {
        let [x1, x2, x3, x4] = self.base.0;
        [x1, x2, x3, x4, self.disk.z.re, self.disk.z.im]
    }

    /// `(p, q, r, s, u, v)` with `p = x1(1-v) + x2 u`, `q = x1 u + x2(1+v)`,
    /// `r = x3`, `s = x4`.
    pub fn adapted(&self) -> [f64; 6] {
        let [x1, x2, x3, x4] = self.base.0;
        let (u, v) = (self.disk.z.re, self.disk.z.im);
        [x1 * (1.0 - v) + x2 * u, x1 * u + x2 * (1.0 + v), x3, x4, u, v]
    }

    pub fn from_adapted(c: &[f64; 6]) -> Result<Self> {
        let [p, q, r, s, u, v] = *c;
        let disk = DiskPoint::new(Complex64::new(u, v))?;
        let m = disk.m();
        let x1 = ((1.0 + v) * p - u * q) / m;
        let x2 = (-u * p + (1.0 - v) * q) / m;
        Ok(ProductPoint {
            base: Point4([x1, x2, r, s]),
            disk,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.disk.z
    }

    pub fn w(&self) -> Complex64 {
        let a = self.adapted();
        Complex64::new(a[0], a[1])
    }

    /// `∂(p, q, r, s, u, v) / ∂(x1, x2, x3, x4, u, v)`.
    pub fn chart_jacobian(&self) -> Matrix6<f64> {
        let [x1, x2, _, _] = self.base.0;
        let (u, v) = (self.disk.z.re, self.disk.z.im);
        let mut phi = Matrix6::identity();
        phi[(0, 0)] = 1.0 - v;
        phi[(0, 1)] = u;
        phi[(0, 4)] = x2;
        phi[(0, 5)] = -x1;
        phi[(1, 0)] = u;
        phi[(1, 1)] = 1.0 + v;
        phi[(1, 4)] = x1;
        phi[(1, 5)] = x2;
        phi
    }
}

/// Frame matrix of `𝒥₁` on the Petean frame at fiber point `y`; column
/// `a` is the image of `e_{a+1}`.
fn horizontal_acs(y: &FiberVector3) -> Matrix4<f64> {
    let (y1, y2, y3) = (y[0], y[1], y[2]);
    Matrix4::new(
        0.0, -y1, y2, y3, //
        y1, 0.0, y3, -y2, //
        y2, y3, 0.0, -y1, //
        y3, -y2, y1, 0.0,
    )
}

/// `𝒥₁` in the original coordinates `(x1, x2, x3, x4, u, v)` of `ℝ⁴ × Δ`.
pub fn product_acs_matrix(fspec: &PeteanSpec, pt: &ProductPoint) -> Result<Matrix6<f64>> {
    let e = frame_matrix(fspec.f_at(&pt.base.0)?);
    let e_inv = e.try_inverse().expect("Petean frame is invertible");
    let h = e * horizontal_acs(&pt.disk.fiber()) * e_inv;
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<4, 4>(0, 0).copy_from(&h);
    j[(5, 4)] = 1.0;
    j[(4, 5)] = -1.0;
    Ok(j)
}

pub fn product_acs(fspec: &PeteanSpec, pt: &ProductPoint, w: &Vector6<f64>) -> Result<Vector6<f64>> {
    Ok(product_acs_matrix(fspec, pt)? * w)
}

/// Which chart a [`ComplexFunctionField`] is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductChart {
    /// `(x1, x2, x3, x4, u, v)`.
    Original,
    /// `(p, q, r, s, u, v)`.
    Adapted,
}

/// Complex-valued function on `ℝ⁴ × Δ` with exact partials.
#[derive(Debug, Clone)]
pub struct ComplexFunctionField {
    pub re: ScalarField,
    pub im: ScalarField,
    pub chart: ProductChart,
}

/// Complex expression built from real expression trees.
#[derive(Clone)]
struct CExpr {
    re: Arc<Expr>,
    im: Arc<Expr>,
}

impl CExpr {
    fn constant(c: Complex64) -> Self {
        CExpr {
            re: expr::constant(c.re),
            im: expr::constant(c.im),
        }
    }

    fn from_parts(re: usize, im: usize) -> Self {
        CExpr {
            re: Arc::new(Expr::Var(re)),
            im: Arc::new(Expr::Var(im)),
        }
    }

    fn real_var(i: usize) -> Self {
        CExpr {
            re: Arc::new(Expr::Var(i)),
            im: expr::constant(0.0),
        }
    }

    fn add(&self, o: &CExpr) -> CExpr {
        CExpr {
            re: expr::add(self.re.clone(), o.re.clone()),
            im: expr::add(self.im.clone(), o.im.clone()),
        }
    }

    fn sub(&self, o: &CExpr) -> CExpr {
        CExpr {
            re: expr::sub(self.re.clone(), o.re.clone()),
            im: expr::sub(self.im.clone(), o.im.clone()),
        }
    }

    fn mul(&self, o: &CExpr) -> CExpr {
        let rr = expr::mul(self.re.clone(), o.re.clone());
        let ii = expr::mul(self.im.clone(), o.im.clone());
        let ri = expr::mul(self.re.clone(), o.im.clone());
        let ir = expr::mul(self.im.clone(), o.re.clone());
        CExpr {
            re: expr::sub(rr, ii),
            im: expr::add(ri, ir),
        }
    }

    fn conj(&self) -> CExpr {
        CExpr {
            re: self.re.clone(),
            im: expr::neg(self.im.clone()),
        }
    }

    fn div(&self, o: &CExpr) -> CExpr {
        let num = self.mul(&o.conj());
        let den = expr::add(
            expr::mul(o.re.clone(), o.re.clone()),
            expr::mul(o.im.clone(), o.im.clone()),
        );
        CExpr {
            re: expr::div(num.re, den.clone()),
            im: expr::div(num.im, den),
        }
    }

    fn into_field(self, chart: ProductChart) -> ComplexFunctionField {
        ComplexFunctionField {
            re: ScalarField::new(self.re, 6),
            im: ScalarField::new(self.im, 6),
            chart,
        }
    }
}

impl From<&ComplexFunctionField> for CExpr {
    fn from(f: &ComplexFunctionField) -> Self {
        CExpr {
            re: f.re.expr().clone(),
            im: f.im.expr().clone(),
        }
    }
}

/// Adapted-chart building blocks `z`, `w`, `i`.
fn z_expr() -> CExpr {
    CExpr::from_parts(4, 5)
}

fn w_expr() -> CExpr {
    CExpr::from_parts(0, 1)
}

fn i_expr() -> CExpr {
    CExpr::constant(I)
}

impl ComplexFunctionField {
    /// Parses real and imaginary parts over the variables of `chart`.
    pub fn parse(re: &str, im: &str, chart: ProductChart) -> Result<Self> {
        let vars = match chart {
            ProductChart::Original => &PRODUCT_VARS,
            ProductChart::Adapted => &ADAPTED_VARS,
        };
        Ok(ComplexFunctionField {
            re: ScalarField::parse_with_vars(re, vars)?,
            im: ScalarField::parse_with_vars(im, vars)?,
            chart,
        })
    }

    fn coords(&self, pt: &ProductPoint) -> [f64; 6] {
        match self.chart {
            ProductChart::Original => pt.original(),
            ProductChart::Adapted => pt.adapted(),
        }
    }

    pub fn value(&self, pt: &ProductPoint) -> Result<Complex64> {
        let c = self.coords(pt);
        Ok(Complex64::new(self.re.eval(&c)?, self.im.eval(&c)?))
    }

    /// Partials in the field's own chart.
    fn own_gradient(&self, pt: &ProductPoint) -> Result<[Complex64; 6]> {
        let c = self.coords(pt);
        let mut out = [Complex64::default(); 6];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = Complex64::new(self.re.partial(k).eval(&c)?, self.im.partial(k).eval(&c)?);
        }
        Ok(out)
    }

    /// Partials with respect to `(x1, x2, x3, x4, u, v)`.
    pub fn gradient_original(&self, pt: &ProductPoint) -> Result<[Complex64; 6]> {
        let g = self.own_gradient(pt)?;
        Ok(match self.chart {
            ProductChart::Original => g,
            ProductChart::Adapted => {
                let phi = pt.chart_jacobian();
                std::array::from_fn(|k| (0..6).fold(Complex64::default(), |acc, n| acc + g[n] * phi[(n, k)]))
            }
        })
    }

    /// Partials with respect to `(p, q, r, s, u, v)`.
    pub fn gradient_adapted(&self, pt: &ProductPoint) -> Result<[Complex64; 6]> {
        let g = self.own_gradient(pt)?;
        Ok(match self.chart {
            ProductChart::Adapted => g,
            ProductChart::Original => {
                let inv = pt
                    .chart_jacobian()
                    .try_inverse()
                    .expect("adapted chart is regular in the disk");
                std::array::from_fn(|k| (0..6).fold(Complex64::default(), |acc, n| acc + g[n] * inv[(n, k)]))
            }
        })
    }

    pub fn add(&self, o: &ComplexFunctionField) -> Result<ComplexFunctionField> {
        self.same_chart(o)?;
        Ok(CExpr::from(self).add(&CExpr::from(o)).into_field(self.chart))
    }

    pub fn mul(&self, o: &ComplexFunctionField) -> Result<ComplexFunctionField> {
        self.same_chart(o)?;
        Ok(CExpr::from(self).mul(&CExpr::from(o)).into_field(self.chart))
    }

    fn same_chart(&self, o: &ComplexFunctionField) -> Result<()> {
        if self.chart != o.chart {
            return Err(Error::InvalidParameter(
                "complex fields are written in different charts".into(),
            ));
        }
        Ok(())
    }
}

/// `G1 = z`.
pub fn g1() -> ComplexFunctionField {
    z_expr().into_field(ProductChart::Adapted)
}

/// `G2 = w`, which is `(x1 + i x2) + i z (x1 - i x2)` in the original chart.
pub fn g2() -> ComplexFunctionField {
    w_expr().into_field(ProductChart::Adapted)
}

/// `G2` written in the original chart.
pub fn g2_original() -> ComplexFunctionField {
    let x = CExpr::from_parts(0, 1);
    let z = CExpr::from_parts(4, 5);
    let i = i_expr();
    x.add(&i.mul(&z).mul(&x.conj())).into_field(ProductChart::Original)
}

/// `G3 = r - i ((z - i)/(z + i)) s + H`.
pub fn g3(h: &ComplexFunctionField) -> Result<ComplexFunctionField> {
    if h.chart != ProductChart::Adapted {
        return Err(Error::InvalidParameter("H must be written in the adapted chart".into()));
    }
    let (z, i) = (z_expr(), i_expr());
    let k = z.sub(&i).div(&z.add(&i));
    let r = CExpr::real_var(2);
    let s = CExpr::real_var(3);
    Ok(r.sub(&i.mul(&k).mul(&s))
        .add(&CExpr::from(h))
        .into_field(ProductChart::Adapted))
}

/// `F = f(x1, x2)` at a product point.
fn big_f(fspec: &PeteanSpec, pt: &ProductPoint) -> Result<f64> {
    fspec.f_at(&pt.base.0)
}

/// Coefficient rows of the Cauchy–Riemann operators on adapted partials
/// `(∂p, ∂q, ∂r, ∂s, ∂u, ∂v)`:
///
/// ```text
/// ∂s + i k ∂r,   ∂w̄ - zF/(m(z+i)) ∂r,   ∂z̄ - (iw + z w̄) z F/(m²(z+i)) ∂r
/// ```
///
/// with `k = (z-i)/(z+i)` and `m = 1 - |z|²`.
pub fn cr_rows(fspec: &PeteanSpec, pt: &ProductPoint) -> Result<[[Complex64; 6]; 3]> {
    cr_rows_with_power(fspec, pt, 2)
}

fn cr_rows_with_power(fspec: &PeteanSpec, pt: &ProductPoint, power: i32) -> Result<[[Complex64; 6]; 3]> {
    let (z, w) = (pt.z(), pt.w());
    let m = pt.disk.m();
    let f = big_f(fspec, pt)?;
    let k = (z - I) / (z + I);
    let half = Complex64::new(0.5, 0.0);
    let zero = Complex64::default();
    let one = Complex64::new(1.0, 0.0);
    let c_w = z * f / (m * (z + I));
    let c_z = (I * w + z * w.conj()) * z * f / (m.powi(power) * (z + I));
    Ok([
        [zero, zero, I * k, one, zero, zero],
        [half, half * I, -c_w, zero, zero, zero],
        [zero, zero, -c_z, zero, half, half * I],
    ])
}

fn apply_rows(rows: &[[Complex64; 6]; 3], g: &[Complex64; 6]) -> [Complex64; 3] {
    rows.map(|row| (0..6).fold(Complex64::default(), |acc, k| acc + row[k] * g[k]))
}

pub fn cr_residual(fspec: &PeteanSpec, g: &ComplexFunctionField, pt: &ProductPoint) -> Result<[Complex64; 3]> {
    Ok(apply_rows(&cr_rows(fspec, pt)?, &g.gradient_adapted(pt)?))
}

/// The vectors `W + i𝒥₁W` for `W = e1, e3, ∂u`, in original coordinates.
fn frame_antiholomorphic(fspec: &PeteanSpec, pt: &ProductPoint) -> Result<[[Complex64; 6]; 3]> {
    let j = product_acs_matrix(fspec, pt)?;
    let e = frame_matrix(fspec.f_at(&pt.base.0)?);
    let lift = |x: Vector4<f64>| Vector6::new(x[0], x[1], x[2], x[3], 0.0, 0.0);
    let ws = [
        lift(e.column(0).into_owned()),
        lift(e.column(2).into_owned()),
        Vector6::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
    ];
    Ok(ws.map(|w| {
        let jw = j * w;
        std::array::from_fn(|k| Complex64::new(w[k], jw[k]))
    }))
}

/// Rows of the frame-form operator `(W + i𝒥₁W)` on adapted partials.
pub fn frame_cr_rows(fspec: &PeteanSpec, pt: &ProductPoint) -> Result<[[Complex64; 6]; 3]> {
    let phi = pt.chart_jacobian();
    Ok(frame_antiholomorphic(fspec, pt)?
        .map(|v| std::array::from_fn(|n| (0..6).fold(Complex64::default(), |acc, k| acc + v[k] * phi[(n, k)]))))
}

pub fn frame_cr_residual(fspec: &PeteanSpec, g: &ComplexFunctionField, pt: &ProductPoint) -> Result<[Complex64; 3]> {
    let vs = frame_antiholomorphic(fspec, pt)?;
    let grad = g.gradient_original(pt)?;
    Ok(apply_rows(&vs, &grad))
}

/// `x1` and `x2` as fields over the adapted chart.
fn base_coordinate_fields() -> [ScalarField; 2] {
    [
        ScalarField::parse_with_vars("((1+v)*p - u*q)/(1 - u^2 - v^2)", &ADAPTED_VARS).expect("valid expression"),
        ScalarField::parse_with_vars("(-u*p + (1-v)*q)/(1 - u^2 - v^2)", &ADAPTED_VARS).expect("valid expression"),
    ]
}

/// Residuals of the solvability identity of the `∂̄`-system at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityResidual {
    /// `|lhs - rhs| / (1 + |lhs| + |rhs|)`.
    pub identity: f64,
    /// Largest deviation of the four closed-form partials `∂x_a/∂z̄`,
    /// `∂x_a/∂w̄` from symbolic differentiation, relative to their size.
    pub partials: f64,
    /// Deviation of the closed forms of `x1, x2` in `z, w` from the
    /// inverse of the adapted chart.
    pub closed_forms: f64,
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}

pub fn compatibility_residual(fspec: &PeteanSpec, pt: &ProductPoint) -> Result<CompatibilityResidual> {
    let c = pt.adapted();
    let (z, w) = (pt.z(), pt.w());
    let m = pt.disk.m();
    let xs = base_coordinate_fields();
    let wirtinger = |field: &ScalarField, a: usize, b: usize| -> Result<Complex64> {
        Ok(Complex64::new(field.partial(a).eval(&c)?, field.partial(b).eval(&c)?) * 0.5)
    };
    let dz = [wirtinger(&xs[0], 4, 5)?, wirtinger(&xs[1], 4, 5)?];
    let dw = [wirtinger(&xs[0], 0, 1)?, wirtinger(&xs[1], 0, 1)?];

    let shown_dz = [
        (z + I) * (w - I * z * w.conj()) / (2.0 * m * m),
        -I * (z - I) * (w - I * z * w.conj()) / (2.0 * m * m),
    ];
    let shown_dw = [-I * (z + I) / (2.0 * m), -(z - I) / (2.0 * m)];
    let partials = (0..2)
        .map(|a| relative(dz[a], shown_dz[a]).max(relative(dw[a], shown_dw[a])))
        .fold(0.0, f64::max);

    let zs = z + z.conj();
    let zd = z - z.conj();
    let ws = w + w.conj();
    let wd = w - w.conj();
    let x1 = ((2.0 * I + zd) * ws - zs * wd) / (4.0 * I * m);
    let x2 = -(zs * ws + (2.0 * I - zd) * wd) / (4.0 * m);
    let [bx1, bx2, _, _] = pt.base.0;
    let closed_forms = relative(x1, Complex64::new(bx1, 0.0)).max(relative(x2, Complex64::new(bx2, 0.0)));

    let b = pt.base.0;
    let f1 = fspec.f.partial(0).eval(&b)?;
    let f2 = fspec.f.partial(1).eval(&b)?;
    let lhs = dz[0] * f1 + dz[1] * f2;
    let rhs = (I * w + z * w.conj()) / m * (dw[0] * f1 + dw[1] * f2);
    Ok(CompatibilityResidual {
        identity: relative(lhs, rhs),
        partials,
        closed_forms,
    })
}

/// `H(w, z) = c (iw + z w̄) / ((z + i)(1 - |z|²))`, the solution of the
/// `∂̄`-system for `f ≡ c`.
pub fn solve_dbar_constant(c: f64) -> Result<ComplexFunctionField> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "constant f must be non-negative, got {c}"
        )));
    }
    let (z, w, i) = (z_expr(), w_expr(), i_expr());
    let one = CExpr::constant(Complex64::new(1.0, 0.0));
    let num = i
        .mul(&w)
        .add(&z.mul(&w.conj()))
        .mul(&CExpr::constant(Complex64::new(c, 0.0)));
    let den = z.add(&i).mul(&one.sub(&z.mul(&z.conj())));
    Ok(num.div(&den).into_field(ProductChart::Adapted))
}

/// Residuals of `∂H/∂w̄ = zF/(m(z+i))` and `∂H/∂z̄ = (iw + z w̄) z F/(m²(z+i))`.
pub fn dbar_residual(fspec: &PeteanSpec, h: &ComplexFunctionField, pt: &ProductPoint) -> Result<[Complex64; 2]> {
    let g = h.gradient_adapted(pt)?;
    let (z, w) = (pt.z(), pt.w());
    let m = pt.disk.m();
    let f = big_f(fspec, pt)?;
    let dw = (g[0] + I * g[1]) * 0.5;
    let dz = (g[4] + I * g[5]) * 0.5;
    Ok([
        dw - z * f / (m * (z + I)),
        dz - (I * w + z * w.conj()) * z * f / (m * m * (z + I)),
    ])
}

/// Verification of the holomorphic atlas `(G1, G2, G3)` over samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtlasReport {
    pub dbar: f64,
    pub cr_g1: f64,
    pub cr_g2: f64,
    pub cr_g3: f64,
    /// Smallest `|det|` of `dG_a(W_b)` for `W = e1, e3, ∂u`.
    pub min_abs_det: f64,
    pub samples: usize,
}

/// Draws product points: base points in the chart and disk points in the
/// guarded disk.
pub fn sample_product_points(fspec: &PeteanSpec, n: usize, seed: u64) -> Result<Vec<ProductPoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut s = Sampler::new(seed);
    (0..n)
        .map(|_| {
            let base = s.point(&fspec.bounds);
            Ok(ProductPoint::new(base, DiskPoint::new(s.disk())?))
        })
        .collect()
}

fn scaled_norm(r: &[Complex64], scale: f64) -> f64 {
    r.iter().map(|c| c.norm()).fold(0.0, f64::max) / (1.0 + scale)
}

/// Size of the coefficients in the Cauchy–Riemann rows, used to make
/// residuals scale-relative near the disk boundary.
fn row_scale(rows: &[[Complex64; 6]; 3], g: &[Complex64; 6]) -> f64 {
    rows.iter()
        .flat_map(|row| row.iter().zip(g).map(|(a, b)| (a * b).norm()))
        .fold(0.0, f64::max)
}

pub fn assemble_atlas(fspec: &PeteanSpec, h: &ComplexFunctionField, samples: usize, seed: u64) -> Result<AtlasReport> {
    let fields = [g1(), g2(), g3(h)?];
    let mut out = AtlasReport {
        dbar: 0.0,
        cr_g1: 0.0,
        cr_g2: 0.0,
        cr_g3: 0.0,
        min_abs_det: f64::INFINITY,
        samples,
    };
    for pt in sample_product_points(fspec, samples, seed)? {
        let rows = cr_rows(fspec, &pt)?;
        let hg = h.gradient_adapted(&pt)?;
        out.dbar = out
            .dbar
            .max(scaled_norm(&dbar_residual(fspec, h, &pt)?, row_scale(&rows, &hg)));
        let mut residuals = [0.0; 3];
        for (slot, field) in residuals.iter_mut().zip(&fields) {
            let grad = field.gradient_adapted(&pt)?;
            *slot = scaled_norm(&apply_rows(&rows, &grad), row_scale(&rows, &grad));
        }
        out.cr_g1 = out.cr_g1.max(residuals[0]);
        out.cr_g2 = out.cr_g2.max(residuals[1]);
        out.cr_g3 = out.cr_g3.max(residuals[2]);
        let e = frame_matrix(fspec.f_at(&pt.base.0)?);
        let ws = [e.column(0).into_owned(), e.column(2).into_owned()];
        let mut jac = Matrix3::<Complex64>::zeros();
        for (a, field) in fields.iter().enumerate() {
            let grad = field.gradient_original(&pt)?;
            for (b, w) in ws.iter().enumerate() {
                jac[(a, b)] = (0..4).fold(Complex64::default(), |acc, k| acc + grad[k] * w[k]);
            }
            jac[(a, 2)] = grad[4];
        }
        out.min_abs_det = out.min_abs_det.min(jac.determinant().norm());
    }
    Ok(out)
}

/// Cauchy–Riemann and compatibility residuals of the coordinates `G1, G2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateReport {
    pub cr_g1: f64,
    pub cr_g2: f64,
    /// The same two residuals computed with the frame-form operator.
    pub frame_cr: f64,
    pub identity: f64,
    pub partials: f64,
    pub closed_forms: f64,
    pub samples: usize,
}

pub fn verify_coordinates(fspec: &PeteanSpec, samples: usize, seed: u64) -> Result<CoordinateReport> {
    let mut out = CoordinateReport {
        cr_g1: 0.0,
        cr_g2: 0.0,
        frame_cr: 0.0,
        identity: 0.0,
        partials: 0.0,
        closed_forms: 0.0,
        samples,
    };
    let fields = [g1(), g2()];
    for pt in sample_product_points(fspec, samples, seed)? {
        let rows = cr_rows(fspec, &pt)?;
        let frame_rows = frame_cr_rows(fspec, &pt)?;
        for (a, field) in fields.iter().enumerate() {
            let grad = field.gradient_adapted(&pt)?;
            let r = scaled_norm(&apply_rows(&rows, &grad), row_scale(&rows, &grad));
            if a == 0 {
                out.cr_g1 = out.cr_g1.max(r);
            } else {
                out.cr_g2 = out.cr_g2.max(r);
            }
            let fr = scaled_norm(&apply_rows(&frame_rows, &grad), row_scale(&frame_rows, &grad));
            out.frame_cr = out.frame_cr.max(fr);
        }
        let c = compatibility_residual(fspec, &pt)?;
        out.identity = out.identity.max(c.identity);
        out.partials = out.partials.max(c.partials);
        out.closed_forms = out.closed_forms.max(c.closed_forms);
    }
    Ok(out)
}
