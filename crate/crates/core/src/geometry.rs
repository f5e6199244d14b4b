//! Pointwise semi-Riemannian machinery on a single ℝ⁴ chart.
//!
//! Everything here is a pure function of a [`MetricSpec`] and a point. The
//! Christoffel symbols and the Riemann tensor come from exact symbolic
//! first and second partials of the metric components; finite differences
//! only appear in tests.
//!
//! Curvature conventions: `R(X,Y) = D_X D_Y - D_Y D_X - D_[X,Y]`, stored
//! as `R^l_{kij}` with `R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l`, and
//! `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)`. With these choices the unit space form
//! has scalar curvature `+12`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::jet::{jet_mat_mul, jet_mat_transpose, Jet, JetMat};

/// Signs of the orthonormal frame: two spacelike, then two timelike.
pub const SIGNATURE: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

/// Gram–Schmidt rejects intermediate vectors whose squared norm is closer
/// to zero than this.
pub const FRAME_DEGENERACY: f64 = 1e-10;

pub type TangentVector4 = Vector4<f64>;

/// Chart coordinates `(x1, x2, x3, x4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point4(pub [f64; 4]);

impl Point4 {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Point4([x1, x2, x3, x4])
    }

    pub fn origin() -> Self {
        Point4([0.0; 4])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn shifted(&self, axis: usize, by: f64) -> Point4 {
        let mut out = *self;
        out.0[axis] += by;
        out
    }

    pub fn offset(&self, v: &TangentVector4, by: f64) -> Point4 {
        let mut out = *self;
        for i in 0..4 {
            out.0[i] += by * v[i];
        }
        out
    }
}

/// Closed coordinate box on which a metric is declared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartBounds {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl ChartBounds {
    pub fn cube(half_width: f64) -> Self {
        ChartBounds {
            lo: [-half_width; 4],
            hi: [half_width; 4],
        }
    }

    pub fn contains(&self, p: &Point4) -> bool {
        (0..4).all(|i| p.0[i] >= self.lo[i] && p.0[i] <= self.hi[i])
    }

    pub fn is_empty(&self) -> bool {
        (0..4).any(|i| !(self.lo[i] < self.hi[i]))
    }
}

/// A neutral metric on a chart: ten independent component expressions,
/// stored so that `g_ij` and `g_ji` are the same field.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    comps: [ScalarField; 10],
    pub bounds: ChartBounds,
}

fn sym_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle
    [0, 4, 7, 9][a] + (b - a)
}

impl MetricSpec {
    /// Builds a metric from its upper triangle, `upper[i][j]` for `j >= i`;
    /// entries below the diagonal are ignored.
    pub fn from_upper(name: &str, upper: [[ScalarField; 4]; 4], bounds: ChartBounds) -> Self {
        let comps = std::array::from_fn(|k| {
            let (i, j) = (0..4)
                .flat_map(|i| (i..4).map(move |j| (i, j)))
                .nth(k)
                .expect("ten entries");
            upper[i][j].clone()
        });
        let spec = MetricSpec {
            name: name.to_string(),
            comps,
            bounds,
        };
        for c in &spec.comps {
            c.precompute(2);
        }
        spec
    }

    /// Convenience constructor from expression strings (upper triangle).
    pub fn parse(name: &str, upper: [[&str; 4]; 4], bounds: ChartBounds) -> Result<Self> {
        let mut fields: Vec<ScalarField> = Vec::with_capacity(16);
        for (i, row) in upper.iter().enumerate() {
            for (j, text) in row.iter().enumerate() {
                fields.push(if j >= i {
                    ScalarField::parse(text)?
                } else {
                    ScalarField::constant(0.0, 4)
                });
            }
        }
        let upper = std::array::from_fn(|i| std::array::from_fn(|j| fields[4 * i + j].clone()));
        Ok(Self::from_upper(name, upper, bounds))
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[sym_index(i, j)]
    }

    pub(crate) fn check_point(&self, p: &Point4) -> Result<()> {
        if !p.is_finite() || !self.bounds.contains(p) {
            return Err(Error::OutOfChart { point: p.0 });
        }
        Ok(())
    }

    fn eval_matrix(&self, p: &Point4, f: impl Fn(&ScalarField) -> &ScalarField) -> Result<Matrix4<f64>> {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in i..4 {
                let v = f(self.component(i, j)).eval(&p.0)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    /// Metric components as jets (value, gradient, Hessian) at `p`.
    pub fn jets(&self, p: &Point4) -> Result<JetMat> {
        let mut out = [[Jet::ZERO; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let jet = Jet::of_field(self.component(i, j), &p.0)?;
                out[i][j] = jet;
                out[j][i] = jet;
            }
        }
        Ok(out)
    }
}

/// Metric value at a point with its inverse and the frame signs.
#[derive(Debug, Clone, Copy)]
pub struct MetricValue {
    pub g: Matrix4<f64>,
    pub inverse: Matrix4<f64>,
    pub eps: [f64; 4],
}

fn check_signature(g: &Matrix4<f64>, p: &Point4) -> Result<Matrix4<f64>> {
    let eig = SymmetricEigen::new(*g);
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-14 * scale) {
        return Err(Error::SingularMetric { point: p.0 });
    }
    let positive = eig.eigenvalues.iter().filter(|l| **l > 0.0).count();
    if positive != 2 {
        return Err(Error::Signature {
            point: p.0,
            positive,
            negative: 4 - positive,
        });
    }
    g.try_inverse().ok_or(Error::SingularMetric { point: p.0 })
}

pub fn metric_at(spec: &MetricSpec, p: &Point4) -> Result<MetricValue> {
    spec.check_point(p)?;
    let g = spec.eval_matrix(p, |f| f)?;
    let inverse = check_signature(&g, p)?;
    Ok(MetricValue {
        g,
        inverse,
        eps: SIGNATURE,
    })
}

/// `gamma[k][i][j] = Γ^k_{ij}`.
pub type Christoffel = [[[f64; 4]; 4]; 4];

/// `r[l][k][i][j] = R^l_{kij}`.
#[derive(Debug, Clone, Copy)]
pub struct RiemannTensor {
    pub r: [[[[f64; 4]; 4]; 4]; 4],
}

impl RiemannTensor {
    /// `R(X,Y)` as an endomorphism in coordinates.
    pub fn endomorphism(&self, x: &TangentVector4, y: &TangentVector4) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for l in 0..4 {
            for k in 0..4 {
                let mut acc = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        acc += self.r[l][k][i][j] * x[i] * y[j];
                    }
                }
                m[(l, k)] = acc;
            }
        }
        m
    }

    pub fn apply(&self, x: &TangentVector4, y: &TangentVector4, z: &TangentVector4) -> TangentVector4 {
        self.endomorphism(x, y) * z
    }

    pub fn ricci(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|j, k| (0..4).map(|i| self.r[i][k][i][j]).sum())
    }
}

/// Everything the rest of the engine needs about the metric at one point:
/// value and inverse, exact first and second partials, Christoffel symbols
/// with their first partials, and the Riemann tensor.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: Point4,
    pub metric: MetricValue,
    pub dg: [Matrix4<f64>; 4],
    pub ddg: [[Matrix4<f64>; 4]; 4],
    pub christoffel: Christoffel,
    /// `dchristoffel[m][k][i][j] = ∂_m Γ^k_{ij}`.
    pub dchristoffel: [Christoffel; 4],
    pub riemann: RiemannTensor,
}

impl PointGeometry {
    pub fn at(spec: &MetricSpec, p: &Point4) -> Result<Self> {
        spec.check_point(p)?;
        Self::at_unchecked(spec, p)
    }

    /// Skips the chart-bounds check; finite-difference stencils centred on
    /// an admissible point may step slightly outside the box.
    pub(crate) fn at_unchecked(spec: &MetricSpec, p: &Point4) -> Result<Self> {
        let g = spec.eval_matrix(p, |f| f)?;
        let inverse = check_signature(&g, p)?;
        let metric = MetricValue {
            g,
            inverse,
            eps: SIGNATURE,
        };
        let mut dg = [Matrix4::zeros(); 4];
        let mut ddg = [[Matrix4::zeros(); 4]; 4];
        for m in 0..4 {
            dg[m] = spec.eval_matrix(p, |f| f.partial(m))?;
            for n in m..4 {
                let second = spec.eval_matrix(p, |f| f.partial(m).partial(n))?;
                ddg[m][n] = second;
                ddg[n][m] = second;
            }
        }

        // S_lij = ∂_i g_lj + ∂_j g_li - ∂_l g_ij
        let s = |l: usize, i: usize, j: usize| dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)];
        let mut christoffel = [[[0.0; 4]; 4]; 4];
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    christoffel[k][i][j] = 0.5 * (0..4).map(|l| inverse[(k, l)] * s(l, i, j)).sum::<f64>();
                }
            }
        }

        let mut dchristoffel = [[[[0.0; 4]; 4]; 4]; 4];
        for m in 0..4 {
            let dinv = -inverse * dg[m] * inverse;
            let ds = |l: usize, i: usize, j: usize| ddg[m][i][(l, j)] + ddg[m][j][(l, i)] - ddg[m][l][(i, j)];
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        dchristoffel[m][k][i][j] = 0.5
                            * (0..4)
                                .map(|l| dinv[(k, l)] * s(l, i, j) + inverse[(k, l)] * ds(l, i, j))
                                .sum::<f64>();
                    }
                }
            }
        }

        let gm = &christoffel;
        let mut r = [[[[0.0; 4]; 4]; 4]; 4];
        for l in 0..4 {
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let mut v = dchristoffel[i][l][j][k] - dchristoffel[j][l][i][k];
                        for m in 0..4 {
                            v += gm[l][i][m] * gm[m][j][k] - gm[l][j][m] * gm[m][i][k];
                        }
                        r[l][k][i][j] = v;
                    }
                }
            }
        }

        Ok(PointGeometry {
            point: *p,
            metric,
            dg,
            ddg,
            christoffel,
            dchristoffel,
            riemann: RiemannTensor { r },
        })
    }

    pub fn g(&self) -> &Matrix4<f64> {
        &self.metric.g
    }

    pub fn inner(&self, x: &TangentVector4, y: &TangentVector4) -> f64 {
        (x.transpose() * self.metric.g * y)[(0, 0)]
    }

    /// `Γ_i` as the matrix `(Γ_i)^a_c = Γ^a_{ic}`.
    pub fn connection_matrix(&self, i: usize) -> Matrix4<f64> {
        Matrix4::from_fn(|a, c| self.christoffel[a][i][c])
    }

    fn connection_matrix_partial(&self, i: usize, m: usize) -> Matrix4<f64> {
        Matrix4::from_fn(|a, c| self.dchristoffel[m][a][i][c])
    }

    /// `D_X Y` for `Y` extended with constant coordinate components.
    pub fn covariant_derivative_const(&self, x: &TangentVector4, y: &TangentVector4) -> TangentVector4 {
        TangentVector4::from_fn(|k, _| {
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    acc += self.christoffel[k][i][j] * x[i] * y[j];
                }
            }
            acc
        })
    }

    /// `D_{∂_i} J` for an endomorphism field given by its jet.
    pub fn endo_derivative(&self, j: &EndoJet, i: usize) -> Matrix4<f64> {
        let gamma = self.connection_matrix(i);
        j.d[i] + gamma * j.value - j.value * gamma
    }

    /// `∂_m (D_{∂_i} J)` in coordinates.
    pub fn endo_derivative_partial(&self, j: &EndoJet, i: usize, m: usize) -> Matrix4<f64> {
        let gamma = self.connection_matrix(i);
        let dgamma = self.connection_matrix_partial(i, m);
        j.dd[m][i] + dgamma * j.value + gamma * j.d[m] - j.d[m] * gamma - j.value * dgamma
    }

    pub fn endo_covariant_derivative(&self, j: &EndoJet, x: &TangentVector4) -> Matrix4<f64> {
        (0..4).fold(Matrix4::zeros(), |acc, i| acc + self.endo_derivative(j, i) * x[i])
    }

    pub fn curvature_summary(&self, frame: &OrientedFrame) -> CurvatureSummary {
        let ricci = self.riemann.ricci();
        let tau = (self.metric.inverse.component_mul(&ricci)).sum();
        let ricci_frame = frame.e.transpose() * ricci * frame.e;
        let eta = Matrix4::from_diagonal(&Vector4::from(SIGNATURE));
        let einstein_residual = (ricci_frame - eta * (tau / 4.0)).norm();
        CurvatureSummary {
            ricci,
            ricci_frame_norm: ricci_frame.norm(),
            tau,
            einstein_residual,
        }
    }
}

/// Ricci tensor, scalar curvature and the trace-free Ricci norm.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSummary {
    /// Coordinate components `Ric_{jk}`.
    pub ricci: Matrix4<f64>,
    /// Frobenius norm of the Ricci tensor in orthonormal-frame components.
    pub ricci_frame_norm: f64,
    pub tau: f64,
    /// Frame Frobenius norm of `Ric - (τ/4) g`.
    pub einstein_residual: f64,
}

pub fn christoffel_at(spec: &MetricSpec, p: &Point4) -> Result<Christoffel> {
    Ok(PointGeometry::at(spec, p)?.christoffel)
}

pub fn riemann_at(spec: &MetricSpec, p: &Point4) -> Result<RiemannTensor> {
    Ok(PointGeometry::at(spec, p)?.riemann)
}

pub fn curvature_summary(spec: &MetricSpec, p: &Point4) -> Result<CurvatureSummary> {
    let geom = PointGeometry::at(spec, p)?;
    let frame = orthonormal_frame(spec, p)?;
    Ok(geom.curvature_summary(&frame))
}

// ---------------------------------------------------------------------------
// Orthonormal frames

/// Which combination of the remaining coordinate directions fills each
/// frame slot. Recorded at one point and replayed nearby so that the frame
/// is a smooth local field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePlan {
    picks: [Pick; 4],
    flip_last: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pick {
    Single(usize),
    Sum(usize, usize),
    Diff(usize, usize),
}

impl FramePlan {
    /// Plan that keeps the coordinate order; recorded for frames supplied
    /// explicitly rather than produced by Gram–Schmidt.
    pub fn identity() -> Self {
        FramePlan {
            picks: [Pick::Single(0); 4],
            flip_last: false,
        }
    }
}

impl Pick {
    fn consumed(self) -> usize {
        match self {
            Pick::Single(i) | Pick::Sum(i, _) | Pick::Diff(i, _) => i,
        }
    }
}

fn candidates(n: usize) -> Vec<Pick> {
    let mut out: Vec<Pick> = (0..n).map(Pick::Single).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(Pick::Sum(i, j));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(Pick::Diff(i, j));
            }
        }
    }
    out
}

/// Minimal field interface shared by `f64` and [`Jet`] so that one
/// Gram–Schmidt routine yields both frames and their derivatives.
pub(crate) trait FrameScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn lift(v: f64) -> Self;
    fn root(self) -> Self;
    fn value(&self) -> f64;
}

impl FrameScalar for f64 {
    fn lift(v: f64) -> Self {
        v
    }
    fn root(self) -> Self {
        self.sqrt()
    }
    fn value(&self) -> f64 {
        *self
    }
}

impl FrameScalar for Jet {
    fn lift(v: f64) -> Self {
        Jet::constant(v)
    }
    fn root(self) -> Self {
        self.sqrt()
    }
    fn value(&self) -> f64 {
        self.v
    }
}

type Vec4<S> = [S; 4];

fn g_inner<S: FrameScalar>(g: &[[S; 4]; 4], u: &Vec4<S>, v: &Vec4<S>) -> S {
    let mut acc = S::lift(0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc = acc + u[i] * g[i][j] * v[j];
        }
    }
    acc
}

fn combine<S: FrameScalar>(rest: &[Vec4<S>], pick: Pick) -> Vec4<S> {
    match pick {
        Pick::Single(i) => rest[i],
        Pick::Sum(i, j) => std::array::from_fn(|k| rest[i][k] + rest[j][k]),
        Pick::Diff(i, j) => std::array::from_fn(|k| rest[i][k] - rest[j][k]),
    }
}

/// Signature-aware Gram–Schmidt on the coordinate basis. Returns the frame
/// as columns `e[a]` and the plan used (recorded when `plan` is `None`).
pub(crate) fn gram_schmidt<S: FrameScalar>(
    g: &[[S; 4]; 4],
    plan: Option<&FramePlan>,
    p: &Point4,
) -> Result<([Vec4<S>; 4], FramePlan)> {
    let zero = S::lift(0.0);
    let mut rest: Vec<Vec4<S>> = (0..4)
        .map(|i| std::array::from_fn(|k| S::lift(if k == i { 1.0 } else { 0.0 })))
        .collect();
    let mut frame: Vec<Vec4<S>> = Vec::with_capacity(4);
    let mut picks = [Pick::Single(0); 4];

    for slot in 0..4 {
        let sign = SIGNATURE[slot];
        let project = |v: Vec4<S>, frame: &[Vec4<S>]| {
            let mut out = v;
            for (b, e) in frame.iter().enumerate() {
                let c = g_inner(g, &v, e) * S::lift(SIGNATURE[b]);
                for k in 0..4 {
                    out[k] = out[k] - c * e[k];
                }
            }
            out
        };
        let options = match plan {
            Some(plan) => vec![plan.picks[slot]],
            None => candidates(rest.len()),
        };
        let mut chosen = None;
        for pick in options {
            let v = project(combine(&rest, pick), &frame);
            let norm = g_inner(g, &v, &v);
            if sign * norm.value() > FRAME_DEGENERACY {
                chosen = Some((pick, v, norm));
                break;
            }
        }
        let (pick, v, norm) = chosen.ok_or(Error::DegenerateFrame { point: p.0, slot })?;
        let scale = (norm * S::lift(sign)).root();
        frame.push(std::array::from_fn(|k| v[k] / scale));
        picks[slot] = pick;
        rest.remove(pick.consumed());
    }

    let det = Matrix4::from_fn(|i, a| frame[a][i].value()).determinant();
    let flip_last = match plan {
        Some(plan) => plan.flip_last,
        None => det < 0.0,
    };
    if flip_last {
        for k in 0..4 {
            frame[3][k] = zero - frame[3][k];
        }
    }
    Ok(([frame[0], frame[1], frame[2], frame[3]], FramePlan { picks, flip_last }))
}

/// Oriented orthonormal frame at a point: `e.column(a)` holds the
/// coordinate components of `e_{a+1}`.
#[derive(Debug, Clone)]
pub struct OrientedFrame {
    pub e: Matrix4<f64>,
    pub plan: FramePlan,
}

impl OrientedFrame {
    pub fn explicit(e: Matrix4<f64>) -> Self {
        OrientedFrame {
            e,
            plan: FramePlan::identity(),
        }
    }

    /// Frame components of a coordinate vector: `E^{-1} X = η Eᵀ g X`.
    pub fn to_frame(&self, g: &Matrix4<f64>, x: &TangentVector4) -> TangentVector4 {
        let eta = Matrix4::from_diagonal(&Vector4::from(SIGNATURE));
        eta * self.e.transpose() * g * x
    }

    pub fn to_coords(&self, x: &TangentVector4) -> TangentVector4 {
        self.e * x
    }

    /// `E^{-1}` for an orthonormal frame.
    pub fn inverse(&self, g: &Matrix4<f64>) -> Matrix4<f64> {
        let eta = Matrix4::from_diagonal(&Vector4::from(SIGNATURE));
        eta * self.e.transpose() * g
    }
}

pub fn orthonormal_frame(spec: &MetricSpec, p: &Point4) -> Result<OrientedFrame> {
    let value = metric_at(spec, p)?;
    frame_from_metric(&value.g, None, p)
}

pub(crate) fn frame_from_metric(g: &Matrix4<f64>, plan: Option<&FramePlan>, p: &Point4) -> Result<OrientedFrame> {
    let garr: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| g[(i, j)]));
    let (cols, plan) = gram_schmidt(&garr, plan, p)?;
    Ok(OrientedFrame {
        e: Matrix4::from_fn(|i, a| cols[a][i]),
        plan,
    })
}

/// Frame with exact first and second derivatives: `e[i][a]` is the jet of
/// coordinate component `i` of `e_{a+1}`.
#[derive(Debug, Clone)]
pub struct FrameJet {
    pub e: JetMat,
    pub g: JetMat,
    pub plan: FramePlan,
}

impl FrameJet {
    pub fn at(spec: &MetricSpec, p: &Point4, plan: Option<&FramePlan>) -> Result<Self> {
        let g = spec.jets(p)?;
        let (cols, plan) = gram_schmidt(&g, plan, p)?;
        let mut e = [[Jet::ZERO; 4]; 4];
        for i in 0..4 {
            for a in 0..4 {
                e[i][a] = cols[a][i];
            }
        }
        Ok(FrameJet { e, g, plan })
    }

    pub fn value(&self) -> OrientedFrame {
        OrientedFrame {
            e: Matrix4::from_fn(|i, a| self.e[i][a].v),
            plan: self.plan.clone(),
        }
    }

    /// Coordinate jet of the endomorphism whose frame matrix is `k`:
    /// `E K η Eᵀ g`.
    pub fn endomorphism(&self, k: &Matrix4<f64>) -> JetMat {
        let eta = Matrix4::from_diagonal(&Vector4::from(SIGNATURE));
        let k_eta = crate::jet::jet_mat_const(&(k * eta));
        let left = jet_mat_mul(&self.e, &k_eta);
        let right = jet_mat_mul(&jet_mat_transpose(&self.e), &self.g);
        jet_mat_mul(&left, &right)
    }
}

/// Endomorphism field with exact partials up to order two at one point.
#[derive(Debug, Clone)]
pub struct EndoJet {
    pub value: Matrix4<f64>,
    pub d: [Matrix4<f64>; 4],
    pub dd: [[Matrix4<f64>; 4]; 4],
}

impl EndoJet {
    pub fn from_jets(m: &JetMat) -> Self {
        EndoJet {
            value: Matrix4::from_fn(|a, b| m[a][b].v),
            d: std::array::from_fn(|i| Matrix4::from_fn(|a, b| m[a][b].d[i])),
            dd: std::array::from_fn(|i| std::array::from_fn(|j| Matrix4::from_fn(|a, b| m[a][b].h[i][j]))),
        }
    }

    pub fn from_fields(fields: &[[ScalarField; 4]; 4], p: &Point4) -> Result<Self> {
        let mut m = [[Jet::ZERO; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] = Jet::of_field(&fields[a][b], &p.0)?;
            }
        }
        Ok(Self::from_jets(&m))
    }

    pub fn constant(value: Matrix4<f64>) -> Self {
        EndoJet {
            value,
            d: [Matrix4::zeros(); 4],
            dd: [[Matrix4::zeros(); 4]; 4],
        }
    }
}

/// `(D_X J)` at `p` for an explicit endomorphism field.
pub fn endo_covariant_derivative(
    spec: &MetricSpec,
    j: &[[ScalarField; 4]; 4],
    x: &TangentVector4,
    p: &Point4,
) -> Result<Matrix4<f64>> {
    let geom = PointGeometry::at(spec, p)?;
    let jet = EndoJet::from_fields(j, p)?;
    Ok(geom.endo_covariant_derivative(&jet, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> MetricSpec {
        MetricSpec::parse(
            "flat",
            [
                ["1", "0", "0", "0"],
                ["", "1", "0", "0"],
                ["", "", "-1", "0"],
                ["", "", "", "-1"],
            ],
            ChartBounds::cube(1.0),
        )
        .unwrap()
    }

    #[test]
    fn flat_metric_is_its_own_inverse() {
        let m = metric_at(&flat(), &Point4::new(0.2, 0.1, -0.3, 0.5)).unwrap();
        assert_eq!(m.g, m.inverse);
        assert_eq!(m.eps, SIGNATURE);
    }

    #[test]
    fn wrong_signature_is_rejected() {
        let spec = MetricSpec::parse(
            "lorentz",
            [
                ["1", "0", "0", "0"],
                ["", "1", "0", "0"],
                ["", "", "1", "0"],
                ["", "", "", "-1"],
            ],
            ChartBounds::cube(1.0),
        )
        .unwrap();
        let err = metric_at(&spec, &Point4::origin()).unwrap_err();
        assert!(matches!(
            err,
            Error::Signature {
                positive: 3,
                negative: 1,
                ..
            }
        ));
    }

    #[test]
    fn points_outside_chart_are_rejected() {
        let err = metric_at(&flat(), &Point4::new(2.0, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::OutOfChart { .. }));
    }

    #[test]
    fn flat_frame_is_coordinate_basis() {
        let frame = orthonormal_frame(&flat(), &Point4::origin()).unwrap();
        assert_eq!(frame.e, Matrix4::identity());
    }

    #[test]
    fn negative_first_direction_is_reordered() {
        let spec = MetricSpec::parse(
            "swapped",
            [
                ["-1", "0", "0", "0"],
                ["", "1", "0.3", "0"],
                ["", "", "-2", "0"],
                ["", "", "", "1"],
            ],
            ChartBounds::cube(1.0),
        )
        .unwrap();
        let p = Point4::origin();
        let g = metric_at(&spec, &p).unwrap().g;
        let frame = orthonormal_frame(&spec, &p).unwrap();
        let gram = frame.e.transpose() * g * frame.e;
        let eta = Matrix4::from_diagonal(&Vector4::from(SIGNATURE));
        assert!((gram - eta).amax() < 1e-12);
        assert!(frame.e.determinant() > 0.0);
    }

    #[test]
    fn null_coordinate_directions_use_combinations() {
        // g = dx1 dx2 + dx3 dx4 (both blocks off-diagonal)
        let spec = MetricSpec::parse(
            "null",
            [
                ["0", "1", "0", "0"],
                ["", "0", "0", "0"],
                ["", "", "0", "1"],
                ["", "", "", "0"],
            ],
            ChartBounds::cube(1.0),
        )
        .unwrap();
        let p = Point4::origin();
        let g = metric_at(&spec, &p).unwrap().g;
        let frame = orthonormal_frame(&spec, &p).unwrap();
        let gram = frame.e.transpose() * g * frame.e;
        let eta = Matrix4::from_diagonal(&Vector4::from(SIGNATURE));
        assert!((gram - eta).amax() < 1e-12);
        assert!(frame.e.determinant() > 0.0);
    }
}
