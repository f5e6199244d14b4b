//! Bivectors of a neutral four-manifold in orthonormal-frame components.
//!
//! Components are stored in the basis
//! `(e1∧e2, e1∧e3, e1∧e4, e2∧e3, e2∧e4, e3∧e4)` so that the Hodge star,
//! the `s`-frames and the endomorphism correspondence are constant
//! matrices. Anti-self-dual bivectors are also handled as
//! [`FiberVector3`] coordinates in the frame `(s1, s2, s3)`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{orthonormal_frame, MetricSpec, OrientedFrame, Point4, PointGeometry, SIGNATURE};

/// Index pairs of the frame basis, in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Signs of the fiber metric on the `(s1, s2, s3)` frame.
pub const FIBER_SIGNS: [f64; 3] = [-1.0, 1.0, 1.0];

/// Signs of the bivector metric on `(s̄1, s̄2, s̄3, s1, s2, s3)`.
pub const SPLIT_SIGNS: [f64; 6] = [1.0, -1.0, -1.0, 1.0, -1.0, -1.0];

pub type FiberVector3 = Vector3<f64>;

fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    if i == j {
        return None;
    }
    let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    PAIRS.iter().position(|&pr| pr == (a, b)).map(|k| (k, sign))
}

/// Bivector metric on the basis: `g(e_i∧e_j, e_i∧e_j) = ½ ε_i ε_j`.
pub fn basis_norms() -> [f64; 6] {
    PAIRS.map(|(i, j)| 0.5 * SIGNATURE[i] * SIGNATURE[j])
}

/// A bivector at a point. `base` is `None` for frame-abstract bivectors
/// such as the constant `s`-frames, which pair with anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bivector {
    pub c: Vector6<f64>,
    pub base: Option<Point4>,
}

impl Bivector {
    pub fn new(c: [f64; 6]) -> Self {
        Bivector {
            c: Vector6::from(c),
            base: None,
        }
    }

    pub fn at(self, base: Point4) -> Self {
        Bivector {
            base: Some(base),
            ..self
        }
    }

    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 6];
        c[k] = 1.0;
        Self::new(c)
    }

    /// `e_i ∧ e_j` for any ordered pair.
    pub fn e(i: usize, j: usize) -> Self {
        let mut out = Self::new([0.0; 6]);
        if let Some((k, sign)) = pair_index(i, j) {
            out.c[k] = sign;
        }
        out
    }

    /// Component `σ^{ij}` of the antisymmetric array.
    pub fn component(&self, i: usize, j: usize) -> f64 {
        pair_index(i, j).map_or(0.0, |(k, sign)| sign * self.c[k])
    }

    pub fn scale(&self, s: f64) -> Self {
        Bivector {
            c: self.c * s,
            base: self.base,
        }
    }

    pub fn add(&self, o: &Bivector) -> Self {
        Bivector {
            c: self.c + o.c,
            base: self.base.or(o.base),
        }
    }

    pub fn sub(&self, o: &Bivector) -> Self {
        self.add(&o.scale(-1.0))
    }
}

/// `X ∧ Y` from frame components.
pub fn wedge(x: &Vector4<f64>, y: &Vector4<f64>) -> Bivector {
    Bivector::new(PAIRS.map(|(i, j)| x[i] * y[j] - x[j] * y[i]))
}

fn inner_unchecked(a: &Bivector, b: &Bivector) -> f64 {
    let n = basis_norms();
    (0..6).map(|k| n[k] * a.c[k] * b.c[k]).sum()
}

pub fn bivector_inner(a: &Bivector, b: &Bivector) -> Result<f64> {
    if let (Some(p), Some(q)) = (a.base, b.base) {
        if p != q {
            return Err(Error::MismatchedBase);
        }
    }
    Ok(inner_unchecked(a, b))
}

pub fn hodge_star(a: &Bivector) -> Bivector {
    let c = &a.c;
    Bivector {
        c: Vector6::new(c[5], c[4], -c[3], -c[2], c[1], c[0]),
        base: a.base,
    }
}

/// Anti-self-dual frame `s_a` (index 0..3).
pub fn s(a: usize) -> Bivector {
    match a {
        0 => Bivector::new([1.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
        1 => Bivector::new([0.0, 1.0, 0.0, 0.0, -1.0, 0.0]),
        _ => Bivector::new([0.0, 0.0, 1.0, 1.0, 0.0, 0.0]),
    }
}

/// Self-dual frame `s̄_a` (index 0..3).
pub fn s_bar(a: usize) -> Bivector {
    match a {
        0 => Bivector::new([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        1 => Bivector::new([0.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
        _ => Bivector::new([0.0, 0.0, 1.0, -1.0, 0.0, 0.0]),
    }
}

/// Columns are `s̄1, s̄2, s̄3, s1, s2, s3` in the `e_i∧e_j` basis.
pub fn split_basis() -> Matrix6<f64> {
    let cols: Vec<Vector6<f64>> = (0..3).map(|a| s_bar(a).c).chain((0..3).map(|a| s(a).c)).collect();
    Matrix6::from_columns(&cols)
}

/// Orthonormal frame together with the `s`- and `s̄`-frames over it.
#[derive(Debug, Clone)]
pub struct AsdFrame {
    pub base: Point4,
    pub frame: OrientedFrame,
    pub s: [Bivector; 3],
    pub s_bar: [Bivector; 3],
}

pub fn asd_frame(spec: &MetricSpec, p: &Point4) -> Result<AsdFrame> {
    let frame = orthonormal_frame(spec, p)?;
    Ok(AsdFrame {
        base: *p,
        frame,
        s: [0, 1, 2].map(|a| s(a).at(*p)),
        s_bar: [0, 1, 2].map(|a| s_bar(a).at(*p)),
    })
}

/// Frame matrix of `K_σ`, defined by `g(K_σ X, Y) = 2 g(σ, X∧Y)`.
pub fn endo_from_bivector(sigma: &Bivector) -> Matrix4<f64> {
    Matrix4::from_fn(|j, i| SIGNATURE[i] * sigma.component(i, j))
}

/// Inverse of [`endo_from_bivector`] on skew-adjoint frame matrices.
pub fn bivector_from_endo(k: &Matrix4<f64>) -> Bivector {
    Bivector::new(PAIRS.map(|(i, j)| SIGNATURE[i] * k[(j, i)]))
}

/// `Σ y_a s_a`.
pub fn fiber_bivector(y: &FiberVector3) -> Bivector {
    (0..3).fold(Bivector::new([0.0; 6]), |acc, a| acc.add(&s(a).scale(y[a])))
}

/// Frame matrix of `Σ y_a K_{s_a}`.
pub fn fiber_endo(y: &FiberVector3) -> Matrix4<f64> {
    endo_from_bivector(&fiber_bivector(y))
}

/// The `K_{s_a}` matrices.
pub fn s_endos() -> [Matrix4<f64>; 3] {
    [0, 1, 2].map(|a| endo_from_bivector(&s(a)))
}

/// `⟨A, B⟩ = ¼ tr(AB)` on endomorphisms; `⟨K_{s1}, K_{s1}⟩ = -1`.
pub fn endo_inner(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    0.25 * (a * b).trace()
}

/// `(s1, s2, s3)` components of an endomorphism lying in the span of the
/// `K_{s_a}`.
pub fn fiber_components(m: &Matrix4<f64>) -> FiberVector3 {
    let k = s_endos();
    FiberVector3::from_fn(|a, _| FIBER_SIGNS[a] * endo_inner(m, &k[a]))
}

/// `s`-frame components of a bivector (its anti-self-dual part).
pub fn asd_components(b: &Bivector) -> FiberVector3 {
    FiberVector3::from_fn(|a, _| inner_unchecked(b, &s(a)) / SPLIT_SIGNS[3 + a])
}

/// Fiber metric `diag(-1, 1, 1)`, equal to `-g` on `Λ⁻`.
pub fn fiber_inner(a: &FiberVector3, b: &FiberVector3) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn fiber_cross_product(sigma: &FiberVector3, v: &FiberVector3) -> FiberVector3 {
    let (y, w) = (sigma, v);
    FiberVector3::new(
        y[2] * w[1] - y[1] * w[2],
        y[2] * w[0] - y[0] * w[2],
        y[0] * w[1] - y[1] * w[0],
    )
}

/// Curvature operator in the split basis together with its block
/// decomposition and the frame curvature it was built from.
#[derive(Debug, Clone)]
pub struct CurvatureOperator {
    /// Matrix of `𝓡` on `(s̄1, s̄2, s̄3, s1, s2, s3)`.
    pub matrix: Matrix6<f64>,
    pub tau_over_6: f64,
    /// Off-diagonal blocks (traceless Ricci part).
    pub b_block: Matrix6<f64>,
    pub w_plus: Matrix3<f64>,
    pub w_minus: Matrix3<f64>,
    /// `R(e_a, e_b)` as frame matrices.
    endos: [[Matrix4<f64>; 4]; 4],
}

impl CurvatureOperator {
    pub fn from_geometry(geom: &PointGeometry, frame: &OrientedFrame) -> Self {
        let einv = frame.inverse(geom.g());
        let endos: [[Matrix4<f64>; 4]; 4] = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let r = geom
                    .riemann
                    .endomorphism(&frame.e.column(a).into(), &frame.e.column(b).into());
                einv * r * frame.e
            })
        });
        // Q(e_ij, e_kl) = -g(R(e_i,e_j)e_k, e_l)
        let norms = basis_norms();
        let mut m_e = Matrix6::zeros();
        for (m, &(i, j)) in PAIRS.iter().enumerate() {
            for (n, &(k, l)) in PAIRS.iter().enumerate() {
                let q = -SIGNATURE[l] * endos[i][j][(l, k)];
                m_e[(n, m)] = q / norms[n];
            }
        }
        let p = split_basis();
        let p_inv = p.try_inverse().expect("split basis is invertible");
        let matrix = p_inv * m_e * p;
        let tau_over_6 = matrix.trace() / 6.0;
        let mut b_block = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                b_block[(i, 3 + j)] = matrix[(i, 3 + j)];
                b_block[(3 + i, j)] = matrix[(3 + i, j)];
            }
        }
        let w_plus = matrix.fixed_view::<3, 3>(0, 0) - Matrix3::identity() * tau_over_6;
        let w_minus = matrix.fixed_view::<3, 3>(3, 3) - Matrix3::identity() * tau_over_6;
        CurvatureOperator {
            matrix,
            tau_over_6,
            b_block,
            w_plus,
            w_minus,
            endos,
        }
    }

    pub fn tau(&self) -> f64 {
        6.0 * self.tau_over_6
    }

    pub fn w_minus_norm(&self) -> f64 {
        self.w_minus.norm()
    }

    pub fn w_plus_norm(&self) -> f64 {
        self.w_plus.norm()
    }

    pub fn b_norm(&self) -> f64 {
        self.b_block.norm()
    }

    /// `τ/6·I + 𝓑 + W⁺ ⊕ W⁻`.
    pub fn reassemble(&self) -> Matrix6<f64> {
        let mut m = Matrix6::identity() * self.tau_over_6 + self.b_block;
        let mut view = m.fixed_view_mut::<3, 3>(0, 0);
        view += self.w_plus;
        let mut view = m.fixed_view_mut::<3, 3>(3, 3);
        view += self.w_minus;
        m
    }

    /// `𝓡(a)` as a bivector.
    pub fn apply(&self, a: &Bivector) -> Bivector {
        let p = split_basis();
        let p_inv = p.try_inverse().expect("split basis is invertible");
        Bivector {
            c: p * self.matrix * p_inv * a.c,
            base: a.base,
        }
    }

    /// `R(a)` as a frame endomorphism, extended linearly from
    /// `R(e_i∧e_j) = R(e_i, e_j)`.
    pub fn endomorphism(&self, a: &Bivector) -> Matrix4<f64> {
        PAIRS
            .iter()
            .enumerate()
            .fold(Matrix4::zeros(), |acc, (k, &(i, j))| acc + self.endos[i][j] * a.c[k])
    }

    /// `R(X, Y)` for frame-component vectors.
    pub fn endomorphism_xy(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> Matrix4<f64> {
        self.endomorphism(&wedge(x, y))
    }

    /// Action of `R(a)` on `Λ⁻`, in `s`-frame components.
    pub fn curvature_action(&self, a: &Bivector, b: &FiberVector3) -> FiberVector3 {
        let r = self.endomorphism(a);
        let k = fiber_endo(b);
        fiber_components(&(r * k - k * r))
    }
}

pub fn curvature_operator(spec: &MetricSpec, p: &Point4) -> Result<CurvatureOperator> {
    let geom = PointGeometry::at(spec, p)?;
    let frame = orthonormal_frame(spec, p)?;
    Ok(CurvatureOperator::from_geometry(&geom, &frame))
}

/// `R(a)b` at a point of a metric chart.
pub fn curvature_action(spec: &MetricSpec, p: &Point4, a: &Bivector, b: &FiberVector3) -> Result<FiberVector3> {
    Ok(curvature_operator(spec, p)?.curvature_action(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn metric_on_basis() {
        let e12 = Bivector::e(0, 1);
        assert_eq!(bivector_inner(&e12, &e12).unwrap(), 0.5);
        assert_eq!(bivector_inner(&e12, &Bivector::e(2, 3)).unwrap(), 0.0);
        let signs: Vec<f64> = (0..3).map(|a| bivector_inner(&s(a), &s(a)).unwrap()).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0]);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(bivector_inner(&s(a), &s_bar(b)).unwrap(), 0.0);
                if a != b {
                    assert_eq!(bivector_inner(&s(a), &s(b)).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let a = s(0).at(Point4::origin());
        let b = s(0).at(Point4::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(bivector_inner(&a, &b), Err(Error::MismatchedBase));
    }

    #[test]
    fn hodge_star_on_basis() {
        assert_eq!(hodge_star(&Bivector::e(0, 1)), Bivector::e(2, 3));
        assert_eq!(hodge_star(&Bivector::e(0, 3)), Bivector::e(1, 2).scale(-1.0));
        for a in 0..3 {
            assert_eq!(hodge_star(&s(a)), s(a).scale(-1.0));
            assert_eq!(hodge_star(&s_bar(a)), s_bar(a));
        }
    }

    #[test]
    fn s1_components_in_storage_order() {
        assert_eq!(s(0).c.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn endomorphisms_of_s_frame() {
        let [k1, k2, k3] = s_endos();
        let expected_k1 = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0,
        );
        assert_eq!(k1, expected_k1);
        let expected_k2 = Matrix4::new(
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, -1.0, 0.0, 0.0,
        );
        assert_eq!(k2, expected_k2);
        let expected_k3 = Matrix4::new(
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0,
        );
        assert_eq!(k3, expected_k3);
        assert_eq!(k1 * k1, -Matrix4::identity());
        assert_eq!(k2 * k2, Matrix4::identity());
        assert_eq!(k3 * k3, Matrix4::identity());
        assert_eq!(k1 * k2, k3);
        assert_eq!(fiber_endo(&FiberVector3::new(1.0, 0.0, 0.0)), k1);
    }

    #[test]
    fn endo_round_trip() {
        let b = Bivector::new([0.3, -1.2, 0.7, 2.0, -0.4, 1.1]);
        assert_eq!(bivector_from_endo(&endo_from_bivector(&b)), b);
    }

    #[test]
    fn fiber_inner_matches_endo_inner() {
        let k = s_endos();
        for a in 0..3 {
            assert_eq!(endo_inner(&k[a], &k[a]), FIBER_SIGNS[a]);
        }
    }

    #[test]
    fn cross_products_of_frame() {
        let e = |a: usize| FiberVector3::from_fn(|i, _| if i == a { 1.0 } else { 0.0 });
        assert_eq!(fiber_cross_product(&e(0), &e(1)), e(2));
        assert_eq!(fiber_cross_product(&e(0), &e(2)), -e(1));
        assert_eq!(fiber_cross_product(&e(1), &e(2)), -e(0));
    }

    #[test]
    fn cross_product_is_half_commutator() {
        let y = FiberVector3::new(1.3, 0.4, -0.2);
        let v = FiberVector3::new(-0.5, 2.0, 0.9);
        let (ky, kv) = (fiber_endo(&y), fiber_endo(&v));
        let expected = fiber_components(&((ky * kv - kv * ky) * 0.5));
        let got = fiber_cross_product(&y, &v);
        assert!((expected - got).norm() < 1e-14);
    }

    #[test]
    fn flat_curvature_operator_vanishes() {
        let spec = MetricSpec::parse(
            "flat",
            [
                ["1", "0", "0", "0"],
                ["", "1", "0", "0"],
                ["", "", "-1", "0"],
                ["", "", "", "-1"],
            ],
            crate::geometry::ChartBounds::cube(1.0),
        )
        .unwrap();
        let op = curvature_operator(&spec, &Point4::new(0.1, 0.2, 0.3, 0.4)).unwrap();
        assert_eq!(op.matrix.norm(), 0.0);
        assert!(close(op.tau(), 0.0, 0.0));
    }

    #[test]
    fn curvature_action_pairs_with_operator() {
        let spec = crate::builtin::perturbed_non_self_dual().unwrap();
        let op = curvature_operator(&spec, &Point4::new(0.2, -0.3, 0.1, 0.4)).unwrap();
        let a = Bivector::new([0.3, -1.2, 0.7, 2.0, -0.4, 1.1]);
        let b = FiberVector3::new(0.4, -0.7, 1.3);
        let c = FiberVector3::new(-1.1, 0.2, 0.5);
        let lhs = -fiber_inner(&op.curvature_action(&a, &b), &c);
        let rhs = -bivector_inner(&op.apply(&fiber_bivector(&fiber_cross_product(&b, &c))), &a).unwrap();
        assert!(close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn cross_product_wedge_identity() {
        let y = FiberVector3::new(1.5, 0.8, -0.7);
        let y = y / fiber_inner(&y, &y).abs().sqrt();
        let v = FiberVector3::new(0.0, 0.7, 0.8);
        let v = v - y * (fiber_inner(&y, &v) / fiber_inner(&y, &y));
        let x = Vector4::new(0.3, -1.0, 0.4, 0.9);
        let w = Vector4::new(-0.6, 0.2, 1.1, 0.5);
        let ky = fiber_endo(&y);
        let lhs = bivector_inner(&fiber_bivector(&fiber_cross_product(&y, &v)), &wedge(&x, &w)).unwrap();
        let rhs = -bivector_inner(&fiber_bivector(&v), &wedge(&x, &(ky * w))).unwrap();
        assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }
}
