use nalgebra::Matrix4;
use twistor_core::builtin;
use twistor_core::expr::ScalarField;
use twistor_core::geometry::{
    christoffel_at, curvature_summary, endo_covariant_derivative, metric_at, riemann_at, MetricSpec, Point4,
    PointGeometry, TangentVector4,
};
use twistor_core::petean::PeteanSpec;
use twistor_core::sampling::{sample_points, Sampler};

const H: f64 = 1e-4;

fn builtins() -> Vec<MetricSpec> {
    vec![
        builtin::flat().unwrap(),
        builtin::constant_curvature(1.0).unwrap(),
        builtin::constant_curvature(-0.5).unwrap(),
        builtin::perturbed_non_self_dual().unwrap(),
        PeteanSpec::parse("1+x1^2+x2^2").unwrap().metric().clone(),
    ]
}

fn g(spec: &MetricSpec, p: &Point4) -> Matrix4<f64> {
    metric_at(spec, p).unwrap().g
}

/// `∂_m g` by Richardson-extrapolated central differences.
fn dg(spec: &MetricSpec, p: &Point4, m: usize) -> Matrix4<f64> {
    let central = |h: f64| (g(spec, &p.shifted(m, h)) - g(spec, &p.shifted(m, -h))) / (2.0 * h);
    (central(H / 2.0) * 4.0 - central(H)) / 3.0
}

#[test]
fn christoffel_symbols_match_finite_differences() {
    let spec = PeteanSpec::parse("1+x1^2").unwrap().metric().clone();
    for p in sample_points(&spec.bounds, 30, 11).unwrap() {
        let gamma = christoffel_at(&spec, &p).unwrap();
        let inv = metric_at(&spec, &p).unwrap().inverse;
        let d: Vec<_> = (0..4).map(|m| dg(&spec, &p, m)).collect();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let fd: f64 = 0.5
                        * (0..4)
                            .map(|l| inv[(k, l)] * (d[i][(l, j)] + d[j][(l, i)] - d[l][(i, j)]))
                            .sum::<f64>();
                    assert!(
                        (gamma[k][i][j] - fd).abs() <= 1e-6,
                        "Γ^{k}_{i}{j}: {} vs {fd}",
                        gamma[k][i][j]
                    );
                }
            }
        }
    }
}

#[test]
fn first_bianchi_identity() {
    let mut s = Sampler::new(12);
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 50, 13).unwrap() {
            let r = riemann_at(&spec, &p).unwrap();
            let (x, y, z) = (s.vector(), s.vector(), s.vector());
            let sum = r.apply(&x, &y, &z) + r.apply(&y, &z, &x) + r.apply(&z, &x, &y);
            let scale = 1.0 + r.apply(&x, &y, &z).norm();
            assert!(sum.norm() <= 1e-8 * scale, "{}: {}", spec.name, sum.norm());
        }
    }
}

#[test]
fn riemann_is_antisymmetric_in_first_pair() {
    let mut s = Sampler::new(14);
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 20, 15).unwrap() {
            let r = riemann_at(&spec, &p).unwrap();
            let (x, y) = (s.vector(), s.vector());
            let sum = r.endomorphism(&x, &y) + r.endomorphism(&y, &x);
            assert!(sum.amax() <= 1e-14 * (1.0 + r.endomorphism(&x, &y).amax()));
        }
    }
}

#[test]
fn connection_is_metric_compatible() {
    let mut s = Sampler::new(16);
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 20, 17).unwrap() {
            let geom = PointGeometry::at(&spec, &p).unwrap();
            let (x, y, z) = (s.vector(), s.vector(), s.vector());
            let gyz = |q: &Point4| (y.transpose() * g(&spec, q) * z)[(0, 0)];
            let central = |h: f64| (gyz(&p.offset(&x, h)) - gyz(&p.offset(&x, -h))) / (2.0 * h);
            let fd = (central(H / 2.0) * 4.0 - central(H)) / 3.0;
            let exact = geom.inner(&geom.covariant_derivative_const(&x, &y), &z)
                + geom.inner(&y, &geom.covariant_derivative_const(&x, &z));
            assert!((fd - exact).abs() <= 1e-6, "{}: {fd} vs {exact}", spec.name);
        }
    }
}

#[test]
fn scalar_curvature_is_linear_in_kappa() {
    let p = Point4::new(0.1, -0.2, 0.15, 0.05);
    for kappa in [-1.0, 0.5, 1.0, 2.0] {
        let spec = builtin::constant_curvature(kappa).unwrap();
        let tau = curvature_summary(&spec, &p).unwrap().tau;
        assert!((tau / kappa - 12.0).abs() <= 1e-5 * 12.0, "κ = {kappa}: τ = {tau}");
    }
}

#[test]
fn endomorphism_derivative_matches_finite_differences() {
    let spec = PeteanSpec::parse("1+x1^2+x2^2").unwrap().metric().clone();
    let texts = [
        ["x1*x2", "1 + x3^2", "0", "x4"],
        ["x2 - x3", "x1^3", "2*x4", "1"],
        ["0", "x1*x4", "x2^2 - x3", "x3"],
        ["x1 + x2 + x3", "0", "x4^2", "x1*x2*x3"],
    ];
    let fields: [[ScalarField; 4]; 4] = texts.map(|row| row.map(|t| ScalarField::parse(t).unwrap()));
    let value = |q: &Point4| Matrix4::from_fn(|a, b| fields[a][b].eval(&q.0).unwrap());
    let mut s = Sampler::new(18);
    for p in sample_points(&spec.bounds, 20, 19).unwrap() {
        let x: TangentVector4 = s.vector();
        let exact = endo_covariant_derivative(&spec, &fields, &x, &p).unwrap();
        let geom = PointGeometry::at(&spec, &p).unwrap();
        let gamma = (0..4).fold(Matrix4::zeros(), |acc, i| acc + geom.connection_matrix(i) * x[i]);
        let j = value(&p);
        let central = |h: f64| (value(&p.offset(&x, h)) - value(&p.offset(&x, -h))) / (2.0 * h);
        let fd = (central(H / 2.0) * 4.0 - central(H)) / 3.0 + gamma * j - j * gamma;
        assert!((exact - fd).amax() <= 1e-6, "{}", (exact - fd).amax());
    }
}
