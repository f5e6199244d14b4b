use nalgebra::{Matrix4, Matrix6};
use twistor_core::bivector::{curvature_operator, fiber_cross_product, hodge_star, s_endos, Bivector};
use twistor_core::builtin;
use twistor_core::geometry::{EndoJet, FrameJet, MetricSpec, Point4, PointGeometry};
use twistor_core::petean::PeteanSpec;
use twistor_core::sampling::{sample_points, Sampler};
use twistor_core::twistor::{CoordinateOracle, Structure, TwistorContext, TwistorTangent};

fn builtins() -> Vec<MetricSpec> {
    vec![
        builtin::flat().unwrap(),
        builtin::constant_curvature(1.0).unwrap(),
        builtin::constant_curvature(-1.0).unwrap(),
        builtin::perturbed_non_self_dual().unwrap(),
        PeteanSpec::parse("1+x1^2+x2^2").unwrap().metric().clone(),
    ]
}

fn tangent(s: &mut Sampler, y: &nalgebra::Vector3<f64>) -> TwistorTangent {
    TwistorTangent::new(s.vector(), s.fiber_tangent(y))
}

#[test]
fn cross_product_pairing_identity() {
    let mut s = Sampler::new(21);
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 50, 22).unwrap() {
            let ctx = TwistorContext::at(&spec, &p).unwrap();
            let y = s.fiber();
            let v = s.fiber_tangent(&y);
            let (x, w) = (s.vector(), s.vector());
            let lhs = ctx.pair(&fiber_cross_product(&y, &v), &x, &w);
            let rhs = -ctx.pair(&v, &x, &(ctx.k_sigma(&y) * w));
            assert!(
                (lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()),
                "{}: {lhs} vs {rhs}",
                spec.name
            );
        }
    }
}

#[test]
fn k_sigma_is_complex_on_the_fiber() {
    let mut s = Sampler::new(23);
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 20, 24).unwrap() {
            let ctx = TwistorContext::at(&spec, &p).unwrap();
            let k = ctx.k_sigma(&s.fiber());
            assert!((k * k + Matrix4::identity()).amax() <= 1e-9 * (1.0 + k.amax().powi(2)));
        }
    }
}

#[test]
fn hodge_star_splits_into_equal_eigenspaces() {
    let star = Matrix6::from_fn(|i, j| hodge_star(&Bivector::basis(j)).c[i]);
    assert!((star * star - Matrix6::identity()).amax() <= 1e-12);
    assert!(star.trace().abs() <= 1e-12);
}

#[test]
fn curvature_decomposition_reassembles() {
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 20, 25).unwrap() {
            let op = curvature_operator(&spec, &p).unwrap();
            assert!((op.reassemble() - op.matrix).amax() <= 1e-10 * (1.0 + op.matrix.amax()));
        }
    }
}

#[test]
fn almost_complex_structures_are_hermitian() {
    let mut s = Sampler::new(26);
    for spec in builtins() {
        for p in sample_points(&spec.bounds, 20, 27).unwrap() {
            let ctx = TwistorContext::at(&spec, &p).unwrap();
            let y = s.fiber();
            let (a, b) = (tangent(&mut s, &y), tangent(&mut s, &y));
            let t = s.uniform(0.3, 3.0);
            for k in [Structure::J1, Structure::J2] {
                let ja = ctx.acs_apply(k, &y, &a);
                let jja = ctx.acs_apply(k, &y, &ja);
                assert!(jja.add(&a).norm() <= 1e-10 * (1.0 + a.norm() * y.norm().powi(2)));
                let jb = ctx.acs_apply(k, &y, &b);
                let lhs = ctx.ht_inner(t, &ja, &jb).unwrap();
                let rhs = ctx.ht_inner(t, &a, &b).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs() + rhs.abs()));
            }
        }
    }
}

#[test]
fn formulas_agree_with_oracles_on_every_builtin() {
    for (n, spec) in builtins().iter().enumerate() {
        let mut s = Sampler::new(28 + n as u64);
        for (i, p) in sample_points(&spec.bounds, 50, 29).unwrap().iter().enumerate() {
            let k = if i % 2 == 0 { Structure::J1 } else { Structure::J2 };
            let t = [1.0, -0.5, 2.0][i % 3];
            let ctx = TwistorContext::at(spec, p).unwrap();
            let y = s.fiber();
            let (a, b, c) = (tangent(&mut s, &y), tangent(&mut s, &y), tangent(&mut s, &y));
            let oracle = CoordinateOracle::new(spec, ctx.plan().clone(), k, t).unwrap();
            let (n_oracle, d_oracle) = oracle.evaluate(&ctx, &y, &a, &b, &c).unwrap();
            let n_err = ctx.nijenhuis(k, &y, &a, &b).sub(&n_oracle).norm();
            let d_err = (ctx.d_omega(k, t, &a, &b, &c).unwrap() - d_oracle).abs();
            assert!(
                n_err <= 1e-6 && d_err <= 1e-6,
                "{}: N {n_err:e}, dΩ {d_err:e}",
                spec.name
            );
        }
    }
}

#[test]
fn co_differential_vanishes_iff_self_dual() {
    let mut s = Sampler::new(30);
    for spec in builtins() {
        let (mut delta, mut w_minus) = (0.0f64, 0.0f64);
        for p in sample_points(&spec.bounds, 30, 31).unwrap() {
            let ctx = TwistorContext::at(&spec, &p).unwrap();
            let y = s.fiber();
            delta = delta.max(ctx.delta_omega(1.5, &y, &tangent(&mut s, &y)).unwrap().abs());
            w_minus = w_minus.max(ctx.curvature.w_minus_norm());
        }
        assert_eq!(
            delta <= 1e-8,
            w_minus <= 1e-8,
            "{}: δΩ {delta:e}, W- {w_minus:e}",
            spec.name
        );
    }
}

#[test]
fn horizontal_lift_is_parallel_transport() {
    let spec = builtin::constant_curvature(1.0).unwrap();
    let p = Point4::new(0.21, -0.13, 0.17, 0.08);
    let ctx = TwistorContext::at(&spec, &p).unwrap();
    let geom = PointGeometry::at(&spec, &p).unwrap();
    let k = s_endos();
    let frame_endos = |q: &Point4| -> [Matrix4<f64>; 3] {
        let jets = FrameJet::at(&spec, q, Some(ctx.plan())).unwrap();
        std::array::from_fn(|a| EndoJet::from_jets(&jets.endomorphism(&k[a])).value)
    };
    let mut s = Sampler::new(32);
    for _ in 0..10 {
        let y = s.fiber();
        let x = s.vector();
        let ydot = ctx.lift_velocity(&y, &x);
        let sigma = |h: f64| -> Matrix4<f64> {
            let j = frame_endos(&p.offset(&x, h));
            (0..3).fold(Matrix4::zeros(), |acc, a| acc + j[a] * (y[a] + h * ydot[a]))
        };
        let central = |h: f64| (sigma(h) - sigma(-h)) / (2.0 * h);
        let derivative = (central(5e-5) * 4.0 - central(1e-4)) / 3.0;
        let gamma = (0..4).fold(Matrix4::zeros(), |acc, i| acc + geom.connection_matrix(i) * x[i]);
        let s0 = sigma(0.0);
        let transported = derivative + gamma * s0 - s0 * gamma;
        assert!(transported.amax() <= 1e-6, "{}", transported.amax());
    }
}
