//! Almost quaternionic structures of the second kind `(J1, J2, J3)` on a
//! neutral four-manifold: compatibility checks, connection 1-forms,
//! curvature 2-forms and the hyperhermitian / hyperkähler criteria.
//!
//! Conventions: `J1² = -1`, `J2² = J3² = 1`, `J3 = J1 J2`, and
//!
//! ```text
//! D_X J1 =            -γ(X) J2 - β(X) J3
//! D_X J2 = -γ(X) J1            - α(X) J3
//! D_X J3 = -β(X) J1 + α(X) J2
//! ```
//!
//! With the fiber metric `⟨A, B⟩ = ¼ tr(AB)` the forms are recovered as
//! `α = -⟨D J2, J3⟩`, `β = -⟨D J1, J3⟩`, `γ = -⟨D J1, J2⟩`.

use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};

use crate::bivector::{endo_inner, s_endos};
use crate::error::{Error, Result};
use crate::expr::{self, Expr, ScalarField};
use crate::geometry::{EndoJet, FrameJet, MetricSpec, Point4, PointGeometry, SIGNATURE};
use crate::report::Check;
use crate::sampling::sample_points;

/// Coordinate matrix of an endomorphism field: `field[row][col]`.
pub type EndoField = [[ScalarField; 4]; 4];

/// Residual below which a quantity counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-7;
/// Residual above which a quantity counts as certainly nonzero.
pub const NONZERO_THRESHOLD: f64 = 1e-4;

/// Values of `y2, y3` on the sampled grid of the upper hyperboloid sheet.
pub const Y_GRID: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

#[derive(Debug, Clone)]
pub enum HyperTriple {
    /// Explicit coordinate matrices of `J1, J2, J3`.
    Explicit(Box<[EndoField; 3]>),
    /// `K_{s1}, K_{s2}, K_{s3}` over the Gram–Schmidt frame of the metric.
    Asd,
}

fn const_expr(v: f64) -> Arc<Expr> {
    expr::constant(v)
}

fn field_from_fn(f: impl Fn(usize, usize) -> Arc<Expr>) -> EndoField {
    std::array::from_fn(|r| std::array::from_fn(|c| ScalarField::new(f(r, c), 4)))
}

impl HyperTriple {
    pub fn explicit(fields: [EndoField; 3]) -> Self {
        HyperTriple::Explicit(Box::new(fields))
    }

    /// Constant coordinate matrices.
    pub fn constant(m: &[Matrix4<f64>; 3]) -> Self {
        Self::explicit(std::array::from_fn(|a| field_from_fn(|r, c| const_expr(m[a][(r, c)]))))
    }

    /// Parses three row-major 4×4 blocks of expressions in `x1..x4`.
    pub fn parse(texts: &[[[&str; 4]; 4]; 3]) -> Result<Self> {
        let mut out: Vec<EndoField> = Vec::with_capacity(3);
        for block in texts {
            let mut rows: Vec<[ScalarField; 4]> = Vec::with_capacity(4);
            for row in block {
                let mut cols = Vec::with_capacity(4);
                for text in row {
                    cols.push(ScalarField::parse(text)?);
                }
                rows.push(cols.try_into().expect("four columns"));
            }
            out.push(rows.try_into().expect("four rows"));
        }
        Ok(Self::explicit(out.try_into().expect("three blocks")))
    }

    /// `J_a = E K_{s_a} η Eᵀ g` for a symbolic oriented orthonormal frame
    /// whose columns are `e[·][a]`.
    pub fn from_frame(spec: &MetricSpec, e: &[[Arc<Expr>; 4]; 4]) -> Self {
        let k = s_endos();
        let fields = std::array::from_fn(|a| {
            let k_eta = Matrix4::from_fn(|r, c| k[a][(r, c)] * SIGNATURE[c]);
            // (Eᵀ g)[b][c] = Σ_m e[m][b] g[m][c]
            let et_g: Vec<Vec<Arc<Expr>>> = (0..4)
                .map(|b| {
                    (0..4)
                        .map(|c| {
                            (0..4).fold(const_expr(0.0), |acc, m| {
                                expr::add(acc, expr::mul(e[m][b].clone(), spec.component(m, c).expr().clone()))
                            })
                        })
                        .collect()
                })
                .collect();
            field_from_fn(|r, c| {
                let mut acc = const_expr(0.0);
                for i in 0..4 {
                    for b in 0..4 {
                        let coeff = k_eta[(i, b)];
                        if coeff != 0.0 {
                            let term = expr::mul(e[r][i].clone(), et_g[b][c].clone());
                            acc = expr::add(acc, expr::mul(const_expr(coeff), term));
                        }
                    }
                }
                acc
            })
        });
        Self::explicit(fields)
    }

    /// `(J1, cos θ J2 - sin θ J3, cos θ J3 + sin θ J2)`; for a parallel
    /// triple this has `α = dθ` and `β = γ = 0`.
    pub fn rotated(&self, theta: &ScalarField) -> Result<Self> {
        let HyperTriple::Explicit(j) = self else {
            return Err(Error::InvalidParameter("rotation needs an explicit triple".to_string()));
        };
        let cos = expr::call(expr::Func::Cos, theta.expr().clone());
        let sin = expr::call(expr::Func::Sin, theta.expr().clone());
        let combine = |p: &EndoField, cp: &Arc<Expr>, q: &EndoField, cq: &Arc<Expr>| {
            field_from_fn(|r, c| {
                expr::add(
                    expr::mul(cp.clone(), p[r][c].expr().clone()),
                    expr::mul(cq.clone(), q[r][c].expr().clone()),
                )
            })
        };
        let j2 = combine(&j[1], &cos, &j[2], &expr::neg(sin.clone()));
        let j3 = combine(&j[2], &cos, &j[1], &sin);
        Ok(Self::explicit([j[0].clone(), j2, j3]))
    }

    /// Exact second-order jets of the three endomorphism fields at `p`.
    pub fn jets(&self, spec: &MetricSpec, p: &Point4) -> Result<[EndoJet; 3]> {
        match self {
            HyperTriple::Explicit(j) => Ok([
                EndoJet::from_fields(&j[0], p)?,
                EndoJet::from_fields(&j[1], p)?,
                EndoJet::from_fields(&j[2], p)?,
            ]),
            HyperTriple::Asd => {
                let frame = FrameJet::at(spec, p, None)?;
                let k = s_endos();
                Ok(std::array::from_fn(|a| EndoJet::from_jets(&frame.endomorphism(&k[a]))))
            }
        }
    }
}

/// Maximal algebraic residuals of a triple over the samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripleResiduals {
    pub j1_square: f64,
    pub j2_square: f64,
    pub j3_square: f64,
    pub anticommutator: f64,
    pub product: f64,
    pub j1_isometry: f64,
    pub j2_anti_isometry: f64,
    pub j3_anti_isometry: f64,
    /// Failure of `Ω_a(X, Y) = g(X, J_a Y)` to be skew, for `a = 1, 2, 3`.
    pub omega_skew: [f64; 3],
    pub samples: usize,
}

impl TripleResiduals {
    pub fn max(&self) -> f64 {
        [
            self.j1_square,
            self.j2_square,
            self.j3_square,
            self.anticommutator,
            self.product,
            self.j1_isometry,
            self.j2_anti_isometry,
            self.j3_anti_isometry,
        ]
        .into_iter()
        .chain(self.omega_skew)
        .fold(0.0, f64::max)
    }

    fn absorb(&mut self, g: &Matrix4<f64>, j: &[Matrix4<f64>; 3]) {
        let id = Matrix4::identity();
        let upd = |slot: &mut f64, v: f64| *slot = slot.max(v);
        upd(&mut self.j1_square, (j[0] * j[0] + id).norm());
        upd(&mut self.j2_square, (j[1] * j[1] - id).norm());
        upd(&mut self.j3_square, (j[2] * j[2] - id).norm());
        upd(&mut self.anticommutator, (j[0] * j[1] + j[1] * j[0]).norm());
        upd(&mut self.product, (j[2] - j[0] * j[1]).norm());
        upd(&mut self.j1_isometry, (j[0].transpose() * g * j[0] - g).norm());
        upd(&mut self.j2_anti_isometry, (j[1].transpose() * g * j[1] + g).norm());
        upd(&mut self.j3_anti_isometry, (j[2].transpose() * g * j[2] + g).norm());
        for a in 0..3 {
            let omega = g * j[a];
            upd(&mut self.omega_skew[a], (omega + omega.transpose()).norm());
        }
    }
}

pub fn verify_triple(spec: &MetricSpec, triple: &HyperTriple, samples: usize, seed: u64) -> Result<TripleResiduals> {
    let mut out = TripleResiduals {
        samples,
        ..Default::default()
    };
    for p in sample_points(&spec.bounds, samples, seed)? {
        let geom = PointGeometry::at(spec, &p)?;
        let jets = triple.jets(spec, &p)?;
        out.absorb(geom.g(), &jets.map(|j| j.value));
    }
    Ok(out)
}

/// Coordinate components `α_i = α(∂_i)` etc. at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionForms {
    pub alpha: Vector4<f64>,
    pub beta: Vector4<f64>,
    pub gamma: Vector4<f64>,
    /// Largest Frobenius norm of `D_{∂_i} J_a` minus its reconstruction.
    pub reconstruction_residual: f64,
}

impl ConnectionForms {
    pub fn max_abs(&self) -> f64 {
        self.alpha.amax().max(self.beta.amax()).max(self.gamma.amax())
    }
}

/// Coordinate components `A_ij = A(∂_i, ∂_j)` of the curvature 2-forms
/// `A = 2(dα - β∧γ)`, `B = 2(dβ - α∧γ)`, `C = 2(dγ + α∧β)`, where a 2-form
/// is evaluated as `(θ∧φ)(X, Y) = ½(θ(X)φ(Y) - θ(Y)φ(X))` and
/// `dθ(X, Y) = ½(Xθ(Y) - Yθ(X) - θ([X, Y]))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureForms {
    pub a: Matrix4<f64>,
    pub b: Matrix4<f64>,
    pub c: Matrix4<f64>,
    /// Largest Frobenius norm of `R(∂_i, ∂_j) J_a` minus its expression
    /// through `A, B, C`.
    pub action_residual: f64,
}

impl CurvatureForms {
    pub fn max_abs(&self) -> f64 {
        self.a.amax().max(self.b.amax()).max(self.c.amax())
    }
}

struct PointData {
    geom: PointGeometry,
    jets: [EndoJet; 3],
    /// `D_{∂_i} J_a`, indexed `[a][i]`.
    dj: [[Matrix4<f64>; 4]; 3],
}

impl PointData {
    fn at(spec: &MetricSpec, triple: &HyperTriple, p: &Point4) -> Result<Self> {
        let geom = PointGeometry::at(spec, p)?;
        let jets = triple.jets(spec, p)?;
        let dj = std::array::from_fn(|a| std::array::from_fn(|i| geom.endo_derivative(&jets[a], i)));
        Ok(PointData { geom, jets, dj })
    }

    fn j(&self, a: usize) -> Matrix4<f64> {
        self.jets[a].value
    }

    fn forms(&self) -> ConnectionForms {
        let (j1, j2, j3) = (self.j(0), self.j(1), self.j(2));
        let alpha = Vector4::from_fn(|i, _| -endo_inner(&self.dj[1][i], &j3));
        let beta = Vector4::from_fn(|i, _| -endo_inner(&self.dj[0][i], &j3));
        let gamma = Vector4::from_fn(|i, _| -endo_inner(&self.dj[0][i], &j2));
        let mut residual = 0.0f64;
        for i in 0..4 {
            let expected = [
                -j2 * gamma[i] - j3 * beta[i],
                -j1 * gamma[i] - j3 * alpha[i],
                -j1 * beta[i] + j2 * alpha[i],
            ];
            for a in 0..3 {
                residual = residual.max((self.dj[a][i] - expected[a]).norm());
            }
        }
        ConnectionForms {
            alpha,
            beta,
            gamma,
            reconstruction_residual: residual,
        }
    }

    /// `∂_m` of the connection-form component `-⟨D_{∂_i} J_a, J_b⟩`.
    fn form_partial(&self, a: usize, b: usize, i: usize, m: usize) -> f64 {
        let ddj = self.geom.endo_derivative_partial(&self.jets[a], i, m);
        -(endo_inner(&ddj, &self.j(b)) + endo_inner(&self.dj[a][i], &self.jets[b].d[m]))
    }

    fn curvature(&self, forms: &ConnectionForms) -> CurvatureForms {
        let d =
            |a: usize, b: usize| Matrix4::from_fn(|i, j| self.form_partial(a, b, j, i) - self.form_partial(a, b, i, j));
        let wedge = |u: &Vector4<f64>, v: &Vector4<f64>| u * v.transpose() - v * u.transpose();
        let (al, be, ga) = (&forms.alpha, &forms.beta, &forms.gamma);
        let a = d(1, 2) - wedge(be, ga);
        let b = d(0, 2) - wedge(al, ga);
        let c = d(0, 1) + wedge(al, be);
        let (j1, j2, j3) = (self.j(0), self.j(1), self.j(2));
        let mut residual = 0.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let r = self.geom.riemann.endomorphism(&unit(i), &unit(j));
                let expected = [
                    -j2 * c[(i, j)] - j3 * b[(i, j)],
                    -j1 * c[(i, j)] - j3 * a[(i, j)],
                    -j1 * b[(i, j)] + j2 * a[(i, j)],
                ];
                for k in 0..3 {
                    let action = r * self.j(k) - self.j(k) * r;
                    residual = residual.max((action - expected[k]).norm());
                }
            }
        }
        CurvatureForms {
            a,
            b,
            c,
            action_residual: residual,
        }
    }

    /// Largest deviation from `D_{J_y X} J_y = sign · J_y D_X J_y` over
    /// coordinate directions and the `y`-grid.
    fn y_grid_residual(&self, sign: f64) -> f64 {
        let mut worst = 0.0f64;
        for &y2 in &Y_GRID {
            for &y3 in &Y_GRID {
                let y = [(1.0 + y2 * y2 + y3 * y3).sqrt(), y2, y3];
                let jy = (0..3).fold(Matrix4::zeros(), |acc, a| acc + self.j(a) * y[a]);
                let djy: [Matrix4<f64>; 4] =
                    std::array::from_fn(|i| (0..3).fold(Matrix4::zeros(), |acc, a| acc + self.dj[a][i] * y[a]));
                for k in 0..4 {
                    let along = (0..4).fold(Matrix4::zeros(), |acc, i| acc + djy[i] * jy[(i, k)]);
                    worst = worst.max((along - jy * djy[k] * sign).norm());
                }
            }
        }
        worst
    }
}

fn unit(i: usize) -> Vector4<f64> {
    Vector4::from_fn(|k, _| if k == i { 1.0 } else { 0.0 })
}

pub fn connection_forms(spec: &MetricSpec, triple: &HyperTriple, p: &Point4) -> Result<ConnectionForms> {
    Ok(PointData::at(spec, triple, p)?.forms())
}

pub fn curvature_forms(spec: &MetricSpec, triple: &HyperTriple, p: &Point4) -> Result<CurvatureForms> {
    let data = PointData::at(spec, triple, p)?;
    let forms = data.forms();
    Ok(data.curvature(&forms))
}

/// Residual of the integrability criterion for the whole family `J_y`:
/// `α = -γ∘J2`, `α = -β∘J3` and `β = -γ∘J1` as covectors.
fn integrability_criterion(forms: &ConnectionForms, j: &[Matrix4<f64>; 3]) -> f64 {
    // (θ∘J)_i = θ(J ∂_i) = Σ_k θ_k J_{ki}
    let compose = |theta: &Vector4<f64>, m: &Matrix4<f64>| m.transpose() * theta;
    let r1 = forms.alpha + compose(&forms.gamma, &j[1]);
    let r2 = forms.alpha + compose(&forms.beta, &j[2]);
    let r3 = forms.beta + compose(&forms.gamma, &j[0]);
    r1.amax().max(r2.amax()).max(r3.amax())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub samples: usize,
    /// Integrability criterion in terms of `α, β, γ`.
    pub integrable_residual: f64,
    /// `max(|α|, |β|, |γ|)`.
    pub hyperkahler_residual: f64,
    /// `D_{J_y X} J_y - J_y D_X J_y` over the `y`-grid.
    pub holomorphic_residual: f64,
    /// `D_{J_y X} J_y + J_y D_X J_y` over the `y`-grid.
    pub antiholomorphic_residual: f64,
    pub reconstruction_residual: f64,
    pub tolerance: f64,
}

impl StructureReport {
    pub fn integrable_all_jy(&self) -> bool {
        self.integrable_residual <= self.tolerance
    }

    pub fn hyperkahler(&self) -> bool {
        self.hyperkahler_residual <= self.tolerance
    }

    pub fn p_holomorphic_j1(&self) -> bool {
        self.holomorphic_residual <= self.tolerance
    }

    pub fn p_antiholomorphic_j2(&self) -> bool {
        self.antiholomorphic_residual <= self.tolerance
    }

    /// The form criterion and the `y`-grid check classify alike: both zero
    /// or both clearly nonzero.
    pub fn consistent(&self) -> bool {
        let agree = |a: f64, b: f64| {
            (a <= self.tolerance && b <= self.tolerance) || (a > NONZERO_THRESHOLD && b > NONZERO_THRESHOLD)
        };
        agree(self.integrable_residual, self.holomorphic_residual)
            && agree(self.hyperkahler_residual, self.antiholomorphic_residual)
    }

    pub fn checks(&self) -> Vec<Check> {
        let n = self.samples;
        vec![
            Check::at_most(
                "connection_form_reconstruction",
                self.reconstruction_residual,
                self.tolerance,
                "D J_a expressed through alpha, beta, gamma",
                n,
            ),
            Check::expect(
                "integrable_all_Jy_consistent",
                self.consistent(),
                "J_y integrable for all y iff p is J1-holomorphic",
                n,
            ),
        ]
    }
}

pub fn structure_tests(spec: &MetricSpec, triple: &HyperTriple, samples: usize, seed: u64) -> Result<StructureReport> {
    let mut out = StructureReport {
        samples,
        integrable_residual: 0.0,
        hyperkahler_residual: 0.0,
        holomorphic_residual: 0.0,
        antiholomorphic_residual: 0.0,
        reconstruction_residual: 0.0,
        tolerance: ZERO_TOLERANCE,
    };
    for p in sample_points(&spec.bounds, samples, seed)? {
        let data = PointData::at(spec, triple, &p)?;
        let forms = data.forms();
        let j = [data.j(0), data.j(1), data.j(2)];
        out.integrable_residual = out.integrable_residual.max(integrability_criterion(&forms, &j));
        out.hyperkahler_residual = out.hyperkahler_residual.max(forms.max_abs());
        out.reconstruction_residual = out.reconstruction_residual.max(forms.reconstruction_residual);
        out.holomorphic_residual = out.holomorphic_residual.max(data.y_grid_residual(1.0));
        out.antiholomorphic_residual = out.antiholomorphic_residual.max(data.y_grid_residual(-1.0));
    }
    Ok(out)
}
