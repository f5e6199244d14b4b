//! Second-order Taylor jets in the four chart coordinates.
//!
//! A [`Jet`] carries a value, its gradient and its Hessian at a point.
//! Arithmetic propagates all three exactly (up to rounding), which is how
//! frame-derived quantities such as Gram–Schmidt frames get their
//! derivatives without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::expr::{ExprError, ScalarField};

pub const N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; N],
    pub h: [[f64; N]; N],
}

impl Jet {
    pub const ZERO: Jet = Jet {
        v: 0.0,
        d: [0.0; N],
        h: [[0.0; N]; N],
    };

    pub fn constant(v: f64) -> Jet {
        Jet { v, ..Jet::ZERO }
    }

    /// Jet of a scalar field from its exact symbolic partials.
    pub fn of_field(field: &ScalarField, p: &[f64; N]) -> Result<Jet, ExprError> {
        let mut jet = Jet::constant(field.eval(p)?);
        if field.is_zero() {
            return Ok(jet);
        }
        for i in 0..N {
            let di = field.partial(i);
            jet.d[i] = di.eval(p)?;
            if di.is_zero() {
                continue;
            }
            for j in i..N {
                let v = di.partial(j).eval(p)?;
                jet.h[i][j] = v;
                jet.h[j][i] = v;
            }
        }
        Ok(jet)
    }

    pub fn scale(self, c: f64) -> Jet {
        let mut out = self;
        out.v *= c;
        for i in 0..N {
            out.d[i] *= c;
            for j in 0..N {
                out.h[i][j] *= c;
            }
        }
        out
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.v`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Jet {
        let mut out = Jet::constant(f0);
        for i in 0..N {
            out.d[i] = f1 * self.d[i];
            for j in 0..N {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.d[i] * self.d[j];
            }
        }
        out
    }

    pub fn sqrt(self) -> Jet {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for i in 0..N {
            out.d[i] += o.d[i];
            for j in 0..N {
                out.h[i][j] += o.h[i][j];
            }
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..N {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..N {
                out.h[i][j] = self.h[i][j] * o.v + self.v * o.h[i][j] + self.d[i] * o.d[j] + self.d[j] * o.d[i];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

/// 4×4 matrix of jets, row-major.
pub type JetMat = [[Jet; N]; N];

pub fn jet_mat_mul(a: &JetMat, b: &JetMat) -> JetMat {
    let mut out = [[Jet::ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            let mut acc = Jet::ZERO;
            for k in 0..N {
                acc = acc + a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn jet_mat_transpose(a: &JetMat) -> JetMat {
    let mut out = [[Jet::ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn jet_mat_const(m: &nalgebra::Matrix4<f64>) -> JetMat {
    let mut out = [[Jet::ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = Jet::constant(m[(i, j)]);
        }
    }
    out
}
