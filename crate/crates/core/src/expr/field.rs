use std::fmt;
use std::sync::{Arc, OnceLock};

use super::{parse_with_vars, Expr, ExprError, COORDS};

/// A parsed expression together with lazily derived partial derivatives.
///
/// Cloning shares the derivative cache. The cache uses `OnceLock`, so a
/// field can be shared between threads and differentiated concurrently.
#[derive(Clone)]
pub struct ScalarField {
    inner: Arc<Inner>,
}

struct Inner {
    expr: Arc<Expr>,
    nvars: usize,
    partials: Box<[OnceLock<ScalarField>]>,
}

impl ScalarField {
    pub fn new(expr: Arc<Expr>, nvars: usize) -> Self {
        let partials = (0..nvars).map(|_| OnceLock::new()).collect();
        ScalarField {
            inner: Arc::new(Inner { expr, nvars, partials }),
        }
    }

    /// Parses over the chart coordinates `x1..x4`.
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Self::parse_with_vars(text, &COORDS)
    }

    pub fn parse_with_vars(text: &str, names: &[&str]) -> Result<Self, ExprError> {
        Ok(Self::new(parse_with_vars(text, names)?, names.len()))
    }

    pub fn constant(value: f64, nvars: usize) -> Self {
        Self::new(Arc::new(Expr::Const(value)), nvars)
    }

    pub fn expr(&self) -> &Arc<Expr> {
        &self.inner.expr
    }

    pub fn nvars(&self) -> usize {
        self.inner.nvars
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        if point.len() != self.inner.nvars {
            return Err(ExprError::Arity {
                expected: self.inner.nvars,
                got: point.len(),
            });
        }
        self.inner.expr.eval(point)
    }

    /// Exact partial derivative in variable `var`, computed once and cached.
    pub fn partial(&self, var: usize) -> &ScalarField {
        self.inner.partials[var].get_or_init(|| ScalarField::new(self.inner.expr.derivative(var), self.inner.nvars))
    }

    /// Owned handle to the partial derivative (the public `differentiate`).
    pub fn differentiate(&self, var: usize) -> ScalarField {
        self.partial(var).clone()
    }

    /// Derivative along a multi-index, e.g. `&[0, 0, 1]` for d³/dx1²dx2.
    pub fn partial_path(&self, vars: &[usize]) -> &ScalarField {
        vars.iter().fold(self, |f, &v| f.partial(v))
    }

    pub fn is_zero(&self) -> bool {
        self.inner.expr.is_zero()
    }

    /// Eagerly populates the cache up to `order` so that a shared field is
    /// never differentiated on a hot path.
    pub fn precompute(&self, order: usize) {
        if order == 0 {
            return;
        }
        for v in 0..self.inner.nvars {
            self.partial(v).precompute(order - 1);
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.inner.nvars).map(|i| format!("v{i}")).collect();
        let names: Vec<&str> = if self.inner.nvars == 4 {
            COORDS.to_vec()
        } else {
            names.iter().map(String::as_str).collect()
        };
        write!(f, "ScalarField({})", self.inner.expr.display_with(&names))
    }
}
