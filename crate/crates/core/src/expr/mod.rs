//! Scalar-field expressions: parsing, evaluation and exact symbolic
//! differentiation.
//!
//! Expressions are immutable trees over a fixed, ordered set of variable
//! names (by default `x1..x4`). Exponents are restricted to integer
//! constants so that the derivative of any expression is again an
//! expression of the same grammar.

mod field;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use field::ScalarField;
pub use parse::{parse_expression, parse_with_vars};

/// Variable names of the four-dimensional chart.
pub const COORDS: [&str; 4] = ["x1", "x2", "x3", "x4"];

/// Elementary functions understood by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            "log" | "ln" => Func::Log,
            _ => return None,
        })
    }
}

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree. Subtrees are reference counted, so cloning is cheap
/// and derivative trees share structure with their source.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Call(Func, Arc<Expr>),
}

/// Errors raised while parsing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} is not an integer constant")]
    NonIntegerExponent { offset: usize },
    #[error("domain error in {func} at {point:?}")]
    Domain { func: &'static str, point: Vec<f64> },
    #[error("expected {expected} variables, got {got}")]
    Arity { expected: usize, got: usize },
}

impl ExprError {
    /// Byte offset into the source text, for syntax-class errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Syntax { offset, .. }
            | ExprError::UnknownIdentifier { offset, .. }
            | ExprError::NonIntegerExponent { offset } => Some(*offset),
            _ => None,
        }
    }
}

pub(crate) fn constant(value: f64) -> Arc<Expr> {
    Arc::new(Expr::Const(value))
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

// Smart constructors: fold constants and drop neutral elements. Nothing
// beyond that; correctness is judged by evaluation, not by canonical form.

pub(crate) fn neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Expr::Const(c) => constant(-c),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

pub(crate) fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => constant(x + y),
        (Some(0.0), None) => b,
        (None, Some(0.0)) => a,
        _ => Arc::new(Expr::Binary(BinOp::Add, a, b)),
    }
}

pub(crate) fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => constant(x - y),
        (Some(0.0), None) => neg(b),
        (None, Some(0.0)) => a,
        _ => Arc::new(Expr::Binary(BinOp::Sub, a, b)),
    }
}

pub(crate) fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => constant(x * y),
        (Some(0.0), _) => constant(0.0),
        (_, Some(0.0)) => constant(0.0),
        (Some(1.0), None) => b,
        (None, Some(1.0)) => a,
        (Some(-1.0), None) => neg(b),
        (None, Some(-1.0)) => neg(a),
        _ => Arc::new(Expr::Binary(BinOp::Mul, a, b)),
    }
}

pub(crate) fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if y != 0.0 => constant(x / y),
        (Some(0.0), _) => constant(0.0),
        (None, Some(1.0)) => a,
        _ => Arc::new(Expr::Binary(BinOp::Div, a, b)),
    }
}

pub(crate) fn pow(a: Arc<Expr>, n: i32) -> Arc<Expr> {
    match (as_const(&a), n) {
        (_, 0) => constant(1.0),
        (_, 1) => a,
        (Some(x), _) => constant(x.powi(n)),
        _ => Arc::new(Expr::Pow(a, n)),
    }
}

pub(crate) fn call(f: Func, a: Arc<Expr>) -> Arc<Expr> {
    if let Some(x) = as_const(&a) {
        let folded = match f {
            Func::Exp => Some(x.exp()),
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
            Func::Sinh => Some(x.sinh()),
            Func::Cosh => Some(x.cosh()),
            Func::Sqrt if x >= 0.0 => Some(x.sqrt()),
            Func::Log if x > 0.0 => Some(x.ln()),
            _ => None,
        };
        if let Some(v) = folded {
            return constant(v);
        }
    }
    Arc::new(Expr::Call(f, a))
}

impl Expr {
    /// Exact partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Arc<Expr> {
        match self {
            Expr::Const(_) => constant(0.0),
            Expr::Var(i) => constant(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Binary(op, a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b.clone()), mul(a.clone(), db)),
                    BinOp::Div => div(sub(mul(da, b.clone()), mul(a.clone(), db)), pow(b.clone(), 2)),
                }
            }
            Expr::Pow(a, n) => {
                let da = a.derivative(var);
                mul(mul(constant(*n as f64), pow(a.clone(), n - 1)), da)
            }
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                if as_const(&da) == Some(0.0) {
                    return constant(0.0);
                }
                let outer = match f {
                    Func::Exp => call(Func::Exp, a.clone()),
                    Func::Sin => call(Func::Cos, a.clone()),
                    Func::Cos => neg(call(Func::Sin, a.clone())),
                    Func::Sinh => call(Func::Cosh, a.clone()),
                    Func::Cosh => call(Func::Sinh, a.clone()),
                    Func::Sqrt => div(constant(0.5), call(Func::Sqrt, a.clone())),
                    Func::Log => div(constant(1.0), a.clone()),
                };
                mul(outer, da)
            }
        }
    }

    /// IEEE double evaluation at `point`; domain violations are errors.
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => point[*i],
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(domain("division", point));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, n) => {
                let x = a.eval(point)?;
                if x == 0.0 && *n < 0 {
                    return Err(domain("pow", point));
                }
                x.powi(*n)
            }
            Expr::Call(f, a) => {
                let x = a.eval(point)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain("sqrt", point));
                        }
                        x.sqrt()
                    }
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(domain("log", point));
                        }
                        x.ln()
                    }
                }
            }
        })
    }

    /// Highest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        as_const(self) == Some(0.0)
    }

    /// Renders the expression with explicit parentheses using `names` for
    /// variables; the output parses back to an equivalent tree.
    pub fn display_with<'a>(&'a self, names: &'a [&'a str]) -> Display<'a> {
        Display { expr: self, names }
    }
}

fn domain(func: &'static str, point: &[f64]) -> ExprError {
    ExprError::Domain {
        func,
        point: point.to_vec(),
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    names: &'a [&'a str],
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}

fn write_expr(e: &Expr, names: &[&str], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if *c < 0.0 {
                write!(f, "({c:?})")
            } else {
                write!(f, "{c:?}")
            }
        }
        Expr::Var(i) => match names.get(*i) {
            Some(n) => f.write_str(n),
            None => write!(f, "v{i}"),
        },
        Expr::Neg(a) => {
            f.write_str("(-")?;
            write_expr(a, names, f)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
            };
            f.write_str("(")?;
            write_expr(a, names, f)?;
            f.write_str(sym)?;
            write_expr(b, names, f)?;
            f.write_str(")")
        }
        Expr::Pow(a, n) => {
            f.write_str("(")?;
            write_expr(a, names, f)?;
            if *n < 0 {
                write!(f, ")^({n})")
            } else {
                write!(f, ")^{n}")
            }
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, names, f)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Arc<Expr> {
        parse_expression(s).unwrap()
    }

    #[test]
    fn zero_is_constant() {
        assert_eq!(*parse("0"), Expr::Const(0.0));
    }

    #[test]
    fn grammar_shape() {
        let e = parse("1 + x1^2 + x2^2");
        // left-associative sum of three terms
        let expected = add(
            add(constant(1.0), pow(Arc::new(Expr::Var(0)), 2)),
            pow(Arc::new(Expr::Var(1)), 2),
        );
        assert_eq!(e, expected);
        assert_eq!(e.eval(&[1.0, 2.0, 0.0, 0.0]).unwrap(), 6.0);
    }

    #[test]
    fn precedence() {
        let e = parse("-x1^2");
        assert_eq!(e.eval(&[3.0, 0.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = parse("2*3 - 4/2 + 1");
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 5.0);
        let e = parse("2^3^2");
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 512.0);
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse_expression("(x1").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_expression("x1 + y7").unwrap_err();
        assert!(matches!(err, ExprError::UnknownIdentifier { offset: 5, .. }));
    }

    #[test]
    fn non_integer_exponent() {
        let err = parse_expression("x1^2.5").unwrap_err();
        assert!(matches!(err, ExprError::NonIntegerExponent { offset: 3 }));
        assert!(parse_expression("x1^x2").is_err());
        assert!(parse_expression("x1^(-2)").is_ok());
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(parse("x1*x2").eval(&[2.0, 3.0, 0.0, 0.0]).unwrap(), 6.0);
        assert_eq!(parse("exp(x3)").eval(&[0.0; 4]).unwrap(), 1.0);
        let err = parse("sqrt(x1)").eval(&[-1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, ExprError::Domain { func: "sqrt", .. }));
        assert!(parse("log(x1)").eval(&[0.0; 4]).is_err());
    }

    #[test]
    fn simple_derivatives() {
        let d = parse("x1^2").derivative(0);
        assert_eq!(d.eval(&[3.0, 0.0, 0.0, 0.0]).unwrap(), 6.0);
        assert_eq!(*d, *mul(constant(2.0), Arc::new(Expr::Var(0))));
        assert!(parse("7").derivative(1).is_zero());
        assert!(parse("x1*x3 + sin(x3)").derivative(1).is_zero());
    }

    #[test]
    fn derivative_of_exp_product_matches_finite_difference() {
        let e = parse("exp(x1*x2)");
        let p = [1.0, 2.0, 0.0, 0.0];
        let h = 1e-5;
        let fd = (e.eval(&[1.0 + h, 2.0, 0.0, 0.0]).unwrap() - e.eval(&[1.0 - h, 2.0, 0.0, 0.0]).unwrap()) / (2.0 * h);
        let exact = e.derivative(0).eval(&p).unwrap();
        // frozen from the central difference above: 2e^2
        assert!((fd - 2.0 * 2f64.exp()).abs() < 1e-8);
        assert!((exact - 2.0 * 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn display_round_trip() {
        let src = "-(x1 - 2.5)^(-2) * cos(x2/x3) + sqrt(1 + x4^2) - -3";
        let e = parse(src);
        let printed = e.display_with(&COORDS).to_string();
        let back = parse(&printed);
        let p = [0.3, -0.7, 1.1, 0.2];
        assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
    }
}
