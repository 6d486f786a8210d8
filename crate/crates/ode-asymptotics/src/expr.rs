//! Expressions in one variable `t`: parsing, evaluation, symbolic
//! differentiation.
//!
//! The grammar covers everything the coefficient functions of the toolkit
//! need: numbers, `t`, `+ - * / ^`, parentheses, the functions `sin`, `cos`,
//! `exp`, `log` (natural), `sqrt`, and unary minus. `^` is right-associative
//! and binds tighter than `*`/`/`, which bind tighter than `+`/`-`.
//!
//! There is deliberately no algebraic simplification beyond folding of
//! literal constant subtrees; correctness is defined by evaluation, not by
//! canonical form.

use std::fmt;

use num_traits::Float;
use thiserror::Error;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    /// Unary minus.
    Neg,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Neg => "-",
        }
    }
}

/// Binary operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Immutable expression tree in the single variable `t`.
///
/// Constants are stored as `f64`; evaluation is generic over any
/// [`num_traits::Float`] scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    /// Literal constant.
    Const(f64),
    /// The variable `t`.
    Var,
    /// Function application or unary minus.
    Unary(UnaryFn, Box<ExprNode>),
    /// Binary operation, including `^`.
    Binary(BinOp, Box<ExprNode>, Box<ExprNode>),
}

/// Evaluation-domain failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("square root of negative value {0}")]
    SqrtNegative(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-integer power {exponent} of non-positive base {base}")]
    FractionalPowerOfNonPositive { base: f64, exponent: f64 },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Syntax failure, with the byte offset of the offending input position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

impl ExprNode {
    /// Constant zero.
    pub fn zero() -> Self {
        ExprNode::Const(0.0)
    }

    /// Literal constant.
    pub fn constant(c: f64) -> Self {
        ExprNode::Const(c)
    }

    /// The variable `t`.
    pub fn var() -> Self {
        ExprNode::Var
    }

    /// True if this node is the literal constant `c`.
    fn is_const(&self, c: f64) -> bool {
        matches!(self, ExprNode::Const(v) if *v == c)
    }

    /// Evaluate at `t` over any floating scalar.
    pub fn eval<T: Float>(&self, t: T) -> Result<T, EvalError> {
        let v = self.eval_inner(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner<T: Float>(&self, t: T) -> Result<T, EvalError> {
        match self {
            ExprNode::Const(c) => Ok(T::from(*c).expect("constant representable")),
            ExprNode::Var => Ok(t),
            ExprNode::Unary(f, a) => {
                let x = a.eval_inner(t)?;
                match f {
                    UnaryFn::Sin => Ok(x.sin()),
                    UnaryFn::Cos => Ok(x.cos()),
                    UnaryFn::Exp => Ok(x.exp()),
                    UnaryFn::Log => {
                        if x <= T::zero() {
                            Err(EvalError::LogNonPositive(x.to_f64().unwrap_or(f64::NAN)))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    UnaryFn::Sqrt => {
                        if x < T::zero() {
                            Err(EvalError::SqrtNegative(x.to_f64().unwrap_or(f64::NAN)))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    UnaryFn::Neg => Ok(-x),
                }
            }
            ExprNode::Binary(op, a, b) => {
                let x = a.eval_inner(t)?;
                let y = b.eval_inner(t)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y == T::zero() {
                            Err(EvalError::DivisionByZero)
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => pow_checked(x, y),
                }
            }
        }
    }

    /// First symbolic derivative with respect to `t`.
    pub fn differentiate(&self) -> ExprNode {
        match self {
            ExprNode::Const(_) => ExprNode::zero(),
            ExprNode::Var => ExprNode::Const(1.0),
            ExprNode::Unary(f, a) => {
                let da = a.differentiate();
                let outer = match f {
                    UnaryFn::Sin => ExprNode::Unary(UnaryFn::Cos, a.clone()),
                    UnaryFn::Cos => ExprNode::Unary(
                        UnaryFn::Neg,
                        Box::new(ExprNode::Unary(UnaryFn::Sin, a.clone())),
                    ),
                    UnaryFn::Exp => ExprNode::Unary(UnaryFn::Exp, a.clone()),
                    // d/du log u = 1/u
                    UnaryFn::Log => binary(BinOp::Div, ExprNode::Const(1.0), (**a).clone()),
                    // d/du sqrt u = 1/(2 sqrt u)
                    UnaryFn::Sqrt => binary(
                        BinOp::Div,
                        ExprNode::Const(0.5),
                        ExprNode::Unary(UnaryFn::Sqrt, a.clone()),
                    ),
                    UnaryFn::Neg => return ExprNode::Unary(UnaryFn::Neg, Box::new(da)),
                };
                binary(BinOp::Mul, outer, da)
            }
            ExprNode::Binary(op, a, b) => {
                let da = a.differentiate();
                let db = b.differentiate();
                match op {
                    BinOp::Add => binary(BinOp::Add, da, db),
                    BinOp::Sub => binary(BinOp::Sub, da, db),
                    BinOp::Mul => binary(
                        BinOp::Add,
                        binary(BinOp::Mul, da, (**b).clone()),
                        binary(BinOp::Mul, (**a).clone(), db),
                    ),
                    BinOp::Div => {
                        // (a/b)' = (a'b - ab') / b^2
                        let num = binary(
                            BinOp::Sub,
                            binary(BinOp::Mul, da, (**b).clone()),
                            binary(BinOp::Mul, (**a).clone(), db),
                        );
                        let den = binary(BinOp::Mul, (**b).clone(), (**b).clone());
                        binary(BinOp::Div, num, den)
                    }
                    BinOp::Pow => {
                        if let ExprNode::Const(c) = **b {
                            // (a^c)' = c a^{c-1} a'
                            binary(
                                BinOp::Mul,
                                binary(
                                    BinOp::Mul,
                                    ExprNode::Const(c),
                                    binary(BinOp::Pow, (**a).clone(), ExprNode::Const(c - 1.0)),
                                ),
                                da,
                            )
                        } else {
                            // (a^b)' = a^b (b' log a + b a'/a)
                            let term1 = binary(
                                BinOp::Mul,
                                db,
                                ExprNode::Unary(UnaryFn::Log, a.clone()),
                            );
                            let term2 = binary(
                                BinOp::Mul,
                                (**b).clone(),
                                binary(BinOp::Div, da, (**a).clone()),
                            );
                            binary(
                                BinOp::Mul,
                                self.clone(),
                                binary(BinOp::Add, term1, term2),
                            )
                        }
                    }
                }
            }
        }
    }
}

fn pow_checked<T: Float>(base: T, exponent: T) -> Result<T, EvalError> {
    let is_int = exponent.fract() == T::zero();
    if is_int {
        if base == T::zero() && exponent < T::zero() {
            return Err(EvalError::DivisionByZero);
        }
        // Integer exponents allow any base.
        if let Some(e) = exponent.to_i32() {
            return Ok(base.powi(e));
        }
        return Ok(base.powf(exponent));
    }
    if base <= T::zero() {
        return Err(EvalError::FractionalPowerOfNonPositive {
            base: base.to_f64().unwrap_or(f64::NAN),
            exponent: exponent.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(base.powf(exponent))
}

/// Build a binary node, folding when both operands are literal constants and
/// the operation evaluates cleanly.
pub(crate) fn binary(op: BinOp, a: ExprNode, b: ExprNode) -> ExprNode {
    if let (ExprNode::Const(x), ExprNode::Const(y)) = (&a, &b) {
        let folded = match op {
            BinOp::Add => Some(x + y),
            BinOp::Sub => Some(x - y),
            BinOp::Mul => Some(x * y),
            BinOp::Div => (*y != 0.0).then(|| x / y),
            BinOp::Pow => match pow_checked(*x, *y) {
                Ok(v) => Some(v),
                Err(_) => None,
            },
        };
        if let Some(v) = folded {
            if v.is_finite() {
                return ExprNode::Const(v);
            }
        }
    }
    // Identity folds that cannot change evaluation semantics.
    match op {
        BinOp::Add if a.is_const(0.0) => return b,
        BinOp::Add | BinOp::Sub if b.is_const(0.0) => return a,
        BinOp::Mul if a.is_const(1.0) => return b,
        BinOp::Mul | BinOp::Div | BinOp::Pow if b.is_const(1.0) => return a,
        _ => {}
    }
    ExprNode::Binary(op, Box::new(a), Box::new(b))
}

/// Parse an expression string.
pub fn parse_expr(text: &str) -> Result<ExprNode, ParseError> {
    Parser::new(text).parse()
}

/// Evaluate an expression at `t` (convenience wrapper over [`ExprNode::eval`]).
pub fn eval_expr(e: &ExprNode, t: f64) -> Result<f64, EvalError> {
    e.eval(t)
}

/// `order`-th symbolic derivative (`order` ≥ 1). The toolkit itself never
/// needs more than order 4.
pub fn diff_expr(e: &ExprNode, order: u32) -> ExprNode {
    assert!(order >= 1, "derivative order must be positive");
    let mut d = e.differentiate();
    for _ in 1..order {
        d = d.differentiate();
    }
    d
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn parse(mut self) -> Result<ExprNode, ParseError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(e)
    }

    fn err(&self, message: &str) -> ParseError {
        ParseError {
            message: message.to_string(),
            offset: self.pos,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = binary(BinOp::Add, lhs, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = binary(BinOp::Sub, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = binary(BinOp::Mul, lhs, rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = binary(BinOp::Div, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            if let ExprNode::Const(c) = inner {
                return Ok(ExprNode::Const(-c));
            }
            return Ok(ExprNode::Unary(UnaryFn::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // Right-associative; allow a signed exponent.
            let exponent = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(e)
                } else {
                    Err(self.err("expected ')'"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.err("expected a number, 't', a function, or '('")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<ExprNode, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // Exponent suffix like 1e-3 / 2.5E+4.
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. "2e" would be malformed;
                // treat "e" as the start of an identifier error later).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(ExprNode::Const(v)),
            Err(_) => {
                self.pos = start;
                Err(self.err("malformed number"))
            }
        }
    }

    fn identifier(&mut self) -> Result<ExprNode, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        if name == "t" {
            return Ok(ExprNode::Var);
        }
        let f = match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sqrt" => UnaryFn::Sqrt,
            _ => {
                self.pos = start;
                return Err(self.err(&format!("unknown identifier '{name}'")));
            }
        };
        if self.peek() != Some(b'(') {
            return Err(self.err(&format!("expected '(' after function '{name}'")));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.err("expected ')'"));
        }
        self.pos += 1;
        Ok(ExprNode::Unary(f, Box::new(arg)))
    }
}

impl fmt::Display for ExprNode {
    /// Fully parenthesized rendering; `parse(format!("{e}"))` is semantically
    /// the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            ExprNode::Var => write!(f, "t"),
            ExprNode::Unary(UnaryFn::Neg, a) => write!(f, "(-{a})"),
            ExprNode::Unary(g, a) => write!(f, "{}({a})", g.name()),
            ExprNode::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
        }
    }
}

/// Central finite-difference estimate of the `order`-th derivative of `f` at
/// `t` with step `h` (orders 1–4), used by tests and residual checks as an
/// independent oracle for [`diff_expr`].
pub fn central_diff<F: Fn(f64) -> f64>(f: F, t: f64, order: u32, h: f64) -> f64 {
    // 4th-order-accurate central stencils (truncation error O(h⁴)).
    match order {
        1 => (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h),
        2 => {
            (-f(t + 2.0 * h) + 16.0 * f(t + h) - 30.0 * f(t) + 16.0 * f(t - h)
                - f(t - 2.0 * h))
                / (12.0 * h * h)
        }
        3 => {
            (-f(t + 3.0 * h) + 8.0 * f(t + 2.0 * h) - 13.0 * f(t + h) + 13.0 * f(t - h)
                - 8.0 * f(t - 2.0 * h)
                + f(t - 3.0 * h))
                / (8.0 * h * h * h)
        }
        4 => {
            (-f(t + 3.0 * h) + 12.0 * f(t + 2.0 * h) - 39.0 * f(t + h) + 56.0 * f(t)
                - 39.0 * f(t - h)
                + 12.0 * f(t - 2.0 * h)
                - f(t - 3.0 * h))
                / (6.0 * h * h * h * h)
        }
        _ => panic!("central_diff supports orders 1..=4"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ExprNode {
        parse_expr(s).unwrap()
    }

    #[test]
    fn parses_and_evaluates_basics() {
        assert_eq!(p("0").eval(3.0_f64).unwrap(), 0.0);
        assert_eq!(p("t^0.5").eval(4.0_f64).unwrap(), 2.0);
        assert_eq!(p("exp(-t)").eval(0.0_f64).unwrap(), 1.0);
        assert_eq!(p("1+2*3").eval(0.0_f64).unwrap(), 7.0);
        assert_eq!(p("(1+2)*3").eval(0.0_f64).unwrap(), 9.0);
        assert_eq!(p("2^3^2").eval(0.0_f64).unwrap(), 512.0); // right-assoc
        assert_eq!(p("-t^2").eval(3.0_f64).unwrap(), -9.0); // minus binds last
        assert_eq!(p("t^-2").eval(2.0_f64).unwrap(), 0.25);
        assert_eq!(p("1e-3*t").eval(2.0_f64).unwrap(), 0.002);
    }

    #[test]
    fn cancellation_by_evaluation_not_simplification() {
        let e = p("t^2 - t^2");
        for t in [1.0, 2.5, 10.0] {
            assert_eq!(e.eval(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn example_coefficient_expression() {
        // 3/((cos t + 2) log t), positive and decaying for t > 1.
        let e = p("3/((cos(t)+2)*log(t))");
        let v = e.eval(2.0_f64).unwrap();
        let expected = 3.0 / ((2.0_f64.cos() + 2.0) * 2.0_f64.ln());
        assert!((v - expected).abs() < 1e-15);
        // Tends to 0 up to the bounded cosine oscillation: the log in the
        // denominator wins across decades.
        let v10 = e.eval(1e1).unwrap();
        let v10000 = e.eval(1e4).unwrap();
        assert!(v10000 < v10);
        // hard bound 3/((2−1)·ln 1e4) regardless of the cosine phase
        assert!(v10000 <= 3.0 / (4.0 * 10.0_f64.ln()) + 1e-12);
    }

    #[test]
    fn generic_f32_evaluation() {
        let e = p("sqrt(t)+1");
        let v: f32 = e.eval(4.0_f32).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            p("log(t)").eval(0.0_f64),
            Err(EvalError::LogNonPositive(_))
        ));
        assert!(matches!(
            p("sqrt(t)").eval(-1.0_f64),
            Err(EvalError::SqrtNegative(_))
        ));
        assert!(matches!(
            p("1/t").eval(0.0_f64),
            Err(EvalError::DivisionByZero)
        ));
        assert!(matches!(
            p("t^0.5").eval(-2.0_f64),
            Err(EvalError::FractionalPowerOfNonPositive { .. })
        ));
        // Integer exponents allow negative bases.
        assert_eq!(p("t^3").eval(-2.0_f64).unwrap(), -8.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse_expr("1+*2").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse_expr("sin(t").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse_expr("foo(t)").unwrap_err();
        assert!(err.message.contains("foo"));
        assert_eq!(err.offset, 0);
        let err = parse_expr("1+2)").unwrap_err();
        assert_eq!(err.offset, 3);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        assert_eq!(diff_expr(&p("7"), 1), ExprNode::Const(0.0));
    }

    #[test]
    fn simple_symbolic_derivatives() {
        // (t^3)' = 3t^2
        let d = diff_expr(&p("t^3"), 1);
        for t in [-2.0, 0.5, 4.0] {
            assert!((d.eval(t).unwrap() - 3.0 * t * t).abs() < 1e-12);
        }
        // (sin t)'' = -sin t
        let d2 = diff_expr(&p("sin(t)"), 2);
        for t in [0.0, 1.0, 2.0] {
            assert!((d2.eval(t).unwrap() + t.sin()).abs() < 1e-12);
        }
        // 4th derivative of t^a: a(a-1)(a-2)(a-3) t^{a-4}
        let a = 2.5;
        let d4 = diff_expr(&p("t^2.5"), 4);
        for t in [2.0, 5.0, 10.0] {
            let expect = a * (a - 1.0) * (a - 2.0) * (a - 3.0) * t.powf(a - 4.0);
            assert!((d4.eval(t).unwrap() - expect).abs() < 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn general_power_rule() {
        // d/dt t^t = t^t (log t + 1)
        let d = diff_expr(&p("t^t"), 1);
        for t in [0.5, 1.0, 3.0_f64] {
            let expect = t.powf(t) * (t.ln() + 1.0);
            assert!((d.eval(t).unwrap() - expect).abs() < 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn display_round_trip() {
        for s in [
            "3/((cos(t)+2)*log(t))",
            "t^2.5 - sin(t)*exp(-t/2)",
            "-sqrt(t+1)^3",
            "2^3^2",
            "t^-2",
        ] {
            let e = p(s);
            let printed = format!("{e}");
            let re = parse_expr(&printed).unwrap();
            for t in [1.5, 2.0, 7.0] {
                let a = e.eval(t).unwrap();
                let b = re.eval(t).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{s} -> {printed}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn finite_difference_agreement_all_orders() {
        let exprs = [
            "t^3",
            "t^2.5",
            "sin(t)",
            "exp(-t/2)",
            "3/((cos(t)+2)*log(t))",
            "sqrt(t)",
            "log(t)/t",
        ];
        for s in exprs {
            let e = p(s);
            for order in 1..=4u32 {
                let d = diff_expr(&e, order);
                for t in [2.0, 5.0, 10.0] {
                    let h = (1e-3_f64).max(1e-3 * t.abs());
                    let fd = central_diff(|x| e.eval(x).unwrap(), t, order, h);
                    let sym = d.eval(t).unwrap();
                    // FD round-off floor grows like eps/h^order.
                    let fmax: f64 = [t - 2.0 * h, t, t + 2.0 * h]
                        .iter()
                        .map(|&x| e.eval(x).unwrap().abs())
                        .fold(0.0, f64::max);
                    let noise = 64.0 * f64::EPSILON * fmax / h.powi(order as i32);
                    let tol = 1e-5 * sym.abs().max(1e-8) + noise;
                    assert!(
                        (sym - fd).abs() <= tol,
                        "{s} order {order} at t={t}: sym {sym} fd {fd}"
                    );
                }
            }
        }
    }
}
