//! Whitelisted arithmetic expressions in `x` and `y`, used for positional wind fields.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'y' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp' | 'sqrt' | 'abs'
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so `-x^2` is `-(x^2)` and
//! `2^3^2` is `2^(3^2)`.

use std::fmt;

use thiserror::Error;

pub const MAX_SOURCE_LEN: usize = 4096;
pub const MAX_DEPTH: usize = 64;
/// Divisors smaller than this in magnitude are rejected.
pub const DIVISION_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("expression syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("division by a constant zero at column {column}")]
    ConstantDivision { column: usize },

    #[error("expression nests deeper than {MAX_DEPTH} levels")]
    TooDeep,

    #[error("expression longer than {MAX_SOURCE_LEN} bytes")]
    TooLong,

    #[error("expression evaluation failed at ({x}, {y}): {message}")]
    Runtime { x: f64, y: f64, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    X,
    Y,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn is_constant(&self) -> bool {
        match self {
            Node::Num(_) => true,
            Node::X | Node::Y => false,
            Node::Neg(a) | Node::Call(_, a) => a.is_constant(),
            Node::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn eval(&self, x: f64, y: f64) -> Result<f64, String> {
        Ok(match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Y => y,
            Node::Neg(a) => -a.eval(x, y)?,
            Node::Call(f, a) => {
                let v = a.eval(x, y)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(format!("sqrt of negative value {v}"));
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                }
            }
            Node::Bin(op, a, b) => {
                let l = a.eval(x, y)?;
                let r = b.eval(x, y)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r.abs() < DIVISION_GUARD {
                            return Err(format!("divisor {r:e} is too close to zero"));
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                }
            }
        })
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::X => f.write_str("x"),
            Node::Y => f.write_str("y"),
            Node::Neg(a) => {
                f.write_str("(-")?;
                a.write(f)?;
                f.write_str(")")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f)?;
                f.write_str(")")
            }
            Node::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                f.write_str("(")?;
                a.write(f)?;
                write!(f, " {sym} ")?;
                b.write(f)?;
                f.write_str(")")
            }
        }
    }
}

/// A parsed field expression. Equality compares the syntax tree, not the source text.
#[derive(Clone, Debug)]
pub struct FieldExpr {
    source: String,
    root: Node,
}

impl PartialEq for FieldExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for FieldExpr {
    /// Fully parenthesized form; it re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f)
    }
}

impl FieldExpr {
    pub fn parse(source: &str) -> Result<FieldExpr, ExprError> {
        if source.len() > MAX_SOURCE_LEN {
            return Err(ExprError::TooLong);
        }
        let tokens = lex(source)?;
        let mut p = Parser { tokens: &tokens, pos: 0, depth: 0, end: source.len() + 1 };
        let root = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(ExprError::Syntax { column: t.column, message: format!("unexpected {}", t.kind.describe()) });
        }
        Ok(FieldExpr { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        let v = self.root.eval(x, y).map_err(|message| ExprError::Runtime { x, y, message })?;
        if !v.is_finite() {
            return Err(ExprError::Runtime { x, y, message: format!("non-finite result {v}") });
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier '{s}'"),
            TokKind::Op(c) => format!("'{c}'"),
            TokKind::LParen => "'('".into(),
            TokKind::RParen => "')'".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    /// 1-based character column.
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| ExprError::Syntax { column, message: format!("malformed number '{text}'") })?;
            out.push(Token { kind: TokKind::Num(v), column });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: TokKind::Ident(chars[start..i].iter().collect()), column });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            _ => return Err(ExprError::Syntax { column, message: format!("unexpected character '{c}'") }),
        };
        out.push(Token { kind, column });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    depth: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokKind::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn column(&self) -> usize {
        self.peek().map(|t| t.column).unwrap_or(self.end)
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExprError::TooDeep);
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let column = self.column();
            let rhs = self.unary()?;
            if c == '/' && rhs.is_constant() {
                let v = rhs.eval(0.0, 0.0).unwrap_or(f64::NAN);
                if !(v.abs() >= DIVISION_GUARD) {
                    return Err(ExprError::ConstantDivision { column });
                }
            }
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            self.enter()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let column = self.column();
        let Some(tok) = self.peek().cloned() else {
            return Err(ExprError::Syntax { column, message: "unexpected end of expression".into() });
        };
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Node::Num(v)),
            TokKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(column)?;
                Ok(inner)
            }
            TokKind::Ident(name) => match name.as_str() {
                "x" => Ok(Node::X),
                "y" => Ok(Node::Y),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "e" => Ok(Node::Num(std::f64::consts::E)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ExprError::Syntax { column, message: format!("unknown identifier '{name}'") });
                    };
                    if self.peek().map(|t| &t.kind) != Some(&TokKind::LParen) {
                        return Err(ExprError::Syntax {
                            column: self.column(),
                            message: format!("expected '(' after '{name}'"),
                        });
                    }
                    self.pos += 1;
                    self.enter()?;
                    let arg = self.expr()?;
                    self.depth -= 1;
                    self.expect_rparen(column)?;
                    Ok(Node::Call(func, Box::new(arg)))
                }
            },
            other => Err(ExprError::Syntax { column, message: format!("unexpected {}", other.describe()) }),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token { kind: TokKind::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ExprError::Syntax {
                column: self.column(),
                message: format!("unclosed '(' opened at column {open}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x: f64, y: f64) -> f64 {
        FieldExpr::parse(s).unwrap().eval(x, y).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("(1 - 2) - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
    }

    #[test]
    fn functions_and_constants() {
        assert!((ev("sin(pi/2) + cos(0) + exp(0) + sqrt(4) + abs(-1)", 0.0, 0.0) - 6.0).abs() < 1e-15);
        assert_eq!(ev("e", 0.0, 0.0), std::f64::consts::E);
        assert_eq!(ev("1.5e2 + 2E-1", 0.0, 0.0), 150.2);
    }

    #[test]
    fn rotation_field() {
        assert_eq!(ev("-y", 0.3, 0.7), -0.7);
        assert_eq!(ev("x", 0.3, 0.7), 0.3);
    }

    #[test]
    fn constant_division_rejected() {
        assert!(matches!(FieldExpr::parse("1/0"), Err(ExprError::ConstantDivision { column: 3 })));
        assert!(matches!(FieldExpr::parse("x/(2-2)"), Err(ExprError::ConstantDivision { .. })));
        assert!(matches!(FieldExpr::parse("x/1e-13"), Err(ExprError::ConstantDivision { .. })));
    }

    #[test]
    fn runtime_division_error() {
        let e = FieldExpr::parse("1/x").unwrap();
        assert!(matches!(e.eval(0.0, 1.0), Err(ExprError::Runtime { .. })));
        assert_eq!(e.eval(2.0, 1.0).unwrap(), 0.5);
        assert!(FieldExpr::parse("sqrt(x)").unwrap().eval(-1.0, 0.0).is_err());
    }

    #[test]
    fn syntax_errors_carry_columns() {
        let cases = [("1 +", 4), ("foo", 1), ("sin x", 5), ("(1", 3), ("1 $ 2", 3), ("1 2", 3)];
        for (src, col) in cases {
            match FieldExpr::parse(src) {
                Err(ExprError::Syntax { column, .. }) => assert_eq!(column, col, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn limits() {
        let deep = format!("{}1{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(FieldExpr::parse(&deep), Err(ExprError::TooDeep));
        let negs = format!("{}1", "-".repeat(100));
        assert_eq!(FieldExpr::parse(&negs), Err(ExprError::TooDeep));
        assert_eq!(FieldExpr::parse(&"1+".repeat(3000)), Err(ExprError::TooLong));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for s in ["-x^2 + 3*y", "sin(x)/(1+y^2)", "2^3^2", "-(-x)", "exp(-x*x-y*y)"] {
            let a = FieldExpr::parse(s).unwrap();
            let b = FieldExpr::parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn builtin_expressions_match_direct_evaluation(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let cases: [(&str, fn(f64, f64) -> f64); 4] = [
                ("-y", |_, y| -y),
                ("x", |x, _| x),
                ("0.5*x", |x, _| 0.5 * x),
                ("sin(x)*cos(y) + exp(-x^2) - sqrt(abs(y))", |x, y| {
                    x.sin() * y.cos() + (-(x * x)).exp() - y.abs().sqrt()
                }),
            ];
            for (src, f) in cases {
                let got = ev(src, x, y);
                let want = f(x, y);
                prop_assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
            }
        }

        #[test]
        fn parser_never_panics(s in "[-+*/^()xy0-9. a-z]{0,40}") {
            let _ = FieldExpr::parse(&s);
        }
    }
}
