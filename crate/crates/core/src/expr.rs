//! A tiny arithmetic language for time-varying coefficients and delays.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 't' | 'pi' | 'e' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func    := sin | cos | exp | abs | min | max
//! ```
//!
//! The printer emits the minimal parenthesization that parses back to an
//! identical tree.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Abs, Func::Min, Func::Max];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }
}

/// Expression tree. Literals are always non-negative; negation is explicit.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(NamedConst),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        position: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("function `{name}` at position {position} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        position: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("expression `{expr}` is not finite at t = {t}")]
pub struct EvalError {
    pub expr: String,
    pub t: f64,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        parser.expect_end()?;
        Ok(expr)
    }

    /// Raw evaluation; may produce non-finite values.
    pub fn eval_raw(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Const(c) => c.value(),
            Expr::Neg(e) => -e.eval_raw(t),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval_raw(t), r.eval_raw(t));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                }
            }
            Expr::Call(f, args) => match f {
                Func::Sin => args[0].eval_raw(t).sin(),
                Func::Cos => args[0].eval_raw(t).cos(),
                Func::Exp => args[0].eval_raw(t).exp(),
                Func::Abs => args[0].eval_raw(t).abs(),
                Func::Min => args[0].eval_raw(t).min(args[1].eval_raw(t)),
                Func::Max => args[0].eval_raw(t).max(args[1].eval_raw(t)),
            },
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = self.eval_raw(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError {
                expr: self.to_string(),
                t,
            })
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(e) => e.depends_on_t(),
            Expr::Bin(_, l, r) => l.depends_on_t() || r.depends_on_t(),
            Expr::Call(_, args) => args.iter().any(Expr::depends_on_t),
        }
    }

    /// Value of a variable-free expression.
    pub fn constant_value(&self) -> Option<f64> {
        if self.depends_on_t() {
            return None;
        }
        let v = self.eval_raw(0.0);
        v.is_finite().then_some(v)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => f.write_str("t"),
            Expr::Const(NamedConst::Pi) => f.write_str("pi"),
            Expr::Const(NamedConst::E) => f.write_str("e"),
            Expr::Neg(e) => {
                if e.precedence() < 3 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // Right operands of equal precedence need parentheses to keep
                // left associativity on re-parse.
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' | '-' | '*' | '/' => {
                out.push((Tok::Op(c), start));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent only when digits follow, so `2e` stays `2` then `e`.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    position: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number".into()],
                })?;
                out.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    position: start,
                    found: format!("character `{ch}`"),
                    expected: vec!["expression".into()],
                });
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let (tok, position) = self.peek();
        ParseError::Syntax {
            position: *position,
            found: tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek().0 {
            Tok::End => Ok(()),
            _ => Err(self.unexpected(&["operator", "end of input"])),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().0 == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        const EXPECTED: &[&str] = &["number", "`t`", "constant", "function call", "`(`", "`-`"];
        match self.peek().clone() {
            (Tok::Num(v), _) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            (Tok::LParen, _) => {
                self.bump();
                let e = self.expr()?;
                if self.peek().0 != Tok::RParen {
                    return Err(self.unexpected(&["`)`"]));
                }
                self.bump();
                Ok(e)
            }
            (Tok::Ident(name), position) => {
                self.bump();
                match name.as_str() {
                    "t" => return Ok(Expr::Var),
                    "pi" => return Ok(Expr::Const(NamedConst::Pi)),
                    "e" => return Ok(Expr::Const(NamedConst::E)),
                    _ => {}
                }
                let func = Func::lookup(&name)
                    .ok_or(ParseError::UnknownIdentifier { name: name.clone(), position })?;
                if self.peek().0 != Tok::LParen {
                    return Err(self.unexpected(&["`(`"]));
                }
                self.bump();
                let mut args = vec![self.expr()?];
                while self.peek().0 == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                if self.peek().0 != Tok::RParen {
                    return Err(self.unexpected(&["`,`", "`)`"]));
                }
                self.bump();
                if args.len() != func.arity() {
                    return Err(ParseError::Arity {
                        name,
                        position,
                        expected: func.arity(),
                        got: args.len(),
                    });
                }
                Ok(Expr::Call(func, args))
            }
            _ => Err(self.unexpected(EXPECTED)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval_raw(0.0), -4.0);
        let e = Expr::parse("8 / 4 / 2").unwrap();
        assert_eq!(e.eval_raw(0.0), 1.0);
        let e = Expr::parse("2 + 3 * t").unwrap();
        assert_eq!(e.eval_raw(2.0), 8.0);
        let e = Expr::parse("-t * 2").unwrap();
        assert_eq!(e.eval_raw(3.0), -6.0);
        let e = Expr::parse("max(t, 1) + min(-t, 2*pi)").unwrap();
        assert_eq!(e.eval_raw(3.0), 3.0 - 3.0);
    }

    #[test]
    fn coefficient_expressions() {
        let e = Expr::parse("2 + 0.5*sin(t)").unwrap();
        assert!(e.depends_on_t());
        assert!((e.eval_raw(std::f64::consts::FRAC_PI_2) - 2.5).abs() < 1e-15);
        assert_eq!(Expr::parse("3").unwrap().constant_value(), Some(3.0));
        assert_eq!(Expr::parse("exp(0) * e").unwrap().constant_value(), Some(std::f64::consts::E));
        assert_eq!(Expr::parse("1.5e-3").unwrap(), Expr::Num(1.5e-3));
        // `2e` is a literal followed by the constant e, which is a syntax error
        assert!(Expr::parse("2e").is_err());
    }

    #[test]
    fn errors_carry_position() {
        match Expr::parse("1 + * 2") {
            Err(ParseError::Syntax { position, expected, .. }) => {
                assert_eq!(position, 4);
                assert!(!expected.is_empty());
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            Expr::parse("2 * foo(t)"),
            Err(ParseError::UnknownIdentifier { name: "foo".into(), position: 4 })
        );
        assert!(matches!(Expr::parse("max(t)"), Err(ParseError::Arity { expected: 2, got: 1, .. })));
        assert!(matches!(Expr::parse("sin(t, 1)"), Err(ParseError::Arity { .. })));
        assert!(matches!(Expr::parse("(t"), Err(ParseError::Syntax { position: 2, .. })));
        assert!(matches!(Expr::parse(""), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expr::parse("t $ 2"), Err(ParseError::Syntax { position: 2, .. })));
    }

    #[test]
    fn eval_reports_non_finite() {
        let e = Expr::parse("1 / (t - 1)").unwrap();
        assert!(e.eval(1.0).is_err());
        assert!(e.eval(2.0).is_ok());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..100000).prop_map(|n| Expr::Num(n as f64 / 64.0)),
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Var),
            Just(Expr::Const(NamedConst::Pi)),
            Just(Expr::Const(NamedConst::E)),
        ];
        leaf.prop_recursive(5, 48, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
                (0usize..4, inner.clone())
                    .prop_map(|(i, a)| Expr::Call(Func::ALL[i], vec![a])),
                (prop_oneof![Just(Func::Min), Just(Func::Max)], inner.clone(), inner)
                    .prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e, "printed: {}", printed);
        }
    }
}
