//! A small arithmetic expression language for user-supplied `A(Ψ)`, `B(r²)`
//! and bivariate `p₀,₀(Ψ, r²)`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' args ')' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus and associates to the right, so
//! `-2^2 = -4` and `2^3^2 = 512`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub const VARIABLES: [&str; 2] = ["Psi", "r2"];

/// Byte range plus 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Pow,
    Abs,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Exp, Func::Log, Func::Sqrt, Func::Pow, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Abs => "abs",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parsed expression tree. Equality is structural and ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Self {
            kind,
            span: Span::default(),
        }
    }

    /// Identifiers referenced anywhere in the tree.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_identifiers(&self, out: &mut Vec<String>) {
        match &self.kind {
            ExprKind::Number(_) => {}
            ExprKind::Ident(name) => out.push(name.clone()),
            ExprKind::Neg(e) => e.collect_identifiers(out),
            ExprKind::Binary(_, a, b) => {
                a.collect_identifiers(out);
                b.collect_identifiers(out);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.collect_identifiers(out)),
        }
    }

    pub fn uses(&self, name: &str) -> bool {
        self.identifiers().iter().any(|n| n == name)
    }

    /// Substitutes parameter values, leaving `Psi` and `r2` free.
    pub fn compile(&self, params: &BTreeMap<String, f64>) -> Result<CompiledExpr, EvalError> {
        Ok(CompiledExpr {
            root: lower(self, params)?,
        })
    }
}

/// Fully parenthesized; `parse_expression(&e.to_string())` reproduces `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Number(v) => write!(f, "{v:?}"),
            ExprKind::Ident(name) => f.write_str(name),
            ExprKind::Neg(e) => write!(f, "(-{e})"),
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprKind::Call(func, args) => {
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

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found:?}")]
    UnexpectedToken { expected: &'static str, found: String },
    #[error("expected {expected}, found end of input")]
    UnexpectedEnd { expected: &'static str },
    #[error("invalid number literal {0:?}")]
    InvalidNumber(String),
    #[error("unknown identifier {name:?}; allowed: {}", allowed.join(", "))]
    UnknownIdentifier { name: String, allowed: Vec<String> },
    #[error("unknown function {name:?}; allowed: {}", allowed.join(", "))]
    UnknownFunction { name: String, allowed: Vec<String> },
    #[error("{func} takes {expected} argument(s), got {found}")]
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
}

impl PartialEq for ParseError {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{base}^{exponent} is not a real number")]
    Power { base: f64, exponent: f64 },
    #[error("parameter {0:?} has no value")]
    MissingParameter(String),
}

#[derive(Debug, Clone, Error)]
#[error("{span}: {kind}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub span: Span,
}

impl PartialEq for EvalError {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Parses an expression over `Psi` and `r2` only.
pub fn parse_expression(source: &str) -> Result<Expr, ParseError> {
    parse_with_parameters(source, &[])
}

/// Parses an expression over `Psi`, `r2` and the named parameters.
pub fn parse_with_parameters(source: &str, params: &[&str]) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut allowed: Vec<String> = VARIABLES.iter().map(|s| s.to_string()).collect();
    allowed.extend(params.iter().map(|s| s.to_string()));
    let mut parser = Parser {
        tokens,
        pos: 0,
        allowed,
        end: span_at(source, source.len(), source.len()),
    };
    let expr = parser.sum()?;
    match parser.peek() {
        None => Ok(expr),
        Some(tok) => Err(ParseError {
            kind: ParseErrorKind::UnexpectedToken {
                expected: "operator or end of input",
                found: tok.text(),
            },
            span: tok.span,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

impl Token {
    fn text(&self) -> String {
        match &self.tok {
            Tok::Number(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
        }
    }
}

fn span_at(source: &str, start: usize, end: usize) -> Span {
    let before = &source[..start];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let column = source[line_start..start].chars().count() + 1;
    Span {
        start,
        end,
        line,
        column,
    }
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = source[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
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
            let text = &source[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                span: span_at(source, start, i),
            })?;
            Tok::Number(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(source[start..i].to_string())
        } else {
            i += c.len_utf8();
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnexpectedChar(c),
                        span: span_at(source, start, i),
                    })
                }
            }
        };
        tokens.push(Token {
            tok,
            span: span_at(source, start, i),
        });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    allowed: Vec<String>,
    end: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, expected: &'static str) -> Result<Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(ParseError {
                kind: ParseErrorKind::UnexpectedEnd { expected },
                span: self.end,
            }),
        }
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<(char, Span)> {
        match self.peek() {
            Some(Token { tok: Tok::Op(c), span }) if ops.contains(c) => {
                let out = (*c, *span);
                self.pos += 1;
                Some(out)
            }
            _ => None,
        }
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<Span, ParseError> {
        let t = self.next(expected)?;
        if t.tok == want {
            Ok(t.span)
        } else {
            Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken {
                    expected,
                    found: t.text(),
                },
                span: t.span,
            })
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Some((c, _)) = self.eat_op(&['+', '-']) {
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((c, _)) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((_, span)) = self.eat_op(&['-']) {
            let inner = self.unary()?;
            let span = join(span, inner.span);
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.next("number, identifier or '('")?;
        match t.tok {
            Tok::Number(v) => Ok(Expr {
                kind: ExprKind::Number(v),
                span: t.span,
            }),
            Tok::LParen => {
                let inner = self.sum()?;
                let close = self.expect(Tok::RParen, "')'")?;
                Ok(Expr {
                    kind: inner.kind,
                    span: join(t.span, close),
                })
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Some(Token { tok: Tok::LParen, .. })) {
                    self.pos += 1;
                    return self.call(name, t.span);
                }
                if !self.allowed.contains(&name) {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier {
                            name,
                            allowed: self.allowed.clone(),
                        },
                        span: t.span,
                    });
                }
                Ok(Expr {
                    kind: ExprKind::Ident(name),
                    span: t.span,
                })
            }
            _ => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken {
                    expected: "number, identifier or '('",
                    found: t.text(),
                },
                span: t.span,
            }),
        }
    }

    fn call(&mut self, name: String, span: Span) -> Result<Expr, ParseError> {
        let func = Func::from_name(&name).ok_or_else(|| ParseError {
            kind: ParseErrorKind::UnknownFunction {
                name: name.clone(),
                allowed: Func::ALL.iter().map(|f| f.name().to_string()).collect(),
            },
            span,
        })?;
        let mut args = Vec::new();
        if matches!(self.peek(), Some(Token { tok: Tok::RParen, .. })) {
            self.pos += 1;
        } else {
            loop {
                args.push(self.sum()?);
                let t = self.next("',' or ')'")?;
                match t.tok {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnexpectedToken {
                                expected: "',' or ')'",
                                found: t.text(),
                            },
                            span: t.span,
                        })
                    }
                }
            }
        }
        let end = self.tokens[self.pos - 1].span;
        if args.len() != func.arity() {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    func: func.name(),
                    expected: func.arity(),
                    found: args.len(),
                },
                span: join(span, end),
            });
        }
        Ok(Expr {
            kind: ExprKind::Call(func, args),
            span: join(span, end),
        })
    }
}

fn join(a: Span, b: Span) -> Span {
    Span { end: b.end, ..a }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = join(lhs.span, rhs.span);
    Expr {
        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        span,
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Psi,
    R2,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>, Span),
    Call(Func, Vec<Node>, Span),
}

/// An expression with parameters substituted, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
}

impl CompiledExpr {
    pub fn evaluate(&self, psi: f64, r2: f64) -> Result<f64, EvalError> {
        eval_node(&self.root, psi, r2)
    }

    /// Evaluation with errors mapped to NaN, for use inside quadratures that
    /// report non-finite samples themselves.
    pub fn evaluate_or_nan(&self, psi: f64, r2: f64) -> f64 {
        self.evaluate(psi, r2).unwrap_or(f64::NAN)
    }
}

fn lower(e: &Expr, params: &BTreeMap<String, f64>) -> Result<Node, EvalError> {
    Ok(match &e.kind {
        ExprKind::Number(v) => Node::Const(*v),
        ExprKind::Ident(name) => match name.as_str() {
            "Psi" => Node::Psi,
            "r2" => Node::R2,
            _ => Node::Const(*params.get(name).ok_or_else(|| EvalError {
                kind: EvalErrorKind::MissingParameter(name.clone()),
                span: e.span,
            })?),
        },
        ExprKind::Neg(inner) => Node::Neg(Box::new(lower(inner, params)?)),
        ExprKind::Binary(op, a, b) => Node::Binary(
            *op,
            Box::new(lower(a, params)?),
            Box::new(lower(b, params)?),
            e.span,
        ),
        ExprKind::Call(f, args) => Node::Call(
            *f,
            args.iter().map(|a| lower(a, params)).collect::<Result<_, _>>()?,
            e.span,
        ),
    })
}

fn eval_node(node: &Node, psi: f64, r2: f64) -> Result<f64, EvalError> {
    match node {
        Node::Const(v) => Ok(*v),
        Node::Psi => Ok(psi),
        Node::R2 => Ok(r2),
        Node::Neg(inner) => Ok(-eval_node(inner, psi, r2)?),
        Node::Binary(op, a, b, span) => {
            let x = eval_node(a, psi, r2)?;
            let y = eval_node(b, psi, r2)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div if y == 0.0 => Err(EvalError {
                    kind: EvalErrorKind::DivisionByZero,
                    span: *span,
                }),
                BinOp::Div => Ok(x / y),
                BinOp::Pow => power(x, y, *span),
            }
        }
        Node::Call(func, args, span) => {
            let x = eval_node(&args[0], psi, r2)?;
            let domain = |func| EvalError {
                kind: EvalErrorKind::Domain { func, arg: x },
                span: *span,
            };
            match func {
                Func::Exp => Ok(x.exp()),
                Func::Log if x < 0.0 || x.is_nan() => Err(domain("log")),
                Func::Log => Ok(x.ln()),
                Func::Sqrt if x < 0.0 || x.is_nan() => Err(domain("sqrt")),
                Func::Sqrt => Ok(x.sqrt()),
                Func::Abs => Ok(x.abs()),
                Func::Pow => power(x, eval_node(&args[1], psi, r2)?, *span),
            }
        }
    }
}

fn power(base: f64, exponent: f64, span: Span) -> Result<f64, EvalError> {
    let v = if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    };
    if v.is_nan() && !base.is_nan() && !exponent.is_nan() {
        return Err(EvalError {
            kind: EvalErrorKind::Power { base, exponent },
            span,
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, psi: f64, r2: f64) -> f64 {
        parse_expression(src)
            .unwrap()
            .compile(&BTreeMap::new())
            .unwrap()
            .evaluate(psi, r2)
            .unwrap()
    }

    #[test]
    fn examples() {
        let v = eval("Psi^5 * 3/(4*3.141592653589793)", 1.0, 0.0);
        assert!((v - 3.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-16);
        assert_eq!(eval("r2^(-0.25)", 0.0, 16.0), 0.5);
        let err = parse_expression("log(Psi").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnexpectedEnd { .. }));
        assert_eq!(err.span.column, 8);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(eval("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(eval("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(eval("pow(2, 10) + abs(-3) + sqrt(4)", 0.0, 0.0), 1029.0);
        assert_eq!(eval("Psi*(1-Psi)", 0.25, 0.0), 0.1875);
        assert_eq!(eval("1.5e2 + 2E-1", 0.0, 0.0), 150.2);
    }

    #[test]
    fn unknown_identifier_lists_allowed_names() {
        let err = parse_expression("Psi + x").unwrap_err();
        match &err.kind {
            ParseErrorKind::UnknownIdentifier { name, allowed } => {
                assert_eq!(name, "x");
                assert!(allowed.contains(&"Psi".to_string()));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!((err.span.line, err.span.column), (1, 7));
        assert!(err.to_string().contains("Psi, r2"));
        assert!(parse_with_parameters("Psi + x", &["x"]).is_ok());
    }

    #[test]
    fn function_errors() {
        assert!(matches!(
            parse_expression("pow(Psi)").unwrap_err().kind,
            ParseErrorKind::Arity { expected: 2, found: 1, .. }
        ));
        assert!(matches!(
            parse_expression("sin(Psi)").unwrap_err().kind,
            ParseErrorKind::UnknownFunction { .. }
        ));
        assert!(matches!(
            parse_expression("Psi $ 2").unwrap_err().kind,
            ParseErrorKind::UnexpectedChar('$')
        ));
        assert!(parse_expression("Psi 2").is_err());
        assert!(parse_expression("").is_err());
    }

    #[test]
    fn multiline_span() {
        let err = parse_expression("Psi +\n  * 2").unwrap_err();
        assert_eq!((err.span.line, err.span.column), (2, 3));
    }

    #[test]
    fn evaluation_errors_carry_spans() {
        let c = parse_expression("1 + log(Psi - 2)").unwrap().compile(&BTreeMap::new()).unwrap();
        let err = c.evaluate(1.0, 1.0).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::Domain { func: "log", .. }));
        assert_eq!(err.span.column, 5);
        let c = parse_expression("1/(Psi-1)").unwrap().compile(&BTreeMap::new()).unwrap();
        assert_eq!(c.evaluate(1.0, 0.0).unwrap_err().kind, EvalErrorKind::DivisionByZero);
        let c = parse_expression("(Psi - 2)^0.5").unwrap().compile(&BTreeMap::new()).unwrap();
        assert!(matches!(c.evaluate(1.0, 0.0).unwrap_err().kind, EvalErrorKind::Power { .. }));
        assert!(c.evaluate_or_nan(1.0, 0.0).is_nan());
    }

    #[test]
    fn parameters_are_substituted() {
        let e = parse_with_parameters("k * Psi^n", &["k", "n"]).unwrap();
        assert_eq!(e.identifiers(), vec!["Psi", "k", "n"]);
        let mut p = BTreeMap::new();
        p.insert("k".to_string(), 2.0);
        assert!(matches!(
            e.compile(&p).unwrap_err().kind,
            EvalErrorKind::MissingParameter(_)
        ));
        p.insert("n".to_string(), 3.0);
        assert_eq!(e.compile(&p).unwrap().evaluate(2.0, 0.0).unwrap(), 16.0);
    }

    #[test]
    fn printing_round_trips() {
        for src in ["-2^2", "2^3^2", "Psi*(1-Psi)", "pow(r2, -0.75) * exp(-Psi) / 3", "1e-7 + --Psi"] {
            let e = parse_expression(src).unwrap();
            let again = parse_expression(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
