//! Scalar expression language.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-"? power
//! power  := atom ("^" integer)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Identifiers are `[a-z][a-z0-9_]*` and must belong to the expression's
//! [`Vocabulary`]. Variables are resolved to vocabulary slots at parse time,
//! so evaluation is a plain tree walk over a slot array in any [`Scalar`].

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, EvalError, ParseError, ParseErrorKind};
use crate::scalar::{Dual, HyperDual, Scalar};

/// Named set of variables an expression may reference, in slot order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    label: String,
    names: Vec<String>,
}

impl Vocabulary {
    pub fn new(label: &str, names: &[&str]) -> Self {
        Self {
            label: label.to_owned(),
            names: names.iter().map(|s| (*s).to_owned()).collect(),
        }
    }

    /// `(x, vm, vp, w, t, xi)`: arguments of a finite-difference operator.
    pub fn scheme() -> Self {
        Self::new("scheme", &["x", "vm", "vp", "w", "t", "xi"])
    }

    /// `(x, v, w, t)`: arguments of a continuous second-order operator.
    pub fn continuous() -> Self {
        Self::new("continuous", &["x", "v", "w", "t"])
    }

    /// `(x, v, t, xi)`: arguments of one half of a Lagrangian couple.
    pub fn lagrangian() -> Self {
        Self::new("lagrangian", &["x", "v", "t", "xi"])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Functions accepted by the parser. All are smooth on their domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }
}

/// Expression tree. Variables are slot indices into a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Call(Func, Box<Node>),
}

#[allow(clippy::should_implement_trait)]
impl Node {
    pub fn add(a: Node, b: Node) -> Node {
        Node::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Node, b: Node) -> Node {
        Node::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Node, b: Node) -> Node {
        Node::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: Node, b: Node) -> Node {
        Node::Div(Box::new(a), Box::new(b))
    }
    pub fn neg(a: Node) -> Node {
        Node::Neg(Box::new(a))
    }
    pub fn pow(a: Node, n: u32) -> Node {
        Node::Pow(Box::new(a), n)
    }
    pub fn call(f: Func, a: Node) -> Node {
        Node::Call(f, Box::new(a))
    }

    fn visit_vars(&self, f: &mut impl FnMut(usize)) {
        match self {
            Node::Const(_) => {}
            Node::Var(s) => f(*s),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.visit_vars(f),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Replaces every variable by the node returned from `f`.
    pub fn map_vars(&self, f: &impl Fn(usize) -> Node) -> Node {
        match self {
            Node::Const(c) => Node::Const(*c),
            Node::Var(s) => f(*s),
            Node::Neg(a) => Node::neg(a.map_vars(f)),
            Node::Pow(a, n) => Node::pow(a.map_vars(f), *n),
            Node::Call(func, a) => Node::call(*func, a.map_vars(f)),
            Node::Add(a, b) => Node::add(a.map_vars(f), b.map_vars(f)),
            Node::Sub(a, b) => Node::sub(a.map_vars(f), b.map_vars(f)),
            Node::Mul(a, b) => Node::mul(a.map_vars(f), b.map_vars(f)),
            Node::Div(a, b) => Node::div(a.map_vars(f), b.map_vars(f)),
        }
    }

    fn eval<S: Scalar>(&self, slots: &[S], vocab: &Vocabulary) -> Result<S, EvalError> {
        Ok(match self {
            Node::Const(c) => S::constant(*c),
            Node::Var(s) => slots[*s].clone(),
            Node::Neg(a) => -a.eval(slots, vocab)?,
            Node::Add(a, b) => a.eval(slots, vocab)? + b.eval(slots, vocab)?,
            Node::Sub(a, b) => a.eval(slots, vocab)? - b.eval(slots, vocab)?,
            Node::Mul(a, b) => a.eval(slots, vocab)? * b.eval(slots, vocab)?,
            Node::Div(a, b) => {
                let num = a.eval(slots, vocab)?;
                let den = b.eval(slots, vocab)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero {
                        node: self.display(vocab).to_string(),
                    });
                }
                num / den
            }
            Node::Pow(a, n) => a.eval(slots, vocab)?.powi(*n),
            Node::Call(func, a) => {
                let arg = a.eval(slots, vocab)?;
                let v = arg.value();
                let bad = match func {
                    Func::Log => v <= 0.0 || v.is_nan(),
                    Func::Sqrt => v < 0.0 || (S::DIFFERENTIATES && v == 0.0) || v.is_nan(),
                    _ => false,
                };
                if bad {
                    return Err(EvalError::Domain {
                        func: func.name(),
                        arg: v,
                        node: self.display(vocab).to_string(),
                    });
                }
                match func {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Tan => arg.tan(),
                    Func::Exp => arg.exp(),
                    Func::Log => arg.ln(),
                    Func::Sqrt => arg.sqrt(),
                    Func::Tanh => arg.tanh(),
                }
            }
        })
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> NodeDisplay<'a> {
        NodeDisplay { node: self, vocab }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            Node::Const(c) if c.is_sign_negative() => 3,
            Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
        }
    }
}

/// Prints a node with the minimal parentheses the grammar needs to reparse it
/// to the same tree.
pub struct NodeDisplay<'a> {
    node: &'a Node,
    vocab: &'a Vocabulary,
}

impl NodeDisplay<'_> {
    fn child(&self, node: &Node, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = NodeDisplay {
            node,
            vocab: self.vocab,
        };
        if node.precedence() < min_prec {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }
}

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::Const(c) if c.is_sign_negative() => write!(f, "-{:?}", -c),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(s) => match self.vocab.names.get(*s) {
                Some(name) => f.write_str(name),
                None => write!(f, "${s}"),
            },
            Node::Neg(a) => {
                f.write_str("-")?;
                self.child(a, 4, f)
            }
            Node::Add(a, b) => {
                self.child(a, 1, f)?;
                f.write_str(" + ")?;
                self.child(b, 2, f)
            }
            Node::Sub(a, b) => {
                self.child(a, 1, f)?;
                f.write_str(" - ")?;
                self.child(b, 2, f)
            }
            Node::Mul(a, b) => {
                self.child(a, 2, f)?;
                f.write_str("*")?;
                self.child(b, 3, f)
            }
            Node::Div(a, b) => {
                self.child(a, 2, f)?;
                f.write_str("/")?;
                self.child(b, 3, f)
            }
            Node::Pow(a, n) => {
                self.child(a, 5, f)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.child(a, 0, f)?;
                f.write_str(")")
            }
        }
    }
}

/// A parsed expression bound to a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vocab: Vocabulary,
    free: Vec<usize>,
}

impl Expr {
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Expr, ParseError> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            vocab,
        };
        let root = parser.expr()?;
        if !matches!(parser.peek().kind, Tok::End) {
            return Err(parser.unexpected(&["operator", "end of input"]));
        }
        Ok(Expr::from_node(root, vocab.clone()))
    }

    /// Wraps a tree built by hand. Panics if it references a slot the
    /// vocabulary does not have.
    pub fn from_node(root: Node, vocab: Vocabulary) -> Expr {
        let mut free = Vec::new();
        root.visit_vars(&mut |s| {
            assert!(s < vocab.len(), "slot {s} outside vocabulary");
            if !free.contains(&s) {
                free.push(s);
            }
        });
        free.sort_unstable();
        Expr { root, vocab, free }
    }

    pub fn constant(c: f64, vocab: Vocabulary) -> Expr {
        Expr::from_node(Node::Const(c), vocab)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Referenced variables, in vocabulary order.
    pub fn free_vars(&self) -> impl Iterator<Item = &str> + '_ {
        self.free.iter().map(|&s| self.vocab.names[s].as_str())
    }

    pub fn depends_on_slot(&self, slot: usize) -> bool {
        self.free.contains(&slot)
    }

    /// Evaluates with one value per vocabulary slot.
    ///
    /// Panics if `slots` is shorter than the vocabulary.
    pub fn eval_slots<S: Scalar>(&self, slots: &[S]) -> Result<S, EvalError> {
        assert!(slots.len() >= self.vocab.len());
        self.root.eval(slots, &self.vocab)
    }

    fn slots_from(&self, bindings: &[(&str, f64)]) -> Result<Vec<f64>, EvalError> {
        let mut slots = vec![f64::NAN; self.vocab.len()];
        let mut bound = vec![false; self.vocab.len()];
        for (name, value) in bindings {
            if let Some(s) = self.vocab.slot(name) {
                slots[s] = *value;
                bound[s] = true;
            }
        }
        if let Some(&s) = self.free.iter().find(|&&s| !bound[s]) {
            return Err(EvalError::MissingBinding(self.vocab.names[s].clone()));
        }
        Ok(slots)
    }

    fn slot_of(&self, name: &str) -> Result<usize, EvalError> {
        self.vocab
            .slot(name)
            .ok_or_else(|| EvalError::UnknownVariable(name.to_owned()))
    }

    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, Error> {
        let slots = self.slots_from(bindings)?;
        Ok(self.eval_slots(&slots)?)
    }

    /// Value and exact first partials with respect to each name in `wrt`,
    /// one seeded forward pass per direction.
    pub fn eval_grad(&self, bindings: &[(&str, f64)], wrt: &[&str]) -> Result<(f64, Vec<f64>), Error> {
        let slots = self.slots_from(bindings)?;
        let mut value = self.eval_slots(&slots)?;
        let mut grad = Vec::with_capacity(wrt.len());
        for name in wrt {
            let seed = self.slot_of(name)?;
            let duals: Vec<Dual<1>> = slots
                .iter()
                .enumerate()
                .map(|(s, &v)| {
                    if s == seed {
                        Dual::variable(v, 0)
                    } else {
                        Dual::constant(v)
                    }
                })
                .collect();
            let d = self.eval_slots(&duals)?;
            value = d.value;
            grad.push(d.partials[0]);
        }
        Ok((value, grad))
    }

    /// Mixed second partial `∂²e/∂a∂b` by hyper-dual evaluation. The seed
    /// order is canonical, so swapping `a` and `b` runs the same computation.
    pub fn eval_mixed2(&self, bindings: &[(&str, f64)], a: &str, b: &str) -> Result<f64, Error> {
        let slots = self.slots_from(bindings)?;
        let (sa, sb) = (self.slot_of(a)?, self.slot_of(b)?);
        let (s1, s2) = if sa <= sb { (sa, sb) } else { (sb, sa) };
        let hd: Vec<HyperDual> = slots
            .iter()
            .enumerate()
            .map(|(s, &v)| HyperDual::new(v, (s == s1) as u8 as f64, (s == s2) as u8 as f64, 0.0))
            .collect();
        Ok(self.eval_slots(&hd)?.e12)
    }

    /// Rebinds the tree into `target`, replacing each variable slot of this
    /// expression by the node `map` returns (expressed in `target` slots).
    pub fn substitute(&self, target: Vocabulary, map: impl Fn(usize) -> Node) -> Expr {
        Expr::from_node(self.root.map_vars(&map), target)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root.display(&self.vocab))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    text: String,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut integer = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integer = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integer = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::Syntax {
                        expected: vec!["number"],
                        found: lit.to_owned(),
                    },
                    token: out.len() + 1,
                    offset: start,
                })?;
                out.push(Token {
                    kind: Tok::Num { value, integer },
                    text: lit.to_owned(),
                    offset: start,
                });
                continue;
            }
            b'a'..=b'z' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_lowercase() || bytes[i].is_ascii_digit() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let name = &text[start..i];
                out.push(Token {
                    kind: Tok::Ident(name.to_owned()),
                    text: name.to_owned(),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    kind: ParseErrorKind::InvalidChar(ch),
                    token: out.len() + 1,
                    offset: start,
                });
            }
        };
        i += 1;
        out.push(Token {
            kind,
            text: text[start..i].to_owned(),
            offset: start,
        });
    }
    out.push(Token {
        kind: Tok::End,
        text: "end of input".to_owned(),
        offset: text.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vocab: &'a Vocabulary,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            token: self.pos + 1,
            offset: self.peek().offset,
        }
    }

    fn unexpected(&self, expected: &[&'static str]) -> ParseError {
        self.error_here(ParseErrorKind::Syntax {
            expected: expected.to_vec(),
            found: self.peek().text.clone(),
        })
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().kind {
                Tok::Star => {
                    self.bump();
                    lhs = Node::mul(lhs, self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek().kind, Tok::Minus) {
            self.bump();
            return Ok(Node::neg(self.power(false)?));
        }
        self.power(true)
    }

    fn power(&mut self, allow_minus: bool) -> Result<Node, ParseError> {
        let base = self.atom(allow_minus)?;
        if !matches!(self.peek().kind, Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        match self.peek().kind {
            Tok::Num { value, integer: true } if value <= u32::MAX as f64 => {
                self.bump();
                Ok(Node::pow(base, value as u32))
            }
            Tok::Num { .. } | Tok::Minus => {
                let text = self.peek().text.clone();
                Err(self.error_here(ParseErrorKind::BadExponent(text)))
            }
            _ => Err(self.unexpected(&["integer exponent"])),
        }
    }

    fn atom(&mut self, allow_minus: bool) -> Result<Node, ParseError> {
        match self.peek().kind.clone() {
            Tok::Num { value, .. } => {
                self.bump();
                Ok(Node::Const(value))
            }
            Tok::Ident(name) => {
                let ident_pos = self.pos;
                self.bump();
                if matches!(self.peek().kind, Tok::LParen) {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownFunction(name),
                            token: ident_pos + 1,
                            offset: self.tokens[ident_pos].offset,
                        });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::call(func, arg));
                }
                match self.vocab.slot(&name) {
                    Some(s) => Ok(Node::Var(s)),
                    None => Err(ParseError {
                        kind: ParseErrorKind::UnknownVariable(name),
                        token: ident_pos + 1,
                        offset: self.tokens[ident_pos].offset,
                    }),
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => {
                if allow_minus {
                    Err(self.unexpected(&["number", "identifier", "\"(\"", "\"-\""]))
                } else {
                    Err(self.unexpected(&["number", "identifier", "\"(\""]))
                }
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek().kind, Tok::RParen) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&["\")\"", "operator"]))
        }
    }
}
