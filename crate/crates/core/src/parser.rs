//! Model and family description files.
//!
//! ```text
//! model iwasawa
//! n 3
//! d f1 = 0
//! d f2 = 0
//! d f3 = f1^f2
//! ```
//!
//! `f<k>` is ω^k and `g<k>` its conjugate. Coefficients are rationals, `i`, the declared
//! family parameter, and sums/products of those. Optional lines:
//! `metric g<i><j> = <coeff>`, `param t`, and `deform f<k> = <combination of g's>`
//! (the fibre coframe is ω^k plus that combination).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::forms::{anti_gen, bidegree_of, holo_gen, monomial_name, wedge_sign, Bidegree, Form, Monomial};
use crate::linalg::Matrix;
use crate::model::{validate_model, LieComplexModel};
use crate::scalar::{fmt_gq, fmt_q, gq_from_q, gq_i, Gq, Q};

/// Stable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Lexical,
    Syntax,
    UnknownSymbol,
    UndeclaredParameter,
    DuplicateGenerator,
    MissingGenerator,
    IndexOutOfRange,
    Integrability,
    DSquared,
    WrongDegree,
    Metric,
    Header,
    FamilyInModel,
}

impl ErrorCode {
    pub fn code(&self) -> &'static str {
        match self {
            ErrorCode::Lexical => "E100",
            ErrorCode::Syntax => "E101",
            ErrorCode::UnknownSymbol => "E102",
            ErrorCode::UndeclaredParameter => "E103",
            ErrorCode::DuplicateGenerator => "E200",
            ErrorCode::MissingGenerator => "E201",
            ErrorCode::IndexOutOfRange => "E202",
            ErrorCode::Integrability => "E203",
            ErrorCode::DSquared => "E204",
            ErrorCode::WrongDegree => "E205",
            ErrorCode::Metric => "E206",
            ErrorCode::Header => "E207",
            ErrorCode::FamilyInModel => "E208",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: [{}] {message}", code.code())]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub code: ErrorCode,
    pub message: String,
}

fn err<T>(line: usize, col: usize, code: ErrorCode, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, code, message: message.into() })
}

/// Polynomial in the family parameter, coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly(pub Vec<Gq>);

impl Poly {
    pub fn constant(c: Gq) -> Self {
        Poly(vec![c]).trimmed()
    }

    pub fn param() -> Self {
        Poly(vec![Gq::zero(), Gq::one()])
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().skip(1).all(|c| c.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        let len = self.0.len().max(o.0.len());
        Poly(
            (0..len)
                .map(|k| {
                    self.0.get(k).cloned().unwrap_or_else(Gq::zero) + o.0.get(k).cloned().unwrap_or_else(Gq::zero)
                })
                .collect(),
        )
        .trimmed()
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![Gq::zero(); self.0.len() + o.0.len() - 1];
        for (a, x) in self.0.iter().enumerate() {
            for (b, y) in o.0.iter().enumerate() {
                out[a + b] = out[a + b].clone() + x.clone() * y.clone();
            }
        }
        Poly(out).trimmed()
    }

    pub fn eval(&self, t: &Q) -> Gq {
        let t = gq_from_q(t.clone());
        let mut acc = Gq::zero();
        for c in self.0.iter().rev() {
            acc = acc * t.clone() + c.clone();
        }
        acc
    }

    fn to_text(&self, param: &str) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => coeff_text(c),
                1 => format!("{}*{param}", coeff_text(c)),
                _ => format!("{}*{param}^{k}", coeff_text(c)),
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            format!("({})", parts.join(" + "))
        }
    }
}

/// A coefficient in the file grammar: `a/b` or `(a/b + c/d i)`.
pub fn coeff_text(c: &Gq) -> String {
    if c.im.is_zero() {
        return fmt_q(&c.re);
    }
    if c.re.is_zero() {
        return format!("({} i)", fmt_q(&c.im));
    }
    if c.im < Q::zero() {
        format!("({} - {} i)", fmt_q(&c.re), fmt_q(&-c.im.clone()))
    } else {
        format!("({} + {} i)", fmt_q(&c.re), fmt_q(&c.im))
    }
}

/// Form whose coefficients are polynomials in the parameter.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PolyForm(pub BTreeMap<Monomial, Poly>);

impl PolyForm {
    fn scalar(p: Poly) -> Self {
        let mut m = BTreeMap::new();
        if !p.is_zero() {
            m.insert(0, p);
        }
        PolyForm(m)
    }

    fn add(&self, o: &Self) -> Self {
        let mut out = self.0.clone();
        for (m, p) in &o.0 {
            let v = out.remove(m).unwrap_or_default().add(p);
            if !v.is_zero() {
                out.insert(*m, v);
            }
        }
        PolyForm(out)
    }

    fn neg(&self) -> Self {
        let minus = Poly::constant(-Gq::one());
        PolyForm(self.0.iter().map(|(m, p)| (*m, p.mul(&minus))).collect())
    }

    fn wedge(&self, o: &Self) -> Self {
        let mut out = PolyForm::default();
        for (a, pa) in &self.0 {
            for (b, pb) in &o.0 {
                if let Some(s) = wedge_sign(*a, *b) {
                    let mut p = pa.mul(pb);
                    if s < 0 {
                        p = p.mul(&Poly::constant(-Gq::one()));
                    }
                    out = out.add(&PolyForm([(a | b, p)].into_iter().collect()));
                }
            }
        }
        out
    }

    pub fn eval(&self, n: usize, t: &Q) -> Form<Gq> {
        let mut f = Form::zero(n);
        for (m, p) in &self.0 {
            f.add_term(*m, p.eval(t));
        }
        f
    }

    pub fn is_constant(&self) -> bool {
        self.0.values().all(|p| p.is_constant())
    }

    fn degrees(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.0.keys().map(|m| m.count_ones() as usize).collect();
        v.dedup();
        v
    }

    fn to_text(&self, n: usize, param: &str) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(m, p)| {
                let c = if p.is_constant() { coeff_text(&p.eval(&Q::zero())) } else { p.to_text(param) };
                if *m == 0 {
                    c
                } else if c == "1" {
                    monomial_name(*m, n)
                } else {
                    format!("{c}*{}", monomial_name(*m, n))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// Parsed contents of a model or family file, before evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub name: String,
    pub n: usize,
    pub param: Option<String>,
    /// dω^k (k = 1..n).
    pub structure: Vec<PolyForm>,
    /// η^k − ω^k for the fibre coframe; empty forms when absent.
    pub deform: Vec<PolyForm>,
    pub metric: Option<Matrix<Gq>>,
    /// Line number of each structure equation, for error reporting.
    pub lines: Vec<usize>,
}

impl ModelDocument {
    pub fn uses_param(&self) -> bool {
        self.structure.iter().chain(&self.deform).any(|f| !f.is_constant())
    }

    pub fn has_deform(&self) -> bool {
        self.deform.iter().any(|f| !f.0.is_empty())
    }

    /// Canonical text in the file grammar.
    pub fn to_text(&self) -> String {
        let param = self.param.clone().unwrap_or_else(|| "t".into());
        let mut out = format!("model {}\nn {}\n", self.name, self.n);
        if let Some(p) = &self.param {
            out += &format!("param {p}\n");
        }
        for (k, f) in self.structure.iter().enumerate() {
            out += &format!("d f{} = {}\n", k + 1, f.to_text(self.n, &param));
        }
        for (k, f) in self.deform.iter().enumerate() {
            if !f.0.is_empty() {
                out += &format!("deform f{} = {}\n", k + 1, f.to_text(self.n, &param));
            }
        }
        if let Some(g) = &self.metric {
            for i in 0..self.n {
                for j in i..self.n {
                    let v = g.get(i, j);
                    let default = if i == j { Gq::one() } else { Gq::zero() };
                    if *v != default {
                        out += &format!("metric g{}{} = {}\n", i + 1, j + 1, coeff_text(v));
                    }
                }
            }
        }
        out
    }

    /// Structure equations evaluated at `t`, as a (possibly invalid) model in the fibre frame
    /// when there is no deform block.
    pub fn structure_at(&self, t: &Q) -> Vec<Form<Gq>> {
        self.structure.iter().map(|f| f.eval(self.n, t)).collect()
    }
}

pub fn serialize_model(model: &LieComplexModel) -> String {
    let doc = ModelDocument {
        name: model.name().to_string(),
        n: model.n(),
        param: None,
        structure: model
            .structure()
            .iter()
            .map(|f| PolyForm(f.terms().iter().map(|(m, c)| (*m, Poly::constant(c.clone()))).collect()))
            .collect(),
        deform: vec![PolyForm::default(); model.n()],
        metric: model.metric().cloned(),
        lines: vec![0; model.n()],
    };
    doc.to_text()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Slash,
    Star,
    Caret,
    Plus,
    Minus,
    LParen,
    RParen,
    Eq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Int(v) => write!(f, "{v}"),
            Tok::Slash => write!(f, "/"),
            Tok::Star => write!(f, "*"),
            Tok::Caret => write!(f, "^"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Eq => write!(f, "="),
        }
    }
}

fn lex(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            ' ' | '\t' | '\r' => i += 1,
            '/' | '*' | '^' | '+' | '-' | '(' | ')' | '=' => {
                out.push((
                    match c {
                        '/' => Tok::Slash,
                        '*' => Tok::Star,
                        '^' => Tok::Caret,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Eq,
                    },
                    col,
                ));
                i += 1;
            }
            d if d.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push((Tok::Int(s.parse().expect("digits")), col));
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            other => return err(lineno, col, ErrorCode::Lexical, format!("unexpected character '{other}'")),
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    n: usize,
    param: Option<&'a str>,
    end_col: usize,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<PolyForm, ParseError> {
        let mut acc = match self.peek() {
            Some(Tok::Minus) => {
                self.next();
                self.product()?.neg()
            }
            Some(Tok::Plus) => {
                self.next();
                self.product()?
            }
            _ => self.product()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    acc = acc.add(&self.product()?);
                }
                Some(Tok::Minus) => {
                    self.next();
                    acc = acc.add(&self.product()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<PolyForm, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    acc = acc.wedge(&self.factor()?);
                }
                Some(Tok::Int(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    acc = acc.wedge(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn generator(&self, name: &str, col: usize) -> Result<Option<Monomial>, ParseError> {
        let (kind, idx) = name.split_at(1);
        if (kind != "f" && kind != "g") || idx.is_empty() || !idx.chars().all(|c| c.is_ascii_digit()) {
            return Ok(None);
        }
        let k: usize = idx.parse().unwrap_or(0);
        if k == 0 || k > self.n {
            return err(self.line, col, ErrorCode::IndexOutOfRange, format!("generator {name} out of range 1..{}", self.n));
        }
        Ok(Some(if kind == "f" { holo_gen(k - 1) } else { anti_gen(k - 1, self.n) }))
    }

    fn factor(&mut self) -> Result<PolyForm, ParseError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Minus) => Ok(self.factor()?.neg()),
            Some(Tok::LParen) => {
                let inner = self.sum()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => err(self.line, self.col(), ErrorCode::Syntax, "expected ')'"),
                }
            }
            Some(Tok::Int(a)) => {
                let mut v = Q::from_integer(a);
                if self.peek() == Some(&Tok::Slash) {
                    self.next();
                    let dcol = self.col();
                    match self.next() {
                        Some(Tok::Int(b)) if !b.is_zero() => v /= Q::from_integer(b),
                        _ => return err(self.line, dcol, ErrorCode::Syntax, "expected nonzero denominator"),
                    }
                }
                Ok(PolyForm::scalar(Poly::constant(gq_from_q(v))))
            }
            Some(Tok::Ident(name)) => {
                if name == "i" {
                    return Ok(PolyForm::scalar(Poly::constant(gq_i())));
                }
                if Some(name.as_str()) == self.param {
                    let mut p = Poly::param();
                    if self.peek() == Some(&Tok::Caret) {
                        self.next();
                        let ecol = self.col();
                        match self.next() {
                            Some(Tok::Int(e)) => {
                                let e: usize = e.try_into().map_err(|_| ParseError {
                                    line: self.line,
                                    col: ecol,
                                    code: ErrorCode::Syntax,
                                    message: "exponent too large".into(),
                                })?;
                                p = (1..e).fold(Poly::param(), |acc, _| acc.mul(&Poly::param()));
                                if e == 0 {
                                    p = Poly::constant(Gq::one());
                                }
                            }
                            _ => return err(self.line, ecol, ErrorCode::Syntax, "expected integer exponent"),
                        }
                    }
                    return Ok(PolyForm::scalar(p));
                }
                let Some(first) = self.generator(&name, col)? else {
                    if name.len() == 1 && name.chars().all(|c| c.is_ascii_lowercase()) {
                        return err(self.line, col, ErrorCode::UndeclaredParameter, format!("undeclared parameter '{name}'"));
                    }
                    return err(self.line, col, ErrorCode::UnknownSymbol, format!("unknown symbol '{name}'"));
                };
                let mut acc = PolyForm([(first, Poly::constant(Gq::one()))].into_iter().collect());
                while self.peek() == Some(&Tok::Caret) {
                    self.next();
                    let gcol = self.col();
                    let m = match self.next() {
                        Some(Tok::Ident(g)) => self.generator(&g, gcol)?,
                        _ => None,
                    };
                    let Some(m) = m else {
                        return err(self.line, gcol, ErrorCode::Syntax, "expected generator after '^'");
                    };
                    acc = acc.wedge(&PolyForm([(m, Poly::constant(Gq::one()))].into_iter().collect()));
                }
                Ok(acc)
            }
            Some(t) => err(self.line, col, ErrorCode::Syntax, format!("unexpected '{t}'")),
            None => err(self.line, col, ErrorCode::Syntax, "unexpected end of line"),
        }
    }
}

fn parse_expr(
    toks: &[(Tok, usize)],
    line: usize,
    n: usize,
    param: Option<&str>,
    end_col: usize,
) -> Result<PolyForm, ParseError> {
    if toks.is_empty() {
        return err(line, end_col, ErrorCode::Syntax, "empty expression");
    }
    let mut p = ExprParser { toks, pos: 0, line, n, param, end_col };
    let v = p.sum()?;
    if p.pos < toks.len() {
        let (t, c) = &toks[p.pos];
        return err(line, *c, ErrorCode::Syntax, format!("unexpected '{t}'"));
    }
    Ok(v)
}

fn generator_index(name: &str, n: usize, line: usize, col: usize) -> Result<usize, ParseError> {
    let Some(idx) = name.strip_prefix('f') else {
        return err(line, col, ErrorCode::Syntax, format!("expected f<k>, found '{name}'"));
    };
    match idx.parse::<usize>() {
        Ok(k) if (1..=n).contains(&k) => Ok(k),
        Ok(_) => err(line, col, ErrorCode::IndexOutOfRange, format!("generator {name} out of range 1..{n}")),
        Err(_) => err(line, col, ErrorCode::Syntax, format!("expected f<k>, found '{name}'")),
    }
}

/// Parse a model or family file without validating the structure.
pub fn parse_document(text: &str) -> Result<ModelDocument, ParseError> {
    let lines: Vec<(usize, &str, Vec<(Tok, usize)>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| lex(l, i + 1).map(|t| (i + 1, l, t)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|(_, _, t)| !t.is_empty())
        .collect();

    let mut name = None;
    let mut n = None;
    let mut param: Option<String> = None;
    for (ln, raw, toks) in &lines {
        match &toks[0].0 {
            Tok::Ident(k) if k == "model" => {
                let rest = raw.split_once("model").map(|x| x.1).unwrap_or("");
                let rest = rest.split('#').next().unwrap_or("").trim();
                if rest.is_empty() {
                    return err(*ln, toks[0].1, ErrorCode::Header, "model name missing");
                }
                if name.is_some() {
                    return err(*ln, toks[0].1, ErrorCode::Header, "duplicate model line");
                }
                name = Some(rest.to_string());
            }
            Tok::Ident(k) if k == "n" => match toks.get(1) {
                Some((Tok::Int(v), c)) if toks.len() == 2 => {
                    let v: usize = v.try_into().unwrap_or(0);
                    if !(1..=6).contains(&v) {
                        return err(*ln, *c, ErrorCode::Header, "n must be between 1 and 6");
                    }
                    if n.is_some() {
                        return err(*ln, toks[0].1, ErrorCode::Header, "duplicate n line");
                    }
                    n = Some(v);
                }
                _ => return err(*ln, toks[0].1, ErrorCode::Header, "expected 'n <int>'"),
            },
            Tok::Ident(k) if k == "param" => match toks.get(1) {
                Some((Tok::Ident(p), c)) if toks.len() == 2 => {
                    if p == "i" || p.starts_with('f') || p.starts_with('g') {
                        return err(*ln, *c, ErrorCode::Header, format!("'{p}' cannot be a parameter name"));
                    }
                    param = Some(p.clone());
                }
                _ => return err(*ln, toks[0].1, ErrorCode::Header, "expected 'param <name>'"),
            },
            _ => {}
        }
    }
    // Infer n from the largest generator index when the header omits it.
    let n = match n {
        Some(v) => v,
        None => {
            let mut m = 0;
            for (_, _, toks) in &lines {
                for (t, _) in toks {
                    if let Tok::Ident(s) = t {
                        if let Some(rest) = s.strip_prefix('f').or_else(|| s.strip_prefix('g')) {
                            if let Ok(k) = rest.parse::<usize>() {
                                if s.starts_with('f') || s.len() <= 2 {
                                    m = m.max(k);
                                }
                            }
                        }
                    }
                }
            }
            if m == 0 {
                return err(1, 1, ErrorCode::Header, "missing 'n <int>' line");
            }
            m
        }
    };

    let mut structure: Vec<Option<PolyForm>> = vec![None; n];
    let mut deform = vec![PolyForm::default(); n];
    let mut line_of = vec![0; n];
    let mut metric_entries: BTreeMap<(usize, usize), (Gq, usize, usize)> = BTreeMap::new();
    for (ln, raw, toks) in &lines {
        let end_col = raw.chars().count() + 1;
        let (head, hcol) = (&toks[0].0, toks[0].1);
        let Tok::Ident(head) = head else {
            return err(*ln, hcol, ErrorCode::Syntax, "expected a keyword");
        };
        match head.as_str() {
            "model" | "n" | "param" => {}
            "d" | "deform" => {
                let (gname, gcol) = match toks.get(1) {
                    Some((Tok::Ident(g), c)) => (g.clone(), *c),
                    _ => return err(*ln, hcol + head.len() + 1, ErrorCode::Syntax, "expected generator f<k>"),
                };
                let k = generator_index(&gname, n, *ln, gcol)?;
                match toks.get(2) {
                    Some((Tok::Eq, _)) => {}
                    Some((_, c)) => return err(*ln, *c, ErrorCode::Syntax, "expected '='"),
                    None => return err(*ln, end_col, ErrorCode::Syntax, "expected '='"),
                }
                let rhs_col = toks.get(3).map_or(end_col, |t| t.1);
                let value = parse_expr(&toks[3..], *ln, n, param.as_deref(), end_col)?;
                if head == "d" {
                    if structure[k - 1].is_some() {
                        return err(*ln, gcol, ErrorCode::DuplicateGenerator, format!("duplicate structure line for {gname}"));
                    }
                    if value.degrees().iter().any(|d| *d != 2) {
                        return err(*ln, rhs_col, ErrorCode::WrongDegree, format!("d {gname} must be a 2-form"));
                    }
                    if value.0.keys().any(|m| bidegree_of(*m, n) == Bidegree::new(0, 2)) {
                        return err(*ln, rhs_col, ErrorCode::Integrability, format!("d {gname} has a (0,2) component"));
                    }
                    structure[k - 1] = Some(value);
                    line_of[k - 1] = *ln;
                } else {
                    if !deform[k - 1].0.is_empty() {
                        return err(*ln, gcol, ErrorCode::DuplicateGenerator, format!("duplicate deform line for {gname}"));
                    }
                    if value.0.keys().any(|m| bidegree_of(*m, n) != Bidegree::new(0, 1)) {
                        return err(*ln, rhs_col, ErrorCode::WrongDegree, "deform terms must be multiples of g<k>");
                    }
                    deform[k - 1] = value;
                }
            }
            "metric" => {
                let (ename, ecol) = match toks.get(1) {
                    Some((Tok::Ident(g), c)) => (g.clone(), *c),
                    _ => return err(*ln, hcol, ErrorCode::Metric, "expected metric entry g<i><j>"),
                };
                let digits = ename.strip_prefix('g').unwrap_or("");
                let idx: Vec<usize> = digits.chars().filter_map(|c| c.to_digit(10)).map(|d| d as usize).collect();
                if idx.len() != 2 || digits.len() != 2 {
                    return err(*ln, ecol, ErrorCode::Metric, format!("bad metric entry '{ename}'"));
                }
                let (i, j) = (idx[0], idx[1]);
                if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                    return err(*ln, ecol, ErrorCode::IndexOutOfRange, format!("metric index out of range in '{ename}'"));
                }
                if toks.get(2).map(|t| &t.0) != Some(&Tok::Eq) {
                    return err(*ln, toks.get(2).map_or(end_col, |t| t.1), ErrorCode::Syntax, "expected '='");
                }
                let value = parse_expr(&toks[3..], *ln, n, None, end_col)?;
                if value.0.keys().any(|m| *m != 0) || !value.is_constant() {
                    return err(*ln, toks[3].1, ErrorCode::Metric, "metric entries must be constants");
                }
                let v = value.eval(n, &Q::zero()).coeff(0);
                if metric_entries.insert((i - 1, j - 1), (v, *ln, ecol)).is_some() {
                    return err(*ln, ecol, ErrorCode::Metric, format!("duplicate metric entry '{ename}'"));
                }
            }
            other => return err(*ln, hcol, ErrorCode::Syntax, format!("unknown keyword '{other}'")),
        }
    }
    for (k, s) in structure.iter().enumerate() {
        if s.is_none() {
            let last = lines.last().map_or(1, |l| l.0);
            return err(last, 1, ErrorCode::MissingGenerator, format!("no structure line for f{}", k + 1));
        }
    }
    let metric = if metric_entries.is_empty() {
        None
    } else {
        let mut g = Matrix::<Gq>::identity(n);
        for (&(i, j), (v, ln, col)) in &metric_entries {
            if i == j && !v.im.is_zero() {
                return err(*ln, *col, ErrorCode::Metric, "diagonal metric entries must be real");
            }
            if let Some((w, _, _)) = metric_entries.get(&(j, i)) {
                if *w != crate::scalar::Scalar::conj(v) {
                    return err(*ln, *col, ErrorCode::Metric, "metric entries are not Hermitian");
                }
            }
            g.set(i, j, v.clone());
            g.set(j, i, crate::scalar::Scalar::conj(v));
        }
        Some(g)
    };
    Ok(ModelDocument {
        name: name.unwrap_or_else(|| "unnamed".into()),
        n,
        param,
        structure: structure.into_iter().map(|s| s.expect("checked")).collect(),
        deform,
        metric,
        lines: line_of,
    })
}

/// Parse a standalone metric file (only `metric` lines and comments) for dimension `n`.
pub fn parse_metric(text: &str, n: usize) -> Result<Matrix<Gq>, ParseError> {
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() && !body.starts_with("metric") {
            return err(i + 1, 1, ErrorCode::Syntax, "metric files may only contain metric lines");
        }
    }
    // metric lines keep their own line numbers; the header goes after them
    let mut src = text.to_string();
    if !src.ends_with('\n') {
        src.push('\n');
    }
    src += &format!("n {n}\n");
    for k in 1..=n {
        src += &format!("d f{k} = 0\n");
    }
    let doc = parse_document(&src)?;
    Ok(doc.metric.unwrap_or_else(|| Matrix::identity(n)))
}

/// Parse a fixed model and validate it.
pub fn parse_model(text: &str) -> Result<LieComplexModel, ParseError> {
    let doc = parse_document(text)?;
    if doc.uses_param() || doc.has_deform() {
        return err(1, 1, ErrorCode::FamilyInModel, "document describes a family; use parse_family");
    }
    model_from_document(&doc, &Q::zero())
}

/// Evaluate the structure lines at `t` and validate, reporting the first bad generator.
pub fn model_from_document(doc: &ModelDocument, t: &Q) -> Result<LieComplexModel, ParseError> {
    let model = LieComplexModel::unchecked(&doc.name, doc.n, doc.structure_at(t));
    let report = validate_model(&model);
    if let Some(v) = report.violations.first() {
        let code = if v.constraint.contains("(0,2)") { ErrorCode::Integrability } else { ErrorCode::DSquared };
        return err(doc.lines[v.generator - 1], 1, code, format!("f{}: {}", v.generator, v.constraint));
    }
    Ok(match &doc.metric {
        Some(g) => model.with_metric(g.clone()),
        None => model,
    })
}

/// Exact text of a form in the file grammar, e.g. `f1^g2 + (1/2 i)*f3^g3`.
pub fn form_text(f: &Form<Gq>) -> String {
    PolyForm(f.terms().iter().map(|(m, c)| (*m, Poly::constant(c.clone()))).collect()).to_text(f.n(), "t")
}

/// Exact string of a Gaussian rational, as used in reports.
pub fn exact(c: &Gq) -> String {
    fmt_gq(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gq, q};

    #[test]
    fn parses_iwasawa() {
        let m = parse_model("model iwasawa\nn 3\nd f1 = 0\nd f2 = 0\nd f3 = f1^f2").unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.a_coeff(3, 1, 2), Gq::one());
    }

    #[test]
    fn parses_coefficients() {
        let m = parse_model("model x\nn 3\nd f1 = 0\nd f2 = 0\nd f3 = (1/2 + 3/4 i)*f1^f2 - 2/3 i f1^g1").unwrap();
        assert_eq!(m.a_coeff(3, 1, 2), gq(q(1, 2), q(3, 4)));
        assert_eq!(m.b_coeff(3, 1, 1), gq(q(0, 1), q(-2, 3)));
    }

    #[test]
    fn rejects_02_component() {
        let e = parse_model("d f1 = g1^g2").unwrap_err();
        assert_eq!(e.code, ErrorCode::Integrability);
        assert_eq!((e.line, e.col), (1, 8));
        assert!(e.message.contains("(0,2) component"));
    }

    #[test]
    fn error_locations() {
        let e = parse_model("model x\nn 2\nd f1 = 0\nd f2 = f1 ^ h1").unwrap_err();
        assert_eq!((e.line, e.col, e.code), (4, 13, ErrorCode::Syntax));
        let e = parse_model("model x\nn 2\nd f1 = 0\nd f3 = 0").unwrap_err();
        assert_eq!(e.code, ErrorCode::IndexOutOfRange);
        let e = parse_model("model x\nn 2\nd f1 = 0\nd f1 = 0").unwrap_err();
        assert_eq!(e.code, ErrorCode::DuplicateGenerator);
        let e = parse_model("model x\nn 2\nd f1 = t*f1^g1\nd f2 = 0").unwrap_err();
        assert_eq!((e.code, e.line, e.col), (ErrorCode::UndeclaredParameter, 3, 8));
        let e = parse_model("model x\nn 2\nd f1 = 0 $").unwrap_err();
        assert_eq!((e.code, e.col), (ErrorCode::Lexical, 10));
    }

    #[test]
    fn text_roundtrip() {
        let src = "model y\nn 3\nparam t\nd f1 = 0\nd f2 = 0\nd f3 = f1^f2 + (1/3 - 2 i)*t^2*f1^g2\ndeform f1 = t*g1\nmetric g12 = (1/2 i)\n";
        let doc = parse_document(src).unwrap();
        let again = parse_document(&doc.to_text()).unwrap();
        assert_eq!(doc.structure, again.structure);
        assert_eq!(doc.deform, again.deform);
        assert_eq!(doc.metric, again.metric);
    }

    #[test]
    fn metric_files() {
        let g = parse_metric("# non-diagonal\nmetric g13 = 1/2 + 1/3 i\nmetric g22 = 2\n", 3).unwrap();
        assert_eq!(g.get(2, 0), &gq(q(1, 2), q(-1, 3)));
        assert_eq!(g.get(1, 1), &gq(q(2, 1), q(0, 1)));
        let e = parse_metric("metric g11 = 1\nd f1 = 0\n", 2).unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_metric("metric g14 = 1\n", 3).unwrap_err();
        assert_eq!((e.line, e.code), (1, ErrorCode::IndexOutOfRange));
    }
}
