//! Index sets of polyhomogeneous expansions: canonical generators,
//! addition, extended union and the error-composition recursion.
//!
//! Exponents are exact: a rational plus a nonnegative multiple of the
//! symbol ν₀. Set algebra treats ν₀ as generic (no accidental coincidences
//! between different multiples); [`IndexSet::specialize`] substitutes a
//! rational value when coincidences matter.

use crate::error::{Error, Result};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    /// multiple of ν₀ (compared first so canonical order groups by class)
    pub nu: u32,
    pub rat: Rational,
}

impl Exponent {
    pub fn new(rat: Rational, nu: u32) -> Self {
        Exponent { nu, rat }
    }

    pub fn int(v: i64) -> Self {
        Exponent { nu: 0, rat: Rational::from_integer(v) }
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Exponent { nu: 0, rat: Rational::new(p, q) }
    }

    /// m·ν₀ + r
    pub fn nu0(m: u32, r: Rational) -> Self {
        Exponent { nu: m, rat: r }
    }

    pub fn eval(&self, nu0: Nu0) -> Rational {
        self.rat + nu0.0 * Rational::from_integer(self.nu as i64)
    }

    /// `other` is this exponent plus a nonnegative integer.
    fn reaches(&self, other: &Exponent) -> bool {
        if self.nu != other.nu {
            return false;
        }
        let d = other.rat - self.rat;
        d.is_integer() && !d.is_negative()
    }

    pub fn parse(s: &str) -> Result<Self> {
        parse_exponent(s)
    }
}

impl std::ops::Add for Exponent {
    type Output = Exponent;
    fn add(self, o: Exponent) -> Exponent {
        Exponent { nu: self.nu + o.nu, rat: self.rat + o.rat }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.nu {
            0 => write!(f, "{}", self.rat),
            m => {
                if m == 1 {
                    write!(f, "nu0")?;
                } else {
                    write!(f, "{m}nu0")?;
                }
                if self.rat.is_positive() {
                    write!(f, "+{}", self.rat)
                } else if self.rat.is_negative() {
                    write!(f, "{}", self.rat)
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A concrete rational value of ν₀.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nu0(pub Rational);

impl Nu0 {
    pub fn from_f64(v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("nu0 must be positive, got {v}")));
        }
        let r = Rational::approximate_float(v).ok_or_else(|| Error::Domain(format!("nu0 = {v} has no rational form")))?;
        Ok(Nu0(r))
    }
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Closed under (β, j) ⇒ (β+1, j) and (β, j) ⇒ (β, j−1); stored as the
/// antichain of generators, sorted. No generators is the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexSet {
    gens: Vec<(Exponent, u32)>,
}

fn implies(g: &(Exponent, u32), h: &(Exponent, u32)) -> bool {
    g.0.reaches(&h.0) && h.1 <= g.1
}

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet { gens: Vec::new() };

    pub fn closure_reduce<I: IntoIterator<Item = (Exponent, u32)>>(raw: I) -> Self {
        let all: BTreeSet<(Exponent, u32)> = raw.into_iter().collect();
        let mut keep: Vec<(Exponent, u32)> =
            all.iter().filter(|g| !all.iter().any(|h| h != *g && implies(h, g))).copied().collect();
        keep.sort();
        IndexSet { gens: keep }
    }

    /// The set {(q + k, 0) : k ≥ 0}.
    pub fn shorthand(q: Exponent) -> Self {
        IndexSet { gens: vec![(q, 0)] }
    }

    pub fn generators(&self) -> &[(Exponent, u32)] {
        &self.gens
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn contains(&self, beta: Exponent, j: u32) -> bool {
        self.gens.iter().any(|g| implies(g, &(beta, j)))
    }

    /// None stands for +∞ (empty set).
    pub fn min_e(&self, nu0: Nu0) -> Option<Rational> {
        self.gens.iter().map(|g| g.0.eval(nu0)).min()
    }

    pub fn min_f64(&self, nu0: Nu0) -> f64 {
        self.min_e(nu0).map_or(f64::INFINITY, to_f64)
    }

    /// E ≥ q: every β ≥ q, and β = q only with j = 0.
    pub fn geq(&self, q: Rational, nu0: Nu0) -> bool {
        self.gens.iter().all(|(b, j)| match b.eval(nu0).cmp(&q) {
            Ordering::Greater => true,
            Ordering::Equal => *j == 0,
            Ordering::Less => false,
        })
    }

    /// E ≥ q + ε for some ε > 0.
    pub fn gt(&self, q: Rational, nu0: Nu0) -> bool {
        self.gens.iter().all(|(b, _)| b.eval(nu0) > q)
    }

    pub fn is_integral(&self) -> bool {
        self.gens.iter().all(|(b, _)| b.nu == 0 && b.rat.is_integer())
    }

    /// E = E′ + (α, 0) with E′ integral.
    pub fn is_one_step(&self) -> bool {
        match self.gens.first() {
            None => true,
            Some((a, _)) => self.gens.iter().all(|(b, _)| b.nu == a.nu && (b.rat - a.rat).is_integer()),
        }
    }

    /// `self` ⊇ `base` and every (β, j) in `self` has (β, 0) in `base`.
    pub fn is_log_extension(&self, base: &IndexSet) -> bool {
        base.gens.iter().all(|g| self.contains(g.0, g.1)) && self.gens.iter().all(|g| base.contains(g.0, 0))
    }

    pub fn add(&self, other: &IndexSet) -> IndexSet {
        IndexSet::closure_reduce(self.gens.iter().flat_map(|a| other.gens.iter().map(move |b| (a.0 + b.0, a.1 + b.1))))
    }

    /// E1 ∪ E2 plus (β, j1+j2+1) wherever both contain β; two generators
    /// with integer-separated exponents first meet at the larger one.
    pub fn ext_union(&self, other: &IndexSet) -> IndexSet {
        let mut raw: Vec<(Exponent, u32)> = self.gens.iter().chain(&other.gens).copied().collect();
        for a in &self.gens {
            for b in &other.gens {
                if a.0.nu == b.0.nu && (a.0.rat - b.0.rat).is_integer() {
                    raw.push((a.0.max(b.0), a.1 + b.1 + 1));
                }
            }
        }
        IndexSet::closure_reduce(raw)
    }

    /// Substitutes ν₀, so coincident exponents merge.
    pub fn specialize(&self, nu0: Nu0) -> IndexSet {
        IndexSet::closure_reduce(self.gens.iter().map(|(b, j)| (Exponent::new(b.eval(nu0), 0), *j)))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gens.is_empty() {
            return write!(f, "empty");
        }
        write!(f, "[")?;
        for (i, (b, j)) in self.gens.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "({b}, {j})")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    Zf,
    Bf0,
    Lb0,
    Rb0,
    Bf,
    Lb,
    Rb,
}

impl Face {
    pub const ALL: [Face; 7] = [Face::Zf, Face::Bf0, Face::Lb0, Face::Rb0, Face::Bf, Face::Lb, Face::Rb];

    pub fn name(self) -> &'static str {
        match self {
            Face::Zf => "zf",
            Face::Bf0 => "bf0",
            Face::Lb0 => "lb0",
            Face::Rb0 => "rb0",
            Face::Bf => "bf",
            Face::Lb => "lb",
            Face::Rb => "rb",
        }
    }

    pub fn parse(s: &str) -> Result<Face> {
        Face::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown face '{s}'")))
    }
}

/// One index set per boundary face; absent faces are empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexFamily {
    sets: [IndexSet; 7],
}

impl IndexFamily {
    pub fn get(&self, face: Face) -> &IndexSet {
        &self.sets[face as usize]
    }

    pub fn set(&mut self, face: Face, e: IndexSet) {
        self.sets[face as usize] = e;
    }

    pub fn with(mut self, face: Face, e: IndexSet) -> Self {
        self.set(face, e);
        self
    }

    pub fn mins(&self, nu0: Nu0) -> [(Face, f64); 7] {
        Face::ALL.map(|f| (f, self.get(f).min_f64(nu0)))
    }
}

impl std::ops::Index<Face> for IndexFamily {
    type Output = IndexSet;
    fn index(&self, face: Face) -> &IndexSet {
        self.get(face)
    }
}

impl fmt::Display for IndexFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, face) in Face::ALL.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", face.name(), self.get(*face))?;
        }
        write!(f, "}}")
    }
}

/// One step of the composition recursion on the four λ = 0 faces, all
/// faces updated from the old `current`; the positive-λ faces carry over.
pub fn compose_step(current: &IndexFamily, base: &IndexFamily) -> IndexFamily {
    use Face::*;
    let c = |f| current.get(f);
    let b = |f| base.get(f);
    let mut next = current.clone();
    next.set(Lb0, c(Lb0).add(b(Zf)).ext_union(&c(Bf0).add(b(Lb0))));
    next.set(Rb0, c(Rb0).add(b(Bf0)).ext_union(&c(Zf).add(b(Rb0))));
    next.set(Bf0, c(Bf0).add(b(Bf0)).ext_union(&c(Lb0).add(b(Rb0))));
    next.set(Zf, c(Zf).add(b(Zf)).ext_union(&c(Rb0).add(b(Lb0))));
    next
}

fn check_ledger_args(nu0: f64, n: usize) -> Result<()> {
    if !(nu0 > 0.0 && nu0.is_finite()) {
        return Err(Error::Hypothesis { nu0_sq: nu0 * nu0 });
    }
    if n < 2 {
        return Err(Error::Config(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

/// Leading orders of the low-energy resolvent kernel: zf 0, bf0 −2,
/// lb0 = rb0 = ν₀−1, lb = rb = (n−1)/2, bf empty.
pub fn mainres_ledger(nu0: f64, n: usize) -> Result<IndexFamily> {
    check_ledger_args(nu0, n)?;
    let half = Exponent::ratio(n as i64 - 1, 2);
    Ok(IndexFamily::default()
        .with(Face::Zf, IndexSet::shorthand(Exponent::int(0)))
        .with(Face::Bf0, IndexSet::shorthand(Exponent::int(-2)))
        .with(Face::Lb0, IndexSet::shorthand(Exponent::nu0(1, Rational::from_integer(-1))))
        .with(Face::Rb0, IndexSet::shorthand(Exponent::nu0(1, Rational::from_integer(-1))))
        .with(Face::Lb, IndexSet::shorthand(half))
        .with(Face::Rb, IndexSet::shorthand(half)))
}

/// The spectral-measure ledger: the λ = 0 faces of the resolvent ledger
/// raised by one, with the zf floor at 2ν₀+1.
pub fn spectral_ledger(nu0: f64, n: usize) -> Result<IndexFamily> {
    let res = mainres_ledger(nu0, n)?;
    let one = Exponent::int(1);
    let mut out = res.clone();
    for f in [Face::Bf0, Face::Lb0, Face::Rb0] {
        out.set(f, res.get(f).add(&IndexSet::shorthand(one)));
    }
    out.set(Face::Zf, IndexSet::shorthand(Exponent::nu0(2, Rational::from_integer(1))));
    Ok(out)
}

// ---- prefix grammar ----

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Set(IndexSet),
    Family(IndexFamily),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Set(s) => write!(f, "{s}"),
            Value::Family(m) => write!(f, "{m}"),
        }
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad number '{s}'"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.parse().map_err(|_| bad())?;
        let q: i64 = q.parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|c| c.is_ascii_digit()) || fp.len() > 15 {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip: i64 = if ip.is_empty() || ip == "-" { 0 } else { ip.parse().map_err(|_| bad())? };
        let den = 10i64.pow(fp.len() as u32);
        let frac = Rational::new(fp.parse::<i64>().map_err(|_| bad())?, den);
        let whole = Rational::from_integer(ip.abs());
        let v = whole + frac;
        return Ok(if neg { -v } else { v });
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

/// Sums of terms like `2`, `-1/2`, `0.3`, `nu0`, `2nu0`, `2*nu0`.
fn parse_exponent(s: &str) -> Result<Exponent> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty exponent".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = s.as_bytes();
    for i in 1..bytes.len() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e' {
            terms.push(&s[start..i]);
            start = i;
        }
    }
    terms.push(&s[start..]);
    let mut out = Exponent::int(0);
    for t in terms {
        let (neg, body) = match t.as_bytes()[0] {
            b'+' => (false, &t[1..]),
            b'-' => (true, &t[1..]),
            _ => (false, t),
        };
        if let Some(coef) = body.strip_suffix("nu0") {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let m: u32 = if coef.is_empty() {
                1
            } else {
                coef.parse().map_err(|_| Error::Parse(format!("bad nu0 multiple '{t}'")))?
            };
            if neg {
                return Err(Error::Parse(format!("negative multiples of nu0 are not supported: '{s}'")));
            }
            out.nu += m;
        } else {
            let r = parse_rational(body)?;
            out.rat += if neg { -r } else { r };
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(char),
    Close(char),
    Comma,
    Colon,
    Atom(String),
}

fn tokenize(s: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<Tok>| {
        if !cur.is_empty() {
            out.push(Tok::Atom(std::mem::take(cur)));
        }
    };
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Open(c));
            }
            ')' | ']' | '}' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Close(c));
            }
            ',' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Comma);
            }
            ':' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Colon);
            }
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            c => cur.push(c),
        }
    }
    flush(&mut cur, &mut out);
    out
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn next(&mut self) -> Result<Tok> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        let got = self.next()?;
        if got == t {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {t:?}, found {got:?}")))
        }
    }

    fn atom(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Atom(a) => Ok(a),
            t => Err(Error::Parse(format!("expected a word, found {t:?}"))),
        }
    }

    fn value(&mut self) -> Result<Value> {
        match self.next()? {
            Tok::Atom(a) if a == "empty" => Ok(Value::Set(IndexSet::EMPTY)),
            Tok::Atom(a) => Ok(Value::Set(IndexSet::shorthand(parse_exponent(&a)?))),
            Tok::Open('[') => self.set_literal().map(Value::Set),
            Tok::Open('{') => self.family_literal().map(Value::Family),
            Tok::Open('(') => self.call(),
            t => Err(Error::Parse(format!("unexpected {t:?}"))),
        }
    }

    fn set(&mut self) -> Result<IndexSet> {
        match self.value()? {
            Value::Set(s) => Ok(s),
            Value::Family(_) => Err(Error::Parse("expected an index set, found a family".into())),
        }
    }

    fn family(&mut self) -> Result<IndexFamily> {
        match self.value()? {
            Value::Family(f) => Ok(f),
            Value::Set(_) => Err(Error::Parse("expected an index family, found a set".into())),
        }
    }

    fn set_literal(&mut self) -> Result<IndexSet> {
        let mut raw = Vec::new();
        loop {
            match self.next()? {
                Tok::Close(']') => break,
                Tok::Comma => continue,
                Tok::Open('(') => {
                    let b = parse_exponent(&self.atom()?)?;
                    self.expect(Tok::Comma)?;
                    let j: u32 = self.atom()?.parse().map_err(|_| Error::Parse("log power must be a nonnegative integer".into()))?;
                    self.expect(Tok::Close(')'))?;
                    raw.push((b, j));
                }
                t => return Err(Error::Parse(format!("unexpected {t:?} in set literal"))),
            }
        }
        Ok(IndexSet::closure_reduce(raw))
    }

    fn family_literal(&mut self) -> Result<IndexFamily> {
        let mut fam = IndexFamily::default();
        loop {
            match self.next()? {
                Tok::Close('}') => break,
                Tok::Comma => continue,
                Tok::Atom(name) => {
                    let face = Face::parse(&name)?;
                    self.expect(Tok::Colon)?;
                    let s = self.set()?;
                    fam.set(face, s);
                }
                t => return Err(Error::Parse(format!("unexpected {t:?} in family literal"))),
            }
        }
        Ok(fam)
    }

    fn call(&mut self) -> Result<Value> {
        let op = self.atom()?;
        let v = match op.as_str() {
            "add" => {
                let a = self.set()?;
                let b = self.set()?;
                Value::Set(a.add(&b))
            }
            "extu" => {
                let a = self.set()?;
                let b = self.set()?;
                Value::Set(a.ext_union(&b))
            }
            "step" => {
                let cur = self.family()?;
                let base = if matches!(self.peek(), Some(Tok::Close(')'))) { cur.clone() } else { self.family()? };
                Value::Family(compose_step(&cur, &base))
            }
            "mainres" | "spectral" => {
                let n: usize = self.atom()?.parse().map_err(|_| Error::Parse("dimension must be an integer".into()))?;
                // ν₀ stays symbolic; 1 only satisfies the positivity check
                let fam = if op == "mainres" { mainres_ledger(1.0, n)? } else { spectral_ledger(1.0, n)? };
                Value::Family(fam)
            }
            _ => return Err(Error::Parse(format!("unknown operation '{op}'"))),
        };
        self.expect(Tok::Close(')'))?;
        Ok(v)
    }
}

/// Evaluates an expression of the prefix grammar:
/// `(add E E)`, `(extu E E)`, `(step F [G])`, `(mainres n)`, `(spectral n)`,
/// set literals `[(β, j) ...]`, `empty`, shorthand exponents such as
/// `nu0+2`, and family literals `{zf: E, rb0: E}`.
pub fn evaluate(expr: &str) -> Result<Value> {
    let mut p = Parser { toks: tokenize(expr), pos: 0 };
    let v = p.value()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input after expression: {:?}", &p.toks[p.pos..])));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_parsing() {
        assert_eq!(parse_exponent("nu0+2").unwrap(), Exponent::nu0(1, Rational::from_integer(2)));
        assert_eq!(parse_exponent("2*nu0-1/2").unwrap(), Exponent::nu0(2, Rational::new(-1, 2)));
        assert_eq!(parse_exponent("0.3").unwrap(), Exponent::ratio(3, 10));
        assert_eq!(parse_exponent("-1.25").unwrap(), Exponent::ratio(-5, 4));
        assert!(parse_exponent("-nu0").is_err());
        assert!(parse_exponent("x").is_err());
    }

    #[test]
    fn display_round_trip() {
        for s in ["nu0-1", "2nu0+1/2", "-2", "0"] {
            assert_eq!(parse_exponent(s).unwrap().to_string(), s);
        }
    }
}
