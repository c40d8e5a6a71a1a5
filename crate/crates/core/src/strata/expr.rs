use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{LinForm, Sym};
use crate::algebra::{Coeff, Rat};

/// Product of σ-derivative symbols, kept sorted ascending (empty = 1).
pub type SymProduct = Vec<Sym>;

/// Polynomial in σ-derivative symbols with [`Coeff`] coefficients.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct SigmaExpr {
    terms: BTreeMap<SymProduct, Coeff>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("division by a non-unit expression")]
    NonUnitDivisor,
    #[error("expression is not linear in σ-symbols")]
    NotLinear,
}

impl SigmaExpr {
    pub fn zero() -> SigmaExpr {
        SigmaExpr::default()
    }

    pub fn constant(c: Coeff) -> SigmaExpr {
        let mut e = SigmaExpr::zero();
        e.add_term(Vec::new(), c);
        e
    }

    pub fn sym(s: Sym) -> SigmaExpr {
        let mut e = SigmaExpr::zero();
        e.add_term(vec![s], Coeff::one());
        e
    }

    pub fn from_linform(l: &LinForm) -> SigmaExpr {
        let mut e = SigmaExpr::zero();
        for (s, c) in l.terms() {
            e.add_term(vec![*s], c.clone());
        }
        e
    }

    pub fn add_term(&mut self, mut p: SymProduct, c: Coeff) {
        if c.is_zero() {
            return;
        }
        p.sort();
        let slot = self.terms.entry(p.clone()).or_insert_with(Coeff::zero);
        *slot = &*slot + &c;
        if slot.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymProduct, &Coeff)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the expression is a constant.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, o: &SigmaExpr) -> SigmaExpr {
        let mut r = self.clone();
        for (p, c) in &o.terms {
            r.add_term(p.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> SigmaExpr {
        SigmaExpr { terms: self.terms.iter().map(|(p, c)| (p.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, o: &SigmaExpr) -> SigmaExpr {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &Coeff) -> SigmaExpr {
        let mut r = SigmaExpr::zero();
        for (p, c) in &self.terms {
            r.add_term(p.clone(), c * k);
        }
        r
    }

    pub fn mul(&self, o: &SigmaExpr) -> SigmaExpr {
        let mut r = SigmaExpr::zero();
        for (p, c) in &self.terms {
            for (q, d) in &o.terms {
                let mut pq = p.clone();
                pq.extend_from_slice(q);
                r.add_term(pq, c * d);
            }
        }
        r
    }

    pub fn pow(&self, n: u32) -> SigmaExpr {
        let mut acc = SigmaExpr::constant(Coeff::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Polynomial degree in σ-symbols (0 for constants, -1 for zero).
    pub fn degree(&self) -> i32 {
        self.terms.keys().map(|p| p.len() as i32).max().unwrap_or(-1)
    }

    /// Converts a homogeneous linear expression to a [`LinForm`].
    pub fn to_linform(&self) -> Result<LinForm, ExprError> {
        let mut v = Vec::with_capacity(self.terms.len());
        for (p, c) in &self.terms {
            if p.len() != 1 {
                return Err(ExprError::NotLinear);
            }
            v.push((p[0], c.clone()));
        }
        Ok(LinForm::from_terms(v))
    }

    /// Replaces every symbol by a linear form (e.g. a normal form) and expands.
    pub fn substitute(&self, f: &impl Fn(Sym) -> SigmaExpr) -> SigmaExpr {
        let mut r = SigmaExpr::zero();
        for (p, c) in &self.terms {
            let mut t = SigmaExpr::constant(c.clone());
            for s in p {
                t = t.mul(&f(*s));
            }
            r = r.add(&t);
        }
        r
    }

    pub fn map_coeffs(&self, f: impl Fn(&Coeff) -> Coeff) -> SigmaExpr {
        let mut r = SigmaExpr::zero();
        for (p, c) in &self.terms {
            r.add_term(p.clone(), f(c));
        }
        r
    }

    /// Weight of `c·Πσ` if all terms agree.
    pub fn weight(&self) -> Option<Option<i32>> {
        let mut w = None;
        for (p, c) in &self.terms {
            let cw = c.weight().ok()?.unwrap_or(0);
            let tw = cw + p.iter().map(|s| s.weight()).sum::<i32>();
            match w {
                None => w = Some(tw),
                Some(x) if x != tw => return None,
                _ => {}
            }
        }
        Some(w)
    }

    /// Parses a σ-expression. `iN` denotes the sheet factor ι^N and needs `sheet`.
    pub fn parse(text: &str, sheet: Option<u8>) -> Result<SigmaExpr, ExprError> {
        let mut p = Parser { s: text.as_bytes(), pos: 0, sheet };
        let e = p.expr()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

fn fmt_product(p: &SymProduct) -> String {
    p.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("*")
}

impl fmt::Display for SigmaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest products first
        for (k, (p, c)) in self.terms.iter().rev().enumerate() {
            let body = fmt_product(p);
            let (neg, cs) = match c.as_single_term() {
                Some((_, r)) if r.is_negative() => (true, (-c.clone()).to_string()),
                Some(_) => (false, c.to_string()),
                None => (false, format!("({c})")),
            };
            if k > 0 {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            } else if neg {
                write!(f, "-")?;
            }
            match (body.is_empty(), cs.as_str()) {
                (true, _) => write!(f, "{cs}")?,
                (false, "1") => write!(f, "{body}")?,
                (false, _) => write!(f, "{cs}*{body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SigmaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A quotient `num/den` of σ-expressions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SigmaQuotient {
    pub num: SigmaExpr,
    pub den: SigmaExpr,
}

impl SigmaQuotient {
    pub fn new(num: SigmaExpr, den: SigmaExpr) -> SigmaQuotient {
        SigmaQuotient { num, den }
    }

    pub fn of_syms(a: Sym, b: Sym) -> SigmaQuotient {
        SigmaQuotient::new(SigmaExpr::sym(a), SigmaExpr::sym(b))
    }

    pub fn add(&self, o: &SigmaQuotient) -> SigmaQuotient {
        if self.den == o.den {
            return SigmaQuotient::new(self.num.add(&o.num), self.den.clone());
        }
        SigmaQuotient::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }

    pub fn neg(&self) -> SigmaQuotient {
        SigmaQuotient::new(self.num.neg(), self.den.clone())
    }

    pub fn sub(&self, o: &SigmaQuotient) -> SigmaQuotient {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &SigmaQuotient) -> SigmaQuotient {
        SigmaQuotient::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn scale(&self, c: &Coeff) -> SigmaQuotient {
        SigmaQuotient::new(self.num.scale(c), self.den.clone())
    }

    /// Cross-multiplied equality test.
    pub fn same_as(&self, o: &SigmaQuotient) -> bool {
        self.num.mul(&o.den) == o.num.mul(&self.den)
    }
}

impl fmt::Display for SigmaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    sheet: Option<u8>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<SigmaExpr, ExprError> {
        let mut acc = if self.eat(b'-') {
            self.term()?.neg()
        } else {
            self.eat(b'+');
            self.term()?
        };
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SigmaExpr, ExprError> {
        let mut acc = self.power()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.power()?);
            } else if self.eat(b'/') {
                let d = self.power()?;
                let inv = d.as_constant().and_then(|c| c.inv()).ok_or(ExprError::NonUnitDivisor)?;
                acc = acc.scale(&inv);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<SigmaExpr, ExprError> {
        let start = self.pos;
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let e = self.exponent()?;
        let c = base.as_constant();
        if e.is_integer() {
            let n: i64 = e.to_f64() as i64;
            if n >= 0 {
                return Ok(base.pow(n as u32));
            }
            let inv = c.and_then(|c| c.inv()).ok_or(ExprError::NonUnitDivisor)?;
            return Ok(SigmaExpr::constant(inv.pow((-n) as u32)));
        }
        // fractional powers are only meaningful for μ0 = ρ⁴
        if c == Some(Coeff::mu(0)) {
            let k = &e * &Rat::from_i64(4);
            if k.is_integer() {
                return Ok(SigmaExpr::constant(Coeff::mu0_quarter(k.to_f64() as i64)));
            }
        }
        self.pos = start;
        Err(self.err("unsupported fractional power"))
    }

    fn exponent(&mut self) -> Result<Rat, ExprError> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let a = self.integer()?;
            let r = if self.eat(b'/') { Rat::new(a, self.integer()?) } else { Rat::from_i64(a) };
            if !self.eat(b')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(if neg { -r } else { r });
        }
        let neg = self.eat(b'-');
        let a = self.integer()?;
        Ok(Rat::from_i64(if neg { -a } else { a }))
    }

    fn integer(&mut self) -> Result<i64, ExprError> {
        self.ws();
        let st = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if st == self.pos {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.s[st..self.pos]).unwrap().parse().map_err(|_| self.err("integer overflow"))
    }

    fn atom(&mut self) -> Result<SigmaExpr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(b'[') => {
                let st = self.pos;
                while self.pos < self.s.len() && self.s[self.pos] != b']' {
                    self.pos += 1;
                }
                self.pos += 1;
                let txt = std::str::from_utf8(&self.s[st..self.pos.min(self.s.len())]).unwrap();
                Sym::parse(txt).map(SigmaExpr::sym).ok_or_else(|| self.err("bad index list"))
            }
            Some(c) if c.is_ascii_digit() => {
                let st = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let txt = std::str::from_utf8(&self.s[st..self.pos]).unwrap();
                let r: Rat = txt.parse().map_err(|_| self.err("bad number"))?;
                Ok(SigmaExpr::constant(Coeff::from_rat(r)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let st = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let id = std::str::from_utf8(&self.s[st..self.pos]).unwrap();
                self.ident(id, st)
            }
            _ => Err(self.err("unexpected token")),
        }
    }

    fn ident(&mut self, id: &str, st: usize) -> Result<SigmaExpr, ExprError> {
        let c = match id {
            "i" => Coeff::iota(),
            "rho" => Coeff::rho(),
            "iN" => {
                let n = self.sheet.ok_or_else(|| self.err("iN needs a sheet index"))?;
                Coeff::iota_pow(n as i64)
            }
            _ if id.len() == 3 && id.starts_with("mu") => {
                let k = (id.as_bytes()[2] as char).to_digit(10).filter(|&k| k <= 4);
                Coeff::mu(k.ok_or_else(|| self.err("unknown parameter"))? as usize)
            }
            _ if id.starts_with("sigma") || id.starts_with('s') => {
                let sym = Sym::parse(id).ok_or(ExprError::Parse { pos: st, msg: format!("bad symbol {id}") })?;
                return Ok(SigmaExpr::sym(sym));
            }
            _ => return Err(ExprError::Parse { pos: st, msg: format!("unknown identifier {id}") }),
        };
        Ok(SigmaExpr::constant(c))
    }
}
