//! Jorgenson determinant reductions.
//!
//! For u on Θ^[k] the quotient `Σ a_j σ_j / Σ b_j σ_j` equals a ratio of 6×6
//! determinants whose columns are `a` (or `b`), `du` at the generic points
//! P_1..P_{k-1}, and `du` with its ξ-derivatives at the point P_k, which is
//! sent to infinity (ξ = 0). Generic points are free symbols `t_i, s_i`; the
//! common factors `dt_i/(4 s_i^3)` cancel between numerator and denominator.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{Coeff, Rat};
use crate::curve::{CurveC45, Series};

const NV: usize = 22;

/// Variable layout: a1..a6, b1..b6, t1..t5, s1..s5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JVar {
    A(u8),
    B(u8),
    T(u8),
    S(u8),
}

impl JVar {
    fn slot(self) -> usize {
        match self {
            JVar::A(j) => j as usize - 1,
            JVar::B(j) => 5 + j as usize,
            JVar::T(i) => 11 + i as usize,
            JVar::S(i) => 16 + i as usize,
        }
    }

    fn from_slot(k: usize) -> JVar {
        match k {
            0..=5 => JVar::A(k as u8 + 1),
            6..=11 => JVar::B(k as u8 - 5),
            12..=16 => JVar::T(k as u8 - 11),
            _ => JVar::S(k as u8 - 16),
        }
    }
}

impl fmt::Display for JVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JVar::A(j) => write!(f, "a{j}"),
            JVar::B(j) => write!(f, "b{j}"),
            JVar::T(i) => write!(f, "t{i}"),
            JVar::S(i) => write!(f, "s{i}"),
        }
    }
}

/// Sparse polynomial over Q in the Jorgenson variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JPoly {
    terms: BTreeMap<[u8; NV], Rat>,
}

impl JPoly {
    pub fn zero() -> JPoly {
        JPoly::default()
    }

    pub fn constant(r: Rat) -> JPoly {
        let mut p = JPoly::zero();
        p.add_term([0; NV], r);
        p
    }

    pub fn var(v: JVar) -> JPoly {
        let mut e = [0; NV];
        e[v.slot()] = 1;
        let mut p = JPoly::zero();
        p.add_term(e, Rat::one());
        p
    }

    fn add_term(&mut self, e: [u8; NV], r: Rat) {
        if r.is_zero() {
            return;
        }
        let x = self.terms.entry(e).or_insert_with(Rat::zero);
        *x += &r;
        if x.is_zero() {
            self.terms.remove(&e);
        }
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

    pub fn add(&self, o: &JPoly) -> JPoly {
        let mut r = self.clone();
        for (e, x) in &o.terms {
            r.add_term(*e, x.clone());
        }
        r
    }

    pub fn sub(&self, o: &JPoly) -> JPoly {
        self.add(&o.scale(&-Rat::one()))
    }

    pub fn scale(&self, k: &Rat) -> JPoly {
        let mut r = JPoly::zero();
        for (e, x) in &self.terms {
            r.add_term(*e, x * k);
        }
        r
    }

    pub fn mul(&self, o: &JPoly) -> JPoly {
        let mut r = JPoly::zero();
        for (e, x) in &self.terms {
            for (f, y) in &o.terms {
                let g: [u8; NV] = std::array::from_fn(|k| e[k] + f[k]);
                r.add_term(g, x * y);
            }
        }
        r
    }

    /// True when the variable occurs in some term.
    pub fn involves(&self, v: JVar) -> bool {
        self.terms.keys().any(|e| e[v.slot()] > 0)
    }

    /// Renames `a_j ↦ b_j`.
    pub fn a_to_b(&self) -> JPoly {
        let mut r = JPoly::zero();
        for (e, x) in &self.terms {
            let mut f = *e;
            for j in 0..6 {
                f[6 + j] += f[j];
                f[j] = 0;
            }
            r.add_term(f, x.clone());
        }
        r
    }

    /// Splits by the exponents `(p, q)` of `(t_i, s_i)`.
    fn split_point(&self, i: u8) -> BTreeMap<(u8, u8), JPoly> {
        let (ts, ss) = (JVar::T(i).slot(), JVar::S(i).slot());
        let mut out: BTreeMap<(u8, u8), JPoly> = BTreeMap::new();
        for (e, x) in &self.terms {
            let mut f = *e;
            f[ts] = 0;
            f[ss] = 0;
            out.entry((e[ts], e[ss])).or_default().add_term(f, x.clone());
        }
        out
    }

    /// Rational multiple of `o`, if any.
    pub fn ratio_to(&self, o: &JPoly) -> Option<Rat> {
        let (e, x) = self.terms.iter().next()?;
        let y = o.terms.get(e)?;
        let k = x / y;
        (o.scale(&k) == *self).then_some(k)
    }

    /// Divides by a rational so the coefficients are coprime integers and the
    /// term that is first in display order is positive.
    pub fn primitive(&self) -> (Rat, JPoly) {
        let Some(first) = self.display_order().first().map(|(_, x)| (*x).clone()) else {
            return (Rat::one(), JPoly::zero());
        };
        let mut g = num_bigint::BigInt::from(0);
        let mut l = num_bigint::BigInt::from(1);
        for x in self.terms.values() {
            g = num_integer::Integer::gcd(&g, &x.numer());
            l = num_integer::Integer::lcm(&l, &x.denom());
        }
        let mut c = Rat::from_bigints(g, l);
        if first.is_negative() {
            c = -c;
        }
        (c.clone(), self.scale(&c.recip()))
    }

    fn display_order(&self) -> Vec<(Vec<(JVar, u8)>, &Rat)> {
        let mut v: Vec<(Vec<(JVar, u8)>, &Rat)> = self
            .terms
            .iter()
            .map(|(e, x)| ((0..NV).filter(|&k| e[k] > 0).map(|k| (JVar::from_slot(k), e[k])).collect(), x))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// Parses sums of signed products such as `a1*t1*s2 - a2*s2 + 1/2*a3`.
    pub fn parse(text: &str) -> Option<JPoly> {
        let mut out = JPoly::zero();
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for ch in s.chars() {
            if (ch == '+' || ch == '-') && !cur.is_empty() {
                terms.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            } else if ch == '+' || ch == '-' {
                neg ^= ch == '-';
            } else {
                cur.push(ch);
            }
        }
        if !cur.is_empty() {
            terms.push((neg, cur));
        }
        for (neg, t) in terms {
            let mut e = [0u8; NV];
            let mut c = Rat::one();
            for f in t.split('*') {
                let (head, rest) = f.split_at(1);
                let idx = rest.parse::<u8>();
                let v = match (head, idx) {
                    ("a", Ok(j @ 1..=6)) => JVar::A(j),
                    ("b", Ok(j @ 1..=6)) => JVar::B(j),
                    ("t", Ok(i @ 1..=5)) => JVar::T(i),
                    ("s", Ok(i @ 1..=5)) => JVar::S(i),
                    _ => {
                        c = &c * &f.parse::<Rat>().ok()?;
                        continue;
                    }
                };
                e[v.slot()] += 1;
            }
            out.add_term(e, if neg { -c } else { c });
        }
        Some(out)
    }
}

impl fmt::Display for JPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.display_order();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (vars, x)) in terms.iter().enumerate() {
            let neg = x.is_negative();
            let mag = x.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || vars.is_empty() {
                parts.push(mag.to_string());
            }
            for (v, p) in vars {
                for _ in 0..*p {
                    parts.push(v.to_string());
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JorgensonError {
    #[error("k = {0} is outside 2..=5")]
    BadLevel(usize),
    #[error("leading ξ coefficient of the descended quotient is not rational")]
    NonRational,
}

/// Result of one reduction: u descends from Θ^[k] to Θ^[k-1].
#[derive(Clone, Debug, PartialEq)]
pub struct JorgensonReduction {
    pub k: usize,
    /// Numerator as a polynomial in a_j and the generic point symbols.
    pub numerator: JPoly,
    /// The same polynomial with a_j replaced by b_j.
    pub denominator: JPoly,
    /// j such that the quotient does not involve a_j: σ_j vanishes on Θ^[k-1].
    pub independent_of: Vec<usize>,
    /// The determinant was identically zero at ξ = 0.
    pub singular: bool,
    /// The identity only holds to leading order in ξ (after the k = 2 fallback).
    pub leading_order_only: bool,
}

impl JorgensonReduction {
    /// Display form `num / den`.
    pub fn quotient(&self) -> String {
        format!("({}) / ({})", self.numerator, self.denominator)
    }
}

/// Column of holomorphic numerators `(1, t, s, t^2, ts, s^2)` at point i.
fn point_column(curve: &CurveC45, i: u8) -> Vec<JPoly> {
    curve
        .g
        .iter()
        .map(|g| {
            let mut acc = JPoly::zero();
            for (e, c) in g.terms() {
                let r = c.as_rat().expect("rational holomorphic numerator");
                let mut term = JPoly::constant(r);
                for _ in 0..e[6] {
                    term = term.mul(&JPoly::var(JVar::T(i)));
                }
                for _ in 0..e[7] {
                    term = term.mul(&JPoly::var(JVar::S(i)));
                }
                acc = acc.add(&term);
            }
            acc
        })
        .collect()
}

/// `d^n/dξ^n (du/dξ)` at ξ = 0.
fn xi_column(curve: &CurveC45, n: usize) -> Vec<JPoly> {
    let fact: i64 = (1..=n as i64).product();
    (1..=6)
        .map(|i| {
            let s = curve.du_dxi(i, n as i32 + 1);
            let c = s.coeff(n as i32).as_rat().expect("rational ξ-derivative at infinity");
            JPoly::constant(&c * &Rat::from(fact))
        })
        .collect()
}

fn det(m: &[Vec<JPoly>]) -> JPoly {
    fn rec(m: &[Vec<JPoly>], row: usize, cols: &mut Vec<usize>) -> JPoly {
        if row == m.len() {
            return JPoly::constant(Rat::one());
        }
        let mut acc = JPoly::zero();
        for k in 0..cols.len() {
            let c = cols[k];
            if m[row][c].is_zero() {
                continue;
            }
            cols.remove(k);
            let minor = rec(m, row + 1, cols);
            cols.insert(k, c);
            let t = m[row][c].mul(&minor);
            acc = if k % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
        }
        acc
    }
    let mut cols: Vec<usize> = (0..m.len()).collect();
    rec(m, 0, &mut cols)
}

/// The bordered numerator matrix for Θ^[k] descending to Θ^[k-1], as rows.
pub fn jorgenson_matrix(k: usize) -> Vec<Vec<JPoly>> {
    let curve = CurveC45::new();
    let g = curve.genus();
    let mut columns: Vec<Vec<JPoly>> = vec![(1..=6).map(|j| JPoly::var(JVar::A(j))).collect()];
    for i in 1..k {
        columns.push(point_column(&curve, i as u8));
    }
    // du(P_k), du(P_k)^{(g-k-1)}, …, du(P_k)^{(1)}
    columns.push(xi_column(&curve, 0));
    for n in (1..g - k).rev() {
        columns.push(xi_column(&curve, n));
    }
    (0..g).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect()
}

/// Jorgenson reduction for u ∈ Θ^[k], k in 2..=5.
pub fn jorgenson_reduce(k: usize) -> Result<JorgensonReduction, JorgensonError> {
    if !(2..=5).contains(&k) {
        return Err(JorgensonError::BadLevel(k));
    }
    let d = det(&jorgenson_matrix(k));
    if !d.is_zero() {
        let (_, num) = d.primitive();
        return Ok(finish(k, num, false, false));
    }
    // singular at ξ = 0: descend the k+1 quotient instead, moving P_{k} to infinity
    let upper = jorgenson_reduce(k + 1)?;
    let num = descend_leading(&upper.numerator, k as u8)?;
    let (_, num) = num.primitive();
    Ok(finish(k, num, true, true))
}

fn finish(k: usize, num: JPoly, singular: bool, leading_order_only: bool) -> JorgensonReduction {
    let independent_of = (1..=6).filter(|&j| !num.involves(JVar::A(j as u8))).collect();
    JorgensonReduction { k, denominator: num.a_to_b(), numerator: num, independent_of, singular, leading_order_only }
}

/// Leading ξ coefficient after substituting `(t_i, s_i) = (t(ξ), s(ξ))` at infinity.
fn descend_leading(p: &JPoly, i: u8) -> Result<JPoly, JorgensonError> {
    let curve = CurveC45::new();
    let parts = p.split_point(i);
    let maxdeg = parts.keys().map(|(a, b)| *a as i32 * 4 + *b as i32 * 5).max().unwrap_or(0);
    let (t, s) = curve.expand_at_infinity(maxdeg + 8);
    let series: Vec<((u8, u8), Series, &JPoly)> =
        parts.iter().map(|(&(a, b), q)| ((a, b), t.pow(a as u32).mul(&s.pow(b as u32)), q)).collect();
    let lo = series.iter().filter_map(|(_, x, _)| x.valuation()).min().unwrap_or(0);
    for v in lo..lo + 16 {
        let mut acc = JPoly::zero();
        for (_, x, q) in &series {
            let c: Coeff = x.coeff(v);
            if c.is_zero() {
                continue;
            }
            let r = c.as_rat().ok_or(JorgensonError::NonRational)?;
            acc = acc.add(&q.scale(&r));
        }
        if !acc.is_zero() {
            return Ok(acc);
        }
    }
    Ok(JPoly::zero())
}

/// Derivative indices j with σ_j = 0 on Θ^[level] (besides σ itself), from the
/// chain of reductions Θ^[5] → Θ^[4] → … → Θ^[level].
pub fn stratum_definition(level: usize) -> Result<Vec<usize>, JorgensonError> {
    if !(1..=5).contains(&level) {
        return Err(JorgensonError::BadLevel(level));
    }
    let mut out: Vec<usize> = Vec::new();
    for k in (level + 1..=5).rev() {
        for j in jorgenson_reduce(k)?.independent_of {
            if !out.contains(&j) {
                out.push(j);
            }
        }
    }
    out.sort_by(|a, b| b.cmp(a));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_roundtrip() {
        let p = JPoly::parse("a1*t1*s2 - a1*s1*t2 + a2*s1 - 1/2*a3").unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(JPoly::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn xi_columns_at_infinity() {
        let c = CurveC45::new();
        let col = xi_column(&c, 0);
        assert_eq!(col[5], JPoly::constant(Rat::from(-1)));
        assert!(col[..5].iter().all(JPoly::is_zero));
    }
}
