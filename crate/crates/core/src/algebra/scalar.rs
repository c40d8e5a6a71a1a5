use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::Rat;

/// Sato weights of μ0..μ4.
pub const MU_WEIGHTS: [i32; 5] = [-20, -16, -12, -8, -4];
/// Weight of ρ = μ0^{1/4}.
pub const RHO_WEIGHT: i32 = -5;

/// Monomial `μ0^a0 … μ4^a4 · ι^i · ρ^r` with `i ∈ {0,1}`, `r ∈ {0..3}`.
/// Only μ0 may carry a negative exponent.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono {
    pub mu: [i16; 5],
    pub iota: u8,
    pub rho: u8,
}

impl Mono {
    pub const ONE: Mono = Mono { mu: [0; 5], iota: 0, rho: 0 };

    pub fn mu(i: usize) -> Mono {
        let mut m = Mono::ONE;
        m.mu[i] = 1;
        m
    }

    pub fn from_mu(mu: [i16; 5]) -> Mono {
        Mono { mu, iota: 0, rho: 0 }
    }

    pub fn weight(&self) -> i32 {
        let mut w = self.rho as i32 * RHO_WEIGHT;
        for i in 0..5 {
            w += self.mu[i] as i32 * MU_WEIGHTS[i];
        }
        w
    }

    pub fn is_one(&self) -> bool {
        *self == Mono::ONE
    }

    /// Product; returns the sign produced by `ι^2 = -1`.
    pub fn mul(&self, o: &Mono) -> (Mono, bool) {
        let mut m = Mono::ONE;
        for i in 0..5 {
            m.mu[i] = self.mu[i] + o.mu[i];
        }
        let mut neg = false;
        let i = self.iota + o.iota;
        if i >= 2 {
            neg = true;
        }
        m.iota = i % 2;
        let r = self.rho + o.rho;
        if r >= 4 {
            m.mu[0] += 1;
        }
        m.rho = r % 4;
        (m, neg)
    }

    /// Inverse monomial with its sign (`ι^{-1} = -ι`, `ρ^{-1} = ρ^3/μ0`).
    /// Fails when a positive power of μ1..μ4 is present.
    pub fn inv(&self) -> Option<(Mono, bool)> {
        if self.mu[1..].iter().any(|&e| e != 0) {
            return None;
        }
        let mut m = Mono::ONE;
        m.mu[0] = -self.mu[0];
        let mut neg = false;
        if self.iota == 1 {
            m.iota = 1;
            neg = true;
        }
        if self.rho > 0 {
            m.rho = 4 - self.rho;
            m.mu[0] -= 1;
        }
        Some((m, neg))
    }

    fn key(&self) -> (i32, [i16; 5], u8, u8) {
        // graded by |weight| so the order is total and stable across runs
        (-self.weight(), self.mu, self.rho, self.iota)
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Mono) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Mono {
    fn cmp(&self, o: &Mono) -> Ordering {
        self.key().cmp(&o.key())
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.iota == 1 {
            parts.push("i".to_string());
        }
        for (k, &e) in self.mu.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("mu{k}")),
                _ => parts.push(format!("mu{k}^{e}")),
            }
        }
        if self.rho > 0 {
            if self.rho == 1 {
                parts.push("rho".to_string());
            } else {
                parts.push(format!("rho^{}", self.rho));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Element of `Q[μ0^{±1}, μ1..μ4, ι, ρ]/(ι²+1, ρ⁴−μ0)` in canonical form:
/// terms sorted by [`Mono`] order, no zero coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Coeff {
    terms: Vec<(Mono, Rat)>,
}

impl Coeff {
    pub fn zero() -> Coeff {
        Coeff { terms: Vec::new() }
    }

    pub fn one() -> Coeff {
        Coeff::from_rat(Rat::one())
    }

    pub fn from_rat(r: Rat) -> Coeff {
        if r.is_zero() {
            return Coeff::zero();
        }
        Coeff { terms: vec![(Mono::ONE, r)] }
    }

    pub fn int(n: i64) -> Coeff {
        Coeff::from_rat(Rat::from(n))
    }

    pub fn frac(n: i64, d: i64) -> Coeff {
        Coeff::from_rat(Rat::new(n, d))
    }

    pub fn term(m: Mono, r: Rat) -> Coeff {
        if r.is_zero() {
            return Coeff::zero();
        }
        Coeff { terms: vec![(m, r)] }
    }

    pub fn mono(m: Mono) -> Coeff {
        Coeff::term(m, Rat::one())
    }

    /// μ_i as a ring element.
    pub fn mu(i: usize) -> Coeff {
        Coeff::mono(Mono::mu(i))
    }

    pub fn iota() -> Coeff {
        Coeff::mono(Mono { iota: 1, ..Mono::ONE })
    }

    pub fn rho() -> Coeff {
        Coeff::mono(Mono { rho: 1, ..Mono::ONE })
    }

    /// `ι^n` for any integer n.
    pub fn iota_pow(n: i64) -> Coeff {
        match n.rem_euclid(4) {
            0 => Coeff::one(),
            1 => Coeff::iota(),
            2 => Coeff::int(-1),
            _ => -Coeff::iota(),
        }
    }

    /// `μ0^{k/4}` for any integer k, via ρ.
    pub fn mu0_quarter(k: i64) -> Coeff {
        let q = k.div_euclid(4);
        let r = k.rem_euclid(4);
        let mut m = Mono::ONE;
        m.mu[0] = q as i16;
        m.rho = r as u8;
        Coeff::mono(m)
    }

    /// Builds a canonical element from arbitrary (possibly unnormalized) terms.
    pub fn from_terms<I: IntoIterator<Item = (Mono, Rat)>>(it: I) -> Coeff {
        let mut v: Vec<(Mono, Rat)> = Vec::new();
        for (m, r) in it {
            let (m, neg) = Mono::ONE.mul(&m);
            let r = if neg { -r } else { r };
            v.push((m, r));
        }
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Mono, Rat)> = Vec::with_capacity(v.len());
        for (m, r) in v {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += &r,
                _ => out.push((m, r)),
            }
        }
        out.retain(|(_, r)| !r.is_zero());
        Coeff { terms: out }
    }

    pub fn terms(&self) -> &[(Mono, Rat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Rational constant, if the element has no generators.
    pub fn as_rat(&self) -> Option<Rat> {
        match self.terms.as_slice() {
            [] => Some(Rat::zero()),
            [(m, r)] if m.is_one() => Some(r.clone()),
            _ => None,
        }
    }

    /// Single-term elements are units iff their monomial is invertible.
    pub fn as_single_term(&self) -> Option<(&Mono, &Rat)> {
        match self.terms.as_slice() {
            [(m, r)] => Some((m, r)),
            _ => None,
        }
    }

    /// The common weight, `Ok(None)` for zero, `Err(())` if not isobaric.
    pub fn weight(&self) -> Result<Option<i32>, ()> {
        let mut w = None;
        for (m, _) in &self.terms {
            let mw = m.weight();
            match w {
                None => w = Some(mw),
                Some(x) if x != mw => return Err(()),
                _ => {}
            }
        }
        Ok(w)
    }

    pub fn scale(&self, r: &Rat) -> Coeff {
        if r.is_zero() {
            return Coeff::zero();
        }
        Coeff { terms: self.terms.iter().map(|(m, c)| (*m, c * r)).collect() }
    }

    pub fn mul_mono(&self, m: &Mono, r: &Rat) -> Coeff {
        if r.is_zero() {
            return Coeff::zero();
        }
        Coeff::from_terms(self.terms.iter().map(|(a, c)| {
            let (p, neg) = a.mul(m);
            let v = c * r;
            (p, if neg { -v } else { v })
        }))
    }

    /// Inverse when the element is a single invertible term.
    pub fn inv(&self) -> Option<Coeff> {
        let (m, r) = self.as_single_term()?;
        let (mi, neg) = m.inv()?;
        let ri = r.recip();
        Some(Coeff::term(mi, if neg { -ri } else { ri }))
    }

    pub fn pow(&self, e: u32) -> Coeff {
        let mut acc = Coeff::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Complex conjugation `ι ↦ -ι` (ρ treated as real).
    pub fn conj(&self) -> Coeff {
        Coeff {
            terms: self
                .terms
                .iter()
                .map(|(m, r)| (*m, if m.iota == 1 { -r } else { r.clone() }))
                .collect(),
        }
    }

    /// Substitute μ-values by rationals (ι, ρ must be absent); used for numeric spot checks.
    pub fn eval_mu(&self, mu: &[Rat; 5]) -> Option<Rat> {
        let mut acc = Rat::zero();
        for (m, r) in &self.terms {
            if m.iota != 0 || m.rho != 0 {
                return None;
            }
            let mut v = r.clone();
            for k in 0..5 {
                v = &v * &mu[k].pow(m.mu[k] as i32);
            }
            acc += &v;
        }
        Some(acc)
    }

    /// Least common multiple of denominators and gcd of numerators, for content normalization.
    pub fn content(&self) -> Rat {
        use num_bigint::BigInt;
        use num_integer::Integer;
        let mut g = BigInt::from(0);
        let mut l = BigInt::from(1);
        for (_, r) in &self.terms {
            g = g.gcd(&r.numer());
            l = l.lcm(&r.denom());
        }
        if g == BigInt::from(0) {
            return Rat::one();
        }
        Rat::from_bigints(g, l)
    }
}

fn merge(a: &[(Mono, Rat)], b: &[(Mono, Rat)], negate_b: bool) -> Vec<(Mono, Rat)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = if i == a.len() {
            Ordering::Greater
        } else if j == b.len() {
            Ordering::Less
        } else {
            a[i].0.cmp(&b[j].0)
        };
        match ord {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                let r = if negate_b { -&b[j].1 } else { b[j].1.clone() };
                out.push((b[j].0, r));
                j += 1;
            }
            Ordering::Equal => {
                let r = if negate_b { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                if !r.is_zero() {
                    out.push((a[i].0, r));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl<'a> Add<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn add(self, o: &Coeff) -> Coeff {
        Coeff { terms: merge(&self.terms, &o.terms, false) }
    }
}

impl<'a> Sub<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn sub(self, o: &Coeff) -> Coeff {
        Coeff { terms: merge(&self.terms, &o.terms, true) }
    }
}

impl<'a> Mul<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn mul(self, o: &Coeff) -> Coeff {
        if self.is_zero() || o.is_zero() {
            return Coeff::zero();
        }
        if let Some(r) = o.as_rat() {
            return self.scale(&r);
        }
        if let Some(r) = self.as_rat() {
            return o.scale(&r);
        }
        let mut v = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ra) in &self.terms {
            for (mb, rb) in &o.terms {
                let (m, neg) = ma.mul(mb);
                let r = ra * rb;
                v.push((m, if neg { -r } else { r }));
            }
        }
        Coeff::from_terms(v)
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff { terms: self.terms.iter().map(|(m, r)| (*m, -r)).collect() }
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Coeff> for Coeff {
            type Output = Coeff;
            fn $m(self, o: Coeff) -> Coeff {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Coeff> for Coeff {
            type Output = Coeff;
            fn $m(self, o: &Coeff) -> Coeff {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, r)) in self.terms.iter().enumerate() {
            let (sign, mag) = if r.is_negative() { ("-", -r) } else { ("+", r.clone()) };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coeff({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defining_relations() {
        assert_eq!(Coeff::iota() * Coeff::iota(), Coeff::int(-1));
        assert_eq!(Coeff::rho().pow(5), Coeff::mu(0) * Coeff::rho());
        assert_eq!(Coeff::iota_pow(6), Coeff::int(-1));
        // ι^{6N}, N = 1, by repeated multiplication
        assert_eq!(Coeff::iota().pow(6), Coeff::iota_pow(6));
    }

    #[test]
    fn quarter_powers() {
        assert_eq!(Coeff::mu0_quarter(4), Coeff::mu(0));
        assert_eq!(Coeff::mu0_quarter(-3) * Coeff::mu0_quarter(3), Coeff::one());
        assert_eq!(Coeff::mu0_quarter(-7).weight(), Ok(Some(35)));
        assert_eq!(Coeff::rho().pow(4).weight(), Coeff::mu(0).weight());
    }

    #[test]
    fn inverse_of_unit() {
        let x = Coeff::term(Mono { mu: [-2, 0, 0, 0, 0], iota: 1, rho: 3 }, Rat::new(-3, 7));
        assert_eq!(&x * &x.inv().unwrap(), Coeff::one());
        assert!(Coeff::mu(1).inv().is_none());
    }

    #[test]
    fn display_is_stable() {
        let x = Coeff::mu(1).scale(&Rat::new(3, 4)) + Coeff::int(-1) + Coeff::iota();
        assert_eq!(x.to_string(), "-1 + i + 3/4*mu1");
    }
}
