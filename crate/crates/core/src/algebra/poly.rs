use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{Coeff, Rat};

/// Sato weights of u1..u6.
pub const U_WEIGHTS: [i32; 6] = [11, 7, 6, 3, 2, 1];
/// Weights of the optional extra variables t and s.
pub const T_WEIGHT: i32 = -4;
pub const S_WEIGHT: i32 = -5;

/// Number of polynomial variables: u1..u6, t, s.
pub const NVARS: usize = 8;

pub type Exp = [u16; NVARS];

/// Result of [`GradedPoly::weight_of`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    /// The zero polynomial, isobaric of every weight.
    Zero,
    Of(i32),
    NotIsobaric,
}

fn exp_weight(e: &Exp) -> i32 {
    let mut w = 0;
    for i in 0..6 {
        w += e[i] as i32 * U_WEIGHTS[i];
    }
    w + e[6] as i32 * T_WEIGHT + e[7] as i32 * S_WEIGHT
}

/// Sparse polynomial in u1..u6 (optionally t, s) over [`Coeff`].
#[derive(Clone, PartialEq, Eq, Default)]
pub struct GradedPoly {
    terms: BTreeMap<Exp, Coeff>,
}

impl GradedPoly {
    pub fn zero() -> GradedPoly {
        GradedPoly::default()
    }

    pub fn constant(c: Coeff) -> GradedPoly {
        GradedPoly::monomial([0; NVARS], c)
    }

    pub fn monomial(e: Exp, c: Coeff) -> GradedPoly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        GradedPoly { terms }
    }

    /// u_i for i in 1..=6.
    pub fn u(i: usize) -> GradedPoly {
        let mut e = [0; NVARS];
        e[i - 1] = 1;
        GradedPoly::monomial(e, Coeff::one())
    }

    pub fn t() -> GradedPoly {
        let mut e = [0; NVARS];
        e[6] = 1;
        GradedPoly::monomial(e, Coeff::one())
    }

    pub fn s() -> GradedPoly {
        let mut e = [0; NVARS];
        e[7] = 1;
        GradedPoly::monomial(e, Coeff::one())
    }

    /// Monomial in u with exponents `(e1..e6)` and a rational coefficient.
    pub fn u_mono(e: [u16; 6], r: Rat) -> GradedPoly {
        let mut x = [0; NVARS];
        x[..6].copy_from_slice(&e);
        GradedPoly::monomial(x, Coeff::from_rat(r))
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

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exp) -> Coeff {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, e: Exp, c: &Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_default();
        *entry = &*entry + c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// Common Sato weight of all terms (u, t, s exponents plus coefficient weight).
    pub fn weight_of(&self) -> Weight {
        let mut w = None;
        for (e, c) in &self.terms {
            let cw = match c.weight() {
                Ok(Some(x)) => x,
                Ok(None) => continue,
                Err(()) => return Weight::NotIsobaric,
            };
            let tw = exp_weight(e) + cw;
            match w {
                None => w = Some(tw),
                Some(x) if x != tw => return Weight::NotIsobaric,
                _ => {}
            }
        }
        match w {
            None => Weight::Zero,
            Some(x) => Weight::Of(x),
        }
    }

    /// Total u-degree parity: `Some(true)` if every term has odd u-degree.
    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|e| e[..6].iter().map(|&x| x as u32).sum::<u32>() % 2 == 1)
    }

    /// ∂/∂u_i (i in 1..=6).
    pub fn diff(&self, i: usize) -> GradedPoly {
        let k = i - 1;
        let mut out = GradedPoly::zero();
        for (e, c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut f = *e;
            f[k] -= 1;
            out.add_term(f, &c.scale(&Rat::from(e[k] as i64)));
        }
        out
    }

    /// ∂ over a multi-index of u-variables.
    pub fn diff_multi(&self, idx: &[usize]) -> GradedPoly {
        let mut p = self.clone();
        for &i in idx {
            p = p.diff(i);
        }
        p
    }

    /// Evaluates at u = 0 (t, s kept).
    pub fn at_origin(&self) -> Coeff {
        self.coeff(&[0; NVARS])
    }

    /// Substitutes `u ↦ -u`.
    pub fn negate_u(&self) -> GradedPoly {
        let mut out = GradedPoly::zero();
        for (e, c) in &self.terms {
            let deg: u32 = e[..6].iter().map(|&x| x as u32).sum();
            let c = if deg % 2 == 1 { -c } else { c.clone() };
            out.add_term(*e, &c);
        }
        out
    }

    /// Applies a coefficient map.
    pub fn map_coeffs(&self, f: impl Fn(&Exp, &Coeff) -> Coeff) -> GradedPoly {
        let mut out = GradedPoly::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, &f(e, c));
        }
        out
    }

    pub fn pow(&self, n: u32) -> GradedPoly {
        let mut acc = GradedPoly::constant(Coeff::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl<'a> Add<&'a GradedPoly> for &'a GradedPoly {
    type Output = GradedPoly;
    fn add(self, o: &GradedPoly) -> GradedPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, c);
        }
        out
    }
}

impl<'a> Sub<&'a GradedPoly> for &'a GradedPoly {
    type Output = GradedPoly;
    fn sub(self, o: &GradedPoly) -> GradedPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, &-c);
        }
        out
    }
}

impl<'a> Mul<&'a GradedPoly> for &'a GradedPoly {
    type Output = GradedPoly;
    fn mul(self, o: &GradedPoly) -> GradedPoly {
        let mut out = GradedPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let mut e = *ea;
                for k in 0..NVARS {
                    e[k] += eb[k];
                }
                out.add_term(e, &(ca * cb));
            }
        }
        out
    }
}

impl Neg for &GradedPoly {
    type Output = GradedPoly;
    fn neg(self) -> GradedPoly {
        self.map_coeffs(|_, c| -c)
    }
}

impl Add for GradedPoly {
    type Output = GradedPoly;
    fn add(self, o: GradedPoly) -> GradedPoly {
        &self + &o
    }
}

impl Sub for GradedPoly {
    type Output = GradedPoly;
    fn sub(self, o: GradedPoly) -> GradedPoly {
        &self - &o
    }
}

impl Mul for GradedPoly {
    type Output = GradedPoly;
    fn mul(self, o: GradedPoly) -> GradedPoly {
        &self * &o
    }
}

const VAR_NAMES: [&str; NVARS] = ["u1", "u2", "u3", "u4", "u5", "u6", "t", "s"];

impl fmt::Display for GradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (v, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*{}", VAR_NAMES[v])?,
                    _ => write!(f, "*{}^{}", VAR_NAMES[v], p)?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for GradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(GradedPoly::u(6).pow(15).weight_of(), Weight::Of(15));
        let p = &GradedPoly::constant(Coeff::mu(4)) * &GradedPoly::u(1);
        assert_eq!(p.weight_of(), Weight::Of(7));
        assert_eq!(GradedPoly::zero().weight_of(), Weight::Zero);
        let q = &GradedPoly::u(1) + &GradedPoly::u(2);
        assert_eq!(q.weight_of(), Weight::NotIsobaric);
        assert_eq!(GradedPoly::s().pow(4).weight_of(), GradedPoly::t().pow(5).weight_of());
    }

    #[test]
    fn derivative() {
        let p = GradedPoly::u_mono([0, 0, 0, 2, 0, 1], Rat::new(1, 3));
        assert_eq!(p.diff(4), GradedPoly::u_mono([0, 0, 0, 1, 0, 1], Rat::new(2, 3)));
        assert!(p.diff(1).is_zero());
    }
}
