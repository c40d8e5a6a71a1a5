use std::fmt;

use super::{Coeff, GradedPoly, Rat};

/// Minimal ring interface for series coefficients.
pub trait Ring: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, r: &Rat) -> Self;
    /// Multiplicative inverse when the element is a unit.
    fn try_inv(&self) -> Option<Self>;
}

impl Ring for Rat {
    fn zero() -> Self {
        Rat::zero()
    }
    fn one() -> Self {
        Rat::one()
    }
    fn is_zero(&self) -> bool {
        Rat::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, r: &Rat) -> Self {
        self * r
    }
    fn try_inv(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }
}

impl Ring for Coeff {
    fn zero() -> Self {
        Coeff::zero()
    }
    fn one() -> Self {
        Coeff::one()
    }
    fn is_zero(&self) -> bool {
        Coeff::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, r: &Rat) -> Self {
        Coeff::scale(self, r)
    }
    fn try_inv(&self) -> Option<Self> {
        self.inv()
    }
}

impl Ring for GradedPoly {
    fn zero() -> Self {
        GradedPoly::zero()
    }
    fn one() -> Self {
        GradedPoly::constant(Coeff::one())
    }
    fn is_zero(&self) -> bool {
        GradedPoly::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, r: &Rat) -> Self {
        self.map_coeffs(|_, c| c.scale(r))
    }
    fn try_inv(&self) -> Option<Self> {
        if self.len() != 1 {
            return None;
        }
        let (e, c) = self.terms().next()?;
        if e.iter().any(|&x| x != 0) {
            return None;
        }
        c.inv().map(GradedPoly::constant)
    }
}

/// Name of the expansion parameter (bookkeeping only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    Xi,
    T,
    W1,
    P,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Param::Xi => "xi",
            Param::T => "t",
            Param::W1 => "w1",
            Param::P => "p",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("linear coefficient is not invertible")]
    NonInvertibleLinear,
    #[error("series has a nonzero constant term")]
    NonzeroConstant,
    #[error("leading coefficient is not a unit")]
    NonUnitLeading,
    #[error("series is zero to its truncation order")]
    ZeroToPrecision,
    #[error("x^-1 term cannot be integrated to a series")]
    LogTerm,
}

/// `Σ_{k=val}^{prec-1} c_k x^k + O(x^prec)`.
///
/// Every coefficient below `prec` is known (possibly zero); nothing at or above
/// `prec` is ever claimed.
#[derive(Clone, PartialEq)]
pub struct TruncSeries<R: Ring> {
    pub param: Param,
    start: i32,
    coeffs: Vec<R>,
    prec: i32,
}

impl<R: Ring> TruncSeries<R> {
    /// Builds from coefficients of `x^start, x^{start+1}, …`; missing ones up to `prec` are zero.
    pub fn new(param: Param, start: i32, mut coeffs: Vec<R>, prec: i32) -> Self {
        assert!(prec >= start, "precision below start");
        coeffs.truncate((prec - start) as usize);
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        TruncSeries { param, start, coeffs, prec }
    }

    pub fn zero(param: Param, prec: i32) -> Self {
        TruncSeries::new(param, prec, Vec::new(), prec)
    }

    pub fn constant(param: Param, c: R, prec: i32) -> Self {
        if prec <= 0 {
            return TruncSeries::zero(param, prec);
        }
        TruncSeries::new(param, 0, vec![c], prec)
    }

    /// The parameter itself, `x + O(x^prec)`.
    pub fn var(param: Param, prec: i32) -> Self {
        TruncSeries::new(param, 1, vec![R::one()], prec.max(1))
    }

    /// `c · x^k + O(x^prec)`.
    pub fn monomial(param: Param, c: R, k: i32, prec: i32) -> Self {
        if k >= prec {
            return TruncSeries::zero(param, prec);
        }
        TruncSeries::new(param, k, vec![c], prec)
    }

    pub fn prec(&self) -> i32 {
        self.prec
    }

    pub fn start(&self) -> i32 {
        self.start
    }

    /// Coefficient of x^k; `None` when k is at or beyond the truncation order.
    pub fn get(&self, k: i32) -> Option<R> {
        if k >= self.prec {
            return None;
        }
        Some(self.coeff_ref(k).cloned().unwrap_or_else(R::zero))
    }

    /// Coefficient of x^k, panicking beyond the truncation order.
    pub fn coeff(&self, k: i32) -> R {
        self.get(k).unwrap_or_else(|| panic!("coefficient {k} beyond O({}^{})", self.param, self.prec))
    }

    fn coeff_ref(&self, k: i32) -> Option<&R> {
        if k < self.start || k >= self.prec {
            None
        } else {
            self.coeffs.get((k - self.start) as usize)
        }
    }

    /// Lowest power with a nonzero coefficient, `None` if zero to precision.
    pub fn valuation(&self) -> Option<i32> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|p| self.start + p as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    /// Drops leading zeros so `start` equals the valuation.
    pub fn normalized(&self) -> Self {
        match self.valuation() {
            None => TruncSeries::zero(self.param, self.prec),
            Some(v) => TruncSeries {
                param: self.param,
                start: v,
                coeffs: self.coeffs[(v - self.start) as usize..].to_vec(),
                prec: self.prec,
            },
        }
    }

    pub fn truncate(&self, prec: i32) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        let start = self.start.min(prec);
        let end = (self.start + self.coeffs.len() as i32).min(prec);
        let coeffs = (start..end).map(|k| self.get(k).unwrap()).collect();
        TruncSeries::new(self.param, start, coeffs, prec)
    }

    /// Iterates `(power, coefficient)` over the known nonzero terms.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &R)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.start + i as i32, c))
    }

    pub fn add(&self, o: &Self) -> Self {
        let prec = self.prec.min(o.prec);
        let start = self.start.min(o.start).min(prec);
        let end = (self.start + self.coeffs.len() as i32).max(o.start + o.coeffs.len() as i32).min(prec);
        let coeffs = (start..end)
            .map(|k| match (self.coeff_ref(k), o.coeff_ref(k)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => R::zero(),
            })
            .collect();
        TruncSeries::new(self.param, start, coeffs, prec)
    }

    pub fn neg(&self) -> Self {
        TruncSeries {
            param: self.param,
            start: self.start,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, r: &Rat) -> Self {
        self.map(|c| c.scale(r))
    }

    pub fn mul_coeff(&self, c: &R) -> Self {
        self.map(|x| x.mul(c))
    }

    pub fn map(&self, f: impl Fn(&R) -> R) -> Self {
        TruncSeries {
            param: self.param,
            start: self.start,
            coeffs: self.coeffs.iter().map(f).collect(),
            prec: self.prec,
        }
    }

    /// Multiplies by x^k.
    pub fn shift(&self, k: i32) -> Self {
        TruncSeries { param: self.param, start: self.start + k, coeffs: self.coeffs.clone(), prec: self.prec + k }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = self.normalized();
        let b = o.normalized();
        let (va, vb) = match (a.valuation(), b.valuation()) {
            (Some(x), Some(y)) => (x, y),
            // a zero factor still only pins the product to its own precision
            (None, Some(y)) => return TruncSeries::zero(self.param, a.prec + y),
            (Some(x), None) => return TruncSeries::zero(self.param, b.prec + x),
            (None, None) => return TruncSeries::zero(self.param, a.prec + b.prec),
        };
        let prec = (a.prec + vb).min(b.prec + va);
        let start = va + vb;
        let n = ((prec - start).max(0) as usize).min((a.coeffs.len() + b.coeffs.len()).saturating_sub(1));
        let mut out = vec![R::zero(); n];
        for (i, ca) in a.coeffs.iter().enumerate() {
            if i >= n || ca.is_zero() {
                continue;
            }
            for (j, cb) in b.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if cb.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&ca.mul(cb));
            }
        }
        TruncSeries::new(self.param, start, out, prec)
    }

    pub fn pow(&self, n: u32) -> Self {
        // exact 1 with unbounded precision; the product bounds it
        let mut acc = TruncSeries::constant(self.param, R::one(), i32::MAX / 4);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `self^alpha` for a series with constant term 1 (J. C. P. Miller recurrence).
    pub fn pow_rat(&self, alpha: &Rat) -> Result<Self, SeriesError> {
        if self.start > 0 || self.coeff(0) != R::one() {
            return Err(SeriesError::NonUnitLeading);
        }
        let n = self.prec.max(0) as usize;
        assert!(n < 1 << 16, "fractional power of an exact series needs an explicit precision");
        let a: Vec<R> = (0..n as i32).map(|k| self.coeff(k)).collect();
        let mut b: Vec<R> = Vec::with_capacity(n);
        for m in 0..n {
            if m == 0 {
                b.push(R::one());
                continue;
            }
            let mut acc = R::zero();
            for k in 1..=m.min(a.len() - 1) {
                if a[k].is_zero() {
                    continue;
                }
                // ((alpha+1)k - m) a_k b_{m-k}
                let f = &(&(alpha + &Rat::one()) * &Rat::from(k as i64)) - &Rat::from(m as i64);
                acc = acc.add(&a[k].mul(&b[m - k]).scale(&f));
            }
            b.push(acc.scale(&Rat::new(1, m as i64)));
        }
        Ok(TruncSeries::new(self.param, 0, b, self.prec))
    }

    /// Multiplicative inverse; requires a unit leading coefficient.
    pub fn inv(&self) -> Result<Self, SeriesError> {
        let a = self.normalized();
        let v = a.valuation().ok_or(SeriesError::ZeroToPrecision)?;
        let lead_inv = a.coeffs[0].try_inv().ok_or(SeriesError::NonUnitLeading)?;
        let n = (a.prec - v) as usize;
        assert!(n < 1 << 16, "inverse of an exact series needs an explicit precision");
        let mut out: Vec<R> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = if k == 0 { R::one() } else { R::zero() };
            for j in 1..=k.min(a.coeffs.len() - 1) {
                if a.coeffs[j].is_zero() || out[k - j].is_zero() {
                    continue;
                }
                acc = acc.sub(&a.coeffs[j].mul(&out[k - j]));
            }
            out.push(acc.mul(&lead_inv));
        }
        Ok(TruncSeries::new(self.param, -v, out, a.prec - 2 * v))
    }

    pub fn div(&self, o: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn derivative(&self) -> Self {
        let start = self.start - 1;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale(&Rat::from((self.start + i as i32) as i64)))
            .collect();
        TruncSeries::new(self.param, start, coeffs, self.prec - 1)
    }

    /// Term-wise antiderivative with zero constant of integration.
    pub fn integrate(&self) -> Result<Self, SeriesError> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.start + i as i32;
            if k == -1 {
                if !c.is_zero() {
                    return Err(SeriesError::LogTerm);
                }
                coeffs.push(R::zero());
                continue;
            }
            coeffs.push(c.scale(&Rat::new(1, (k + 1) as i64)));
        }
        Ok(TruncSeries::new(self.param, self.start + 1, coeffs, self.prec + 1))
    }

    /// `self(inner(x))`; `inner` must have positive valuation.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        let g = inner.normalized();
        let vg = match g.valuation() {
            None => return Ok(TruncSeries::constant(inner.param, self.coeff(0), g.prec)),
            Some(v) => v,
        };
        if vg < 1 {
            return Err(SeriesError::NonzeroConstant);
        }
        let f = self.normalized();
        let prec = match f.valuation() {
            None => f.prec * vg,
            Some(vf) => {
                let kmin = if vf < 0 { vf } else { vf.max(1) };
                (f.prec * vg).min(g.prec + (kmin - 1) * vg)
            }
        };
        let vf = f.valuation().unwrap_or(f.prec);
        let g = g.truncate(prec);
        let mut acc = TruncSeries::zero(inner.param, prec);
        let (ginv, gpow_start) = if vf < 0 {
            (Some(g.inv()?), vf)
        } else {
            (None, 0)
        };
        let mut gp = if gpow_start < 0 {
            ginv.as_ref().unwrap().pow((-gpow_start) as u32)
        } else {
            TruncSeries::constant(inner.param, R::one(), prec)
        };
        let mut k = gpow_start;
        while k < f.prec {
            if let Some(c) = f.coeff_ref(k) {
                if !c.is_zero() {
                    acc = acc.add(&gp.mul_coeff(c).truncate(prec));
                }
            }
            k += 1;
            gp = if k == 0 {
                TruncSeries::constant(inner.param, R::one(), prec)
            } else if k < 0 {
                ginv.as_ref().unwrap().pow((-k) as u32)
            } else {
                gp.mul(&g).truncate(prec)
            };
            if k > 0 && gp.valuation().map_or(true, |v| v >= prec) {
                break;
            }
        }
        Ok(acc.truncate(prec))
    }

    /// Compositional inverse by Newton iteration on `f(g) = x`.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        if !self.coeff(0).is_zero() {
            return Err(SeriesError::NonzeroConstant);
        }
        let a1 = self.get(1).ok_or(SeriesError::NonInvertibleLinear)?;
        let a1_inv = a1.try_inv().ok_or(SeriesError::NonInvertibleLinear)?;
        let target = self.prec;
        let fp = self.derivative();
        let x = TruncSeries::var(self.param, target);
        let mut g = TruncSeries::monomial(self.param, a1_inv.clone(), 1, 2.min(target));
        let mut p = 2;
        while p < target {
            p = (2 * p).min(target);
            let gp = TruncSeries::new(self.param, g.start, g.coeffs.clone(), p);
            let fg = self.compose(&gp)?.truncate(p);
            let r = fg.sub(&x.truncate(p));
            let d = fp.compose(&gp)?.truncate(p);
            g = gp.sub(&r.div(&d)?.truncate(p)).truncate(p);
        }
        Ok(g.truncate(target))
    }
}

impl<R: Ring + fmt::Display> fmt::Display for TruncSeries<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})*{}^{k}", self.param)?;
        }
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "O({}^{})", self.param, self.prec)
    }
}

impl<R: Ring> fmt::Debug for TruncSeries<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncSeries[{}; start {}; prec {}; {:?}]", self.param, self.start, self.prec, self.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[(i64, i64)], prec: i32) -> TruncSeries<Rat> {
        TruncSeries::new(Param::Xi, 0, v.iter().map(|&(n, d)| Rat::new(n, d)).collect(), prec)
    }

    #[test]
    fn inverse_of_one_minus_x() {
        let f = q(&[(1, 1), (-1, 1)], 8);
        let g = f.inv().unwrap();
        for k in 0..8 {
            assert_eq!(g.coeff(k), Rat::one());
        }
    }

    #[test]
    fn revert_identity() {
        let x: TruncSeries<Rat> = TruncSeries::var(Param::Xi, 10);
        assert_eq!(x.revert().unwrap(), x);
    }

    #[test]
    fn revert_roundtrip() {
        let f = q(&[(0, 1), (2, 1), (1, 3), (-5, 7), (0, 1), (1, 2)], 10);
        let g = f.revert().unwrap();
        let id = f.compose(&g).unwrap();
        assert_eq!(id, TruncSeries::var(Param::Xi, 10));
    }

    #[test]
    fn precision_bookkeeping() {
        let a = q(&[(1, 1), (1, 1)], 5).shift(2);
        let b = q(&[(1, 1)], 3).shift(-1);
        let c = a.mul(&b);
        assert_eq!(c.prec(), 4);
        assert_eq!(c.valuation(), Some(1));
    }

    #[test]
    fn quarter_power() {
        let f = q(&[(1, 1), (3, 1), (-2, 5), (7, 3)], 8);
        let r = f.pow_rat(&Rat::new(1, 4)).unwrap();
        assert_eq!(r.pow(4), f);
    }

    #[test]
    fn integrate_then_differentiate() {
        let f = q(&[(1, 1), (2, 1), (3, 1)], 6);
        assert_eq!(f.integrate().unwrap().derivative(), f);
    }
}
