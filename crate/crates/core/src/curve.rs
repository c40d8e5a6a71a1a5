//! The cyclic (4,5) curve `s^4 = t^5 + μ4 t^4 + μ3 t^3 + μ2 t^2 + μ1 t + μ0`,
//! its differentials and local expansions.
//!
//! At infinity the local parameter is ξ with `t = ξ^-4`; at `t = 0` the sheets
//! are distinguished by `s(0) = ι^N μ0^{1/4}`.

use crate::algebra::series::{Param, TruncSeries};
use crate::algebra::{Coeff, GradedPoly, Rat, U_WEIGHTS};

pub type Series = TruncSeries<Coeff>;

pub const GENUS: usize = 6;
pub const N_SHEETS: u8 = 4;

/// Sheet index N ∈ {0,1,2,3}; the sheet factor is ι^N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sheet(u8);

impl Sheet {
    pub fn new(n: u8) -> Sheet {
        Sheet(n % N_SHEETS)
    }

    pub fn all() -> [Sheet; 4] {
        [Sheet(0), Sheet(1), Sheet(2), Sheet(3)]
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// ι^{kN}.
    pub fn iota(self, k: i64) -> Coeff {
        Coeff::iota_pow(k * self.0 as i64)
    }
}

/// Curve data: the defining polynomial and the two differential bases.
#[derive(Clone, Debug)]
pub struct CurveC45 {
    /// `f(t)` coefficients of t^0..t^5.
    pub f: [Coeff; 6],
    /// Holomorphic numerators `g = (1, t, s, t^2, ts, s^2)` with `du_i = g_i dt/(4 s^3)`.
    pub g: [GradedPoly; 6],
    /// Second-kind numerators with `dr_j = h_j dt/(4 s^3)`.
    pub h: [GradedPoly; 6],
}

impl Default for CurveC45 {
    fn default() -> Self {
        CurveC45::new()
    }
}

fn tp(k: u16) -> GradedPoly {
    GradedPoly::t().pow(k as u32)
}

fn c(x: Coeff) -> GradedPoly {
    GradedPoly::constant(x)
}

impl CurveC45 {
    pub fn new() -> CurveC45 {
        let f = [Coeff::mu(0), Coeff::mu(1), Coeff::mu(2), Coeff::mu(3), Coeff::mu(4), Coeff::one()];
        let t = GradedPoly::t();
        let s = GradedPoly::s();
        let g = [c(Coeff::one()), t.clone(), s.clone(), tp(2), &t * &s, s.pow(2)];
        let s2 = s.pow(2);
        let ci = |n: i64| c(Coeff::int(n));
        let mu = |i: usize| c(Coeff::mu(i));
        let h1 = -&(&s2 * &(&(&(&ci(11) * &tp(3)) + &(&ci(8) * &(&tp(2) * &mu(4)))) + &(&(&ci(5) * &(&t * &mu(3))) + &(&ci(2) * &mu(2)))));
        let h2 = -&(&s2 * &(&(&(&ci(7) * &tp(2)) + &(&ci(4) * &(&t * &mu(4)))) + &mu(3)));
        let h3 = -&(&(&ci(2) * &(&t * &s)) * &(&(&(&ci(3) * &tp(2)) + &(&ci(2) * &(&t * &mu(4)))) + &mu(3)));
        let h4 = -&(&ci(3) * &(&t * &s2));
        let h5 = -&(&ci(2) * &(&tp(2) * &s));
        let h6 = -&tp(3);
        CurveC45 { f, g, h: [h1, h2, h3, h4, h5, h6] }
    }

    /// `f(t)` as a polynomial in t.
    pub fn f_poly(&self) -> GradedPoly {
        let mut p = GradedPoly::zero();
        for (k, a) in self.f.iter().enumerate() {
            p = &p + &(&c(a.clone()) * &tp(k as u16));
        }
        p
    }

    /// `s^4 - f(t)`, the defining relation.
    pub fn relation(&self) -> GradedPoly {
        &GradedPoly::s().pow(4) - &self.f_poly()
    }

    /// Genus `(n-1)(s-1)/2` for `(n,s) = (4,5)`.
    pub fn genus(&self) -> usize {
        (4 - 1) * (5 - 1) / 2
    }

    /// Evaluates a polynomial in t, s (u-free) on series `t(x)`, `s(x)`.
    pub fn eval_ts(p: &GradedPoly, t: &Series, s: &Series) -> Series {
        let prec = t.prec().min(s.prec()) + 64;
        let mut acc = Series::zero(t.param, prec);
        for (e, a) in p.terms() {
            assert!(e[..6].iter().all(|&x| x == 0), "u-variables in a curve function");
            let term = t.pow(e[6] as u32).mul(&s.pow(e[7] as u32)).mul_coeff(a);
            acc = acc.add(&term);
        }
        acc
    }

    /// `(t(ξ), s(ξ))` at infinity, `t = ξ^-4`, `s = ξ^-5 (1 + μ4 ξ^4 + … + μ0 ξ^20)^{1/4}`,
    /// with s known to `O(ξ^order)`.
    pub fn expand_at_infinity(&self, order: i32) -> (Series, Series) {
        let n = order + 5;
        let t = Series::monomial(Param::Xi, Coeff::one(), -4, i32::MAX / 4);
        let mut inner = vec![Coeff::zero(); 21];
        for (k, a) in self.f.iter().enumerate() {
            inner[4 * (5 - k)] = a.clone();
        }
        let inner = Series::new(Param::Xi, 0, inner, n.max(1));
        let root = inner.pow_rat(&Rat::new(1, 4)).expect("constant term 1");
        (t, root.shift(-5))
    }

    /// `du_i/dξ` as a series, known to `O(ξ^order)`.
    pub fn du_dxi(&self, i: usize, order: i32) -> Series {
        // du = g dt/(4 s^3), dt/dξ = -4 ξ^-5
        let (t, s) = self.expand_at_infinity(order + 10);
        let s3inv = s.pow(3).inv().expect("unit leading coefficient");
        let g = Self::eval_ts(&self.g[i - 1], &t, &s);
        g.mul(&s3inv).shift(-5).neg().truncate(order)
    }

    /// `dr_j/dξ` (pole at ξ = 0), known to `O(ξ^order)`.
    pub fn dr_dxi(&self, j: usize, order: i32) -> Series {
        let (t, s) = self.expand_at_infinity(order + 40);
        let s3inv = s.pow(3).inv().expect("unit leading coefficient");
        let h = Self::eval_ts(&self.h[j - 1], &t, &s);
        h.mul(&s3inv).shift(-5).neg().truncate(order)
    }

    /// `u_i(ξ)`: term-wise integral of `du_i` with zero constant, to `O(ξ^order)`.
    pub fn abel_series(&self, i: usize, order: i32) -> Series {
        self.du_dxi(i, order - 1).integrate().expect("holomorphic at infinity")
    }

    /// `d²u_i/dξ²` to `O(ξ^order)`.
    pub fn second_derivative_series(&self, i: usize, order: i32) -> Series {
        self.du_dxi(i, order + 1).derivative()
    }

    /// `s(t)` near `t = 0` on sheet N: `s = ι^N ρ (f(t)/μ0)^{1/4}`, to `O(t^order)`.
    pub fn expand_at_origin(&self, sheet: Sheet, order: i32) -> Series {
        let inv_mu0 = Coeff::mu(0).inv().unwrap();
        let inner: Vec<Coeff> = self.f.iter().map(|a| a * &inv_mu0).collect();
        let inner = Series::new(Param::T, 0, inner, order.max(1));
        let root = inner.pow_rat(&Rat::new(1, 4)).expect("constant term 1");
        root.mul_coeff(&(&sheet.iota(1) * &Coeff::rho()))
    }

    /// `du_i/dt` on sheet N near `t = 0`, to `O(t^order)`.
    pub fn du_dt_at_origin(&self, i: usize, sheet: Sheet, order: i32) -> Series {
        let s = self.expand_at_origin(sheet, order);
        let t = Series::var(Param::T, order);
        let s3inv = s.pow(3).inv().expect("unit at t=0");
        Self::eval_ts(&self.g[i - 1], &t, &s).mul(&s3inv).scale(&Rat::new(1, 4)).truncate(order)
    }

    /// Weight of `du_i` (equals the weight of u_i).
    pub fn du_weight(&self, i: usize) -> i32 {
        // g_i - 3 weight(s) + weight(dt)
        match self.g[i - 1].weight_of() {
            crate::algebra::Weight::Of(w) => w + 15 - 4,
            _ => unreachable!("g_i are monomials"),
        }
    }

    /// Weight of `dr_j`.
    pub fn dr_weight(&self, j: usize) -> Option<i32> {
        match self.h[j - 1].weight_of() {
            crate::algebra::Weight::Of(w) => Some(w + 15 - 4),
            _ => None,
        }
    }
}

/// `(u1..u6) ↦ (ιu1, ιu2, -u3, ιu4, -u5, -ιu6)`.
pub fn cyclic_action(v: &[GradedPoly; 6]) -> [GradedPoly; 6] {
    let f = cyclic_factors();
    std::array::from_fn(|k| v[k].map_coeffs(|_, c| c * &f[k]))
}

/// The per-component factors of the cyclic action.
pub fn cyclic_factors() -> [Coeff; 6] {
    let i = Coeff::iota();
    [i.clone(), i.clone(), Coeff::int(-1), i.clone(), Coeff::int(-1), -i]
}

/// Factor picked up by u_k under N applications of the cyclic action (k in 1..=6).
pub fn sheet_factor(k: usize, sheet: Sheet) -> Coeff {
    cyclic_factors()[k - 1].pow(sheet.index() as u32)
}

/// The weight of u_i (1-based).
pub fn u_weight(i: usize) -> i32 {
    U_WEIGHTS[i - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Coeff {
        Coeff::frac(n, d)
    }

    #[test]
    fn relation_holds_at_infinity() {
        let cv = CurveC45::new();
        let (t, s) = cv.expand_at_infinity(30);
        let lhs = s.pow(4);
        let rhs = CurveC45::eval_ts(&cv.f_poly(), &t, &s);
        let d = lhs.sub(&rhs);
        assert!(d.is_zero(), "{d:?}");
        assert_eq!(s.coeff(-1), Coeff::mu(4).scale(&Rat::new(1, 4)));
    }

    #[test]
    fn du_leading_terms() {
        let cv = CurveC45::new();
        let lead = [10, 6, 5, 2, 1, 0];
        for i in 1..=6 {
            let d = cv.du_dxi(i, 16);
            assert_eq!(d.valuation(), Some(lead[i - 1]));
            assert_eq!(d.coeff(lead[i - 1]), Coeff::int(-1));
        }
        let d6 = cv.du_dxi(6, 5);
        assert_eq!(d6.coeff(4), Coeff::mu(4).scale(&Rat::new(1, 4)));
    }

    #[test]
    fn abel_series_printed_terms() {
        let cv = CurveC45::new();
        let u1 = cv.abel_series(1, 19);
        assert_eq!(u1.coeff(11), r(-1, 11));
        assert_eq!(u1.coeff(15), Coeff::mu(4).scale(&Rat::new(1, 20)));
        let u6 = cv.abel_series(6, 10);
        assert_eq!(u6.coeff(1), Coeff::int(-1));
        assert_eq!(u6.coeff(5), Coeff::mu(4).scale(&Rat::new(1, 20)));
        let u2 = cv.abel_series(2, 16);
        let c15 = &Coeff::mu(3).scale(&Rat::new(1, 20)) - &(&Coeff::mu(4) * &Coeff::mu(4)).scale(&Rat::new(7, 160));
        assert_eq!(u2.coeff(15), c15);
    }

    #[test]
    fn abel_series_is_isobaric() {
        let cv = CurveC45::new();
        for i in 1..=6 {
            let u = cv.abel_series(i, 30);
            for (k, a) in u.terms() {
                assert_eq!(a.weight(), Ok(Some(u_weight(i) - k)), "u{i} xi^{k}");
            }
        }
    }

    #[test]
    fn second_derivatives() {
        let cv = CurveC45::new();
        let d5 = cv.second_derivative_series(5, 5);
        assert_eq!(d5.coeff(0), Coeff::int(-1));
        assert_eq!(d5.coeff(4), Coeff::mu(4).scale(&Rat::new(5, 2)));
        let d1 = cv.second_derivative_series(1, 10);
        assert_eq!(d1.coeff(9), Coeff::int(-10));
        for i in 1..=6 {
            assert_eq!(cv.second_derivative_series(i, 20), cv.abel_series(i, 22).derivative().derivative());
        }
    }

    #[test]
    fn origin_expansion_on_sheets() {
        let cv = CurveC45::new();
        for sh in Sheet::all() {
            let s = cv.expand_at_origin(sh, 8);
            let lead = &sh.iota(1) * &Coeff::rho();
            assert_eq!(s.coeff(0), lead);
            let lin = &(&lead * &Coeff::mu(1)) * &Coeff::mu(0).inv().unwrap().scale(&Rat::new(1, 4));
            assert_eq!(s.coeff(1), lin);
            let t = Series::var(Param::T, 8);
            let f = CurveC45::eval_ts(&cv.f_poly(), &t, &s);
            assert!(s.pow(4).sub(&f).is_zero());
        }
    }

    #[test]
    fn cyclic_action_order_four() {
        let v: [GradedPoly; 6] = std::array::from_fn(|k| GradedPoly::u(k + 1));
        let w = cyclic_action(&v);
        assert_eq!(w[2], -&GradedPoly::u(3));
        let mut x = v.clone();
        for _ in 0..4 {
            x = cyclic_action(&x);
        }
        assert_eq!(x, v);
    }

    #[test]
    fn differential_weights() {
        let cv = CurveC45::new();
        assert_eq!(cv.genus(), GENUS);
        for i in 1..=6 {
            assert_eq!(cv.du_weight(i), u_weight(i));
            assert_eq!(cv.dr_weight(i), Some(-u_weight(i)));
        }
        assert_eq!(GradedPoly::s().pow(4).weight_of(), crate::algebra::Weight::Of(-20));
    }
}
