use crate::algebra::{Coeff, Rat};
use crate::curve::{CurveC45, Series};

use super::{LinForm, Sym};

/// Taylor coefficients of `σ(û + u(ξ))` in ξ.
///
/// `terms[n]` lists `(I, m_{n,I})` with `m_{n,I}` the coefficient of ξⁿ in
/// `Π_i u_i(ξ)^{c_i} / c_i!`, so that the ξⁿ coefficient of the expansion is
/// `Σ_I m_{n,I} σ_I(û)`.
#[derive(Clone, Debug)]
pub struct MasterExpansion {
    pub order: usize,
    pub terms: Vec<Vec<(Sym, Coeff)>>,
}

impl MasterExpansion {
    /// Coefficients for ξ⁰..ξ^order.
    pub fn new(order: usize) -> MasterExpansion {
        let curve = CurveC45::new();
        let prec = order as i32 + 1;
        let u: Vec<Series> = (1..=6).map(|i| curve.abel_series(i, prec)).collect();
        // powers[i][c] = u_{i+1}^c / c!, as dense vectors up to ξ^order
        let mut powers: Vec<Vec<Vec<Coeff>>> = Vec::with_capacity(6);
        for (k, ui) in u.iter().enumerate() {
            let w = crate::algebra::U_WEIGHTS[k] as usize;
            let base = dense(ui, order);
            let mut list = vec![one_dense(order)];
            let mut c = 1;
            while c * w <= order {
                let prev = list.last().unwrap();
                let next = mul_dense(prev, &base, order);
                let next: Vec<Coeff> = next.iter().map(|x| x.scale(&Rat::new(1, c as i64))).collect();
                list.push(next);
                c += 1;
            }
            powers.push(list);
        }
        let mut terms = vec![Vec::new(); order + 1];
        let mut counts = [0u8; 6];
        enumerate(&powers, 0, &mut counts, one_dense(order), 0, order, &mut terms);
        for t in terms.iter_mut() {
            t.sort_by(|a, b| b.0.cmp(&a.0));
        }
        MasterExpansion { order, terms }
    }

    /// ξⁿ coefficient of `σ_base(û + u(ξ))` as a linear form in symbols at û.
    pub fn coefficient(&self, n: usize, base: Sym) -> LinForm {
        LinForm::from_terms(self.terms[n].iter().map(|(s, c)| (s.join(base), c.clone())))
    }

    /// All coefficients, shifted by `base`.
    pub fn shifted(&self, base: Sym) -> Vec<LinForm> {
        (0..=self.order).map(|n| self.coefficient(n, base)).collect()
    }
}

/// Appends `base` to every symbol of every coefficient.
pub fn index_shift(expansion: &[LinForm], base: Sym) -> Vec<LinForm> {
    expansion.iter().map(|l| l.shift(base)).collect()
}

fn one_dense(order: usize) -> Vec<Coeff> {
    let mut v = vec![Coeff::zero(); order + 1];
    v[0] = Coeff::one();
    v
}

fn dense(s: &Series, order: usize) -> Vec<Coeff> {
    (0..=order).map(|k| s.get(k as i32).unwrap_or_else(Coeff::zero)).collect()
}

fn mul_dense(a: &[Coeff], b: &[Coeff], order: usize) -> Vec<Coeff> {
    let mut out = vec![Coeff::zero(); order + 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(order + 1 - i) {
            if !y.is_zero() {
                out[i + j] = &out[i + j] + &(x * y);
            }
        }
    }
    out
}

fn enumerate(
    powers: &[Vec<Vec<Coeff>>],
    k: usize,
    counts: &mut [u8; 6],
    acc: Vec<Coeff>,
    used: usize,
    order: usize,
    out: &mut [Vec<(Sym, Coeff)>],
) {
    if k == 6 {
        let sym = Sym::from_counts(*counts);
        for (n, c) in acc.iter().enumerate() {
            if !c.is_zero() {
                out[n].push((sym, c.clone()));
            }
        }
        return;
    }
    let w = crate::algebra::U_WEIGHTS[k] as usize;
    for c in 0..powers[k].len() {
        if used + c * w > order {
            break;
        }
        counts[k] = c as u8;
        let next = if c == 0 { acc.clone() } else { mul_dense(&acc, &powers[k][c], order) };
        enumerate(powers, k + 1, counts, next, used + c * w, order, out);
    }
    counts[k] = 0;
}
