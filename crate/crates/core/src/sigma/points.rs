//! Evaluation of u-polynomials at `U = Σ_j u(ξ_j)` for m formal points,
//! one homogeneous ξ-degree at a time. Symmetric polynomials in ξ_1..ξ_m are
//! written in the elementary symmetric basis e_1..e_m, which is faithful.

use std::collections::{BTreeMap, HashMap};

use crate::algebra::{Coeff, GradedPoly, Mono, Rat, U_WEIGHTS};
use crate::curve::CurveC45;

const BITS: u32 = 7;

/// Packed exponent vector of an e-monomial.
pub type EKey = u64;

fn ekey_e(j: usize) -> EKey {
    1 << (BITS * (j as u32 - 1))
}

/// Polynomial in e_1..e_5 with rational coefficients, sorted by key.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EPoly {
    terms: Vec<(EKey, Rat)>,
}

impl EPoly {
    pub fn one() -> EPoly {
        EPoly { terms: vec![(0, Rat::one())] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(EKey, Rat)] {
        &self.terms
    }

    fn from_map(m: HashMap<EKey, Rat>) -> EPoly {
        let mut terms: Vec<(EKey, Rat)> = m.into_iter().filter(|(_, r)| !r.is_zero()).collect();
        terms.sort_by_key(|t| t.0);
        EPoly { terms }
    }

    pub fn scale(&self, r: &Rat) -> EPoly {
        if r.is_zero() {
            return EPoly::default();
        }
        EPoly { terms: self.terms.iter().map(|(k, x)| (*k, x * r)).collect() }
    }

    pub fn add(&self, o: &EPoly) -> EPoly {
        let mut m: HashMap<EKey, Rat> = self.terms.iter().cloned().collect();
        acc_into(&mut m, o, &Rat::one());
        EPoly::from_map(m)
    }

    pub fn mul(&self, o: &EPoly) -> EPoly {
        let mut m: HashMap<EKey, Rat> = HashMap::with_capacity(self.terms.len() * 2);
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                let e = m.entry(a + b).or_insert_with(Rat::zero);
                *e += &(x * y);
            }
        }
        EPoly::from_map(m)
    }
}

fn acc_into(m: &mut HashMap<EKey, Rat>, p: &EPoly, k: &Rat) {
    for (key, x) in &p.terms {
        let e = m.entry(*key).or_insert_with(Rat::zero);
        *e += &(x * k);
    }
}

/// μ-coefficient map: monomial ↦ e-polynomial.
pub type CEPoly = BTreeMap<Mono, EPoly>;

fn cep_mul(a: &CEPoly, b: &CEPoly) -> CEPoly {
    let mut acc: BTreeMap<Mono, HashMap<EKey, Rat>> = BTreeMap::new();
    for (ma, pa) in a {
        for (mb, pb) in b {
            let (m, neg) = ma.mul(mb);
            let prod = pa.mul(pb);
            let k = if neg { -Rat::one() } else { Rat::one() };
            acc_into(acc.entry(m).or_default(), &prod, &k);
        }
    }
    finish(acc)
}

fn finish(acc: BTreeMap<Mono, HashMap<EKey, Rat>>) -> CEPoly {
    acc.into_iter().map(|(m, h)| (m, EPoly::from_map(h))).filter(|(_, p)| !p.is_zero()).collect()
}

/// Exponents of the u-part of a polynomial term.
pub type UExp = [u16; 6];

pub fn u_weight(a: &UExp) -> i32 {
    a.iter().zip(U_WEIGHTS.iter()).map(|(&c, &w)| c as i32 * w).sum()
}

/// Point evaluator for a fixed number of points.
pub struct PointEval {
    pub m: usize,
    max_excess: usize,
    lead: Vec<EPoly>,
    /// `delta[i][s-1]`: part of `U_{i+1}` of degree `w_{i+1} + 4s`.
    delta: Vec<Vec<CEPoly>>,
    lpow: HashMap<UExp, EPoly>,
    dpow: HashMap<(UExp, usize), CEPoly>,
}

impl PointEval {
    /// `max_excess` bounds `(n - weight)/4` over the evaluations requested later.
    pub fn new(m: usize, max_excess: usize) -> PointEval {
        assert!((1..=5).contains(&m));
        let curve = CurveC45::new();
        let top = 11 + 4 * max_excess;
        let p = power_sums(m, top);
        let mut lead = Vec::new();
        let mut delta = Vec::new();
        for i in 0..6 {
            let w = U_WEIGHTS[i] as usize;
            let u = curve.abel_series(i + 1, (w + 4 * max_excess + 1) as i32);
            let c0 = u.coeff(w as i32).as_rat().expect("rational leading coefficient");
            lead.push(p[w].scale(&c0));
            let mut ds = Vec::new();
            for s in 1..=max_excess {
                let c = u.coeff((w + 4 * s) as i32);
                let mut d = CEPoly::new();
                for (mono, r) in c.terms() {
                    d.insert(*mono, p[w + 4 * s].scale(r));
                }
                ds.push(d);
            }
            delta.push(ds);
        }
        PointEval { m, max_excess, lead, delta, lpow: HashMap::new(), dpow: HashMap::new() }
    }

    /// `Π L_i^{c_i}` with `L_i` the leading part of `U_i`.
    pub fn leading_power(&mut self, c: &UExp) -> &EPoly {
        if !self.lpow.contains_key(c) {
            let v = match c.iter().position(|&x| x > 0) {
                None => EPoly::one(),
                Some(i) => {
                    let mut d = *c;
                    d[i] -= 1;
                    self.leading_power(&d);
                    self.lpow[&d].mul(&self.lead[i])
                }
            };
            self.lpow.insert(*c, v);
        }
        &self.lpow[c]
    }

    /// Part of `Π δ_i^{b_i}` with total excess exactly r (every factor excess ≥ 1).
    fn delta_power(&mut self, b: &UExp, r: usize) -> CEPoly {
        if let Some(v) = self.dpow.get(&(*b, r)) {
            return v.clone();
        }
        let nb: usize = b.iter().map(|&x| x as usize).sum();
        let v = if nb == 0 {
            if r == 0 {
                CEPoly::from([(Mono::ONE, EPoly::one())])
            } else {
                CEPoly::new()
            }
        } else if r < nb {
            CEPoly::new()
        } else {
            let i = b.iter().position(|&x| x > 0).unwrap();
            let mut rest = *b;
            rest[i] -= 1;
            let mut acc: BTreeMap<Mono, HashMap<EKey, Rat>> = BTreeMap::new();
            for s in 1..=(r + 1 - nb) {
                let sub = self.delta_power(&rest, r - s);
                if sub.is_empty() {
                    continue;
                }
                let prod = cep_mul(&self.delta[i][s - 1], &sub);
                for (mo, p) in prod {
                    acc_into(acc.entry(mo).or_default(), &p, &Rat::one());
                }
            }
            finish(acc)
        };
        self.dpow.insert((*b, r), v.clone());
        v
    }

    /// Degree-n part of `P(U)` for a polynomial P in u1..u6 (t, s exponents must be zero).
    pub fn eval_degree(&mut self, poly: &GradedPoly, n: usize) -> CEPoly {
        // group the binomial expansion Π (L_i + δ_i)^{a_i} by (b, r)
        let mut groups: BTreeMap<(UExp, usize), BTreeMap<Mono, HashMap<EKey, Rat>>> = BTreeMap::new();
        for (e, c) in poly.terms() {
            let a: UExp = std::array::from_fn(|i| e[i]);
            let j = u_weight(&a);
            if j < 0 || j as usize > n || (n - j as usize) % 4 != 0 {
                continue;
            }
            let r = (n - j as usize) / 4;
            assert!(r <= self.max_excess, "excess {r} beyond evaluator bound {}", self.max_excess);
            for b in sub_vectors(&a, r) {
                let mut bin = Rat::one();
                let mut rest = a;
                for i in 0..6 {
                    bin = &bin * &Rat::from(binom(a[i] as i64, b[i] as i64));
                    rest[i] -= b[i];
                }
                let lp = self.leading_power(&rest).clone();
                let g = groups.entry((b, r)).or_default();
                for (mono, x) in c.terms() {
                    acc_into(g.entry(*mono).or_default(), &lp, &(x * &bin));
                }
            }
        }
        let mut out: BTreeMap<Mono, HashMap<EKey, Rat>> = BTreeMap::new();
        for ((b, r), g) in groups {
            let inner = finish(g);
            let d = self.delta_power(&b, r);
            for (mo, p) in cep_mul(&d, &inner) {
                acc_into(out.entry(mo).or_default(), &p, &Rat::one());
            }
        }
        finish(out)
    }
}

/// Power sums `p_0..p_top` of m points in the e-basis (Newton's identities).
fn power_sums(m: usize, top: usize) -> Vec<EPoly> {
    let e = |j: usize| EPoly { terms: vec![(ekey_e(j), Rat::one())] };
    let mut p: Vec<EPoly> = vec![EPoly { terms: vec![(0, Rat::from(m as i64))] }];
    for n in 1..=top {
        let mut acc: HashMap<EKey, Rat> = HashMap::new();
        for i in 1..=m.min(n - 1) {
            let sign = if i % 2 == 1 { Rat::one() } else { -Rat::one() };
            acc_into(&mut acc, &e(i).mul(&p[n - i]), &sign);
        }
        if n <= m {
            let sign = if n % 2 == 1 { 1 } else { -1 };
            acc_into(&mut acc, &e(n), &Rat::from(sign * n as i64));
        }
        p.push(EPoly::from_map(acc));
    }
    p
}

fn binom(n: i64, k: i64) -> i64 {
    let mut r = 1i64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All b ≤ a with `1 ≤ |b| ≤ r`, or only b = 0 when r = 0.
fn sub_vectors(a: &UExp, r: usize) -> Vec<UExp> {
    let mut out = Vec::new();
    fn rec(a: &UExp, k: usize, left: usize, cur: &mut UExp, out: &mut Vec<UExp>) {
        if k == 6 {
            out.push(*cur);
            return;
        }
        for x in 0..=(a[k] as usize).min(left) {
            cur[k] = x as u16;
            rec(a, k + 1, left - x, cur, out);
        }
        cur[k] = 0;
    }
    rec(a, 0, r, &mut [0; 6], &mut out);
    if r > 0 {
        out.retain(|b| b.iter().any(|&x| x > 0));
    }
    out
}

/// The number of e-monomials of degree n in m variables.
pub fn e_basis_size(m: usize, n: usize) -> usize {
    // partitions of n into parts ≤ m
    let mut ways = vec![0usize; n + 1];
    ways[0] = 1;
    for part in 1..=m {
        for x in part..=n {
            ways[x] += ways[x - part];
        }
    }
    ways[n]
}

/// Collapses a single-variable e-polynomial (m = 1, e_1 = ξ) to its coefficient.
pub fn single_point_value(p: &CEPoly) -> Coeff {
    let mut c = Coeff::zero();
    for (mo, e) in p {
        for (_, r) in e.terms() {
            c = &c + &Coeff::term(*mo, r.clone());
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_identities_two_points() {
        // p_2 = e1^2 - 2 e2
        let p = power_sums(2, 3);
        let e1sq = ekey_e(1) * 2;
        assert_eq!(p[2].terms().len(), 2);
        assert!(p[2].terms().contains(&(e1sq, Rat::one())));
        assert!(p[2].terms().contains(&(ekey_e(2), Rat::from(-2))));
    }

    #[test]
    fn one_point_u6_cubed() {
        // u6(ξ) = -ξ + μ4 ξ^5/20 + ...; ξ^7 coefficient of u6^3 is 3 μ4/20
        let mut ev = PointEval::new(1, 3);
        let mut e = [0u16; 8];
        e[5] = 3;
        let p = GradedPoly::monomial(e, Coeff::one());
        let c3 = single_point_value(&ev.eval_degree(&p, 3));
        assert_eq!(c3, Coeff::int(-1));
        let c7 = single_point_value(&ev.eval_degree(&p, 7));
        assert_eq!(c7, Coeff::frac(3, 20) * Coeff::mu(4));
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(e_basis_size(1, 9), 1);
        assert_eq!(e_basis_size(2, 4), 3);
        assert_eq!(e_basis_size(5, 5), 7);
    }
}
