//! Benney moments and their conserved densities, and a floating-point
//! Schwartz–Christoffel sampler for the slit maps
//! `λ(p) = p + ∫_{-∞}^p [φ(p') − 1] dp'`, `φ = Π(p − v̂_i) / Π(p − p̂_j)^{1−α_j}`.
//!
//! On the closed upper half plane every factor `(p − p̂)^{1−α}` is taken with
//! `arg(p − p̂) ∈ [0, π]`. That is the continuation from `+∞` through the upper
//! half plane, so no phase bookkeeping along paths is needed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::Rat;

// --- moments -------------------------------------------------------------------

/// Polynomial in the moments `A_0 … A_N` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct APoly {
    terms: BTreeMap<Vec<u16>, Rat>,
}

impl APoly {
    pub fn zero() -> APoly {
        APoly::default()
    }

    pub fn constant(r: Rat) -> APoly {
        let mut p = APoly::zero();
        p.add_term(Vec::new(), r);
        p
    }

    /// The moment `A_i`.
    pub fn var(i: usize) -> APoly {
        let mut e = vec![0u16; i + 1];
        e[i] = 1;
        let mut p = APoly::zero();
        p.add_term(e, Rat::from(1));
        p
    }

    fn add_term(&mut self, mut e: Vec<u16>, r: Rat) {
        while e.last() == Some(&0) {
            e.pop();
        }
        if r.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(Rat::zero);
        *slot = &*slot + &r;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, o: &APoly) -> APoly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &APoly) -> APoly {
        self.add(&o.scale(&Rat::from(-1)))
    }

    pub fn scale(&self, k: &Rat) -> APoly {
        let mut r = APoly::zero();
        for (e, c) in &self.terms {
            r.add_term(e.clone(), c * k);
        }
        r
    }

    pub fn mul(&self, o: &APoly) -> APoly {
        let mut r = APoly::zero();
        for (e, c) in &self.terms {
            for (f, d) in &o.terms {
                let n = e.len().max(f.len());
                let g: Vec<u16> = (0..n).map(|i| e.get(i).copied().unwrap_or(0) + f.get(i).copied().unwrap_or(0)).collect();
                r.add_term(g, c * d);
            }
        }
        r
    }

    /// Weight with `A_n` of weight `n + 2` (the grading in which `p` has weight 1).
    pub fn weight(&self) -> Option<u32> {
        let mut w = None;
        for e in self.terms.keys() {
            let x: u32 = e.iter().enumerate().map(|(i, &k)| (i as u32 + 2) * k as u32).sum();
            if *w.get_or_insert(x) != x {
                return None;
            }
        }
        w
    }
}

impl fmt::Display for APoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (e, c) in self.terms.iter().rev() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("A{i}") } else { format!("A{i}^{k}") })
                .collect();
            let one = Rat::from(1);
            let s = match (mono.is_empty(), *c == one) {
                (true, _) => c.to_string(),
                (false, true) => mono.join("*"),
                (false, false) => format!("{c}*{}", mono.join("*")),
            };
            parts.push(s);
        }
        write!(f, "{}", parts.join(" + "))
    }
}

type ASeries = Vec<APoly>;

fn s_mul(a: &ASeries, b: &ASeries, len: usize) -> ASeries {
    (0..len)
        .map(|k| (0..=k).fold(APoly::zero(), |acc, i| match (a.get(i), b.get(k - i)) {
            (Some(x), Some(y)) => acc.add(&x.mul(y)),
            _ => acc,
        }))
        .collect()
}

/// Inverse of a series with constant term 1.
fn s_inv(a: &ASeries, len: usize) -> ASeries {
    let mut r = vec![APoly::zero(); len];
    r[0] = APoly::constant(Rat::from(1));
    for k in 1..len {
        let mut acc = APoly::zero();
        for i in 1..=k {
            if let Some(x) = a.get(i) {
                acc = acc.add(&x.mul(&r[k - i]));
            }
        }
        r[k] = acc.scale(&Rat::from(-1));
    }
    r
}

fn s_pow(a: &ASeries, n: usize, len: usize) -> ASeries {
    let mut r = vec![APoly::zero(); len];
    r[0] = APoly::constant(Rat::from(1));
    for _ in 0..n {
        r = s_mul(&r, a, len);
    }
    r
}

/// `H_0 … H_N` from reverting `λ = p + Σ A_n p^{−n−1}` to `p = λ − Σ H_m λ^{−m−1}`.
pub fn conserved_densities(n: usize) -> Vec<APoly> {
    // P(x) = p/λ with x = 1/λ; the fixed point P = 1 − Σ A_k x^{k+2} P^{−k−1}
    // gains one order per iteration
    let len = n + 3;
    let mut p: ASeries = vec![APoly::zero(); len];
    p[0] = APoly::constant(Rat::from(1));
    for _ in 0..len {
        let inv = s_inv(&p, len);
        let mut next: ASeries = vec![APoly::zero(); len];
        next[0] = APoly::constant(Rat::from(1));
        let mut inv_pow = inv.clone();
        for k in 0..=n {
            if k > 0 {
                inv_pow = s_mul(&inv_pow, &inv, len);
            }
            for (j, c) in inv_pow.iter().enumerate() {
                let at = j + k + 2;
                if at < len {
                    next[at] = next[at].sub(&APoly::var(k).mul(c));
                }
            }
        }
        p = next;
    }
    (0..=n).map(|m| p[m + 2].scale(&Rat::from(-1))).collect()
}

/// `λ(p(λ))/λ − 1` through order `λ^{−N−2}`, by direct composition with
/// `p^{−k} = λ^{−k} (1 − h)^{−k}` expanded as `(Σ_j h^j)^k`.
pub fn reversion_residual(a_count: usize, h: &[APoly]) -> Vec<APoly> {
    let len = a_count + 2;
    // h(x) = Σ H_m x^{m+2}, so p/λ = 1 − h
    let mut hs: ASeries = vec![APoly::zero(); len];
    for (m, hm) in h.iter().enumerate() {
        if m + 2 < len {
            hs[m + 2] = hm.clone();
        }
    }
    let mut geo: ASeries = vec![APoly::zero(); len];
    for j in 0..len {
        let t = s_pow(&hs, j, len);
        geo = (0..len).map(|i| geo[i].add(&t[i])).collect();
    }
    let mut total: ASeries = (0..len).map(|i| hs[i].scale(&Rat::from(-1))).collect();
    for k in 0..a_count {
        let g = s_pow(&geo, k + 1, len);
        for (j, c) in g.iter().enumerate() {
            if j + k + 2 < len {
                total[j + k + 2] = total[j + k + 2].add(&APoly::var(k).mul(c));
            }
        }
    }
    total
}

// --- Schwartz–Christoffel ---------------------------------------------------------

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum ScError {
    #[error("marked points violate the ordering at position {0}")]
    Ordering(usize),
    #[error("exponents do not give φ → 1 at infinity (Σ(1−α) = {sum}, {slits} slit ends)")]
    Exponents { sum: f64, slits: usize },
    #[error("point {0} has negative imaginary part")]
    LowerHalfPlane(Complex64),
    #[error("quadrature reached error {achieved:e} above tolerance {tol:e}")]
    Tolerance { achieved: f64, tol: f64 },
    #[error("φ has residue {0:e} at infinity, so λ − p does not converge")]
    Residue(f64),
    #[error("index {0} out of range")]
    Index(usize),
}

/// A vertex `p̂` with angle `α π = (k/m) π` at its image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub p: f64,
    pub alpha_num: u32,
    pub alpha_den: u32,
}

impl Vertex {
    pub fn new(p: f64, alpha_num: u32, alpha_den: u32) -> Vertex {
        Vertex { p, alpha_num, alpha_den }
    }

    /// Exponent `1 − α` of `(p − p̂)` in the denominator.
    pub fn exponent(&self) -> f64 {
        1.0 - self.alpha_num as f64 / self.alpha_den as f64
    }
}

/// Marked points on the real axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SlitConfig {
    pub vertices: Vec<Vertex>,
    pub ends: Vec<f64>,
}

/// One marked point in left-to-right order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Marked {
    Vertex(usize),
    End(usize),
}

impl SlitConfig {
    /// Eight vertices with α = 1/4 and six slit ends.
    pub fn tetragonal(p: [f64; 8], v: [f64; 6]) -> Result<SlitConfig, ScError> {
        let cfg = SlitConfig { vertices: p.iter().map(|&x| Vertex::new(x, 1, 4)).collect(), ends: v.to_vec() };
        cfg.check_tetragonal_order()?;
        Ok(cfg)
    }

    /// A fixed asymmetric configuration used by the tests and the CLI sampler (v̂6 still free).
    pub fn desk() -> SlitConfig {
        SlitConfig {
            vertices: [-7.3, -5.1, -2.9, -1.2, 0.8, 2.7, 4.6, 7.4].iter().map(|&x| Vertex::new(x, 1, 4)).collect(),
            ends: vec![-6.0, -4.2, -2.1, 1.9, 3.5, 6.0],
        }
    }

    /// `p̂1 < v̂1 < p̂2 < v̂2 < p̂3 < v̂3 < p̂4 < p̂5 < v̂4 < p̂6 < v̂5 < p̂7 < v̂6 < p̂8`.
    pub fn tetragonal_order() -> [Marked; 14] {
        use Marked::*;
        [Vertex(0), End(0), Vertex(1), End(1), Vertex(2), End(2), Vertex(3), Vertex(4), End(3), Vertex(5), End(4), Vertex(6), End(5), Vertex(7)]
    }

    fn position(&self, m: Marked) -> f64 {
        match m {
            Marked::Vertex(i) => self.vertices[i].p,
            Marked::End(i) => self.ends[i],
        }
    }

    pub fn check_tetragonal_order(&self) -> Result<(), ScError> {
        if self.vertices.len() != 8 || self.ends.len() != 6 {
            return Err(ScError::Ordering(0));
        }
        let order = Self::tetragonal_order();
        for (i, w) in order.windows(2).enumerate() {
            if self.position(w[0]) >= self.position(w[1]) {
                return Err(ScError::Ordering(i + 1));
            }
        }
        Ok(())
    }

    /// All marked points sorted, vertices before ends on ties.
    pub fn marked(&self) -> Vec<(f64, Marked)> {
        let mut v: Vec<(f64, Marked)> = self.vertices.iter().enumerate().map(|(i, x)| (x.p, Marked::Vertex(i))).collect();
        v.extend(self.ends.iter().enumerate().map(|(i, &x)| (x, Marked::End(i))));
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| matches!(a.1, Marked::End(_)).cmp(&matches!(b.1, Marked::End(_)))));
        v
    }

    /// `Σ(1−α_j)` must equal the number of slit ends.
    pub fn check_exponents(&self) -> Result<(), ScError> {
        let sum: f64 = self.vertices.iter().map(Vertex::exponent).sum();
        if (sum - self.ends.len() as f64).abs() > 1e-12 {
            return Err(ScError::Exponents { sum, slits: self.ends.len() });
        }
        Ok(())
    }

    /// Coefficient of `1/p` in φ at infinity: `Σ(1−α_j) p̂_j − Σ v̂_i`.
    pub fn residue(&self) -> f64 {
        self.vertices.iter().map(|v| v.exponent() * v.p).sum::<f64>() - self.ends.iter().sum::<f64>()
    }

    /// φ at a point of the closed upper half plane.
    pub fn phi(&self, p: Complex64) -> Complex64 {
        self.phi_offset(p, None)
    }

    /// φ with the distance to one vertex supplied exactly (used near endpoints).
    fn phi_offset(&self, p: Complex64, near: Option<(usize, Complex64)>) -> Complex64 {
        let mut num = Complex64::new(1.0, 0.0);
        for &v in &self.ends {
            num *= p - v;
        }
        let mut den = Complex64::new(1.0, 0.0);
        for (j, v) in self.vertices.iter().enumerate() {
            let d = match near {
                Some((k, d)) if k == j => d,
                _ => p - v.p,
            };
            den *= uhp_pow(d, v.exponent());
        }
        num / den
    }
}

/// `z^e` with `arg z ∈ [0, π]` (negative reals get arg π).
fn uhp_pow(z: Complex64, e: f64) -> Complex64 {
    let mut a = z.im.atan2(z.re);
    // rounding can leave a point a hair below the axis
    if a < 0.0 {
        a = if a < -PI / 2.0 { PI } else { 0.0 };
    }
    Complex64::from_polar(z.norm().powf(e), e * a)
}

/// Sets the slit end `index` so that the residue vanishes; the ordering must survive.
pub fn fix_residue(cfg: &SlitConfig, index: usize) -> Result<SlitConfig, ScError> {
    if index >= cfg.ends.len() {
        return Err(ScError::Index(index));
    }
    let mut out = cfg.clone();
    out.ends[index] = 0.0;
    out.ends[index] = out.residue();
    if out.vertices.len() == 8 && out.ends.len() == 6 {
        out.check_tetragonal_order()?;
    }
    Ok(out)
}

// --- Gauss–Kronrod ---------------------------------------------------------------

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WEIGHTS[7];
    let mut g = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += s * GK_WEIGHTS[i];
        if i % 2 == 1 {
            g += s * G_WEIGHTS[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive G7/K15 on `[a, b]`, bisecting the worst interval.
pub fn integrate(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> (Complex64, f64) {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..2000 {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= tol {
            break;
        }
        let (i, _) = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let v = parts.iter().fold(Complex64::new(0.0, 0.0), |s, p| s + p.2);
    (v, parts.iter().map(|p| p.3).sum())
}

/// λ-value with its quadrature error bound and the path used.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error: f64,
    pub path: String,
}

impl SlitConfig {
    fn scale(&self) -> f64 {
        self.marked().iter().map(|m| m.0.abs()).fold(1.0, f64::max)
    }

    fn anchor(&self) -> f64 {
        -4.0 * self.scale()
    }

    /// Power sums `Σ v̂^k − Σ(1−α) p̂^k`, so that `log φ(1/x) = −Σ_k P_k x^k / k`.
    fn power_sums(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|k| {
                let k = k as i32;
                self.ends.iter().map(|v| v.powi(k)).sum::<f64>() - self.vertices.iter().map(|v| v.exponent() * v.p.powi(k)).sum::<f64>()
            })
            .collect()
    }

    /// `∫_{−∞}^{a} (φ − 1)`, as `∫_{1/a}^{0} (φ(1/x) − 1)/x² dx` with `log φ` summed
    /// as a series (`|x p̂| ≤ 1/4` there). The `k = 1` term is the residue, taken as zero.
    fn tail(&self, a: f64, tol: f64) -> (Complex64, f64) {
        const TERMS: usize = 40;
        let ps = self.power_sums(TERMS);
        let f = |x: f64| {
            let mut l = 0.0;
            let mut xk = x;
            for (k, pk) in ps.iter().enumerate().skip(2) {
                xk *= x;
                l -= pk * xk / k as f64;
            }
            Complex64::new(l.exp_m1() / (x * x), 0.0)
        };
        integrate(&f, 1.0 / a, 0.0, tol)
    }

    /// `∫ (φ − 1)` over the real segment `[x0, x1]`, with `u^m` substitutions at
    /// vertex endpoints.
    fn real_segment(&self, x0: f64, v0: Option<usize>, x1: f64, v1: Option<usize>, tol: f64) -> (Complex64, f64) {
        let mid = 0.5 * (x0 + x1);
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (end, vtx, other, sign) in [(x0, v0, mid, 1.0), (x1, v1, mid, -1.0)] {
            // half-interval from `end` toward the middle
            let (v, e) = match vtx {
                Some(j) => {
                    let m = self.vertices[j].alpha_den as i32;
                    let len = (other - end).abs();
                    let umax = len.powf(1.0 / m as f64);
                    let f = |u: f64| {
                        let d = sign * u.powi(m);
                        let x = end + d;
                        let phi = self.phi_offset(Complex64::new(x, 0.0), Some((j, Complex64::new(d, 0.0))));
                        (phi - 1.0) * (m as f64 * u.powi(m - 1))
                    };
                    integrate(&f, 0.0, umax, tol / 4.0)
                }
                None => {
                    let f = |x: f64| self.phi(Complex64::new(x, 0.0)) - 1.0;
                    integrate(&f, end.min(other), end.max(other), tol / 4.0)
                }
            };
            total += v;
            err += e;
        }
        (total, err)
    }

    /// `∫ (φ − 1)` along the straight segment from `z0` to `z1`.
    fn complex_segment(&self, z0: Complex64, z1: Complex64, tol: f64) -> (Complex64, f64) {
        let dz = z1 - z0;
        let f = |s: f64| (self.phi(z0 + dz * s) - 1.0) * dz;
        integrate(&f, 0.0, 1.0, tol)
    }
}

/// `λ(p) = p + ∫_{−∞}^p [φ(p') − 1] dp'` on the closed upper half plane.
pub fn sc_map(cfg: &SlitConfig, p: Complex64, tol: f64) -> Result<QuadratureResult, ScError> {
    if p.im < 0.0 {
        return Err(ScError::LowerHalfPlane(p));
    }
    let c1 = cfg.residue();
    if c1.abs() > 1e-9 * cfg.scale() {
        return Err(ScError::Residue(c1));
    }
    let a = cfg.anchor();
    let (mut value, mut error) = cfg.tail(a, tol / 4.0);
    let path;
    if p.re <= a {
        let (v, e) = cfg.complex_segment(Complex64::new(a, 0.0), p, tol / 2.0);
        value += v;
        error += e;
        path = format!("-inf -> {a} -> ({}, {})", p.re, p.im);
    } else if p.im > 0.0 {
        // up, across at a safe height, down; only the last leg can come near a marked point
        let h = p.im.max(cfg.scale());
        let legs = [Complex64::new(a, 0.0), Complex64::new(a, h), Complex64::new(p.re, h), p];
        for w in legs.windows(2) {
            if w[0] != w[1] {
                let (v, e) = cfg.complex_segment(w[0], w[1], tol / 6.0);
                value += v;
                error += e;
            }
        }
        path = format!("-inf -> {a} -> {a}+{h}i -> {}+{h}i -> ({}, {})", p.re, p.re, p.im);
    } else {
        // along the real axis, one segment between consecutive marked points
        let mut stops: Vec<(f64, Option<usize>)> = vec![(a, None)];
        for (x, m) in cfg.marked() {
            if x < p.re {
                if let Marked::Vertex(j) = m {
                    stops.push((x, Some(j)));
                }
            }
        }
        let end_vertex = cfg.marked().into_iter().find_map(|(x, m)| match m {
            Marked::Vertex(j) if x == p.re => Some(j),
            _ => None,
        });
        stops.push((p.re, end_vertex));
        let n = stops.len() - 1;
        for w in stops.windows(2) {
            let (v, e) = cfg.real_segment(w[0].0, w[0].1, w[1].0, w[1].1, tol / (2.0 * n as f64));
            value += v;
            error += e;
        }
        path = format!("-inf -> {a} -> {} along the real axis ({n} segments)", p.re);
    }
    if error > tol {
        return Err(ScError::Tolerance { achieved: error, tol });
    }
    Ok(QuadratureResult { value: p + value, error, path })
}

/// Evaluates many points concurrently; output order follows the input.
pub fn sc_sample(cfg: &SlitConfig, points: &[Complex64], tol: f64) -> Vec<Result<QuadratureResult, ScError>> {
    points.par_iter().map(|&p| sc_map(cfg, p, tol)).collect()
}

/// Tab-separated `p_re p_im λ_re λ_im err` lines.
pub fn sample_text(points: &[Complex64], results: &[Result<QuadratureResult, ScError>]) -> String {
    let mut s = String::from("p_re\tp_im\tlambda_re\tlambda_im\terr\n");
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(q) => s.push_str(&format!("{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.3e}\n", p.re, p.im, q.value.re, q.value.im, q.error)),
            Err(e) => s.push_str(&format!("{:.12e}\t{:.12e}\tnan\tnan\t{e}\n", p.re, p.im)),
        }
    }
    s
}

/// `(1/2πi) ∮ φ dp` on `|p| = r`, by the trapezoid rule; φ is single valued outside
/// the marked points, so this is the 1/p coefficient. Independent of [`SlitConfig::residue`].
pub fn residue_by_contour(cfg: &SlitConfig, r: f64, n: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
        let p = Complex64::from_polar(r, th);
        // φ = Π(1 − v/p) / Π(1 − p̂/p)^{1−α} · p^{#v − Σ(1−α)}; the last factor is 1
        let mut phi = Complex64::new(1.0, 0.0);
        for &v in &cfg.ends {
            phi *= 1.0 - v / p;
        }
        for v in &cfg.vertices {
            phi /= (1.0 - v.p / p).powf(v.exponent());
        }
        acc += (phi - 1.0) * p;
    }
    (acc / n as f64).re
}

/// Image-geometry diagnostics for a tetragonal configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SlitGeometry {
    /// `λ` at the 14 marked points, in the ordering chain.
    pub images: Vec<(Marked, Complex64)>,
    /// Direction of each image edge (radians), one per gap of the chain.
    pub directions: Vec<f64>,
    /// Distance of each direction from the nearest multiple of π/4.
    pub max_angle_defect: f64,
    /// For each slit end, `|Δ direction − π|` across it.
    pub turn_defects: Vec<f64>,
    pub max_error: f64,
}

fn wrap(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Maps every marked point and measures the slit directions and turns.
pub fn slit_geometry(cfg: &SlitConfig, tol: f64) -> Result<SlitGeometry, ScError> {
    cfg.check_tetragonal_order()?;
    let order = SlitConfig::tetragonal_order();
    let pts: Vec<Complex64> = order.iter().map(|&m| Complex64::new(cfg.position(m), 0.0)).collect();
    let results: Vec<QuadratureResult> = sc_sample(cfg, &pts, tol).into_iter().collect::<Result<_, _>>()?;
    let images: Vec<(Marked, Complex64)> = order.iter().copied().zip(results.iter().map(|r| r.value)).collect();
    let directions: Vec<f64> = images.windows(2).map(|w| (w[1].1 - w[0].1).arg()).collect();
    let q = PI / 4.0;
    let max_angle_defect = directions.iter().map(|d| ((d / q).round() * q - d).abs()).fold(0.0, f64::max);
    let mut turn_defects = Vec::new();
    for (i, (m, _)) in images.iter().enumerate() {
        if matches!(m, Marked::End(_)) && i > 0 && i + 1 < images.len() {
            turn_defects.push(wrap(directions[i] - directions[i - 1] - PI).abs());
        }
    }
    let max_error = results.iter().map(|r| r.error).fold(0.0, f64::max);
    Ok(SlitGeometry { images, directions, max_angle_defect, turn_defects, max_error })
}

/// The canonical-map constants of a tetragonal configuration once
/// `p̂6 = p̂7 = v̂5 = v̂6 = p̂8`: `T_i = 1/(p̂8 − p̂_i)`, the curve
/// `s⁴ = Π(t − T_i)`, `K[A4t⁴ + … + A1t + 1] = K Π((p̂8 − v̂_i)t − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalMap {
    pub t: [f64; 5],
    /// `μ0 … μ4`.
    pub mu: [f64; 5],
    /// `A1 … A4`.
    pub a: [f64; 4],
    /// The branch `k = −μ0^{−1/4}` (principal root) of `k⁴ = −Π 1/T_i`, and
    /// `K = −4/k³`. For real data `μ0 < 0` whenever every `p̂_i < p̂8`, so both are complex.
    pub k: Complex64,
    pub big_k: Complex64,
}

pub fn canonical_map(p: [f64; 6], v: [f64; 4]) -> CanonicalMap {
    let p8 = p[5];
    let t: [f64; 5] = std::array::from_fn(|i| 1.0 / (p8 - p[i]));
    // Π(t − T_i) coefficients, low to high
    let mut c = vec![1.0];
    for &ti in &t {
        let mut n = vec![0.0; c.len() + 1];
        for (j, &x) in c.iter().enumerate() {
            n[j + 1] += x;
            n[j] -= ti * x;
        }
        c = n;
    }
    let mu: [f64; 5] = std::array::from_fn(|i| c[i]);
    let mut q = vec![1.0];
    for &vi in &v {
        // multiply by ((p8 − v)t − 1)
        let mut n = vec![0.0; q.len() + 1];
        for (j, &x) in q.iter().enumerate() {
            n[j + 1] += (p8 - vi) * x;
            n[j] -= x;
        }
        q = n;
    }
    let a: [f64; 4] = std::array::from_fn(|i| q[i + 1]);
    let k = -Complex64::new(mu[0], 0.0).powf(-0.25);
    CanonicalMap { t, mu, a, k, big_k: -4.0 / k.powi(3) }
}

impl CanonicalMap {
    /// `A1 − (3/4) μ1/μ0`, zero exactly when the residue vanishes.
    pub fn residue_defect(&self) -> f64 {
        self.a[0] - 0.75 * self.mu[1] / self.mu[0]
    }
}

/// The five-vertex configuration left after collapsing the second triple:
/// `p̂1..p̂5` with α = 1/4, `p̂8` with α = 3/4, ends `v̂1..v̂4`.
pub fn collapse_second_triple(p: [f64; 6], v: [f64; 4]) -> SlitConfig {
    let mut vertices: Vec<Vertex> = p[..5].iter().map(|&x| Vertex::new(x, 1, 4)).collect();
    vertices.push(Vertex::new(p[5], 3, 4));
    SlitConfig { vertices, ends: v.to_vec() }
}
