//! Taylor expansion of σ about the origin, `σ = C15 + C19 + C23 + …`.
//!
//! C15 is the Schur–Weierstrass polynomial. Each higher C_k is fixed by
//! requiring σ to vanish on the Abel images of up to five points (together
//! with σ6, σ5, σ4, σ3 on fewer points), and optionally by the Kleinian
//! identity `σ236 = Z σ23` on the one-point image. Whatever the constraints
//! leave undetermined is reported per C_k.

mod points;

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::series::SeriesError;
use crate::algebra::{Coeff, GradedPoly, ModularError, Mono, Param, Rat, RatSystem, MU_WEIGHTS, U_WEIGHTS};
use crate::curve::{CurveC45, Series};
use crate::strata::{SigmaExpr, SigmaQuotient, Sym};

pub use points::{e_basis_size, u_weight, CEPoly, EPoly, PointEval, UExp};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigmaError {
    #[error("C{k}: constraint system is inconsistent")]
    Inconsistent { k: i32 },
    #[error("C{k}: {source}")]
    Solve { k: i32, source: ModularError },
    #[error("C{k} requested but the next weight to build is {next}")]
    OutOfOrder { k: i32, next: i32 },
    #[error("expansion table too short: {0} is zero to the available order")]
    TableTooShort(String),
    #[error("series: {0}")]
    Series(#[from] SeriesError),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// `(num, den, [e1..e6])` for each term of the Schur–Weierstrass polynomial.
const SW45: [(i64, i64, [u16; 6]); 32] = [
    (1, 8382528, [0, 0, 0, 0, 0, 15]),
    (1, 336, [0, 0, 0, 1, 2, 8]),
    (-1, 12, [1, 0, 0, 0, 0, 4]),
    (-1, 126, [0, 0, 1, 0, 1, 7]),
    (-1, 6, [0, 0, 1, 1, 1, 4]),
    (-1, 72, [0, 0, 0, 3, 0, 6]),
    (-1, 33264, [0, 0, 0, 0, 2, 11]),
    (1, 27, [0, 0, 0, 0, 6, 3]),
    (2, 3, [0, 0, 1, 1, 3, 0]),
    (-2, 1, [0, 0, 1, 2, 1, 1]),
    (-1, 1, [0, 2, 0, 0, 0, 1]),
    (-2, 9, [0, 0, 1, 0, 3, 3]),
    (-1, 1, [0, 0, 2, 1, 0, 0]),
    (1, 12, [0, 0, 0, 4, 0, 3]),
    (-1, 3024, [0, 0, 0, 2, 0, 9]),
    (-1, 756, [0, 0, 0, 0, 4, 7]),
    (1, 1008, [0, 1, 0, 0, 0, 8]),
    (1, 3, [0, 1, 0, 0, 4, 0]),
    (1, 3, [0, 0, 2, 0, 0, 3]),
    (-1, 9, [0, 0, 0, 1, 6, 0]),
    (1, 399168, [0, 0, 0, 1, 0, 12]),
    (1, 1, [0, 1, 0, 1, 2, 1]),
    (1, 4, [0, 0, 0, 5, 0, 0]),
    (2, 1, [0, 1, 1, 0, 1, 0]),
    (1, 6, [0, 1, 0, 0, 2, 4]),
    (1, 12, [0, 1, 0, 1, 0, 5]),
    (-1, 2, [0, 1, 0, 2, 0, 2]),
    (1, 2, [0, 0, 0, 3, 2, 2]),
    (-1, 3, [0, 0, 0, 2, 4, 1]),
    (-1, 36, [0, 0, 0, 1, 4, 4]),
    (1, 1, [1, 0, 0, 1, 0, 1]),
    (-1, 1, [1, 0, 0, 0, 2, 0]),
];

/// The Schur–Weierstrass polynomial SW₄,₅ (weight 15, no μ).
pub fn schur_weierstrass() -> GradedPoly {
    let mut p = GradedPoly::zero();
    for (n, d, e) in SW45 {
        p = &p + &GradedPoly::u_mono(e, Rat::new(n, d));
    }
    p
}

/// Partition attached to the Weierstrass gap sequence of the curve:
/// `λ_i = w_i - (g - i)` for the u-weights in decreasing order.
pub fn sw_partition() -> Vec<u32> {
    let g = U_WEIGHTS.len() as i32;
    U_WEIGHTS.iter().enumerate().map(|(i, w)| (w - (g - 1 - i as i32)) as u32).collect()
}

/// Product of the hook lengths of a partition; `1/H` is the coefficient of
/// `p_1^|λ|` (here `u6^15`) in the Schur function.
pub fn hook_product(lambda: &[u32]) -> u64 {
    let conj = |j: u32| lambda.iter().filter(|&&l| l > j).count() as u32;
    let mut h = 1u64;
    for (i, &l) in lambda.iter().enumerate() {
        for j in 0..l {
            h *= (l - j + conj(j) - i as u32 - 1) as u64;
        }
    }
    h
}

/// Odd-degree u-monomials of weight k, in a fixed enumeration order.
pub fn odd_isobaric_monomials(k: i32) -> Vec<UExp> {
    let mut out = Vec::new();
    fn rec(i: usize, left: i32, cur: &mut UExp, out: &mut Vec<UExp>) {
        if i == 6 {
            if left == 0 && cur.iter().map(|&x| x as u32).sum::<u32>() % 2 == 1 {
                out.push(*cur);
            }
            return;
        }
        let w = U_WEIGHTS[i];
        let mut c = 0;
        while c * w <= left {
            cur[i] = c as u16;
            rec(i + 1, left - c * w, cur, out);
            c += 1;
        }
        cur[i] = 0;
    }
    if k > 0 {
        rec(0, k, &mut [0; 6], &mut out);
    }
    out
}

/// Monomials in μ0..μ4 (non-negative exponents) of the given weight.
pub fn mu_monomials(weight: i32) -> Vec<Mono> {
    let mut out = Vec::new();
    fn rec(i: usize, left: i32, cur: &mut [i16; 5], out: &mut Vec<Mono>) {
        if i == 5 {
            if left == 0 {
                out.push(Mono::from_mu(*cur));
            }
            return;
        }
        let w = -MU_WEIGHTS[i];
        let mut c = 0;
        while c * w <= left {
            cur[i] = c as i16;
            rec(i + 1, left - c * w, cur, out);
            c += 1;
        }
        cur[i] = 0;
    }
    if weight <= 0 {
        rec(0, -weight, &mut [0; 5], &mut out);
    }
    out.sort();
    out
}

/// Constraint families used by [`SigmaBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    /// Number of points m (1..=5): σ vanishes on m points, σ6 on min(m,4),
    /// σ5 on min(m,3), σ4 on min(m,2), σ3 on one point.
    pub points: usize,
    /// Impose `σ236 = Z σ23` on the one-point image.
    pub kleinian: bool,
    /// Value given to coefficients the constraints leave free.
    pub free_value: Rat,
}

impl Default for BuildOptions {
    fn default() -> BuildOptions {
        BuildOptions { points: 5, kleinian: true, free_value: Rat::zero() }
    }
}

impl BuildOptions {
    /// One-point vanishing of σ, σ6, σ5, σ4, σ3 only.
    pub fn one_point() -> BuildOptions {
        BuildOptions { points: 1, kleinian: false, free_value: Rat::zero() }
    }
}

/// One solved C_k.
#[derive(Clone, Debug, PartialEq)]
pub struct CkSolution {
    pub k: i32,
    pub poly: GradedPoly,
    pub candidates: usize,
    pub rows: usize,
    /// Coefficients `(μ-monomial, u-monomial)` the constraints did not fix.
    pub free: Vec<(Mono, UExp)>,
}

impl CkSolution {
    pub fn is_resolved(&self) -> bool {
        self.free.is_empty()
    }

    /// Odd under u ↦ −u, u-weight k with coefficient weight 15 − k.
    pub fn check_shape(&self) -> bool {
        if !self.poly.is_odd() {
            return false;
        }
        self.poly.terms().all(|(e, c)| {
            let a: UExp = std::array::from_fn(|i| e[i]);
            e[6] == 0 && e[7] == 0 && u_weight(&a) == self.k && c.weight() == Ok(Some(15 - self.k))
        })
    }
}

struct Family {
    deriv: Vec<usize>,
    eval: PointEval,
}

impl Family {
    fn deriv_weight(&self) -> i32 {
        self.deriv.iter().map(|&i| U_WEIGHTS[i - 1]).sum()
    }
}

type Row = (Vec<(usize, Rat)>, Vec<Rat>);

/// Builds C15, C19, … in order.
pub struct SigmaBuilder {
    pub options: BuildOptions,
    families: Vec<Family>,
    klein: Option<(PointEval, Vec<(i32, Coeff)>)>,
    lower: GradedPoly,
    done: Vec<CkSolution>,
}

impl SigmaBuilder {
    /// `depth` is the highest weight that will be built.
    pub fn new(depth: i32, options: BuildOptions) -> SigmaBuilder {
        let m = options.points.clamp(1, 5);
        let max_excess = ((depth - 15).max(0) / 4) as usize + 1;
        let spec: [(Vec<usize>, usize); 5] =
            [(vec![], m), (vec![6], m.min(4)), (vec![5], m.min(3)), (vec![4], m.min(2)), (vec![3], 1)];
        let families = spec.into_iter().map(|(deriv, m)| Family { deriv, eval: PointEval::new(m, max_excess) }).collect();
        let klein = options.kleinian.then(|| (PointEval::new(1, max_excess), kleinian_z(depth)));
        SigmaBuilder { options, families, klein, lower: GradedPoly::zero(), done: Vec::new() }
    }

    pub fn next_weight(&self) -> i32 {
        15 + 4 * self.done.len() as i32
    }

    pub fn solved(&self) -> &[CkSolution] {
        &self.done
    }

    pub fn into_solved(self) -> Vec<CkSolution> {
        self.done
    }

    /// Solves for C_k given all lower C_j.
    pub fn build_ck(&mut self, k: i32) -> Result<&CkSolution, SigmaError> {
        if k != self.next_weight() {
            return Err(SigmaError::OutOfOrder { k, next: self.next_weight() });
        }
        let cands = odd_isobaric_monomials(k);
        let mus = mu_monomials(15 - k);
        let mu_pos: HashMap<Mono, usize> = mus.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let lower = &self.lower;
        let mut rows: Vec<Row> = self
            .families
            .par_iter_mut()
            .flat_map_iter(|f| family_rows(f, k, &cands, lower, &mu_pos))
            .collect();
        if let Some((ev, z)) = self.klein.as_mut() {
            rows.extend(kleinian_rows(ev, z, k, &cands, lower, &mu_pos));
        }
        if k == 15 {
            // Schur normalization: coefficient of u6^15 is 1/Π hooks
            let col = cands.iter().position(|a| *a == [0, 0, 0, 0, 0, 15]).unwrap();
            let h = hook_product(&sw_partition());
            rows.push((vec![(col, Rat::one())], vec![Rat::new(1, h as i64)]));
        }
        let mut sys = RatSystem::new(cands.len(), mus.len());
        for (a, b) in &rows {
            sys.push(a, b);
        }
        let sol = sys.solve().map_err(|e| match e {
            ModularError::Inconsistent => SigmaError::Inconsistent { k },
            e => SigmaError::Solve { k, source: e },
        })?;
        let fv = &self.options.free_value;
        let mut poly = GradedPoly::zero();
        for (mi, mono) in mus.iter().enumerate() {
            for (col, a) in cands.iter().enumerate() {
                let mut x = sol.particular[mi][col].clone();
                if !fv.is_zero() {
                    for kv in &sol.kernel {
                        x = &x + &(&kv[col] * fv);
                    }
                }
                if !x.is_zero() {
                    let mut e = [0u16; 8];
                    e[..6].copy_from_slice(a);
                    poly.add_term(e, &Coeff::term(*mono, x));
                }
            }
        }
        let cref = &cands;
        let free = mus.iter().flat_map(|m| sol.free.iter().map(move |&c| (*m, cref[c]))).collect();
        self.lower = &self.lower + &poly;
        self.done.push(CkSolution { k, poly, candidates: cands.len(), rows: sys.len(), free });
        Ok(self.done.last().unwrap())
    }
}

fn falling(a: &UExp, deriv: &[usize]) -> Option<(Rat, UExp)> {
    let mut rest = *a;
    let mut f = 1i64;
    for &i in deriv {
        if rest[i - 1] == 0 {
            return None;
        }
        f *= rest[i - 1] as i64;
        rest[i - 1] -= 1;
    }
    Some((Rat::from(f), rest))
}

fn family_rows(f: &mut Family, k: i32, cands: &[UExp], lower: &GradedPoly, mu_pos: &HashMap<Mono, usize>) -> Vec<Row> {
    let n = k - f.deriv_weight();
    if n < 0 {
        return Vec::new();
    }
    let n = n as usize;
    let mut table: HashMap<u64, Row> = HashMap::new();
    let nrhs = mu_pos.len();
    let empty = || (Vec::new(), vec![Rat::zero(); nrhs]);
    for (col, a) in cands.iter().enumerate() {
        let Some((ff, rest)) = falling(a, &f.deriv) else { continue };
        for (key, x) in f.eval.leading_power(&rest).terms() {
            table.entry(*key).or_insert_with(empty).0.push((col, x * &ff));
        }
    }
    let known = f.eval.eval_degree(&lower.diff_multi(&f.deriv), n);
    add_rhs(&mut table, &known, mu_pos, &Rat::from(-1), nrhs);
    sorted_rows(table)
}

fn add_rhs(table: &mut HashMap<u64, Row>, known: &CEPoly, mu_pos: &HashMap<Mono, usize>, sign: &Rat, nrhs: usize) {
    for (mono, ep) in known {
        let mi = *mu_pos.get(mono).unwrap_or_else(|| panic!("coefficient {mono} of unexpected weight"));
        for (key, x) in ep.terms() {
            let row = table.entry(*key).or_insert_with(|| (Vec::new(), vec![Rat::zero(); nrhs]));
            row.1[mi] = &row.1[mi] + &(x * sign);
        }
    }
}

fn sorted_rows(table: HashMap<u64, Row>) -> Vec<Row> {
    let mut rows: Vec<(u64, Row)> = table.into_iter().collect();
    rows.sort_by_key(|r| r.0);
    rows.into_iter().map(|r| r.1).collect()
}

/// `Z = r6 + s/t` as a Laurent series in ξ with zero integration constant.
pub fn kleinian_z(order: i32) -> Vec<(i32, Coeff)> {
    let curve = CurveC45::new();
    let r6 = curve.dr_dxi(6, order + 1).integrate().expect("no residue in dr6");
    let (t, s) = curve.expand_at_infinity(order + 8);
    // t = ξ^-4 exactly
    debug_assert_eq!(t.valuation(), Some(-4));
    let z = r6.add(&s.shift(4)).truncate(order + 1);
    z.terms().filter(|(_, c)| !c.is_zero()).map(|(q, c)| (q, c.clone())).collect()
}

fn kleinian_rows(ev: &mut PointEval, z: &[(i32, Coeff)], k: i32, cands: &[UExp], lower: &GradedPoly, mu_pos: &HashMap<Mono, usize>) -> Vec<Row> {
    let n = k - 14;
    let nrhs = mu_pos.len();
    let z_m1 = z.iter().find(|(q, _)| *q == -1).map(|(_, c)| c.as_rat().expect("rational ξ^-1 coefficient"));
    let mut lhs: Vec<(usize, Rat)> = Vec::new();
    for (col, a) in cands.iter().enumerate() {
        let mut x = Rat::zero();
        if let Some((ff, rest)) = falling(a, &[2, 3, 6]) {
            x = &x + &(&ff * &lead_value(ev, &rest));
        }
        if let (Some(zm), Some((ff, rest))) = (&z_m1, falling(a, &[2, 3])) {
            x = &x - &(&(&ff * zm) * &lead_value(ev, &rest));
        }
        if !x.is_zero() {
            lhs.push((col, x));
        }
    }
    // known part: [σ236]_n - Σ_q z_q [σ23]_{n-q}
    let d236 = lower.diff_multi(&[2, 3, 6]);
    let d23 = lower.diff_multi(&[2, 3]);
    let mut known = points::single_point_value(&ev.eval_degree(&d236, n as usize));
    for (q, zq) in z {
        let d = n - q;
        if d < 0 {
            continue;
        }
        let v = points::single_point_value(&ev.eval_degree(&d23, d as usize));
        known = &known - &(zq * &v);
    }
    let mut rhs = vec![Rat::zero(); nrhs];
    for (mono, r) in known.terms() {
        let mi = *mu_pos.get(mono).unwrap_or_else(|| panic!("coefficient {mono} of unexpected weight"));
        rhs[mi] = -r.clone();
    }
    vec![(lhs, rhs)]
}

fn lead_value(ev: &mut PointEval, a: &UExp) -> Rat {
    ev.leading_power(a).terms().iter().map(|(_, r)| r.clone()).fold(Rat::zero(), |x, y| &x + &y)
}

/// The stored expansion table.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaExpansion {
    pub options: BuildOptions,
    pub terms: Vec<CkSolution>,
}

impl SigmaExpansion {
    /// Builds C15..C_depth.
    pub fn build(depth: i32, options: BuildOptions) -> Result<SigmaExpansion, SigmaError> {
        let mut b = SigmaBuilder::new(depth, options.clone());
        while b.next_weight() <= depth {
            let k = b.next_weight();
            b.build_ck(k)?;
        }
        Ok(SigmaExpansion { options, terms: b.into_solved() })
    }

    /// Highest weight stored.
    pub fn depth(&self) -> i32 {
        self.terms.last().map_or(11, |c| c.k)
    }

    pub fn ck(&self, k: i32) -> Option<&CkSolution> {
        self.terms.iter().find(|c| c.k == k)
    }

    /// `C15 + … + C_depth`.
    pub fn sigma(&self) -> GradedPoly {
        self.terms.iter().fold(GradedPoly::zero(), |acc, c| &acc + &c.poly)
    }

    /// Weights whose C_k still has free coefficients.
    pub fn open_flags(&self) -> Vec<(i32, usize)> {
        self.terms.iter().filter(|c| !c.is_resolved()).map(|c| (c.k, c.free.len())).collect()
    }

    pub fn check_shapes(&self) -> bool {
        self.terms.iter().all(CkSolution::check_shape) && self.terms.first().map_or(true, |c| c.poly.terms().all(|(_, x)| x.as_rat().is_some()))
    }

    /// `σ_I(u(ξ))`, exact below ξ^{depth + 4 − w_I}.
    pub fn symbol_series(&self, sym: Sym, ev: &mut PointEval) -> Series {
        let idx: Vec<usize> = sym.indices().iter().map(|&i| i as usize).collect();
        let wi = sym.index_weight();
        let prec = self.depth() + 4 - wi;
        let d = self.sigma().diff_multi(&idx);
        let start = (15 - wi).max(0);
        let mut coeffs = Vec::new();
        for n in 0..prec.max(0) {
            if n < start {
                coeffs.push(Coeff::zero());
            } else {
                coeffs.push(points::single_point_value(&ev.eval_degree(&d, n as usize)));
            }
        }
        Series::new(Param::Xi, 0, coeffs, prec.max(0))
    }

    /// Evaluates a σ-expression on the one-point image as a ξ-series.
    pub fn expr_series(&self, e: &SigmaExpr, ev: &mut PointEval, cache: &mut HashMap<Sym, Series>) -> Series {
        let mut total: Option<Series> = None;
        for (prod, c) in e.terms() {
            let mut term: Option<Series> = None;
            for s in prod {
                if !cache.contains_key(s) {
                    let v = self.symbol_series(*s, ev);
                    cache.insert(*s, v);
                }
                let f = &cache[s];
                term = Some(match term {
                    None => f.clone(),
                    Some(t) => t.mul(f),
                });
            }
            let term = match term {
                None => Series::constant(Param::Xi, c.clone(), i32::MAX / 4),
                Some(t) => t.mul_coeff(c),
            };
            total = Some(match total {
                None => term,
                Some(t) => t.add(&term),
            });
        }
        total.unwrap_or_else(|| Series::zero(Param::Xi, i32::MAX / 4))
    }

    /// Origin expansion of a σ-quotient: substitutes u = u(ξ) and divides.
    /// The result is certified to its precision, capped at `order`.
    pub fn origin_expansion(&self, q: &SigmaQuotient, order: i32) -> Result<Series, SigmaError> {
        let max_excess = ((self.depth() + 4) / 4 + 2) as usize;
        let mut ev = PointEval::new(1, max_excess);
        let mut cache = HashMap::new();
        // constants carry unbounded precision; cap them well beyond what the table can certify
        let cap = order.max(0) + self.depth() + 8;
        let num = self.expr_series(&q.num, &mut ev, &mut cache);
        let den = self.expr_series(&q.den, &mut ev, &mut cache);
        let num = if num.prec() > cap { num.truncate(cap) } else { num };
        let den = if den.prec() > cap { den.truncate(cap) } else { den };
        if den.is_zero() {
            return Err(SigmaError::TableTooShort(q.den.to_string()));
        }
        let r = num.div(&den)?;
        Ok(if r.prec() > order { r.truncate(order) } else { r })
    }

    /// Structured text: exact rationals, μ-monomials as exponent vectors.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let o = &self.options;
        let _ = writeln!(out, "sigma-expansion points {} kleinian {} free-value {}", o.points, o.kleinian as u8, o.free_value);
        for c in &self.terms {
            let _ = writeln!(out, "C {} candidates {} rows {}", c.k, c.candidates, c.rows);
            for (e, x) in c.poly.terms() {
                for (m, r) in x.terms() {
                    let _ = writeln!(out, "term {} {} {}", vec_text(&m.mu), vec_text(&e[..6]), r);
                }
            }
            for (m, a) in &c.free {
                let _ = writeln!(out, "free {} {}", vec_text(&m.mu), vec_text(a));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SigmaExpansion, SigmaError> {
        let mut options = BuildOptions::default();
        let mut terms: Vec<CkSolution> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let bad = |msg: &str| SigmaError::Format { line: ln + 1, msg: msg.to_string() };
            let f: Vec<&str> = raw.split_whitespace().collect();
            match f.first().copied() {
                None => {}
                Some("sigma-expansion") => {
                    if f.len() != 7 {
                        return Err(bad("bad header"));
                    }
                    options.points = f[2].parse().map_err(|_| bad("points"))?;
                    options.kleinian = f[4] == "1";
                    options.free_value = f[6].parse().map_err(|_| bad("free-value"))?;
                }
                Some("C") => {
                    if f.len() != 6 {
                        return Err(bad("bad C record"));
                    }
                    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
                    terms.push(CkSolution {
                        k: f[1].parse().map_err(|_| bad("bad weight"))?,
                        poly: GradedPoly::zero(),
                        candidates: num(f[3])?,
                        rows: num(f[5])?,
                        free: Vec::new(),
                    });
                }
                Some("term") => {
                    let c = terms.last_mut().ok_or_else(|| bad("term before C"))?;
                    if f.len() != 4 {
                        return Err(bad("bad term"));
                    }
                    let mu: [i16; 5] = parse_vec(f[1]).ok_or_else(|| bad("bad mu vector"))?;
                    let u: [u16; 6] = parse_vec(f[2]).ok_or_else(|| bad("bad u vector"))?;
                    let r: Rat = f[3].parse().map_err(|_| bad("bad rational"))?;
                    let mut e = [0u16; 8];
                    e[..6].copy_from_slice(&u);
                    c.poly.add_term(e, &Coeff::term(Mono::from_mu(mu), r));
                }
                Some("free") => {
                    let c = terms.last_mut().ok_or_else(|| bad("free before C"))?;
                    if f.len() != 3 {
                        return Err(bad("bad free record"));
                    }
                    let mu: [i16; 5] = parse_vec(f[1]).ok_or_else(|| bad("bad mu vector"))?;
                    let u: [u16; 6] = parse_vec(f[2]).ok_or_else(|| bad("bad u vector"))?;
                    c.free.push((Mono::from_mu(mu), u));
                }
                Some(_) => return Err(bad("unknown record")),
            }
        }
        Ok(SigmaExpansion { options, terms })
    }
}

fn vec_text<T: std::fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn parse_vec<T: std::str::FromStr + Copy + Default, const N: usize>(s: &str) -> Option<[T; N]> {
    let inner = s.strip_prefix('[')?.strip_suffix(']')?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != N {
        return None;
    }
    let mut out = [T::default(); N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().ok()?;
    }
    Some(out)
}
