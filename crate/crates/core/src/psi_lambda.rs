//! The derivative `D₁ = d/du₁` along Θ^[1], the Ψ ansatz whose D₁ cancels the
//! poles of φ₂, formal quasi-periodicity, the constant vector B and the
//! assembled formula for λ(p).
//!
//! On Θ^[1] a point of the curve moves with `du = (1, t, s, t², st, s²) du₁`
//! and `t = −σ23/σ34`. The function s is kept as a formal variable; every
//! quotient here is `Σ_k s^k N_k / D` with σ-polynomials `N_k`, `D`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::algebra::series::SeriesError;
use crate::algebra::{Coeff, Rat};
use crate::curve::{CurveC45, Series, Sheet};
use crate::pole::{phi2_pole_expansion, sigma_deriv_at_u0, Phi2Pole, PoleError, TaylorTable, U0Relations};
use crate::sigma::{PointEval, SigmaError, SigmaExpansion};
use crate::strata::{LinForm, RelationSet, SigmaExpr, SigmaQuotient, Sym};

/// Depth of the σ table used for origin checks.
pub const DEFAULT_SIGMA_DEPTH: i32 = 35;

/// ξ-order of the B-vector series.
pub const B_SERIES_ORDER: i32 = 13;

#[derive(Debug, Error)]
pub enum PsiError {
    #[error("pole calculus: {0}")]
    Pole(#[from] PoleError),
    #[error("σ expansion: {0}")]
    Sigma(#[from] SigmaError),
    #[error("series: {0}")]
    Series(#[from] SeriesError),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("{what} is not a scalar multiple of {base}: {expr}")]
    NotScalar { what: &'static str, base: String, expr: String },
    #[error("sheet {0} missing from the point data")]
    MissingSheet(u8),
}

fn s23() -> Sym {
    Sym::from_indices(&[2, 3])
}

fn s34() -> Sym {
    Sym::from_indices(&[3, 4])
}

fn sx(s: Sym) -> SigmaExpr {
    SigmaExpr::sym(s)
}

/// Polynomial in the formal s with σ-polynomial coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SPoly {
    terms: BTreeMap<u32, SigmaExpr>,
}

impl SPoly {
    pub fn zero() -> SPoly {
        SPoly::default()
    }

    pub fn monomial(k: u32, e: SigmaExpr) -> SPoly {
        let mut p = SPoly::zero();
        p.add_at(k, &e);
        p
    }

    pub fn from_expr(e: SigmaExpr) -> SPoly {
        SPoly::monomial(0, e)
    }

    fn add_at(&mut self, k: u32, e: &SigmaExpr) {
        if e.is_zero() {
            return;
        }
        let slot = self.terms.entry(k).or_default();
        *slot = slot.add(e);
        if slot.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn coeff(&self, k: u32) -> SigmaExpr {
        self.terms.get(&k).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &SigmaExpr)> {
        self.terms.iter().map(|(k, e)| (*k, e))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest power of s present.
    pub fn s_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    pub fn add(&self, o: &SPoly) -> SPoly {
        let mut r = self.clone();
        for (k, e) in &o.terms {
            r.add_at(*k, e);
        }
        r
    }

    pub fn neg(&self) -> SPoly {
        self.map_exprs(|e| e.neg())
    }

    pub fn sub(&self, o: &SPoly) -> SPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &SPoly) -> SPoly {
        let mut r = SPoly::zero();
        for (i, a) in &self.terms {
            for (j, b) in &o.terms {
                r.add_at(i + j, &a.mul(b));
            }
        }
        r
    }

    pub fn mul_expr(&self, e: &SigmaExpr) -> SPoly {
        self.map_exprs(|x| x.mul(e))
    }

    pub fn scale(&self, c: &Coeff) -> SPoly {
        self.map_exprs(|x| x.scale(c))
    }

    pub fn map_exprs(&self, f: impl Fn(&SigmaExpr) -> SigmaExpr) -> SPoly {
        let mut r = SPoly::zero();
        for (k, e) in &self.terms {
            r.add_at(*k, &f(e));
        }
        r
    }

    fn shift_s(&self, k: u32) -> SPoly {
        SPoly { terms: self.terms.iter().map(|(i, e)| (i + k, e.clone())).collect() }
    }
}

impl fmt::Display for SPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, e)| match k {
                0 => format!("({e})"),
                1 => format!("s*({e})"),
                _ => format!("s^{k}*({e})"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `σ34⁴ f'(t)` at `t = −σ23/σ34`.
fn curve_fprime_num(mu: &[Coeff; 5]) -> SigmaExpr {
    let (a, b) = (sx(s23()), sx(s34()));
    let mut r = a.pow(4).scale(&Coeff::int(5));
    r = r.sub(&a.pow(3).mul(&b).scale(&mu[4].scale(&Rat::from(4))));
    r = r.add(&a.pow(2).mul(&b.pow(2)).scale(&mu[3].scale(&Rat::from(3))));
    r = r.sub(&a.mul(&b.pow(3)).scale(&mu[2].scale(&Rat::from(2))));
    r.add(&b.pow(4).scale(&mu[1]))
}

/// `σ34⁵ f(t)` at `t = −σ23/σ34`, so that `s⁴ = F/σ34⁵`.
fn curve_f_num(mu: &[Coeff; 5]) -> SigmaExpr {
    let (a, b) = (sx(s23()), sx(s34()));
    let mut r = a.pow(5).neg();
    r = r.add(&a.pow(4).mul(&b).scale(&mu[4]));
    r = r.sub(&a.pow(3).mul(&b.pow(2)).scale(&mu[3]));
    r = r.add(&a.pow(2).mul(&b.pow(3)).scale(&mu[2]));
    r = r.sub(&a.mul(&b.pow(4)).scale(&mu[1]));
    r.add(&b.pow(5).scale(&mu[0]))
}

fn mus() -> [Coeff; 5] {
    [Coeff::mu(0), Coeff::mu(1), Coeff::mu(2), Coeff::mu(3), Coeff::mu(4)]
}

/// `σ34² · D₁σ_K`.
fn d1_sym_num(k: Sym) -> SPoly {
    let (a, b) = (sx(s23()), sx(s34()));
    let bb = b.mul(&b);
    let ab = a.mul(&b);
    let aa = a.mul(&a);
    let d = |i: u8| sx(k.with(i));
    let p0 = bb.mul(&d(1)).sub(&ab.mul(&d(2))).add(&aa.mul(&d(4)));
    let p1 = bb.mul(&d(3)).sub(&ab.mul(&d(5)));
    let p2 = bb.mul(&d(6));
    SPoly::monomial(0, p0).add(&SPoly::monomial(1, p1)).add(&SPoly::monomial(2, p2))
}

/// `σ34² · D₁E` for an s-free σ-polynomial E (Leibniz over each product).
fn d1_expr_num(e: &SigmaExpr) -> SPoly {
    let mut r = SPoly::zero();
    for (prod, c) in e.terms() {
        for i in 0..prod.len() {
            let mut rest = SigmaExpr::constant(c.clone());
            for (j, s) in prod.iter().enumerate() {
                if j != i {
                    rest = rest.mul(&sx(*s));
                }
            }
            r = r.add(&d1_sym_num(prod[i]).mul_expr(&rest));
        }
    }
    r
}

/// `Σ_k s^k N_k / D` with an s-free denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct D1Quotient {
    pub num: SPoly,
    pub den: SigmaExpr,
}

impl D1Quotient {
    pub fn new(num: SPoly, den: SigmaExpr) -> D1Quotient {
        D1Quotient { num, den }
    }

    pub fn from_quotient(q: &SigmaQuotient) -> D1Quotient {
        D1Quotient::new(SPoly::from_expr(q.num.clone()), q.den.clone())
    }

    pub fn constant(c: Coeff) -> D1Quotient {
        D1Quotient::new(SPoly::from_expr(SigmaExpr::constant(c)), SigmaExpr::constant(Coeff::one()))
    }

    /// `s^k · num/den`.
    pub fn term(k: u32, num: SigmaExpr, den: SigmaExpr) -> D1Quotient {
        D1Quotient::new(SPoly::monomial(k, num), den)
    }

    pub fn add(&self, o: &D1Quotient) -> D1Quotient {
        if self.den == o.den {
            return D1Quotient::new(self.num.add(&o.num), self.den.clone());
        }
        D1Quotient::new(self.num.mul_expr(&o.den).add(&o.num.mul_expr(&self.den)), self.den.mul(&o.den))
    }

    pub fn neg(&self) -> D1Quotient {
        D1Quotient::new(self.num.neg(), self.den.clone())
    }

    pub fn sub(&self, o: &D1Quotient) -> D1Quotient {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &D1Quotient) -> D1Quotient {
        D1Quotient::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn scale(&self, c: &Coeff) -> D1Quotient {
        D1Quotient::new(self.num.scale(c), self.den.clone())
    }

    /// Applies `∂₁ + t∂₂ + s∂₃ + t²∂₄ + st∂₅ + s²∂₆` with `D₁s = f'(t)`.
    pub fn d1(&self) -> D1Quotient {
        let b = sx(s34());
        let dd = d1_expr_num(&self.den);
        if self.num.s_degree().unwrap_or(0) == 0 {
            let n = self.num.coeff(0);
            let num = d1_expr_num(&n).mul_expr(&self.den).sub(&dd.mul_expr(&n));
            return D1Quotient::new(num, b.pow(2).mul(&self.den.pow(2)));
        }
        // common denominator σ34⁴ D²
        let fp = curve_fprime_num(&mus());
        let bb = b.pow(2);
        let mut dn = SPoly::zero();
        for (k, nk) in self.num.terms() {
            dn = dn.add(&d1_expr_num(nk).mul_expr(&bb).shift_s(k));
            if k > 0 {
                dn = dn.add(&SPoly::monomial(k - 1, nk.mul(&fp).scale(&Coeff::int(k as i64))));
            }
        }
        let num = dn.mul_expr(&self.den).sub(&self.num.mul(&dd.mul_expr(&bb)));
        D1Quotient::new(num, b.pow(4).mul(&self.den.pow(2)))
    }

    /// Replaces `s⁴` by `f(t)` (denominator gains σ34⁵ per step).
    pub fn reduce_s(&self) -> D1Quotient {
        let mut q = self.clone();
        let f = curve_f_num(&mus());
        let b5 = sx(s34()).pow(5);
        while q.num.s_degree().unwrap_or(0) >= 4 {
            let mut num = SPoly::zero();
            for (k, e) in q.num.terms() {
                if k >= 4 {
                    num = num.add(&SPoly::monomial(k - 4, e.mul(&f)));
                } else {
                    num = num.add(&SPoly::monomial(k, e.mul(&b5)));
                }
            }
            q = D1Quotient::new(num, q.den.mul(&b5));
        }
        q
    }

    /// Reduces numerator and denominator modulo the Θ^[1] rules.
    pub fn reduce(&self, t1: &RelationSet) -> D1Quotient {
        D1Quotient::new(self.num.map_exprs(|e| t1.reduce_expr(e)), t1.reduce_expr(&self.den))
    }

    /// Odd powers of s left after reduction; an Abelian function has none.
    pub fn odd_s_powers(&self) -> Vec<u32> {
        self.num.terms().map(|(k, _)| k).filter(|k| k % 2 == 1).collect()
    }

    /// Cross-multiplied equality. With `t1` the difference is reduced on Θ^[1].
    pub fn same_as(&self, o: &D1Quotient, t1: Option<&RelationSet>) -> bool {
        let diff = D1Quotient::new(self.num.mul_expr(&o.den).sub(&o.num.mul_expr(&self.den)), SigmaExpr::constant(Coeff::one())).reduce_s();
        match t1 {
            None => diff.num.is_zero(),
            Some(t) => diff.reduce(t).num.is_zero(),
        }
    }

    /// ξ-expansion on the one-point image `u(ξ)` (which lies in Θ^[1]).
    pub fn origin_series(&self, sig: &SigmaExpansion, curve: &CurveC45, order: i32) -> Result<Series, PsiError> {
        let max_excess = ((sig.depth() + 4) / 4 + 2) as usize;
        let mut ev = PointEval::new(1, max_excess);
        let mut cache = HashMap::new();
        let cap = order.max(0) + sig.depth() + 8;
        let clip = |x: Series| if x.prec() > cap { x.truncate(cap) } else { x };
        let (_, s) = curve.expand_at_infinity(cap + 16);
        let mut num: Option<Series> = None;
        for (k, e) in self.num.terms() {
            let v = clip(sig.expr_series(e, &mut ev, &mut cache)).mul(&s.pow(k));
            num = Some(match num {
                None => v,
                Some(n) => n.add(&v),
            });
        }
        let den = clip(sig.expr_series(&self.den, &mut ev, &mut cache));
        let Some(num) = num else {
            return Ok(Series::zero(crate::algebra::Param::Xi, order));
        };
        if den.is_zero() {
            return Err(SigmaError::TableTooShort(self.den.to_string()).into());
        }
        let r = num.div(&den)?;
        Ok(if r.prec() > order { r.truncate(order) } else { r })
    }
}

impl fmt::Display for D1Quotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]/({})", self.num, self.den)
    }
}

/// D₁ of a σ-quotient.
pub fn d1_apply(q: &SigmaQuotient) -> D1Quotient {
    D1Quotient::from_quotient(q).d1()
}

// --- Ψ ---------------------------------------------------------------------

/// The ansatz `Ψ = Σ η_I σ_I / σ23` over Θ^[1]-irreducible `σ_I`, `1 ≤ |I| ≤ 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiAnsatz {
    pub symbols: Vec<Sym>,
}

impl PsiAnsatz {
    pub fn new(t1: &RelationSet) -> PsiAnsatz {
        let mut symbols = Vec::new();
        for n in 1..=3usize {
            for s in all_index_sets(n) {
                if s != s23() && t1.rule(s).is_none() {
                    symbols.push(s);
                }
            }
        }
        symbols.sort();
        PsiAnsatz { symbols }
    }
}

fn all_index_sets(n: usize) -> Vec<Sym> {
    fn rec(start: u8, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Sym>) {
        if left == 0 {
            out.push(Sym::from_indices(cur));
            return;
        }
        for i in start..=6 {
            cur.push(i);
            rec(i, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, &mut Vec::new(), &mut out);
    out
}

/// One sheet's worth of point data for the Ψ equations.
#[derive(Clone, Debug)]
pub struct PointData<'a> {
    pub relations: &'a U0Relations,
    pub table: &'a TaylorTable,
    pub phi2: &'a Phi2Pole,
}

/// Affine family of numerators `particular + Σ η_f direction_f` (all over σ23).
#[derive(Clone, Debug, PartialEq)]
pub struct PsiFamily {
    pub particular: LinForm,
    pub directions: Vec<(Sym, LinForm)>,
}

/// Result of [`solve_psi`].
#[derive(Clone, Debug, PartialEq)]
pub struct PsiSolution {
    pub ansatz: PsiAnsatz,
    /// Solution of the principal-part equations at every `u_{0,N}`.
    pub family: PsiFamily,
    /// Free constants fixed by regularity at the origin, with their values.
    pub fixed_at_origin: Vec<(Sym, Coeff)>,
    /// Free constants that neither condition sees; they are set to zero.
    pub discarded: Vec<Sym>,
    /// Final numerator over σ23.
    pub numerator: LinForm,
}

impl PsiSolution {
    pub fn quotient(&self) -> SigmaQuotient {
        SigmaQuotient::new(SigmaExpr::from_linform(&self.numerator), sx(s23()))
    }

    /// `(c, σ_K)` when Ψ is a single term `c σ_K/σ23`.
    pub fn as_single_term(&self) -> Option<(Coeff, Sym)> {
        match self.numerator.terms() {
            [(s, c)] => Some((c.clone(), *s)),
            _ => None,
        }
    }
}

/// Principal-part rows: with `σ_I = a_I + …` and `σ23 = b₁ w1 + …` at a point,
/// `D₁Ψ = −(Σ η_I a_I)/(b₁ w1²) + O(1)`, to be matched to the double pole of φ₂.
fn psi_rows(ansatz: &PsiAnsatz, p: &PointData<'_>) -> Vec<(Vec<Coeff>, Coeff)> {
    let a: Vec<LinForm> = ansatz.symbols.iter().map(|s| p.relations.set.reduce(&LinForm::sym(*s))).collect();
    let b1 = p.relations.set.reduce(&p.table.symbol_coefficient(s23(), 1));
    // Σ η_I a_I + dp·b₁ = 0 in every σ-value at the point
    let target = b1.scale(&p.phi2.double_pole);
    let mut syms: Vec<Sym> = a.iter().flat_map(|l| l.symbols()).chain(target.symbols()).collect();
    syms.sort();
    syms.dedup();
    syms.iter()
        .map(|&x| (a.iter().map(|l| l.coeff(x)).collect(), -&target.coeff(x)))
        .collect()
}

/// Reduced row echelon form over Coeff using unit pivots, trying columns in
/// the given order. Returns `(pivot column per row, rows)`; leftover rows are
/// reported as an error if they are inconsistent.
fn unit_rref(mut rows: Vec<(Vec<Coeff>, Coeff)>, col_order: &[usize]) -> Result<Vec<(usize, Vec<Coeff>, Coeff)>, PsiError> {
    let mut done: Vec<(usize, Vec<Coeff>, Coeff)> = Vec::new();
    for &c in col_order {
        let Some(pos) = rows.iter().position(|(r, _)| !r[c].is_zero() && r[c].inv().is_some()) else {
            continue;
        };
        let (mut r, mut rhs) = rows.swap_remove(pos);
        let inv = r[c].inv().expect("unit");
        r.iter_mut().for_each(|x| *x = &*x * &inv);
        rhs = &rhs * &inv;
        let elim = |row: &mut Vec<Coeff>, b: &mut Coeff| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for (x, y) in row.iter_mut().zip(&r) {
                *x = &*x - &(&f * y);
            }
            *b = &*b - &(&f * &rhs);
        };
        for (row, b) in rows.iter_mut() {
            elim(row, b);
        }
        for (_, row, b) in done.iter_mut() {
            elim(row, b);
        }
        done.push((c, r, rhs));
    }
    for (r, b) in &rows {
        if r.iter().all(Coeff::is_zero) {
            if !b.is_zero() {
                return Err(PsiError::NoSolution(format!("inconsistent row with right side {b}")));
            }
        } else {
            return Err(PsiError::NoSolution("row without a unit pivot".into()));
        }
    }
    Ok(done)
}

/// General solution of the principal-part equations on the given sheets.
pub fn psi_family(ansatz: &PsiAnsatz, points: &[PointData<'_>]) -> Result<PsiFamily, PsiError> {
    let rows: Vec<_> = points.iter().flat_map(|p| psi_rows(ansatz, p)).collect();
    let n = ansatz.symbols.len();
    // larger symbols become pivots, small ones stay free
    let order: Vec<usize> = (0..n).rev().collect();
    let rref = unit_rref(rows, &order)?;
    let pivots: Vec<usize> = rref.iter().map(|(c, _, _)| *c).collect();
    let sym = |j: usize| ansatz.symbols[j];
    let particular = LinForm::from_terms(rref.iter().map(|(c, _, b)| (sym(*c), b.clone())));
    let mut directions = Vec::new();
    for f in (0..n).filter(|j| !pivots.contains(j)) {
        let mut terms = vec![(sym(f), Coeff::one())];
        for (c, r, _) in &rref {
            terms.push((sym(*c), -&r[f]));
        }
        directions.push((sym(f), LinForm::from_terms(terms)));
    }
    Ok(PsiFamily { particular, directions })
}

/// Checks a numerator against the principal-part equations directly.
pub fn satisfies_principal_part(numerator: &LinForm, points: &[PointData<'_>]) -> bool {
    points.iter().all(|p| {
        let a = p.relations.set.reduce(numerator);
        let b1 = p.relations.set.reduce(&p.table.symbol_coefficient(s23(), 1));
        a.add_scaled(&b1, &p.phi2.double_pole).is_zero()
    })
}

fn origin_of(sig: &SigmaExpansion, num: &LinForm, order: i32) -> Result<Series, PsiError> {
    let q = SigmaQuotient::new(SigmaExpr::from_linform(num), sx(s23()));
    Ok(sig.origin_expansion(&q, order)?)
}

/// Solves the ansatz: principal parts at all `u_{0,N}`, then regularity at
/// the origin. Remaining free constants multiply terms that vanish at every
/// `u_{0,N}` and stay regular at the origin; they are dropped.
pub fn solve_psi(t1: &RelationSet, points: &[PointData<'_>], sig: &SigmaExpansion) -> Result<PsiSolution, PsiError> {
    let ansatz = PsiAnsatz::new(t1);
    let family = psi_family(&ansatz, points)?;
    let base = origin_of(sig, &family.particular, 1)?;
    let dirs: Vec<Series> = family.directions.iter().map(|(_, d)| origin_of(sig, d, 1)).collect::<Result<_, _>>()?;
    let lowest = dirs.iter().chain([&base]).filter_map(Series::valuation).min().unwrap_or(0).min(0);
    let mut rows = Vec::new();
    for n in lowest..0 {
        rows.push((dirs.iter().map(|d| d.coeff(n)).collect::<Vec<_>>(), -&base.coeff(n)));
    }
    let order: Vec<usize> = (0..dirs.len()).collect();
    let rref = unit_rref(rows, &order)?;
    let mut numerator = family.particular.clone();
    let mut fixed = Vec::new();
    // free columns left in the pivot rows are set to zero
    for (c, _, b) in &rref {
        let (s, d) = &family.directions[*c];
        numerator = numerator.add_scaled(d, b);
        fixed.push((*s, b.clone()));
    }
    let pivots: Vec<usize> = rref.iter().map(|(c, _, _)| *c).collect();
    let discarded = (0..dirs.len()).filter(|j| !pivots.contains(j)).map(|j| family.directions[j].0).collect();
    Ok(PsiSolution { ansatz, family, fixed_at_origin: fixed, discarded, numerator })
}

// --- quasi-periodicity -------------------------------------------------------

/// Monomial `Π L_j^{e_j}` in the formal constants `L_j = ∂L/∂u_j`.
pub type LMono = [u8; 6];

fn lmono_to_string(m: &LMono) -> String {
    let mut parts = Vec::new();
    for (j, &e) in m.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("L{}", j + 1)),
            _ => parts.push(format!("L{}^{e}", j + 1)),
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn binom(n: u8, k: u8) -> i64 {
    (0..k as i64).fold(1, |acc, i| acc * (n as i64 - i) / (i + 1))
}

/// `σ_K(u+ℓ) / (χ(ℓ) e^{L})` as `Σ_m L^m · expr_m`, reduced on Θ^[1].
/// L is linear in u, so only first derivatives of it appear.
pub fn shift_symbol(k: Sym, t1: &RelationSet) -> BTreeMap<LMono, SigmaExpr> {
    let kc = k.counts();
    let mut out: BTreeMap<LMono, SigmaExpr> = BTreeMap::new();
    let mut j = [0u8; 6];
    loop {
        let mut m = [0u8; 6];
        let mut mult = 1i64;
        for i in 0..6 {
            m[i] = kc[i] - j[i];
            mult *= binom(kc[i], j[i]);
        }
        let e = t1.reduce_expr(&sx(Sym::from_counts(j)).scale(&Coeff::int(mult)));
        if !e.is_zero() {
            let slot = out.entry(m).or_default();
            *slot = slot.add(&e);
        }
        // next sub-multiset
        let mut i = 0;
        while i < 6 && j[i] == kc[i] {
            j[i] = 0;
            i += 1;
        }
        if i == 6 {
            break;
        }
        j[i] += 1;
    }
    out.retain(|_, e| !e.is_zero());
    out
}

fn shift_expr(e: &SigmaExpr, t1: &RelationSet) -> Option<BTreeMap<LMono, SigmaExpr>> {
    let mut total: BTreeMap<LMono, SigmaExpr> = BTreeMap::new();
    let mut degree = None;
    for (prod, c) in e.terms() {
        if *degree.get_or_insert(prod.len()) != prod.len() {
            return None;
        }
        let mut acc: BTreeMap<LMono, SigmaExpr> = BTreeMap::from([([0u8; 6], SigmaExpr::constant(c.clone()))]);
        for s in prod {
            let sh = shift_symbol(*s, t1);
            let mut next: BTreeMap<LMono, SigmaExpr> = BTreeMap::new();
            for (m1, e1) in &acc {
                for (m2, e2) in &sh {
                    let mut m = *m1;
                    m.iter_mut().zip(m2).for_each(|(a, b)| *a += b);
                    let slot = next.entry(m).or_default();
                    *slot = slot.add(&e1.mul(e2));
                }
            }
            acc = next;
        }
        for (m, x) in acc {
            let slot = total.entry(m).or_default();
            *slot = slot.add(&x);
        }
    }
    total.retain(|_, e| !e.is_zero());
    Some(total)
}

/// Behaviour under `u ↦ u + ℓ` for a period ℓ.
#[derive(Clone, Debug, PartialEq)]
pub enum Periodicity {
    Abelian,
    /// `f(u+ℓ) = f(u) + Σ c_m L^m`.
    AdditiveShift(BTreeMap<LMono, Coeff>),
    Neither,
}

impl fmt::Display for Periodicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Periodicity::Abelian => write!(f, "abelian"),
            Periodicity::Neither => write!(f, "neither"),
            Periodicity::AdditiveShift(m) => {
                let parts: Vec<String> = m.iter().map(|(k, c)| format!("({c})*{}", lmono_to_string(k))).collect();
                write!(f, "abelian up to {}", parts.join(" + "))
            }
        }
    }
}

fn scalar_multiple(n: &SigmaExpr, d: &SigmaExpr) -> Option<Coeff> {
    if n.is_zero() {
        return Some(Coeff::zero());
    }
    let (mono, cd) = d.terms().next()?;
    let cn = n.terms().find(|(m, _)| *m == mono).map(|(_, c)| c.clone())?;
    let k = &cn * &cd.inv()?;
    n.sub(&d.scale(&k)).is_zero().then_some(k)
}

/// Formal quasi-periodicity check for a σ-quotient, modulo Θ^[1].
pub fn check_periodicity(q: &SigmaQuotient, t1: &RelationSet) -> Periodicity {
    let (Some(num), Some(den)) = (shift_expr(&q.num, t1), shift_expr(&q.den, t1)) else {
        return Periodicity::Neither;
    };
    let (n0, d0) = (t1.reduce_expr(&q.num), t1.reduce_expr(&q.den));
    // the χ e^L factors cancel only between equal σ-degrees
    if q.num.degree() != q.den.degree() || d0.is_zero() {
        return Periodicity::Neither;
    }
    let zero = [0u8; 6];
    if den.len() != 1 || den.get(&zero) != Some(&d0) {
        return Periodicity::Neither;
    }
    let mut shift = BTreeMap::new();
    for (m, e) in &num {
        let target = if *m == zero { e.sub(&n0) } else { e.clone() };
        match scalar_multiple(&target, &d0) {
            Some(c) if c.is_zero() => {}
            Some(c) => {
                shift.insert(*m, c);
            }
            None => return Periodicity::Neither,
        }
    }
    if !num.contains_key(&zero) && !n0.is_zero() {
        return Periodicity::Neither;
    }
    if shift.is_empty() {
        Periodicity::Abelian
    } else {
        Periodicity::AdditiveShift(shift)
    }
}

// --- B-vector ----------------------------------------------------------------

/// Unknowns of the B-series, in column order.
pub const B_COLUMNS: [&str; 10] = ["1", "A2", "A3", "A4", "B1", "B2", "B3", "B4", "B5", "B6"];

/// `constant + a2 A2 + a3 A3 + a4 A4`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AffineA {
    pub constant: Coeff,
    pub a: [Coeff; 3],
}

impl AffineA {
    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.a.iter().all(Coeff::is_zero)
    }

    /// The value with `A2, A3, A4` substituted.
    pub fn at(&self, a: &[Coeff; 3]) -> Coeff {
        self.a.iter().zip(a).fold(self.constant.clone(), |acc, (x, y)| &acc + &(x * y))
    }

    /// Common weight, taking `A_k` of weight `4k`.
    pub fn weight(&self) -> Option<i32> {
        let mut w = None;
        let mut check = |c: &Coeff, extra: i32| {
            if c.is_zero() {
                return true;
            }
            let Ok(Some(cw)) = c.weight() else { return c.as_rat().is_some() && agree(&mut w, extra) };
            agree(&mut w, cw + extra)
        };
        let ok = check(&self.constant, 0) && check(&self.a[0], 8) && check(&self.a[1], 12) && check(&self.a[2], 16);
        if ok {
            w
        } else {
            None
        }
    }
}

fn agree(w: &mut Option<i32>, x: i32) -> bool {
    match w {
        None => {
            *w = Some(x);
            true
        }
        Some(y) => *y == x,
    }
}

impl fmt::Display for AffineA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (c, name) in self.a.iter().zip(["A2", "A3", "A4"]) {
            if c.is_one() {
                parts.push(name.to_string());
            } else if !c.is_zero() {
                parts.push(format!("({c})*{name}"));
            }
        }
        if !self.constant.is_zero() {
            parts.push(format!("{}", self.constant));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// `B1..B6` as affine functions of `A2, A3, A4`, with the series they solve.
#[derive(Clone, Debug, PartialEq)]
pub struct BVector {
    pub b: [AffineA; 6],
    /// Coefficient of ξ^n, as a row over [`B_COLUMNS`].
    pub series: Vec<Vec<Coeff>>,
}

/// ξ-series of `A2u1 + A3u2 + A4u4 + ∫φ₂du1 − Ψ − B·u` at the origin, the
/// integral of the Abelian identity `φ₂du1 + A·du = dΨ + B·du` from `u = 0`.
pub fn bdef_series(sig: &SigmaExpansion, curve: &CurveC45, phi2: &SigmaQuotient, psi: &SigmaQuotient, order: i32) -> Result<Vec<Vec<Coeff>>, PsiError> {
    let phi = sig.origin_expansion(phi2, order)?;
    let int_phi = phi.mul(&curve.du_dxi(1, order)).integrate()?;
    let psi_s = sig.origin_expansion(psi, order)?;
    let constant = int_phi.sub(&psi_s);
    let u: Vec<Series> = (1..=6).map(|i| curve.abel_series(i, order)).collect();
    let mut cols: Vec<Series> = vec![constant, u[0].clone(), u[1].clone(), u[3].clone()];
    cols.extend(u.iter().map(Series::neg));
    for c in &cols {
        if c.prec() < order {
            return Err(SigmaError::TableTooShort(format!("B-series known only to ξ^{}", c.prec())).into());
        }
    }
    Ok((0..order).map(|n| cols.iter().map(|c| c.coeff(n)).collect()).collect())
}

/// Solves every ξ-coefficient of [`bdef_series`] for B.
pub fn solve_b_vector(series: Vec<Vec<Coeff>>) -> Result<BVector, PsiError> {
    // eliminate on the B columns, carrying the A/constant part alongside
    let mut open: Vec<(Vec<Coeff>, Vec<Coeff>)> = series.iter().map(|r| (r[4..].to_vec(), r[..4].to_vec())).collect();
    let mut done: Vec<(usize, Vec<Coeff>, Vec<Coeff>)> = Vec::new();
    for c in 0..6 {
        let Some(pos) = open.iter().position(|(b, _)| !b[c].is_zero() && b[c].inv().is_some()) else {
            return Err(PsiError::NoSolution(format!("B{} is not determined", c + 1)));
        };
        let (mut pb, mut pa) = open.swap_remove(pos);
        let inv = pb[c].inv().expect("unit");
        pb.iter_mut().chain(pa.iter_mut()).for_each(|x| *x = &*x * &inv);
        let elim = |rb: &mut Vec<Coeff>, ra: &mut Vec<Coeff>| {
            let f = rb[c].clone();
            if f.is_zero() {
                return;
            }
            for (x, y) in rb.iter_mut().zip(&pb).chain(ra.iter_mut().zip(&pa)) {
                *x = &*x - &(&f * y);
            }
        };
        for (rb, ra) in open.iter_mut() {
            elim(rb, ra);
        }
        for (_, rb, ra) in done.iter_mut() {
            elim(rb, ra);
        }
        done.push((c, pb, pa));
    }
    if open.iter().any(|(_, a)| a.iter().any(|x| !x.is_zero())) {
        return Err(PsiError::NoSolution("B-series is inconsistent".into()));
    }
    let mut out: [AffineA; 6] = Default::default();
    for (c, _, a) in done {
        // B_c + a0 + a1 A2 + a2 A3 + a3 A4 = 0
        out[c] = AffineA { constant: -&a[0], a: [-&a[1], -&a[2], -&a[3]] };
    }
    Ok(BVector { b: out, series })
}

// --- λ(p) ----------------------------------------------------------------------

/// `scalar + rest/σ_b` at the point, with `rest` free of σ_b.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConstant {
    pub scalar: Coeff,
    pub rest: LinForm,
    pub base: Sym,
}

/// Laurent data of `σ_K/σ23` at `u_{0,N}`: `c₋₁/w1 + c₀ + …`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointLaurent {
    pub c_minus1: Coeff,
    pub c0: PointConstant,
}

/// Expands `σ_K/σ23` about the point. The leading coefficients must be
/// multiples of one basis value (σ22 at `u_{0,N}`).
pub fn laurent_over_sigma23(k: Sym, rels: &U0Relations, table: &TaylorTable) -> Result<PointLaurent, PsiError> {
    let sk = sigma_deriv_at_u0(table, k, 2).reduced(rels);
    let sd = sigma_deriv_at_u0(table, s23(), 3).reduced(rels);
    let (a0, a1) = (&sk.coeffs[0], &sk.coeffs[1]);
    let (b1, b2) = (&sd.coeffs[1], &sd.coeffs[2]);
    let [(base, beta)] = b1.terms() else {
        return Err(PsiError::NotScalar { what: "σ23 linear coefficient", base: "one σ-value".into(), expr: b1.to_string() });
    };
    let alpha = a0.coeff(*base);
    if a0.sub(&LinForm::term(*base, alpha.clone())).len() != 0 {
        return Err(PsiError::NotScalar { what: "leading coefficient", base: base.to_string(), expr: a0.to_string() });
    }
    let ib = beta.inv().ok_or_else(|| PsiError::NotScalar { what: "σ23 linear coefficient", base: "a unit".into(), expr: b1.to_string() })?;
    let c_minus1 = &alpha * &ib;
    // c₀ = (a1 b1 − a0 b2)/b1² = (a1/β − α b2/β²)/σ_b
    let l = a1.scale(&ib).sub(&b2.scale(&(&alpha * &(&ib * &ib))));
    let scalar = l.coeff(*base);
    let rest = l.sub(&LinForm::term(*base, scalar.clone()));
    Ok(PointLaurent { c_minus1, c0: PointConstant { scalar, rest, base: *base } })
}

/// Symbolic constants of the canonical map that the σ-calculus fixes.
/// The slit data (p̂, v̂, T, k) are numeric and live with the SC sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct MapConstants {
    pub a1: Coeff,
    pub b: BVector,
    /// K required by cancellation of the 1/w1 pole of λ(p) − p.
    pub k: Coeff,
}

impl MapConstants {
    /// `A1` has weight 4, every `B_i` the weight of `A_i`-type constants paired with `u_i`.
    pub fn weights_consistent(&self) -> bool {
        let ok_a1 = self.a1.weight() == Ok(Some(4));
        let ok_k = self.k.weight() == Ok(Some(-15));
        let ok_b = self.b.b.iter().zip(crate::algebra::U_WEIGHTS).all(|(b, w)| b.is_zero() || b.weight() == Some(19 - w));
        ok_a1 && ok_k && ok_b
    }
}

/// The assembled map
/// `λ = p̂8 + c + K[ψ(σ_K(u)/σ23(u) − rest(u0)/σ_b(u0)) + k0 + Σ B_i (u_i − u0_i)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaFormula {
    /// `c₀` of σ34/σ23 at `u_{0,0}`.
    pub lead_constant: Coeff,
    pub psi_coeff: Coeff,
    pub psi_symbol: Sym,
    /// `rest/σ_b` evaluated at u0, entering with `−psi_coeff`.
    pub u0_quotient: PointConstant,
    /// The scalar left inside the K-bracket.
    pub k_constant: Coeff,
    pub constants: MapConstants,
}

impl LambdaFormula {
    /// Canonical one-line text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "lambda(p) = p8 + {} + K*[ ({})*({}(u)/sigma23(u)", self.lead_constant, self.psi_coeff, self.psi_symbol);
        for (sym, c) in self.u0_quotient.rest.terms() {
            let _ = write!(s, " + ({})*{}(u0)/{}(u0)", -c, sym, self.u0_quotient.base);
        }
        let _ = write!(s, ") + {}", self.k_constant);
        for (i, b) in self.constants.b.b.iter().enumerate() {
            if !b.is_zero() {
                let _ = write!(s, " + ({b})*(u{} - u0_{})", i + 1, i + 1);
            }
        }
        let _ = write!(s, " ], K = {}", self.constants.k);
        s
    }

    /// Weight bookkeeping: every term of the K-bracket has one weight and
    /// `K·bracket` matches the leading constant.
    pub fn weights_consistent(&self) -> bool {
        let Ok(Some(wp)) = self.psi_coeff.weight() else { return false };
        let bracket = wp + self.psi_symbol.weight() - s23().weight();
        let Ok(Some(wk)) = self.k_constant.weight() else { return false };
        let Ok(Some(wl)) = self.lead_constant.weight() else { return false };
        let Ok(Some(wkk)) = self.constants.k.weight() else { return false };
        let rest_ok = self.u0_quotient.rest.terms().iter().all(|(s, _)| s.weight() - self.u0_quotient.base.weight() == self.psi_symbol.weight() - s23().weight());
        wk == bracket && wl == wkk + bracket && rest_ok && self.constants.weights_consistent()
    }
}

impl fmt::Display for LambdaFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Assembles λ(p) on the principal sheet (`s → μ0^{1/4}` as t → 0).
pub fn assemble_lambda(psi: &PsiSolution, b: &BVector, rels: &U0Relations, table: &TaylorTable, phi2: &Phi2Pole) -> Result<LambdaFormula, PsiError> {
    if rels.sheet != Sheet::new(0) {
        return Err(PsiError::MissingSheet(0));
    }
    let (psi_coeff, psi_symbol) = psi
        .as_single_term()
        .ok_or_else(|| PsiError::NotScalar { what: "Ψ numerator", base: "one σ-derivative".into(), expr: psi.numerator.to_string() })?;
    let lp = laurent_over_sigma23(psi_symbol, rels, table)?;
    let ratio = laurent_over_sigma23(s34(), rels, table)?;
    // λ − p = Ĉ − σ34/σ23 + K(Ψ + B·u): the 1/w1 terms cancel iff K ψ c₋₁(Ψ) = c₋₁(σ34/σ23)
    let denom = &psi_coeff * &lp.c_minus1;
    let k = &ratio.c_minus1 * &denom.inv().ok_or_else(|| PsiError::NotScalar { what: "pole coefficient", base: "a unit".into(), expr: denom.to_string() })?;
    if !ratio.c0.rest.is_zero() {
        return Err(PsiError::NotScalar { what: "σ34/σ23 constant term", base: "a scalar".into(), expr: ratio.c0.rest.to_string() });
    }
    let lead_constant = ratio.c0.scalar.clone();
    debug_assert_eq!(lead_constant, phi2.c0);
    let k_constant = -&(&psi_coeff * &lp.c0.scalar);
    Ok(LambdaFormula {
        lead_constant,
        psi_coeff,
        psi_symbol,
        u0_quotient: lp.c0,
        k_constant,
        constants: MapConstants { a1: phi2.a1.clone(), b: b.clone(), k },
    })
}

/// φ₂ with the residue-free A1.
pub fn phi2_quotient(a1: &Coeff) -> SigmaQuotient {
    let (a, b) = (sx(s23()), sx(s34()));
    SigmaQuotient::new(b.pow(2).sub(&b.mul(&a).scale(a1)), a.pow(2))
}

/// Re-exported for callers that already hold the point tables.
pub fn phi2_at(rels: &U0Relations, table: &TaylorTable) -> Result<Phi2Pole, PsiError> {
    Ok(phi2_pole_expansion(rels, table)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_of_a_constant_vanishes() {
        assert!(D1Quotient::constant(Coeff::mu(2)).d1().num.is_zero());
    }

    #[test]
    fn index_sets_count() {
        assert_eq!(all_index_sets(2).len(), 21);
        assert_eq!(all_index_sets(3).len(), 56);
    }

    #[test]
    fn affine_display() {
        let a = AffineA { constant: Coeff::frac(1, 2), a: [Coeff::one(), Coeff::zero(), Coeff::zero()] };
        assert_eq!(a.to_string(), "A2 + 1/2");
    }

    #[test]
    fn unit_rref_solves_a_small_system() {
        let rows = vec![
            (vec![Coeff::one(), Coeff::one()], Coeff::int(3)),
            (vec![Coeff::one(), Coeff::int(-1)], Coeff::int(1)),
        ];
        let r = unit_rref(rows, &[0, 1]).unwrap();
        let x0 = r.iter().find(|(c, _, _)| *c == 0).unwrap().2.clone();
        assert_eq!(x0, Coeff::int(2));
    }
}
