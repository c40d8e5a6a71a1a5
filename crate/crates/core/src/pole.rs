//! Local calculus at the zeros `u_{0,N}` of σ23 on Θ^[1] (the images of the
//! branch point t = 0 on sheet N), and the pole structure of φ₂ there.
//!
//! Near `u_{0,N}` the Abel image of the curve is parametrized by
//! `w_i = u_i - u_{0,i}^{[N]} = ∫_0^t du_i`. Every Θ^[1] relation holds along
//! that image, so its Taylor expansion in w1 vanishes order by order; those
//! coefficients are relations among σ-derivatives at the point.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::series::{Param, SeriesError};
use crate::algebra::{Coeff, Rat};
use crate::curve::{CurveC45, Series, Sheet};
use crate::strata::{parse_golden, LinForm, Provenance, RelationError, RelationSet, Rule, SigmaExpr, Sym};

/// Triangularization target: every 2- and 3-index derivative at `u_{0,N}`
/// is expressed through these.
pub const U0_BASIS: [&str; 7] = ["s22", "s122", "s222", "s223", "s224", "s225", "s226"];

/// Weighted w1-valuation of `w_i`.
const W_VALUATION: [u32; 6] = [1, 2, 1, 3, 2, 1];

pub const DEFAULT_W1_ORDER: u32 = 8;
pub const DEFAULT_MAX_INDICES: usize = 4;

#[derive(Debug, Error)]
pub enum PoleError {
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
    #[error("relation error: {0}")]
    Relation(#[from] RelationError),
    #[error("w1-order {0} too small for this expansion")]
    OrderTooSmall(u32),
    #[error("elimination left relations without a unit pivot: {0}")]
    NoUnitPivot(String),
    #[error("{what} is not free of σ-values after reduction: {expr}")]
    NotScalar { what: &'static str, expr: String },
    #[error("σ23 does not vanish at the point: {0}")]
    NonzeroCenter(String),
}

/// The point `u_{0,N}`. Its coordinates are kept as opaque labels; only the
/// differences `w_i` carry series data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolePoint {
    pub sheet: Sheet,
}

impl PolePoint {
    pub fn new(sheet: Sheet) -> PolePoint {
        PolePoint { sheet }
    }

    /// Label of the coordinate `u_{0,i}^{[N]}`.
    pub fn label(&self, i: usize) -> String {
        format!("u0_{}^[{}]", i, self.sheet.index())
    }

    /// Label of the formal value `σ_K(u_{0,N})`.
    pub fn value_label(&self, s: Sym) -> String {
        format!("{}(u0^[{}])", s, self.sheet.index())
    }

    /// The point on sheet N+k.
    pub fn cyclic(&self, k: u8) -> PolePoint {
        PolePoint { sheet: Sheet::new(self.sheet.index() + k) }
    }
}

/// `w_{i,N}(t) = ∫_0^t g_i/(4 s³) dt` on sheet N, to `O(t^order)`.
pub fn w_series(curve: &CurveC45, i: usize, sheet: Sheet, order: i32) -> Result<Series, PoleError> {
    Ok(curve.du_dt_at_origin(i, sheet, order - 1).integrate()?.truncate(order))
}

fn relabel(s: &Series, param: Param) -> Series {
    let start = s.start();
    let coeffs = (start..s.prec()).map(|k| s.coeff(k)).collect();
    Series::new(param, start, coeffs, s.prec())
}

/// The six `w_i` on one sheet, in t and in w1.
#[derive(Clone, Debug)]
pub struct WSeries {
    pub sheet: Sheet,
    pub order: i32,
    pub in_t: [Series; 6],
    /// `t(w1)`, the reversion of `w1(t)`.
    pub t_of_w1: Series,
    pub in_w1: [Series; 6],
}

/// All `w_i` as series in w1 to `O(w1^order)`.
pub fn reparam_to_w1(curve: &CurveC45, sheet: Sheet, order: i32) -> Result<WSeries, PoleError> {
    let mut in_t = Vec::with_capacity(6);
    for i in 1..=6 {
        in_t.push(w_series(curve, i, sheet, order)?);
    }
    let t_of_w1 = in_t[0].revert()?;
    let mut in_w1 = Vec::with_capacity(6);
    for w in &in_t {
        in_w1.push(relabel(&w.compose(&t_of_w1)?.truncate(order), Param::W1));
    }
    Ok(WSeries {
        sheet,
        order,
        in_t: in_t.try_into().unwrap(),
        t_of_w1: relabel(&t_of_w1, Param::W1),
        in_w1: in_w1.try_into().unwrap(),
    })
}

/// Coefficients `[w1^n] Π w_i^{j_i}/j_i!` for every multi-index J of
/// weighted order below the table order.
#[derive(Clone, Debug)]
pub struct TaylorTable {
    pub sheet: Sheet,
    pub order: u32,
    entries: Vec<(Sym, Vec<Coeff>)>,
    t_coeffs: Vec<Coeff>,
}

impl TaylorTable {
    pub fn new(w: &WSeries, order: u32) -> Result<TaylorTable, PoleError> {
        if order as i32 > w.order {
            return Err(PoleError::OrderTooSmall(w.order as u32));
        }
        let prec = order as i32;
        let mut entries = Vec::new();
        let mut counts = [0u8; 6];
        fn rec(k: usize, left: u32, counts: &mut [u8; 6], out: &mut Vec<[u8; 6]>) {
            if k == 6 {
                out.push(*counts);
                return;
            }
            let mut c = 0u32;
            while c * W_VALUATION[k] <= left {
                counts[k] = c as u8;
                rec(k + 1, left - c * W_VALUATION[k], counts, out);
                c += 1;
            }
            counts[k] = 0;
        }
        let mut all = Vec::new();
        rec(0, order - 1, &mut counts, &mut all);
        for c in all {
            let mut p = Series::constant(Param::W1, Coeff::one(), prec);
            let mut fact = 1i64;
            for (k, &e) in c.iter().enumerate() {
                if e > 0 {
                    p = p.mul(&w.in_w1[k].truncate(prec).pow(e as u32)).truncate(prec);
                    fact *= (1..=e as i64).product::<i64>();
                }
            }
            let p = p.scale(&Rat::new(1, fact));
            let coeffs = (0..prec).map(|n| p.coeff(n)).collect();
            entries.push((Sym::from_counts(c), coeffs));
        }
        let t_coeffs = (0..prec).map(|n| w.t_of_w1.coeff(n)).collect();
        Ok(TaylorTable { sheet: w.sheet, order, entries, t_coeffs })
    }

    /// `[w1^n] σ_K(u_{0,N} + w(w1))` as a linear form in point values.
    pub fn symbol_coefficient(&self, k: Sym, n: u32) -> LinForm {
        self.relation_coefficient(&LinForm::sym(k), n)
    }

    /// `[w1^n]` of a linear relation expanded about the point.
    pub fn relation_coefficient(&self, rel: &LinForm, n: u32) -> LinForm {
        assert!(n < self.order, "w1 order {n} beyond table order {}", self.order);
        let mut acc: BTreeMap<Sym, Coeff> = BTreeMap::new();
        for (j, coeffs) in &self.entries {
            let p = &coeffs[n as usize];
            if p.is_zero() {
                continue;
            }
            for (k, c) in rel.terms() {
                let e = acc.entry(k.join(*j)).or_insert_with(Coeff::zero);
                *e = &*e + &(c * p);
            }
        }
        LinForm::from_terms(acc)
    }

    /// `[w1^n]` of `σ23 + t(w1) σ34`, which vanishes along Θ^[1] near the point.
    pub fn tee_coefficient(&self, n: u32) -> LinForm {
        let s23 = Sym::from_indices(&[2, 3]);
        let s34 = Sym::from_indices(&[3, 4]);
        let mut out = self.symbol_coefficient(s23, n);
        for m in 1..=n {
            let t = &self.t_coeffs[m as usize];
            if !t.is_zero() {
                out = out.add_scaled(&self.symbol_coefficient(s34, n - m), t);
            }
        }
        out
    }
}

/// `σ_K(u_{0,N} + w(w1))` as coefficients of `w1^0 … w1^{order-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct U0Series {
    pub sheet: Sheet,
    pub symbol: Sym,
    pub coeffs: Vec<LinForm>,
}

impl U0Series {
    pub fn prec(&self) -> u32 {
        self.coeffs.len() as u32
    }

    pub fn reduced(&self, rels: &U0Relations) -> U0Series {
        U0Series { coeffs: self.coeffs.iter().map(|c| rels.set.reduce(c)).collect(), ..self.clone() }
    }
}

pub fn sigma_deriv_at_u0(table: &TaylorTable, symbol: Sym, order: u32) -> U0Series {
    let order = order.min(table.order);
    U0Series {
        sheet: table.sheet,
        symbol,
        coeffs: (0..order).map(|n| table.symbol_coefficient(symbol, n)).collect(),
    }
}

/// Elimination order at the point: basis symbols below everything, then by
/// index count and the usual symbol order.
fn point_key(s: Sym, basis: &[Sym]) -> (bool, usize, Sym) {
    (!basis.contains(&s), s.n_indices(), s)
}

fn basis_syms() -> Vec<Sym> {
    U0_BASIS.iter().map(|b| Sym::parse(b).unwrap()).collect()
}

#[derive(Clone, Debug)]
pub struct U0Options {
    pub w1_order: u32,
    /// Relations are generated only while every symbol has at most this many indices.
    pub max_indices: usize,
}

impl Default for U0Options {
    fn default() -> Self {
        U0Options { w1_order: DEFAULT_W1_ORDER, max_indices: DEFAULT_MAX_INDICES }
    }
}

/// Relations at `u_{0,N}`; `set.level` is 0 and `set.wmin` is inherited.
#[derive(Clone, Debug, PartialEq)]
pub struct U0Relations {
    pub sheet: Sheet,
    pub max_indices: usize,
    pub set: RelationSet,
}

impl U0Relations {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sheet {}", self.sheet.index());
        let _ = writeln!(out, "max_indices {}", self.max_indices);
        out.push_str(&self.set.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<U0Relations, RelationError> {
        let mut sheet = None;
        let mut max_indices = None;
        let mut rest = String::new();
        for (k, line) in text.lines().enumerate() {
            let bad = |msg: &str| RelationError::Format { line: k + 1, msg: msg.to_string() };
            if let Some(v) = line.strip_prefix("sheet ") {
                sheet = Some(Sheet::new(v.trim().parse().map_err(|_| bad("bad sheet"))?));
            } else if let Some(v) = line.strip_prefix("max_indices ") {
                max_indices = Some(v.trim().parse().map_err(|_| bad("bad max_indices"))?);
            } else {
                rest.push_str(line);
            }
            rest.push('\n');
        }
        let missing = |f: &str| RelationError::Format { line: 1, msg: format!("missing {f}") };
        Ok(U0Relations {
            sheet: sheet.ok_or_else(|| missing("sheet"))?,
            max_indices: max_indices.ok_or_else(|| missing("max_indices"))?,
            set: RelationSet::from_text(&rest)?,
        })
    }

    /// Symbols with at most `n` indices left irreducible (only those that
    /// occur in some relation or rule).
    pub fn irreducible(&self, n: usize) -> Vec<Sym> {
        let mut seen: std::collections::BTreeSet<Sym> = std::collections::BTreeSet::new();
        for r in self.set.rules.values() {
            seen.extend(r.rhs.symbols().filter(|s| s.n_indices() <= n));
        }
        seen.into_iter().collect()
    }

    /// Checks printed `lhs = rhs` records for this sheet; returns failing lines.
    pub fn golden_failures(&self, text: &str) -> Result<Vec<usize>, RelationError> {
        let rules = parse_golden(text, Some(self.sheet.index()))?;
        Ok(rules.iter().filter(|g| !self.set.proves(&g.lhs, &g.rhs)).map(|g| g.line).collect())
    }
}

struct Row {
    rel: LinForm,
    prov: Provenance,
}

fn max_indices_of(l: &LinForm) -> usize {
    l.symbols().map(|s| s.n_indices()).max().unwrap_or(0)
}

/// Expands every Θ^[1] relation about `u_{0,N}` and triangularizes the
/// w1-coefficients toward [`U0_BASIS`].
pub fn derive_u0_relations(theta1: &RelationSet, table: &TaylorTable, opts: &U0Options) -> Result<U0Relations, PoleError> {
    let cap = opts.max_indices;
    let top = opts.w1_order.min(table.order);
    let mut parents: Vec<(LinForm, ParentTag)> = Vec::new();
    for r in theta1.rules.values() {
        parents.push((r.as_relation(), ParentTag::Rule(r.lhs)));
    }
    for (k, s) in theta1.side.iter().enumerate() {
        parents.push((s.clone(), ParentTag::Side(k)));
    }
    let mut rows: Vec<Row> = parents
        .par_iter()
        .flat_map_iter(|(rel, tag)| {
            let m = max_indices_of(rel);
            let nmax = if m > cap { 0 } else { ((cap - m) as u32 + 1).min(top) };
            (0..nmax).map(move |n| Row { rel: table.relation_coefficient(rel, n), prov: tag.at(n) })
        })
        .filter(|r| !r.rel.is_zero())
        .collect();
    for n in 0..(cap.saturating_sub(1) as u32).min(top) {
        rows.push(Row { rel: table.tee_coefficient(n), prov: Provenance::PointTee { w1: n } });
    }
    let set = eliminate(rows, theta1.wmin)?;
    Ok(U0Relations { sheet: table.sheet, max_indices: cap, set })
}

#[derive(Clone, Copy)]
enum ParentTag {
    Rule(Sym),
    Side(usize),
}

impl ParentTag {
    fn at(self, w1: u32) -> Provenance {
        match self {
            ParentTag::Rule(parent) => Provenance::PointRule { parent, w1 },
            ParentTag::Side(parent) => Provenance::PointSide { parent, w1 },
        }
    }
}

/// Incremental reduced row echelon form with unit pivots. A row whose
/// leading coefficients are not units is retried after later pivots.
fn eliminate(rows: Vec<Row>, wmin: i32) -> Result<RelationSet, PoleError> {
    let basis = basis_syms();
    let mut set = RelationSet::new(0, wmin);
    let mut pending: Vec<Row> = Vec::new();
    let mut queue = rows;
    loop {
        let mut progress = false;
        for row in queue.drain(..) {
            let rel = set.reduce(&row.rel);
            if rel.is_zero() {
                continue;
            }
            let mut terms: Vec<&(Sym, Coeff)> = rel.terms().iter().collect();
            terms.sort_by(|a, b| point_key(b.0, &basis).cmp(&point_key(a.0, &basis)));
            let pivot = terms.iter().find_map(|(s, c)| c.inv().map(|ci| (*s, ci)));
            let Some((p, cinv)) = pivot else {
                pending.push(Row { rel, prov: row.prov });
                continue;
            };
            let monic = rel.scale(&cinv);
            let rhs = LinForm::sym(p).sub(&monic);
            let sub = LinForm::sym(p).sub(&rhs);
            for r in set.rules.values_mut() {
                let c = r.rhs.coeff(p);
                if !c.is_zero() {
                    r.rhs = r.rhs.add_scaled(&sub, &(-&c));
                }
            }
            set.rules.insert(p, Rule { lhs: p, rhs, prov: row.prov });
            progress = true;
        }
        if pending.is_empty() || !progress {
            break;
        }
        queue = std::mem::take(&mut pending);
    }
    let left: Vec<LinForm> = pending.into_iter().map(|r| set.reduce(&r.rel)).filter(|r| !r.is_zero()).collect();
    if let Some(l) = left.first() {
        return Err(PoleError::NoUnitPivot(l.to_string()));
    }
    Ok(set)
}

/// `n / d` when it is a scalar multiple, else `None`.
fn scalar_ratio(n: &SigmaExpr, d: &SigmaExpr) -> Option<Coeff> {
    let (mono, cd) = d.terms().next()?;
    let cn = n.terms().find(|(m, _)| *m == mono).map(|(_, c)| c.clone()).unwrap_or_else(Coeff::zero);
    let k = &cn * &cd.inv()?;
    n.sub(&d.scale(&k)).is_zero().then_some(k)
}

/// Principal part of `φ₂ = (σ34/σ23)² − A1 σ34/σ23` at `u_{0,N}`.
///
/// With `σ34/σ23 = c₋₁/w1 + c₀ + …` the double pole is `c₋₁²` and the
/// residue is `2c₋₁c₀ − A1 c₋₁`, stored as `residue_const + residue_a1 · A1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Phi2Pole {
    pub sheet: Sheet,
    pub c_minus1: Coeff,
    pub c0: Coeff,
    pub double_pole: Coeff,
    pub residue_const: Coeff,
    pub residue_a1: Coeff,
    /// The value of A1 that removes the residue.
    pub a1: Coeff,
}

pub fn phi2_pole_expansion(rels: &U0Relations, table: &TaylorTable) -> Result<Phi2Pole, PoleError> {
    if table.order < 3 {
        return Err(PoleError::OrderTooSmall(table.order));
    }
    let s23 = sigma_deriv_at_u0(table, Sym::from_indices(&[2, 3]), 3).reduced(rels);
    let s34 = sigma_deriv_at_u0(table, Sym::from_indices(&[3, 4]), 2).reduced(rels);
    if !s23.coeffs[0].is_zero() {
        return Err(PoleError::NonzeroCenter(s23.coeffs[0].to_string()));
    }
    let e = SigmaExpr::from_linform;
    let (a0, a1) = (e(&s34.coeffs[0]), e(&s34.coeffs[1]));
    let (b1, b2) = (e(&s23.coeffs[1]), e(&s23.coeffs[2]));
    let c_minus1 = scalar_ratio(&a0, &b1).ok_or_else(|| PoleError::NotScalar { what: "c_-1", expr: format!("({a0})/({b1})") })?;
    // c0 = (a1 b1 − a0 b2) / b1²
    let num = a1.mul(&b1).sub(&a0.mul(&b2));
    let den = b1.mul(&b1);
    let c0 = scalar_ratio(&num, &den).ok_or_else(|| PoleError::NotScalar { what: "c_0", expr: format!("({num})/({den})") })?;
    let double_pole = &c_minus1 * &c_minus1;
    let residue_const = (&c_minus1 * &c0).scale(&Rat::from(2));
    let residue_a1 = -&c_minus1;
    let a1 = -&(&residue_const * &residue_a1.inv().expect("c_-1 is a unit"));
    Ok(Phi2Pole { sheet: rels.sheet, c_minus1, c0, double_pole, residue_const, residue_a1, a1 })
}

/// Everything at one sheet: series, relations and the φ₂ pole data.
#[derive(Clone, Debug)]
pub struct SheetAnalysis {
    pub point: PolePoint,
    pub w: WSeries,
    pub relations: U0Relations,
    pub phi2: Phi2Pole,
}

/// Runs the point analysis on all four sheets concurrently.
pub fn analyze_sheets(curve: &CurveC45, theta1: &RelationSet, opts: &U0Options) -> Result<Vec<SheetAnalysis>, PoleError> {
    Sheet::all()
        .par_iter()
        .map(|&sheet| {
            let w = reparam_to_w1(curve, sheet, opts.w1_order as i32)?;
            let table = TaylorTable::new(&w, opts.w1_order)?;
            let relations = derive_u0_relations(theta1, &table, opts)?;
            let phi2 = phi2_pole_expansion(&relations, &table)?;
            Ok(SheetAnalysis { point: PolePoint::new(sheet), w, relations, phi2 })
        })
        .collect()
}
