//! Formal σ-derivative algebra and the stratum descent engine.
//!
//! A relation set at level k holds rewrite rules `σ_lhs → rhs` valid on Θ^[k];
//! [`descend`] produces the rules one level down by expanding every relation
//! at `û + u(ξ)` and triangularizing weight by weight.

mod descent;
mod expr;
pub mod jorgenson;
mod master;
mod symbol;

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

pub use descent::{descend, descend_with, DescentReport};
pub use expr::{ExprError, SigmaExpr, SigmaQuotient, SymProduct};
pub use master::{index_shift, MasterExpansion};
pub use symbol::{LinForm, Sym};

/// Where a relation came from: the ξⁿ coefficient of a parent relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    /// The root relation `σ = 0` defining Θ^[5] (or a hand-entered rule).
    Root,
    /// ξⁿ coefficient of the parent rule whose lhs is `parent`.
    Rule { parent: Sym, xi: u32 },
    /// ξⁿ coefficient of the parent side relation with this index.
    Side { parent: usize, xi: u32 },
    /// w1ⁿ coefficient of a Θ^[1] rule expanded about a point u0.
    PointRule { parent: Sym, w1: u32 },
    /// w1ⁿ coefficient of a Θ^[1] side relation expanded about u0.
    PointSide { parent: usize, w1: u32 },
    /// w1ⁿ coefficient of `σ23 + t σ34 = 0` about u0.
    PointTee { w1: u32 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Root => write!(f, "root"),
            Provenance::Rule { parent, xi } => write!(f, "{} xi^{}", parent.to_list(), xi),
            Provenance::Side { parent, xi } => write!(f, "side{} xi^{}", parent, xi),
            Provenance::PointRule { parent, w1 } => write!(f, "{} w1^{}", parent.to_list(), w1),
            Provenance::PointSide { parent, w1 } => write!(f, "side{} w1^{}", parent, w1),
            Provenance::PointTee { w1 } => write!(f, "tee w1^{}", w1),
        }
    }
}

impl Provenance {
    fn parse(t: &str) -> Option<Provenance> {
        let t = t.trim();
        if t == "root" {
            return Some(Provenance::Root);
        }
        if let Some((p, x)) = t.split_once(" w1^") {
            let w1: u32 = x.trim().parse().ok()?;
            if p == "tee" {
                return Some(Provenance::PointTee { w1 });
            }
            if let Some(k) = p.strip_prefix("side") {
                return Some(Provenance::PointSide { parent: k.parse().ok()?, w1 });
            }
            return Some(Provenance::PointRule { parent: Sym::parse(p)?, w1 });
        }
        let (p, x) = t.split_once(" xi^")?;
        let xi: u32 = x.trim().parse().ok()?;
        if let Some(k) = p.strip_prefix("side") {
            return Some(Provenance::Side { parent: k.parse().ok()?, xi });
        }
        Some(Provenance::Rule { parent: Sym::parse(p)?, xi })
    }
}

/// A rewrite rule `σ_lhs = rhs` with a monic left side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Sym,
    pub rhs: LinForm,
    pub prov: Provenance,
}

impl Rule {
    /// `σ_lhs - rhs`, the relation as a linear form equal to zero.
    pub fn as_relation(&self) -> LinForm {
        LinForm::sym(self.lhs).sub(&self.rhs)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("inconsistent relation: nonzero constant at weight {0}")]
    Inconsistent(i32),
    #[error("relation is not isobaric: {0} vs {1}")]
    NotIsobaric(Sym, Sym),
}

/// Ordered rewrite system on a stratum (level k) or at a special point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSet {
    pub level: u8,
    /// Lowest relation weight covered; relations below it were never derived.
    pub wmin: i32,
    pub rules: BTreeMap<Sym, Rule>,
    /// Relations whose leading weight part cancelled, leaving a μ-dependent
    /// identity among irreducible symbols.
    pub side: Vec<LinForm>,
}

impl RelationSet {
    pub fn new(level: u8, wmin: i32) -> RelationSet {
        RelationSet { level, wmin, rules: BTreeMap::new(), side: Vec::new() }
    }

    /// Θ^[5]: the single relation `σ = 0`.
    pub fn theta5(wmin: i32) -> RelationSet {
        let mut r = RelationSet::new(5, wmin);
        r.rules.insert(Sym::SIGMA, Rule { lhs: Sym::SIGMA, rhs: LinForm::zero(), prov: Provenance::Root });
        r
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, s: Sym) -> Option<&Rule> {
        self.rules.get(&s)
    }

    /// Normal form of one symbol.
    pub fn nf(&self, s: Sym) -> LinForm {
        match self.rules.get(&s) {
            Some(r) => r.rhs.clone(),
            None => LinForm::sym(s),
        }
    }

    /// Rewrites to normal form. Rules are kept fully reduced, so one pass
    /// suffices once the set is complete; the loop covers hand-built sets.
    pub fn reduce(&self, l: &LinForm) -> LinForm {
        let mut cur = l.clone();
        for _ in 0..64 {
            if !cur.symbols().any(|s| self.rules.contains_key(&s)) {
                return cur;
            }
            let mut acc: BTreeMap<Sym, crate::algebra::Coeff> = BTreeMap::new();
            for (s, c) in cur.terms() {
                match self.rules.get(s) {
                    Some(r) => {
                        for (t, d) in r.rhs.terms() {
                            let e = acc.entry(*t).or_insert_with(crate::algebra::Coeff::zero);
                            *e = &*e + &(c * d);
                        }
                    }
                    None => {
                        let e = acc.entry(*s).or_insert_with(crate::algebra::Coeff::zero);
                        *e = &*e + c;
                    }
                }
            }
            cur = LinForm::from_terms(acc);
        }
        panic!("rewriting did not terminate");
    }

    /// Reduces a polynomial σ-expression symbol by symbol.
    pub fn reduce_expr(&self, e: &SigmaExpr) -> SigmaExpr {
        e.substitute(&|s| SigmaExpr::from_linform(&self.reduce(&LinForm::sym(s))))
    }

    /// True when both sides of `lhs = rhs` have the same normal form.
    pub fn proves(&self, lhs: &LinForm, rhs: &LinForm) -> bool {
        self.reduce(&lhs.sub(rhs)).is_zero()
    }

    /// Symbols of weight ≥ wmin with no rule, grouped by index count.
    pub fn irreducible(&self, max_indices: usize) -> Vec<Sym> {
        let mut out = Vec::new();
        for s in all_symbols(self.wmin) {
            if s.n_indices() <= max_indices && !self.rules.contains_key(&s) {
                out.push(s);
            }
        }
        out
    }

    /// Restriction to rules whose lhs has at most `n` indices.
    pub fn restrict(&self, n: usize) -> RelationSet {
        let mut r = self.clone();
        r.rules.retain(|s, _| s.n_indices() <= n);
        r
    }

    /// Serializes to the line format read by [`RelationSet::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "level {}", self.level);
        let _ = writeln!(out, "wmin {}", self.wmin);
        for r in self.rules.values() {
            let _ = writeln!(out, "rule {} = {} @ {}", r.lhs.to_list(), lin_text(&r.rhs), r.prov);
        }
        for (k, s) in self.side.iter().enumerate() {
            let _ = writeln!(out, "side {} : 0 = {}", k, lin_text(s));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<RelationSet, RelationError> {
        let mut set = RelationSet::new(0, i32::MIN);
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| RelationError::Format { line: k + 1, msg: msg.to_string() };
            let (head, rest) = line.split_once(' ').ok_or_else(|| bad("missing field"))?;
            match head {
                "level" => set.level = rest.trim().parse().map_err(|_| bad("bad level"))?,
                "wmin" => set.wmin = rest.trim().parse().map_err(|_| bad("bad wmin"))?,
                "rule" => {
                    let (body, prov) = match rest.rsplit_once(" @ ") {
                        Some((b, p)) => (b, Provenance::parse(p).ok_or_else(|| bad("bad provenance"))?),
                        None => (rest, Provenance::Root),
                    };
                    let (l, r) = body.split_once('=').ok_or_else(|| bad("missing '='"))?;
                    let lhs = Sym::parse(l).ok_or_else(|| bad("bad lhs"))?;
                    let rhs = parse_lin(r, None).map_err(|e| bad(&e.to_string()))?;
                    set.rules.insert(lhs, Rule { lhs, rhs, prov });
                }
                "side" => {
                    let (_, r) = rest.split_once('=').ok_or_else(|| bad("missing '='"))?;
                    set.side.push(parse_lin(r, None).map_err(|e| bad(&e.to_string()))?);
                }
                _ => return Err(bad("unknown record")),
            }
        }
        Ok(set)
    }
}

fn lin_text(l: &LinForm) -> String {
    l.to_string()
}

/// Default ξ-order of the master expansion.
pub const DEFAULT_XI_ORDER: u32 = 29;

/// Lowest relation weight reachable with a master expansion to ξ^order.
pub fn wmin_for_order(xi_order: u32) -> i32 {
    15 - xi_order as i32
}

/// Descends from Θ^[5] = {σ = 0} to the requested level.
pub fn derive_stratum(level: u8, xi_order: u32) -> Result<(RelationSet, Vec<DescentReport>), RelationError> {
    let wmin = wmin_for_order(xi_order);
    let master = MasterExpansion::new(xi_order as usize);
    let mut set = RelationSet::theta5(wmin);
    let mut reports = Vec::new();
    while set.level > level.max(1) {
        let (next, rep) = descend_with(&set, &master)?;
        reports.push(rep);
        set = next;
    }
    Ok((set, reports))
}

/// Parses a linear σ-expression, e.g. `mu0*sigma34 + mu1*sigma23`.
pub fn parse_lin(text: &str, sheet: Option<u8>) -> Result<LinForm, ExprError> {
    let e = SigmaExpr::parse(text, sheet)?;
    if e.is_zero() {
        return Ok(LinForm::zero());
    }
    e.to_linform()
}

/// Every symbol of weight ≥ wmin, in ascending solving order.
pub fn all_symbols(wmin: i32) -> Vec<Sym> {
    let budget = 15 - wmin;
    let mut out = Vec::new();
    fn rec(k: usize, left: i32, counts: &mut [u8; 6], out: &mut Vec<Sym>) {
        if k == 6 {
            out.push(Sym::from_counts(*counts));
            return;
        }
        let w = crate::algebra::U_WEIGHTS[k];
        let mut c = 0;
        while c * w <= left {
            counts[k] = c as u8;
            rec(k + 1, left - c * w, counts, out);
            c += 1;
        }
        counts[k] = 0;
    }
    if budget >= 0 {
        rec(0, budget, &mut [0; 6], &mut out);
    }
    out.sort();
    out
}

/// A golden relation `lhs = rhs` as printed, checked by bidirectional reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenRule {
    pub lhs: LinForm,
    pub rhs: LinForm,
    pub line: usize,
}

/// Parses `lhs = rhs` records (one per line, `#` comments) into golden rules.
pub fn parse_golden(text: &str, sheet: Option<u8>) -> Result<Vec<GoldenRule>, RelationError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| RelationError::Format { line: k + 1, msg };
        let (l, r) = line.split_once('=').ok_or_else(|| bad("missing '='".into()))?;
        let lhs = parse_lin(l, sheet).map_err(|e| bad(e.to_string()))?;
        let rhs = parse_lin(r, sheet).map_err(|e| bad(e.to_string()))?;
        out.push(GoldenRule { lhs, rhs, line: k + 1 });
    }
    Ok(out)
}
