use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;

use super::{LinForm, MasterExpansion, Provenance, RelationError, RelationSet, Rule, Sym};
use crate::algebra::{Coeff, Mono, Rat};

/// Diagnostics from one descent step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DescentReport {
    pub parents: usize,
    pub rows: usize,
    pub rules: usize,
    pub side: usize,
    pub memo_entries: usize,
    pub seconds: f64,
}

struct Parent {
    rel: LinForm,
    weight: i32,
    prov: ParentRef,
}

#[derive(Clone, Copy)]
enum ParentRef {
    Rule(Sym),
    Side(usize),
}

impl ParentRef {
    fn at(self, xi: u32) -> Provenance {
        match self {
            ParentRef::Rule(parent) => Provenance::Rule { parent, xi },
            ParentRef::Side(parent) => Provenance::Side { parent, xi },
        }
    }
}

/// Row during triangularization at one weight: `main` holds the symbols of
/// that weight (rational coefficients), `tail` the irreducible higher-weight ones.
#[derive(Clone)]
struct Row {
    main: LinForm,
    tail: LinForm,
    prov: Provenance,
}

/// Descends one level with a freshly built master expansion.
pub fn descend(rel: &RelationSet) -> Result<(RelationSet, DescentReport), RelationError> {
    let master = MasterExpansion::new((15 - rel.wmin) as usize);
    descend_with(rel, &master)
}

/// Descends from level k to level k−1: every relation R (rules and side
/// relations) is expanded at `û + u(ξ)`; the ξⁿ coefficients are relations
/// on Θ^[k−1], solved weight by weight from the top.
pub fn descend_with(rel: &RelationSet, master: &MasterExpansion) -> Result<(RelationSet, DescentReport), RelationError> {
    let start = Instant::now();
    let wmin = rel.wmin;
    assert!(master.order as i32 >= 15 - wmin, "master expansion too short for wmin {wmin}");

    let mut parents = Vec::new();
    for r in rel.rules.values() {
        let l = r.as_relation();
        parents.push(Parent { weight: relation_weight(&l)?, rel: l, prov: ParentRef::Rule(r.lhs) });
    }
    for (k, l) in rel.side.iter().enumerate() {
        parents.push(Parent { weight: relation_weight(l)?, rel: l.clone(), prov: ParentRef::Side(k) });
    }
    parents.sort_by(|a, b| b.weight.cmp(&a.weight));

    let mut out = RelationSet::new(rel.level.saturating_sub(1), wmin);
    let mut memo: HashMap<(Sym, u32), (LinForm, bool)> = HashMap::new();
    let mut report = DescentReport { parents: parents.len(), ..Default::default() };
    let top = parents.iter().map(|p| p.weight).max().unwrap_or(wmin);

    for w in (wmin..=top).rev() {
        let active: Vec<&Parent> = parents.iter().filter(|p| p.weight >= w).collect();
        // memo keys needed at this weight
        let mut keys: Vec<(Sym, u32)> = Vec::new();
        for p in &active {
            let n = (p.weight - w) as u32;
            for s in p.rel.symbols() {
                keys.push((s, n));
            }
        }
        keys.sort();
        keys.dedup();
        let todo: Vec<(Sym, u32)> = keys
            .iter()
            .copied()
            .filter(|k| match memo.get(k) {
                None => true,
                Some((_, fin)) => !*fin,
            })
            .collect();
        let fresh: Vec<((Sym, u32), (LinForm, bool))> = todo
            .par_iter()
            .map(|&(k, n)| {
                let fin = k.weight() - n as i32 > w;
                let l = match memo.get(&(k, n)) {
                    Some((l, _)) => out.reduce_once(l),
                    None => expand_symbol(master, &out, k, n),
                };
                ((k, n), (l, fin))
            })
            .collect();
        memo.extend(fresh);

        let rows: Vec<Row> = active
            .par_iter()
            .filter_map(|p| {
                let n = (p.weight - w) as u32;
                let mut acc: BTreeMap<Sym, Coeff> = BTreeMap::new();
                for (k, c) in p.rel.terms() {
                    for (s, d) in memo[&(*k, n)].0.terms() {
                        let e = acc.entry(*s).or_insert_with(Coeff::zero);
                        *e = &*e + &(c * d);
                    }
                }
                let l = LinForm::from_terms(acc);
                if l.is_zero() {
                    return None;
                }
                let (main, tail) = l.split_weight(w);
                Some(Row { main, tail, prov: p.prov.at(n) })
            })
            .collect();
        report.rows += rows.len();

        let (pivots, side) = triangularize(rows, w)?;
        for (lhs, row) in pivots {
            let rhs = row.main.sub(&LinForm::sym(lhs)).add(&row.tail).scale(&Coeff::int(-1));
            out.rules.insert(lhs, Rule { lhs, rhs, prov: row.prov });
        }
        out.side.extend(side);
    }
    report.rules = out.rules.len();
    report.side = out.side.len();
    report.memo_entries = memo.len();
    report.seconds = start.elapsed().as_secs_f64();
    Ok((out, report))
}

fn relation_weight(l: &LinForm) -> Result<i32, RelationError> {
    match l.weight() {
        Ok(Some(w)) => Ok(w),
        Ok(None) => Ok(i32::MIN),
        Err((a, b)) => Err(RelationError::NotIsobaric(a, b)),
    }
}

/// `E_K[n] = Σ_I m_{n,I} NF(σ_{K+I})`, reduced by the rules found so far.
fn expand_symbol(master: &MasterExpansion, rules: &RelationSet, k: Sym, n: u32) -> LinForm {
    let mut acc: BTreeMap<Sym, Coeff> = BTreeMap::new();
    for (i, m) in &master.terms[n as usize] {
        let s = k.join(*i);
        match rules.rules.get(&s) {
            Some(r) => {
                for (t, d) in r.rhs.terms() {
                    let e = acc.entry(*t).or_insert_with(Coeff::zero);
                    *e = &*e + &(m * d);
                }
            }
            None => {
                let e = acc.entry(s).or_insert_with(Coeff::zero);
                *e = &*e + m;
            }
        }
    }
    LinForm::from_terms(acc)
}

impl RelationSet {
    /// One substitution pass with the current rules.
    fn reduce_once(&self, l: &LinForm) -> LinForm {
        let mut acc: BTreeMap<Sym, Coeff> = BTreeMap::new();
        for (s, c) in l.terms() {
            match self.rules.get(s) {
                Some(r) => {
                    for (t, d) in r.rhs.terms() {
                        let e = acc.entry(*t).or_insert_with(Coeff::zero);
                        *e = &*e + &(c * d);
                    }
                }
                None => {
                    let e = acc.entry(*s).or_insert_with(Coeff::zero);
                    *e = &*e + c;
                }
            }
        }
        LinForm::from_terms(acc)
    }
}

/// Reduced row echelon form on the weight-w symbols, pivoting on the largest
/// symbol. Returns monic pivot rows and the leftover side relations.
fn triangularize(rows: Vec<Row>, w: i32) -> Result<(BTreeMap<Sym, Row>, Vec<LinForm>), RelationError> {
    let mut piv: BTreeMap<Sym, Row> = BTreeMap::new();
    let mut side_rows: Vec<LinForm> = Vec::new();
    for mut r in rows {
        loop {
            let Some((lead, c)) = r.main.leading().cloned() else { break };
            match piv.get(&lead) {
                Some(p) => {
                    let k = -c;
                    r.main = r.main.add_scaled(&p.main, &k);
                    r.tail = r.tail.add_scaled(&p.tail, &k);
                }
                None => {
                    let inv = c.as_rat().filter(|x| !x.is_zero()).ok_or(RelationError::Inconsistent(w))?.recip();
                    r.main = r.main.scale_rat(&inv);
                    r.tail = r.tail.scale_rat(&inv);
                    piv.insert(lead, r.clone());
                    break;
                }
            }
        }
        if r.main.is_zero() && !r.tail.is_zero() {
            side_rows.push(r.tail);
        }
    }
    // back substitution, ascending pivots, leaves every pivot row fully reduced
    let keys: Vec<Sym> = piv.keys().copied().collect();
    for (idx, &p) in keys.iter().enumerate() {
        let mut row = piv[&p].clone();
        for &q in keys[..idx].iter().rev() {
            let c = row.main.coeff(q);
            if !c.is_zero() {
                let qrow = &piv[&q];
                let k = -c;
                row.main = row.main.add_scaled(&qrow.main, &k);
                row.tail = row.tail.add_scaled(&qrow.tail, &k);
            }
        }
        piv.insert(p, row);
    }
    Ok((piv, independent_side(side_rows)))
}

/// Q-linear basis of the side relations, with (symbol, monomial) pairs as columns.
fn independent_side(rows: Vec<LinForm>) -> Vec<LinForm> {
    type Col = (Sym, Mono);
    let to_vec = |l: &LinForm| -> BTreeMap<Col, Rat> {
        let mut m = BTreeMap::new();
        for (s, c) in l.terms() {
            for (mo, r) in c.terms() {
                m.insert((*s, *mo), r.clone());
            }
        }
        m
    };
    let mut basis: Vec<(Col, BTreeMap<Col, Rat>, LinForm)> = Vec::new();
    for l in rows {
        let mut v = to_vec(&l);
        let mut lf = l;
        for (col, bv, bl) in &basis {
            if let Some(x) = v.get(col).cloned() {
                let k = -x;
                for (c2, y) in bv {
                    let e = v.entry(*c2).or_insert_with(Rat::zero);
                    *e = &*e + &(&k * y);
                }
                v.retain(|_, r| !r.is_zero());
                lf = lf.add_scaled(bl, &Coeff::from_rat(k));
            }
        }
        if let Some((&col, x)) = v.iter().next_back() {
            let inv = x.recip();
            let v: BTreeMap<Col, Rat> = v.iter().map(|(c, r)| (*c, r * &inv)).collect();
            let lf = lf.scale_rat(&inv);
            // keep earlier basis rows reduced in the new pivot column
            for (_, bv, bl) in basis.iter_mut() {
                if let Some(y) = bv.get(&col).cloned() {
                    let k = -y;
                    for (c2, z) in &v {
                        let e = bv.entry(*c2).or_insert_with(Rat::zero);
                        *e = &*e + &(&k * z);
                    }
                    bv.retain(|_, r| !r.is_zero());
                    *bl = bl.add_scaled(&lf, &Coeff::from_rat(k));
                }
            }
            basis.push((col, v, lf));
        }
    }
    basis.into_iter().map(|(_, _, l)| l).collect()
}
