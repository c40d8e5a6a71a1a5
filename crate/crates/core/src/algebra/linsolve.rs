//! Linear solving. [`LinearSystem`] runs fraction-free (Bareiss) elimination
//! over the coefficient ring; [`SparseQ`] is plain sparse Gaussian elimination
//! over Q used for the large ansatz systems.

use std::collections::BTreeMap;

use super::{Coeff, Mono, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("inconsistent linear system")]
    Inconsistent,
    #[error("elimination needs a division that is not exact in the coefficient ring")]
    InexactDivision,
    #[error("back-substitution check failed")]
    VerifyFailed,
}

/// `Σ_j a[i][j] x_j = b[i]` with labelled unknowns.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: Vec<Vec<Coeff>>,
    pub b: Vec<Coeff>,
    pub labels: Vec<String>,
}

/// `x_j = (num_j + Σ_f dep_j[f] x_f) / den` with `free` listing the free unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub den: Coeff,
    pub num: Vec<Coeff>,
    pub dep: Vec<BTreeMap<usize, Coeff>>,
    pub free: Vec<usize>,
}

impl Solution {
    pub fn is_unique(&self) -> bool {
        self.free.is_empty()
    }

    /// Value of unknown j as a (numerator, denominator) pair when it does not depend on free unknowns.
    pub fn value(&self, j: usize) -> Option<(Coeff, Coeff)> {
        self.dep[j].is_empty().then(|| (self.num[j].clone(), self.den.clone()))
    }
}

/// Exact division in `Q[μ0^{±1}, μ1..μ4]` (ι, ρ absent); `None` if not exact.
pub fn exact_div(n: &Coeff, d: &Coeff) -> Option<Coeff> {
    if d.is_zero() {
        return None;
    }
    if n.is_zero() {
        return Some(Coeff::zero());
    }
    if let Some(di) = d.inv() {
        return Some(n * &di);
    }
    if n.terms().iter().chain(d.terms()).any(|(m, _)| m.iota != 0 || m.rho != 0) {
        return None;
    }
    // lex order on (μ4, μ3, μ2, μ1, μ0) is a group order on Laurent monomials
    let key = |m: &Mono| [m.mu[4], m.mu[3], m.mu[2], m.mu[1], m.mu[0]];
    let lead = |c: &Coeff| c.terms().iter().max_by_key(|(m, _)| key(m)).cloned().unwrap();
    let (dm, dc) = lead(d);
    let mut rem = n.clone();
    let mut q = Coeff::zero();
    let budget = 64 * (n.len() + 1) * (d.len() + 1);
    for _ in 0..budget {
        if rem.is_zero() {
            return Some(q);
        }
        let (rm, rc) = lead(&rem);
        let mut qm = Mono::ONE;
        for k in 0..5 {
            qm.mu[k] = rm.mu[k] - dm.mu[k];
        }
        if qm.mu[1..].iter().any(|&e| e < 0) {
            return None;
        }
        let t = Coeff::term(qm, &rc / &dc);
        rem = &rem - &(&t * d);
        q = &q + &t;
    }
    None
}

impl LinearSystem {
    pub fn new(a: Vec<Vec<Coeff>>, b: Vec<Coeff>) -> LinearSystem {
        let n = a.first().map_or(0, |r| r.len());
        LinearSystem { labels: (0..n).map(|j| format!("x{j}")).collect(), a, b }
    }

    /// Bareiss elimination on the augmented matrix, then exact back-substitution check.
    pub fn solve(&self) -> Result<Solution, SolveError> {
        let rows = self.a.len();
        let cols = self.labels.len();
        let mut m: Vec<Vec<Coeff>> = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(r, b)| {
                let mut r = r.clone();
                r.push(b.clone());
                r
            })
            .collect();
        let mut prev = Coeff::one();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
            m.swap(r, p);
            for i in 0..rows {
                if i == r {
                    continue;
                }
                for j in 0..=cols {
                    if j == c {
                        continue;
                    }
                    let v = &(&m[r][c] * &m[i][j]) - &(&m[i][c] * &m[r][j]);
                    // rows above the pivot were scaled by the same sequence of pivots
                    m[i][j] = exact_div(&v, &prev).ok_or(SolveError::InexactDivision)?;
                }
                m[i][c] = Coeff::zero();
            }
            prev = m[r][c].clone();
            pivots.push((r, c));
            r += 1;
        }
        for row in m.iter().skip(r) {
            if !row[cols].is_zero() {
                return Err(SolveError::Inconsistent);
            }
        }
        // after full Bareiss every pivot equals the last one (the determinant of the pivot block)
        let den = prev.clone();
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
        let mut num = vec![Coeff::zero(); cols];
        let mut dep = vec![BTreeMap::new(); cols];
        for &(pr, pc) in &pivots {
            let scale = exact_div(&den, &m[pr][pc]).ok_or(SolveError::InexactDivision)?;
            num[pc] = &m[pr][cols] * &scale;
            for &f in &free {
                if !m[pr][f].is_zero() {
                    dep[pc].insert(f, -(&m[pr][f] * &scale));
                }
            }
        }
        for &f in &free {
            dep[f].insert(f, den.clone());
        }
        let sol = Solution { den, num, dep, free };
        self.verify(&sol)?;
        Ok(sol)
    }

    /// Checks `A x = b` identically in the free unknowns.
    pub fn verify(&self, s: &Solution) -> Result<(), SolveError> {
        for (row, b) in self.a.iter().zip(&self.b) {
            let mut acc = -(b * &s.den);
            for (j, a) in row.iter().enumerate() {
                acc = &acc + &(a * &s.num[j]);
            }
            if !acc.is_zero() {
                return Err(SolveError::VerifyFailed);
            }
            for &f in &s.free {
                let mut acc = Coeff::zero();
                for (j, a) in row.iter().enumerate() {
                    if let Some(d) = s.dep[j].get(&f) {
                        acc = &acc + &(a * d);
                    }
                }
                if !acc.is_zero() {
                    return Err(SolveError::VerifyFailed);
                }
            }
        }
        Ok(())
    }
}

/// Sparse row-echelon solver over Q. Rows are added incrementally and kept
/// fully reduced, so the rank and the pivot expressions are available at any time.
#[derive(Clone, Debug, Default)]
pub struct SparseQ {
    ncols: usize,
    /// pivot column -> reduced row (pivot coefficient 1), last column index `ncols` is the rhs
    rows: BTreeMap<usize, BTreeMap<usize, Rat>>,
    inconsistent: bool,
}

impl SparseQ {
    pub fn new(ncols: usize) -> SparseQ {
        SparseQ { ncols, ..Default::default() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_inconsistent(&self) -> bool {
        self.inconsistent
    }

    fn reduce(&self, mut row: BTreeMap<usize, Rat>) -> BTreeMap<usize, Rat> {
        loop {
            let hit = row.iter().find(|(c, _)| **c < self.ncols && self.rows.contains_key(c)).map(|(c, v)| (*c, v.clone()));
            let Some((c, v)) = hit else { return row };
            for (k, pv) in &self.rows[&c] {
                let e = row.entry(*k).or_insert_with(Rat::zero);
                *e = &*e - &(&v * pv);
                if e.is_zero() {
                    row.remove(k);
                }
            }
        }
    }

    /// Adds `Σ coeffs = rhs`; returns false if it made the system inconsistent.
    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, Rat)>, rhs: Rat) -> bool {
        let mut row: BTreeMap<usize, Rat> = BTreeMap::new();
        for (c, v) in coeffs {
            if v.is_zero() {
                continue;
            }
            let e = row.entry(c).or_insert_with(Rat::zero);
            *e = &*e + &v;
            if e.is_zero() {
                row.remove(&c);
            }
        }
        if !rhs.is_zero() {
            row.insert(self.ncols, rhs);
        }
        let row = self.reduce(row);
        // pick the largest column as pivot so small-index unknowns stay free
        let Some(p) = row.keys().filter(|c| **c < self.ncols).max().copied() else {
            if row.contains_key(&self.ncols) {
                self.inconsistent = true;
                return false;
            }
            return true;
        };
        let inv = row[&p].recip();
        let row: BTreeMap<usize, Rat> = row.into_iter().map(|(c, v)| (c, &v * &inv)).collect();
        for other in self.rows.values_mut() {
            if let Some(f) = other.get(&p).cloned() {
                for (k, v) in &row {
                    let e = other.entry(*k).or_insert_with(Rat::zero);
                    *e = &*e - &(&f * v);
                    if e.is_zero() {
                        other.remove(k);
                    }
                }
            }
        }
        self.rows.insert(p, row);
        true
    }

    /// Unknowns not fixed by the rows so far.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|c| !self.rows.contains_key(c)).collect()
    }

    /// Pivot unknown `c` as `rhs - Σ_{free f} a_f x_f`; `None` if `c` is free.
    pub fn expression(&self, c: usize) -> Option<(Rat, Vec<(usize, Rat)>)> {
        let row = self.rows.get(&c)?;
        let rhs = row.get(&self.ncols).cloned().unwrap_or_else(Rat::zero);
        let deps = row.iter().filter(|(k, _)| **k != c && **k < self.ncols).map(|(k, v)| (*k, v.clone())).collect();
        Some((rhs, deps))
    }

    /// Value of `c` when determined uniquely.
    pub fn value(&self, c: usize) -> Option<Rat> {
        let (rhs, deps) = self.expression(c)?;
        deps.is_empty().then_some(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = vec![vec![Coeff::one(), Coeff::zero()], vec![Coeff::zero(), Coeff::one()]];
        let b = vec![Coeff::mu(1), Coeff::int(3)];
        let s = LinearSystem::new(a, b.clone()).solve().unwrap();
        assert!(s.is_unique());
        assert_eq!(s.num[0], &b[0] * &s.den);
        assert_eq!(s.num[1], &b[1] * &s.den);
    }

    #[test]
    fn cramer_two_by_two() {
        // [[μ1, 1], [μ2, μ4]] x = [μ3, 2]
        let (a11, a12, a21, a22) = (Coeff::mu(1), Coeff::one(), Coeff::mu(2), Coeff::mu(4));
        let (b1, b2) = (Coeff::mu(3), Coeff::int(2));
        let sys = LinearSystem::new(vec![vec![a11.clone(), a12.clone()], vec![a21.clone(), a22.clone()]], vec![b1.clone(), b2.clone()]);
        let s = sys.solve().unwrap();
        let det = &(&a11 * &a22) - &(&a12 * &a21);
        let d1 = &(&b1 * &a22) - &(&a12 * &b2);
        let d2 = &(&a11 * &b2) - &(&b1 * &a21);
        // x_j = num_j/den must equal d_j/det
        assert_eq!(&s.num[0] * &det, &d1 * &s.den);
        assert_eq!(&s.num[1] * &det, &d2 * &s.den);
    }

    #[test]
    fn inconsistent_detected() {
        let a = vec![vec![Coeff::one()], vec![Coeff::int(2)]];
        let b = vec![Coeff::one(), Coeff::one()];
        assert_eq!(LinearSystem::new(a, b).solve(), Err(SolveError::Inconsistent));
    }

    #[test]
    fn underdetermined_reports_free() {
        let a = vec![vec![Coeff::one(), Coeff::mu(0)]];
        let s = LinearSystem::new(a, vec![Coeff::int(1)]).solve().unwrap();
        assert_eq!(s.free, vec![1]);
    }

    #[test]
    fn exact_division_of_products() {
        let a = &Coeff::mu(1) + &Coeff::mu(2).scale(&Rat::new(3, 2));
        let b = &(&Coeff::mu(4) * &Coeff::mu(4)) - &Coeff::mu(0).inv().unwrap();
        assert_eq!(exact_div(&(&a * &b), &b), Some(a.clone()));
        assert_eq!(exact_div(&a, &b), None);
    }

    #[test]
    fn sparse_q_solves() {
        let mut s = SparseQ::new(3);
        assert!(s.add_row([(0, Rat::one()), (1, Rat::one())], Rat::from(3)));
        assert!(s.add_row([(1, Rat::one()), (2, Rat::from(-1))], Rat::from(1)));
        assert!(s.add_row([(2, Rat::one())], Rat::from(1)));
        assert_eq!(s.value(0), Some(Rat::from(1)));
        assert_eq!(s.value(1), Some(Rat::from(2)));
        assert!(!s.add_row([(0, Rat::one())], Rat::from(5)));
    }
}
