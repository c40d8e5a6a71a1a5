//! Exact solving of overdetermined rational systems by elimination modulo
//! word-size primes, Chinese remaindering and rational reconstruction.
//! Every returned solution is checked against all rows in exact arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModularError {
    #[error("system is inconsistent")]
    Inconsistent,
    #[error("no certified solution after {0} primes")]
    NoConvergence(usize),
}

/// Sparse rational system `A x = b` with several right-hand sides.
#[derive(Clone, Debug, Default)]
pub struct RatSystem {
    pub ncols: usize,
    pub nrhs: usize,
    rows: Vec<(Vec<(usize, BigInt)>, Vec<BigInt>)>,
}

/// Solution of a [`RatSystem`]: free columns are set to zero in every
/// particular solution; `kernel[f]` has a one in column `free[f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatSolution {
    pub free: Vec<usize>,
    pub particular: Vec<Vec<Rat>>,
    pub kernel: Vec<Vec<Rat>>,
    pub primes_used: usize,
}

impl RatSystem {
    pub fn new(ncols: usize, nrhs: usize) -> RatSystem {
        RatSystem { ncols, nrhs, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds one row; the row is scaled to integers, which leaves its solution set unchanged.
    pub fn push(&mut self, coeffs: &[(usize, Rat)], rhs: &[Rat]) {
        assert_eq!(rhs.len(), self.nrhs);
        let mut den = BigInt::one();
        for r in coeffs.iter().map(|(_, r)| r).chain(rhs.iter()) {
            if !r.is_zero() {
                den = den.lcm(&r.denom());
            }
        }
        let scale = |r: &Rat| -> BigInt { r.numer() * (&den / r.denom()) };
        let a: Vec<(usize, BigInt)> = coeffs.iter().filter(|(_, r)| !r.is_zero()).map(|(c, r)| (*c, scale(r))).collect();
        if a.is_empty() && rhs.iter().all(|r| r.is_zero()) {
            return;
        }
        let b = rhs.iter().map(scale).collect();
        self.rows.push((a, b));
    }

    pub fn solve(&self) -> Result<RatSolution, ModularError> {
        let mut primes = PrimeIter::new();
        let mut used = 0usize;
        let mut inconsistent_votes = 0;
        for _attempt in 0..4 {
            // rank profile from one prime; an unlucky prime shows up as a failed exact check
            let profile = loop {
                let p = primes.next().unwrap();
                let prof = self.profile(p);
                if !prof.inconsistent {
                    break prof;
                }
                inconsistent_votes += 1;
                if inconsistent_votes >= 2 {
                    return Err(ModularError::Inconsistent);
                }
            };
            let free: Vec<usize> = (0..self.ncols).filter(|c| profile.pivot_cols.binary_search(c).is_err()).collect();
            let ncolsol = self.nrhs + free.len();
            let mut modulus = BigInt::one();
            let mut residues: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); profile.pivot_cols.len()]; ncolsol];
            let mut last: Option<Vec<Vec<Rat>>> = None;
            let mut failed_checks = 0;
            while failed_checks < 3 && used < 4000 {
                let p = primes.next().unwrap();
                let Some(sol) = self.square_solve(&profile, &free, p) else { continue };
                used += 1;
                for (col, xs) in sol.iter().enumerate() {
                    for (k, x) in xs.iter().enumerate() {
                        residues[col][k] = crt(&residues[col][k], &modulus, *x, p);
                    }
                }
                modulus *= BigInt::from(p);
                let Some(rec) = reconstruct_all(&residues, &modulus) else { continue };
                if last.as_ref() == Some(&rec) {
                    let (particular, kernel) = self.expand(&profile, &free, &rec);
                    if self.verify(&particular, &kernel) {
                        return Ok(RatSolution { free, particular, kernel, primes_used: used });
                    }
                    failed_checks += 1;
                }
                last = Some(rec);
            }
        }
        Err(ModularError::NoConvergence(used))
    }

    /// Rank profile modulo p: pivot columns (largest nonzero column of each
    /// reduced row) and the rows that produced them.
    fn profile(&self, p: u64) -> Profile {
        let n = self.ncols + self.nrhs;
        let mut pivots: Vec<(usize, Vec<u64>)> = Vec::new();
        let mut pivot_of: Vec<Option<usize>> = vec![None; self.ncols];
        let mut rows = Vec::new();
        let mut inconsistent = false;
        for (ri, (a, b)) in self.rows.iter().enumerate() {
            let mut v = vec![0u64; n];
            for (c, x) in a {
                v[*c] = reduce(x, p);
            }
            for (k, x) in b.iter().enumerate() {
                v[self.ncols + k] = reduce(x, p);
            }
            // eliminate from the highest column down so every pivot hit is final
            for c in (0..self.ncols).rev() {
                if v[c] == 0 {
                    continue;
                }
                if let Some(pi) = pivot_of[c] {
                    let f = p - v[c];
                    let prow = &pivots[pi].1;
                    for (x, y) in v.iter_mut().zip(prow.iter()) {
                        if *y != 0 {
                            *x = (*x + f * y) % p;
                        }
                    }
                }
            }
            match (0..self.ncols).rev().find(|&c| v[c] != 0) {
                Some(c) => {
                    let inv = inv_mod(v[c], p);
                    for x in v.iter_mut() {
                        *x = *x * inv % p;
                    }
                    pivot_of[c] = Some(pivots.len());
                    pivots.push((c, v));
                    rows.push(ri);
                }
                None => {
                    if v[self.ncols..].iter().any(|&x| x != 0) {
                        inconsistent = true;
                    }
                }
            }
        }
        let mut pairs: Vec<(usize, usize)> = pivots.iter().map(|(c, _)| *c).zip(rows.iter().copied()).collect();
        pairs.sort();
        Profile {
            pivot_cols: pairs.iter().map(|x| x.0).collect(),
            rows: pairs.iter().map(|x| x.1).collect(),
            inconsistent,
        }
    }

    /// Solves the square subsystem on the profile rows and pivot columns mod p.
    /// Returns one vector of pivot values per solution column (rhs, then kernel).
    fn square_solve(&self, prof: &Profile, free: &[usize], p: u64) -> Option<Vec<Vec<u64>>> {
        let r = prof.pivot_cols.len();
        let ncs = self.nrhs + free.len();
        let mut colpos = vec![usize::MAX; self.ncols];
        for (k, c) in prof.pivot_cols.iter().enumerate() {
            colpos[*c] = k;
        }
        let mut freepos = vec![usize::MAX; self.ncols];
        for (k, c) in free.iter().enumerate() {
            freepos[*c] = k;
        }
        let w = r + ncs;
        let mut m = vec![0u64; r * w];
        for (i, &ri) in prof.rows.iter().enumerate() {
            let (a, b) = &self.rows[ri];
            let row = &mut m[i * w..(i + 1) * w];
            for (c, x) in a {
                let v = reduce(x, p);
                if colpos[*c] != usize::MAX {
                    row[colpos[*c]] = v;
                } else {
                    // kernel column: A_piv v = -A_f
                    row[r + self.nrhs + freepos[*c]] = (p - v) % p;
                }
            }
            for (k, x) in b.iter().enumerate() {
                row[r + k] = reduce(x, p);
            }
        }
        // Gauss-Jordan
        for col in 0..r {
            let piv = (col..r).find(|&i| m[i * w + col] != 0)?;
            if piv != col {
                for j in 0..w {
                    m.swap(piv * w + j, col * w + j);
                }
            }
            let inv = inv_mod(m[col * w + col], p);
            for j in col..w {
                m[col * w + j] = m[col * w + j] * inv % p;
            }
            let prow: Vec<u64> = m[col * w..(col + 1) * w].to_vec();
            for i in 0..r {
                if i == col {
                    continue;
                }
                let f = m[i * w + col];
                if f == 0 {
                    continue;
                }
                let f = p - f;
                let row = &mut m[i * w..(i + 1) * w];
                for j in col..w {
                    if prow[j] != 0 {
                        row[j] = (row[j] + f * prow[j]) % p;
                    }
                }
            }
        }
        let mut out = vec![vec![0u64; r]; ncs];
        for (k, o) in out.iter_mut().enumerate() {
            for (i, x) in o.iter_mut().enumerate() {
                *x = m[i * w + r + k];
            }
        }
        Some(out)
    }

    fn expand(&self, prof: &Profile, free: &[usize], rec: &[Vec<Rat>]) -> (Vec<Vec<Rat>>, Vec<Vec<Rat>>) {
        let mut sols = Vec::with_capacity(rec.len());
        for (k, vals) in rec.iter().enumerate() {
            let mut x = vec![Rat::zero(); self.ncols];
            for (i, c) in prof.pivot_cols.iter().enumerate() {
                x[*c] = vals[i].clone();
            }
            if k >= self.nrhs {
                x[free[k - self.nrhs]] = Rat::one();
            }
            sols.push(x);
        }
        let kernel = sols.split_off(self.nrhs);
        (sols, kernel)
    }

    /// Exact check of every row for every particular solution and kernel vector.
    fn verify(&self, particular: &[Vec<Rat>], kernel: &[Vec<Rat>]) -> bool {
        let to_int = |x: &[Rat]| -> (Vec<BigInt>, BigInt) {
            let mut d = BigInt::one();
            for r in x {
                if !r.is_zero() {
                    d = d.lcm(&r.denom());
                }
            }
            (x.iter().map(|r| r.numer() * (&d / r.denom())).collect(), d)
        };
        for (k, x) in particular.iter().enumerate() {
            let (xi, d) = to_int(x);
            for (a, b) in &self.rows {
                let mut s = BigInt::zero();
                for (c, v) in a {
                    if !xi[*c].is_zero() {
                        s += v * &xi[*c];
                    }
                }
                if s != &b[k] * &d {
                    return false;
                }
            }
        }
        for x in kernel {
            let (xi, _) = to_int(x);
            for (a, _) in &self.rows {
                let mut s = BigInt::zero();
                for (c, v) in a {
                    if !xi[*c].is_zero() {
                        s += v * &xi[*c];
                    }
                }
                if !s.is_zero() {
                    return false;
                }
            }
        }
        true
    }
}

struct Profile {
    pivot_cols: Vec<usize>,
    rows: Vec<usize>,
    inconsistent: bool,
}

fn reduce(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().unwrap()
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % p as u128) as u64;
        }
        b = ((b as u128 * b as u128) % p as u128) as u64;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below 2^31 in descending order, so products of two residues fit in u64.
struct PrimeIter {
    next: u64,
}

impl PrimeIter {
    fn new() -> PrimeIter {
        PrimeIter { next: (1u64 << 31) - 1 }
    }
}

impl Iterator for PrimeIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        while self.next > 3 {
            let c = self.next;
            self.next -= 2;
            if is_prime(c) {
                return Some(c);
            }
        }
        None
    }
}

fn crt(r: &BigInt, m: &BigInt, x: u64, p: u64) -> BigInt {
    // r + m * ((x - r) * m^{-1} mod p)
    let rm = reduce(r, p);
    let mm = reduce(m, p);
    let diff = (x + p - rm) % p;
    let t = diff * inv_mod(mm, p) % p;
    r + m * BigInt::from(t)
}

/// Rational reconstruction of every residue, or `None` if any fails.
fn reconstruct_all(res: &[Vec<BigInt>], m: &BigInt) -> Option<Vec<Vec<Rat>>> {
    let bound = (m / 2u32).sqrt();
    res.iter().map(|col| col.iter().map(|r| reconstruct(r, m, &bound)).collect()).collect()
}

/// Finds `n/d ≡ r (mod m)` with `|n|, d ≤ bound`.
fn reconstruct(r: &BigInt, m: &BigInt, bound: &BigInt) -> Option<Rat> {
    let (mut r0, mut r1) = (m.clone(), r.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let t2 = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || &t1.abs() > bound {
        return None;
    }
    Some(Rat::from_bigints(r1, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn overdetermined_with_kernel() {
        // x0 + x1 = 1/2, 2x0 + 2x1 = 1, x2 = 7/3 ; x0 stays free
        let mut s = RatSystem::new(3, 1);
        s.push(&[(0, q(1, 1)), (1, q(1, 1))], &[q(1, 2)]);
        s.push(&[(0, q(2, 1)), (1, q(2, 1))], &[q(1, 1)]);
        s.push(&[(2, q(1, 1))], &[q(7, 3)]);
        let sol = s.solve().unwrap();
        assert_eq!(sol.free, vec![0]);
        assert_eq!(sol.particular[0], vec![q(0, 1), q(1, 2), q(7, 3)]);
        assert_eq!(sol.kernel[0], vec![q(1, 1), q(-1, 1), q(0, 1)]);
    }

    #[test]
    fn inconsistent_detected() {
        let mut s = RatSystem::new(1, 1);
        s.push(&[(0, q(1, 1))], &[q(1, 1)]);
        s.push(&[(0, q(1, 1))], &[q(2, 1)]);
        assert_eq!(s.solve(), Err(ModularError::Inconsistent));
    }

    #[test]
    fn large_rationals_reconstructed() {
        let big = Rat::from_bigints(BigInt::from(10).pow(40) + 7, BigInt::from(3).pow(50));
        let mut s = RatSystem::new(2, 1);
        s.push(&[(0, q(1, 1)), (1, q(1, 1))], &[big.clone()]);
        s.push(&[(0, q(1, 1)), (1, q(-1, 1))], &[q(0, 1)]);
        let sol = s.solve().unwrap();
        let half = &big * &q(1, 2);
        assert_eq!(sol.particular[0], vec![half.clone(), half]);
    }
}
