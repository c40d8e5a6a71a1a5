#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use tetragonal::algebra::{GradedPoly, Rat, U_WEIGHTS};
use tetragonal::sigma::sw_partition;
use tetragonal::strata::{derive_stratum, RelationSet, DEFAULT_XI_ORDER};
use tetragonal::Coeff;

fn cache_path() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("theta1_xi{}.txt", DEFAULT_XI_ORDER))
}

/// Θ^[1] at the default ξ-order, derived once and cached across test binaries.
pub fn theta1() -> &'static RelationSet {
    static SET: OnceLock<RelationSet> = OnceLock::new();
    SET.get_or_init(|| {
        let path = cache_path();
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(set) = RelationSet::from_text(&text) {
                return set;
            }
        }
        let (set, _) = derive_stratum(1, DEFAULT_XI_ORDER).expect("descent to level 1");
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, set.to_text()).expect("write cache");
        std::fs::rename(&tmp, &path).expect("publish cache");
        set
    })
}

/// σ expansion table to the given depth, cached like [`theta1`].
pub fn sigma_table(depth: i32) -> tetragonal::sigma::SigmaExpansion {
    use tetragonal::sigma::{BuildOptions, SigmaExpansion};
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("sigma_c{depth}.txt"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(t) = SigmaExpansion::from_text(&text) {
            if t.depth() == depth {
                return t;
            }
        }
    }
    let t = SigmaExpansion::build(depth, BuildOptions::default()).expect("σ expansion");
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, t.to_text()).expect("write cache");
    std::fs::rename(&tmp, &path).expect("publish cache");
    t
}

/// Jacobi–Trudi: `det[h_{λ_i - i + j}]` with `Σ h_k x^k = exp(Σ u_i x^{w_i})`.
pub fn jacobi_trudi() -> GradedPoly {
    let lambda = sw_partition();
    let n = lambda.len();
    let top = (lambda[0] as usize) + n;
    let mut h = vec![GradedPoly::constant(Coeff::one())];
    // k h_k = Σ_i w_i u_i h_{k - w_i}
    for k in 1..=top {
        let mut acc = GradedPoly::zero();
        for (i, &w) in U_WEIGHTS.iter().enumerate() {
            let w = w as usize;
            if w <= k {
                let t = &(&GradedPoly::u(i + 1) * &h[k - w]) * &scalar(Rat::from(w as i64));
                acc = &acc + &t;
            }
        }
        h.push(&acc * &scalar(Rat::new(1, k as i64)));
    }
    let entry = |i: usize, j: usize| -> GradedPoly {
        let idx = lambda[i] as i64 - i as i64 + j as i64;
        if idx < 0 {
            GradedPoly::zero()
        } else {
            h[idx as usize].clone()
        }
    };
    // Laplace expansion along the first row, recursively over column subsets
    fn det(rows: &[usize], cols: &[usize], entry: &dyn Fn(usize, usize) -> GradedPoly) -> GradedPoly {
        if rows.is_empty() {
            return GradedPoly::constant(Coeff::one());
        }
        let mut acc = GradedPoly::zero();
        for (k, &c) in cols.iter().enumerate() {
            let e = entry(rows[0], c);
            if e.is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = det(&rows[1..], &rest, entry);
            let t = &e * &minor;
            acc = if k % 2 == 0 { &acc + &t } else { &acc - &t };
        }
        acc
    }
    let idx: Vec<usize> = (0..n).collect();
    det(&idx, &idx, &entry)
}


fn scalar(r: Rat) -> GradedPoly {
    GradedPoly::constant(Coeff::from_rat(r))
}
