use num_complex::Complex64;
use proptest::prelude::*;
use tetragonal::benney_sc::*;
use tetragonal::Rat;

fn r(n: i64) -> Rat {
    Rat::from(n)
}

/// `(1/(n+1)) [p^{-1}] λ(p)^{n+1}` with `λ = p + Σ A_k p^{-k-1}`, by brute-force
/// multiplication of Laurent polynomials keyed by the power of p.
fn lagrange_density(n: usize) -> APoly {
    use std::collections::BTreeMap;
    let mut lam: BTreeMap<i64, APoly> = BTreeMap::new();
    lam.insert(1, APoly::constant(r(1)));
    for k in 0..=n {
        lam.insert(-(k as i64) - 1, APoly::var(k));
    }
    let mut pow: BTreeMap<i64, APoly> = BTreeMap::new();
    pow.insert(0, APoly::constant(r(1)));
    for _ in 0..=n {
        let mut next: BTreeMap<i64, APoly> = BTreeMap::new();
        for (e, c) in &pow {
            for (f, d) in &lam {
                // powers below -(n+1) cannot come back up to -1
                if e + f < -(n as i64) - 2 {
                    continue;
                }
                let slot = next.entry(e + f).or_insert_with(APoly::zero);
                *slot = slot.add(&c.mul(d));
            }
        }
        pow = next;
    }
    pow.get(&-1).cloned().unwrap_or_else(APoly::zero).scale(&Rat::new(1, n as i64 + 1))
}

#[test]
fn first_densities() {
    let h = conserved_densities(3);
    assert_eq!(h[0], APoly::var(0));
    assert_eq!(h[1], APoly::var(1));
    let h2 = APoly::var(2).add(&APoly::var(0).mul(&APoly::var(0)));
    assert_eq!(h[2], h2);
    let h3 = APoly::var(3).add(&APoly::var(0).mul(&APoly::var(1)).scale(&r(3)));
    assert_eq!(h[3], h3, "{}", h[3]);
}

#[test]
fn densities_match_the_lagrange_inversion_formula() {
    let h = conserved_densities(7);
    for (n, hn) in h.iter().enumerate() {
        assert_eq!(*hn, lagrange_density(n), "H{n}");
        assert_eq!(hn.weight(), Some(n as u32 + 2), "H{n} is isobaric");
    }
}

#[test]
fn densities_revert_the_moment_series() {
    let n = 6;
    let h = conserved_densities(n);
    let res = reversion_residual(n + 1, &h);
    for (k, c) in res.iter().enumerate() {
        assert!(c.is_zero(), "order {k}: {c}");
    }
    // dropping the last density shows up at its own order
    let res = reversion_residual(n + 1, &h[..n]);
    assert!(!res[n + 2].is_zero());
}

fn desk() -> SlitConfig {
    fix_residue(&SlitConfig::desk(), 5).unwrap()
}

#[test]
fn fixing_the_residue_keeps_the_ordering() {
    let cfg = desk();
    assert!(cfg.residue().abs() < 1e-12);
    cfg.check_tetragonal_order().unwrap();
    assert!((cfg.ends[5] - 6.15).abs() < 1e-12, "{}", cfg.ends[5]);
    cfg.check_exponents().unwrap();
    // a last end pushed past p̂8 is rejected
    let mut bad = SlitConfig::desk();
    bad.vertices[7].p = 5.0;
    assert!(matches!(fix_residue(&bad, 5), Err(ScError::Ordering(_))));
}

#[test]
fn contour_residue_is_an_independent_check() {
    let cfg = desk();
    assert!(residue_by_contour(&cfg, 50.0, 4096).abs() < 1e-10);
    let raw = SlitConfig::desk();
    let c = residue_by_contour(&raw, 50.0, 4096);
    assert!((c - raw.residue()).abs() < 1e-9, "{c} vs {}", raw.residue());
    assert!(matches!(sc_map(&raw, Complex64::new(0.0, 1.0), DEFAULT_TOL), Err(ScError::Residue(_))));
}

fn elementary(p1: f64, p2: f64) -> SlitConfig {
    SlitConfig { vertices: vec![Vertex::new(p1, 1, 2), Vertex::new(p2, 1, 2)], ends: vec![0.5 * (p1 + p2)] }
}

/// `λ = v̂ + √((p − p̂1)(p − p̂2))` with both roots on the upper-half-plane branch.
fn elementary_closed_form(p1: f64, p2: f64, p: Complex64) -> Complex64 {
    let half = |z: Complex64| {
        let mut a = z.im.atan2(z.re);
        if a < 0.0 {
            a = std::f64::consts::PI;
        }
        Complex64::from_polar(z.norm().sqrt(), a / 2.0)
    };
    0.5 * (p1 + p2) + half(p - p1) * half(p - p2)
}

#[test]
fn elementary_map_matches_its_closed_form() {
    let (p1, p2) = (-1.3, 2.1);
    let cfg = elementary(p1, p2);
    let pts = [
        Complex64::new(0.3, 0.7),
        Complex64::new(-4.0, 0.2),
        Complex64::new(5.0, 3.0),
        Complex64::new(-2.0, 0.0),
        Complex64::new(p1, 0.0),
        Complex64::new(0.4, 0.0),
        Complex64::new(p2, 0.0),
        Complex64::new(3.5, 0.0),
    ];
    for p in pts {
        let q = sc_map(&cfg, p, DEFAULT_TOL).unwrap();
        let want = elementary_closed_form(p1, p2, p);
        assert!((q.value - want).norm() < 1e-9, "{p}: {} vs {want} ({})", q.value, q.path);
        assert!(q.error <= DEFAULT_TOL);
    }
    // the slit: both vertices land on the same base point, the end at its tip
    let base1 = sc_map(&cfg, Complex64::new(p1, 0.0), DEFAULT_TOL).unwrap().value;
    let base2 = sc_map(&cfg, Complex64::new(p2, 0.0), DEFAULT_TOL).unwrap().value;
    assert!((base1 - base2).norm() < 1e-9);
    let tip = sc_map(&cfg, Complex64::new(0.4, 0.0), DEFAULT_TOL).unwrap().value;
    assert!((tip.re - base1.re).abs() < 1e-9 && tip.im > 1.0);
}

#[test]
fn tetragonal_slits_point_along_multiples_of_a_quarter_turn() {
    let cfg = desk();
    let g = slit_geometry(&cfg, DEFAULT_TOL).unwrap();
    assert!(g.max_angle_defect < 1e-6, "{:?}", g.directions);
    assert_eq!(g.turn_defects.len(), 6);
    for (i, d) in g.turn_defects.iter().enumerate() {
        assert!(*d < 1e-6, "end {i}: {d}");
    }
    assert!(g.max_error <= DEFAULT_TOL);
}

#[test]
fn map_is_asymptotic_to_the_identity() {
    let cfg = desk();
    for p in [Complex64::new(1e6, 0.0), Complex64::new(0.0, 1e6), Complex64::new(-7e5, 7e5)] {
        let q = sc_map(&cfg, p, DEFAULT_TOL).unwrap();
        assert!((q.value - p).norm() < 1e-4, "{p}: {}", q.value - p);
    }
}

#[test]
fn paths_agree_on_and_off_the_axis() {
    // the real-axis path and the path from above meet at the same value
    let cfg = desk();
    for x in [-6.6, -3.3, 0.1, 3.0, 5.9] {
        let on = sc_map(&cfg, Complex64::new(x, 0.0), DEFAULT_TOL).unwrap().value;
        let near = sc_map(&cfg, Complex64::new(x, 1e-7), DEFAULT_TOL).unwrap().value;
        assert!((on - near).norm() < 1e-5, "{x}: {on} vs {near}");
    }
}

#[test]
fn sampler_is_ordered_and_tabular() {
    let cfg = desk();
    let pts: Vec<Complex64> = (0..6).map(|i| Complex64::new(-3.0 + i as f64, 0.5)).collect();
    let res = sc_sample(&cfg, &pts, DEFAULT_TOL);
    for (p, r) in pts.iter().zip(&res) {
        assert_eq!(r.as_ref().unwrap().value, sc_map(&cfg, *p, DEFAULT_TOL).unwrap().value);
    }
    let text = sample_text(&pts, &res);
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.split('\t').count() == 5));
}

#[test]
fn lower_half_plane_is_rejected() {
    assert!(matches!(sc_map(&desk(), Complex64::new(0.0, -1.0), DEFAULT_TOL), Err(ScError::LowerHalfPlane(_))));
}

fn collapsed_inputs() -> ([f64; 6], [f64; 4]) {
    let p = [-7.3, -5.1, -2.9, -1.2, 0.8, 5.0];
    let mut v = [-6.0, -4.2, -2.1, 1.9];
    // v̂4 carries the residue condition for the collapsed configuration
    let cfg = collapse_second_triple(p, v);
    v[3] += cfg.residue();
    (p, v)
}

#[test]
fn collapsed_configuration_has_the_canonical_moments() {
    let (p, v) = collapsed_inputs();
    let cfg = collapse_second_triple(p, v);
    cfg.check_exponents().unwrap();
    assert!(cfg.residue().abs() < 1e-12);
    let m = canonical_map(p, v);
    assert!(m.residue_defect().abs() < 1e-12, "A1 - 3/4 mu1/mu0 = {}", m.residue_defect());
    // an unfixed end breaks both at once, with opposite signs
    let w = [v[0], v[1], v[2], v[3] + 0.25];
    let off = canonical_map(p, w);
    assert!((off.residue_defect() + collapse_second_triple(p, w).residue()).abs() < 1e-12);
}

#[test]
fn collapsed_configuration_maps_with_the_three_quarter_vertex() {
    let (p, v) = collapsed_inputs();
    let cfg = collapse_second_triple(p, v);
    let q = sc_map(&cfg, Complex64::new(p[5], 0.0), DEFAULT_TOL).unwrap();
    assert!(q.error <= DEFAULT_TOL);
    let far = sc_map(&cfg, Complex64::new(1e6, 0.0), DEFAULT_TOL).unwrap();
    assert!((far.value.re - 1e6).abs() < 1e-4);
}

#[test]
fn canonical_constants_follow_the_branch_of_k() {
    let (p, v) = collapsed_inputs();
    let m = canonical_map(p, v);
    assert!(m.mu[0] < 0.0, "every p̂_i sits left of p̂8");
    let prod_inv: f64 = m.t.iter().map(|t| 1.0 / t).product();
    assert!((m.k.powi(4) + prod_inv).norm() < 1e-12 * prod_inv.abs().max(1.0));
    // the pole condition of λ at u0 gives K = 4 μ0^{3/4}
    let want = 4.0 * Complex64::new(m.mu[0], 0.0).powf(0.75);
    assert!((m.big_k - want).norm() < 1e-10 * want.norm(), "{} vs {want}", m.big_k);
}

/// Exact `A1 − (3/4) μ1/μ0` for rational data, computed with symmetric functions
/// rather than polynomial expansion.
fn exact_defect(p: [i64; 6], v: [i64; 4]) -> Rat {
    let p8 = Rat::from(p[5]);
    let inv_t: Vec<Rat> = p[..5].iter().map(|&x| &p8 - &Rat::from(x)).collect();
    // μ1/μ0 = −Σ 1/T_i, A1 = −Σ (p̂8 − v̂_i)
    let mu_ratio = -inv_t.iter().fold(Rat::zero(), |s, x| s + x);
    let a1 = -v.iter().fold(Rat::zero(), |s, &x| s + (&p8 - &Rat::from(x)));
    a1 - Rat::new(3, 4) * mu_ratio
}

#[test]
fn canonical_moments_agree_with_exact_rationals() {
    let p = [-7, -5, -3, -1, 1, 5];
    let v = [-6, -4, -2, 2];
    let exact = exact_defect(p, v).to_f64();
    let m = canonical_map(p.map(|x| x as f64), v.map(|x| x as f64));
    assert!((m.residue_defect() - exact).abs() < 1e-12, "{} vs {exact}", m.residue_defect());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contour_and_closed_form_residues_agree(shift in -2.0f64..2.0, stretch in 0.5f64..1.5) {
        let mut cfg = SlitConfig::desk();
        for v in &mut cfg.vertices { v.p = v.p * stretch + shift; }
        for e in &mut cfg.ends { *e = *e * stretch + shift; }
        let c = residue_by_contour(&cfg, 60.0, 4096);
        prop_assert!((c - cfg.residue()).abs() < 1e-9);
    }

    #[test]
    fn affine_configurations_map_affinely(shift in -2.0f64..2.0, x in -8.0f64..8.0, y in 0.05f64..3.0) {
        // translating every marked point translates λ
        let cfg = desk();
        let mut moved = cfg.clone();
        for v in &mut moved.vertices { v.p += shift; }
        for e in &mut moved.ends { *e += shift; }
        let p = Complex64::new(x, y);
        let a = sc_map(&cfg, p, DEFAULT_TOL).unwrap().value;
        let b = sc_map(&moved, p + shift, DEFAULT_TOL).unwrap().value;
        prop_assert!((b - a - shift).norm() < 1e-8);
    }
}
