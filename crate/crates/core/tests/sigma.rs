mod common;

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use tetragonal::algebra::{GradedPoly, Rat, U_WEIGHTS};
use tetragonal::curve::CurveC45;
use tetragonal::sigma::{
    hook_product, odd_isobaric_monomials, schur_weierstrass, sw_partition, BuildOptions, SigmaBuilder, SigmaError, SigmaExpansion,
    UExp,
};
use tetragonal::strata::{SigmaExpr, SigmaQuotient, Sym};
use tetragonal::Coeff;

const DEPTH: i32 = 27;

fn table() -> &'static SigmaExpansion {
    static T: OnceLock<SigmaExpansion> = OnceLock::new();
    T.get_or_init(|| SigmaExpansion::build(DEPTH, BuildOptions::default()).unwrap())
}

fn sym(s: &str) -> Sym {
    Sym::parse(s).unwrap()
}

#[test]
fn sw_matches_jacobi_trudi_determinant() {
    let sw = schur_weierstrass();
    assert_eq!(sw, common::jacobi_trudi());
    assert_eq!(sw.len(), 32);
}

#[test]
fn sw_printed_coefficients() {
    let sw = schur_weierstrass();
    let mono = |e: [u16; 6]| {
        let mut x = [0u16; 8];
        x[..6].copy_from_slice(&e);
        sw.coeff(&x)
    };
    assert_eq!(mono([0, 0, 0, 0, 0, 15]), Coeff::frac(1, 8382528));
    assert_eq!(mono([0, 0, 0, 5, 0, 0]), Coeff::frac(1, 4));
    assert_eq!(hook_product(&sw_partition()), 8382528);
    assert_eq!(sw.negate_u(), -&sw);
}

#[test]
fn c15_reproduces_sw() {
    let mut b = SigmaBuilder::new(15, BuildOptions::default());
    let c = b.build_ck(15).unwrap();
    assert!(c.is_resolved());
    assert_eq!(c.poly, schur_weierstrass());
}

#[test]
fn one_point_constraints_leave_c15_open() {
    let mut b = SigmaBuilder::new(15, BuildOptions::one_point());
    let c = b.build_ck(15).unwrap();
    assert!(!c.is_resolved());
    assert!(c.check_shape());
}

#[test]
fn builder_rejects_out_of_order_weights() {
    let mut b = SigmaBuilder::new(23, BuildOptions::default());
    assert_eq!(b.build_ck(19).unwrap_err(), SigmaError::OutOfOrder { k: 19, next: 15 });
}

#[test]
fn stored_table_has_odd_isobaric_terms() {
    let t = table();
    assert_eq!(t.depth(), DEPTH);
    assert!(t.check_shapes());
    for c in &t.terms {
        assert!(c.poly.is_odd(), "C{} not odd", c.k);
        assert_eq!(c.poly.negate_u(), -&c.poly);
    }
    assert!(t.terms[0].poly.terms().all(|(_, x)| x.as_rat().is_some()));
}

fn brute_force_count(k: i32) -> Vec<UExp> {
    let mut out = Vec::new();
    let b: Vec<u16> = U_WEIGHTS.iter().map(|w| (k / w) as u16).collect();
    for a in 0..=b[0] {
        for c in 0..=b[1] {
            for d in 0..=b[2] {
                for e in 0..=b[3] {
                    for f in 0..=b[4] {
                        for g in 0..=b[5] {
                            let v = [a, c, d, e, f, g];
                            let w: i32 = v.iter().zip(U_WEIGHTS).map(|(&x, w)| x as i32 * w).sum();
                            let deg: u32 = v.iter().map(|&x| x as u32).sum();
                            if w == k && deg % 2 == 1 {
                                out.push(v);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn candidate_count_c19_by_enumeration() {
    assert_eq!(odd_isobaric_monomials(19).len(), brute_force_count(19).len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn candidates_are_exactly_the_odd_isobaric_monomials(k in 1i32..44) {
        let mut a = odd_isobaric_monomials(k);
        let mut b = brute_force_count(k);
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn derivative_commutes_with_truncation(i in 1usize..=6, j in 1usize..=6, cut in 0usize..4) {
        let t = table();
        let kmax = 15 + 4 * cut as i32;
        let truncated = t.terms.iter().filter(|c| c.k <= kmax).fold(GradedPoly::zero(), |a, c| &a + &c.poly);
        let lhs = truncated.diff_multi(&[i, j]);
        let w = U_WEIGHTS[i - 1] + U_WEIGHTS[j - 1];
        // the part of ∂σ coming from terms of weight ≤ kmax
        let full = t.sigma().diff_multi(&[i, j]);
        let mut rhs = GradedPoly::zero();
        for (e, c) in full.terms() {
            let a: UExp = std::array::from_fn(|q| e[q]);
            if tetragonal::sigma::u_weight(&a) + w <= kmax {
                rhs.add_term(*e, c);
            }
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sw_is_odd_at_rational_points(v in proptest::collection::vec(-7i64..8, 6)) {
        let sw = schur_weierstrass();
        let eval = |sign: i64| -> Rat {
            let mut acc = Rat::zero();
            for (e, c) in sw.terms() {
                let mut x = c.as_rat().unwrap();
                for q in 0..6 {
                    x = &x * &Rat::from(sign * v[q]).pow(e[q] as i32);
                }
                acc = &acc + &x;
            }
            acc
        };
        prop_assert_eq!(eval(1), -eval(-1));
    }
}

// Bivariate check of σ(u(ξ1) + u(ξ2)) over a prime field with the μ specialized.

const P: u64 = 2_305_843_009_213_693_951; // 2^61 - 1

fn mulm(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powm(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a);
        }
        a = mulm(a, a);
        e >>= 1;
    }
    r
}

fn big_mod(x: &BigInt) -> u64 {
    let m = BigInt::from(P);
    let mut r = x % &m;
    if r < BigInt::zero() {
        r += &m;
    }
    r.to_u64().unwrap()
}

fn rat_mod(r: &Rat) -> u64 {
    mulm(big_mod(&r.numer()), powm(big_mod(&r.denom()), P - 2))
}

const MU: [u64; 5] = [1_000_003, 77_777_777, 31_415_926_535, 2_718_281_828, 1_414_213_562];

fn coeff_mod(c: &Coeff) -> u64 {
    let mut acc = 0;
    for (m, r) in c.terms() {
        assert_eq!((m.iota, m.rho), (0, 0));
        let mut x = rat_mod(r);
        for q in 0..5 {
            let e = m.mu[q];
            let base = if e < 0 { powm(MU[q], P - 2) } else { MU[q] };
            x = mulm(x, powm(base, e.unsigned_abs() as u64));
        }
        acc = (acc + x) % P;
    }
    acc
}

/// Truncated bivariate series, `c[a][b]` for `a + b ≤ d`.
#[derive(Clone)]
struct Bi {
    d: usize,
    c: Vec<Vec<u64>>,
}

impl Bi {
    fn one(d: usize) -> Bi {
        let mut c = vec![vec![0; d + 1]; d + 1];
        c[0][0] = 1;
        Bi { d, c }
    }

    fn zero(d: usize) -> Bi {
        Bi { d, c: vec![vec![0; d + 1]; d + 1] }
    }

    fn mul(&self, o: &Bi) -> Bi {
        let d = self.d;
        let mut r = Bi::zero(d);
        for a in 0..=d {
            for b in 0..=d - a {
                let x = self.c[a][b];
                if x == 0 {
                    continue;
                }
                for a2 in 0..=d - a - b {
                    for b2 in 0..=d - a - b - a2 {
                        let y = o.c[a2][b2];
                        if y != 0 {
                            let z = &mut r.c[a + a2][b + b2];
                            *z = (*z + mulm(x, y)) % P;
                        }
                    }
                }
            }
        }
        r
    }

    fn add_scaled(&mut self, o: &Bi, k: u64) {
        for a in 0..=self.d {
            for b in 0..=self.d - a {
                self.c[a][b] = (self.c[a][b] + mulm(o.c[a][b], k)) % P;
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(|r| r.iter().all(|&x| x == 0))
    }
}

/// `poly(u(ξ1) + u(ξ2))` through total degree d.
fn two_point(poly: &GradedPoly, d: usize) -> Bi {
    let curve = CurveC45::new();
    let mut pows: Vec<Vec<Bi>> = Vec::new();
    for i in 1..=6 {
        let s = curve.abel_series(i, d as i32 + 1);
        let mut u = Bi::zero(d);
        for n in 0..=d {
            let x = coeff_mod(&s.coeff(n as i32));
            u.c[n][0] = x;
            u.c[0][n] = (u.c[0][n] + x) % P;
        }
        pows.push(vec![Bi::one(d), u]);
    }
    let mut total = Bi::zero(d);
    for (e, c) in poly.terms() {
        let mut term = Bi::one(d);
        for i in 0..6 {
            let k = e[i] as usize;
            while pows[i].len() <= k {
                let next = pows[i].last().unwrap().mul(&pows[i][1]);
                pows[i].push(next);
            }
            if k > 0 {
                term = term.mul(&pows[i][k]);
            }
        }
        total.add_scaled(&term, coeff_mod(c));
    }
    total
}

#[test]
fn sigma_vanishes_on_two_point_image() {
    let sigma = table().sigma();
    // C_{DEPTH+4} first contributes at total degree DEPTH + 4
    let d = (DEPTH + 3) as usize;
    assert!(two_point(&sigma, d).is_zero());
    // σ6 vanishes there as well
    assert!(two_point(&sigma.diff(6), d - 1).is_zero());
}

#[test]
fn two_point_check_is_stronger_than_one_point_construction() {
    let t = SigmaExpansion::build(19, BuildOptions::one_point()).unwrap();
    let b = two_point(&t.sigma(), 22);
    // one-point data alone vanish on the diagonal ξ2 = 0 but not off it
    assert!((0..=22).all(|n| b.c[n][0] == 0));
    assert!(!b.is_zero());
}

#[test]
fn text_roundtrip() {
    let t = table();
    let back = SigmaExpansion::from_text(&t.to_text()).unwrap();
    assert_eq!(&back, t);
    let open = SigmaExpansion::build(19, BuildOptions::one_point()).unwrap();
    assert_eq!(SigmaExpansion::from_text(&open.to_text()).unwrap(), open);
}

#[test]
fn malformed_table_is_rejected() {
    let err = SigmaExpansion::from_text("term [0,0,0,0,0] [0,0,0,0,0,15] 1").unwrap_err();
    assert!(matches!(err, SigmaError::Format { line: 1, .. }));
}

fn quotients() -> Vec<SigmaQuotient> {
    vec![
        SigmaQuotient::of_syms(sym("s236"), sym("s23")),
        SigmaQuotient::of_syms(sym("s34"), sym("s23")),
        SigmaQuotient::new(SigmaExpr::sym(sym("s22")), SigmaExpr::sym(sym("s23"))),
    ]
}

#[test]
fn origin_expansions_do_not_depend_on_free_coefficients() {
    let a = table();
    let b = SigmaExpansion::build(DEPTH, BuildOptions { free_value: Rat::new(7, 3), ..BuildOptions::default() }).unwrap();
    assert!(!a.open_flags().is_empty());
    assert_ne!(a.sigma(), b.sigma());
    for q in quotients() {
        assert_eq!(a.origin_expansion(&q, 40).unwrap().normalized(), b.origin_expansion(&q, 40).unwrap().normalized());
    }
}

#[test]
fn origin_expansion_heads() {
    let t = table();
    let qs = quotients();
    let r = t.origin_expansion(&qs[1], 40).unwrap();
    // σ34/σ23 = -ξ^4 to the certified order
    assert_eq!(r.prec(), DEPTH - 7);
    for n in 0..r.prec() {
        let want = if n == 4 { Coeff::int(-1) } else { Coeff::zero() };
        assert_eq!(r.coeff(n), want, "xi^{n}");
    }
    let z = t.origin_expansion(&qs[0], 40).unwrap();
    assert_eq!(z.valuation(), Some(7));
    assert_eq!(z.coeff(7), Coeff::frac(1, 7) * Coeff::mu(3));
    let s22 = t.origin_expansion(&qs[2], 40).unwrap();
    assert_eq!(s22.valuation(), Some(-1));
    assert_eq!(s22.coeff(-1), Coeff::int(-2));
}

#[test]
fn sigma_itself_vanishes_on_the_curve() {
    let t = table();
    let mut ev = tetragonal::sigma::PointEval::new(1, 8);
    let s = t.symbol_series(Sym::SIGMA, &mut ev);
    assert!(s.is_zero());
    assert_eq!(s.prec(), DEPTH + 4);
    let q = SigmaQuotient::new(SigmaExpr::sym(sym("s23")), SigmaExpr::sym(Sym::SIGMA));
    assert!(matches!(t.origin_expansion(&q, 10), Err(SigmaError::TableTooShort(_))));
}
