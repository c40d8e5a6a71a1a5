mod common;

use tetragonal::curve::{CurveC45, Sheet};
use tetragonal::pole::*;
use tetragonal::strata::{parse_lin, LinForm, Sym};
use tetragonal::{Coeff, Rat};

const ORDER: i32 = 8;

fn sym(s: &str) -> Sym {
    Sym::parse(s).unwrap()
}

fn q(n: i64, d: i64) -> Coeff {
    Coeff::frac(n, d)
}

fn table(n: u8) -> TaylorTable {
    let w = reparam_to_w1(&CurveC45::new(), Sheet::new(n), ORDER).unwrap();
    TaylorTable::new(&w, ORDER as u32).unwrap()
}

fn relations(n: u8) -> (TaylorTable, U0Relations) {
    let t = table(n);
    let r = derive_u0_relations(common::theta1(), &t, &U0Options::default()).unwrap();
    (t, r)
}

#[test]
fn w_series_leading_terms() {
    let c = CurveC45::new();
    for n in 0..4u8 {
        let sh = Sheet::new(n);
        let w1 = w_series(&c, 1, sh, ORDER).unwrap();
        assert_eq!(w1.valuation(), Some(1));
        assert_eq!(w1.coeff(1), &sh.iota(1) * &Coeff::mu0_quarter(-3).scale(&Rat::new(1, 4)));
        let w4 = w_series(&c, 4, sh, ORDER).unwrap();
        assert_eq!(w4.valuation(), Some(3));
        assert_eq!(w4.coeff(3), &sh.iota(1) * &Coeff::mu0_quarter(-3).scale(&Rat::new(1, 12)));
        // w3 carries ι^{2N} in every term
        let w3 = w_series(&c, 3, sh, ORDER).unwrap();
        let w3_0 = w_series(&c, 3, Sheet::new(0), ORDER).unwrap();
        assert_eq!(w3, w3_0.mul_coeff(&sh.iota(2)));
    }
}

#[test]
fn w_series_derivative_is_the_differential() {
    let c = CurveC45::new();
    for n in 0..4u8 {
        for i in 1..=6 {
            let w = w_series(&c, i, Sheet::new(n), ORDER).unwrap();
            assert!(w.coeff(0).is_zero());
            let d = c.du_dt_at_origin(i, Sheet::new(n), ORDER - 1);
            assert_eq!(w.derivative().truncate(ORDER - 1), d.truncate(ORDER - 1));
        }
    }
}

#[test]
fn reparametrized_w_series() {
    let c = CurveC45::new();
    for n in 0..4u8 {
        let sh = Sheet::new(n);
        let w = reparam_to_w1(&c, sh, ORDER).unwrap();
        assert_eq!(w.in_w1[0].truncate(ORDER), tetragonal::curve::Series::var(tetragonal::algebra::series::Param::W1, ORDER));
        let w2 = &w.in_w1[1];
        assert_eq!(w2.valuation(), Some(2));
        assert_eq!(w2.coeff(2), &sh.iota(3) * &Coeff::mu0_quarter(3).scale(&Rat::from(2)));
        let w6 = &w.in_w1[5];
        assert_eq!(w6.coeff(1), &sh.iota(2) * &Coeff::mu0_quarter(2));
        assert_eq!(w6.coeff(2), &(&sh.iota(5) * &Coeff::mu0_quarter(1)) * &Coeff::mu(1));
        // t(w1) = 4 ι^{3N} μ0^{3/4} w1 + 6 μ1 ι^{6N} μ0^{1/2} w1² + …
        assert_eq!(w.t_of_w1.coeff(1), &sh.iota(3) * &Coeff::mu0_quarter(3).scale(&Rat::from(4)));
        assert_eq!(w.t_of_w1.coeff(2), &(&sh.iota(6) * &Coeff::mu0_quarter(2)) * &Coeff::mu(1).scale(&Rat::from(6)));
    }
}

#[test]
fn sigma23_linear_coefficient() {
    for n in 0..4u8 {
        let t = table(n);
        let s = sigma_deriv_at_u0(&t, sym("s23"), 3);
        assert_eq!(s.coeffs[0], LinForm::sym(sym("s23")));
        let sh = Sheet::new(n);
        let want = LinForm::from_terms([
            (sym("s236"), &sh.iota(2) * &Coeff::mu0_quarter(2)),
            (sym("s123"), Coeff::one()),
            (sym("s233"), &sh.iota(1) * &Coeff::mu0_quarter(1)),
        ]);
        assert_eq!(s.coeffs[1], want);
    }
}

/// Second-order Taylor coefficient written out by hand:
/// `Σ_i σ_{Ki} [w1²]w_i + ½ Σ_{i,j} σ_{Kij} [w1]w_i [w1]w_j`.
#[test]
fn second_order_matches_direct_taylor() {
    let c = CurveC45::new();
    for n in [0u8, 3] {
        let w = reparam_to_w1(&c, Sheet::new(n), ORDER).unwrap();
        let t = TaylorTable::new(&w, ORDER as u32).unwrap();
        for base in ["s", "s23", "s34", "s122"] {
            let k = sym(base);
            let mut want = LinForm::zero();
            for i in 1..=6u8 {
                let a2 = w.in_w1[i as usize - 1].coeff(2);
                want = want.add_scaled(&LinForm::sym(k.with(i)), &a2);
                for j in 1..=6u8 {
                    let a = &w.in_w1[i as usize - 1].coeff(1) * &w.in_w1[j as usize - 1].coeff(1);
                    want = want.add_scaled(&LinForm::sym(k.with(i).with(j)), &a.scale(&Rat::new(1, 2)));
                }
            }
            assert_eq!(t.symbol_coefficient(k, 2), want, "sheet {n} symbol {base}");
        }
    }
}

#[test]
fn point_relations_match_printed_examples() {
    let (_, r) = relations(0);
    let s = &r.set;
    assert!(s.proves(&parse_lin("sigma34", Some(0)).unwrap(), &parse_lin("1/2*sigma22/(iN*mu0^(1/4))", Some(0)).unwrap()));
    assert!(s.reduce(&LinForm::sym(sym("s111"))).is_zero());
    assert_eq!(s.reduce(&LinForm::sym(sym("s236"))), LinForm::term(sym("s22"), q(-1, 2)));
    let basis: Vec<Sym> = U0_BASIS.iter().map(|b| sym(b)).collect();
    for x in r.irreducible(3) {
        assert!(basis.contains(&x), "{x} left irreducible");
    }
}

#[test]
fn point_relations_match_printed_tables_on_every_sheet() {
    let golden = include_str!("../data/appendix_c.txt");
    for n in 0..4u8 {
        let (_, r) = relations(n);
        assert_eq!(r.golden_failures(golden).unwrap(), Vec::<usize>::new(), "sheet {n}");
    }
}

#[test]
fn golden_check_rejects_a_wrong_relation() {
    let (_, r) = relations(0);
    let wrong = "sigma236 = 1/2*sigma22\nsigma111 = sigma22";
    assert_eq!(r.golden_failures(wrong).unwrap(), vec![1, 2]);
}

#[test]
fn sheets_are_related_by_the_cyclic_action() {
    let (_, r0) = relations(0);
    for n in 1..4u8 {
        let (_, rn) = relations(n);
        assert_eq!(rn.set.len(), r0.set.len());
        // u_{0,N} is the N-fold cyclic image of u_{0,0}, so σ_K picks up ι^{N·w(K)} (up to an overall ε^N)
        for rule in r0.set.rules.values() {
            let moved = rule.as_relation().map_coeffs(|s, c| {
                let f = Sheet::new(n).iota(-(s.index_weight() as i64));
                c * &f
            });
            assert!(rn.set.reduce(&moved).is_zero(), "sheet {n}: {} = {}", rule.lhs, rule.rhs);
        }
    }
}

#[test]
fn u0_relations_text_roundtrip() {
    let (_, r) = relations(2);
    let back = U0Relations::from_text(&r.to_text()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn phi2_principal_part_on_every_sheet() {
    for n in 0..4u8 {
        let (t, r) = relations(n);
        let p = phi2_pole_expansion(&r, &t).unwrap();
        let sh = Sheet::new(n);
        assert_eq!(p.double_pole, &sh.iota(2) * &Coeff::mu0_quarter(-6).scale(&Rat::new(1, 16)));
        assert_eq!(p.a1, &Coeff::mu(1) * &Coeff::mu0_quarter(-4).scale(&Rat::new(3, 4)));
        // residue = ι^N (4 μ0 A1 − 3 μ1) / (16 μ0^{7/4})
        let pref = &sh.iota(1) * &Coeff::mu0_quarter(-7).scale(&Rat::new(1, 16));
        assert_eq!(p.residue_a1, &pref * &Coeff::mu(0).scale(&Rat::from(4)));
        assert_eq!(p.residue_const, &pref * &Coeff::mu(1).scale(&Rat::from(-3)));
    }
}
