//! Acceptance criteria, run in order in one test so that runtimes are measured
//! without other tests competing for the cores. Each criterion prints one line
//! `criterion NN [PASS|FAIL] name: detail`; the test fails if any criterion does.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use tetragonal::benney_sc::{conserved_densities, fix_residue, reversion_residual, residue_by_contour, sample_text, sc_map, sc_sample, slit_geometry, APoly, SlitConfig, DEFAULT_TOL};
use tetragonal::curve::{CurveC45, Sheet};
use tetragonal::pole::{derive_u0_relations, phi2_pole_expansion, reparam_to_w1, Phi2Pole, TaylorTable, U0Options, U0Relations, DEFAULT_W1_ORDER};
use tetragonal::psi_lambda::{assemble_lambda, bdef_series, phi2_quotient, solve_b_vector, solve_psi, AffineA, PointData, PsiSolution, B_SERIES_ORDER, DEFAULT_SIGMA_DEPTH};
use tetragonal::sigma::{schur_weierstrass, BuildOptions, SigmaBuilder, SigmaExpansion};
use tetragonal::strata::jorgenson::{jorgenson_reduce, stratum_definition, JPoly};
use tetragonal::strata::{derive_stratum, descend, parse_golden, parse_lin, wmin_for_order, LinForm, RelationSet, Sym, DEFAULT_XI_ORDER};
use tetragonal::{Coeff, Rat};

// runtime budgets
const SW_BUDGET: Duration = Duration::from_secs(1);
const THETA4_BUDGET: Duration = Duration::from_secs(60);
const THETA1_BUDGET: Duration = Duration::from_secs(600);
const U0_BUDGET: Duration = Duration::from_secs(300);
const SC_BUDGET: Duration = Duration::from_secs(30);

// numeric tolerances for the SC geometry
const RESIDUE_TOL: f64 = 1e-10;
const ANGLE_TOL: f64 = 1e-6;
const TURN_TOL: f64 = 1e-6;
const FAR_FIELD_TOL: f64 = 1e-4;
const FAR_RADIUS: f64 = 1e6;

/// Printed order of the Ψ origin series, and the φ₂ order checked with the deep table.
const PSI_ORDER: i32 = 15;
const PHI2_ORDER: i32 = 36;
const PHI2_DEPTH: i32 = 43;

const THREAD_COUNTS: [usize; 3] = [1, 4, 8];

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(id: usize, name: &'static str, pass: bool, detail: String) -> Verdict {
        let v = Verdict { id, name, pass, detail };
        println!("criterion {:02} [{}] {}: {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
        v
    }
}

fn pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn sym(s: &str) -> Sym {
    Sym::parse(s).unwrap()
}

fn over_mu0(c: Coeff) -> Coeff {
    &c * &Coeff::mu0_quarter(-4)
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Θ^[1] derived fresh (not from the test cache) on an 8-thread pool.
fn theta1_fresh() -> &'static (RelationSet, Duration) {
    static T: OnceLock<(RelationSet, Duration)> = OnceLock::new();
    T.get_or_init(|| {
        let t = Instant::now();
        let (set, _) = pool(8, || derive_stratum(1, DEFAULT_XI_ORDER)).expect("descent to level 1");
        (set, t.elapsed())
    })
}

struct PointSet {
    data: Vec<(TaylorTable, U0Relations, Phi2Pole)>,
    elapsed: Duration,
}

fn point_set() -> &'static PointSet {
    static P: OnceLock<PointSet> = OnceLock::new();
    P.get_or_init(|| {
        let t = Instant::now();
        let c = CurveC45::new();
        let data = Sheet::all()
            .into_iter()
            .map(|sh| {
                let w = reparam_to_w1(&c, sh, DEFAULT_W1_ORDER as i32).unwrap();
                let tab = TaylorTable::new(&w, DEFAULT_W1_ORDER).unwrap();
                let r = derive_u0_relations(&theta1_fresh().0, &tab, &U0Options::default()).unwrap();
                let p = phi2_pole_expansion(&r, &tab).unwrap();
                (tab, r, p)
            })
            .collect();
        PointSet { data, elapsed: t.elapsed() }
    })
}

fn sigma35() -> &'static SigmaExpansion {
    static T: OnceLock<SigmaExpansion> = OnceLock::new();
    T.get_or_init(|| common::sigma_table(DEFAULT_SIGMA_DEPTH))
}

fn psi() -> &'static PsiSolution {
    static P: OnceLock<PsiSolution> = OnceLock::new();
    P.get_or_init(|| {
        let points: Vec<PointData<'_>> = point_set().data.iter().map(|(t, r, p)| PointData { relations: r, table: t, phi2: p }).collect();
        solve_psi(&theta1_fresh().0, &points, sigma35()).unwrap()
    })
}

fn a1() -> Coeff {
    over_mu0(Coeff::mu(1).scale(&Rat::new(3, 4)))
}

fn affine(constant: Coeff, slot: Option<usize>) -> AffineA {
    let mut a = [Coeff::zero(), Coeff::zero(), Coeff::zero()];
    if let Some(k) = slot {
        a[k] = Coeff::one();
    }
    AffineA { constant, a }
}

/// B as printed: B1 = A2 + μ2/(2μ0), B2 = A3 + μ3/(4μ0), B3 = B5 = B6 = 0, B4 = A4.
fn printed_b() -> [AffineA; 6] {
    [
        affine(over_mu0(Coeff::mu(2).scale(&Rat::new(1, 2))), Some(0)),
        affine(over_mu0(Coeff::mu(3).scale(&Rat::new(1, 4))), Some(1)),
        affine(Coeff::zero(), None),
        affine(Coeff::zero(), Some(2)),
        affine(Coeff::zero(), None),
        affine(Coeff::zero(), None),
    ]
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let sw = schur_weierstrass();
    let mut b = SigmaBuilder::new(15, BuildOptions::default());
    let c15 = b.build_ck(15).unwrap().poly.clone();
    let elapsed = t.elapsed();
    let oracle = common::jacobi_trudi();
    let pass = sw.len() == 32 && sw == oracle && c15 == sw && elapsed < SW_BUDGET;
    Verdict::new(
        1,
        "Schur-Weierstrass polynomial",
        pass,
        format!("{} terms, determinant oracle {}, C15 {}, {}", sw.len(), sw == oracle, c15 == sw, secs(elapsed)),
    )
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let (t4, _) = descend(&RelationSet::theta5(wmin_for_order(DEFAULT_XI_ORDER))).unwrap();
    let elapsed = t.elapsed();
    let golden = parse_golden(include_str!("../data/relthet4.txt"), None).unwrap();
    let bad: Vec<usize> = golden.iter().filter(|g| !t4.proves(&g.lhs, &g.rhs)).map(|g| g.line).collect();
    // the μ4 term of the σ66666 rule
    let has_mu4 = golden.iter().any(|g| g.lhs == LinForm::sym(sym("s66666")) && g.rhs.to_string().contains("mu4") && t4.proves(&g.lhs, &g.rhs));
    let pass = golden.len() == 5 && bad.is_empty() && has_mu4 && elapsed < THETA4_BUDGET;
    Verdict::new(
        2,
        "relations on the 4-point stratum",
        pass,
        format!("{}/{} printed rules hold, σ66666 rule with its μ4 term {}, {}", golden.len() - bad.len(), golden.len(), has_mu4, secs(elapsed)),
    )
}

fn criterion_3() -> Verdict {
    let (t1, elapsed) = theta1_fresh();
    let golden = parse_golden(include_str!("../data/appendix_b.txt"), None).unwrap();
    let bad: Vec<usize> = golden.iter().filter(|g| !t1.proves(&g.lhs, &g.rhs)).map(|g| g.line).collect();
    let pass = golden.len() >= 120 && bad.is_empty() && *elapsed <= THETA1_BUDGET;
    Verdict::new(
        3,
        "relations on the 1-point stratum",
        pass,
        format!("{}/{} printed rules hold (failing lines {bad:?}), {} rules derived in {}", golden.len() - bad.len(), golden.len(), t1.len(), secs(*elapsed)),
    )
}

fn criterion_4() -> Verdict {
    let ps = point_set();
    let golden = include_str!("../data/appendix_c.txt");
    let mut detail = Vec::new();
    let mut pass = ps.elapsed < U0_BUDGET;
    for (_, r, _) in &ps.data {
        let n = r.sheet.index();
        let bad = r.golden_failures(golden).unwrap();
        let count = parse_golden(golden, Some(n)).unwrap().len();
        let s34 = r.set.proves(&parse_lin("sigma34", Some(n)).unwrap(), &parse_lin("1/2*sigma22/(iN*mu0^(1/4))", Some(n)).unwrap());
        pass &= bad.is_empty() && s34;
        detail.push(format!("sheet {n}: {}/{count}", count - bad.len()));
    }
    Verdict::new(4, "relations at u0 on every sheet", pass, format!("{}, {}", detail.join(", "), secs(ps.elapsed)))
}

fn criterion_5() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (_, _, p) in &point_set().data {
        let want_double = &p.sheet.iota(2) * &Coeff::mu0_quarter(-6).scale(&Rat::new(1, 16));
        let ok = p.double_pole == want_double && p.a1 == a1();
        pass &= ok;
        detail.push(format!("sheet {}: double pole {}, A1 {}", p.sheet.index(), p.double_pole, p.a1));
    }
    Verdict::new(5, "residue condition", pass, detail.join("; "))
}

fn criterion_6() -> Verdict {
    let p = psi();
    let single = p.as_single_term();
    let psi_ok = single == Some((over_mu0(Coeff::frac(-1, 4)), sym("s236")));
    let eta22 = p.fixed_at_origin.iter().any(|(s, c)| *s == sym("s22") && c.is_zero());

    let series = bdef_series(sigma35(), &CurveC45::new(), &phi2_quotient(&a1()), &p.quotient(), B_SERIES_ORDER).unwrap();
    let b = solve_b_vector(series).unwrap();
    let printed = printed_b();
    let b_mismatch: Vec<String> = (0..6).filter(|&i| b.b[i] != printed[i]).map(|i| format!("B{} = {} (printed {})", i + 1, b.b[i], printed[i])).collect();

    // Ψ: −μ3/(28μ0) ξ^7 + (3μ4μ3 − 8μ2)/(176μ0) ξ^11 + O(ξ^15)
    let psi_s = sigma35().origin_expansion(&p.quotient(), PSI_ORDER).unwrap();
    let psi_lim = psi_s.prec() >= PSI_ORDER
        && (-4..PSI_ORDER).all(|n| {
            let want = match n {
                7 => over_mu0(Coeff::mu(3).scale(&Rat::new(-1, 28))),
                11 => over_mu0((&Coeff::mu(2).scale(&Rat::from(-8)) + &(&Coeff::mu(4) * &Coeff::mu(3)).scale(&Rat::from(3))).scale(&Rat::new(1, 176))),
                _ => Coeff::zero(),
            };
            psi_s.coeff(n) == want
        });
    // φ₂ = A1 ξ^4 + ξ^8 + O(ξ^36), which needs the deeper σ table
    let deep = common::sigma_table(PHI2_DEPTH);
    let phi = deep.origin_expansion(&phi2_quotient(&a1()), PHI2_ORDER + 4).unwrap();
    let phi_lim = phi.prec() >= PHI2_ORDER
        && (-8..PHI2_ORDER).all(|n| {
            let want = match n {
                4 => a1(),
                8 => Coeff::one(),
                _ => Coeff::zero(),
            };
            phi.coeff(n) == want
        });

    let pass = psi_ok && eta22 && b_mismatch.is_empty() && psi_lim && phi_lim;
    Verdict::new(
        6,
        "Ψ and B",
        pass,
        format!(
            "Ψ = {} ({}), η22 fixed to 0 {}, ψ_lim to ξ^{} {}, φ₂_lim to ξ^{} {}, B mismatches [{}]",
            p.quotient(),
            if psi_ok { "matches" } else { "differs" },
            eta22,
            PSI_ORDER,
            psi_lim,
            phi.prec(),
            phi_lim,
            b_mismatch.join("; ")
        ),
    )
}

fn criterion_7() -> Verdict {
    let ps = point_set();
    let (t, r, p) = &ps.data[0];
    let series = bdef_series(sigma35(), &CurveC45::new(), &phi2_quotient(&a1()), &psi().quotient(), B_SERIES_ORDER).unwrap();
    let b = solve_b_vector(series).unwrap();
    let l = assemble_lambda(psi(), &b, r, t, p).unwrap();
    let mut diffs = Vec::new();
    let mut check = |what: &str, ok: bool, got: String| {
        if !ok {
            diffs.push(format!("{what}: {got}"));
        }
    };
    check("lead constant", l.lead_constant == over_mu0(Coeff::mu(1).scale(&Rat::new(3, 8))), l.lead_constant.to_string());
    check("Ψ coefficient", l.psi_coeff == over_mu0(Coeff::frac(-1, 4)) && l.psi_symbol == sym("s236"), format!("{} {}", l.psi_coeff, l.psi_symbol));
    check("u0 term", l.u0_quotient.base == sym("s22") && l.u0_quotient.rest == LinForm::sym(sym("s226")), format!("{}/{}", l.u0_quotient.rest, l.u0_quotient.base));
    check("μ1 term", l.k_constant == &Coeff::mu(1) * &Coeff::mu0_quarter(-7).scale(&Rat::new(-1, 32)), l.k_constant.to_string());
    let printed = printed_b();
    for i in [0usize, 1, 3] {
        check(&format!("coefficient of (u{} - u0_{})", i + 1, i + 1), l.constants.b.b[i] == printed[i], format!("{} (printed {})", l.constants.b.b[i], printed[i]));
    }
    let pass = diffs.is_empty();
    Verdict::new(7, "λ formula", pass, if pass { l.to_text() } else { format!("differs in [{}]; derived {}", diffs.join("; "), l.to_text()) })
}

fn criterion_8() -> Verdict {
    let t2 = JPoly::parse("a1*t1*s2 - a1*s1*t2 + a2*s1 - a2*s2 - a3*t1 + a3*t2").unwrap();
    let k3 = jorgenson_reduce(3).unwrap();
    let k3_ok = !k3.singular && k3.numerator == t2 && k3.denominator == t2.a_to_b() && k3.independent_of == vec![4, 5, 6];
    let k2 = jorgenson_reduce(2).unwrap();
    let k2_ok = k2.singular && k2.numerator == JPoly::parse("a1*t1 - a2").unwrap() && k2.denominator == JPoly::parse("b1*t1 - b2").unwrap();
    let strata = [(5usize, vec![]), (4, vec![6]), (3, vec![6, 5]), (2, vec![6, 5, 4]), (1, vec![6, 5, 4, 3])];
    let strata_ok = strata.iter().all(|(k, want)| stratum_definition(*k).as_ref() == Ok(want));
    let upper_ok = (4..=5).all(|k| jorgenson_reduce(k).map(|r| !r.singular && r.independent_of == ((k + 1)..=6).collect::<Vec<_>>()).unwrap_or(false));
    let pass = k3_ok && k2_ok && strata_ok && upper_ok;
    Verdict::new(
        8,
        "Jorgenson reductions",
        pass,
        format!("two-point quotient {k3_ok}, one-point quotient with k = 2 singular case {k2_ok}, strata definitions {strata_ok}, k = 4, 5 {upper_ok}"),
    )
}

fn criterion_9() -> Verdict {
    let h = conserved_densities(6);
    let h2 = APoly::var(2).add(&APoly::var(0).mul(&APoly::var(0)));
    let residual = reversion_residual(7, &h);
    let nonzero = residual.iter().filter(|c| !c.is_zero()).count();
    let pass = h[2] == h2 && nonzero == 0;
    Verdict::new(9, "Benney densities", pass, format!("H2 = {}, {} nonzero residual orders through λ^-8", h[2], nonzero))
}

fn criterion_10() -> Verdict {
    let t = Instant::now();
    let cfg = fix_residue(&SlitConfig::desk(), 5).unwrap();
    let c1 = residue_by_contour(&cfg, 50.0, 4096).abs().max(cfg.residue().abs());
    let g = slit_geometry(&cfg, DEFAULT_TOL).unwrap();
    let max_turn = g.turn_defects.iter().copied().fold(0.0, f64::max);
    let far: f64 = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|f| {
            let p = Complex64::from_polar(FAR_RADIUS, f * std::f64::consts::PI);
            (sc_map(&cfg, p, DEFAULT_TOL).unwrap().value - p).norm()
        })
        .fold(0.0, f64::max);
    let elapsed = t.elapsed();
    let pass = c1 < RESIDUE_TOL && g.max_angle_defect < ANGLE_TOL && g.turn_defects.len() == 6 && max_turn < TURN_TOL && far < FAR_FIELD_TOL && elapsed < SC_BUDGET;
    Verdict::new(
        10,
        "numeric SC geometry",
        pass,
        format!("|c1| {c1:.1e}, ray angle defect {:.1e}, turn defect {max_turn:.1e}, |λ−p| at 1e6 {far:.1e}, {}", g.max_angle_defect, secs(elapsed)),
    )
}

fn criterion_11() -> Verdict {
    let reference = theta1_fresh().0.to_text();
    let mut same = vec![("Θ1 at 8 threads".to_string(), true)];
    for n in [1usize, 4] {
        let (set, _) = pool(n, || derive_stratum(1, DEFAULT_XI_ORDER)).unwrap();
        same.push((format!("Θ1 at {n} threads"), set.to_text() == reference));
    }
    let t1 = &theta1_fresh().0;
    let u0: Vec<String> = THREAD_COUNTS
        .iter()
        .map(|&n| {
            pool(n, || {
                let w = reparam_to_w1(&CurveC45::new(), Sheet::new(1), DEFAULT_W1_ORDER as i32).unwrap();
                let tab = TaylorTable::new(&w, DEFAULT_W1_ORDER).unwrap();
                derive_u0_relations(t1, &tab, &U0Options::default()).unwrap().to_text()
            })
        })
        .collect();
    same.push(("u0 relations".into(), u0.iter().all(|x| *x == u0[0])));
    let sig: Vec<String> = THREAD_COUNTS.iter().map(|&n| pool(n, || SigmaExpansion::build(27, BuildOptions::default()).unwrap().to_text())).collect();
    same.push(("σ table to C27".into(), sig.iter().all(|x| *x == sig[0])));
    let cfg = fix_residue(&SlitConfig::desk(), 5).unwrap();
    let pts: Vec<Complex64> = (0..64).map(|k| Complex64::new(-9.0 + 0.3 * k as f64, 0.1 + 0.05 * (k % 7) as f64)).collect();
    let sc: Vec<String> = THREAD_COUNTS.iter().map(|&n| pool(n, || sample_text(&pts, &sc_sample(&cfg, &pts, DEFAULT_TOL)))).collect();
    same.push(("SC samples".into(), sc.iter().all(|x| *x == sc[0])));
    let pass = same.iter().all(|(_, ok)| *ok);
    let detail: Vec<String> = same.iter().map(|(w, ok)| format!("{w} {}", if *ok { "identical" } else { "differs" })).collect();
    Verdict::new(11, "determinism across 1, 4 and 8 threads", pass, detail.join(", "))
}

#[test]
fn acceptance_criteria() {
    let verdicts = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
    ];
    let failed: Vec<String> = verdicts.iter().filter(|v| !v.pass).map(|v| format!("{} ({})", v.id, v.name)).collect();
    println!("acceptance: {}/{} criteria pass", verdicts.len() - failed.len(), verdicts.len());
    assert!(failed.is_empty(), "failing criteria: {}", failed.join(", "));
}
