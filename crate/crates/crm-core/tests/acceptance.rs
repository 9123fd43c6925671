//! End-to-end acceptance checks, one test per criterion. Each test prints a
//! single pass/fail line so a log scan shows the whole scoreboard.

use std::time::Instant;

use crm_core::density::{
    current_log_density, current_log_density_gamma, diagnose_diffeo_qi, diffeo_log_density,
    partial_log_density, scale_weights_inverse, semidirect_log_density,
};
use crm_core::groups::{Current, Diffeo, GroupElement};
use crm_core::levy::{frullani, frullani_quadrature, FieldFn, LevyModel, Tail};
use crm_core::measure::{r_inverse, r_map, DiscreteMeasure, WeightedAtom};
use crm_core::numerics::special::exp_integral_e1;
use crm_core::numerics::stats::chi_square_poisson_test;
use crm_core::rng::CounterRng;
use crm_core::sampler::{laplace_exact, Sampler, SamplerSpec};
use crm_core::verify::{
    verify_current, verify_diffeo, verify_gamma_marginal, verify_partial, verify_semidirect,
    Functional, FunctionalKind, VerifyOptions,
};
use crm_core::{CrmError, QiVerdict, Window};

fn window() -> Window {
    Window::interval(0.0, 1.0).unwrap()
}

fn gamma_model() -> LevyModel {
    LevyModel::gamma(FieldFn::Constant(1.0), FieldFn::Constant(1.0)).unwrap()
}

fn log_model() -> LevyModel {
    LevyModel::log_type(FieldFn::Constant(2.0), FieldFn::Constant(1.0), 0.3, Tail::BetaExp)
        .unwrap()
}

fn power_model() -> LevyModel {
    LevyModel::power_type(FieldFn::Constant(0.5), FieldFn::Constant(1.0), 0.5, Tail::BetaExp)
        .unwrap()
}

fn unif(rng: &mut CounterRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

fn random_measure(rng: &mut CounterRng, max_atoms: usize) -> DiscreteMeasure {
    let n = 1 + (rng.next_f64() * max_atoms as f64) as usize;
    let atoms = (0..n)
        .map(|_| WeightedAtom::new(vec![unif(rng, 0.01, 0.99)], unif(rng, 0.01, 3.0)).unwrap())
        .collect();
    DiscreteMeasure::new(atoms).unwrap()
}

fn report(n: u32, name: &str, pass: bool, started: Instant, detail: &str) {
    let secs = started.elapsed().as_secs_f64();
    println!(
        "criterion {n} ({name}): {} [{secs:.1}s] {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_laplace_transform_gamma() {
    let started = Instant::now();
    let model = gamma_model();
    let w = window();
    let sampler = Sampler::new(SamplerSpec {
        model: model.clone(),
        window: w.clone(),
        eps_trunc: 1e-4,
        seed: 101,
    })
    .unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for t in [0.5, 1.0, 2.0] {
        let mc = sampler.laplace_mc(|_| 1.0, t, 100_000).unwrap();
        let exact = laplace_exact(&model, &w, |_| 1.0, t, 1e-4).unwrap();
        let closed = 1.0 / (1.0 + t);
        let mc_ok = (mc.mean - exact).abs() <= 3.0 * mc.std_error;
        let quad_ok = (exact - closed).abs() <= 0.01;
        pass &= mc_ok && quad_ok;
        detail.push_str(&format!(
            "t={t}: mc={:.5}±{:.5} exact={:.5} closed={:.5}; ",
            mc.mean, mc.std_error, exact, closed
        ));
    }
    report(1, "laplace transform", pass, started, &detail);
}

#[test]
fn criterion_2_gamma_marginal_ks() {
    let started = Instant::now();
    let opts = VerifyOptions::new(1e-6, 202, 10_000);
    let r = verify_gamma_marginal(&gamma_model(), &window(), &window(), 0.01, &opts).unwrap();
    report(
        2,
        "gamma marginal KS",
        r.pass,
        started,
        &format!("D={:.4} p={:.4}", r.test.statistic, r.test.p_value),
    );
}

#[test]
fn criterion_3_current_quasi_invariance() {
    let started = Instant::now();
    let w = window();
    let theta = Current::bump(0.8, 0.5, 0.3).unwrap();
    let func = Functional::exp_neg_mass(Window::interval(0.2, 0.8).unwrap(), 1.0);
    let mut pass = true;
    let mut detail = String::new();
    for (name, model) in [
        ("gamma", gamma_model()),
        ("log", log_model()),
        ("power", power_model()),
    ] {
        let opts = VerifyOptions::new(1e-6, 303, 100_000);
        let clean = verify_current(&model, &w, &theta, &func, &opts).unwrap();
        let mut bad_opts = opts.clone();
        bad_opts.density_scale = 1.1;
        let mutated = verify_current(&model, &w, &theta, &func, &bad_opts).unwrap();
        let ok = clean.pass && !mutated.pass && mutated.z.abs() > 3.0;
        pass &= ok;
        detail.push_str(&format!("{name}: z={:.2} mutated z={:.2}; ", clean.z, mutated.z));
    }
    report(3, "current density verification", pass, started, &detail);
}

#[test]
fn criterion_4_gamma_closed_form_matches_quadrature() {
    let started = Instant::now();
    let model = gamma_model();
    let w = window();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = CounterRng::stream(404, i);
        let theta =
            Current::bump(unif(&mut rng, -1.0, 1.0), unif(&mut rng, 0.3, 0.7), unif(&mut rng, 0.15, 0.35))
                .unwrap();
        let eta = random_measure(&mut rng, 6);
        let quad = current_log_density(&model, &w, &theta, &eta).unwrap();
        let closed = current_log_density_gamma(&model, &w, &theta, &eta).unwrap();
        worst = worst.max((quad.log_value() - closed.log_value()).abs());
    }
    // Doubling every weight under a whole-window step current: atom factor e,
    // spatial correction 1/2, density e/2.
    let step = Current::step(2.0, 0.0, 1.0, true).unwrap();
    let eta = DiscreteMeasure::new(vec![WeightedAtom::new(vec![0.5], 2.0).unwrap()]).unwrap();
    let expect = std::f64::consts::E / 2.0;
    let quad_step = current_log_density(&model, &w, &step, &eta).unwrap().value();
    let closed_step = current_log_density_gamma(&model, &w, &step, &eta).unwrap().value();
    let step_err = (quad_step - expect).abs().max((closed_step - expect).abs());
    let pass = worst < 1e-6 && step_err < 1e-6;
    report(
        4,
        "gamma closed form",
        pass,
        started,
        &format!("max |Δlog|={worst:.2e} over 100 draws; step density {quad_step:.6} vs {expect:.6}"),
    );
}

#[test]
fn criterion_5_diffeomorphism_verification() {
    let started = Instant::now();
    let w = window();
    let phi = Diffeo::bump(0.05, 0.5, 0.3).unwrap();
    let func = Functional::exp_neg_mass(Window::interval(0.2, 0.8).unwrap(), 1.0);
    let opts = VerifyOptions::new(1e-6, 505, 30_000);
    let mut pass = true;
    let mut detail = String::new();
    for (name, model) in [("power", power_model()), ("log", log_model())] {
        let r = verify_diffeo(&model, &w, &phi, &func, &opts).unwrap();
        pass &= r.pass;
        detail.push_str(&format!("{name}: z={:.2}; ", r.z));
    }
    let gamma_err = verify_diffeo(&gamma_model(), &w, &phi, &func, &opts);
    let gated = matches!(gamma_err, Err(CrmError::IntegrabilityViolation(_)));
    pass &= gated;
    detail.push_str(&format!("gamma rejected={gated}"));
    report(5, "diffeomorphism verification", pass, started, &detail);
}

#[test]
fn criterion_6_hellinger_diagnosis() {
    let started = Instant::now();
    let w = window();
    let phi = Diffeo::bump(0.05, 0.5, 0.3).unwrap();
    let gamma = diagnose_diffeo_qi(&gamma_model(), &w, &phi).unwrap();
    let slope_sig = gamma.fitted_log_slope > 10.0 * gamma.fitted_log_slope_se;
    let pow = diagnose_diffeo_qi(&power_model(), &w, &phi).unwrap();
    let log = diagnose_diffeo_qi(&log_model(), &w, &phi).unwrap();
    let pass = gamma.verdict == QiVerdict::Diverges
        && slope_sig
        && pow.verdict == QiVerdict::Converges
        && log.verdict == QiVerdict::Converges;
    report(
        6,
        "hellinger ladder",
        pass,
        started,
        &format!(
            "gamma slope {:.4}±{:.1e} ({:?}); power {:?}; log {:?}",
            gamma.fitted_log_slope, gamma.fitted_log_slope_se, gamma.verdict, pow.verdict, log.verdict
        ),
    );
}

#[test]
fn criterion_7_semidirect_product() {
    let started = Instant::now();
    let model = power_model();
    let w = window();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = CounterRng::stream(707, i);
        let theta =
            Current::bump(unif(&mut rng, -1.0, 1.0), unif(&mut rng, 0.3, 0.7), unif(&mut rng, 0.15, 0.35))
                .unwrap();
        let phi =
            Diffeo::bump(unif(&mut rng, -0.05, 0.05), unif(&mut rng, 0.4, 0.6), unif(&mut rng, 0.15, 0.3))
                .unwrap();
        let eta = random_measure(&mut rng, 6);
        let g = GroupElement { phi: phi.clone(), theta: theta.clone() };
        let joint = semidirect_log_density(&model, &w, &g, &eta).unwrap();
        let scaled = scale_weights_inverse(&theta, &eta).unwrap();
        let part_d = diffeo_log_density(&model, &w, &phi, &scaled).unwrap();
        let part_c = current_log_density(&model, &w, &theta, &eta).unwrap();
        worst = worst.max((joint.log_value() - part_d.log_value() - part_c.log_value()).abs());
    }
    let g = GroupElement {
        phi: Diffeo::bump(0.05, 0.5, 0.3).unwrap(),
        theta: Current::bump(0.6, 0.5, 0.3).unwrap(),
    };
    let func = Functional::exp_neg_mass(Window::interval(0.2, 0.8).unwrap(), 1.0);
    let opts = VerifyOptions::new(1e-6, 770, 30_000);
    let r = verify_semidirect(&model, &w, &g, &func, &opts).unwrap();
    let pass = worst < 1e-10 && r.pass;
    report(
        7,
        "semidirect product",
        pass,
        started,
        &format!("max factorization gap {worst:.2e}; verify z={:.2}", r.z),
    );
}

#[test]
fn criterion_8_partial_quasi_invariance() {
    let started = Instant::now();
    let model = gamma_model();
    let w = window();
    let g = GroupElement {
        phi: Diffeo::bump(0.05, 0.5, 0.3).unwrap(),
        theta: Current::bump(0.4, 0.5, 0.3).unwrap(),
    };
    let mut pass = true;
    let mut detail = String::new();
    for n in [2u32, 4, 8] {
        let func = Functional {
            kind: FunctionalKind::ExpNegMass,
            region: Window::interval(0.2, 0.8).unwrap(),
            t: 1.0,
            level: Some(n),
        };
        let opts = VerifyOptions::new(1e-6, 808 + n as u64, 100_000);
        let r = verify_partial(&model, &w, &g, &func, &opts).unwrap();
        pass &= r.pass;
        detail.push_str(&format!("n={n}: z={:.2}; ", r.z));
    }
    report(8, "partial quasi-invariance", pass, started, &detail);
}

#[test]
fn criterion_9_structural_invariants() {
    let started = Instant::now();
    let w = window();
    let model = gamma_model();
    let mut pass = true;
    let mut notes = Vec::new();

    // Group axioms: g g^{-1} acts as the identity, composition associates.
    let g1 = GroupElement {
        phi: Diffeo::bump(0.04, 0.45, 0.3).unwrap(),
        theta: Current::bump(0.7, 0.5, 0.3).unwrap(),
    };
    let g2 = GroupElement {
        phi: Diffeo::bump(-0.03, 0.55, 0.25).unwrap(),
        theta: Current::bump(-0.5, 0.4, 0.2).unwrap(),
    };
    let mut axiom_gap = 0.0f64;
    for k in 0..50 {
        let x = 0.01 + 0.98 * k as f64 / 49.0;
        let e = g1.compose(&g1.inverse());
        axiom_gap = axiom_gap
            .max((e.phi.forward(x) - x).abs())
            .max((e.theta.eval(x) - 1.0).abs());
        let a = g1.compose(&g2).compose(&g1);
        let b = g1.compose(&g2.compose(&g1));
        axiom_gap = axiom_gap
            .max((a.phi.forward(x) - b.phi.forward(x)).abs())
            .max((a.theta.eval(x) - b.theta.eval(x)).abs());
    }
    if axiom_gap >= 1e-10 {
        pass = false;
        notes.push(format!("group axiom gap {axiom_gap:.2e}"));
    }

    // Pinpointing round trip is exact.
    let mut rng = CounterRng::stream(909, 0);
    let eta = random_measure(&mut rng, 8);
    let round = r_map(&r_inverse(&eta)).unwrap();
    if round != eta {
        pass = false;
        notes.push("pinpointing round trip differs".into());
    }

    // Identity elements give log-density exactly zero.
    let e_eta = random_measure(&mut rng, 5);
    let id_current = current_log_density(&model, &w, &Current::identity(), &e_eta).unwrap();
    let id_diffeo = diffeo_log_density(&power_model(), &w, &Diffeo::Identity, &e_eta).unwrap();
    let id_group = GroupElement::identity();
    let id_semi = semidirect_log_density(&power_model(), &w, &id_group, &e_eta).unwrap();
    let (id_part, _) = partial_log_density(&model, &w, &id_group, &e_eta, 4).unwrap();
    for (what, v) in [
        ("current", id_current.log_value()),
        ("diffeo", id_diffeo.log_value()),
        ("semidirect", id_semi.log_value()),
        ("partial", id_part.log_value()),
    ] {
        if v != 0.0 {
            pass = false;
            notes.push(format!("identity {what} log-density {v}"));
        }
    }

    // The scale-invariant exponential integral against its quadrature.
    for u in [-0.9, -0.5, 0.5, 1.0, 10.0] {
        let gap = (frullani(u).unwrap() - frullani_quadrature(u).unwrap()).abs();
        if gap >= 1e-8 {
            pass = false;
            notes.push(format!("frullani gap {gap:.2e} at u={u}"));
        }
    }

    // E1 sanity at a classical point: E1(1) = 0.21938...
    let e1 = exp_integral_e1(1.0).unwrap();
    if (e1 - 0.219_383_934_395_520_27).abs() >= 1e-12 {
        pass = false;
        notes.push(format!("E1(1)={e1}"));
    }

    // Poisson sampler against a chi-square goodness-of-fit.
    let mut prng = CounterRng::stream(911, 0);
    let counts: Vec<u64> = (0..5000).map(|_| prng.poisson(7.0)).collect();
    let chi = chi_square_poisson_test(&counts, 7.0).unwrap();
    if chi.p_value < 1e-3 {
        pass = false;
        notes.push(format!("poisson chi-square p={:.4}", chi.p_value));
    }

    report(9, "structural invariants", pass, started, &notes.join("; "));
}
