//! Acceptance battery: thirteen numbered end-to-end checks with pinned
//! tolerances, each reporting pass/fail together with what it measured.
//!
//! Checks either pass or fail with honest numbers. The discrete-relaxation
//! check carries a `known_limit` flag for the sub-gates whose shortfall is a
//! recorded property of the truncated system at the pinned sizes (the
//! truncation tail outruns the relaxation before the pinned times); the flag
//! never hides the FAIL, it only marks it as analyzed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mergesplit::discrete::{
    init_powerlaw, integrate, moments, rescaled_transform_error, DiscreteState, IntegrateControls,
};
use mergesplit::evolution::{
    comparison_test, decomposition_check, evolve, evolve_extrapolated, m0_logistic,
    rescaled_error,
};
use mergesplit::grid::{hardy_norm_probe, GridFunction};
use mergesplit::params::{alphahat_of_beta, eigen_residuals, ProfileParams};
use mergesplit::profile::{shoot, ProfileCurve, ProfileEvaluator, ShootConfig};
use mergesplit::series::coefficients;
use mergesplit::transforms::{
    invert_profile, mixing_density, subordinate, tail_exponent_fit, tail_prefactor, StableKernel,
};

pub const CRITERIA: usize = 13;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    /// The failure matches the recorded scale analysis for these parameters.
    pub known_limit: bool,
    pub measured: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let verdict = if self.passed {
            "PASS"
        } else if self.known_limit {
            "FAIL (known limit)"
        } else {
            "FAIL"
        };
        format!(
            "criterion {:>2} {:<24} {} ({}) [{:.2}s]",
            self.index, self.name, verdict, self.measured, self.seconds
        )
    }
}

struct Outcome {
    passed: bool,
    known_limit: bool,
    measured: String,
}

fn ok(passed: bool, measured: String) -> Result<Outcome, String> {
    Ok(Outcome {
        passed,
        known_limit: false,
        measured,
    })
}

pub fn criterion_name(index: usize) -> &'static str {
    match index {
        1 => "parameter-identities",
        2 => "fuss-catalan-limit",
        3 => "series-radius-bounds",
        4 => "profile-cross-route",
        5 => "self-similar-orbit",
        6 => "power-data-relaxation",
        7 => "order-preservation",
        8 => "decomposition-identity",
        9 => "discrete-relaxation",
        10 => "size-density-tails",
        11 => "stable-kernel",
        12 => "route-agreement",
        13 => "averaging-norm-bound",
        _ => "unknown",
    }
}

pub fn run(index: usize, seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = match index {
        1 => c01_parameter_identities(seed),
        2 => c02_fuss_catalan(),
        3 => c03_radius_bounds(seed),
        4 => c04_profile_cross_route(),
        5 => c05_self_similar_orbit(),
        6 => c06_power_data_relaxation(),
        7 => c07_order_preservation(seed),
        8 => c08_decomposition(),
        9 => c09_discrete_relaxation(seed),
        10 => c10_size_density_tails(),
        11 => c11_stable_kernel(),
        12 => c12_route_agreement(),
        13 => c13_averaging_norm(seed),
        _ => Err(format!("no criterion {index}")),
    };
    let outcome = outcome.unwrap_or_else(|msg| Outcome {
        passed: false,
        known_limit: false,
        measured: format!("did not run: {msg}"),
    });
    CriterionReport {
        index,
        name: criterion_name(index),
        passed: outcome.passed,
        known_limit: outcome.known_limit,
        measured: outcome.measured,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    (1..=CRITERIA).map(|i| run(i, seed)).collect()
}

/// Sub-minute subset: algebraic identities, the integer-series limit, and
/// the number-density closed form.
pub fn run_quick(seed: u64) -> Vec<CriterionReport> {
    let mut out = vec![run(1, seed), run(2, seed)];
    let start = Instant::now();
    let outcome = quick_m0_logistic().unwrap_or_else(|msg| Outcome {
        passed: false,
        known_limit: false,
        measured: format!("did not run: {msg}"),
    });
    out.push(CriterionReport {
        index: 0,
        name: "m0-logistic",
        passed: outcome.passed,
        known_limit: false,
        measured: outcome.measured,
        seconds: start.elapsed().as_secs_f64(),
    });
    out
}

fn err_str<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c01_parameter_identities(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let alpha = rng.gen_range(1e-6..1.0 - 1e-6);
        let p = ProfileParams::new(alpha, 1.0).map_err(err_str)?;
        let (r1, r2) = eigen_residuals(&p);
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    let at_zero = alphahat_of_beta(0.0).map_err(err_str)?;
    let gap = (at_zero - 1.0 / 3.0).abs();
    let passed = worst < 1e-12 && gap < 1e-15;
    ok(
        passed,
        format!("worst eigen residual {worst:.2e} over 1000 draws; alpha_hat(0) off by {gap:.1e}"),
    )
}

/// binom(3n+1, n) / (3n+1) in exact integer arithmetic; n <= 30 fits u128.
fn fuss_catalan(n: u64) -> u128 {
    let mut b: u128 = 1;
    for i in 0..n {
        b = b * (3 * n + 1 - i) as u128 / (i + 1) as u128;
    }
    assert!(b % (3 * n + 1) as u128 == 0);
    b / (3 * n + 1) as u128
}

fn c02_fuss_catalan() -> Result<Outcome, String> {
    // The recursion at the integer endpoint: a_n = (n-1)/(n+1), so
    // c_n = (n+1)/(n-1) * sum c_k c_{n-k} stays an exact integer.
    let mut c: Vec<u128> = vec![1];
    for n in 2..=30u128 {
        let sum: u128 = (1..n).map(|k| c[k as usize - 1] * c[(n - k) as usize - 1]).sum();
        let num = sum * (n + 1);
        if num % (n - 1) != 0 {
            return ok(false, format!("recursion left the integers at n = {n}"));
        }
        c.push(num / (n - 1));
    }
    for (i, &cn) in c.iter().enumerate() {
        if cn != fuss_catalan(i as u64 + 1) {
            return ok(false, format!("integer mismatch at n = {}", i + 1));
        }
    }
    let data = coefficients(1.0, 30).map_err(err_str)?;
    let mut worst = 0.0_f64;
    for (i, &cn) in c.iter().enumerate() {
        let want = cn as f64;
        worst = worst.max((data.c(i + 1) - want).abs() / want);
    }
    ok(
        worst <= 1e-12,
        format!("30 integer terms exact; float recursion drift {worst:.1e}"),
    )
}

fn c03_radius_bounds(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x03);
    let mut passed = true;
    let mut margin = f64::INFINITY;
    for _ in 0..20 {
        let alpha = rng.gen_range(0.05..0.95);
        let data = coefficients(alpha, 140).map_err(err_str)?;
        let radius = data.ratio_fit().map_err(err_str)?.radius;
        let lb = (1.0 - alpha) / (1.0 + alpha);
        let ub = data.a(2);
        passed &= radius >= lb && radius <= ub;
        margin = margin.min((radius - lb).min(ub - radius) / radius);
    }
    ok(
        passed,
        format!("20 draws inside the bracket; slimmest relative margin {margin:.2e}"),
    )
}

fn profile_pipeline(alpha: f64) -> Result<(ProfileCurve, ProfileEvaluator), String> {
    let series = coefficients(alpha, 120).map_err(err_str)?;
    let mut curve = shoot(alpha, &ShootConfig::default())
        .map_err(err_str)?
        .normalize(&series)
        .map_err(err_str)?;
    curve.fit_tail().map_err(err_str)?;
    let evaluator = ProfileEvaluator::new(curve.clone(), series).map_err(err_str)?;
    Ok((curve, evaluator))
}

fn c04_profile_cross_route() -> Result<Outcome, String> {
    let mut passed = true;
    let mut notes = Vec::new();
    for alpha in [0.3, 0.5, 0.8] {
        let (curve, evaluator) = profile_pipeline(alpha)?;
        let residual = curve.residual();
        // Sup of the relative series/ODE gap over four decades of w = z^alpha
        // ending at half the estimated radius.
        let series = evaluator.series();
        let w_hi = 0.5 * series.radius_est;
        let mut sup_rel = 0.0_f64;
        for i in 0..=200 {
            let w = w_hi * 10f64.powf(-4.0 * (1.0 - i as f64 / 200.0));
            let z = w.powf(1.0 / alpha);
            let tau = z.ln();
            if tau < curve.tau_grid[0] || tau > *curve.tau_grid.last().unwrap() {
                continue;
            }
            let from_series = series.eval_series(z).map_err(err_str)?.value;
            let from_ode = curve.u_at_tau(tau).map_err(err_str)?;
            sup_rel = sup_rel.max((from_series - from_ode).abs() / from_series);
        }
        // fit_tail already enforced the tail slope within 1% of its target.
        passed &= sup_rel < 1e-6 && residual < 1e-8;
        notes.push(format!(
            "alpha {alpha}: gap {sup_rel:.1e}, residual {residual:.1e}"
        ));
    }
    ok(passed, notes.join("; "))
}

fn c05_self_similar_orbit() -> Result<Outcome, String> {
    let alpha = 0.5;
    let (_, evaluator) = profile_pipeline(alpha)?;
    let mut errs = Vec::new();
    for (per_decade, dt) in [(40usize, 2e-4), (80, 1e-4)] {
        let u0 = GridFunction::sample(1e-8, 1e8, per_decade, alpha, |s| {
            evaluator.u(s).unwrap()
        })
        .map_err(err_str)?;
        let states = evolve(&u0, 1.0, 1.0, dt, &[]).map_err(err_str)?;
        let err = rescaled_error(states.last().unwrap(), evaluator.curve(), (0.1, 10.0))
            .map_err(err_str)?;
        errs.push(err);
    }
    let ratio = errs[1] / errs[0];
    let passed = errs[0] < 1e-4 && ratio < 0.65;
    ok(
        passed,
        format!(
            "orbit error {:.2e}, refined {:.2e}, ratio {ratio:.2}",
            errs[0], errs[1]
        ),
    )
}

/// The error must fall strictly while above the 1e-3 target scale and stay
/// below it afterwards: once the sequence reaches the discretization floor
/// (second order in the grid, reached near t = 10 at this resolution) its
/// wiggles carry no information about the continuum dynamics.
fn c06_power_data_relaxation() -> Result<Outcome, String> {
    let alpha = 0.5;
    let target = 1e-3;
    let (curve, _) = profile_pipeline(alpha)?;
    let u0 = GridFunction::sample(1e-10, 1e10, 40, alpha, |s| s.powf(alpha)).map_err(err_str)?;
    let m0 = 1e10f64.powf(alpha);
    let snaps: Vec<f64> = (1..10).map(|k| 2.0 * k as f64).collect();
    let states = evolve_extrapolated(&u0, m0, 20.0, 1e-3, &snaps).map_err(err_str)?;
    let mut errs = Vec::new();
    for state in &states {
        errs.push(rescaled_error(state, &curve, (0.1, 10.0)).map_err(err_str)?);
    }
    let mut decreasing = true;
    for w in errs.windows(2) {
        if w[0] >= target {
            decreasing &= w[1] < w[0];
        } else {
            decreasing &= w[1] < target;
        }
    }
    let last = *errs.last().unwrap();
    ok(
        decreasing && last < target,
        format!(
            "error {:.2} -> {last:.2e} over t in [0, 20], decreasing to below {target:.0e}: {decreasing}",
            errs[0]
        ),
    )
}

fn c07_order_preservation(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x07);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let mut lo = GridFunction::zeros(1e-5, 1e5, 15, 1.0).map_err(err_str)?;
        let mut hi = lo.clone();
        let mut a = 0.0_f64;
        let mut b = 0.0_f64;
        for k in 0..lo.len() {
            a += rng.gen_range(0.0..0.02);
            b += rng.gen_range(0.0..0.01);
            lo.values[k] = a;
            hi.values[k] = a + b;
        }
        let report =
            comparison_test(&hi, a + b + 0.1, &lo, a, 10.0, 2e-3).map_err(err_str)?;
        worst = worst.min(report.min_gap);
    }
    ok(
        worst >= -1e-12,
        format!("smallest ordered gap {worst:.1e} over 50 pairs, t in [0, 10]"),
    )
}

fn c08_decomposition() -> Result<Outcome, String> {
    let mut passed = true;
    let mut notes = Vec::new();
    for alpha in [0.3, 0.5, 0.8] {
        let v0 = GridFunction::sample(1e-4, 1e4, 40, 1.0, |s| s).map_err(err_str)?;
        let sup = decomposition_check(alpha, &v0, 5.0, 1e-3).map_err(err_str)?;
        passed &= sup < 1e-6;
        notes.push(format!("alpha {alpha}: sup {sup:.1e}"));
    }
    ok(passed, notes.join("; "))
}

/// Literal rate sums over ordered pairs, the reference for the N = 20 gate.
fn brute_rhs(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let get = |i: usize| f[i - 1];
    let mut df = vec![0.0; n];
    for i in 1..=n {
        let mut acc = 0.0;
        for j in 1..i {
            acc += get(j) * get(i - j);
        }
        let mut loss = 0.0;
        for j in 1..=n {
            loss += get(j);
        }
        let mut gain_split = 0.0;
        for j in 1..=(n - i) {
            gain_split += 2.0 / (i + j + 1) as f64 * get(i + j);
        }
        let mut loss_split = 0.0;
        for _ in 1..i {
            loss_split += 0.5 * 2.0 / (i + 1) as f64;
        }
        df[i - 1] = acc - 2.0 * loss * get(i) + gain_split - loss_split * get(i);
    }
    df
}

fn c09_discrete_relaxation(seed: u64) -> Result<Outcome, String> {
    // Structural gate 1: the adaptive pipeline against literal sums + RK4.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x09);
    let f0: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..0.5)).collect();
    let mut f = f0.clone();
    let h = 1e-3;
    for _ in 0..2000 {
        let k1 = brute_rhs(&f);
        let mid1: Vec<f64> = f.iter().zip(&k1).map(|(y, k)| y + 0.5 * h * k).collect();
        let k2 = brute_rhs(&mid1);
        let mid2: Vec<f64> = f.iter().zip(&k2).map(|(y, k)| y + 0.5 * h * k).collect();
        let k3 = brute_rhs(&mid2);
        let end: Vec<f64> = f.iter().zip(&k3).map(|(y, k)| y + h * k).collect();
        let k4 = brute_rhs(&end);
        for i in 0..f.len() {
            f[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let state0 = DiscreteState::from_densities(f0, 0.0).map_err(err_str)?;
    let controls = IntegrateControls {
        rtol: 1e-10,
        snapshot_times: Vec::new(),
    };
    let fast = integrate(&state0, 2.0, &controls).map_err(err_str)?;
    let fast = &fast.last().unwrap().f;
    let oracle_gap = f
        .iter()
        .zip(fast)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);

    // The pinned large run.
    let (curve, _) = profile_pipeline(0.5)?;
    let state0 = init_powerlaw(0.5, 1.0, 100_000).map_err(err_str)?;
    let snaps: Vec<f64> = (1..=10).map(f64::from).chain([12.0]).collect();
    let controls = IntegrateControls {
        rtol: 1e-6,
        snapshot_times: snaps,
    };
    let states = integrate(&state0, 15.0, &controls).map_err(err_str)?;

    let mut bound_ok = true;
    for state in &states {
        if state.time > 0.0 {
            let (m0, _) = moments(&state.f);
            bound_ok &= m0 <= 1.0 / (1.0 - (-state.time).exp()) + 1e-12;
        }
    }
    // The rescaled window slides inside the truncation scale 1/N near
    // t = 10.4, so the t = 12 reading does not exist at this size; the
    // measurable snapshots are reported and the gate records the loss.
    let mut errs: Vec<(f64, f64)> = Vec::new();
    let mut window_died_at = None;
    for state in &states {
        if state.time >= 1.0 && state.time <= 12.0 {
            match rescaled_transform_error(state, &curve, 1.0) {
                Ok(err) => errs.push((state.time, err)),
                Err(mergesplit::Error::WindowTooSmall(_)) => {
                    window_died_at = window_died_at.or(Some(state.time));
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    let decreasing = errs.windows(2).all(|w| w[1].1 < w[0].1);
    let (t_min, err_min) = errs
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let relaxed_first = errs
        .iter()
        .take_while(|&&(t, _)| t <= t_min)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1].1 < w[0].1);
    let (_, err_last) = *errs.last().unwrap();
    let (m0_final, _) = moments(&states.last().unwrap().f);
    let m0_gap = (m0_final - 1.0).abs();

    let oracle_ok = oracle_gap < 1e-10;
    let relax_ok = decreasing && window_died_at.is_none() && err_last < 5e-2;
    let m0_ok = m0_gap < 1e-3;
    let passed = oracle_ok && bound_ok && relax_ok && m0_ok;
    // At N = 1e5 the truncation tail overtakes the relaxation long before
    // t = 12, so the late readings rise and the t = 15 number density stays
    // short of 1; that shortfall is the analyzed, expected outcome. The
    // structural gates must hold, and the error must still have relaxed
    // below the target while the window could see the profile.
    let known_limit =
        !passed && oracle_ok && bound_ok && relaxed_first && err_min < 5e-2;
    let window_note = match window_died_at {
        Some(t) => format!("window lost to truncation at t = {t}"),
        None => "window held to t = 12".into(),
    };
    Ok(Outcome {
        passed,
        known_limit,
        measured: format!(
            "N=20 oracle gap {oracle_gap:.1e}; m0 bound {bound_ok}; \
             err min {err_min:.2e} at t = {t_min}, then truncation-driven rise \
             to {err_last:.2} ({window_note}); |m0(15)-1| {m0_gap:.2}"
        ),
    })
}

fn c10_size_density_tails() -> Result<Outcome, String> {
    let alpha = 0.5;
    let (_, evaluator) = profile_pipeline(alpha)?;
    let alpha_hat = evaluator.params().alpha_hat;
    let x_grid = GridFunction::zeros(1e-7, 1e5, 20, 0.0).map_err(err_str)?;
    let sample = invert_profile(&evaluator, &x_grid).map_err(err_str)?;

    let (slope_small, _) = tail_exponent_fit(&sample.grid, (1e-7, 1e-5)).map_err(err_str)?;
    let (slope_large, _) = tail_exponent_fit(&sample.grid, (1e2, 1e5)).map_err(err_str)?;
    let small_ok = (slope_small - (alpha_hat - 1.0)).abs() < 0.05;
    let large_ok = (slope_large + 1.0 + alpha).abs() < 0.05;

    // Prefactor with the exponent pinned: geometric mean of f(x) x^{1+alpha}
    // over the window, immune to slope-amplitude tradeoff in the free fit.
    let mut ln_sum = 0.0;
    let mut count = 0.0;
    for k in 0..sample.grid.len() {
        let x = sample.grid.s(k);
        if (1e2..=1e5).contains(&x) {
            ln_sum += (sample.grid.values[k] * x.powf(1.0 + alpha)).ln();
            count += 1.0;
        }
    }
    let prefactor = (ln_sum / count).exp();
    let want = alpha / libm::tgamma(1.0 - alpha);
    let pref_ok = (prefactor / want - 1.0).abs() < 0.05;

    ok(
        small_ok && large_ok && pref_ok,
        format!(
            "exponents {slope_small:.3} (want {:.3}), {slope_large:.3} (want {:.3}); \
             tail prefactor {prefactor:.4} vs {want:.4}",
            alpha_hat - 1.0,
            -(1.0 + alpha)
        ),
    )
}

fn c11_stable_kernel() -> Result<Outcome, String> {
    let kernel = StableKernel::new(0.5).map_err(err_str)?;
    let mut sup_rel = 0.0_f64;
    for i in 0..=90 {
        let x = 0.5 + 0.05 * i as f64;
        let closed = 0.5 / std::f64::consts::PI.sqrt() * x.powf(-1.5) * (-0.25 / x).exp();
        let got = kernel.density(x).map_err(err_str)?;
        sup_rel = sup_rel.max((got / closed - 1.0).abs());
    }
    let x_far = 1e5;
    let tail = kernel.density(x_far).map_err(err_str)? * x_far.powf(1.5);
    let tail_rel = (tail / tail_prefactor(0.5) - 1.0).abs();
    ok(
        sup_rel < 1e-8 && tail_rel < 1e-4,
        format!("closed-form gap {sup_rel:.1e} on [0.5, 5]; tail prefactor off by {tail_rel:.1e}"),
    )
}

fn c12_route_agreement() -> Result<Outcome, String> {
    let alpha = 0.5;
    let (_, evaluator) = profile_pipeline(alpha)?;
    let x_grid = GridFunction::zeros(0.1, 10.0, 24, 0.0).map_err(err_str)?;
    let direct = invert_profile(&evaluator, &x_grid).map_err(err_str)?;

    let tau_grid = GridFunction::zeros(1e-4, 16.0, 24, 0.0).map_err(err_str)?;
    let g = mixing_density(&evaluator, &tau_grid).map_err(err_str)?;
    let kernel = StableKernel::new(alpha).map_err(err_str)?;
    let (routed, info) = subordinate(&g, &kernel, &x_grid).map_err(err_str)?;

    let mut worst = 0.0_f64;
    for k in 0..x_grid.len() {
        worst = worst.max((routed.grid.values[k] / direct.grid.values[k] - 1.0).abs());
    }
    ok(
        worst < 1e-3 && !info.truncation_warning,
        format!(
            "routes within {worst:.1e} on [0.1, 10]; endpoint fractions {:.1e}/{:.1e}",
            info.head_fraction, info.tail_fraction
        ),
    )
}

fn c13_averaging_norm(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x13);
    let mut samples = Vec::new();
    for _ in 0..1000 {
        let lam: f64 = rng.gen_range(0.0..2.0);
        let mut g = GridFunction::zeros(1e-5, 1e5, 20, lam).map_err(err_str)?;
        let mut val: f64 = rng.gen_range(0.0..1.0);
        for k in 0..g.len() {
            g.values[k] = val;
            val = (val + rng.gen_range(-0.3..0.3)).max(0.0);
        }
        if g.values.iter().all(|&v| v == 0.0) {
            g.values[0] = 1.0;
        }
        samples.push(g);
    }
    let ratio = hardy_norm_probe(&samples).map_err(err_str)?;
    ok(
        ratio <= 2.01,
        format!("max averaging ratio {ratio:.4} over 1000 samples"),
    )
}

fn quick_m0_logistic() -> Result<Outcome, String> {
    let dt = 1e-3;
    let u0 = GridFunction::sample(1e-2, 1e2, 10, 0.0, |_| 0.0).map_err(err_str)?;
    let states = evolve(&u0, 2.0, 5.0, dt, &[]).map_err(err_str)?;
    let got = states.last().unwrap().m0;
    let want = m0_logistic(2.0, 5.0);
    let gap = (got - want).abs();
    // First-order stepping: the recorded bound is 8 dt on this run.
    ok(
        gap < 8.0 * dt,
        format!("m0(5) = {got:.7} vs logistic {want:.7}, gap {gap:.1e}"),
    )
}
