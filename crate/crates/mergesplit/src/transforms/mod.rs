//! Physical-space densities recovered from transform-side data.
//!
//! The profile u lives on the transform side; the cluster-size density it
//! encodes is reached two ways. Directly: Gaver-Stehfest inversion of 1 - u.
//! Indirectly: invert the coarse-variable profile to a mixing density g and
//! push it through the one-sided stable kernel,
//!   f(x) = Int g(tau) p(x tau^{-1/a}) tau^{-1/a} dtau.
//! The two routes share no quadrature, so their agreement is a working check
//! on every piece at once. Tail fits and a divided-difference monotonicity
//! probe qualify the results.

pub mod laplace;
pub mod stable;

pub use laplace::{gaver_stehfest, invert_adaptive, stehfest_weights};
pub use stable::{tail_prefactor, StableKernel};

use crate::grid::GridFunction;
use crate::profile::ProfileEvaluator;
use crate::{Error, Result};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Inversion,
    Subordination,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Inversion => "inversion",
            Provenance::Subordination => "subordination",
        }
    }
}

/// A density sampled on a geometric grid, tagged with how it was produced.
#[derive(Debug, Clone)]
pub struct DensitySample {
    pub grid: GridFunction,
    pub provenance: Provenance,
    /// Worst relative uncertainty seen while producing the sample.
    pub err_estimate: f64,
}

impl DensitySample {
    pub fn from_parts(grid: GridFunction, provenance: Provenance) -> Result<Self> {
        for k in 0..grid.len() {
            let v = grid.values[k];
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "density sample must be positive and finite, found {v} at x = {}",
                    grid.s(k)
                )));
            }
        }
        Ok(Self { grid, provenance, err_estimate: 0.0 })
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f", "route"]).map_err(csv_io)?;
        for k in 0..self.grid.len() {
            w.write_record([
                format!("{:.17e}", self.grid.s(k)),
                format!("{:.17e}", self.grid.values[k]),
                self.provenance.label().to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Recovers the cluster-size density from the profile by real-axis Laplace
/// inversion of 1 - u at every node of `x_grid`.
pub fn invert_profile(
    evaluator: &ProfileEvaluator,
    x_grid: &GridFunction,
) -> Result<DensitySample> {
    invert_on_grid(&mut |z| evaluator.gap(z), x_grid)
}

/// Recovers the mixing density g, whose transform is 1 - u(sigma^{1/alpha}),
/// by the same inversion. Pushing g through the stable kernel of the matching
/// order reproduces the cluster-size density.
pub fn mixing_density(
    evaluator: &ProfileEvaluator,
    tau_grid: &GridFunction,
) -> Result<DensitySample> {
    let inv_alpha = 1.0 / evaluator.params().alpha;
    invert_on_grid(&mut |sigma| evaluator.gap(sigma.powf(inv_alpha)), tau_grid)
}

fn invert_on_grid<F: FnMut(f64) -> Result<f64>>(
    transform: &mut F,
    x_grid: &GridFunction,
) -> Result<DensitySample> {
    let mut values = vec![0.0; x_grid.len()];
    let mut worst = 0.0_f64;
    for (k, slot) in values.iter_mut().enumerate() {
        let x = x_grid.s(k);
        let (value, est) = laplace::invert_adaptive(transform, x)?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!(
                "inversion produced a nonpositive density {value} at x = {x}"
            )));
        }
        worst = worst.max(est / value);
        *slot = value;
    }
    check_decreasing(x_grid, &values)?;
    Ok(DensitySample {
        grid: x_grid.with_values(values),
        provenance: Provenance::Inversion,
        err_estimate: worst,
    })
}

fn check_decreasing(grid: &GridFunction, values: &[f64]) -> Result<()> {
    for k in 1..values.len() {
        let rise = values[k] - values[k - 1];
        if rise > 1e-4 * values[k - 1].abs() {
            return Err(Error::Oscillation {
                rel: rise / values[k - 1].abs(),
                x: grid.s(k),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    Exponential { rate: f64 },
    Algebraic { exponent: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SubordinationInfo {
    /// Largest share the left endpoint closure contributed at any x.
    pub head_fraction: f64,
    /// Largest share the fitted tail remainder contributed at any x.
    pub tail_fraction: f64,
    pub tail_model: TailModel,
    /// Set when an endpoint contribution tops 1e-4 of the integral, meaning
    /// the mixing grid does not really contain the mass the output needs.
    pub truncation_warning: bool,
}

/// Pushes a mixing density through the stable kernel on a fixed x grid.
pub fn subordinate(
    g: &DensitySample,
    kernel: &StableKernel,
    x_grid: &GridFunction,
) -> Result<(DensitySample, SubordinationInfo)> {
    let tau = &g.grid;
    let n = tau.len();
    if n < 16 {
        return Err(Error::Domain(
            "subordination needs a resolved mixing density, got fewer than 16 nodes".into(),
        ));
    }
    for k in 0..n {
        if !(tau.values[k] > 0.0 && tau.values[k].is_finite()) {
            return Err(Error::Domain(format!(
                "mixing density must be positive, found {} at tau = {}",
                tau.values[k],
                tau.s(k)
            )));
        }
    }
    let tail_model = fit_tail_model(tau)?;
    let inv_alpha = 1.0 / kernel.alpha();
    let mut values = vec![0.0; x_grid.len()];
    let mut head_fraction = 0.0_f64;
    let mut tail_fraction = 0.0_f64;
    let mut psi = vec![0.0; n];
    for (i, slot) in values.iter_mut().enumerate() {
        let x = x_grid.s(i);
        for (j, p) in psi.iter_mut().enumerate() {
            let t = tau.s(j);
            let scale = t.powf(-inv_alpha);
            *p = tau.values[j] * kernel.density(x * scale)? * scale;
        }
        let main = simpson_log(tau, &psi);
        let head = head_closure(tau, &psi);
        let tail = tail_closure(tau, &psi, &tail_model);
        let total = main + head + tail;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Domain(format!(
                "subordination integral came out nonpositive at x = {x}"
            )));
        }
        head_fraction = head_fraction.max(head / total);
        tail_fraction = tail_fraction.max(tail / total);
        *slot = total;
    }
    check_decreasing(x_grid, &values)?;
    let info = SubordinationInfo {
        head_fraction,
        tail_fraction,
        tail_model,
        truncation_warning: head_fraction > 1e-4 || tail_fraction > 1e-4,
    };
    Ok((
        DensitySample {
            grid: x_grid.with_values(values),
            provenance: Provenance::Subordination,
            err_estimate: head_fraction.max(tail_fraction),
        },
        info,
    ))
}

/// Composite Simpson in ln s over the sample nodes; a leftover interval is
/// closed with the trapezoid rule.
fn simpson_log(grid: &GridFunction, vals: &[f64]) -> f64 {
    let n = grid.len();
    let h = grid.ratio().ln();
    let w = |j: usize| vals[j] * grid.s(j);
    let mut acc = 0.0;
    let mut j = 0;
    while j + 2 < n {
        acc += h / 3.0 * (w(j) + 4.0 * w(j + 1) + w(j + 2));
        j += 2;
    }
    if j + 1 < n {
        acc += h / 2.0 * (w(j) + w(j + 1));
    }
    acc
}

/// Closes the integral below the first node with the measured power of the
/// integrand itself. A kernel that has already underflowed there leaves
/// nothing to close.
fn head_closure(grid: &GridFunction, psi: &[f64]) -> f64 {
    let m = 4.min(psi.len());
    if psi[..m].iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    let xs: Vec<f64> = (0..m).map(|j| grid.s(j).ln()).collect();
    let ys: Vec<f64> = psi[..m].iter().map(|v| v.ln()).collect();
    let (slope, _, _) = least_squares(&xs, &ys);
    psi[0] * grid.s(0) / (1.0 + slope.max(-0.9))
}

fn tail_closure(grid: &GridFunction, psi: &[f64], model: &TailModel) -> f64 {
    let k = psi.len() - 1;
    if psi[k] <= 0.0 {
        return 0.0;
    }
    match model {
        TailModel::Exponential { rate } => psi[k] / rate,
        TailModel::Algebraic { exponent } => {
            psi[k] * grid.s(k) / (exponent - 1.0).max(0.01)
        }
    }
}

/// Fits the last decade of the mixing density, keeping whichever of the
/// exponential and algebraic decay models leaves the smaller residual.
fn fit_tail_model(tau: &GridFunction) -> Result<TailModel> {
    let lo = tau.s_max() / 10.0 * (1.0 - 1e-12);
    let mut ts = Vec::new();
    let mut lns = Vec::new();
    let mut lts = Vec::new();
    for k in 0..tau.len() {
        let t = tau.s(k);
        if t >= lo {
            ts.push(t);
            lts.push(t.ln());
            lns.push(tau.values[k].ln());
        }
    }
    if ts.len() < 4 {
        return Err(Error::WindowTooSmall(
            "tail fit needs at least four nodes in the last decade".into(),
        ));
    }
    let (slope_exp, _, rss_exp) = least_squares(&ts, &lns);
    let (slope_alg, _, rss_alg) = least_squares(&lts, &lns);
    let exp_ok = slope_exp < 0.0;
    let alg_ok = slope_alg < 0.0;
    match (exp_ok, alg_ok) {
        (true, true) if rss_exp <= rss_alg => Ok(TailModel::Exponential { rate: -slope_exp }),
        (true, false) => Ok(TailModel::Exponential { rate: -slope_exp }),
        (_, true) => Ok(TailModel::Algebraic { exponent: -slope_alg }),
        _ => Err(Error::Domain(
            "mixing density does not decay over its last decade".into(),
        )),
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, intercept, rss)
}

/// Log-log power fit over a window of at least two decades.
/// Returns (exponent, amplitude) with values ~ amplitude * x^exponent.
pub fn tail_exponent_fit(sample: &GridFunction, window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Domain(format!("bad fit window ({lo}, {hi})")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..sample.len() {
        let x = sample.s(k);
        if x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12) {
            let v = sample.values[k];
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "power fit needs positive data, found {v} at x = {x}"
                )));
            }
            xs.push(x.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::WindowTooSmall(format!(
            "power fit found only {} nodes in ({lo}, {hi})",
            xs.len()
        )));
    }
    let span = xs.last().unwrap() - xs.first().unwrap();
    if span < 2.0 * std::f64::consts::LN_10 * (1.0 - 1e-9) {
        return Err(Error::WindowTooSmall(format!(
            "power fit covers {:.2} decades, needs two",
            span / std::f64::consts::LN_10
        )));
    }
    let (slope, intercept, _) = least_squares(&xs, &ys);
    Ok((slope, intercept.exp()))
}

#[derive(Debug, Clone, Copy)]
pub struct CmProbe {
    /// Largest wrong-sign divided difference, scaled by the local value over
    /// the window width to the difference order. Zero when clean.
    pub worst_rel_violation: f64,
    pub order: usize,
    pub x: f64,
}

/// Checks the sign alternation of divided differences up to `depth`, the
/// finite-sample shadow of complete monotonicity.
pub fn cm_probe(sample: &DensitySample, depth: usize) -> Result<CmProbe> {
    if depth == 0 || depth > 4 {
        return Err(Error::Domain(format!(
            "probe depth must be between 1 and 4, got {depth}"
        )));
    }
    let grid = &sample.grid;
    let n = grid.len();
    if n < depth + 1 {
        return Err(Error::WindowTooSmall(format!(
            "{n} nodes cannot support order-{depth} differences"
        )));
    }
    let xs: Vec<f64> = (0..n).map(|k| grid.s(k)).collect();
    let mut diffs = grid.values.clone();
    let mut probe = CmProbe { worst_rel_violation: 0.0, order: 0, x: xs[0] };
    for order in 1..=depth {
        for j in 0..n - order {
            diffs[j] = (diffs[j + 1] - diffs[j]) / (xs[j + order] - xs[j]);
        }
        diffs.truncate(n - order);
        let want = if order % 2 == 0 { 1.0 } else { -1.0 };
        for (j, d) in diffs.iter().enumerate() {
            if d * want < 0.0 {
                let width = xs[j + order] - xs[j];
                let scale = grid.values[j].abs() / width.powi(order as i32);
                let rel = d.abs() / scale.max(f64::MIN_POSITIVE);
                if rel > probe.worst_rel_violation {
                    probe = CmProbe { worst_rel_violation: rel, order, x: xs[j] };
                }
            }
        }
    }
    Ok(probe)
}

/// Simpson mass of the sample over its own window.
pub fn window_mass(sample: &DensitySample) -> f64 {
    simpson_log(&sample.grid, &sample.grid.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{shoot, ProfileEvaluator, ShootConfig};
    use crate::series::coefficients;

    fn evaluator_half() -> ProfileEvaluator {
        let series = coefficients(0.5, 120).unwrap();
        let mut curve = shoot(0.5, &ShootConfig::default())
            .unwrap()
            .normalize(&series)
            .unwrap();
        curve.fit_tail().unwrap();
        ProfileEvaluator::new(curve, series).unwrap()
    }

    fn sample_of<F: Fn(f64) -> f64>(lo: f64, hi: f64, per_decade: usize, f: F) -> DensitySample {
        let grid = GridFunction::sample(lo, hi, per_decade, 0.0, |x| f(x)).unwrap();
        DensitySample::from_parts(grid, Provenance::Subordination).unwrap()
    }

    #[test]
    fn power_fit_is_exact_on_a_pure_power() {
        let grid = GridFunction::sample(1e-2, 1e3, 10, 0.0, |x| 3.4 * x.powf(-1.7)).unwrap();
        let (e, a) = tail_exponent_fit(&grid, (1e-2, 1e3)).unwrap();
        assert!((e + 1.7).abs() < 1e-6, "exponent {e}");
        assert!((a / 3.4 - 1.0).abs() < 1e-6, "amplitude {a}");
    }

    #[test]
    fn power_fit_rejects_thin_or_signed_data() {
        let grid = GridFunction::sample(1.0, 1e4, 10, 0.0, |x| x.powf(-2.0)).unwrap();
        assert!(matches!(
            tail_exponent_fit(&grid, (1.0, 50.0)),
            Err(Error::WindowTooSmall(_))
        ));
        assert!(tail_exponent_fit(&grid, (-1.0, 10.0)).is_err());
        let signed = GridFunction::sample(1.0, 1e4, 10, 0.0, |x| x.cos()).unwrap();
        assert!(tail_exponent_fit(&signed, (1.0, 1e4)).is_err());
    }

    // A pure power density f = A x^{-1-a} has partial-moment transform
    // Int (1 - e^{-sx}) f dx = A Gamma(1-a)/a s^a exactly, and its s
    // derivative is A Gamma(2-a)/(1-a) s^{a-1}; the fitted amplitudes must
    // land on both, and their ratio recovers a itself.
    #[test]
    fn power_fit_connects_density_and_transform_amplitudes() {
        let alpha = 0.6;
        let amp = 1.3;
        let x_grid = GridFunction::sample(1e-8, 1e8, 40, 0.0, |x| {
            amp * x.powf(-1.0 - alpha)
        })
        .unwrap();
        let transform = |s: f64| -> f64 {
            let mut vals = vec![0.0; x_grid.len()];
            for k in 0..x_grid.len() {
                let x = x_grid.s(k);
                vals[k] = (-(-s * x).exp_m1()) * x_grid.values[k];
            }
            let x0 = x_grid.s_min();
            let xk = x_grid.s_max();
            let head = amp * s * x0.powf(1.0 - alpha) / (1.0 - alpha);
            let tail = amp * xk.powf(-alpha) / alpha;
            simpson_log(&x_grid, &vals) + head + tail
        };
        let s_grid = GridFunction::sample(1e-2, 1e2, 10, 0.0, transform).unwrap();
        let (e, a) = tail_exponent_fit(&s_grid, (1e-2, 1e2)).unwrap();
        let want_a = amp * libm::tgamma(1.0 - alpha) / alpha;
        assert!((e - alpha).abs() < 1e-3, "transform exponent {e}");
        assert!((a / want_a - 1.0).abs() < 1e-2, "transform amplitude {a} vs {want_a}");

        let derivative = |s: f64| -> f64 {
            let mut vals = vec![0.0; x_grid.len()];
            for k in 0..x_grid.len() {
                let x = x_grid.s(k);
                vals[k] = x * (-s * x).exp() * x_grid.values[k];
            }
            let x0 = x_grid.s_min();
            let head = amp * x0.powf(1.0 - alpha) / (1.0 - alpha);
            simpson_log(&x_grid, &vals) + head
        };
        let d_grid = GridFunction::sample(1e-2, 1e2, 10, 0.0, derivative).unwrap();
        let (ed, ad) = tail_exponent_fit(&d_grid, (1e-2, 1e2)).unwrap();
        let want_ad = amp * libm::tgamma(2.0 - alpha) / (1.0 - alpha);
        assert!((ed - (alpha - 1.0)).abs() < 1e-3, "derivative exponent {ed}");
        assert!((ad / want_ad - 1.0).abs() < 1e-2);
        // s F'(s) / F(s) -> a: the amplitude ratio seen through the fits.
        assert!((ad / a - alpha).abs() < 1e-2, "ratio {}", ad / a);
    }

    #[test]
    fn inverted_profile_has_both_predicted_tails() {
        let ev = evaluator_half();
        let alpha = ev.params().alpha;
        let alpha_hat = ev.params().alpha_hat;
        let c_hat = ev.curve().c_hat_fit.unwrap();
        let x_grid = GridFunction::zeros(1e-7, 1e5, 20, 0.0).unwrap();
        let sample = invert_profile(&ev, &x_grid).unwrap();
        assert_eq!(sample.provenance, Provenance::Inversion);
        assert!(sample.err_estimate < 1e-3, "estimate {}", sample.err_estimate);

        // Amplitudes are compared at the window midpoint: the x = 1 intercept
        // would scale any slope misfit by the full lever arm of the window.
        let (e_small, a_small) = tail_exponent_fit(&sample.grid, (1e-7, 1e-5)).unwrap();
        assert!(
            (e_small - (alpha_hat - 1.0)).abs() < 0.05,
            "small-x exponent {e_small} vs {}",
            alpha_hat - 1.0
        );
        let mid = 1e-6_f64;
        let want_small = c_hat / libm::tgamma(alpha_hat) * mid.powf(alpha_hat - 1.0);
        let got_small = a_small * mid.powf(e_small);
        assert!(
            (got_small / want_small - 1.0).abs() < 0.05,
            "small-x density {got_small} vs {want_small}"
        );

        let (e_large, a_large) = tail_exponent_fit(&sample.grid, (1e2, 1e5)).unwrap();
        assert!(
            (e_large + 1.0 + alpha).abs() < 0.05,
            "large-x exponent {e_large}"
        );
        let mid = 10.0_f64.powf(3.5);
        let want_large = alpha / libm::tgamma(1.0 - alpha) * mid.powf(-1.0 - alpha);
        let got_large = a_large * mid.powf(e_large);
        assert!(
            (got_large / want_large - 1.0).abs() < 0.05,
            "large-x density {got_large} vs {want_large}"
        );
    }

    // The window [1e-6, 1e6] holds about 98.1% of the mass at alpha = 1/2;
    // the slow x^{alpha_hat - 1} ramp at the origin owns almost all of the
    // rest. Head and tail estimated from the fitted powers must close the
    // account to quadrature-and-fit accuracy.
    #[test]
    fn inverted_profile_mass_accounting_closes() {
        let ev = evaluator_half();
        let alpha = ev.params().alpha;
        let alpha_hat = ev.params().alpha_hat;
        let x_grid = GridFunction::zeros(1e-6, 1e6, 20, 0.0).unwrap();
        let sample = invert_profile(&ev, &x_grid).unwrap();
        let inside = window_mass(&sample);
        assert!(inside > 0.97, "window mass {inside}");
        let (_, a_small) = tail_exponent_fit(&sample.grid, (1e-6, 1e-4)).unwrap();
        let head = a_small * 1e-6_f64.powf(alpha_hat) / alpha_hat;
        let (_, a_large) = tail_exponent_fit(&sample.grid, (1e3, 1e6)).unwrap();
        let tail = a_large * 1e6_f64.powf(-alpha) / alpha;
        let total = inside + head + tail;
        assert!(
            (total - 1.0).abs() < 5e-3,
            "window {inside} + head {head} + tail {tail} = {total}"
        );
    }

    #[test]
    fn probe_passes_the_exponential_and_flags_a_bump() {
        let clean = sample_of(1e-2, 50.0, 10, |x| (-x).exp());
        let report = cm_probe(&clean, 4).unwrap();
        assert_eq!(report.worst_rel_violation, 0.0, "order {}", report.order);

        // x e^{-x} rises on (0, 1), so its first difference already changes
        // sign; a depth-1 probe pins that order while the depth-4 probe is
        // free to report whichever order scales worst.
        let bump = sample_of(1e-2, 50.0, 10, |x| x * (-x).exp());
        let first = cm_probe(&bump, 1).unwrap();
        assert_eq!(first.order, 1);
        assert!(first.worst_rel_violation > 1e-2);
        assert!(first.x < 1.0);
        let report = cm_probe(&bump, 4).unwrap();
        assert!(report.worst_rel_violation > 1e-2);

        assert!(cm_probe(&clean, 0).is_err());
        assert!(cm_probe(&clean, 5).is_err());
    }

    #[test]
    fn inverted_profile_passes_the_depth_three_probe() {
        let ev = evaluator_half();
        let x_grid = GridFunction::zeros(1e-4, 1e4, 10, 0.0).unwrap();
        let sample = invert_profile(&ev, &x_grid).unwrap();
        let report = cm_probe(&sample, 3).unwrap();
        assert!(
            report.worst_rel_violation < 1e-4,
            "violation {} at order {} x {}",
            report.worst_rel_violation,
            report.order,
            report.x
        );
    }

    #[test]
    fn subordination_near_one_returns_the_input() {
        let g = sample_of(1e-3, 60.0, 30, |t| (-t).exp());
        let x_grid = GridFunction::zeros(0.5, 2.0, 12, 0.0).unwrap();
        let mut prev_dev = f64::INFINITY;
        for alpha in [0.9, 0.95] {
            let kernel = StableKernel::new(alpha).unwrap();
            let (f, info) = subordinate(&g, &kernel, &x_grid).unwrap();
            assert!(!info.truncation_warning, "alpha {alpha}: {info:?}");
            let mut dev = 0.0_f64;
            for k in 0..x_grid.len() {
                let x = x_grid.s(k);
                dev = dev.max((f.grid.values[k] / (-x).exp() - 1.0).abs());
            }
            assert!(dev < 0.2, "alpha {alpha}: deviation {dev}");
            assert!(dev < prev_dev + 0.02, "alpha {alpha}: {dev} after {prev_dev}");
            prev_dev = dev;
        }
    }

    #[test]
    fn subordination_prefers_the_right_tail_model() {
        let exp_tail = sample_of(1e-2, 30.0, 20, |t| (-t).exp());
        assert!(matches!(
            fit_tail_model(&exp_tail.grid).unwrap(),
            TailModel::Exponential { rate } if (rate - 1.0).abs() < 0.05
        ));
        let alg_tail = sample_of(1e-2, 1e3, 20, |t| t.powf(-2.5) / (1.0 + 1.0 / t));
        assert!(matches!(
            fit_tail_model(&alg_tail.grid).unwrap(),
            TailModel::Algebraic { exponent } if (exponent - 2.5).abs() < 0.05
        ));
        let rising = sample_of(1.0, 100.0, 10, |t| t);
        assert!(fit_tail_model(&rising.grid).is_err());
    }

    #[test]
    fn subordination_warns_when_the_tail_is_cut() {
        // At x ~ 1e4 the kernel draws on mixing mass near tau ~ x^alpha ~ 1e2,
        // exactly where this heavy-tailed grid stops.
        let g = sample_of(1e-2, 1e2, 20, |t| t.powf(-1.3));
        let kernel = StableKernel::new(0.5).unwrap();
        let x_grid = GridFunction::zeros(1e4, 1e5, 8, 0.0).unwrap();
        let (_, info) = subordinate(&g, &kernel, &x_grid).unwrap();
        assert!(info.truncation_warning, "{info:?}");
        assert!(info.tail_fraction > 1e-4);
    }

    #[test]
    fn subordination_rejects_junk_input() {
        let g = sample_of(1e-2, 1e2, 2, |t| (-t).exp());
        let kernel = StableKernel::new(0.5).unwrap();
        let x_grid = GridFunction::zeros(0.1, 10.0, 10, 0.0).unwrap();
        assert!(subordinate(&g, &kernel, &x_grid).is_err());
        let mut bad = sample_of(1e-2, 1e2, 10, |t| (-t).exp());
        bad.grid.values[3] = -1.0;
        assert!(subordinate(&bad, &kernel, &x_grid).is_err());
    }

    #[test]
    fn sample_validation_and_csv_round_out() {
        let grid = GridFunction::sample(0.1, 10.0, 5, 0.0, |x| x.powf(-1.5)).unwrap();
        let sample = DensitySample::from_parts(grid.clone(), Provenance::Inversion).unwrap();
        let mut out = Vec::new();
        sample.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("x,f,route\n"));
        assert_eq!(text.lines().count(), 1 + grid.len());
        assert!(text.contains("inversion"));

        let mut bad = grid;
        bad.values[0] = f64::NAN;
        assert!(DensitySample::from_parts(bad, Provenance::Inversion).is_err());
    }

    #[test]
    fn window_mass_of_a_unit_exponential_is_one() {
        let sample = sample_of(1e-6, 60.0, 40, |x| (-x).exp());
        let mass = window_mass(&sample);
        assert!((mass - 1.0).abs() < 1e-5, "mass {mass}");
    }
}
