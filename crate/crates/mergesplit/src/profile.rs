//! Phase-plane construction of the self-similar profile.
//!
//! In τ = log z the profile u and its running average v = (1/z)∫₀^z u
//! satisfy the autonomous system
//!
//!   du/dτ = (-u - u² + 2v)/β,   dv/dτ = u - v,
//!
//! whose orbit of interest runs from the saddle at the origin to the node at
//! (1,1) inside the region 0 < (u+u²)/2 < v < u. Shooting starts on the
//! unstable eigenvector ε·(1+α, 1)/|(1+α, 1)| (eigenvalue α), so the
//! curve is the true profile up to a dilation in z; [`ProfileCurve::normalize`]
//! removes that freedom by matching the small-z series, after which
//! 1 - u(z) ~ c_hat·z^{-α̂} defines the tail amplitude.

use crate::ode::{self, AcceptedStep, OdeOptions, StepControl};
use crate::params::ProfileParams;
use crate::series::SeriesData;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ShootConfig {
    /// Start amplitude along the unstable eigenvector. The first-order
    /// manifold error is O(ε²), so 1e-8 keeps it at rounding level.
    pub epsilon: f64,
    /// Spacing of the uniform τ output grid.
    pub tau_step: f64,
    pub rtol: f64,
    /// Integration step cap; it, not rtol, limits the dense-output error.
    pub h_max: f64,
    /// Integration stops once 1 - u falls below this.
    pub stop_gap: f64,
    pub max_steps: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            tau_step: 1e-3,
            rtol: 1e-12,
            h_max: 2e-3,
            stop_gap: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

/// The profile and its running average sampled on a uniform τ grid.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub params: ProfileParams,
    pub tau_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub v_values: Vec<f64>,
    pub c_hat_fit: Option<f64>,
    pub normalization_shift: f64,
    tau_step: f64,
    normalized: bool,
}

fn phase_rhs(beta: f64, y: &[f64], dy: &mut [f64]) {
    dy[0] = (-y[0] - y[0] * y[0] + 2.0 * y[1]) / beta;
    dy[1] = y[0] - y[1];
}

/// Integrates the phase-plane system from the saddle to the (1,1) node and
/// samples it on a uniform τ grid. The dilation freedom is still present in
/// the result; the τ origin is arbitrary until normalization.
pub fn shoot(alpha: f64, config: &ShootConfig) -> Result<ProfileCurve> {
    let params = ProfileParams::new(alpha, 1.0)?;
    if !(config.epsilon > 0.0 && config.epsilon <= 0.5) {
        return Err(Error::Domain(format!(
            "start amplitude must lie in (0, 0.5], got {}",
            config.epsilon
        )));
    }
    if !(config.tau_step > 0.0 && config.h_max > 0.0 && config.stop_gap > 0.0) {
        return Err(Error::Domain("grid and stop settings must be positive".into()));
    }
    let beta = params.beta;
    let norm = (1.0 + alpha).hypot(1.0);
    let y0 = [
        config.epsilon * (1.0 + alpha) / norm,
        config.epsilon / norm,
    ];

    struct Piece {
        t0: f64,
        t1: f64,
        y0: [f64; 2],
        y1: [f64; 2],
        f0: [f64; 2],
        f1: [f64; 2],
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let stop_at = 1.0 - config.stop_gap;
    let opts = OdeOptions {
        rtol: config.rtol,
        atol: 1e-16,
        h_init: 0.0,
        h_max: config.h_max,
        max_steps: config.max_steps,
    };
    ode::integrate(
        |_t, y, dy| phase_rhs(beta, y, dy),
        0.0,
        f64::INFINITY,
        &y0,
        &opts,
        |s: AcceptedStep| {
            let (u, v) = (s.y1[0], s.y1[1]);
            if !(s.y1[0] > s.y0[0] && s.y1[1] > s.y0[1]) {
                return Err(Error::Stalled {
                    at: s.t1,
                    step: s.t1 - s.t0,
                });
            }
            let lower = 0.5 * (u + u * u);
            if !(lower > 0.0 && lower < v && v < u) {
                return Err(Error::RegionEscape { tau: s.t1, u, v });
            }
            pieces.push(Piece {
                t0: s.t0,
                t1: s.t1,
                y0: [s.y0[0], s.y0[1]],
                y1: [s.y1[0], s.y1[1]],
                f0: [s.f0[0], s.f0[1]],
                f1: [s.f1[0], s.f1[1]],
            });
            if u >= stop_at {
                Ok(StepControl::Stop)
            } else {
                Ok(StepControl::Continue)
            }
        },
    )?;
    let last = pieces.last().ok_or(Error::Stalled { at: 0.0, step: 0.0 })?;
    if last.y1[0] < stop_at {
        return Err(Error::Stalled {
            at: last.t1,
            step: last.t1 - last.t0,
        });
    }

    let h = config.tau_step;
    let t_start = pieces[0].t0;
    let t_end = last.t1;
    let mut tau_grid = Vec::new();
    let mut u_values = Vec::new();
    let mut v_values = Vec::new();
    let mut idx = 0;
    let mut k = (t_start / h).ceil() as i64;
    loop {
        let tau = k as f64 * h;
        if tau > t_end {
            break;
        }
        while pieces[idx].t1 < tau {
            idx += 1;
        }
        let p = &pieces[idx];
        let width = p.t1 - p.t0;
        let theta = (tau - p.t0) / width;
        u_values.push(ode::hermite(theta, width, p.y0[0], p.f0[0], p.y1[0], p.f1[0]));
        v_values.push(ode::hermite(theta, width, p.y0[1], p.f0[1], p.y1[1], p.f1[1]));
        tau_grid.push(tau);
        k += 1;
    }

    Ok(ProfileCurve {
        params,
        tau_grid,
        u_values,
        v_values,
        c_hat_fit: None,
        normalization_shift: 0.0,
        tau_step: h,
        normalized: false,
    })
}

/// Series value and dU/dτ at τ = log z, summed from the raw coefficients.
/// Only valid well inside the convergence region.
fn series_u_slope(data: &SeriesData, tau: f64) -> (f64, f64) {
    let alpha = data.alpha;
    let w = (alpha * tau).exp();
    let mut sum = 0.0;
    let mut slope = 0.0;
    let mut wp = 1.0;
    let mut sign = 1.0;
    for n in 1..=data.n_max() {
        wp *= w;
        let t = data.c(n) * wp;
        sum += sign * t;
        slope += sign * alpha * n as f64 * t;
        if n > 4 && t < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (sum, slope)
}

impl ProfileCurve {
    pub fn tau_step(&self) -> f64 {
        self.tau_step
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Profile value at a τ inside the sampled range, by cubic Hermite
    /// interpolation with slopes taken from the differential equation itself.
    pub fn u_at_tau(&self, tau: f64) -> Result<f64> {
        self.eval_at_tau(tau).map(|(u, _v)| u)
    }

    pub fn eval_at_tau(&self, tau: f64) -> Result<(f64, f64)> {
        let t0 = self.tau_grid[0];
        let t1 = *self.tau_grid.last().unwrap();
        let slack = 1e-9 * t1.abs().max(1.0);
        if !(tau >= t0 - slack && tau <= t1 + slack) {
            return Err(Error::Domain(format!(
                "tau {tau} outside sampled range [{t0}, {t1}]"
            )));
        }
        let tau = tau.clamp(t0, t1);
        let h = self.tau_step;
        let i = (((tau - t0) / h) as usize).min(self.tau_grid.len() - 2);
        let theta = (tau - self.tau_grid[i]) / h;
        let beta = self.params.beta;
        let mut f = [0.0; 2];
        let mut g = [0.0; 2];
        phase_rhs(beta, &[self.u_values[i], self.v_values[i]], &mut f);
        phase_rhs(beta, &[self.u_values[i + 1], self.v_values[i + 1]], &mut g);
        let u = ode::hermite(theta, h, self.u_values[i], f[0], self.u_values[i + 1], g[0]);
        let v = ode::hermite(theta, h, self.v_values[i], f[1], self.v_values[i + 1], g[1]);
        Ok((u, v))
    }

    /// Fixes the dilation freedom so that u(z) ~ z^α with unit coefficient.
    ///
    /// Each sample in an overlap window (where the series converges fast and
    /// the trajectory is already well out of the linear regime) is mapped to
    /// the τ the series assigns to its u value; the grid is shifted by the
    /// mean offset, which is the least-squares shift. Fails if the curve
    /// never passes through the window, or if the post-shift mismatch stays
    /// above 1e-6 of the value.
    pub fn normalize(mut self, series: &SeriesData) -> Result<ProfileCurve> {
        if (series.alpha - self.params.alpha).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "series alpha {} does not match curve alpha {}",
                series.alpha, self.params.alpha
            )));
        }
        let alpha = self.params.alpha;
        let w_hi = 0.45 * series.radius_est;
        let u_hi = series.eval_series(w_hi.powf(1.0 / alpha))?.value;
        let u_lo = u_hi / 10.0;
        let lo = self.u_values.partition_point(|&u| u < u_lo);
        let hi = self.u_values.partition_point(|&u| u < u_hi);
        if hi - lo < 8 {
            return Err(Error::NoOverlap(format!(
                "only {} samples fall in the series window [{u_lo:.3e}, {u_hi:.3e}]; \
                 start amplitude too large?",
                hi - lo
            )));
        }
        // The per-sample offsets agree to ~1e-10 while being of order the
        // shift itself, so they are averaged relative to the first one to
        // keep the mean exact well below the idempotency tolerance.
        let mut pivot = f64::NAN;
        let mut acc = 0.0;
        let mut tau_hat = self.u_values[lo].ln() / alpha;
        for i in lo..hi {
            let target = self.u_values[i];
            let mut done = false;
            for _ in 0..60 {
                let (u, slope) = series_u_slope(series, tau_hat);
                let err = u - target;
                if err.abs() <= 1e-14 * target {
                    done = true;
                    break;
                }
                let step = err / slope;
                tau_hat -= step;
                if step.abs() <= 1e-15 * (1.0 + tau_hat.abs()) {
                    done = true;
                    break;
                }
            }
            if !done {
                return Err(Error::NoOverlap(
                    "series inversion did not converge in the overlap window".into(),
                ));
            }
            let d = tau_hat - self.tau_grid[i];
            if pivot.is_nan() {
                pivot = d;
            }
            acc += d - pivot;
        }
        let shift = pivot + acc / (hi - lo) as f64;
        for tau in &mut self.tau_grid {
            *tau += shift;
        }
        self.normalization_shift += shift;
        self.normalized = true;

        let mut worst = 0.0_f64;
        for i in lo..hi {
            let (u, _) = series_u_slope(series, self.tau_grid[i]);
            worst = worst.max((self.u_values[i] - u).abs() / u);
        }
        if worst > 1e-6 {
            return Err(Error::FitMismatch {
                what: "normalization overlap",
                got: worst,
                expected: 1e-6,
                rel: worst,
            });
        }
        Ok(self)
    }

    /// Fits 1 - u(z) ~ c_hat·z^{-α̂} on the window 1-u ∈ [1e-6, 1e-3] by
    /// linear regression of log(1-u) against τ. Below the window rounding in
    /// 1-u dominates; above it the next-order correction biases the slope.
    /// The fitted slope must come out within 1% of -α̂ or the fit is refused.
    pub fn fit_tail(&mut self) -> Result<f64> {
        let gap_end = 1.0 - self.u_values.last().unwrap();
        if gap_end >= 1e-6 {
            return Err(Error::WindowTooSmall(format!(
                "trajectory stops at 1-u = {gap_end:.3e}, short of the fit window"
            )));
        }
        let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &u) in self.u_values.iter().enumerate() {
            let gap = 1.0 - u;
            if gap < 1e-6 || gap > 1e-3 {
                continue;
            }
            let t = self.tau_grid[i];
            let y = gap.ln();
            sw += 1.0;
            st += t;
            sy += y;
            stt += t * t;
            sty += t * y;
        }
        if sw < 10.0 {
            return Err(Error::WindowTooSmall(format!(
                "only {sw} samples in the tail window"
            )));
        }
        let det = sw * stt - st * st;
        let slope = (sw * sty - st * sy) / det;
        let intercept = (stt * sy - st * sty) / det;
        let alpha_hat = self.params.alpha_hat;
        let rel = (slope + alpha_hat).abs() / alpha_hat;
        if rel > 0.01 {
            return Err(Error::FitMismatch {
                what: "tail slope",
                got: slope,
                expected: -alpha_hat,
                rel,
            });
        }
        let c_hat = intercept.exp();
        self.c_hat_fit = Some(c_hat);
        self.params.c_hat = Some(c_hat);
        Ok(c_hat)
    }

    /// Max over interior grid points of |β·u' + u² + u - 2v| with u' from a
    /// fourth-order central difference of the stored samples. Because the
    /// derivative is re-derived from the data, this measures how well the
    /// sampled curve actually satisfies the profile equation.
    pub fn residual(&self) -> f64 {
        let n = self.u_values.len();
        if n < 5 {
            return f64::NAN;
        }
        let h = self.tau_step;
        let beta = self.params.beta;
        let mut worst = 0.0_f64;
        for i in 2..n - 2 {
            let du = (self.u_values[i - 2] - 8.0 * self.u_values[i - 1]
                + 8.0 * self.u_values[i + 1]
                - self.u_values[i + 2])
                / (12.0 * h);
            let u = self.u_values[i];
            let v = self.v_values[i];
            let r = beta * du + u * u + u - 2.0 * v;
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Max relative deviation between the stored v and an independent
    /// trapezoid quadrature of (1/z)∫₀^z u dr over the grid, with the part
    /// below the grid closed by the leading power behavior of u.
    pub fn quadrature_check(&self) -> f64 {
        let h = self.tau_step;
        let alpha = self.params.alpha;
        // ∫₀^{z₀} u dr with u ≈ u₀ (r/z₀)^α gives u₀ z₀ / (1+α).
        let mut integral = self.u_values[0] * self.tau_grid[0].exp() / (1.0 + alpha);
        let mut worst = 0.0_f64;
        let mut prev = self.u_values[0] * self.tau_grid[0].exp();
        for i in 1..self.u_values.len() {
            let cur = self.u_values[i] * self.tau_grid[i].exp();
            integral += 0.5 * h * (prev + cur);
            prev = cur;
            let v_quad = integral / self.tau_grid[i].exp();
            worst = worst.max((v_quad - self.v_values[i]).abs() / self.v_values[i]);
        }
        worst
    }

    /// Writes rows (z, u, v).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["z", "u", "v"])
            .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        for i in 0..self.tau_grid.len() {
            wtr.write_record(&[
                format!("{:.17e}", self.tau_grid[i].exp()),
                format!("{:.17e}", self.u_values[i]),
                format!("{:.17e}", self.v_values[i]),
            ])
            .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "alpha_hat": self.params.alpha_hat,
            "c_hat_fit": self.c_hat_fit,
            "normalization_shift": self.normalization_shift,
        })
    }
}

/// Evaluates u(z) anywhere on (0, ∞) by gluing the three representations:
/// the series where z^α is small, Hermite interpolation of the sampled curve
/// in the middle, and the fitted tail beyond the sampled range, where
/// 1 - u < 1e-10 makes the power form exact to rounding.
#[derive(Debug, Clone)]
pub struct ProfileEvaluator {
    series: SeriesData,
    curve: ProfileCurve,
    w_switch: f64,
}

impl ProfileEvaluator {
    pub fn new(curve: ProfileCurve, series: SeriesData) -> Result<Self> {
        if !curve.normalized {
            return Err(Error::Domain(
                "evaluator needs a normalized curve; call normalize first".into(),
            ));
        }
        if curve.c_hat_fit.is_none() {
            return Err(Error::Domain(
                "evaluator needs the tail amplitude; call fit_tail first".into(),
            ));
        }
        if (series.alpha - curve.params.alpha).abs() > 1e-12 {
            return Err(Error::Domain(
                "series and curve were built for different alpha".into(),
            ));
        }
        let w_switch = 0.25 * series.radius_est;
        Ok(Self {
            series,
            curve,
            w_switch,
        })
    }

    pub fn params(&self) -> &ProfileParams {
        &self.curve.params
    }

    pub fn curve(&self) -> &ProfileCurve {
        &self.curve
    }

    pub fn series(&self) -> &SeriesData {
        &self.series
    }

    pub fn u(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("z must be positive, got {z}")));
        }
        let tau = z.ln();
        if z.powf(self.curve.params.alpha) <= self.w_switch
            || tau < self.curve.tau_grid[0]
        {
            return Ok(self.series.eval_series(z)?.value);
        }
        if tau <= *self.curve.tau_grid.last().unwrap() {
            return self.curve.u_at_tau(tau);
        }
        let c_hat = self.curve.c_hat_fit.unwrap();
        let alpha_hat = self.curve.params.alpha_hat;
        Ok(1.0 - c_hat * (-alpha_hat * tau).exp())
    }

    /// 1 - u(z), evaluated in the tail without the subtraction that would
    /// round it away once u is within machine epsilon of one.
    pub fn gap(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("z must be positive, got {z}")));
        }
        let tau = z.ln();
        if z.powf(self.curve.params.alpha) <= self.w_switch
            || tau < self.curve.tau_grid[0]
        {
            return Ok(1.0 - self.series.eval_series(z)?.value);
        }
        if tau <= *self.curve.tau_grid.last().unwrap() {
            return Ok(1.0 - self.curve.u_at_tau(tau)?);
        }
        let c_hat = self.curve.c_hat_fit.unwrap();
        Ok(c_hat * (-self.curve.params.alpha_hat * tau).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::coefficients;

    fn curve_half() -> ProfileCurve {
        shoot(0.5, &ShootConfig::default()).unwrap()
    }

    #[test]
    fn fixed_points_have_zero_field() {
        let mut dy = [1.0, 1.0];
        phase_rhs(2.0 / 3.0, &[0.0, 0.0], &mut dy);
        assert_eq!(dy, [0.0, 0.0]);
        phase_rhs(2.0 / 3.0, &[1.0, 1.0], &mut dy);
        assert_eq!(dy, [0.0, 0.0]);
    }

    #[test]
    fn shoot_reaches_equilibrium() {
        let c = curve_half();
        let u_end = *c.u_values.last().unwrap();
        let v_end = *c.v_values.last().unwrap();
        assert!(1.0 - u_end < 2e-10, "gap {}", 1.0 - u_end);
        assert!((u_end - v_end).abs() < 1e-9);
        for i in 1..c.u_values.len() {
            assert!(c.u_values[i] > c.u_values[i - 1]);
            assert!(c.v_values[i] > c.v_values[i - 1]);
        }
        for i in 0..c.u_values.len() {
            let (u, v) = (c.u_values[i], c.v_values[i]);
            assert!(0.5 * (u + u * u) < v && v < u, "region violated at {i}");
        }
    }

    #[test]
    fn approach_slope_into_node() {
        let c = curve_half();
        let n = c.u_values.len();
        let sigma = (1.0 - c.v_values[n - 1]) / (1.0 - c.u_values[n - 1]);
        let expect = (3.0 - c.params.beta * c.params.alpha_hat) / 2.0;
        assert!((sigma - expect).abs() < 0.01 * expect, "slope {sigma}");
        assert!((1.0..=1.5).contains(&sigma));
    }

    #[test]
    fn several_alphas_complete() {
        for alpha in [0.2, 0.35, 0.65, 0.8] {
            let c = shoot(alpha, &ShootConfig::default()).unwrap();
            assert!(1.0 - c.u_values.last().unwrap() < 2e-10, "alpha {alpha}");
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(shoot(1.0, &ShootConfig::default()).is_err());
        assert!(shoot(0.0, &ShootConfig::default()).is_err());
        let bad = ShootConfig {
            epsilon: 0.9,
            ..ShootConfig::default()
        };
        assert!(shoot(0.5, &bad).is_err());
    }

    #[test]
    fn normalize_fixes_dilation() {
        let series = coefficients(0.5, 120).unwrap();
        let c = curve_half().normalize(&series).unwrap();
        assert!(c.is_normalized());
        // After normalization u(z)/z^α → 1 for small z.
        let tau = -30.0;
        let u = c.u_at_tau(tau).unwrap();
        let lead = (0.5 * tau).exp();
        assert!((u / lead - 1.0).abs() < 1e-6, "ratio {}", u / lead);
    }

    #[test]
    fn normalize_is_idempotent() {
        let series = coefficients(0.5, 120).unwrap();
        let c = curve_half().normalize(&series).unwrap();
        let first = c.normalization_shift;
        let c = c.normalize(&series).unwrap();
        assert!(
            (c.normalization_shift - first).abs() < 1e-12,
            "second shift {}",
            c.normalization_shift - first
        );
    }

    #[test]
    fn normalize_without_overlap_fails() {
        let series = coefficients(0.5, 120).unwrap();
        // Starting above the whole series window leaves nothing to match.
        let above_window = ShootConfig {
            epsilon: 0.4,
            ..ShootConfig::default()
        };
        let c = shoot(0.5, &above_window).unwrap();
        assert!(matches!(c.normalize(&series), Err(Error::NoOverlap(_))));
        // Starting inside the window but far off the manifold is a different
        // failure: the shapes cannot be matched by any shift.
        let off_manifold = ShootConfig {
            epsilon: 0.2,
            ..ShootConfig::default()
        };
        let c = shoot(0.5, &off_manifold).unwrap();
        assert!(matches!(
            c.normalize(&series),
            Err(Error::FitMismatch { what: "normalization overlap", .. })
        ));
    }

    #[test]
    fn cross_route_agreement_with_series() {
        let series = coefficients(0.5, 120).unwrap();
        let c = curve_half().normalize(&series).unwrap();
        for frac in [0.125, 0.2, 0.3, 0.4, 0.5] {
            let w = frac * series.radius_est;
            let z = w * w;
            let tau = z.ln();
            let u_ode = c.u_at_tau(tau).unwrap();
            let u_ser = series.eval_series(z).unwrap().value;
            assert!(
                (u_ode - u_ser).abs() < 1e-6 * u_ser,
                "w = {w}: {u_ode} vs {u_ser}"
            );
        }
    }

    #[test]
    fn tail_fit_recovers_decay() {
        let series = coefficients(0.5, 120).unwrap();
        let mut c = curve_half().normalize(&series).unwrap();
        let c_hat = c.fit_tail().unwrap();
        assert!(c_hat > 0.0);
        assert!((0.85..0.92).contains(&c_hat), "c_hat {c_hat}");
        assert_eq!(c.params.c_hat, Some(c_hat));
    }

    #[test]
    fn tail_fit_needs_full_decay() {
        let short = ShootConfig {
            stop_gap: 1e-5,
            ..ShootConfig::default()
        };
        let mut c = shoot(0.5, &short).unwrap();
        assert!(matches!(c.fit_tail(), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn equation_residual_small() {
        let c = curve_half();
        let r = c.residual();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn constant_states_have_zero_residual() {
        let params = ProfileParams::new(0.5, 1.0).unwrap();
        for val in [0.0, 1.0] {
            let c = ProfileCurve {
                params,
                tau_grid: (0..10).map(|i| i as f64 * 0.1).collect(),
                u_values: vec![val; 10],
                v_values: vec![val; 10],
                c_hat_fit: None,
                normalization_shift: 0.0,
                tau_step: 0.1,
                normalized: false,
            };
            assert_eq!(c.residual(), 0.0);
        }
    }

    #[test]
    fn stored_average_matches_quadrature() {
        let c = curve_half();
        let worst = c.quadrature_check();
        assert!(worst < 1e-6, "quadrature mismatch {worst:e}");
    }

    #[test]
    fn refinement_changes_little() {
        let coarse = curve_half();
        let fine = shoot(
            0.5,
            &ShootConfig {
                tau_step: 5e-4,
                h_max: 1e-3,
                ..ShootConfig::default()
            },
        )
        .unwrap();
        let lo = coarse.tau_grid[0].max(fine.tau_grid[0]);
        let hi = coarse.tau_grid.last().unwrap().min(*fine.tau_grid.last().unwrap());
        let mut worst = 0.0_f64;
        for k in 0..100 {
            let tau = lo + (hi - lo) * k as f64 / 99.0;
            let d = (coarse.u_at_tau(tau).unwrap() - fine.u_at_tau(tau).unwrap()).abs();
            worst = worst.max(d);
        }
        assert!(worst < 1e-9, "refinement drift {worst:e}");
    }

    #[test]
    fn start_amplitude_does_not_matter() {
        let series = coefficients(0.5, 120).unwrap();
        let a = curve_half().normalize(&series).unwrap();
        let b = shoot(
            0.5,
            &ShootConfig {
                epsilon: 5e-9,
                ..ShootConfig::default()
            },
        )
        .unwrap()
        .normalize(&series)
        .unwrap();
        let lo = a.tau_grid[0].max(b.tau_grid[0]);
        let hi = a.tau_grid.last().unwrap().min(*b.tau_grid.last().unwrap());
        let mut worst = 0.0_f64;
        for k in 0..100 {
            let tau = lo + (hi - lo) * k as f64 / 99.0;
            let d = (a.u_at_tau(tau).unwrap() - b.u_at_tau(tau).unwrap()).abs();
            worst = worst.max(d);
        }
        assert!(worst < 1e-8, "start-amplitude drift {worst:e}");
    }

    #[test]
    fn evaluator_glues_routes_consistently() {
        let series = coefficients(0.5, 120).unwrap();
        let mut c = curve_half().normalize(&series).unwrap();
        c.fit_tail().unwrap();
        let ev = ProfileEvaluator::new(c, series).unwrap();
        // The two inner routes agree where they hand over.
        let z_switch = ev.w_switch.powf(2.0);
        let by_series = ev.series().eval_series(z_switch).unwrap().value;
        let by_grid = ev.curve().u_at_tau(z_switch.ln()).unwrap();
        assert!(
            (by_series - by_grid).abs() < 2e-9 * by_series,
            "handover mismatch {:e}",
            (by_series - by_grid).abs()
        );
        // The tail branch continues the curve monotonically toward 1.
        let tau_end = *ev.curve().tau_grid.last().unwrap();
        let end = ev.u(tau_end.exp()).unwrap();
        let past = ev.u((tau_end + 1.0).exp()).unwrap();
        assert!(past > end && past < 1.0);
        assert!(ev.u(-1.0).is_err());
        assert!(ev.u(0.0).is_err());
    }

    #[test]
    fn evaluator_requires_finished_curve() {
        let series = coefficients(0.5, 120).unwrap();
        let raw = curve_half();
        assert!(ProfileEvaluator::new(raw, series.clone()).is_err());
        let normalized = curve_half().normalize(&series).unwrap();
        assert!(ProfileEvaluator::new(normalized, series).is_err());
    }

    #[test]
    fn csv_has_three_columns() {
        let c = shoot(
            0.5,
            &ShootConfig {
                stop_gap: 1e-8,
                tau_step: 0.1,
                ..ShootConfig::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap(), &csv::StringRecord::from(vec!["z", "u", "v"]));
        let first = rdr.records().next().unwrap().unwrap();
        let z: f64 = first[0].parse().unwrap();
        let u: f64 = first[1].parse().unwrap();
        assert!(z > 0.0 && u > 0.0 && u < 1.0);
    }
}
