//! Geometric grids and the averaging operator behind the transform dynamics.
//!
//! Everything here lives on grids s_k = s_min·r^k. Geometric spacing matches
//! how the dynamics move mass: the self-similar rescaling s·e^{-βt} is a
//! rigid shift in log s, and power-law behavior near s = 0 becomes a linear
//! ramp. The averaging operator (𝒜U)(s) = (1/s)∫₀^s U(r)dr is computed with
//! one cumulative trapezoid pass; the piece of the integral below the grid
//! is closed analytically using the assumed power U ~ s^left_exponent there.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GridFunction {
    s_min: f64,
    ratio: f64,
    ln_s_min: f64,
    ln_ratio: f64,
    pub values: Vec<f64>,
    /// Power-law exponent assumed for the function on (0, s_min); must
    /// exceed -1 so that the average integral converges.
    pub left_exponent: f64,
}

impl GridFunction {
    /// Grid covering [s_min, s_max] with `per_decade` points per decade,
    /// all values zero.
    pub fn zeros(s_min: f64, s_max: f64, per_decade: usize, left_exponent: f64) -> Result<Self> {
        if !(s_min > 0.0 && s_max > s_min && s_max.is_finite()) {
            return Err(Error::Domain(format!(
                "need 0 < s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        if per_decade == 0 {
            return Err(Error::Domain("per_decade must be at least 1".into()));
        }
        if !(left_exponent > -1.0 && left_exponent.is_finite()) {
            return Err(Error::Domain(format!(
                "left exponent must exceed -1 for an integrable closure, got {left_exponent}"
            )));
        }
        let decades = (s_max / s_min).log10();
        let k_max = (decades * per_decade as f64).ceil() as usize;
        let ln_ratio = std::f64::consts::LN_10 / per_decade as f64;
        Ok(Self {
            s_min,
            ratio: ln_ratio.exp(),
            ln_s_min: s_min.ln(),
            ln_ratio,
            values: vec![0.0; k_max + 1],
            left_exponent,
        })
    }

    /// Grid with values f(s_k).
    pub fn sample<F: Fn(f64) -> f64>(
        s_min: f64,
        s_max: f64,
        per_decade: usize,
        left_exponent: f64,
        f: F,
    ) -> Result<Self> {
        let mut g = Self::zeros(s_min, s_max, per_decade, left_exponent)?;
        for k in 0..g.values.len() {
            g.values[k] = f(g.s(k));
        }
        Ok(g)
    }

    /// Same grid geometry, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len(), "grid size mismatch");
        Self {
            values,
            ..*self
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn s(&self, k: usize) -> f64 {
        self.s_min * self.ratio.powi(k as i32)
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.values.len() - 1)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && (self.ln_s_min - other.ln_s_min).abs() < 1e-12
            && (self.ln_ratio - other.ln_ratio).abs() < 1e-15
    }

    /// Interpolates the sampled function at s, cubic in log s away from the
    /// edges. Fails outside [s_min, s_max].
    pub fn value_at(&self, s: f64) -> Result<f64> {
        let n = self.values.len();
        let t = (s.ln() - self.ln_s_min) / self.ln_ratio;
        if !(t >= -1e-9 && t <= (n - 1) as f64 + 1e-9) {
            return Err(Error::Domain(format!(
                "s = {s:.6e} outside grid [{:.6e}, {:.6e}]",
                self.s_min,
                self.s_max()
            )));
        }
        let t = t.clamp(0.0, (n - 1) as f64);
        let nearest = t.round();
        if (t - nearest).abs() < 1e-9 {
            return Ok(self.values[nearest as usize]);
        }
        if n < 4 {
            let i = (t as usize).min(n - 2);
            let x = t - i as f64;
            return Ok(self.values[i] * (1.0 - x) + self.values[i + 1] * x);
        }
        let i = (t.floor() as usize).clamp(1, n - 3);
        let x = t - i as f64;
        let (ym, y0, y1, y2) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // Lagrange on equispaced log-s nodes -1, 0, 1, 2.
        let v = -ym * x * (x - 1.0) * (x - 2.0) / 6.0
            + y0 * (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0
            - y1 * (x + 1.0) * x * (x - 2.0) / 2.0
            + y2 * (x + 1.0) * x * (x - 1.0) / 6.0;
        Ok(v)
    }

    /// (1/s)∫₀^s U(r)dr at one point inside the grid.
    pub fn averaging(&self, s: f64) -> Result<f64> {
        let n = self.values.len();
        let t = (s.ln() - self.ln_s_min) / self.ln_ratio;
        if !(t >= -1e-9 && t <= (n - 1) as f64 + 1e-9) {
            return Err(Error::Domain(format!(
                "s = {s:.6e} outside grid [{:.6e}, {:.6e}]",
                self.s_min,
                self.s_max()
            )));
        }
        let t = t.clamp(0.0, (n - 1) as f64);
        let k = t.floor() as usize;
        let mut integral = self.values[0] * self.s_min / (1.0 + self.left_exponent);
        let mut prev_s = self.s_min;
        for j in 1..=k {
            let sj = self.s(j);
            integral += 0.5 * (self.values[j - 1] + self.values[j]) * (sj - prev_s);
            prev_s = sj;
        }
        if t > k as f64 && k + 1 < n {
            let sk = self.s(k);
            let sk1 = self.s(k + 1);
            let frac = (s - sk) / (sk1 - sk);
            let u_s = self.values[k] * (1.0 - frac) + self.values[k + 1] * frac;
            integral += 0.5 * (self.values[k] + u_s) * (s - sk);
        }
        Ok(integral / s)
    }

    /// 𝒜U at every grid point; one prefix pass.
    pub fn average_all(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        Averager::new(self, 1.0).apply(&self.values, &mut out);
        out
    }

    /// Grid carrying the same values viewed in the variable x = s^p: nodes
    /// map to s_k^p and the left exponent rescales to keep the assumed
    /// power-law tail the same function of the new variable.
    pub fn power_image(&self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("power {p} must be positive and finite")));
        }
        let left_exponent = self.left_exponent / p;
        if left_exponent <= -1.0 {
            return Err(Error::Domain(format!(
                "mapped left exponent {left_exponent} is no longer integrable"
            )));
        }
        let ln_s_min = self.ln_s_min * p;
        let ln_ratio = self.ln_ratio * p;
        Ok(Self {
            s_min: ln_s_min.exp(),
            ratio: ln_ratio.exp(),
            ln_s_min,
            ln_ratio,
            values: self.values.clone(),
            left_exponent,
        })
    }

    /// Discrete L² norm with the grid's trapezoid weights.
    pub fn l2_norm(&self) -> f64 {
        let n = self.values.len();
        let mut acc = 0.0;
        for k in 0..n {
            let w = match k {
                0 => 0.5 * (self.s(1) - self.s(0)),
                _ if k == n - 1 => 0.5 * (self.s(n - 1) - self.s(n - 2)),
                _ => 0.5 * (self.s(k + 1) - self.s(k - 1)),
            };
            acc += w * self.values[k] * self.values[k];
        }
        acc.sqrt()
    }
}

/// Precomputed quadrature for repeated averaging passes on one grid
/// geometry. With `alpha = 1` this is the plain average 𝒜; general alpha
/// gives A_α V(s) = s^{-1/α}∫₀^s V(ρ) d(ρ^{1/α}), the operator driving the
/// decomposed dynamics, with the integration carried out in the substituted
/// coordinate w = ρ^{1/α} where it is again an ordinary trapezoid rule.
pub struct Averager {
    w: Vec<f64>,
    closure_denom: f64,
}

impl Averager {
    pub fn new(grid: &GridFunction, alpha: f64) -> Self {
        let inv_alpha = 1.0 / alpha;
        let w = (0..grid.len()).map(|k| grid.s(k).powf(inv_alpha)).collect();
        Self {
            w,
            closure_denom: 1.0 + alpha * grid.left_exponent,
        }
    }

    pub fn apply(&self, values: &[f64], out: &mut [f64]) {
        let mut integral = values[0] * self.w[0] / self.closure_denom;
        out[0] = integral / self.w[0];
        for k in 1..values.len() {
            integral += 0.5 * (values[k - 1] + values[k]) * (self.w[k] - self.w[k - 1]);
            out[k] = integral / self.w[k];
        }
    }
}

/// Max over the samples of ‖𝒜U‖₂/‖U‖₂. Hardy's inequality bounds the exact
/// ratio by 2; quadrature can add a little slack on top.
pub fn hardy_norm_probe(samples: &[GridFunction]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("hardy probe needs at least one sample".into()));
    }
    let mut worst = 0.0_f64;
    for g in samples {
        let avg = g.with_values(g.average_all());
        worst = worst.max(avg.l2_norm() / g.l2_norm());
    }
    Ok(worst)
}
