//! Fractional power series of the profile near z = 0.
//!
//! The profile admits an expansion u(z) = Σ (-1)^{n-1} c_n z^{αn} whose
//! coefficients obey c_1 = 1 and
//!
//!   c_n = (Σ_{k=1}^{n-1} c_k c_{n-k}) / a_n,   a_n = βαn + 1 - 2/(αn + 1).
//!
//! In the variable w = z^α the series has radius R bounded by
//! (1-α)/(1+α) ≤ R ≤ a_2 < 1, so c_n grows like R^{-n} and overflows f64
//! near n ≈ 700/|ln R|. The recursion is scale invariant: d_n = c_n s^n
//! satisfies the same relation for any s > 0, so everything is computed in
//! the scaled variable with s chosen close to R and only converted back on
//! demand.

use crate::{Error, Result};

/// Coefficients of the fractional series, held in the overflow-safe scaled
/// form d_n = c_n * scale^n. `radius_est` is the ratio-test estimate of the
/// convergence radius in w = z^α, clamped to its proven bounds;
/// `gamma_star()[j]` is c_{j+1} * radius_est^j.
#[derive(Debug, Clone)]
pub struct SeriesData {
    pub alpha: f64,
    pub beta: f64,
    denoms: Vec<f64>,
    scaled: Vec<f64>,
    scale: f64,
    pub radius_est: f64,
    gamma_star: Vec<f64>,
}

/// Result of summing the series at one point.
#[derive(Debug, Clone, Copy)]
pub struct SeriesEval {
    pub value: f64,
    /// Bound on the truncation error, from the first omitted term.
    pub err_bound: f64,
    /// Set when err_bound exceeds 1e-10 of the value.
    pub warn: bool,
    pub terms_used: usize,
}

/// Least-squares fit of the coefficient ratios c_n/c_{n+1} ≈ radius + slope/n
/// over the last quartile. A small `slope` is what a simple pole at the
/// radius would produce; branch-point behavior shows up as slope ~ radius.
#[derive(Debug, Clone, Copy)]
pub struct RatioFit {
    pub radius: f64,
    pub slope: f64,
    /// Root-mean-square misfit of the ratios, relative to `radius`.
    pub residual: f64,
}

/// Outcome of the complete-monotonicity probe of the rescaled coefficients.
/// `worst` is the minimum over k ≤ depth, j of (-1)^k (Δ^k γ*)_j; complete
/// monotonicity means it stays nonnegative up to rounding.
#[derive(Debug, Clone, Copy)]
pub struct CmReport {
    pub worst: f64,
    pub k: usize,
    pub j: usize,
    pub depth: usize,
    pub radius_used: f64,
}

/// Computes c_1..c_{n_max} for the given tail index.
///
/// `alpha` may be 1, which means β = 0; there the coefficients reduce to the
/// Fuss-Catalan numbers A_n(3,1). Fails with an overflow error only if the
/// scaled recursion cannot be kept inside f64 range.
pub fn coefficients(alpha: f64, n_max: usize) -> Result<SeriesData> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let beta = crate::params::beta_of_alpha(alpha)?;

    let mut denoms = Vec::with_capacity(n_max);
    // a_1 = βα + 1 - 2/(α+1) vanishes identically: it is the eigenvalue
    // identity (1 + βα)(1 + α) = 2 in disguise.
    denoms.push(0.0);
    for n in 2..=n_max {
        let an = beta * alpha * n as f64 + 1.0 - 2.0 / (alpha * n as f64 + 1.0);
        denoms.push(an);
    }

    let mut scale = 1.0_f64;
    let mut scaled = Vec::new();
    let mut ok = false;
    for _ in 0..8 {
        match run_scaled(&denoms, scale, n_max) {
            Ok(d) => {
                scaled = d;
                ok = true;
                break;
            }
            Err((partial, n)) => {
                // Consecutive d's satisfy d_{m}/d_{m+1} ≈ R/s, so this moves
                // s onto the radius whichever way the run escaped.
                let m = partial.len();
                if m < 2 {
                    return Err(Error::Overflow { n });
                }
                scale *= partial[m - 2] / partial[m - 1];
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::Overflow { n });
                }
            }
        }
    }
    if !ok {
        return Err(Error::Overflow { n: n_max });
    }

    let lb = (1.0 - alpha) / (1.0 + alpha);
    let ub = 2.0 * beta * alpha + 1.0 - 2.0 / (2.0 * alpha + 1.0);
    let radius_est = if n_max >= 6 {
        ratio_mean(&scaled, scale).clamp(lb.max(f64::MIN_POSITIVE), ub)
    } else {
        0.5 * (lb + ub)
    };

    let mut gamma_star = Vec::with_capacity(n_max);
    let factor = radius_est / scale;
    let mut pw = 1.0;
    for d in &scaled {
        gamma_star.push(d / scale * pw);
        pw *= factor;
    }

    Ok(SeriesData {
        alpha,
        beta,
        denoms,
        scaled,
        scale,
        radius_est,
        gamma_star,
    })
}

/// One pass of the scaled recursion d_n = (Σ d_k d_{n-k}) / a_n with d_1 = s.
/// Errors with the partial result and the 1-based index at which the values
/// left the safe range [1e-250, 1e250].
fn run_scaled(denoms: &[f64], s: f64, n_max: usize) -> std::result::Result<Vec<f64>, (Vec<f64>, usize)> {
    let mut d = Vec::with_capacity(n_max);
    d.push(s);
    for n in 2..=n_max {
        let mut sum = 0.0;
        for k in 1..n {
            sum += d[k - 1] * d[n - k - 1];
        }
        let dn = sum / denoms[n - 1];
        if !(1e-250..=1e250).contains(&dn) {
            return Err((d, n));
        }
        d.push(dn);
    }
    Ok(d)
}

fn ratio_mean(scaled: &[f64], scale: f64) -> f64 {
    let n = scaled.len();
    let lo = n - (n / 4).max(2);
    let mut sum = 0.0;
    let mut count = 0.0;
    for i in lo..n - 1 {
        sum += scale * scaled[i] / scaled[i + 1];
        count += 1.0;
    }
    sum / count
}

impl SeriesData {
    pub fn n_max(&self) -> usize {
        self.scaled.len()
    }

    /// Raw coefficient c_n (1-based). Overflows to infinity when the true
    /// value exceeds f64 range; use [`SeriesData::ln_c`] there.
    pub fn c(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.scaled.len(), "coefficient index {n}");
        let d = self.scaled[n - 1];
        let sp = self.scale.powi(n as i32);
        if sp.is_normal() {
            d / sp
        } else {
            (d.ln() - n as f64 * self.scale.ln()).exp()
        }
    }

    /// ln c_n, finite for every computed n.
    pub fn ln_c(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.scaled.len(), "coefficient index {n}");
        self.scaled[n - 1].ln() - n as f64 * self.scale.ln()
    }

    /// Recursion denominator a_n (1-based); a_1 = 0.
    pub fn a(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.denoms.len(), "denominator index {n}");
        self.denoms[n - 1]
    }

    /// Rescaled coefficients γ*_j = c_{j+1} · radius_est^j, j = 0..n_max-1.
    pub fn gamma_star(&self) -> &[f64] {
        &self.gamma_star
    }

    /// Ratio c_n / c_{n+1}, the quantity whose limit is the radius.
    pub fn coeff_ratio(&self, n: usize) -> f64 {
        assert!(n >= 1 && n < self.scaled.len(), "ratio index {n}");
        self.scale * self.scaled[n - 1] / self.scaled[n]
    }

    /// Sums the series at z > 0.
    ///
    /// The terms alternate in sign, so once their magnitudes decrease the
    /// partial sums bracket the limit and the first omitted term bounds the
    /// truncation error. Fails if z^α reaches the estimated radius, or if the
    /// terms are found to grow while still significant (the estimate was too
    /// generous for this z).
    pub fn eval_series(&self, z: f64) -> Result<SeriesEval> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("z must be positive, got {z}")));
        }
        let zpow = z.powf(self.alpha);
        if zpow >= self.radius_est {
            return Err(Error::Divergent {
                zpow,
                radius: self.radius_est,
            });
        }
        let x = zpow / self.scale;
        let mut sum = 0.0_f64;
        let mut xp = 1.0;
        let mut sign = 1.0;
        let mut prev = f64::INFINITY;
        let mut err_bound = 0.0;
        let mut terms_used = 0;
        for (i, d) in self.scaled.iter().enumerate() {
            xp *= x;
            let mag = d * xp;
            if mag > prev && prev > 64.0 * f64::EPSILON * sum.abs() {
                return Err(Error::Divergent {
                    zpow,
                    radius: self.radius_est,
                });
            }
            sum += sign * mag;
            sign = -sign;
            prev = mag;
            terms_used = i + 1;
            let next = self
                .scaled
                .get(i + 1)
                .map(|dn| dn * xp * x)
                .unwrap_or_else(|| {
                    let q = (mag / self.scaled[i - 1].max(f64::MIN_POSITIVE) / xp * x).min(0.99);
                    mag * q / (1.0 - q)
                });
            err_bound = next;
            if next <= f64::EPSILON * sum.abs() {
                break;
            }
        }
        let warn = err_bound > 1e-10 * sum.abs();
        Ok(SeriesEval {
            value: sum,
            err_bound,
            warn,
            terms_used,
        })
    }

    /// Ratio-test radius estimate averaged over the last quartile of the
    /// computed coefficients, clamped to the proven bounds.
    ///
    /// Fails if successive ratios in the quartile vary by more than 1%,
    /// which means the tail has not settled and no single number deserves
    /// to be called the radius.
    pub fn radius_estimate(&self) -> Result<f64> {
        let n = self.scaled.len();
        if n < 20 {
            return Err(Error::Domain(format!(
                "radius estimate needs at least 20 coefficients, have {n}"
            )));
        }
        let lo = n - n / 4;
        let mut worst = 0.0_f64;
        for i in lo..n - 2 {
            let r0 = self.coeff_ratio(i);
            let r1 = self.coeff_ratio(i + 1);
            worst = worst.max((r1 / r0 - 1.0).abs());
        }
        if worst > 0.01 {
            return Err(Error::RatioUnstable { spread: worst });
        }
        let lb = (1.0 - self.alpha) / (1.0 + self.alpha);
        let ub = self.denoms[1];
        Ok(ratio_mean(&self.scaled, self.scale).clamp(lb.max(f64::MIN_POSITIVE), ub))
    }

    /// Fits radius + slope/n to the last-quartile ratios, extrapolating away
    /// the leading finite-n bias and quantifying how pole-like the
    /// singularity looks (a simple pole leaves slope near zero).
    pub fn ratio_fit(&self) -> Result<RatioFit> {
        let n = self.scaled.len();
        if n < 20 {
            return Err(Error::Domain(format!(
                "ratio fit needs at least 20 coefficients, have {n}"
            )));
        }
        let lo = n - n / 4;
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in lo..n - 1 {
            let x = 1.0 / i as f64;
            let y = self.coeff_ratio(i);
            sw += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let det = sw * sxx - sx * sx;
        let radius = (sxx * sy - sx * sxy) / det;
        let slope = (sw * sxy - sx * sy) / det;
        let mut ss = 0.0;
        for i in lo..n - 1 {
            let x = 1.0 / i as f64;
            let r = self.coeff_ratio(i) - (radius + slope * x);
            ss += r * r;
        }
        Ok(RatioFit {
            radius,
            slope,
            residual: (ss / sw).sqrt() / radius,
        })
    }

    /// Checks complete monotonicity of γ*_j built from the stored radius
    /// estimate: all signed finite differences (-1)^k (Δ^k γ*)_j for
    /// k ≤ depth should be nonnegative. Returns the worst value found; it is
    /// up to the caller to judge it against the accuracy of the radius.
    pub fn gamma_star_cm_check(&self, depth: usize) -> Result<CmReport> {
        self.gamma_star_cm_check_with_radius(self.radius_est, depth)
    }

    /// Same probe with an explicit radius, for use with exactly known radii
    /// or to see how a misscaled radius destroys the monotone structure.
    pub fn gamma_star_cm_check_with_radius(&self, radius: f64, depth: usize) -> Result<CmReport> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        let n = self.scaled.len();
        if depth > n / 2 {
            return Err(Error::Domain(format!(
                "depth {depth} exceeds n_max/2 = {}",
                n / 2
            )));
        }
        let factor = radius / self.scale;
        let mut row: Vec<f64> = Vec::with_capacity(n);
        let mut pw = 1.0;
        for d in &self.scaled {
            row.push(d / self.scale * pw);
            pw *= factor;
        }
        let mut report = CmReport {
            worst: f64::INFINITY,
            k: 0,
            j: 0,
            depth,
            radius_used: radius,
        };
        let mut sign = 1.0;
        for k in 0..=depth {
            for (j, &v) in row.iter().enumerate() {
                let signed = sign * v;
                if signed < report.worst {
                    report.worst = signed;
                    report.k = k;
                    report.j = j;
                }
            }
            for j in 0..row.len() - 1 {
                row[j] = row[j + 1] - row[j];
            }
            row.pop();
            sign = -sign;
        }
        Ok(report)
    }

    /// Writes rows (n, c_n, a_n, gamma_star) for inspection.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "c_n", "a_n", "gamma_star"])
            .map_err(csv_io)?;
        for n in 1..=self.n_max() {
            wtr.write_record(&[
                n.to_string(),
                format!("{:.17e}", self.c(n)),
                format!("{:.17e}", self.a(n)),
                format!("{:.17e}", self.gamma_star[n - 1]),
            ])
            .map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
}
