//! Adaptive Dormand-Prince 5(4) integration with dense output hooks.
//!
//! The driver hands every accepted step, endpoint derivatives included, to a
//! caller closure. The closure owns all storage and can stop the run early,
//! so the same machinery serves a two-dimensional phase-plane shot and a
//! 10^5-dimensional truncated kinetic system. Derivatives at step endpoints
//! come free of charge (first-same-as-last), which makes cubic Hermite
//! interpolation between accepted points C^1 and accurate to O(h^4).

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; 0 means pick automatically.
    pub h_init: f64,
    /// Hard cap on the step size. Besides stability this bounds the dense
    /// output error, which scales like h^4 between accepted points.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-16,
            h_init: 0.0,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

/// One accepted step with derivatives at both ends.
#[derive(Debug)]
pub struct AcceptedStep<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    pub f0: &'a [f64],
    pub f1: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Stop,
}

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates dy/dt = f(t, y) from t0 toward t_end (which may be infinite
/// when the stop decision lives in the callback). Returns the final time and
/// state. The callback sees every accepted step and may end the run.
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    t_end: f64,
    y_init: &[f64],
    opts: &OdeOptions,
    mut on_accept: G,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(AcceptedStep) -> Result<StepControl>,
{
    let dim = y_init.len();
    let mut t = t0;
    let mut y = y_init.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y_stage = vec![0.0; dim];
    let mut y_next = vec![0.0; dim];

    let mut h = if opts.h_init > 0.0 {
        opts.h_init
    } else if t_end.is_finite() {
        ((t_end - t0) * 1e-4).clamp(1e-10, opts.h_max)
    } else {
        (opts.h_max / 100.0).min(1e-3)
    };
    h = h.min(opts.h_max);

    f(t, &y, &mut k[0]);
    let mut rejects_in_a_row = 0;
    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok((t, y));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Stalled { at: t, step: h });
        }
        let mut h_step = h.min(opts.h_max);
        if t + h_step > t_end {
            h_step = t_end - t;
        }

        for s in 1..6 {
            let a: &[f64] = match s {
                1 => &A2,
                2 => &A3,
                3 => &A4,
                4 => &A5,
                _ => &A6,
            };
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, &aj) in a.iter().enumerate() {
                    acc += aj * k[j][i];
                }
                y_stage[i] = y[i] + h_step * acc;
            }
            f(t + C[s - 1] * h_step, &y_stage, &mut k[s]);
        }
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, &bj) in B.iter().enumerate() {
                acc += bj * k[j][i];
            }
            y_next[i] = y[i] + h_step * acc;
        }
        let t_next = t + h_step;
        f(t_next, &y_next, &mut k[6]);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, &ej) in E.iter().enumerate() {
                e += ej * k[j][i];
            }
            e *= h_step;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_next[i].abs());
            let r = e / scale;
            err_sq += r * r;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            rejects_in_a_row = 0;
            let control = on_accept(AcceptedStep {
                t0: t,
                t1: t_next,
                y0: &y,
                y1: &y_next,
                f0: &k[0],
                f1: &k[6],
            })?;
            t = t_next;
            std::mem::swap(&mut y, &mut y_next);
            k.swap(0, 6);
            if control == StepControl::Stop {
                return Ok((t, y));
            }
            if t >= t_end {
                return Ok((t, y));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h_step * factor).min(opts.h_max);
        } else {
            rejects_in_a_row += 1;
            if rejects_in_a_row > 30 {
                return Err(Error::Stalled { at: t, step: h_step });
            }
            h = h_step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Err(Error::Stalled { at: t, step: h })
}

/// Cubic Hermite value at fraction `theta` of a step of width `h`.
pub fn hermite(theta: f64, h: f64, y0: f64, f0: f64, y1: f64, f1: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + theta) * h * f0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * f1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_tracked_tightly() {
        let opts = OdeOptions {
            h_max: 0.1,
            ..OdeOptions::default()
        };
        let (t, y) = integrate(
            |_t, y, dy| dy[0] = -y[0],
            0.0,
            5.0,
            &[1.0],
            &opts,
            |_s| Ok(StepControl::Continue),
        )
        .unwrap();
        assert_eq!(t, 5.0);
        let exact = (-5.0_f64).exp();
        assert!((y[0] - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn stops_when_callback_says_so() {
        let (t, y) = integrate(
            |_t, y, dy| dy[0] = y[0],
            0.0,
            f64::INFINITY,
            &[1.0],
            &OdeOptions {
                h_max: 0.05,
                ..OdeOptions::default()
            },
            |s| {
                if s.y1[0] > 2.0 {
                    Ok(StepControl::Stop)
                } else {
                    Ok(StepControl::Continue)
                }
            },
        )
        .unwrap();
        assert!(y[0] >= 2.0);
        assert!((y[0].ln() - t).abs() < 1e-12);
    }

    #[test]
    fn propagates_callback_errors() {
        let r = integrate(
            |_t, y, dy| dy[0] = y[0],
            0.0,
            10.0,
            &[1.0],
            &OdeOptions::default(),
            |s| {
                if s.y1[0] > 3.0 {
                    Err(crate::Error::Domain("test abort".into()))
                } else {
                    Ok(StepControl::Continue)
                }
            },
        );
        assert!(r.is_err());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // u(t) = t^3 on [2, 3]: cubic Hermite is exact for cubics.
        let (y0, f0) = (8.0, 12.0);
        let (y1, f1) = (27.0, 27.0);
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let t: f64 = 2.0 + theta;
            let got = hermite(theta, 1.0, y0, f0, y1, f1);
            assert!((got - t.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_error_scales_like_h4() {
        // Midpoint interpolation error for y = e^t over a step h is about
        // e^t h^4/384; halving h must shrink it 16-fold.
        let mut errs = Vec::new();
        for h in [0.2_f64, 0.1] {
            let (y0, f0) = (1.0, 1.0);
            let (y1, f1) = ((h).exp(), (h).exp());
            let mid = hermite(0.5, h, y0, f0, y1, f1);
            errs.push((mid - (0.5 * h).exp()).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }
}
