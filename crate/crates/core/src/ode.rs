//! Dormand-Prince 5(4) with step-size control and forced stops.
//!
//! Every accepted step is recorded, so the returned trajectory is a dense set
//! of nodes with states and right-hand sides (enough for Hermite
//! interpolation). Output points and breakpoints are hit exactly. At a
//! breakpoint the last stage of the incoming step is evaluated just left of
//! the stop and the first stage of the outgoing step just right of it, so
//! jump discontinuities in the right-hand side do not pollute either side.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
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
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    /// Index into `t` of each requested output point, in request order.
    pub output_index: Vec<usize>,
}

impl<const N: usize> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> (f64, [f64; N]) {
        let i = self.t.len() - 1;
        (self.t[i], self.y[i])
    }
}

#[derive(Clone, Copy)]
struct Stop {
    t: f64,
    is_break: bool,
    is_output: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (k, a) in terms {
            acc += a * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn nudge(t: f64) -> f64 {
    8.0 * f64::EPSILON * t.abs().max(1.0)
}

impl Dopri5 {
    /// Integrate `y' = f(t, y)` from `t0` to `t_end`.
    ///
    /// `outputs` and `breakpoints` outside `[t0, t_end]` are ignored; outputs
    /// need not be sorted but are reported in the given order.
    pub fn solve<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        outputs: &[f64],
        breakpoints: &[f64],
    ) -> Result<Trajectory<N>>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        if !(t_end > t0) {
            return Err(Error::Input(format!("integration window [{t0}, {t_end}] is empty")));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Input("integrator tolerances must be positive".into()));
        }

        let mut stops: Vec<Stop> = Vec::new();
        for &b in breakpoints {
            if b > t0 && b < t_end {
                stops.push(Stop {
                    t: b,
                    is_break: true,
                    is_output: false,
                });
            }
        }
        for &o in outputs {
            if o > t0 && o <= t_end {
                stops.push(Stop {
                    t: o,
                    is_break: false,
                    is_output: true,
                });
            }
        }
        stops.push(Stop {
            t: t_end,
            is_break: false,
            is_output: false,
        });
        stops.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut merged: Vec<Stop> = Vec::with_capacity(stops.len());
        for s in stops {
            match merged.last_mut() {
                Some(last) if last.t == s.t => {
                    last.is_break |= s.is_break;
                    last.is_output |= s.is_output;
                }
                _ => merged.push(s),
            }
        }

        let mut traj = Trajectory {
            t: vec![t0],
            y: vec![y0],
            dy: Vec::new(),
            output_index: Vec::new(),
        };
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t0, &y0);
        traj.dy.push(k1);
        let mut stop_at = std::collections::HashMap::new();

        let span = t_end - t0;
        let mut h = (1e-3 * span).min(self.h_max);
        let mut si = 0;
        let mut steps = 0usize;

        while si < merged.len() {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    t,
                    detail: "step budget exhausted".into(),
                });
            }
            let stop = merged[si];
            let h_free = h;
            let landing = t + h >= stop.t - nudge(stop.t);
            if landing {
                h = stop.t - t;
            }
            let t_end_stage = if landing && stop.is_break {
                stop.t - nudge(stop.t)
            } else {
                t + h
            };

            let k2 = f(t + C[1] * h, &axpy(&y, h, &[(&k1, A2[0])]));
            let k3 = f(t + C[2] * h, &axpy(&y, h, &[(&k1, A3[0]), (&k2, A3[1])]));
            let k4 = f(t + C[3] * h, &axpy(&y, h, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]));
            let k5 = f(
                t + C[4] * h,
                &axpy(&y, h, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])]),
            );
            let k6 = f(
                t_end_stage,
                &axpy(
                    &y,
                    h,
                    &[(&k1, A6[0]), (&k2, A6[1]), (&k3, A6[2]), (&k4, A6[3]), (&k5, A6[4])],
                ),
            );
            let y5 = axpy(
                &y,
                h,
                &[(&k1, B[0]), (&k3, B[2]), (&k4, B[3]), (&k5, B[4]), (&k6, B[5])],
            );
            let k7 = f(t_end_stage, &y5);

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..N {
                let e = h * (E[0] * k1[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                err += (e / sc).powi(2);
                finite &= y5[i].is_finite();
            }
            if !finite {
                return Err(Error::Integration {
                    t,
                    detail: "non-finite state".into(),
                });
            }
            let err = (err / N as f64).sqrt();

            if err <= 1.0 {
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                t = if landing { stop.t } else { t + h };
                y = y5;
                traj.t.push(t);
                traj.y.push(y);
                traj.dy.push(k7);
                k1 = if landing && stop.is_break {
                    f(t + nudge(t), &y)
                } else {
                    k7
                };
                if landing {
                    if stop.is_output {
                        stop_at.insert(stop.t.to_bits(), traj.t.len() - 1);
                    }
                    si += 1;
                    h = (fac * h).max(h_free).min(self.h_max);
                } else {
                    h = (fac * h).min(self.h_max);
                }
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        t,
                        detail: format!("step size underflow (error ratio {err:.2e})"),
                    });
                }
            }
        }

        for &o in outputs {
            if o == t0 {
                traj.output_index.push(0);
            } else if let Some(&i) = stop_at.get(&o.to_bits()) {
                traj.output_index.push(i);
            } else {
                return Err(Error::Input(format!("output point {o} outside ({t0}, {t_end}]")));
            }
        }
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let tr = Dopri5::new(1e-12)
            .solve(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 3.0, &[1.0, 2.0], &[])
            .unwrap();
        let (t, y) = tr.last();
        assert_eq!(t, 3.0);
        assert!((y[0] / 3f64.exp() - 1.0).abs() < 1e-10);
        assert_eq!(tr.t[tr.output_index[0]], 1.0);
        assert!((tr.y[tr.output_index[1]][0] - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let tr = Dopri5::new(1e-11)
            .solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 20.0, &[], &[])
            .unwrap();
        for y in &tr.y {
            assert!((y[0] * y[0] + y[1] * y[1] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn jump_in_coefficient() {
        // x'' = [t <= 1] x, x(0)=0, x'(0)=1 -> x(2) = sinh 1 + cosh 1
        let tr = Dopri5::new(1e-12)
            .solve(
                |t, y: &[f64; 2]| [y[1], if t <= 1.0 { y[0] } else { 0.0 }],
                0.0,
                [0.0, 1.0],
                2.0,
                &[],
                &[1.0],
            )
            .unwrap();
        let (_, y) = tr.last();
        let exact = 1f64.sinh() + 1f64.cosh();
        assert!((y[0] - exact).abs() < 1e-10, "{} vs {}", y[0], exact);
    }

    #[test]
    fn rejects_empty_window() {
        assert!(Dopri5::new(1e-8)
            .solve(|_, y: &[f64; 1]| *y, 1.0, [1.0], 1.0, &[], &[])
            .is_err());
    }
}
