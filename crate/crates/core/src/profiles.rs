//! Curvature decay profiles λ and their moments.
//!
//! A profile bounds the negative part of the Bakry-Émery Ricci curvature by
//! `-(n+α-1) λ(d(o, ·))`. It must be nonnegative and nonincreasing, and is
//! *admissible* when `b₀ = ∫ s λ(s) ds` is finite (which forces `b₁ = ∫ λ`
//! finite too).

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::func::ScalarFn;
use crate::quad::{integrate, QuadOptions};

/// Windows for closed-form families are capped at this many scale lengths;
/// the exact tail integral covers the rest.
const WINDOW_CAP: f64 = 1e12;

/// A nonincreasing, nonnegative curvature decay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub enum DecayProfile {
    Zero,
    /// `λ₀ e^{-a s}`
    Exponential {
        lambda0: f64,
        a: f64,
    },
    /// `λ₀ (1 + s/s₀)^{-p}`
    PowerLaw {
        lambda0: f64,
        s0: f64,
        p: f64,
    },
    /// `λ₀ max(0, 1 - s/s₁)`
    LinearBump {
        lambda0: f64,
        s1: f64,
    },
    Sampled(SampledProfile),
}

/// Piecewise-linear profile on a grid starting at 0, continued past the last
/// node by the power law `v_last (s / s_last)^{-p}` with `p` fitted on the
/// last decade of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
    tail_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub b0: f64,
    pub b1: f64,
    pub abs_error_bound: f64,
}

impl SampledProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return input("sampled profile needs at least two nodes and matching lengths");
        }
        if grid[0] != 0.0 {
            return input("sampled profile grid must start at 0");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return input("sampled profile grid must be strictly increasing");
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return input("sampled profile values must be finite and nonnegative");
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return input(format!(
                "sampled profile increases between s = {} and s = {}",
                grid[i],
                grid[i + 1]
            ));
        }
        let tail_exponent = fit_tail_exponent(&grid, &values)?;
        Ok(Self {
            grid,
            values,
            tail_exponent,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fitted tail exponent; `+∞` when the profile vanishes at the last node.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    fn last(&self) -> (f64, f64) {
        (*self.grid.last().unwrap(), *self.values.last().unwrap())
    }

    fn value(&self, s: f64) -> f64 {
        let (s_last, v_last) = self.last();
        if s >= s_last {
            if v_last == 0.0 {
                return 0.0;
            }
            return v_last * (s / s_last).powf(-self.tail_exponent);
        }
        let i = self.grid.partition_point(|&g| g <= s).saturating_sub(1);
        let (s0, s1) = (self.grid[i], self.grid[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let w = (s - s0) / (s1 - s0);
        // convex combination keeps monotonicity exact in floating point
        (v0 * (1.0 - w) + v1 * w).clamp(v1, v0)
    }
}

fn fit_tail_exponent(grid: &[f64], values: &[f64]) -> Result<f64> {
    let s_last = *grid.last().unwrap();
    let v_last = *values.last().unwrap();
    if v_last == 0.0 {
        return Ok(f64::INFINITY);
    }
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(values)
        .filter(|(s, v)| **s > 0.0 && **s >= s_last / 10.0 && **v > 0.0)
        .map(|(s, v)| (s.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return input("sampled profile needs two positive nodes in its last decade to fit a tail");
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok((-sxy / sxx).max(0.0))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        input(format!("{name} must be positive and finite, got {v}"))
    }
}

impl DecayProfile {
    pub fn exponential(lambda0: f64, a: f64) -> Result<Self> {
        positive("lambda0", lambda0)?;
        positive("a", a)?;
        Ok(Self::Exponential { lambda0, a })
    }

    pub fn power_law(lambda0: f64, s0: f64, p: f64) -> Result<Self> {
        positive("lambda0", lambda0)?;
        positive("s0", s0)?;
        positive("p", p)?;
        Ok(Self::PowerLaw { lambda0, s0, p })
    }

    pub fn linear_bump(lambda0: f64, s1: f64) -> Result<Self> {
        positive("lambda0", lambda0)?;
        positive("s1", s1)?;
        Ok(Self::LinearBump { lambda0, s1 })
    }

    pub fn sampled(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = SampledProfile::new(grid, values)?;
        if s.values.iter().all(|&v| v == 0.0) {
            return Ok(Self::Zero);
        }
        Ok(Self::Sampled(s))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Exponential { .. } => "exponential",
            Self::PowerLaw { .. } => "power_law",
            Self::LinearBump { .. } => "linear_bump",
            Self::Sampled(_) => "sampled",
        }
    }

    /// `λ(s)`; negative arguments are treated as 0.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Self::Zero => 0.0,
            Self::Exponential { lambda0, a } => lambda0 * (-a * s).exp(),
            Self::PowerLaw { lambda0, s0, p } => lambda0 * (1.0 + s / s0).powf(-p),
            Self::LinearBump { lambda0, s1 } => lambda0 * (1.0 - s / s1).max(0.0),
            Self::Sampled(sp) => sp.value(s),
        }
    }

    pub fn eval_lambda(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return input(format!("λ is defined on [0, ∞), got s = {s}"));
        }
        Ok(self.value(s))
    }

    /// Points where λ is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::LinearBump { s1, .. } => vec![*s1],
            Self::Sampled(sp) => sp.grid[1..].to_vec(),
            _ => Vec::new(),
        }
    }

    pub fn as_scalar_fn(&self) -> ScalarFn {
        let p = self.clone();
        ScalarFn::new(move |s| p.value(s)).with_breakpoints(self.breakpoints())
    }

    /// The moment that diverges, if any.
    pub fn divergent_moment(&self) -> Option<(&'static str, String)> {
        match self {
            Self::PowerLaw { p, .. } if *p <= 1.0 => Some(("b1", format!("power-law exponent p = {p} <= 1"))),
            Self::PowerLaw { p, .. } if *p <= 2.0 => Some(("b0", format!("power-law exponent p = {p} <= 2"))),
            Self::Sampled(sp) if sp.tail_exponent <= 1.0 => {
                Some(("b1", format!("fitted tail exponent {:.4} <= 1", sp.tail_exponent)))
            }
            Self::Sampled(sp) if sp.tail_exponent <= 2.0 => {
                Some(("b0", format!("fitted tail exponent {:.4} <= 2", sp.tail_exponent)))
            }
            _ => None,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.divergent_moment().is_none()
    }

    pub fn check_admissible(&self) -> Result<()> {
        match self.divergent_moment() {
            Some((moment, detail)) => Err(Error::Admissibility { moment, detail }),
            None => Ok(()),
        }
    }

    /// `(∫_S^∞ λ, ∫_S^∞ s λ)` in closed form.
    fn tail_integrals(&self, s: f64) -> (f64, f64) {
        match *self {
            Self::Zero => (0.0, 0.0),
            Self::Exponential { lambda0, a } => {
                let e = lambda0 * (-a * s).exp();
                (e / a, e * (s / a + 1.0 / (a * a)))
            }
            Self::PowerLaw { lambda0, s0, p } => {
                let y = 1.0 + s / s0;
                let t1 = lambda0 * s0 * y.powf(1.0 - p) / (p - 1.0);
                let t0 = lambda0 * s0 * s0 * (y.powf(2.0 - p) / (p - 2.0) - y.powf(1.0 - p) / (p - 1.0));
                (t1, t0)
            }
            Self::LinearBump { s1, .. } => {
                debug_assert!(s >= s1);
                (0.0, 0.0)
            }
            Self::Sampled(ref sp) => {
                let (s_last, v_last) = sp.last();
                let s = s.max(s_last);
                if v_last == 0.0 {
                    return (0.0, 0.0);
                }
                let p = sp.tail_exponent;
                let scale = v_last * s_last.powf(p);
                (scale * s.powf(1.0 - p) / (p - 1.0), scale * s.powf(2.0 - p) / (p - 2.0))
            }
        }
    }

    /// `b₀ = ∫₀^∞ s λ` and `b₁ = ∫₀^∞ λ` to absolute accuracy `tol`.
    ///
    /// Adaptive quadrature on `[0, S]` plus the closed-form tail beyond `S`,
    /// with `S` pushed out until the tail itself is below `tol / 2`.
    pub fn moments(&self, tol: f64) -> Result<Moments> {
        positive("tolerance", tol)?;
        self.check_admissible()?;
        match self {
            Self::Zero => Ok(Moments {
                b0: 0.0,
                b1: 0.0,
                abs_error_bound: 0.0,
            }),
            Self::Sampled(sp) => {
                // λ is linear between nodes, so Simpson's rule is exact for both moments
                let (mut b0, mut b1) = (0.0, 0.0);
                for (g, v) in sp.grid.windows(2).zip(sp.values.windows(2)) {
                    let h = g[1] - g[0];
                    b1 += 0.5 * h * (v[0] + v[1]);
                    let mid = 0.5 * (g[0] + g[1]) * 0.5 * (v[0] + v[1]);
                    b0 += h / 6.0 * (g[0] * v[0] + 4.0 * mid + g[1] * v[1]);
                }
                let (t1, t0) = self.tail_integrals(sp.last().0);
                Ok(Moments {
                    b0: b0 + t0,
                    b1: b1 + t1,
                    abs_error_bound: 0.0,
                })
            }
            _ => {
                let (scale, bps) = match *self {
                    Self::Exponential { a, .. } => (1.0 / a, vec![]),
                    Self::PowerLaw { s0, .. } => (s0, vec![]),
                    Self::LinearBump { s1, .. } => (s1, vec![s1]),
                    _ => unreachable!(),
                };
                // geometric panels [0, L], [L, 2L], [2L, 4L], ... so that no single
                // Kronrod panel is wide enough to miss the bulk of λ
                let mut nodes = vec![0.0];
                match self {
                    Self::LinearBump { s1, .. } => nodes.push(*s1),
                    _ => {
                        let mut s = scale;
                        loop {
                            nodes.push(s);
                            let (t1, t0) = self.tail_integrals(s);
                            if t1 + t0 <= 0.5 * tol || s >= WINDOW_CAP * scale {
                                break;
                            }
                            s *= 2.0;
                        }
                    }
                }
                let window = *nodes.last().unwrap();
                nodes.extend(bps.into_iter().filter(|&b| b < window));
                nodes.sort_by(f64::total_cmp);
                nodes.dedup();
                let opts = QuadOptions::new(0.125 * tol / nodes.len() as f64, 1e-15);
                let (mut b0, mut b1, mut e0, mut e1) = (0.0, 0.0, 0.0, 0.0);
                for w in nodes.windows(2) {
                    let r1 = integrate(|s| self.value(s), w[0], w[1], opts)?;
                    let r0 = integrate(|s| s * self.value(s), w[0], w[1], opts)?;
                    b1 += r1.value;
                    b0 += r0.value;
                    e1 += r1.abs_error;
                    e0 += r0.abs_error;
                }
                let (t1, t0) = self.tail_integrals(window);
                Ok(Moments {
                    b0: b0 + t0,
                    b1: b1 + t1,
                    abs_error_bound: e0.max(e1),
                })
            }
        }
    }

    /// Multiply λ by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        positive("scale", c)?;
        Ok(match self {
            Self::Zero => Self::Zero,
            Self::Exponential { lambda0, a } => Self::Exponential {
                lambda0: c * lambda0,
                a: *a,
            },
            Self::PowerLaw { lambda0, s0, p } => Self::PowerLaw {
                lambda0: c * lambda0,
                s0: *s0,
                p: *p,
            },
            Self::LinearBump { lambda0, s1 } => Self::LinearBump {
                lambda0: c * lambda0,
                s1: *s1,
            },
            Self::Sampled(sp) => Self::Sampled(SampledProfile {
                grid: sp.grid.clone(),
                values: sp.values.iter().map(|v| c * v).collect(),
                tail_exponent: sp.tail_exponent,
            }),
        })
    }

    /// The transported curvature bound along a segment leaving a point at
    /// distance `d_ox` from the pole with speed `speed = |Du| < 1`:
    ///
    /// `t ↦ ((n+α-1)/(n+α)) · speed² · λ(|d_ox - t·speed|)`.
    pub fn shifted(&self, d_ox: f64, speed: f64, n: usize, alpha: f64) -> Result<ScalarFn> {
        if !(d_ox >= 0.0 && d_ox.is_finite()) {
            return input(format!("distance to the pole must be nonnegative, got {d_ox}"));
        }
        if !(0.0..1.0).contains(&speed) {
            return input(format!("speed |Du| must lie in [0, 1), got {speed}"));
        }
        if n < 2 {
            return input("dimension must be at least 2");
        }
        positive("alpha", alpha)?;
        if speed == 0.0 {
            return Ok(ScalarFn::zero());
        }
        let na = n as f64 + alpha;
        let coef = (na - 1.0) / na * speed * speed;
        let mut bps = vec![d_ox / speed];
        for b in self.breakpoints() {
            bps.push((d_ox + b) / speed);
            bps.push((d_ox - b) / speed);
        }
        let profile = self.clone();
        Ok(ScalarFn::new(move |t| coef * profile.value((d_ox - t * speed).abs())).with_breakpoints(bps))
    }
}

// --- serialization --------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Zero,
    Exponential(ExponentialParams),
    PowerLaw(PowerLawParams),
    LinearBump(LinearBumpParams),
    Sampled(SampledParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialParams {
    pub lambda0: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawParams {
    pub lambda0: f64,
    pub s0: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearBumpParams {
    pub lambda0: f64,
    pub s1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledParams {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TryFrom<ProfileSpec> for DecayProfile {
    type Error = Error;

    fn try_from(spec: ProfileSpec) -> Result<Self> {
        match spec {
            ProfileSpec::Zero => Ok(Self::Zero),
            ProfileSpec::Exponential(p) => Self::exponential(p.lambda0, p.a),
            ProfileSpec::PowerLaw(p) => Self::power_law(p.lambda0, p.s0, p.p),
            ProfileSpec::LinearBump(p) => Self::linear_bump(p.lambda0, p.s1),
            ProfileSpec::Sampled(p) => Self::sampled(p.grid, p.values),
        }
    }
}

impl From<DecayProfile> for ProfileSpec {
    fn from(p: DecayProfile) -> Self {
        match p {
            DecayProfile::Zero => Self::Zero,
            DecayProfile::Exponential { lambda0, a } => Self::Exponential(ExponentialParams { lambda0, a }),
            DecayProfile::PowerLaw { lambda0, s0, p } => Self::PowerLaw(PowerLawParams { lambda0, s0, p }),
            DecayProfile::LinearBump { lambda0, s1 } => Self::LinearBump(LinearBumpParams { lambda0, s1 }),
            DecayProfile::Sampled(sp) => Self::Sampled(SampledParams {
                grid: sp.grid,
                values: sp.values,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(DecayProfile::Zero.eval_lambda(3.7).unwrap(), 0.0);
        assert_eq!(
            DecayProfile::exponential(1.0, 1.0).unwrap().eval_lambda(0.0).unwrap(),
            1.0
        );
        let pl = DecayProfile::power_law(2.0, 1.0, 3.0).unwrap();
        assert!((pl.eval_lambda(1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(pl.eval_lambda(-0.1), Err(Error::Input(_))));
    }

    #[test]
    fn zero_moments() {
        let m = DecayProfile::Zero.moments(1e-10).unwrap();
        assert_eq!((m.b0, m.b1), (0.0, 0.0));
    }

    #[test]
    fn closed_form_moments() {
        let m = DecayProfile::exponential(1.0, 1.0).unwrap().moments(1e-10).unwrap();
        assert!((m.b0 - 1.0).abs() < 1e-10 && (m.b1 - 1.0).abs() < 1e-10, "{m:?}");
        for lambda0 in [0.3, 1.0, 4.0] {
            let m = DecayProfile::power_law(lambda0, 1.0, 3.0)
                .unwrap()
                .moments(1e-10)
                .unwrap();
            assert!((m.b0 - lambda0 / 2.0).abs() < 1e-10, "{m:?}");
            assert!((m.b1 - lambda0 / 2.0).abs() < 1e-10, "{m:?}");
        }
        let m = DecayProfile::linear_bump(3.0, 2.0).unwrap().moments(1e-10).unwrap();
        // b1 = λ₀ s₁ / 2, b0 = λ₀ s₁² / 6
        assert!((m.b1 - 3.0).abs() < 1e-12 && (m.b0 - 2.0).abs() < 1e-12, "{m:?}");
    }

    #[test]
    fn slow_power_law_uses_exact_tail() {
        // b0 = λ₀ s₀² / ((p-1)(p-2)), b1 = λ₀ s₀ / (p-1)
        let (l, s0, p) = (0.7, 2.0, 2.05);
        let m = DecayProfile::power_law(l, s0, p).unwrap().moments(1e-9).unwrap();
        assert!(
            (m.b0 - l * s0 * s0 / ((p - 1.0) * (p - 2.0))).abs() < 1e-8 * m.b0,
            "{m:?}"
        );
        assert!((m.b1 - l * s0 / (p - 1.0)).abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn power_law_admissibility_flips_at_two() {
        let err = DecayProfile::power_law(1.0, 1.0, 2.0)
            .unwrap()
            .moments(1e-8)
            .unwrap_err();
        assert!(matches!(err, Error::Admissibility { moment: "b0", .. }), "{err}");
        assert!(DecayProfile::power_law(1.0, 1.0, 2.0 + 1e-3)
            .unwrap()
            .moments(1e-8)
            .is_ok());
        let err = DecayProfile::power_law(1.0, 1.0, 0.5)
            .unwrap()
            .moments(1e-8)
            .unwrap_err();
        assert!(matches!(err, Error::Admissibility { moment: "b1", .. }));
    }

    #[test]
    fn sampled_rejects_increase() {
        let err = SampledProfile::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.6]).unwrap_err();
        assert!(err.to_string().contains("increases"));
        assert!(SampledProfile::new(vec![0.5, 1.0], vec![1.0, 0.5]).is_err());
        assert!(SampledProfile::new(vec![0.0, 1.0], vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn sampled_power_tail_recovers_exponent() {
        let grid: Vec<f64> = (0..=2000).map(|i| 0.05 * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|s| (1.0 + s).powi(-3)).collect();
        let DecayProfile::Sampled(sp) = DecayProfile::sampled(grid, values).unwrap() else {
            panic!()
        };
        // local log-slope of (1+s)^-3 over [10, 100] is just under 3
        assert!((sp.tail_exponent() - 3.0).abs() < 0.1, "{}", sp.tail_exponent());
        let prof = DecayProfile::Sampled(sp);
        let m = prof.moments(1e-10).unwrap();
        assert!((m.b1 - 0.5).abs() < 1e-3 && (m.b0 - 0.5).abs() < 2e-2, "{m:?}");
        // continuity at the last node
        assert!((prof.value(100.0) - prof.value(100.0 + 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn sampled_all_zero_collapses_to_zero() {
        assert_eq!(
            DecayProfile::sampled(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap(),
            DecayProfile::Zero
        );
    }

    #[test]
    fn shifted_examples() {
        let e = DecayProfile::exponential(1.0, 1.0).unwrap();
        let z = e.shifted(5.0, 0.0, 3, 1.0).unwrap();
        assert_eq!(z.eval(1.3), 0.0);
        let s = e.shifted(2.0, 0.5, 3, 1.0).unwrap();
        for t in [0.0, 1.0, 4.0, 7.5] {
            let expect = 0.75 * 0.25 * (-(2.0f64 - 0.5 * t).abs()).exp();
            assert!((s.eval(t) - expect).abs() < 1e-15);
        }
        // maximum at t = d/speed
        assert!((s.eval(4.0) - 0.75 * 0.25).abs() < 1e-15);
        assert!(e.shifted(1.0, 1.0, 3, 1.0).is_err());
        assert!(e.shifted(1.0, -0.1, 3, 1.0).is_err());
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let p: DecayProfile =
            serde_json::from_str(r#"{"family":"power_law","params":{"lambda0":2,"s0":1,"p":3}}"#).unwrap();
        assert_eq!(p, DecayProfile::power_law(2.0, 1.0, 3.0).unwrap());
        let back: DecayProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(
            serde_json::from_str::<DecayProfile>(r#"{"family":"exponential","params":{"lambda0":1,"a":1,"b":2}}"#)
                .is_err()
        );
        assert!(
            serde_json::from_str::<DecayProfile>(r#"{"family":"exponential","params":{"lambda0":-1,"a":1}}"#).is_err()
        );
        let z: DecayProfile = serde_json::from_str(r#"{"family":"zero"}"#).unwrap();
        assert_eq!(z, DecayProfile::Zero);
    }
}
