//! Rotationally symmetric weighted model manifolds `dr² + φ(r)² g_{S^{n-1}}`
//! with radial density `w = e^v`, their Bakry-Émery Ricci eigenvalues, and
//! the curvature condition against a decay profile.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::profiles::DecayProfile;
use crate::report::{Verdict, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "WarpSpec")]
pub enum Warp {
    /// `φ(r) = r`
    Euclidean,
    /// `φ(r) = c r + (1-c) r_s tanh(r/r_s)`
    SmoothedCone { c: f64, r_s: f64 },
}

// unit variants of internally tagged enums ignore stray keys, so warps are
// parsed through a flat struct first
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WarpSpec {
    kind: String,
    c: Option<f64>,
    r_s: Option<f64>,
}

impl TryFrom<WarpSpec> for Warp {
    type Error = Error;

    fn try_from(s: WarpSpec) -> Result<Self> {
        match (s.kind.as_str(), s.c, s.r_s) {
            ("euclidean", None, None) => Ok(Warp::Euclidean),
            ("euclidean", _, _) => input("euclidean warp takes no parameters"),
            ("smoothed_cone", Some(c), Some(r_s)) => Ok(Warp::SmoothedCone { c, r_s }),
            ("smoothed_cone", _, _) => input("smoothed_cone warp needs c and r_s"),
            (other, _, _) => input(format!("unknown warp kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    Constant {
        w0: f64,
    },
    /// `w(r) = (1 + (r/r_w)²)^{β/2}`
    LogPoly {
        beta: f64,
        r_w: f64,
    },
    /// `w(r) = exp(β tanh(r/r_w))`; not smooth at the pole.
    LogTanhExp {
        beta: f64,
        r_w: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldSpec", into = "ManifoldSpec")]
pub struct ModelManifold {
    n: usize,
    warp: Warp,
    density: Density,
    allow_nonsmooth_pole: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldSpec {
    n: usize,
    warp: Warp,
    density: Density,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    allow_nonsmooth_pole: bool,
}

impl TryFrom<ManifoldSpec> for ModelManifold {
    type Error = Error;

    fn try_from(s: ManifoldSpec) -> Result<Self> {
        let m = ModelManifold::build(s.n, s.warp, s.density, s.allow_nonsmooth_pole)?;
        Ok(m)
    }
}

impl From<ModelManifold> for ManifoldSpec {
    fn from(m: ModelManifold) -> Self {
        Self {
            n: m.n,
            warp: m.warp,
            density: m.density,
            allow_nonsmooth_pole: m.allow_nonsmooth_pole,
        }
    }
}

/// Bakry-Émery Ricci eigenvalues at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BEData {
    pub r: f64,
    pub radial_eigen: f64,
    pub tangential_eigen: f64,
}

impl BEData {
    pub fn min_eigen(&self) -> f64 {
        self.radial_eigen.min(self.tangential_eigen)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        input(format!("{name} must be positive and finite, got {v}"))
    }
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

impl ModelManifold {
    pub fn new(n: usize, warp: Warp, density: Density) -> Result<Self> {
        Self::build(n, warp, density, false)
    }

    /// Accept densities with `w'(0) ≠ 0`, for half-line experiments only.
    pub fn with_nonsmooth_pole(n: usize, warp: Warp, density: Density) -> Result<Self> {
        Self::build(n, warp, density, true)
    }

    fn build(n: usize, warp: Warp, density: Density, allow_nonsmooth_pole: bool) -> Result<Self> {
        if n < 2 {
            return input(format!("dimension must be at least 2, got {n}"));
        }
        match warp {
            Warp::Euclidean => {}
            Warp::SmoothedCone { c, r_s } => {
                if !(c > 0.0 && c <= 1.0) {
                    return input(format!("cone factor c must lie in (0, 1], got {c}"));
                }
                positive("r_s", r_s)?;
            }
        }
        match density {
            Density::Constant { w0 } => positive("w0", w0)?,
            Density::LogPoly { beta, r_w } => {
                if !beta.is_finite() {
                    return input("density exponent must be finite");
                }
                positive("r_w", r_w)?;
            }
            Density::LogTanhExp { beta, r_w } => {
                if !beta.is_finite() {
                    return input("density exponent must be finite");
                }
                positive("r_w", r_w)?;
                if beta != 0.0 && !allow_nonsmooth_pole {
                    return input(format!(
                        "log_tanh_exp density has w'(0) = {} ≠ 0, so the pole is not smooth",
                        beta / r_w
                    ));
                }
            }
        }
        Ok(Self {
            n,
            warp,
            density,
            allow_nonsmooth_pole,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn warp(&self) -> Warp {
        self.warp
    }

    pub fn density(&self) -> Density {
        self.density
    }

    /// `(φ, φ', φ'')` at `r ≥ 0`.
    pub fn warp_derivs(&self, r: f64) -> (f64, f64, f64) {
        match self.warp {
            Warp::Euclidean => (r, 1.0, 0.0),
            Warp::SmoothedCone { c, r_s } => {
                let x = r / r_s;
                let (t, s2) = (x.tanh(), sech2(x));
                (
                    c * r + (1.0 - c) * r_s * t,
                    c + (1.0 - c) * s2,
                    -2.0 * (1.0 - c) / r_s * s2 * t,
                )
            }
        }
    }

    /// `1 - φ'(r)²`, computed without cancellation.
    fn one_minus_dphi_sq(&self, r: f64) -> f64 {
        match self.warp {
            Warp::Euclidean => 0.0,
            Warp::SmoothedCone { c, r_s } => {
                let t = (r / r_s).tanh();
                let gap = (1.0 - c) * t * t;
                gap * (2.0 - gap)
            }
        }
    }

    /// `φ'''(0)`.
    fn warp_third_at_pole(&self) -> f64 {
        match self.warp {
            Warp::Euclidean => 0.0,
            Warp::SmoothedCone { c, r_s } => -2.0 * (1.0 - c) / (r_s * r_s),
        }
    }

    /// `(v, v', v'')` for `v = log w`.
    pub fn log_density_derivs(&self, r: f64) -> (f64, f64, f64) {
        match self.density {
            Density::Constant { w0 } => (w0.ln(), 0.0, 0.0),
            Density::LogPoly { beta, r_w } => {
                let q = r_w * r_w + r * r;
                let x = r / r_w;
                (
                    0.5 * beta * (x * x).ln_1p(),
                    beta * r / q,
                    beta * (r_w * r_w - r * r) / (q * q),
                )
            }
            Density::LogTanhExp { beta, r_w } => {
                let x = r / r_w;
                let (t, s2) = (x.tanh(), sech2(x));
                (beta * t, beta / r_w * s2, -2.0 * beta / (r_w * r_w) * s2 * t)
            }
        }
    }

    /// `v'(r)/φ(r)`, with its limit `v''(0)` at the pole.
    fn dv_over_phi(&self, r: f64) -> f64 {
        if r == 0.0 {
            return match self.density {
                Density::LogTanhExp { beta, .. } if beta != 0.0 => f64::INFINITY * beta.signum(),
                _ => self.log_density_derivs(0.0).2,
            };
        }
        self.log_density_derivs(r).1 / self.warp_derivs(r).0
    }

    pub fn weight(&self, r: f64) -> f64 {
        match self.density {
            Density::Constant { w0 } => w0,
            _ => self.log_density_derivs(r).0.exp(),
        }
    }

    /// Bakry-Émery Ricci eigenvalues in the radial and tangential directions.
    /// At `r = 0` the continuous limits are returned.
    pub fn be_ricci(&self, alpha: f64, r: f64) -> Result<BEData> {
        if !(alpha > 0.0) {
            return input(format!("α must be positive, got {alpha}"));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return input(format!("radius must be nonnegative, got {r}"));
        }
        let n1 = (self.n - 1) as f64;
        let (_, dv, ddv) = self.log_density_derivs(r);
        if r == 0.0 {
            let d3 = self.warp_third_at_pole();
            let radial = -n1 * d3 - ddv - dv * dv / alpha;
            let tangential = -n1 * d3 - self.dv_over_phi(0.0);
            return Ok(BEData {
                r,
                radial_eigen: radial,
                tangential_eigen: tangential,
            });
        }
        let (phi, dphi, ddphi) = self.warp_derivs(r);
        let radial = -n1 * ddphi / phi - ddv - dv * dv / alpha;
        let tangential = -ddphi / phi + (self.n - 2) as f64 * self.one_minus_dphi_sq(r) / (phi * phi) - dphi * dv / phi;
        Ok(BEData {
            r,
            radial_eigen: radial,
            tangential_eigen: tangential,
        })
    }

    /// `max(0, -min eigenvalue / (n+α-1))`: the smallest λ(r) satisfying the
    /// curvature condition at `r`.
    pub fn lambda_min(&self, alpha: f64, r: f64) -> Result<f64> {
        let be = self.be_ricci(alpha, r)?;
        let k = self.n as f64 + alpha - 1.0;
        Ok((-be.min_eigen() / k).max(0.0))
    }
}

/// Grid `{0} ∪ geometric(r_lo .. r_max)` with `grid_size` nodes in total.
pub fn envelope_grid(r_max: f64, grid_size: usize) -> Vec<f64> {
    let r_lo = 1e-3 * r_max.min(1.0);
    let m = grid_size - 1;
    let ratio = (r_max / r_lo).ln();
    let mut g = Vec::with_capacity(grid_size);
    g.push(0.0);
    for i in 0..m {
        let frac = if m == 1 { 1.0 } else { i as f64 / (m - 1) as f64 };
        g.push(if i + 1 == m { r_max } else { r_lo * (frac * ratio).exp() });
    }
    g
}

const SUBSAMPLES: usize = 8;

/// The smallest nonincreasing piecewise-linear profile on `envelope_grid`
/// that stays above `lambda_min` on `[0, r_max]`, with a power tail beyond.
///
/// Each cell is subsampled; a second-difference margin covers the error of
/// sampling a smooth function, and node values are the running maximum from
/// the right shifted by one cell, so the linear interpolant dominates every
/// cell's maximum. A fitted tail exponent `≤ 2` yields a profile that
/// reports itself as non-admissible.
pub fn required_envelope(m: &ModelManifold, alpha: f64, r_max: f64, grid_size: usize) -> Result<DecayProfile> {
    positive("r_max", r_max)?;
    if grid_size < 3 {
        return input("envelope grid needs at least 3 nodes");
    }
    let grid = envelope_grid(r_max, grid_size);
    let mut cell_max = Vec::with_capacity(grid.len() - 1);
    for w in grid.windows(2) {
        let mut samples = [0.0; SUBSAMPLES + 1];
        for (j, s) in samples.iter_mut().enumerate() {
            let r = w[0] + (w[1] - w[0]) * j as f64 / SUBSAMPLES as f64;
            *s = m.lambda_min(alpha, r)?;
        }
        let top = samples.iter().copied().fold(0.0, f64::max);
        let curv = samples
            .windows(3)
            .map(|s| (s[0] - 2.0 * s[1] + s[2]).abs())
            .fold(0.0, f64::max);
        cell_max.push(if top > 0.0 { top + 0.25 * curv } else { 0.0 });
    }
    let mut values = vec![0.0; grid.len()];
    let mut run = 0.0f64;
    for i in (0..cell_max.len()).rev() {
        run = run.max(cell_max[i]);
        values[i + 1] = run;
    }
    values[0] = values[1];
    DecayProfile::sampled(grid, values)
}

fn check_grid(r_max: f64) -> Vec<f64> {
    let r_lo = 1e-4 * r_max.min(1.0);
    let geo = 3000;
    let lin = 1000;
    let mut g: Vec<f64> = (0..geo)
        .map(|i| r_lo * (r_max / r_lo).powf(i as f64 / (geo - 1) as f64))
        .collect();
    g.extend((1..=lin).map(|i| r_max * i as f64 / lin as f64));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Largest decay exponent the profile may have relative to the curvature
/// deficit near `r_max` before the tail comparison fails.
const TAIL_EXPONENT_SLACK: f64 = 0.05;

/// Checks `min eigenvalue ≥ -(n+α-1) λ(r)` on a dense grid in `(0, r_max]`,
/// compares decay rates over the last decade, and fails non-admissible
/// profiles even when the pointwise bound holds.
pub fn admissibility_check(
    m: &ModelManifold,
    alpha: f64,
    profile: &DecayProfile,
    r_max: f64,
    tol: f64,
) -> Result<VerificationReport> {
    positive("r_max", r_max)?;
    let k = m.n as f64 + alpha - 1.0;
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    for r in check_grid(r_max) {
        let slack = m.be_ricci(alpha, r)?.min_eigen() + k * profile.value(r);
        if slack < worst {
            worst = slack;
            at = r;
        }
    }
    let mut rep = VerificationReport::from_slack("admissibility", worst, tol)
        .with_constant("argmin_r", at)
        .with_constant("r_max", r_max);

    // tail: the profile must not decay faster than the deficit it bounds
    let lo = r_max / 10.0;
    let (d_lo, d_hi) = (m.lambda_min(alpha, lo)?, m.lambda_min(alpha, r_max)?);
    if d_hi > 0.0 && d_lo > 0.0 {
        let q_curv = (d_lo / d_hi).ln() / 10f64.ln();
        let (p_lo, p_hi) = (profile.value(lo), profile.value(r_max));
        let q_prof = if p_hi > 0.0 {
            (p_lo / p_hi).ln() / 10f64.ln()
        } else {
            f64::INFINITY
        };
        rep = rep.with_constant("tail_exponent_curvature", q_curv);
        if q_prof.is_finite() {
            rep = rep.with_constant("tail_exponent_profile", q_prof);
        }
        if q_prof > q_curv + TAIL_EXPONENT_SLACK {
            rep = rep.failed(format!(
                "profile decays faster (exponent {q_prof:.3}) than the curvature deficit ({q_curv:.3}) near r_max"
            ));
        }
    }
    if let Some((moment, detail)) = profile.divergent_moment() {
        rep = rep.failed(format!("{moment} divergent: {detail}"));
    }
    if rep.verdict == Verdict::Fail && worst < -tol {
        rep = rep.with_note(format!("curvature condition violated by {:.3e} at r = {at:.6}", -worst));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(n: usize, density: Density) -> ModelManifold {
        ModelManifold::new(n, Warp::Euclidean, density).unwrap()
    }

    #[test]
    fn warp_examples() {
        let e = euclid(3, Density::Constant { w0: 1.0 });
        assert_eq!(e.warp_derivs(2.0), (2.0, 1.0, 0.0));
        let c = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.6, r_s: 1.0 },
            Density::Constant { w0: 1.0 },
        )
        .unwrap();
        assert_eq!(c.warp_derivs(0.0), (0.0, 1.0, -0.0));
        assert!((c.warp_derivs(50.0).1 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn log_density_examples() {
        let m = euclid(3, Density::Constant { w0: 2.0 });
        assert_eq!(m.log_density_derivs(1.3), (2f64.ln(), 0.0, 0.0));
        let m = euclid(3, Density::LogPoly { beta: 3.0, r_w: 1.0 });
        assert!((m.log_density_derivs(1.0).1 - 1.5).abs() < 1e-15);
        let m = ModelManifold::with_nonsmooth_pole(3, Warp::Euclidean, Density::LogTanhExp { beta: 2.0, r_w: 4.0 })
            .unwrap();
        assert_eq!(m.log_density_derivs(0.0).1, 0.5);
    }

    #[test]
    fn nonsmooth_pole_rejected_without_override() {
        let err = ModelManifold::new(3, Warp::Euclidean, Density::LogTanhExp { beta: 1.0, r_w: 1.0 }).unwrap_err();
        assert!(err.to_string().contains("pole"));
        let err = serde_json::from_str::<ModelManifold>(
            r#"{"n":3,"warp":{"kind":"euclidean"},"density":{"kind":"log_tanh_exp","beta":1,"r_w":1}}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn flat_space_has_zero_curvature() {
        let m = euclid(4, Density::Constant { w0: 1.0 });
        for r in [0.0, 0.1, 3.0, 1e4] {
            let be = m.be_ricci(0.7, r).unwrap();
            assert_eq!((be.radial_eigen, be.tangential_eigen), (0.0, 0.0));
        }
        assert!(m.be_ricci(0.0, 1.0).is_err());
    }

    #[test]
    fn logpoly_closed_forms() {
        let alpha = 1.5;
        let m = euclid(3, Density::LogPoly { beta: alpha, r_w: 1.0 });
        for r in [0.3, 1.0, 2.5, 40.0] {
            let be = m.be_ricci(alpha, r).unwrap();
            let q = 1.0 + r * r;
            assert!((be.radial_eigen + alpha / (q * q)).abs() < 1e-14 * alpha);
            assert!((be.tangential_eigen + alpha / q).abs() < 1e-14 * alpha);
        }
    }

    #[test]
    fn pole_limits_are_continuous() {
        let m = ModelManifold::new(
            5,
            Warp::SmoothedCone { c: 0.4, r_s: 0.7 },
            Density::LogPoly { beta: -0.8, r_w: 1.3 },
        )
        .unwrap();
        let at0 = m.be_ricci(0.9, 0.0).unwrap();
        assert!((at0.radial_eigen - at0.tangential_eigen).abs() < 1e-14);
        let small = m.be_ricci(0.9, 1e-4).unwrap();
        assert!((small.radial_eigen - at0.radial_eigen).abs() < 1e-6);
        assert!((small.tangential_eigen - at0.tangential_eigen).abs() < 1e-6);
    }

    #[test]
    fn constant_density_is_alpha_independent() {
        let m = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.6, r_s: 1.0 },
            Density::Constant { w0: 3.0 },
        )
        .unwrap();
        for r in [0.2, 1.0, 7.0] {
            assert_eq!(m.be_ricci(0.1, r).unwrap(), m.be_ricci(10.0, r).unwrap());
        }
    }

    #[test]
    fn flat_envelope_is_zero() {
        let m = euclid(3, Density::Constant { w0: 1.0 });
        assert_eq!(required_envelope(&m, 1.0, 100.0, 200).unwrap(), DecayProfile::Zero);
        let rep = admissibility_check(&m, 1.0, &DecayProfile::Zero, 100.0, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn cone_with_constant_density_needs_no_profile() {
        let m = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.6, r_s: 1.0 },
            Density::Constant { w0: 1.0 },
        )
        .unwrap();
        assert_eq!(required_envelope(&m, 1.0, 100.0, 400).unwrap(), DecayProfile::Zero);
    }

    #[test]
    fn logpoly_envelope_is_not_admissible() {
        let alpha = 1.0;
        let m = euclid(3, Density::LogPoly { beta: alpha, r_w: 1.0 });
        let env = required_envelope(&m, alpha, 1e4, 800).unwrap();
        assert!(!env.is_admissible());
        let k = 3.0 + alpha - 1.0;
        // (1+s)^-2 sits below (1+s²)^-1, so the inverse-square law needs a doubled amplitude
        let short = DecayProfile::power_law(alpha / k, 1.0, 2.0).unwrap();
        let rep = admissibility_check(&m, alpha, &short, 1e3, 1e-8).unwrap();
        assert!(rep.worst_slack < -0.1);
        let pl = DecayProfile::power_law(2.0 * alpha / k, 1.0, 2.0).unwrap();
        let rep = admissibility_check(&m, alpha, &pl, 1e3, 1e-8).unwrap();
        assert!(rep.worst_slack >= -1e-8, "pointwise part should hold: {rep:?}");
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.notes.iter().any(|n| n.contains("b0 divergent")));
    }

    #[test]
    fn weighted_cone_envelope_is_admissible_and_dominates() {
        let alpha = 1.0;
        let m = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.5, r_s: 1.0 },
            Density::LogPoly { beta: alpha, r_w: 1.0 },
        )
        .unwrap();
        let env = required_envelope(&m, alpha, 1e3, 1500).unwrap();
        assert!(env.is_admissible(), "{}", env.family_name());
        let rep = admissibility_check(&m, alpha, &env, 1e3, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    }

    #[test]
    fn json_shape() {
        let m: ModelManifold = serde_json::from_str(
            r#"{"n":3,"warp":{"kind":"smoothed_cone","c":0.6,"r_s":1.0},"density":{"kind":"constant","w0":1.0}}"#,
        )
        .unwrap();
        assert_eq!(m.warp(), Warp::SmoothedCone { c: 0.6, r_s: 1.0 });
        let back: ModelManifold = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ModelManifold>(
            r#"{"n":3,"warp":{"kind":"euclidean","c":1},"density":{"kind":"constant","w0":1.0}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ModelManifold>(
            r#"{"n":1,"warp":{"kind":"euclidean"},"density":{"kind":"constant","w0":1.0}}"#
        )
        .is_err());
    }
}
