//! Weighted volumes of geodesic balls and spheres about the pole, the
//! Bishop-Gromov quotient, the mean-curvature comparison, and the α-asymptotic
//! volume ratio.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{input, Result};
use crate::manifold::ModelManifold;
use crate::quad::{integrate, integrate_cumulative, QuadOptions};
use crate::report::VerificationReport;
use crate::setup::Certified;

/// Area of the unit sphere `S^{n-1}`: `2π^{n/2} / Γ(n/2)`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0)
}

/// `∫_{S_r(o)} w = ω_{n-1} w(r) φ(r)^{n-1}`.
pub fn sphere_measure(m: &ModelManifold, r: f64) -> f64 {
    let (phi, _, _) = m.warp_derivs(r);
    unit_sphere_area(m.n()) * m.weight(r) * phi.powi(m.n() as i32 - 1)
}

/// `∫_{B_r(o)} w`, to relative accuracy `tol`.
pub fn ball_measure(m: &ModelManifold, r: f64, tol: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return input(format!("radius must be nonnegative, got {r}"));
    }
    let nodes = geometric_nodes(r);
    let (cum, _) = integrate_cumulative(|t| sphere_measure(m, t), &nodes, QuadOptions::relative(tol))?;
    Ok(*cum.last().unwrap())
}

/// `[0, r]` split at `r/2, r/4, ...` down to `r·2^{-40}`, so each panel sees
/// the integrand on its natural scale.
fn geometric_nodes(r: f64) -> Vec<f64> {
    let mut nodes = vec![0.0];
    let mut s = r * 2f64.powi(-40);
    while s < r {
        nodes.push(s);
        s *= 2.0;
    }
    nodes.push(r);
    nodes
}

/// Bishop-Gromov quotient and the sphere quotient at increasing radii.
#[derive(Debug, Clone, Serialize)]
pub struct RatioCurve {
    pub radii: Vec<f64>,
    /// `∫_{B_r} w / ((n+α) ∫₀^r h^{n+α-1})`
    pub ratio: Vec<f64>,
    /// `∫_{S_r} w / h(r)^{n+α-1}`
    pub sphere_ratio: Vec<f64>,
}

#[derive(Serialize)]
struct RatioRow {
    r: f64,
    ball_ratio: f64,
    sphere_ratio: f64,
}

impl RatioCurve {
    /// Largest relative increase between consecutive radii, as a report with
    /// `worst_slack = -max_i (q_{i+1} - q_i) / q_i` over both quotients.
    pub fn monotonicity_report(&self, tol: f64) -> VerificationReport {
        let worst = |q: &[f64]| {
            q.windows(2)
                .map(|w| (w[0] - w[1]) / w[0].abs().max(f64::MIN_POSITIVE))
                .fold(f64::INFINITY, f64::min)
        };
        let (ball, sphere) = (worst(&self.ratio), worst(&self.sphere_ratio));
        let mut rep = VerificationReport::from_slack("bishop_gromov", ball.min(sphere), tol)
            .with_constant("ball_ratio_slack", ball)
            .with_constant("sphere_ratio_slack", sphere)
            .with_constant("r_min", self.radii[0])
            .with_constant("r_max", *self.radii.last().unwrap());
        if sphere >= -tol && ball < -tol {
            rep = rep.with_note("sphere quotient monotone but ball quotient not: integration fault");
        }
        rep
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        for i in 0..self.radii.len() {
            wr.serialize(RatioRow {
                r: self.radii[i],
                ball_ratio: self.ratio[i],
                sphere_ratio: self.sphere_ratio[i],
            })?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Geometric radii `r_lo .. r_hi`.
pub fn geometric_radii(r_lo: f64, r_hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                r_hi
            } else {
                r_lo * (r_hi / r_lo).powf(i as f64 / (count - 1).max(1) as f64)
            }
        })
        .collect()
}

/// Evaluate both quotients at `radii` (positive, increasing, `≤ r_max`).
///
/// Numerator and denominator are accumulated in one pass over the merged set
/// of requested radii and ODE nodes of `h`.
pub fn bg_ratio_curve(setup: &Certified, radii: &[f64]) -> Result<RatioCurve> {
    if radii.is_empty() {
        return input("no radii requested");
    }
    if !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return input("radii must be positive and strictly increasing");
    }
    let r_end = *radii.last().unwrap();
    if r_end > setup.r_max * (1.0 + 1e-12) {
        return input(format!(
            "radius {r_end} lies beyond the certified window {}",
            setup.r_max
        ));
    }
    let m = &setup.manifold;
    let e = setup.dim() - 1.0;
    let mut nodes = geometric_nodes(radii[0]);
    nodes.pop();
    nodes.extend(setup.h.h.grid().iter().copied().filter(|&t| t > radii[0] && t < r_end));
    nodes.extend_from_slice(radii);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let opts = QuadOptions::relative(setup.tol.quadrature);
    let (ball, _) = integrate_cumulative(|t| sphere_measure(m, t), &nodes, opts)?;
    let (hint, _) = integrate_cumulative(|t| setup.h.eval(t).0.powf(e), &nodes, opts)?;

    let mut out = RatioCurve {
        radii: radii.to_vec(),
        ratio: Vec::new(),
        sphere_ratio: Vec::new(),
    };
    let mut j = 0;
    for &r in radii {
        while nodes[j] < r {
            j += 1;
        }
        out.ratio.push(ball[j] / (setup.dim() * hint[j]));
        out.sphere_ratio.push(sphere_measure(m, r) / setup.h.eval(r).0.powf(e));
    }
    Ok(out)
}

/// `(n-1)φ'/φ + v' ≤ (n+α-1) h'/h` on a dense grid in `(0, r_max]`.
pub fn mean_curvature_check(setup: &Certified, r_max: f64) -> Result<VerificationReport> {
    if !(r_max > 0.0 && r_max <= setup.r_max * (1.0 + 1e-12)) {
        return input(format!("r_max must lie in (0, {}]", setup.r_max));
    }
    let m = &setup.manifold;
    let n1 = (m.n() - 1) as f64;
    let k = setup.dim() - 1.0;
    let mut grid = geometric_radii(1e-4 * r_max.min(1.0), r_max, 2000);
    grid.extend(setup.h.h.grid().iter().copied().filter(|&t| t > 0.0 && t <= r_max));
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    for r in grid {
        let (phi, dphi, _) = m.warp_derivs(r);
        let (_, dv, _) = m.log_density_derivs(r);
        let (h, dh) = setup.h.eval(r);
        let slack = k * dh / h - (n1 * dphi / phi + dv);
        if slack < worst {
            worst = slack;
            at = r;
        }
    }
    Ok(VerificationReport::from_slack("mean_curvature", worst, setup.tol.verdict).with_constant("argmin_r", at))
}

/// Upper bound and extrapolated estimate of the α-asymptotic volume ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvrEstimate {
    pub estimate: f64,
    pub upper_bound: f64,
    /// RMS residual of the tail fit, relative to the mean sphere quotient.
    pub fit_residual: f64,
    pub fit_exponent: f64,
    /// The same fit one decade earlier, over `[r_max/100, r_max/10]`.
    pub previous_decade: f64,
    pub r_max: f64,
}

impl AvrEstimate {
    /// Relative change of the estimate over the last decade.
    pub fn drift(&self) -> f64 {
        if self.estimate > 0.0 {
            (self.estimate - self.previous_decade).abs() / self.estimate
        } else {
            f64::INFINITY
        }
    }

    /// Whether the estimate is distinguishable from zero: not negligible against
    /// the upper bound and stable across the last decade. A vanishing limit
    /// leaves a fit remainder that shrinks with `r_max`.
    pub fn is_resolved(&self) -> bool {
        self.estimate > NEGLIGIBLE_RATIO * self.upper_bound && self.drift() <= MAX_DECADE_DRIFT
    }
}

const FIT_POINTS: usize = 200;
const NEGLIGIBLE_RATIO: f64 = 1e-3;
const MAX_DECADE_DRIFT: f64 = 0.1;

/// `upper_bound` is the Bishop-Gromov quotient at `r_max` (the quotient is
/// nonincreasing, so it dominates the limit). `estimate` fits
/// `V + C r^{-q}` to the sphere quotient over `[r_max/10, r_max]` and
/// returns `max(V, 0) / (n+α)`; the fit is repeated one decade earlier to
/// judge stability.
pub fn avr(setup: &Certified, r_max: f64) -> Result<AvrEstimate> {
    if !(r_max > 0.0 && r_max <= setup.r_max * (1.0 + 1e-12)) {
        return input(format!("r_max must lie in (0, {}]", setup.r_max));
    }
    let upper = bg_ratio_curve(setup, &[r_max])?.ratio[0];
    let e = setup.dim() - 1.0;
    let fit = |hi: f64| {
        let rs = geometric_radii(hi / 10.0, hi, FIT_POINTS);
        let ys: Vec<f64> = rs
            .iter()
            .map(|&r| sphere_measure(&setup.manifold, r) / setup.h.eval(r).0.powf(e))
            .collect();
        fit_power_tail(&rs, &ys)
    };
    let (q, v, _, resid) = fit(r_max);
    let (_, v_prev, _, _) = fit(r_max / 10.0);
    Ok(AvrEstimate {
        estimate: v.max(0.0) / setup.dim(),
        upper_bound: upper,
        fit_residual: resid,
        fit_exponent: q,
        previous_decade: v_prev.max(0.0) / setup.dim(),
        r_max,
    })
}

/// Least-squares fit of `y ≈ V + C x^{-q}` with `q ∈ [0.05, 4]` chosen by
/// golden-section search. Returns `(q, V, C, relative RMS residual)`.
pub fn fit_power_tail(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let mean_abs = ys.iter().map(|y| y.abs()).sum::<f64>() / ys.len() as f64;
    let x_ref = xs[0];
    let solve = |q: f64| {
        // basis (1, (x/x_ref)^-q) keeps the normal equations well scaled
        let zs: Vec<f64> = xs.iter().map(|x| (x / x_ref).powf(-q)).collect();
        let m = zs.len() as f64;
        let (sz, szz) = (zs.iter().sum::<f64>(), zs.iter().map(|z| z * z).sum::<f64>());
        let sy = ys.iter().sum::<f64>();
        let szy = zs.iter().zip(ys).map(|(z, y)| z * y).sum::<f64>();
        let det = m * szz - sz * sz;
        let c = (m * szy - sz * sy) / det;
        let v = (sy - c * sz) / m;
        let rss = zs.iter().zip(ys).map(|(z, y)| (v + c * z - y).powi(2)).sum::<f64>();
        (v, c * x_ref.powf(q), (rss / m).sqrt() / mean_abs.max(f64::MIN_POSITIVE))
    };
    let (mut a, mut b) = (0.05f64, 4.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (solve(c).2, solve(d).2);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = solve(c).2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = solve(d).2;
        }
    }
    let q = 0.5 * (a + b);
    let (v, cc, resid) = solve(q);
    (q, v, cc, resid)
}

/// Direct quadrature of `∫_{B_r} w` for cross-checks of the cumulative path.
pub fn ball_measure_direct(m: &ModelManifold, r: f64, tol: f64) -> Result<f64> {
    Ok(integrate(|t| sphere_measure(m, t), 0.0, r, QuadOptions::relative(tol))?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Density, Warp};
    use crate::profiles::DecayProfile;
    use crate::report::Verdict;
    use crate::setup::{certify, ProfileChoice, Tolerances};

    fn flat(n: usize) -> ModelManifold {
        ModelManifold::new(n, Warp::Euclidean, Density::Constant { w0: 1.0 }).unwrap()
    }

    #[test]
    fn sphere_examples() {
        assert!((sphere_measure(&flat(3), 1.0) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_measure(&flat(2), 2.0) - 4.0 * PI).abs() < 1e-13);
        let beta = 0.7;
        let m = ModelManifold::new(3, Warp::Euclidean, Density::LogPoly { beta, r_w: 1.0 }).unwrap();
        assert!((sphere_measure(&m, 1.0) - 4.0 * PI * 2f64.powf(beta / 2.0)).abs() < 1e-13);
    }

    #[test]
    fn ball_examples() {
        assert!((ball_measure(&flat(3), 1.0, 1e-12).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((ball_measure(&flat(2), 1.0, 1e-12).unwrap() - PI).abs() < 1e-12);
        assert!(ball_measure(&flat(3), 2.0, 1e-12).unwrap() > ball_measure(&flat(3), 1.9, 1e-12).unwrap());
    }

    #[test]
    fn flat_ratio_closed_form() {
        let s = certify(
            &flat(3),
            1.0,
            &ProfileChoice::Given(DecayProfile::Zero),
            100.0,
            Tolerances::default(),
        )
        .unwrap();
        let radii = geometric_radii(0.01, 100.0, 60);
        let c = bg_ratio_curve(&s, &radii).unwrap();
        for (i, &r) in radii.iter().enumerate() {
            assert!((c.ratio[i] / (4.0 * PI / (3.0 * r)) - 1.0).abs() < 1e-10);
            assert!((c.sphere_ratio[i] / (4.0 * PI / r) - 1.0).abs() < 1e-10);
        }
        assert_eq!(c.monotonicity_report(1e-8).verdict, Verdict::Pass);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("r,ball_ratio,sphere_ratio\n"));
    }

    #[test]
    fn flat_mean_curvature_passes() {
        let s = certify(
            &flat(4),
            0.5,
            &ProfileChoice::Given(DecayProfile::Zero),
            50.0,
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(mean_curvature_check(&s, 50.0).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn flat_avr_vanishes_for_positive_alpha() {
        let s = certify(
            &flat(3),
            1.0,
            &ProfileChoice::Given(DecayProfile::Zero),
            1e4,
            Tolerances::default(),
        )
        .unwrap();
        let a = avr(&s, 1e4).unwrap();
        assert!(a.estimate <= 1e-3, "{a:?}");
        assert!(a.upper_bound >= a.estimate);
    }

    #[test]
    fn flat_avr_small_alpha_limit() {
        let s = certify(
            &flat(3),
            1e-6,
            &ProfileChoice::Given(DecayProfile::Zero),
            1e4,
            Tolerances::default(),
        )
        .unwrap();
        let a = avr(&s, 1e4).unwrap();
        assert!((a.estimate / (4.0 * PI / 3.0) - 1.0).abs() < 0.01, "{a:?}");
    }

    #[test]
    fn weighted_cone_with_envelope() {
        let m = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.5, r_s: 1.0 },
            Density::LogPoly { beta: 1.0, r_w: 1.0 },
        )
        .unwrap();
        let s = certify(&m, 1.0, &ProfileChoice::Auto, 1e3, Tolerances::default()).unwrap();
        let c = bg_ratio_curve(&s, &geometric_radii(1e-2, 1e3, 300)).unwrap();
        let rep = c.monotonicity_report(1e-8);
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert_eq!(mean_curvature_check(&s, 1e3).unwrap().verdict, Verdict::Pass);
        let a = avr(&s, 1e3).unwrap();
        assert!(a.estimate > 0.0 && a.estimate <= a.upper_bound, "{a:?}");
    }

    #[test]
    fn cone_avr_small_alpha_is_stable() {
        let m = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.6, r_s: 1.0 },
            Density::Constant { w0: 1.0 },
        )
        .unwrap();
        let s = certify(&m, 1e-6, &ProfileChoice::Auto, 1e4, Tolerances::default()).unwrap();
        let (a3, a4) = (avr(&s, 1e3).unwrap(), avr(&s, 1e4).unwrap());
        assert!(a4.estimate > 0.0);
        assert!((a3.estimate / a4.estimate - 1.0).abs() < 0.01, "{a3:?} {a4:?}");
        let ratio1 = bg_ratio_curve(&s, &[1.0]).unwrap().ratio[0];
        assert!(a4.estimate < ratio1);
    }

    #[test]
    fn tail_fit_recovers_model() {
        let xs = geometric_radii(100.0, 1000.0, 50);
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 + 7.0 * x.powf(-1.3)).collect();
        let (q, v, c, res) = fit_power_tail(&xs, &ys);
        assert!(
            (q - 1.3).abs() < 1e-4 && (v - 2.5).abs() < 1e-6 && (c - 7.0).abs() < 1e-2,
            "{q} {v} {c}"
        );
        assert!(res < 1e-8);
    }

    #[test]
    fn unit_sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
