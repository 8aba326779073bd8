//! Both sides of the weighted Sobolev inequality and its isoperimetric special
//! case on radial domains about the pole.
//!
//! With `N = n + α`, `K(r₀) = ((1+b₀) / e^{2r₀b₁+b₀})^{(N-1)/N}` and all
//! integrals weighted by `w`:
//!
//! ```text
//! ∫_{∂Ω} f + ∫_Ω |Df| + 2b₁(N-1) ∫_Ω f  ≥  N 𝒱_α^{1/N} K(r₀) (∫_Ω f^{N/(N-1)})^{(N-1)/N}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::manifold::ModelManifold;
use crate::quad::{integrate, QuadOptions};
use crate::report::{Verdict, VerificationReport};
use crate::setup::Certified;
use crate::volume::{avr, unit_sphere_area, AvrEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialDomain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl RadialDomain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Ball { radius } if radius > 0.0 && radius.is_finite() => Ok(()),
            Self::Annulus { inner, outer } if inner > 0.0 && outer > inner && outer.is_finite() => Ok(()),
            _ => input(format!("invalid domain {self:?}")),
        }
    }

    /// `r₀ = max d(o, x)` over the domain.
    pub fn r0(&self) -> f64 {
        match *self {
            Self::Ball { radius } => radius,
            Self::Annulus { outer, .. } => outer,
        }
    }

    pub fn span(&self) -> (f64, f64) {
        match *self {
            Self::Ball { radius } => (0.0, radius),
            Self::Annulus { inner, outer } => (inner, outer),
        }
    }

    pub fn boundary_radii(&self) -> Vec<f64> {
        match *self {
            Self::Ball { radius } => vec![radius],
            Self::Annulus { inner, outer } => vec![inner, outer],
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Ball { radius } => format!("ball({radius})"),
            Self::Annulus { inner, outer } => format!("annulus({inner},{outer})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialFunction {
    Constant {
        c: f64,
    },
    /// `c (1 + r²)^{-k}`
    PowerBump {
        c: f64,
        k: f64,
    },
    /// `c0 + c1 r + c2 r²`
    Poly {
        c0: f64,
        c1: f64,
        c2: f64,
    },
}

impl RadialFunction {
    /// Short comma-free tag for report targets.
    pub fn label(&self) -> String {
        match *self {
            Self::Constant { c } => format!("const({c})"),
            Self::PowerBump { c, k } => format!("bump({c};{k})"),
            Self::Poly { c0, c1, c2 } => format!("poly({c0};{c1};{c2})"),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::PowerBump { c, k } => c * (-k * (r * r).ln_1p()).exp(),
            Self::Poly { c0, c1, c2 } => c0 + r * (c1 + r * c2),
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::PowerBump { c, k } => -2.0 * k * c * r * (-(k + 1.0) * (r * r).ln_1p()).exp(),
            Self::Poly { c1, c2, .. } => c1 + 2.0 * c2 * r,
        }
    }

    pub fn deriv2(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::PowerBump { c, k } => {
                let q = 1.0 + r * r;
                -2.0 * k * c * q.powf(-k - 2.0) * (1.0 - (2.0 * k + 1.0) * r * r)
            }
            Self::Poly { c2, .. } => 2.0 * c2,
        }
    }

    /// `κ f`
    pub fn scaled(&self, kappa: f64) -> Self {
        match *self {
            Self::Constant { c } => Self::Constant { c: kappa * c },
            Self::PowerBump { c, k } => Self::PowerBump { c: kappa * c, k },
            Self::Poly { c0, c1, c2 } => Self::Poly {
                c0: kappa * c0,
                c1: kappa * c1,
                c2: kappa * c2,
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Self::Constant { .. } => true,
            Self::PowerBump { k, .. } => k == 0.0,
            Self::Poly { c1, c2, .. } => c1 == 0.0 && c2 == 0.0,
        }
    }

    /// Radii in the open interval where `|f'|` has a kink.
    pub fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        match *self {
            Self::Poly { c1, c2, .. } if c2 != 0.0 => {
                let r = -c1 / (2.0 * c2);
                if r > a && r < b {
                    vec![r]
                } else {
                    vec![]
                }
            }
            _ => vec![],
        }
    }

    /// `f > 0` on the closed domain (dense grid plus the vertex of a parabola).
    pub fn check_positive(&self, dom: &RadialDomain) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Self::Constant { c } | Self::PowerBump { c, .. } if !ok(c) => {
                return input(format!("test function amplitude must be positive, got {c}"));
            }
            Self::PowerBump { k, .. } if !(k > 0.0 && k.is_finite()) => {
                return input(format!("power bump exponent must be positive, got {k}"));
            }
            _ => {}
        }
        let (a, b) = dom.span();
        let mut pts: Vec<f64> = (0..=2000).map(|i| a + (b - a) * i as f64 / 2000.0).collect();
        pts.extend(self.kinks(a, b));
        for r in pts {
            let v = self.value(r);
            if !ok(v) {
                return input(format!(
                    "test function is not positive on {}: f({r}) = {v}",
                    dom.label()
                ));
            }
        }
        Ok(())
    }
}

/// `ω_{n-1} ∫_a^b w φ^{n-1} g` with a purely relative tolerance.
pub fn domain_integral(
    m: &ModelManifold,
    dom: &RadialDomain,
    g: impl Fn(f64) -> f64,
    kinks: &[f64],
    tol: f64,
) -> Result<f64> {
    let (a, b) = dom.span();
    let mut nodes = vec![a, b];
    nodes.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
    nodes.sort_by(f64::total_cmp);
    let e = m.n() as i32 - 1;
    let integrand = |r: f64| m.weight(r) * m.warp_derivs(r).0.powi(e) * g(r);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        total += integrate(integrand, w[0], w[1], QuadOptions::relative(tol))?.value;
    }
    Ok(unit_sphere_area(m.n()) * total)
}

/// `Σ_{boundary spheres} ω_{n-1} w φ^{n-1} g`.
pub fn boundary_integral(m: &ModelManifold, dom: &RadialDomain, g: impl Fn(f64) -> f64) -> f64 {
    let e = m.n() as i32 - 1;
    dom.boundary_radii()
        .into_iter()
        .map(|r| unit_sphere_area(m.n()) * m.weight(r) * m.warp_derivs(r).0.powi(e) * g(r))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LhsTerms {
    pub boundary: f64,
    pub gradient: f64,
    pub b1term: f64,
}

impl LhsTerms {
    pub fn total(&self) -> f64 {
        self.boundary + self.gradient + self.b1term
    }
}

fn check_inputs(setup: &Certified, dom: &RadialDomain, f: &RadialFunction) -> Result<()> {
    dom.validate()?;
    f.check_positive(dom)?;
    if dom.r0() > setup.r_max {
        return input(format!(
            "domain {} extends beyond the certified window {}",
            dom.label(),
            setup.r_max
        ));
    }
    Ok(())
}

pub fn lhs_terms(setup: &Certified, dom: &RadialDomain, f: &RadialFunction) -> Result<LhsTerms> {
    check_inputs(setup, dom, f)?;
    let m = &setup.manifold;
    let tol = setup.tol.quadrature;
    let (a, b) = dom.span();
    let kinks = f.kinks(a, b);
    let boundary = boundary_integral(m, dom, |r| f.value(r));
    let gradient = if f.is_constant() {
        0.0
    } else {
        domain_integral(m, dom, |r| f.deriv(r).abs(), &kinks, tol)?
    };
    let b1 = setup.moments.b1;
    let b1term = if b1 == 0.0 {
        0.0
    } else {
        2.0 * b1 * (setup.dim() - 1.0) * domain_integral(m, dom, |r| f.value(r), &[], tol)?
    };
    Ok(LhsTerms {
        boundary,
        gradient,
        b1term,
    })
}

/// `((1+b₀) / e^{2r₀b₁+b₀})^{(N-1)/N}`
pub fn constant_factor(b0: f64, b1: f64, r0: f64, dim: f64) -> f64 {
    (((1.0 + b0).ln() - (2.0 * r0 * b1 + b0)) * (dim - 1.0) / dim).exp()
}

/// `ω ∫_Ω w f^{N/(N-1)}`
pub fn power_integral(setup: &Certified, dom: &RadialDomain, f: &RadialFunction) -> Result<f64> {
    let q = setup.dim() / (setup.dim() - 1.0);
    domain_integral(&setup.manifold, dom, |r| f.value(r).powf(q), &[], setup.tol.quadrature)
}

pub fn rhs_value(setup: &Certified, dom: &RadialDomain, f: &RadialFunction, v_alpha: f64) -> Result<f64> {
    check_inputs(setup, dom, f)?;
    if !(v_alpha >= 0.0) {
        return input(format!("volume ratio must be nonnegative, got {v_alpha}"));
    }
    if v_alpha == 0.0 {
        return Ok(0.0);
    }
    let nn = setup.dim();
    let k = constant_factor(setup.moments.b0, setup.moments.b1, dom.r0(), nn);
    let p = power_integral(setup, dom, f)?;
    Ok(nn * v_alpha.powf(1.0 / nn) * k * p.powf((nn - 1.0) / nn))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport {
    pub check_name: String,
    pub domain: RadialDomain,
    pub function: Option<RadialFunction>,
    pub lhs_boundary: f64,
    pub lhs_gradient: f64,
    pub lhs_b1term: f64,
    /// Right side with the upper bound of 𝒱_α.
    pub rhs: f64,
    /// Right side with the extrapolated 𝒱_α.
    pub rhs_sharp: f64,
    pub constants: BTreeMap<String, f64>,
    /// Verdict using the upper bound: a pass certifies the inequality.
    pub verdict: Verdict,
    pub sharp_verdict: Verdict,
    /// `lhs_total - rhs`
    pub slack: f64,
    pub sharp_slack: f64,
    pub vacuous: bool,
}

impl SobolevReport {
    pub fn lhs_total(&self) -> f64 {
        self.lhs_boundary + self.lhs_gradient + self.lhs_b1term
    }

    pub fn passed(&self) -> bool {
        !self.verdict.is_fail()
    }

    /// Generic report; the verdict is `VACUOUS` for passes with nothing on the
    /// right-hand side.
    pub fn to_report(&self, tol: f64) -> VerificationReport {
        let scale = self.lhs_total().max(self.rhs).max(f64::MIN_POSITIVE);
        let mut rep = VerificationReport::from_slack(&self.check_name, self.slack / scale, tol);
        rep.verdict = self.verdict;
        rep.constants = self.constants.clone();
        rep.constants.insert("lhs_boundary".into(), self.lhs_boundary);
        rep.constants.insert("lhs_gradient".into(), self.lhs_gradient);
        rep.constants.insert("lhs_b1term".into(), self.lhs_b1term);
        rep.constants.insert("rhs".into(), self.rhs);
        rep.constants.insert("rhs_sharp".into(), self.rhs_sharp);
        rep.constants.insert("sharp_slack".into(), self.sharp_slack);
        rep.target = match &self.function {
            Some(f) => format!("{} {}", self.domain.label(), f.label()),
            None => self.domain.label(),
        };
        rep.notes.push(format!("sharp verdict {}", self.sharp_verdict));
        rep
    }
}

fn decide(slack: f64, scale: f64, tol: f64, vacuous: bool) -> Verdict {
    if slack < -tol * scale {
        Verdict::Fail
    } else if vacuous {
        Verdict::Vacuous
    } else {
        Verdict::Pass
    }
}

fn base_constants(setup: &Certified, dom: &RadialDomain, est: &AvrEstimate) -> BTreeMap<String, f64> {
    let nn = setup.dim();
    let k = constant_factor(setup.moments.b0, setup.moments.b1, dom.r0(), nn);
    BTreeMap::from([
        ("b0".to_string(), setup.moments.b0),
        ("b1".to_string(), setup.moments.b1),
        ("r0".to_string(), dom.r0()),
        ("V_alpha_upper".to_string(), est.upper_bound),
        ("V_alpha_estimate".to_string(), est.estimate),
        ("constant_factor".to_string(), k),
        ("sobolev_constant".to_string(), nn * est.upper_bound.powf(1.0 / nn) * k),
    ])
}

/// `rhs_sharp` is always the Sobolev-form right side `N 𝒱^{1/N} K ‖f‖`, so the
/// isoperimetric form (which moves the `b₁` term across) classifies alike.
fn is_vacuous(est: &AvrEstimate, rhs_sharp: f64) -> bool {
    !est.is_resolved() || rhs_sharp <= 0.0
}

/// Sobolev inequality with 𝒱_α taken from [`avr`] at the end of the window.
pub fn verify_sobolev(setup: &Certified, dom: &RadialDomain, f: &RadialFunction) -> Result<SobolevReport> {
    let est = avr(setup, setup.r_max)?;
    verify_sobolev_with_avr(setup, dom, f, &est)
}

pub fn verify_sobolev_with_avr(
    setup: &Certified,
    dom: &RadialDomain,
    f: &RadialFunction,
    est: &AvrEstimate,
) -> Result<SobolevReport> {
    let lhs = lhs_terms(setup, dom, f)?;
    let rhs = rhs_value(setup, dom, f, est.upper_bound)?;
    let rhs_sharp = rhs_value(setup, dom, f, est.estimate)?;
    let total = lhs.total();
    let tol = setup.tol.verdict;
    let vacuous = is_vacuous(est, rhs_sharp);
    Ok(SobolevReport {
        check_name: "sobolev".into(),
        domain: *dom,
        function: Some(*f),
        lhs_boundary: lhs.boundary,
        lhs_gradient: lhs.gradient,
        lhs_b1term: lhs.b1term,
        rhs,
        rhs_sharp,
        constants: base_constants(setup, dom, est),
        verdict: decide(total - rhs, total.max(rhs), tol, vacuous),
        sharp_verdict: decide(total - rhs_sharp, total.max(rhs_sharp), tol, vacuous),
        slack: total - rhs,
        sharp_slack: total - rhs_sharp,
        vacuous,
    })
}

pub fn verify_isoperimetric(setup: &Certified, dom: &RadialDomain) -> Result<SobolevReport> {
    let est = avr(setup, setup.r_max)?;
    verify_isoperimetric_with_avr(setup, dom, &est)
}

/// `∫_{∂Ω} w ≥ (N 𝒱^{1/N} K − 2(N−1) b₁ |Ω|^{1/N}) |Ω|^{(N−1)/N}`.
///
/// The verdict threshold is scaled exactly as for the Sobolev check with
/// `f ≡ 1`, so the two verdicts agree.
pub fn verify_isoperimetric_with_avr(
    setup: &Certified,
    dom: &RadialDomain,
    est: &AvrEstimate,
) -> Result<SobolevReport> {
    let one = RadialFunction::Constant { c: 1.0 };
    check_inputs(setup, dom, &one)?;
    let m = &setup.manifold;
    let nn = setup.dim();
    let area = boundary_integral(m, dom, |_| 1.0);
    let vol = domain_integral(m, dom, |_| 1.0, &[], setup.tol.quadrature)?;
    let k = constant_factor(setup.moments.b0, setup.moments.b1, dom.r0(), nn);
    let b1part = 2.0 * (nn - 1.0) * setup.moments.b1 * vol.powf(1.0 / nn);
    let side = |v: f64| (nn * v.powf(1.0 / nn) * k - b1part) * vol.powf((nn - 1.0) / nn);
    let (rhs, rhs_sharp) = (side(est.upper_bound), side(est.estimate));
    let b1term = 2.0 * setup.moments.b1 * (nn - 1.0) * vol;
    let sob_scale = |r: f64| (area + b1term).max(r + b1term);
    let tol = setup.tol.verdict;
    let vacuous = is_vacuous(est, rhs_sharp + b1part * vol.powf((nn - 1.0) / nn));
    let mut constants = base_constants(setup, dom, est);
    constants.insert("volume".into(), vol);
    Ok(SobolevReport {
        check_name: "isoperimetric".into(),
        domain: *dom,
        function: None,
        lhs_boundary: area,
        lhs_gradient: 0.0,
        lhs_b1term: 0.0,
        rhs,
        rhs_sharp,
        constants,
        verdict: decide(area - rhs, sob_scale(rhs), tol, vacuous),
        sharp_verdict: decide(area - rhs_sharp, sob_scale(rhs_sharp), tol, vacuous),
        slack: area - rhs,
        sharp_slack: area - rhs_sharp,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Density, Warp};
    use crate::profiles::DecayProfile;
    use crate::setup::{certify, ProfileChoice, Tolerances};
    use std::f64::consts::PI;

    fn flat3() -> Certified {
        let m = ModelManifold::new(3, Warp::Euclidean, Density::Constant { w0: 1.0 }).unwrap();
        certify(
            &m,
            1.0,
            &ProfileChoice::Given(DecayProfile::Zero),
            1e4,
            Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn lhs_examples() {
        let s = flat3();
        let one = RadialFunction::Constant { c: 1.0 };
        let l = lhs_terms(&s, &RadialDomain::Ball { radius: 1.0 }, &one).unwrap();
        assert!((l.boundary - 4.0 * PI).abs() < 1e-12 && l.gradient == 0.0 && l.b1term == 0.0);
        let l = lhs_terms(&s, &RadialDomain::Annulus { inner: 1.0, outer: 2.0 }, &one).unwrap();
        assert!((l.boundary - 20.0 * PI).abs() < 1e-12);
        let bump = RadialFunction::PowerBump { c: 1.0, k: 1.0 };
        let l = lhs_terms(&s, &RadialDomain::Ball { radius: 1.0 }, &bump).unwrap();
        // ∫₀¹ 2r³/(1+r²)² dr = ln 2 − 1/2
        assert!((l.gradient - 4.0 * PI * (2f64.ln() - 0.5)).abs() < 1e-11);
    }

    #[test]
    fn rhs_examples() {
        let s = flat3();
        let one = RadialFunction::Constant { c: 1.0 };
        assert_eq!(
            rhs_value(&s, &RadialDomain::Ball { radius: 1.0 }, &one, 0.0).unwrap(),
            0.0
        );
        assert_eq!(constant_factor(0.0, 0.0, 5.0, 4.0), 1.0);
        let k = constant_factor(1.0, 1.0, 1.0, 4.0);
        assert!((k - (2.0 / 3f64.exp()).powf(0.75)).abs() < 1e-15);
    }

    #[test]
    fn flat_ball_is_vacuous_pass() {
        let s = flat3();
        let r = verify_sobolev(
            &s,
            &RadialDomain::Ball { radius: 1.0 },
            &RadialFunction::Constant { c: 1.0 },
        )
        .unwrap();
        assert!(r.vacuous);
        assert_eq!(r.verdict, Verdict::Vacuous);
        assert!((r.sharp_slack - 4.0 * PI).abs() < 1e-6, "{r:?}");
        let iso = verify_isoperimetric(&s, &RadialDomain::Ball { radius: 1.0 }).unwrap();
        assert_eq!(iso.verdict, r.verdict);
    }

    #[test]
    fn poly_positivity_checked() {
        let s = flat3();
        let f = RadialFunction::Poly {
            c0: 1.0,
            c1: -2.0,
            c2: 0.5,
        };
        assert!(lhs_terms(&s, &RadialDomain::Ball { radius: 3.0 }, &f).is_err());
    }

    #[test]
    fn weighted_cone_is_not_vacuous() {
        let m = ModelManifold::new(
            3,
            Warp::SmoothedCone { c: 0.5, r_s: 1.0 },
            Density::LogPoly { beta: 1.0, r_w: 1.0 },
        )
        .unwrap();
        let s = certify(&m, 1.0, &ProfileChoice::Auto, 1e4, Tolerances::default()).unwrap();
        for dom in [
            RadialDomain::Ball { radius: 2.0 },
            RadialDomain::Annulus { inner: 0.5, outer: 3.0 },
        ] {
            let r = verify_sobolev(&s, &dom, &RadialFunction::PowerBump { c: 1.0, k: 0.5 }).unwrap();
            assert!(!r.vacuous && r.rhs > 0.0, "{r:?}");
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        }
    }
}
