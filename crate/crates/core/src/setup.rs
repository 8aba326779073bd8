//! A manifold, α and decay profile that have passed the curvature condition,
//! bundled with the moments and the comparison function `h` that every later
//! check consumes.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::manifold::{admissibility_check, required_envelope, ModelManifold};
use crate::odecmp::{solve_h, ComparisonSolution};
use crate::profiles::{DecayProfile, Moments};
use crate::report::VerificationReport;

/// Nodes used when building an automatic envelope profile.
pub const ENVELOPE_GRID: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quadrature: f64,
    pub ode: f64,
    pub verdict: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: 1e-10,
            ode: 1e-11,
            verdict: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quadrature", self.quadrature),
            ("ode", self.ode),
            ("verdict", self.verdict),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return input(format!("{name} tolerance must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Either an explicit profile or the manifold's own envelope (`"auto"`).
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileChoice {
    Auto,
    Given(DecayProfile),
}

impl Serialize for ProfileChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Given(p) => p.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ProfileChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "auto" => Ok(Self::Auto),
            serde_json::Value::String(s) => Err(D::Error::custom(format!(
                "unknown profile `{s}` (expected \"auto\" or an object)"
            ))),
            other => DecayProfile::deserialize(other)
                .map(Self::Given)
                .map_err(D::Error::custom),
        }
    }
}

impl ProfileChoice {
    pub fn resolve(&self, m: &ModelManifold, alpha: f64, r_max: f64) -> Result<DecayProfile> {
        match self {
            Self::Auto => required_envelope(m, alpha, r_max, ENVELOPE_GRID),
            Self::Given(p) => Ok(p.clone()),
        }
    }
}

impl From<DecayProfile> for ProfileChoice {
    fn from(p: DecayProfile) -> Self {
        Self::Given(p)
    }
}

#[derive(Debug, Clone)]
pub struct Certified {
    pub manifold: ModelManifold,
    pub alpha: f64,
    pub profile: DecayProfile,
    pub moments: Moments,
    pub h: ComparisonSolution,
    pub r_max: f64,
    pub tol: Tolerances,
    pub admissibility: VerificationReport,
}

impl Certified {
    /// `n + α`
    pub fn dim(&self) -> f64 {
        self.manifold.n() as f64 + self.alpha
    }
}

/// Resolve the profile, require admissibility and the curvature condition on
/// `(0, r_max]`, then compute moments and `h` on `[0, r_max]`.
pub fn certify(
    manifold: &ModelManifold,
    alpha: f64,
    choice: &ProfileChoice,
    r_max: f64,
    tol: Tolerances,
) -> Result<Certified> {
    tol.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return input(format!("α must be positive, got {alpha}"));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return input(format!("r_max must be positive, got {r_max}"));
    }
    let profile = choice.resolve(manifold, alpha, r_max)?;
    profile.check_admissible()?;
    let admissibility = admissibility_check(manifold, alpha, &profile, r_max, tol.verdict)?;
    if !admissibility.passed() {
        let why = admissibility.notes.join("; ");
        return Err(Error::CurvatureCondition(if why.is_empty() {
            format!("worst slack {:.3e}", admissibility.worst_slack)
        } else {
            why
        }));
    }
    let moments = profile.moments(tol.quadrature)?;
    let h = solve_h(&profile, r_max, tol.ode)?;
    Ok(Certified {
        manifold: *manifold,
        alpha,
        profile,
        moments,
        h,
        r_max,
        tol,
        admissibility,
    })
}
