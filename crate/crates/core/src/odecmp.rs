//! Comparison ODEs: the model function `h`, the `ψ₁/ψ₂` pair and the checks
//! built on them (Riccati comparison, ratio bound, growth bound).
//!
//! All equations are of the form `y'' = Λ(t) y` with `Λ ≥ 0`, integrated as
//! first-order systems by [`Dopri5`].

use std::cell::Cell;
use std::io::Write;

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::func::ScalarFn;
use crate::ode::Dopri5;
use crate::profiles::DecayProfile;
use crate::report::VerificationReport;

/// Values and first derivatives of a scalar function on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    value: f64,
    deriv: f64,
}

impl ScalarCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() || grid.len() != derivs.len() {
            return input("curve needs matching, nonempty grid/value/derivative arrays");
        }
        if !(grid[0] >= 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return input("curve grid must be nonnegative and strictly increasing");
        }
        Ok(Self { grid, values, derivs })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn last(&self) -> (f64, f64, f64) {
        let i = self.len() - 1;
        (self.grid[i], self.values[i], self.derivs[i])
    }

    /// Index of the node equal to `t`, if present.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.grid.binary_search_by(|g| g.total_cmp(&t)).ok()
    }

    /// Cubic Hermite interpolation `(value, derivative)`; clamps outside the grid.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.len();
        if n == 1 || t <= self.grid[0] {
            return (self.values[0], self.derivs[0]);
        }
        if t >= self.grid[n - 1] {
            return (self.values[n - 1], self.derivs[n - 1]);
        }
        let i = self.grid.partition_point(|&g| g <= t) - 1;
        let (t0, t1) = (self.grid[i], self.grid[i + 1]);
        let dt = t1 - t0;
        let u = (t - t0) / dt;
        let (y0, y1, d0, d1) = (self.values[i], self.values[i + 1], self.derivs[i], self.derivs[i + 1]);
        let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
        let h10 = u.powi(3) - 2.0 * u * u + u;
        let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
        let h11 = u.powi(3) - u * u;
        let v = h00 * y0 + h10 * dt * d0 + h01 * y1 + h11 * dt * d1;
        let dv = ((6.0 * u * u - 6.0 * u) * (y0 - y1)) / dt
            + (3.0 * u * u - 4.0 * u + 1.0) * d0
            + (3.0 * u * u - 2.0 * u) * d1;
        (v, dv)
    }

    /// Largest per-unit-length mismatch between value increments and the
    /// trapezoid integral of the derivatives.
    pub fn consistency_residual(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2).zip(self.derivs.windows(2)))
            .map(|(g, (v, d))| {
                let dt = g[1] - g[0];
                ((v[1] - v[0]) - 0.5 * dt * (d[0] + d[1])).abs() / dt
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,value,deriv`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        for i in 0..self.len() {
            wr.serialize(CurveRow {
                t: self.grid[i],
                value: self.values[i],
                deriv: self.derivs[i],
            })?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn quintic_hermite(t0: f64, t1: f64, y: [f64; 2], d: [f64; 2], s: [f64; 2], t: f64) -> (f64, f64) {
    let dt = t1 - t0;
    let u = (t - t0) / dt;
    let (u2, u3, u4, u5) = (u * u, u.powi(3), u.powi(4), u.powi(5));
    let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let h2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let h3 = 0.5 * (u3 - 2.0 * u4 + u5);
    let h4 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let h5 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    let g0 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
    let g1 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
    let g2 = 0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4);
    let g3 = 0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4);
    let g4 = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
    let g5 = -g0;
    let dt2 = dt * dt;
    let v = y[0] * h0 + dt * d[0] * h1 + dt2 * s[0] * h2 + dt2 * s[1] * h3 + dt * d[1] * h4 + y[1] * h5;
    let dv = (y[0] * g0 + dt * d[0] * g1 + dt2 * s[0] * g2 + dt2 * s[1] * g3 + dt * d[1] * g4 + y[1] * g5) / dt;
    (v, dv)
}

fn nudge(t: f64) -> f64 {
    8.0 * f64::EPSILON * t.abs().max(1.0)
}

/// The model function `h`: `h'' = λh`, `h(0) = 0`, `h'(0) = 1`.
#[derive(Debug, Clone)]
pub struct ComparisonSolution {
    pub h: ScalarCurve,
    /// `1 + b₀`, a lower bound for `lim h'`; `None` for non-admissible λ.
    pub hprime_limit_lower: Option<f64>,
    /// `1 + b₀ e^{b₀}`, an upper bound for `lim h'`.
    pub hprime_limit_upper: Option<f64>,
    pub hprime_at_end: f64,
    /// `|1 + ∫₀^{t_max} hλ − h'(t_max)|`.
    pub identity_residual: f64,
    pub b0: Option<f64>,
    lambda: ScalarFn,
}

impl ComparisonSolution {
    pub fn t_max(&self) -> f64 {
        self.h.last().0
    }

    pub fn lambda(&self) -> &ScalarFn {
        &self.lambda
    }

    /// `(h(t), h'(t))` by quintic Hermite interpolation (uses `h'' = λh`).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let g = &self.h.grid;
        if let Some(i) = self.h.index_of(t) {
            return (self.h.values[i], self.h.derivs[i]);
        }
        if t <= 0.0 {
            return (t, 1.0);
        }
        let n = g.len();
        if t >= g[n - 1] {
            // linear continuation: λ is tiny by the end of any sensible window
            let (tn, hn, dn) = self.h.last();
            return (hn + dn * (t - tn), dn);
        }
        let i = g.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (g[i], g[i + 1]);
        let y = [self.h.values[i], self.h.values[i + 1]];
        let d = [self.h.derivs[i], self.h.derivs[i + 1]];
        let s = [
            self.lambda.eval(t0 + nudge(t0)) * y[0],
            self.lambda.eval(t1 - nudge(t1)) * y[1],
        ];
        quintic_hermite(t0, t1, y, d, s, t)
    }

    /// Pointwise bounds `t ≤ h ≤ t e^{b₀}`, monotone `h'`, and the limit window
    /// `1 ≤ h'(t_max) ≤ 1 + b₀ e^{b₀}`.
    pub fn bounds_report(&self, tol: f64) -> VerificationReport {
        let growth = self.b0.map(f64::exp).unwrap_or(f64::INFINITY);
        let mut worst: f64 = f64::INFINITY;
        for (&t, &h) in self.h.grid.iter().zip(&self.h.values) {
            let scale = t.max(1.0);
            worst = worst.min((h - t) / scale);
            if growth.is_finite() {
                worst = worst.min((t * growth - h) / scale);
            }
        }
        let mono = self
            .h
            .derivs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(mono);
        worst = worst.min(self.hprime_at_end - 1.0);
        if let Some(up) = self.hprime_limit_upper {
            worst = worst.min(up - self.hprime_at_end);
        }
        let mut rep = VerificationReport::from_slack("ode_h_bounds", worst, tol)
            .with_constant("t_max", self.t_max())
            .with_constant("hprime_at_end", self.hprime_at_end)
            .with_constant("identity_residual", self.identity_residual);
        if let Some(lo) = self.hprime_limit_lower {
            rep = rep.with_constant("hprime_limit_lower", lo);
        }
        if let Some(up) = self.hprime_limit_upper {
            rep = rep.with_constant("hprime_limit_upper", up);
        }
        if self.identity_residual > 10.0 * tol * self.hprime_at_end {
            rep = rep.failed(format!(
                "h'(t_max) disagrees with 1 + ∫hλ by {:.3e}",
                self.identity_residual
            ));
        }
        rep
    }
}

fn check_window(t_max: f64, tol: f64) -> Result<()> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return input(format!("window end must be positive, got {t_max}"));
    }
    if !(tol > 0.0) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

fn integrator(tol: f64) -> Dopri5 {
    Dopri5::new(tol).with_atol(tol * 1e-3)
}

/// Solve for `h` on `[0, t_max]` with λ given by a decay profile.
pub fn solve_h(profile: &DecayProfile, t_max: f64, tol: f64) -> Result<ComparisonSolution> {
    solve_h_on(profile, t_max, tol, &[])
}

/// As [`solve_h`], forcing grid nodes at `outputs`.
pub fn solve_h_on(profile: &DecayProfile, t_max: f64, tol: f64, outputs: &[f64]) -> Result<ComparisonSolution> {
    check_window(t_max, tol)?;
    let b0 = if profile.is_admissible() {
        Some(profile.moments(tol.min(1e-10))?.b0)
    } else {
        None
    };
    solve_h_with(&profile.as_scalar_fn(), b0, t_max, tol, outputs)
}

/// Solve `h'' = λh` for an arbitrary nonnegative λ (e.g. test functions that
/// are not admissible profiles). `b0` enables the limit bounds.
pub fn solve_h_with(
    lambda: &ScalarFn,
    b0: Option<f64>,
    t_max: f64,
    tol: f64,
    outputs: &[f64],
) -> Result<ComparisonSolution> {
    check_window(t_max, tol)?;
    let min_seen = Cell::new(f64::INFINITY);
    let rhs = |t: f64, y: &[f64; 3]| {
        let l = lambda.eval(t);
        min_seen.set(min_seen.get().min(l));
        [y[1], l * y[0], l * y[0]]
    };
    let bps = lambda.breakpoints_in(0.0, t_max);
    let traj = integrator(tol).solve(rhs, 0.0, [0.0, 1.0, 0.0], t_max, outputs, &bps)?;
    if min_seen.get() < 0.0 {
        return input(format!("λ takes the negative value {}", min_seen.get()));
    }
    let grid = traj.t.clone();
    let values = traj.y.iter().map(|y| y[0]).collect();
    let derivs = traj.y.iter().map(|y| y[1]).collect();
    let (_, last) = traj.last();
    Ok(ComparisonSolution {
        h: ScalarCurve::new(grid, values, derivs)?,
        hprime_limit_lower: b0.map(|b| 1.0 + b),
        hprime_limit_upper: b0.map(|b| 1.0 + b * b.exp()),
        hprime_at_end: last[1],
        identity_residual: (1.0 + last[2] - last[1]).abs(),
        b0,
        lambda: lambda.clone(),
    })
}

/// Fundamental pair of `ψ'' = Λψ`: `ψ₁(0)=0, ψ₁'(0)=1` and `ψ₂(0)=1, ψ₂'(0)=0`.
#[derive(Debug, Clone)]
pub struct PsiPair {
    pub psi1: ScalarCurve,
    pub psi2: ScalarCurve,
}

impl PsiPair {
    /// `max |ψ₂'ψ₁ − ψ₂ψ₁' + 1|` over the grid; zero for exact solutions.
    pub fn wronskian_drift(&self) -> f64 {
        (0..self.psi1.len())
            .map(|i| {
                let w = self.psi2.derivs[i] * self.psi1.values[i] - self.psi2.values[i] * self.psi1.derivs[i];
                (w + 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn end_ratio(&self) -> Result<f64> {
        let (_, p1, _) = self.psi1.last();
        let (_, p2, _) = self.psi2.last();
        if p1 == 0.0 {
            return Err(Error::Degenerate(
                "ψ₁(r) = 0; impossible for Λ ≥ 0, integrator fault".into(),
            ));
        }
        Ok(p2 / p1)
    }
}

pub fn solve_psi_pair(lambda: &ScalarFn, r: f64, tol: f64) -> Result<PsiPair> {
    solve_psi_pair_on(lambda, r, tol, &[])
}

pub fn solve_psi_pair_on(lambda: &ScalarFn, r: f64, tol: f64, outputs: &[f64]) -> Result<PsiPair> {
    check_window(r, tol)?;
    // screen Λ before integrating; the integrator also watches every evaluation
    for i in 0..=1000 {
        let t = r * i as f64 / 1000.0;
        let l = lambda.eval(t);
        if l < 0.0 {
            return input(format!("Λ({t}) = {l} is negative"));
        }
    }
    let min_seen = Cell::new(f64::INFINITY);
    let rhs = |t: f64, y: &[f64; 4]| {
        let l = lambda.eval(t);
        min_seen.set(min_seen.get().min(l));
        [y[1], l * y[0], y[3], l * y[2]]
    };
    let bps = lambda.breakpoints_in(0.0, r);
    let traj = integrator(tol).solve(rhs, 0.0, [0.0, 1.0, 1.0, 0.0], r, outputs, &bps)?;
    if min_seen.get() < 0.0 {
        return input(format!("Λ takes the negative value {}", min_seen.get()));
    }
    let col = |k: usize| traj.y.iter().map(|y| y[k]).collect::<Vec<_>>();
    Ok(PsiPair {
        psi1: ScalarCurve::new(traj.t.clone(), col(0), col(1))?,
        psi2: ScalarCurve::new(traj.t.clone(), col(2), col(3))?,
    })
}

/// `g = ψ'/ψ` with `g' = Λ − g²`, on the grid points where `ψ > 0`.
pub fn log_derivative(psi: &ScalarCurve, lambda: &ScalarFn) -> Result<ScalarCurve> {
    let (mut grid, mut values, mut derivs) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..psi.len() {
        let (t, p, dp) = (psi.grid[i], psi.values[i], psi.derivs[i]);
        if t > 0.0 && p > 0.0 {
            let g = dp / p;
            grid.push(t);
            values.push(g);
            derivs.push(lambda.eval(t) - g * g);
        }
    }
    ScalarCurve::new(grid, values, derivs)
}

/// Riccati comparison: if `g' + g² ≤ G` on `(0, r]` and `g ~ β/t` at `0⁺`
/// with `0 < β ≤ 1`, then `g ≤ ψ'/ψ` where `ψ'' = Gψ, ψ(0)=0, ψ'(0)=1`.
///
/// Hypotheses are spot-checked on `g`'s grid (using its recorded derivatives)
/// and reported as [`Error::Hypothesis`]; the comparison itself is a report
/// with `worst_slack = −max(g − ψ'/ψ)`.
pub fn riccati_compare(g: &ScalarCurve, big_g: &ScalarFn, beta: f64, r: f64, tol: f64) -> Result<VerificationReport> {
    check_window(r, tol)?;
    if !(beta > 0.0 && beta <= 1.0) {
        return input(format!("β must lie in (0, 1], got {beta}"));
    }
    let idx: Vec<usize> = (0..g.len()).filter(|&i| g.grid[i] > 0.0 && g.grid[i] <= r).collect();
    let Some(&first) = idx.first() else {
        return input("g has no grid points in (0, r]");
    };
    let t0 = g.grid[first];

    let mut worst_hyp: f64 = f64::NEG_INFINITY;
    for &i in &idx {
        let t = g.grid[i];
        let (gv, gd) = (g.values[i], g.derivs[i]);
        let cap = big_g.eval(t);
        if cap < 0.0 {
            return input(format!("G({t}) = {cap} is negative"));
        }
        let excess = gd + gv * gv - cap;
        worst_hyp = worst_hyp.max(excess);
        if excess > 100.0 * tol * gv.mul_add(gv, 1.0) {
            return Err(Error::Hypothesis {
                t,
                detail: format!("g' + g² exceeds G by {excess:.3e}"),
            });
        }
        if t <= 2.0 * t0 && (t * gv - beta).abs() > 0.5 * beta {
            return Err(Error::Hypothesis {
                t,
                detail: format!("t·g(t) = {:.6} is not close to β = {beta}", t * gv),
            });
        }
    }

    let outputs: Vec<f64> = idx.iter().map(|&i| g.grid[i]).collect();
    let pair = solve_psi_pair_on(big_g, r, tol * 1e-2, &outputs)?;
    let mut worst = f64::NEG_INFINITY;
    let mut at = t0;
    for &t in &outputs {
        let j = pair.psi1.index_of(t).expect("output node present");
        let ratio = pair.psi1.derivs[j] / pair.psi1.values[j];
        let gv = g.values[g.index_of(t).expect("grid node")];
        if gv - ratio > worst {
            worst = gv - ratio;
            at = t;
        }
    }
    Ok(VerificationReport::from_slack("riccati_comparison", -worst, tol)
        .with_constant("beta", beta)
        .with_constant("t0", t0)
        .with_constant("max_g_minus_ratio", worst)
        .with_constant("argmax_t", at)
        .with_constant("max_hypothesis_excess", worst_hyp))
}

/// `ψ₂(r)/ψ₁(r) ≤ Λ_total + 1/r` where `Λ_total ≥ ∫₀^∞ Λ`.
pub fn psi_ratio_bound_check(lambda: &ScalarFn, lambda_total: f64, r: f64, tol: f64) -> Result<VerificationReport> {
    if !(lambda_total >= 0.0) {
        return input("Λ_total must be nonnegative");
    }
    let pair = solve_psi_pair(lambda, r, tol * 1e-2)?;
    let ratio = pair.end_ratio()?;
    let bound = lambda_total + 1.0 / r;
    Ok(VerificationReport::from_slack("psi_ratio_bound", bound - ratio, tol)
        .with_constant("r", r)
        .with_constant("ratio", ratio)
        .with_constant("bound", bound)
        .with_constant("wronskian_drift", pair.wronskian_drift()))
}

/// `ψ₁(t) ≤ t e^{moment_bound}` on the grid, for `moment_bound ≥ ∫₀^∞ τΛ(τ)dτ`.
/// Slack is relative to `t e^{moment_bound}`.
pub fn psi1_growth_check(lambda: &ScalarFn, t_max: f64, moment_bound: f64, tol: f64) -> Result<VerificationReport> {
    if !(moment_bound >= 0.0) {
        return input("moment bound must be nonnegative");
    }
    let pair = solve_psi_pair(lambda, t_max, tol * 1e-2)?;
    let growth = moment_bound.exp();
    let worst = pair
        .psi1
        .grid
        .iter()
        .zip(&pair.psi1.values)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| 1.0 - p / (t * growth))
        .fold(f64::INFINITY, f64::min);
    Ok(VerificationReport::from_slack("psi1_growth", worst, tol)
        .with_constant("t_max", t_max)
        .with_constant("moment_bound", moment_bound)
        .with_constant("psi1_end", pair.psi1.last().1))
}
