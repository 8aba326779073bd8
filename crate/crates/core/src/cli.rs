//! Run configurations, the fixed check pipeline, parameter sweeps and report
//! output. The `wsob` binary is a thin argument parser over this module.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abp::{
    constant_chain_check, laplacian_bound_check, normalize_f, solve_neumann_radial, transport_diagnostics,
    transport_is_strict,
};
use crate::error::{input, Error, Result};
use crate::manifold::{admissibility_check, required_envelope, ModelManifold};
use crate::report::{Verdict, VerificationReport};
use crate::setup::{certify, Certified, ProfileChoice, Tolerances, ENVELOPE_GRID};
use crate::sobolev::{verify_isoperimetric_with_avr, verify_sobolev_with_avr, RadialDomain, RadialFunction};
use crate::volume::{avr, bg_ratio_curve, geometric_radii, mean_curvature_check, AvrEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Moments,
    Ode,
    BishopGromov,
    MeanCurvature,
    Avr,
    Sobolev,
    Isoperimetric,
    Abp,
}

impl CheckKind {
    pub const ALL: [CheckKind; 8] = [
        Self::Moments,
        Self::Ode,
        Self::BishopGromov,
        Self::MeanCurvature,
        Self::Avr,
        Self::Sobolev,
        Self::Isoperimetric,
        Self::Abp,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub json_path: Option<PathBuf>,
    #[serde(default)]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ModelManifold,
    pub alpha: f64,
    pub profile: ProfileChoice,
    #[serde(default)]
    pub domains: Vec<RadialDomain>,
    #[serde(default)]
    pub functions: Vec<RadialFunction>,
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub r_max: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Command-line overrides applied on top of a parsed configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol_quad: Option<f64>,
    pub tol_ode: Option<f64>,
    pub tol_verdict: Option<f64>,
    pub r_max: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return input(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return input(format!("r_max must be positive, got {}", self.r_max));
        }
        self.tolerances.validate()?;
        for d in &self.domains {
            d.validate()?;
            if d.r0() > self.r_max {
                return input(format!("domain {} extends past r_max = {}", d.label(), self.r_max));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.tol_quad {
            self.tolerances.quadrature = v;
        }
        if let Some(v) = o.tol_ode {
            self.tolerances.ode = v;
        }
        if let Some(v) = o.tol_verdict {
            self.tolerances.verdict = v;
        }
        if let Some(v) = o.r_max {
            self.r_max = v;
        }
        if let Some(dir) = &o.out_dir {
            self.output.json_path = Some(dir.join("reports.json"));
            self.output.csv_dir = Some(dir.clone());
        }
        self.validate()
    }

    /// SHA-256 of the mathematical content (everything except output paths).
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    fn wants(&self, c: CheckKind) -> bool {
        self.checks.contains(&c)
    }
}

/// Exit status contract: no failures, some failure, unusable input.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub digest: String,
    pub reports: Vec<VerificationReport>,
    /// `(file name, CSV bytes)`
    pub curves: Vec<(String, Vec<u8>)>,
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            EXIT_INPUT
        } else if self.reports.iter().any(|r| r.verdict.is_fail()) {
            EXIT_FAIL
        } else {
            EXIT_OK
        }
    }

    /// Reports as JSON, including timings.
    pub fn reports_json(&self) -> String {
        serde_json::to_string_pretty(&self.reports).expect("reports serialize")
    }

    /// Reports as JSON with timings zeroed; identical inputs give identical bytes.
    pub fn verdicts_json(&self) -> String {
        let stripped: Vec<VerificationReport> = self
            .reports
            .iter()
            .map(|r| VerificationReport {
                runtime_ms: 0,
                ..r.clone()
            })
            .collect();
        serde_json::to_string_pretty(&stripped).expect("reports serialize")
    }

    pub fn find(&self, check: &str) -> Vec<&VerificationReport> {
        self.reports.iter().filter(|r| r.check_name == check).collect()
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), csv::Error>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing CSV to memory");
    buf
}

struct Pipeline<'a> {
    cfg: &'a RunConfig,
    digest: String,
    reports: Vec<VerificationReport>,
    curves: Vec<(String, Vec<u8>)>,
}

impl Pipeline<'_> {
    fn push(&mut self, mut rep: VerificationReport, started: Instant) {
        rep.digest = self.digest.clone();
        rep.runtime_ms = started.elapsed().as_millis() as u64;
        self.reports.push(rep);
    }

    fn push_error(&mut self, check: &str, target: String, err: Error, started: Instant) {
        let rep = VerificationReport::from_slack(check, f64::NAN, 0.0)
            .with_target(target)
            .with_note(err.to_string());
        self.push(rep, started);
    }
}

/// Execute the requested checks in their fixed order:
/// moments, ode, admissibility, volume checks, then Sobolev / isoperimetric / ABP.
pub fn run(cfg: &RunConfig) -> RunOutcome {
    let mut p = Pipeline {
        cfg,
        digest: cfg.digest(),
        reports: Vec::new(),
        curves: Vec::new(),
    };
    let error = run_pipeline(&mut p).err();
    RunOutcome {
        digest: p.digest,
        reports: p.reports,
        curves: p.curves,
        error,
    }
}

fn run_pipeline(p: &mut Pipeline<'_>) -> Result<()> {
    let cfg = p.cfg;
    cfg.validate()?;
    let tol = cfg.tolerances;

    let t = Instant::now();
    let profile = cfg.profile.resolve(&cfg.manifold, cfg.alpha, cfg.r_max)?;
    profile.check_admissible()?;
    if cfg.wants(CheckKind::Moments) {
        let m = profile.moments(tol.quadrature)?;
        let rep = VerificationReport::from_slack("moments", tol.quadrature - m.abs_error_bound, 0.0)
            .with_target(profile.family_name())
            .with_constant("b0", m.b0)
            .with_constant("b1", m.b1)
            .with_constant("abs_error_bound", m.abs_error_bound);
        p.push(rep, t);
    }

    let t = Instant::now();
    let setup = certify(&cfg.manifold, cfg.alpha, &ProfileChoice::Given(profile), cfg.r_max, tol)?;
    if cfg.wants(CheckKind::Ode) {
        let rep = setup
            .h
            .bounds_report(tol.verdict)
            .with_target(setup.profile.family_name());
        p.curves.push(("h.csv".into(), csv_bytes(|b| setup.h.h.write_csv(b))));
        p.push(rep, t);
    }
    p.push(
        setup.admissibility.clone().with_target(setup.profile.family_name()),
        Instant::now(),
    );

    if cfg.wants(CheckKind::BishopGromov) {
        let t = Instant::now();
        let radii = geometric_radii(1e-3 * cfg.r_max.min(1.0), cfg.r_max, 400);
        match bg_ratio_curve(&setup, &radii) {
            Ok(curve) => {
                p.curves
                    .push(("bishop_gromov.csv".into(), csv_bytes(|b| curve.write_csv(b))));
                p.push(curve.monotonicity_report(tol.verdict), t);
            }
            Err(e) => p.push_error("bishop_gromov", String::new(), e, t),
        }
    }
    if cfg.wants(CheckKind::MeanCurvature) {
        let t = Instant::now();
        match mean_curvature_check(&setup, cfg.r_max) {
            Ok(rep) => p.push(rep, t),
            Err(e) => p.push_error("mean_curvature", String::new(), e, t),
        }
    }

    let needs_avr = [CheckKind::Avr, CheckKind::Sobolev, CheckKind::Isoperimetric]
        .iter()
        .any(|c| cfg.wants(*c));
    let est = if needs_avr {
        let t = Instant::now();
        let est = avr(&setup, cfg.r_max)?;
        if cfg.wants(CheckKind::Avr) {
            p.push(avr_report(&est, tol.verdict), t);
        }
        Some(est)
    } else {
        None
    };

    if cfg.wants(CheckKind::Sobolev) {
        let est = est.as_ref().expect("computed above");
        for d in &cfg.domains {
            for f in &cfg.functions {
                let t = Instant::now();
                match verify_sobolev_with_avr(&setup, d, f, est) {
                    Ok(r) => p.push(r.to_report(tol.verdict), t),
                    Err(e) => p.push_error("sobolev", d.label(), e, t),
                }
            }
        }
    }
    if cfg.wants(CheckKind::Isoperimetric) {
        let est = est.as_ref().expect("computed above");
        for d in &cfg.domains {
            let t = Instant::now();
            match verify_isoperimetric_with_avr(&setup, d, est) {
                Ok(r) => p.push(r.to_report(tol.verdict), t),
                Err(e) => p.push_error("isoperimetric", d.label(), e, t),
            }
        }
    }
    if cfg.wants(CheckKind::Abp) {
        for (i, d) in cfg.domains.iter().enumerate() {
            for (j, f) in cfg.functions.iter().enumerate() {
                run_abp(p, &setup, i, d, j, f);
            }
        }
    }
    Ok(())
}

fn avr_report(est: &AvrEstimate, tol: f64) -> VerificationReport {
    let mut rep = VerificationReport::from_slack("avr", est.upper_bound - est.estimate, tol)
        .with_constant("estimate", est.estimate)
        .with_constant("upper_bound", est.upper_bound)
        .with_constant("fit_residual", est.fit_residual)
        .with_constant("fit_exponent", est.fit_exponent)
        .with_constant("previous_decade", est.previous_decade)
        .with_constant("r_max", est.r_max);
    if !est.is_resolved() {
        rep = rep.with_note("volume ratio not resolved from zero: Sobolev right-hand sides are vacuous");
    }
    rep
}

/// Transport parameters exercised per solved configuration.
pub const TRANSPORT_PARAMS: [f64; 3] = [0.5, 1.0, 2.0];

fn run_abp(p: &mut Pipeline<'_>, setup: &Certified, i: usize, d: &RadialDomain, j: usize, f: &RadialFunction) {
    let target = format!("{} {}", d.label(), f.label());
    let t = Instant::now();
    if !matches!(d, RadialDomain::Ball { .. }) {
        let mut rep = VerificationReport::from_slack("abp", 0.0, 0.0).with_target(target);
        rep.verdict = Verdict::Info;
        rep.notes.push("the Neumann solver handles balls only; skipped".into());
        p.push(rep, t);
        return;
    }
    let solved = normalize_f(setup, d, f).and_then(|k| {
        let fk = f.scaled(k);
        solve_neumann_radial(setup, d, &fk).map(|sol| (k, sol))
    });
    let (kappa, sol) = match solved {
        Ok(x) => x,
        Err(e) => return p.push_error("abp", target, e, t),
    };
    let tol = setup.tol.verdict;
    let fi_tol = 1e2 * tol;
    let mut rep = VerificationReport::from_slack("abp", tol - sol.flux_residual, 0.0)
        .with_target(target.clone())
        .with_constant("kappa", kappa)
        .with_constant("flux_residual", sol.flux_residual)
        .with_constant("first_integral_residual", sol.first_integral_residual);
    if sol.first_integral_residual > fi_tol {
        rep = rep.failed(format!(
            "first-integral residual {:.3e} exceeds {fi_tol:.1e}",
            sol.first_integral_residual
        ));
    }
    p.curves
        .push((format!("neumann_d{i}_f{j}.csv"), csv_bytes(|b| sol.write_csv(b))));
    p.push(rep, t);

    let t = Instant::now();
    p.push(laplacian_bound_check(setup, &sol).with_target(target.clone()), t);

    let strict = transport_is_strict(setup, &sol.f);
    for r in TRANSPORT_PARAMS {
        let t = Instant::now();
        match transport_diagnostics(setup, &sol, r) {
            Ok(diag) => {
                p.curves.push((
                    format!("transport_d{i}_f{j}_r{r}.csv"),
                    csv_bytes(|b| diag.write_csv(b)),
                ));
                p.push(diag.report(tol, strict).with_target(format!("{target} r={r}")), t);
            }
            Err(e) => p.push_error("transport", target.clone(), e, t),
        }
    }
    let t = Instant::now();
    match constant_chain_check(setup, &sol, 1.0, 10) {
        Ok(rep) => p.push(rep.with_target(target), t),
        Err(e) => p.push_error("constant_chain", target, e, t),
    }
}

/// Write `reports.json`, `verdicts.json` (timings zeroed) and curve CSVs
/// where the configuration asks for them.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutcome) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(path) = &cfg.output.json_path {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, out.reports_json())?;
        written.push(path.clone());
        let verdicts = path.with_file_name("verdicts.json");
        fs::write(&verdicts, out.verdicts_json())?;
        written.push(verdicts);
    }
    if let Some(dir) = &cfg.output.csv_dir {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &out.curves {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// One line per report, for terminals.
pub fn summary(out: &RunOutcome) -> String {
    let mut s = String::new();
    for r in &out.reports {
        s.push_str(&format!(
            "{:<8} {:<16} {:<40} slack {:+.3e}\n",
            r.verdict, r.check_name, r.target, r.worst_slack
        ));
    }
    if let Some(e) = &out.error {
        s.push_str(&format!("ERROR    {e}\n"));
    }
    s
}

/// Set the numeric leaf at a dotted path (`alpha`, `domains.0.radius`).
pub fn set_path(root: &mut serde_json::Value, path: &str, value: f64) -> Result<()> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            serde_json::Value::Object(map) => map.get_mut(key),
            serde_json::Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::Input(format!("parameter path `{path}` does not exist (at `{key}`)")))?;
    }
    if !cur.is_number() {
        return input(format!("parameter path `{path}` does not address a number"));
    }
    *cur = serde_json::Value::from(value);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: RunOutcome,
}

/// Run the configuration once per value of the parameter at `path`, in parallel.
/// Output paths of the base configuration are ignored.
pub fn sweep(base: &serde_json::Value, path: &str, values: &[f64], overrides: &Overrides) -> Result<Vec<SweepPoint>> {
    let mut probe = base.clone();
    set_path(&mut probe, path, 0.0)?;
    let configs: Vec<(f64, RunConfig)> = values
        .iter()
        .map(|&v| {
            let mut doc = base.clone();
            set_path(&mut doc, path, v)?;
            let mut cfg: RunConfig =
                serde_json::from_value(doc).map_err(|e| Error::Input(format!("config at {path} = {v}: {e}")))?;
            cfg.apply(&Overrides {
                out_dir: None,
                ..overrides.clone()
            })?;
            cfg.output = OutputSpec::default();
            Ok((v, cfg))
        })
        .collect::<Result<_>>()?;
    Ok(configs
        .into_par_iter()
        .map(|(value, cfg)| SweepPoint {
            value,
            outcome: run(&cfg),
        })
        .collect())
}

#[derive(Serialize)]
struct SweepRow<'a> {
    param: &'a str,
    value: f64,
    check: &'a str,
    target: &'a str,
    verdict: String,
    worst_slack: f64,
    r0: Option<f64>,
    constant_factor: Option<f64>,
    sobolev_constant: Option<f64>,
    v_alpha_upper: Option<f64>,
}

/// Combined CSV keyed by parameter value, one row per report.
pub fn sweep_csv(param: &str, points: &[SweepPoint]) -> Vec<u8> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for pt in points {
        for r in &pt.outcome.reports {
            let c = |k: &str| r.constants.get(k).copied();
            wr.serialize(SweepRow {
                param,
                value: pt.value,
                check: &r.check_name,
                target: &r.target,
                verdict: r.verdict.to_string(),
                worst_slack: r.worst_slack,
                r0: c("r0"),
                constant_factor: c("constant_factor"),
                sobolev_constant: c("sobolev_constant"),
                v_alpha_upper: c("V_alpha_upper"),
            })
            .expect("writing CSV to memory");
        }
        if let Some(e) = &pt.outcome.error {
            wr.serialize(SweepRow {
                param,
                value: pt.value,
                check: "error",
                target: &e.to_string(),
                verdict: "ERROR".into(),
                worst_slack: f64::NAN,
                r0: None,
                constant_factor: None,
                sobolev_constant: None,
                v_alpha_upper: None,
            })
            .expect("writing CSV to memory");
        }
    }
    wr.into_inner().expect("flush to memory")
}

pub fn sweep_exit_code(points: &[SweepPoint]) -> i32 {
    points.iter().map(|p| p.outcome.exit_code()).max().unwrap_or(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSummary {
    pub profile: crate::profiles::DecayProfile,
    pub admissible: bool,
    pub moments: Option<crate::profiles::Moments>,
    pub admissibility: VerificationReport,
    pub grid_size: usize,
    pub constants: BTreeMap<String, f64>,
}

/// The automatic profile for the configured manifold, whatever the config's
/// own `profile` says.
pub fn envelope(cfg: &RunConfig) -> Result<EnvelopeSummary> {
    cfg.validate()?;
    let profile = required_envelope(&cfg.manifold, cfg.alpha, cfg.r_max, ENVELOPE_GRID)?;
    let admissible = profile.is_admissible();
    let moments = if admissible {
        Some(profile.moments(cfg.tolerances.quadrature)?)
    } else {
        None
    };
    let admissibility = admissibility_check(&cfg.manifold, cfg.alpha, &profile, cfg.r_max, cfg.tolerances.verdict)?;
    let mut constants = BTreeMap::new();
    if let crate::profiles::DecayProfile::Sampled(sp) = &profile {
        constants.insert("tail_exponent".into(), sp.tail_exponent());
        constants.insert("lambda_at_0".into(), sp.values()[0]);
    }
    Ok(EnvelopeSummary {
        profile,
        admissible,
        moments,
        admissibility,
        grid_size: ENVELOPE_GRID,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"{
        "manifold": {"n": 3, "warp": {"kind": "euclidean"}, "density": {"kind": "constant", "w0": 1}},
        "alpha": 1,
        "profile": {"family": "zero"},
        "domains": [{"kind": "ball", "radius": 1}],
        "functions": [{"kind": "constant", "c": 1}],
        "checks": ["moments", "ode", "bishop_gromov", "mean_curvature", "avr", "sobolev", "isoperimetric", "abp"],
        "r_max": 1000
    }"#;

    #[test]
    fn flat_run_passes() {
        let cfg = RunConfig::from_json(FLAT).unwrap();
        let out = run(&cfg);
        assert_eq!(out.exit_code(), EXIT_OK, "{}", summary(&out));
        assert_eq!(out.find("sobolev")[0].verdict, Verdict::Vacuous);
        assert_eq!(out.find("abp")[0].verdict, Verdict::Pass);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = FLAT.replace("\"alpha\": 1", "\"alpha\": 1, \"alhpa\": 2");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = FLAT.replace("\"moments\"", "\"momments\"");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn divergent_profile_exits_2() {
        let cfg = RunConfig::from_json(&FLAT.replace(
            r#"{"family": "zero"}"#,
            r#"{"family": "power_law", "params": {"lambda0": 1, "s0": 1, "p": 2}}"#,
        ))
        .unwrap();
        let out = run(&cfg);
        assert_eq!(out.exit_code(), EXIT_INPUT);
        assert!(out.error.unwrap().to_string().contains("b0"));
    }

    #[test]
    fn paths_and_sweeps() {
        let base: serde_json::Value = serde_json::from_str(FLAT).unwrap();
        let mut doc = base.clone();
        set_path(&mut doc, "domains.0.radius", 2.0).unwrap();
        assert_eq!(doc["domains"][0]["radius"], 2.0);
        assert!(set_path(&mut doc, "manifold.warp.kind", 1.0).is_err());
        assert!(set_path(&mut doc, "nope", 1.0).is_err());
        let pts = sweep(&base, "alpha", &[], &Overrides::default()).unwrap();
        assert!(pts.is_empty());
        assert_eq!(sweep_exit_code(&pts), EXIT_OK);
    }

    #[test]
    fn digest_ignores_output_paths() {
        let a = RunConfig::from_json(FLAT).unwrap();
        let mut b = a.clone();
        b.output.json_path = Some("x.json".into());
        assert_eq!(a.digest(), b.digest());
        b.alpha = 2.0;
        assert_ne!(a.digest(), b.digest());
    }
}
