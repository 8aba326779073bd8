//! Drive the full pipeline from a JSON configuration, then sweep one parameter.

use weighted_sobolev::cli::{run, summary, sweep, sweep_csv, Overrides, RunConfig};

const CONFIG: &str = r#"{
    "manifold": {"n": 3, "warp": {"kind": "smoothed_cone", "c": 0.5, "r_s": 1.0},
                 "density": {"kind": "log_poly", "beta": 1.0, "r_w": 1.0}},
    "alpha": 1.0,
    "profile": "auto",
    "domains": [{"kind": "ball", "radius": 1.0}],
    "functions": [{"kind": "constant", "c": 1.0}],
    "checks": ["moments", "ode", "bishop_gromov", "avr", "sobolev", "abp"],
    "r_max": 1000.0
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::from_json(CONFIG)?;
    let out = run(&cfg);
    println!("digest {}", out.digest);
    print!("{}", summary(&out));
    println!("exit code {}\n", out.exit_code());

    let base: serde_json::Value = serde_json::from_str(CONFIG)?;
    let points = sweep(&base, "domains.0.radius", &[0.5, 1.0, 2.0], &Overrides::default())?;
    let csv = String::from_utf8(sweep_csv("domains.0.radius", &points))?;
    for line in csv.lines().filter(|l| l.starts_with("param") || l.contains("sobolev")) {
        println!("{line}");
    }
    Ok(())
}
