use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use algebroid_core::limits::{prolong_system, verify_direct_system, verify_family};
use algebroid_core::mechanics::{harmonic_oscillator_system, integrate_rk4, HamiltonianSystem};
use algebroid_core::prolongation::{prolong, Fibration};
use algebroid_core::schema::{algebroid_from_json, algebroid_to_json, hamiltonian_from_json, system_from_json, FamilyDoc, FiberDoc};
use algebroid_core::suite::identity_suite;
use algebroid_core::{CheckConfig, VerificationReport};

use crate::args::{Cli, Command, Global};

/// Raised for bad flags and unreadable inputs.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// 3 for evaluation outside an expression's domain, 2 for everything else
/// that stops a command (bad input, shapes, unreadable files).
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let domain = err
        .chain()
        .filter_map(|e| e.downcast_ref::<algebroid_core::Error>())
        .any(algebroid_core::Error::is_domain);
    if domain {
        3
    } else {
        2
    }
}

fn config(g: &Global) -> Result<CheckConfig> {
    if !(g.tol > 0.0 && g.tol.is_finite()) {
        bail!(UsageError(format!("--tol must be positive, got {}", g.tol)));
    }
    if g.samples < 8 {
        bail!(UsageError(format!("--samples must be at least 8, got {}", g.samples)));
    }
    Ok(CheckConfig { tol: g.tol, samples: g.samples, seed: g.seed })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn report_json(command: &str, cfg: &CheckConfig, report: &VerificationReport) -> String {
    let doc = json!({
        "command": command,
        "tolerance": cfg.tol,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "checks": report.checks,
        "pass": report.passed(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    text.push('\n');
    text
}

fn table(report: &VerificationReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!("{verdict}  {:>10.3e}  {}  [{}]\n", c.max_residual, c.check, c.site));
    }
    out
}

/// Writes the JSON report (to --out or stdout); with --out the table goes
/// to stdout.
fn finish(command: &str, g: &Global, cfg: &CheckConfig, report: &VerificationReport) -> Result<bool> {
    emit(g, &report_json(command, cfg, report))?;
    if g.out.is_some() {
        print!("{}", table(report));
    }
    Ok(report.passed())
}

/// Runs one command; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let cfg = config(g)?;
    match &cli.command {
        Command::Verify { input } => {
            let alg = algebroid_from_json(&read(input)?).with_context(|| format!("in {}", input.display()))?;
            let report = identity_suite(&alg, &cfg)?;
            finish("verify", g, &cfg, &report)
        }
        Command::Prolong { input, fiber, fiber_dim } => {
            let alg = algebroid_from_json(&read(input)?).with_context(|| format!("in {}", input.display()))?;
            let q = match (fiber, fiber_dim) {
                (Some(path), _) => {
                    let doc: FiberDoc = serde_json::from_str(&read(path)?).map_err(algebroid_core::Error::from)?;
                    doc.fiber_dim
                }
                (None, Some(q)) => *q,
                (None, None) => bail!(UsageError("give a fiber file or --fiber-dim".into())),
            };
            let fib = Fibration::over(&alg, q)?;
            let mut text = algebroid_to_json(&prolong(&alg, &fib)?);
            text.push('\n');
            emit(g, &text)?;
            Ok(true)
        }
        Command::LimitVerify { input, family, fiber_dims } => {
            let sys = system_from_json(&read(input)?).with_context(|| format!("in {}", input.display()))?;
            let mut report = verify_direct_system(&sys, &cfg)?;
            if let Some(path) = family {
                let doc: FamilyDoc = serde_json::from_str(&read(path)?).map_err(algebroid_core::Error::from)?;
                let fam = doc.build(&sys).with_context(|| format!("in {}", path.display()))?;
                report.extend(verify_family(&sys, &fam, &cfg)?.prefixed("family: "));
            }
            if let Some(dims) = fiber_dims {
                let prolonged = prolong_system(&sys, dims, &cfg)?;
                report.extend(verify_direct_system(&prolonged, &cfg)?.prefixed("prolonged: "));
            }
            finish("limit-verify", g, &cfg, &report)
        }
        Command::Simulate { system, z0, dt, t_end } => simulate(g, system, z0, *dt, *t_end),
        Command::Describe { input } => {
            let text = read(input)?;
            let value: Value = serde_json::from_str(&text).map_err(algebroid_core::Error::from)?;
            let mut out = String::new();
            if value.get("levels").is_some() {
                let sys = system_from_json(&text)?;
                out.push_str(&format!("direct system with {} levels\n", sys.depth()));
                for (i, l) in sys.levels().iter().enumerate() {
                    out.push_str(&format!("\nlevel {}: {l}", i + 1));
                }
            } else {
                out.push_str(&algebroid_from_json(&text)?.to_string());
            }
            emit(g, &out)?;
            Ok(true)
        }
    }
}

fn load_system(spec: &str) -> Result<HamiltonianSystem> {
    if let Some(n) = spec.strip_prefix("oscillator:") {
        let n: usize = n
            .parse()
            .map_err(|_| UsageError(format!("`{spec}`: expected oscillator:<n> with n a positive integer")))?;
        return Ok(harmonic_oscillator_system(n)?);
    }
    let path = Path::new(spec);
    Ok(hamiltonian_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))?)
}

fn simulate(g: &Global, spec: &str, z0: &str, dt: f64, t_end: f64) -> Result<bool> {
    let sys = load_system(spec)?;
    let z0: Vec<f64> = z0
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| UsageError(format!("--z0 `{z0}` is not a comma-separated list of numbers")))?;
    if z0.len() != sys.phase_dim() {
        bail!(UsageError(format!("--z0 has {} entries, the phase space has dimension {}", z0.len(), sys.phase_dim())));
    }
    let traj = integrate_rk4(&sys, &z0, dt, t_end)?;

    let mut header = vec!["t".to_string()];
    header.extend(sys.coord_names());
    header.extend(traj.monitor_names.iter().cloned());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for ((t, z), m) in traj.times.iter().zip(&traj.states).zip(&traj.monitors) {
        let row = std::iter::once(t).chain(z).chain(m).map(|v| v.to_string());
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    emit(g, std::str::from_utf8(&bytes)?)?;

    let mut summary = format!("steps {} with dt {}\n", traj.times.len() - 1, traj.dt);
    let names = sys.coord_names();
    let last: Vec<String> = names.iter().zip(traj.final_state()).map(|(n, v)| format!("{n}={v}")).collect();
    summary.push_str(&format!("final t={} {}\n", traj.times.last().unwrap(), last.join(" ")));
    for (name, drift) in traj.drift() {
        summary.push_str(&format!("drift {name}: {drift:e}\n"));
    }
    if g.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(true)
}
