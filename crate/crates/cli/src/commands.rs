use std::path::{Path, PathBuf};

use duhem_core::catalog;
use duhem_core::certify::{invariant_set, verify, InvariantSetDescriptor, Tolerances, VerificationReport};
use duhem_core::duhem::{classify, integrate, InputSignal, Orientation};
use duhem_core::geometry::{Context, Mode};
use duhem_core::simulate::{
    converged, invariant_distance, lyapunov_monitor, simulate_closed_loop, Interconnection, SimOptions,
};
use duhem_core::synth::{self, Candidates, ControllerFamily, DesignOutcome, DesignProblem, HysteresisInfo};
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, OrientationTag, ToleranceConfig};
use crate::error::{CliError, CliResult};
use crate::report::{all_pass, num, to_json, trajectory_csv, write_file, Check, Manifest};

/// Lattice size for sampled orientation checks.
const CLASSIFY_GRID: usize = 41;

pub struct Ctx {
    pub config: Config,
    pub config_text: String,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol_overrides: ToleranceConfig,
}

impl Ctx {
    pub fn tolerances(&self) -> CliResult<Tolerances> {
        self.tol_overrides.apply(self.config.tolerances()?)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// What a command prints and whether its checks passed.
pub struct Outcome {
    pub pass: bool,
    pub stdout: String,
}

fn write_optional(out: Option<&Path>, name: &str, contents: &str) -> CliResult<()> {
    match out {
        Some(dir) => write_file(&dir.join(name), contents),
        None => Ok(()),
    }
}

pub fn classify_cmd(ctx: &Ctx) -> CliResult<Outcome> {
    let op = ctx.config.operator()?;
    let rect = ctx.config.check_rect(&op)?;
    let tol = ctx.tolerances()?;
    let c = classify(&op, &rect, CLASSIFY_GRID, tol.margin)?;
    let expected = ctx.config.operator.as_ref().and_then(|o| o.expect);
    let pass = match expected {
        Some(e) => c.orientation == Orientation::from(e),
        None => c.orientation != Orientation::Neither,
    };
    let body = to_json(&json!({
        "orientation": c.orientation.as_str(),
        "expected": expected,
        "pass": pass,
        "report": c.report,
    }))?;
    write_optional(ctx.out.as_deref(), "classification.json", &body)?;
    Ok(Outcome { pass, stdout: body })
}

pub fn storage_grid_cmd(ctx: &Ctx) -> CliResult<Outcome> {
    let op = ctx.config.operator()?;
    let sg = ctx
        .config
        .storage_grid
        .as_ref()
        .ok_or_else(|| CliError::config("missing [storage_grid] section"))?;
    let mode = match sg.mode {
        Some(OrientationTag::Ccw) => Mode::Ccw,
        Some(OrientationTag::Cw) => Mode::Cw,
        None => {
            let tol = ctx.tolerances()?;
            match classify(&op, &ctx.config.check_rect(&op)?, CLASSIFY_GRID, tol.margin)?.orientation {
                Orientation::Ccw => Mode::Ccw,
                Orientation::Cw => Mode::Cw,
                Orientation::Neither => {
                    return Err(CliError::config(
                        "operator is neither CCW nor CW; set storage_grid.mode explicitly",
                    ))
                }
            }
        }
    };
    if sg.n_gamma < 2 || sg.n_v < 2 {
        return Err(CliError::config("storage grid needs at least 2 points per axis"));
    }
    let lin = |r: [f64; 2], n: usize| -> Vec<f64> {
        (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect()
    };
    let mut ctx_geo = Context::new(&op);
    let mut csv = String::from("gamma,v,H,branch,intersect\n");
    let mut failed = 0usize;
    for g in lin(sg.gamma, sg.n_gamma) {
        for v in lin(sg.v, sg.n_v) {
            match ctx_geo.storage(g, v, mode) {
                Ok(s) => csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    num(g),
                    num(v),
                    num(s.value),
                    s.branch.as_str(),
                    num(s.intersect_point)
                )),
                Err(_) => {
                    failed += 1;
                    csv.push_str(&format!("{},{},{},,{}\n", num(g), num(v), num(f64::NAN), num(f64::NAN)));
                }
            }
        }
    }
    let dir = ctx.out_dir();
    let name = sg.output.clone().unwrap_or_else(|| "storage_grid.csv".into());
    write_file(&dir.join(&name), &csv)?;
    let pass = failed == 0;
    let body = to_json(&json!({
        "mode": if mode == Mode::Ccw { "ccw" } else { "cw" },
        "points": sg.n_gamma * sg.n_v,
        "failed_points": failed,
        "output": dir.join(&name),
        "pass": pass,
    }))?;
    Ok(Outcome { pass, stdout: body })
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    case: &'static str,
    pass: bool,
    matrix_pass: bool,
    report: &'a VerificationReport,
    invariant_set: Option<InvariantSetDescriptor>,
}

pub fn certify_cmd(ctx: &Ctx) -> CliResult<Outcome> {
    let op = ctx.config.operator()?;
    let sys = ctx.config.loop_system()?;
    let rect = ctx.config.check_rect(&op)?;
    let tol = ctx.tolerances()?;
    let cert = ctx
        .config
        .certificate()?
        .ok_or_else(|| CliError::config("missing [certificate] section"))?;
    if let Some(ic) = &ctx.config.interconnection {
        if ic.case != cert.case() {
            return Err(CliError::config(format!(
                "interconnection case {} does not match certificate case {}",
                ic.case.as_str(),
                cert.case().as_str()
            )));
        }
    }
    let report = verify(&sys, &cert, &op, &rect, &tol)?;
    let n = invariant_set(&sys, &cert, &report).ok();
    let body = to_json(&CertifyReport {
        case: cert.case().as_str(),
        pass: report.pass,
        matrix_pass: report.matrix_pass,
        report: &report,
        invariant_set: n,
    })?;
    write_optional(ctx.out.as_deref(), "verification.json", &body)?;
    Ok(Outcome {
        pass: report.pass,
        stdout: body,
    })
}

/// Runs the `[run]` section and writes the trajectory and manifest under
/// `dir`. `extra` checks are listed first in the manifest.
fn run_simulation(
    config: &Config,
    config_text: &str,
    dir: &Path,
    tol: &Tolerances,
    command: &str,
    mut checks: Vec<Check>,
) -> CliResult<(bool, String)> {
    let run = config.run.as_ref().ok_or_else(|| CliError::config("missing [run] section"))?;
    let case = config.interconnection()?.case;
    let mut op = config.operator()?;
    if let Some(y) = run.y_phi0 {
        op = op.with_y0(y);
    }
    let sys = config.loop_system()?;
    let rect = config.check_rect(&op)?;
    let cert = config.certificate()?;
    if let Some(c) = &cert {
        if c.case() != case {
            return Err(CliError::config(format!(
                "interconnection case {} does not match certificate case {}",
                case.as_str(),
                c.case().as_str()
            )));
        }
    }
    let ic = Interconnection::new(sys, op, case);
    let mut opts = SimOptions::new(run.t_end, run.dt);
    if let Some(k) = run.sample_every {
        if k == 0 {
            return Err(CliError::config("run.sample_every must be at least 1"));
        }
        opts.sample_every = k;
    }
    let mut traj = simulate_closed_loop(&ic, &run.x0, &opts)?;

    checks.push(Check::flag("orientation", ic.orientation_matches(&rect, CLASSIFY_GRID, tol.margin)?));
    checks.push(
        Check::flag("branch_audit", traj.branch_audit_ok)
            .with_note(format!("{} bisections, {} unresolved flips", traj.bisections, traj.unresolved_flips)),
    );
    let mut dist = None;
    if let Some(cert) = &cert {
        let l = lyapunov_monitor(&traj, &ic, cert, tol)?;
        checks.push(Check::at_most("lyapunov_monotone", l.max_increment, l.tolerance));
        traj.attach_lyapunov(l.values);
        let report = verify(&ic.sys, cert, &ic.op, &rect, tol)?;
        match invariant_set(&ic.sys, cert, &report) {
            Ok(n) => {
                let d = invariant_distance(&traj, &n)?;
                let last = d.last().copied().unwrap_or(f64::NAN);
                checks.push(
                    Check::at_most("invariant_set_convergence", last, tol.conv)
                        .with_note(format!("N = {:?}", n.n)),
                );
                checks.last_mut().unwrap().pass = converged(&d, tol.conv);
                dist = Some(d);
            }
            Err(_) => checks.push(
                Check::flag("invariant_set_convergence", false)
                    .with_note("certificate matrix conditions fail; no invariant set"),
            ),
        }
    }
    if let Some(s) = &run.settle {
        let n = traj.x.first().map_or(0, Vec::len);
        if s.position >= n || s.velocity >= n {
            return Err(CliError::config(format!("run.settle indices must be below the state size {n}")));
        }
        let vel = traj.x.last().map_or(f64::NAN, |x| x[s.velocity]).abs();
        let tail = &traj.x[traj.len() - (traj.len() / 10).max(1)..];
        let (lo, hi) = tail
            .iter()
            .map(|x| x[s.position])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
        checks.push(Check::at_most("final_velocity", vel, tol.conv));
        checks.push(Check::at_most("position_drift_last_10pct", hi - lo, tol.conv));
    }

    let traj_name = run.trajectory.clone().unwrap_or_else(|| "trajectory.csv".into());
    let manifest_name = run.manifest.clone().unwrap_or_else(|| "manifest.json".into());
    write_file(&dir.join(&traj_name), &trajectory_csv(&traj, dist.as_deref()))?;
    let mut manifest = Manifest::new(command, config_text, *tol, &checks);
    manifest.outputs = vec![traj_name, manifest_name.clone()];
    let body = to_json(&manifest)?;
    write_file(&dir.join(&manifest_name), &body)?;
    Ok((all_pass(&checks), body))
}

pub fn simulate_cmd(ctx: &Ctx) -> CliResult<Outcome> {
    let tol = ctx.tolerances()?;
    let (pass, stdout) = run_simulation(&ctx.config, &ctx.config_text, &ctx.out_dir(), &tol, "simulate", Vec::new())?;
    Ok(Outcome { pass, stdout })
}

fn certificate_check(report: &VerificationReport) -> Check {
    let failed: Vec<&str> = report.conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let check = Check::flag("certificate", report.pass);
    if failed.is_empty() {
        check
    } else {
        check.with_note(format!("failed: {}", failed.join("; ")))
    }
}

fn reproduce_one(id: &str, out: &Path, overrides: &ToleranceConfig) -> CliResult<serde_json::Value> {
    let inst = catalog::by_id(id).expect("ids are validated before dispatch");
    let mut config = Config::from_instance(&inst)?;
    let tol = overrides.apply(config.tolerances()?)?;
    config.tolerances = Some(ToleranceConfig::from_tolerances(&tol));
    let text = config.to_toml()?;
    let dir = out.join(id);
    write_file(&dir.join("config.toml"), &text)?;
    let report = verify(&inst.sys, &inst.cert, &inst.op, &inst.rect, &tol)?;
    write_file(&dir.join("verification.json"), &to_json(&report)?)?;
    let (pass, _) = run_simulation(&config, &text, &dir, &tol, "reproduce", vec![certificate_check(&report)])?;
    Ok(json!({ "id": id, "pass": pass, "dir": dir }))
}

pub fn reproduce_cmd(ids: &[String], out: Option<&Path>, overrides: &ToleranceConfig) -> CliResult<Outcome> {
    let ids: Vec<String> = if ids.is_empty() || ids.iter().any(|i| i == "all") {
        catalog::IDS.iter().map(|s| s.to_string()).collect()
    } else {
        ids.to_vec()
    };
    if let Some(bad) = ids.iter().find(|i| catalog::by_id(i).is_none()) {
        return Err(CliError::UnknownId {
            id: bad.clone(),
            valid: catalog::IDS.join(", "),
        });
    }
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out"));
    let results: Vec<CliResult<serde_json::Value>> = std::thread::scope(|s| {
        let handles: Vec<_> = ids
            .iter()
            .map(|id| {
                let out = &out;
                s.spawn(move || reproduce_one(id, out, overrides))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("reproduction thread panicked")).collect()
    });
    let mut runs = Vec::new();
    let mut pass = true;
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok(v) => {
                pass &= v["pass"].as_bool().unwrap_or(false);
                runs.push(v);
            }
            Err(e) if e.exit_code() == crate::error::EXIT_FAIL => {
                pass = false;
                runs.push(json!({ "id": id, "pass": false, "error": e.to_string() }));
            }
            Err(e) => return Err(e),
        }
    }
    let stdout = to_json(&json!({ "pass": pass, "runs": runs }))?;
    Ok(Outcome { pass, stdout })
}

pub fn design_cmd(ctx: &Ctx) -> CliResult<Outcome> {
    let d = ctx
        .config
        .design
        .as_ref()
        .ok_or_else(|| CliError::config("missing [design] section"))?;
    let plant = ctx.config.plant()?;
    let op = ctx.config.operator()?;
    let rect = ctx.config.check_rect(&op)?;
    let tol = ctx.tolerances()?;
    let orientation = classify(&op, &rect, CLASSIFY_GRID, tol.margin)?.orientation;
    let info = HysteresisInfo::from_operator(&op, &rect, orientation)?;
    let candidates = match (&d.candidates, &d.family) {
        (Some(list), None) => Candidates::List(list.iter().map(|c| c.build()).collect::<CliResult<_>>()?),
        (None, Some(f)) => Candidates::Family(ControllerFamily {
            order: f.order,
            a: f.a.iter().map(|r| (r[0], r[1])).collect(),
            b: f.b.iter().map(|r| (r[0], r[1])).collect(),
            c: f.c.iter().map(|r| (r[0], r[1])).collect(),
            d: (f.d[0], f.d[1]),
            samples: f.samples,
        }),
        _ => return Err(CliError::config("[design] needs exactly one of `candidates` or `family`")),
    };
    let mut problem = DesignProblem::new(plant, d.topology.into(), info, candidates);
    problem.seed = ctx.seed.or(d.seed).unwrap_or(0);
    problem.tol = tol;
    problem.target_n = d.target_n.clone().map(|n| InvariantSetDescriptor { n });
    if let Some(k) = d.max_iter {
        problem.search.max_iter = k;
    }
    if let Some(k) = d.restarts {
        problem.search.restarts = k;
    }
    let outcome = synth::design(&problem)?;
    let pass = matches!(outcome, DesignOutcome::Found(_));
    let body = to_json(&outcome)?;
    write_optional(ctx.out.as_deref(), "design.json", &body)?;
    Ok(Outcome { pass, stdout: body })
}

pub fn integrate_cmd(ctx: &Ctx) -> CliResult<Outcome> {
    let op = ctx.config.operator()?;
    let input = ctx
        .config
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("missing [input] section"))?;
    let signal = InputSignal::new(input.knots.iter().map(|k| (k[0], k[1])).collect())?;
    let path = integrate(&op, &signal, input.dt)?;
    let mut csv = String::from("t,u,y_phi\n");
    for (t, y) in &path {
        csv.push_str(&format!("{},{},{}\n", num(*t), num(signal.value_at(*t)), num(*y)));
    }
    let dir = ctx.out_dir();
    let name = input.output.clone().unwrap_or_else(|| "integrate.csv".into());
    write_file(&dir.join(&name), &csv)?;
    let tol = ctx.tolerances()?;
    let mut manifest = Manifest::new("integrate", &ctx.config_text, tol, &[]);
    manifest.outputs = vec![name];
    let body = to_json(&manifest)?;
    write_file(&dir.join("manifest.json"), &body)?;
    Ok(Outcome { pass: true, stdout: body })
}
