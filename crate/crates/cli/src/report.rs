use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use duhem_core::certify::Tolerances;
use duhem_core::simulate::Trajectory;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// One named pass/fail check with the number it was judged on.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn flag(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: None,
            bound: None,
            note: None,
        }
    }

    /// Passes when `value <= bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            value: Some(value),
            bound: Some(bound),
            ..Self::flag(name, value <= bound)
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: &'a [Check],
    pub pass: bool,
    pub outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config_text: &str, tolerances: Tolerances, checks: &'a [Check]) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: sha256_hex(config_text.as_bytes()),
            tolerances,
            seed: None,
            checks,
            pass: all_pass(checks),
            outputs: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Full-precision scientific notation used in every numeric output.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// `t,x1..xn,u,y,y_phi,H_cl,invariant_dist`; missing series are written as `nan`.
pub fn trajectory_csv(traj: &Trajectory, dist: Option<&[f64]>) -> String {
    let n = traj.x.first().map_or(0, Vec::len);
    let mut s = String::from("t");
    for i in 1..=n {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",u,y,y_phi,H_cl,invariant_dist\n");
    let nan = f64::NAN;
    for k in 0..traj.len() {
        s.push_str(&num(traj.times[k]));
        for v in &traj.x[k] {
            s.push(',');
            s.push_str(&num(*v));
        }
        let h = traj.h_cl.as_ref().map_or(nan, |h| h[k]);
        let d = dist.map_or(nan, |d| d[k]);
        for v in [traj.u[k], traj.y[k], traj.y_phi[k], h, d] {
            s.push(',');
            s.push_str(&num(v));
        }
        s.push('\n');
    }
    s
}
