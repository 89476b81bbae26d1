//! Experiment config: one TOML file per run. Every table rejects keys it
//! does not know.

use duhem_core::catalog::{Expectation, Instance};
use duhem_core::certify::{
    cascade, Case, Certificate, CertificateCcwCcw, CertificateCcwCw, CertificateCwCcw,
    CertificateCwCw, LinearSystem, Tolerances, Topology,
};
use duhem_core::duhem::{AffineRates, DuhemOperator, Model, Orientation, Rect};
use duhem_core::linalg::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant: Option<SystemConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller: Option<SystemConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interconnection: Option<InterconnectionConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage_grid: Option<StorageGridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    ColemanHodgdon,
    Dahl,
    Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationTag {
    Ccw,
    Cw,
}

impl From<OrientationTag> for Orientation {
    fn from(o: OrientationTag) -> Self {
        match o {
            OrientationTag::Ccw => Orientation::Ccw,
            OrientationTag::Cw => Orientation::Cw,
        }
    }
}

/// Model parameters sit next to the tag; only the ones the model uses are
/// accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub model: ModelTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    /// Working rectangle; presets pick their own when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rect: Option<RectConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_bound: Option<f64>,
    /// Orientation `classify` must find.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<OrientationTag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub gamma: [f64; 2],
    pub v: [f64; 2],
}

impl RectConfig {
    pub fn build(&self) -> CliResult<Rect> {
        Ok(Rect::new((self.gamma[0], self.gamma[1]), (self.v[0], self.v[1]))?)
    }

    fn from_rect(r: &Rect) -> Self {
        Self {
            gamma: [r.gamma_min, r.gamma_max],
            v: [r.v_min, r.v_max],
        }
    }
}

/// `b` is the input column, `c` the output row; `a = []` is a static gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub d: f64,
}

impl SystemConfig {
    pub fn build(&self) -> CliResult<LinearSystem> {
        Ok(LinearSystem::from_rows(&self.a, &self.b, &self.c, self.d)?)
    }

    pub fn from_system(s: &LinearSystem) -> Self {
        Self {
            a: s.a().to_rows(),
            b: s.b().as_slice().to_vec(),
            c: s.c().as_slice().to_vec(),
            d: s.d(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyTag {
    #[default]
    Actuator,
    Sensor,
}

impl From<TopologyTag> for Topology {
    fn from(t: TopologyTag) -> Self {
        match t {
            TopologyTag::Actuator => Topology::Actuator,
            TopologyTag::Sensor => Topology::Sensor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterconnectionConfig {
    pub case: Case,
    /// Where `[controller]` sits; ignored without one.
    #[serde(default)]
    pub topology: TopologyTag,
    /// Window for sampled operator checks; defaults to the operator's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_rect: Option<RectConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "lowercase", deny_unknown_fields)]
pub enum CertificateConfig {
    A { q: Vec<Vec<f64>>, xi: f64 },
    B { p: Vec<Vec<f64>>, l: Vec<f64>, delta: f64 },
    C { q: Vec<Vec<f64>> },
    D { p: Vec<Vec<f64>>, l: Vec<f64>, delta: f64, eta: f64 },
}

impl CertificateConfig {
    pub fn build(&self) -> CliResult<Certificate> {
        let m = |rows: &Vec<Vec<f64>>| Matrix::from_rows(rows).map_err(CliError::from);
        Ok(match self {
            Self::A { q, xi } => Certificate::A(CertificateCcwCcw { q: m(q)?, xi: *xi }),
            Self::B { p, l, delta } => Certificate::B(CertificateCwCcw {
                p: m(p)?,
                l: Matrix::row(l),
                delta: *delta,
            }),
            Self::C { q } => Certificate::C(CertificateCcwCw { q: m(q)? }),
            Self::D { p, l, delta, eta } => Certificate::D(CertificateCwCw {
                p: m(p)?,
                l: Matrix::row(l),
                delta: *delta,
                eta: *eta,
            }),
        })
    }

    pub fn from_certificate(c: &Certificate) -> Self {
        match c {
            Certificate::A(k) => Self::A {
                q: k.q.to_rows(),
                xi: k.xi,
            },
            Certificate::B(k) => Self::B {
                p: k.p.to_rows(),
                l: k.l.as_slice().to_vec(),
                delta: k.delta,
            },
            Certificate::C(k) => Self::C { q: k.q.to_rows() },
            Certificate::D(k) => Self::D {
                p: k.p.to_rows(),
                l: k.l.as_slice().to_vec(),
                delta: k.delta,
                eta: k.eta,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettleConfig {
    pub position: usize,
    pub velocity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub x0: Vec<f64>,
    /// Overrides `operator.y0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_phi0: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    /// Output file names, relative to `--out`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
    /// Extra check: `x[velocity]` ends near zero and `x[position]` stops moving.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settle: Option<SettleConfig>,
}

/// Piecewise-linear input `(t, u)` knots for open-loop integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub knots: Vec<[f64; 2]>,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageGridConfig {
    /// Defaults to the classified orientation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<OrientationTag>,
    pub gamma: [f64; 2],
    pub v: [f64; 2],
    #[serde(default = "default_grid")]
    pub n_gamma: usize,
    #[serde(default = "default_grid")]
    pub n_v: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_grid() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub order: usize,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    pub c: Vec<[f64; 2]>,
    pub d: [f64; 2],
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default)]
    pub topology: TopologyTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<SystemConfig>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    /// Preferred invariant-set row over `(x, y_phi)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_n: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mono: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

impl ToleranceConfig {
    /// Fields set here replace those of `base`.
    pub fn apply(&self, base: Tolerances) -> CliResult<Tolerances> {
        let mut t = base;
        for (slot, v, name) in [
            (&mut t.eq, self.eq, "eq"),
            (&mut t.psd, self.psd, "psd"),
            (&mut t.pd, self.pd, "pd"),
            (&mut t.root, self.root, "root"),
            (&mut t.quad, self.quad, "quad"),
            (&mut t.mono, self.mono, "mono"),
            (&mut t.conv, self.conv, "conv"),
            (&mut t.margin, self.margin, "margin"),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::config(format!("tolerance `{name}` must be finite and nonnegative, got {v}")));
                }
                *slot = v;
            }
        }
        Ok(t)
    }

    pub fn from_tolerances(t: &Tolerances) -> Self {
        Self {
            eq: Some(t.eq),
            psd: Some(t.psd),
            pd: Some(t.pd),
            root: Some(t.root),
            quad: Some(t.quad),
            mono: Some(t.mono),
            conv: Some(t.conv),
            margin: Some(t.margin),
        }
    }
}

fn require<'a, T>(section: Option<&'a T>, name: &str) -> CliResult<&'a T> {
    section.ok_or_else(|| CliError::config(format!("missing [{name}] section")))
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    pub fn operator(&self) -> CliResult<DuhemOperator> {
        require(self.operator.as_ref(), "operator")?.build()
    }

    pub fn tolerances(&self) -> CliResult<Tolerances> {
        match &self.tolerances {
            Some(t) => t.apply(Tolerances::default()),
            None => Ok(Tolerances::default()),
        }
    }

    pub fn interconnection(&self) -> CliResult<&InterconnectionConfig> {
        require(self.interconnection.as_ref(), "interconnection")
    }

    pub fn plant(&self) -> CliResult<LinearSystem> {
        require(self.plant.as_ref(), "plant")?.build()
    }

    /// The linear system the operator sees: the plant, or the
    /// plant/controller cascade when `[controller]` is present.
    pub fn loop_system(&self) -> CliResult<LinearSystem> {
        let plant = self.plant()?;
        match &self.controller {
            None => Ok(plant),
            Some(k) => {
                let topology = self.interconnection.as_ref().map(|i| i.topology).unwrap_or_default();
                Ok(cascade(&plant, &k.build()?, topology.into())?)
            }
        }
    }

    /// Window for sampled checks.
    pub fn check_rect(&self, op: &DuhemOperator) -> CliResult<Rect> {
        match self.interconnection.as_ref().and_then(|i| i.check_rect.as_ref()) {
            Some(r) => r.build(),
            None => Ok(*op.rect()),
        }
    }

    pub fn certificate(&self) -> CliResult<Option<Certificate>> {
        self.certificate.as_ref().map(|c| c.build()).transpose()
    }

    /// Config that reproduces a catalog instance through `simulate`.
    pub fn from_instance(inst: &Instance) -> CliResult<Self> {
        let settle = match inst.expectation {
            Expectation::Settles { position, velocity } => Some(SettleConfig { position, velocity }),
            Expectation::InvariantSet => None,
        };
        Ok(Self {
            operator: Some(OperatorConfig::from_operator(&inst.op)?),
            plant: Some(SystemConfig::from_system(&inst.plant)),
            controller: inst.controller.as_ref().map(SystemConfig::from_system),
            interconnection: Some(InterconnectionConfig {
                case: inst.case,
                topology: TopologyTag::Actuator,
                check_rect: Some(RectConfig::from_rect(&inst.rect)),
            }),
            certificate: Some(CertificateConfig::from_certificate(&inst.cert)),
            run: Some(RunConfig {
                x0: inst.x0.clone(),
                y_phi0: None,
                t_end: inst.t_end,
                dt: inst.dt,
                sample_every: None,
                trajectory: None,
                manifest: None,
                settle,
            }),
            tolerances: Some(ToleranceConfig::from_tolerances(&Tolerances::default())),
            ..Self::default()
        })
    }
}

impl OperatorConfig {
    fn empty(model: ModelTag) -> Self {
        Self {
            model,
            c_alpha: None,
            a: None,
            b: None,
            fc: None,
            rho: None,
            r: None,
            p1: None,
            q1: None,
            c1: None,
            p2: None,
            q2: None,
            c2: None,
            y0: None,
            rect: None,
            blowup_bound: None,
            expect: None,
        }
    }

    fn params(&self) -> [(&'static str, Option<f64>); 12] {
        [
            ("c_alpha", self.c_alpha),
            ("a", self.a),
            ("b", self.b),
            ("fc", self.fc),
            ("rho", self.rho),
            ("r", self.r),
            ("p1", self.p1),
            ("q1", self.q1),
            ("c1", self.c1),
            ("p2", self.p2),
            ("q2", self.q2),
            ("c2", self.c2),
        ]
    }

    pub fn build(&self) -> CliResult<DuhemOperator> {
        let (tag, allowed): (&str, &[&str]) = match self.model {
            ModelTag::ColemanHodgdon => ("coleman_hodgdon", &["c_alpha", "a", "b"]),
            ModelTag::Dahl => ("dahl", &["fc", "rho", "r"]),
            ModelTag::Affine => ("affine", &["p1", "q1", "c1", "p2", "q2", "c2"]),
        };
        let params = self.params();
        if let Some((name, _)) = params.iter().find(|(n, v)| v.is_some() && !allowed.contains(n)) {
            return Err(CliError::config(format!("operator model `{tag}` has no parameter `{name}`")));
        }
        let get = |name: &str| -> CliResult<f64> {
            params
                .iter()
                .find(|(n, _)| *n == name)
                .and_then(|(_, v)| *v)
                .ok_or_else(|| CliError::config(format!("operator model `{tag}` needs `{name}`")))
        };
        let rect = self.rect.as_ref().map(RectConfig::build).transpose()?;
        let mut op = match self.model {
            ModelTag::ColemanHodgdon => DuhemOperator::coleman_hodgdon(get("c_alpha")?, get("a")?, get("b")?)?,
            ModelTag::Dahl => DuhemOperator::dahl(get("fc")?, get("rho")?, self.r.unwrap_or(1.0))?,
            ModelTag::Affine => {
                let rates = AffineRates {
                    p1: get("p1")?,
                    q1: get("q1")?,
                    c1: get("c1")?,
                    p2: get("p2")?,
                    q2: get("q2")?,
                    c2: get("c2")?,
                };
                let rect = rect.ok_or_else(|| CliError::config("operator model `affine` needs `rect`"))?;
                DuhemOperator::affine(rates, rect)
            }
        };
        if let Some(r) = rect {
            op = op.with_rect(r);
        }
        if let Some(y0) = self.y0 {
            op = op.with_y0(y0);
        }
        if let Some(b) = self.blowup_bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(CliError::config(format!("blowup_bound must be positive, got {b}")));
            }
            op = op.with_blowup_bound(b);
        }
        Ok(op)
    }

    pub fn from_operator(op: &DuhemOperator) -> CliResult<Self> {
        let mut c = match op.model() {
            Model::ColemanHodgdon(m) => Self {
                c_alpha: Some(m.c_alpha),
                a: Some(m.a),
                b: Some(m.b),
                ..Self::empty(ModelTag::ColemanHodgdon)
            },
            Model::Dahl(m) => Self {
                fc: Some(m.fc),
                rho: Some(m.rho),
                r: Some(m.r),
                ..Self::empty(ModelTag::Dahl)
            },
            Model::Affine(m) => Self {
                p1: Some(m.p1),
                q1: Some(m.q1),
                c1: Some(m.c1),
                p2: Some(m.p2),
                q2: Some(m.q2),
                c2: Some(m.c2),
                ..Self::empty(ModelTag::Affine)
            },
            Model::Custom(_) => return Err(CliError::config("custom rate fields cannot be written to a config")),
        };
        c.y0 = Some(op.y0());
        c.rect = Some(RectConfig::from_rect(op.rect()));
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let base = "[operator]\nmodel = \"dahl\"\nfc = 1.0\nrho = 1.0\n";
        assert!(Config::parse(base).is_ok());
        assert!(Config::parse(&format!("{base}colour = 3\n")).is_err());
        assert!(Config::parse(&format!("{base}[extra]\nx = 1\n")).is_err());
        let cert = "[certificate]\ncase = \"c\"\nq = [[1.0]]\n";
        assert!(Config::parse(cert).is_ok());
        assert!(Config::parse(&format!("{cert}xi = 0.5\n")).is_err());
    }

    #[test]
    fn parameters_must_match_the_model() {
        let c = Config::parse("[operator]\nmodel = \"dahl\"\nfc = 1.0\nrho = 1.0\nc_alpha = 2.0\n").unwrap();
        assert!(matches!(c.operator(), Err(CliError::Config(_))));
        let c = Config::parse("[operator]\nmodel = \"coleman_hodgdon\"\na = 1.0\nb = 1.0\n").unwrap();
        assert!(matches!(c.operator(), Err(CliError::Config(_))));
    }

    #[test]
    fn catalog_configs_round_trip() {
        for inst in duhem_core::catalog::all() {
            let c = Config::from_instance(&inst).unwrap();
            let back = Config::parse(&c.to_toml().unwrap()).unwrap();
            assert_eq!(back, c, "{}", inst.id);
            assert_eq!(back.loop_system().unwrap(), inst.sys);
            assert_eq!(back.certificate().unwrap().unwrap(), inst.cert);
        }
    }
}
