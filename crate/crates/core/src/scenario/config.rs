use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::DEFAULT_EPS0;
use crate::elliptic::{AdmissibleProblem, BoundaryForm, MinimizeOptions};
use crate::error::{Error, Result};
use crate::geometry::{
    AxisRotation, Circle, Coupling, Identity, InterfaceMap, Manifold, Scaling, Sphere, SubmanifoldPair, Torus,
};
use crate::grid::SplitGrid;
use crate::parabolic::{FlowOptions, PicardConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Minimize,
    Flow,
    Picard,
    /// Diagnostics on the initial field only.
    Diagnose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub h: f64,
    /// Defaults to `−1` on every axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    /// Defaults to `1` on every axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn build(&self) -> Result<SplitGrid> {
        let lower = self.lower.clone().unwrap_or_else(|| vec![-1.0; self.dim]);
        let upper = self.upper.clone().unwrap_or_else(|| vec![1.0; self.dim]);
        SplitGrid::new(self.dim, self.h, &lower, &upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Circle,
    Sphere,
    Torus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slice {
    /// `M = N`.
    #[default]
    Whole,
    /// The great circle `{z = 0}` of a sphere.
    Equator,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: TargetKind,
    #[serde(default = "one")]
    pub radius: f64,
    /// Tube radius of a torus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor: Option<f64>,
    #[serde(default)]
    pub slice: Slice,
}

impl TargetSpec {
    fn build(&self, path: &str) -> Result<SubmanifoldPair> {
        if !(self.radius > 0.0) {
            return Err(Error::config(format!("{path}.radius"), "radius must be positive"));
        }
        let ambient: Arc<dyn Manifold> = match self.kind {
            TargetKind::Circle => Arc::new(Circle::new(self.radius)),
            TargetKind::Sphere => Arc::new(Sphere::new(self.radius)),
            TargetKind::Torus => {
                let minor = self
                    .minor
                    .ok_or_else(|| Error::config(format!("{path}.minor"), "a torus needs a tube radius"))?;
                if !(minor > 0.0 && minor < self.radius) {
                    return Err(Error::config(format!("{path}.minor"), "tube radius must lie in (0, radius)"));
                }
                Arc::new(Torus::new(self.radius, minor))
            }
        };
        match (self.slice, self.kind) {
            (Slice::Whole, _) => Ok(SubmanifoldPair::whole(ambient)),
            (Slice::Equator, TargetKind::Sphere) => {
                SubmanifoldPair::new(ambient, Arc::new(Circle::in_space(self.radius)))
                    .map_err(|e| Error::config(format!("{path}.slice"), e.to_string()))
            }
            (Slice::Equator, _) => Err(Error::config(format!("{path}.slice"), "only spheres have an equator slice")),
        }
    }

    fn ambient_dim(&self) -> usize {
        match self.kind {
            TargetKind::Circle => 2,
            TargetKind::Sphere | TargetKind::Torus => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    pub plus: TargetSpec,
    pub minus: TargetSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    #[default]
    Identity,
    /// Rotation by `angle` about `e_z`.
    Rotation,
    /// Multiplication by `factor`.
    Scaling,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceSpec {
    #[serde(default)]
    pub map: MapKind,
    #[serde(default)]
    pub angle: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    /// Declared isometry flag, checked against the map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<bool>,
}

impl InterfaceSpec {
    fn build(&self) -> Result<Arc<dyn InterfaceMap>> {
        let map: Arc<dyn InterfaceMap> = match self.map {
            MapKind::Identity => Arc::new(Identity),
            MapKind::Rotation => Arc::new(AxisRotation::new(self.angle)),
            MapKind::Scaling => {
                let f = self.factor.unwrap_or(1.0);
                if !(f > 0.0) {
                    return Err(Error::config("interface.factor", "scaling factor must be positive"));
                }
                Arc::new(Scaling::new(f))
            }
        };
        if let Some(flag) = self.isometry {
            if flag != map.is_isometry() {
                return Err(Error::config(
                    "interface.isometry",
                    format!("declared {flag}, but the {} map has isometry = {}", map.name(), map.is_isometry()),
                ));
            }
        }
        Ok(map)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSource {
    /// Harmonic extension of the data, projected onto the targets.
    #[default]
    Initializer,
    /// The boundary form evaluated at every node.
    ClosedForm,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub source: InitialSource,
    /// Amplitude of a seeded random perturbation of interior nodes, projected back to `N±`.
    #[serde(default)]
    pub perturbation: f64,
}

fn default_eps0() -> f64 {
    DEFAULT_EPS0
}

fn default_theta() -> f64 {
    0.5
}

fn origin() -> Vec<[f64; 3]> {
    vec![[0.0; 3]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Interface points for the curves, the decay ratio and the blow-up check.
    #[serde(default = "origin")]
    pub centers: Vec<[f64; 3]>,
    /// Radii of the static monotonicity curve.
    #[serde(default)]
    pub radii: Vec<f64>,
    /// Distortion constant `C`.
    #[serde(default)]
    pub constant: f64,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    /// Scales of the small-energy detector.
    #[serde(default)]
    pub detect_scales: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_radius: Option<f64>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Radii of the Struwe quantity, flow runs only.
    #[serde(default)]
    pub struwe_radii: Vec<f64>,
    /// Defaults to the end of the flow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub struwe_t0: Option<f64>,
    #[serde(default)]
    pub blowup_scales: Vec<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            centers: origin(),
            radii: Vec::new(),
            constant: 0.0,
            eps0: DEFAULT_EPS0,
            detect_scales: Vec::new(),
            decay_radius: None,
            theta: default_theta(),
            struwe_radii: Vec::new(),
            struwe_t0: None,
            blowup_scales: Vec::new(),
        }
    }
}

/// A complete run description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: RunKind,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub targets: Targets,
    #[serde(default)]
    pub interface: InterfaceSpec,
    pub boundary: BoundaryForm,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub minimize: MinimizeOptions,
    #[serde(default)]
    pub flow: FlowOptions,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

const BUILTIN: [(&str, &str); 5] = [
    ("constant", include_str!("../../../../scenarios/constant.toml")),
    ("geodesic-1d", include_str!("../../../../scenarios/geodesic-1d.toml")),
    ("hedgehog-3d", include_str!("../../../../scenarios/hedgehog-3d.toml")),
    ("square-flow", include_str!("../../../../scenarios/square-flow.toml")),
    ("sphere-picard", include_str!("../../../../scenarios/sphere-picard.toml")),
];

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.strip_suffix('`')) {
                path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
            }
            Error::config(if path == "." { String::from("<root>") } else { path }, message)
        })?;
        scenario.check()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
    }

    /// The scenarios shipped with the crate, by name.
    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::invalid(format!("no built-in scenario named `{name}`")))?;
        Scenario::from_toml_str(text)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    fn check(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.targets.plus.ambient_dim() != self.targets.minus.ambient_dim() {
            return Err(Error::config(
                "targets.minus.kind",
                "targets must have the same ambient dimension; padding is not automated",
            ));
        }
        if self.initial.perturbation < 0.0 {
            return Err(Error::config("initial.perturbation", "must be nonnegative"));
        }
        let grid = self.grid.build()?;
        self.coupling()?;
        self.minimize.validate()?;
        if self.kind == RunKind::Flow {
            self.flow.validate(grid.spacing())?;
        }
        if self.kind == RunKind::Picard {
            self.picard.validate()?;
        }
        let d = &self.diagnostics;
        if !(d.eps0 > 0.0) {
            return Err(Error::config("diagnostics.eps0", "must be positive"));
        }
        if !(d.theta > 0.0 && d.theta < 1.0) {
            return Err(Error::config("diagnostics.theta", "must lie in (0, 1)"));
        }
        let n = grid.dim() - 1;
        for (k, c) in d.centers.iter().enumerate() {
            if c[n] != 0.0 {
                return Err(Error::config(format!("diagnostics.centers[{k}]"), "centers must lie on the interface"));
            }
        }
        Ok(())
    }

    pub fn coupling(&self) -> Result<Coupling> {
        Ok(Coupling::new(
            self.targets.plus.build("targets.plus")?,
            self.targets.minus.build("targets.minus")?,
            self.interface.build()?,
        ))
    }

    pub fn problem(&self) -> Result<AdmissibleProblem> {
        let grid = self.grid.build()?;
        Ok(AdmissibleProblem::new(grid, self.coupling()?, self.boundary)?
            .with_constraint_tol(self.minimize.constraint_tol))
    }

    /// Canonical JSON of the scenario, the input of [`Scenario::digest`].
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        hex_digest(self.canonical_json().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
