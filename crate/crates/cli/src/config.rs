//! JSON scenario files and their translation into solver inputs.

use std::collections::BTreeMap;
use std::path::Path;

use fracflow_core::mesh::{build_interval, build_structured_quad};
use fracflow_core::{
    Aperture, BoundaryConditionSet, BoundaryTag, BoundaryValue, FractureNetwork, FractureSpec, Mesh, Point,
    SolveOptions,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub domain: Domain,
    pub mesh: MeshConfig,
    #[serde(default = "unit_mobility")]
    pub mobility: Mobility,
    #[serde(default)]
    pub fractures: Vec<FractureConfig>,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub profiles: Vec<ProfileConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Known exact solution; the run reports the largest nodal deviation from it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Affine>,
}

fn unit_mobility() -> Mobility {
    Mobility::Uniform(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lower: [f64; 2], upper: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Mobility {
    Uniform(f64),
    /// One value per subdomain, in subdomain order.
    PerSubdomain(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractureConfig {
    /// Polyline vertices; a single point `[x, 0]` on an interval domain.
    pub path: Vec<[f64; 2]>,
    pub aperture: ApertureConfig,
    pub mobility: f64,
    /// Where the geometry comes from, e.g. `external-benchmark`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ApertureConfig {
    Constant(f64),
    Elliptical { center: [f64; 2], major: f64, minor: f64 },
}

impl ApertureConfig {
    pub fn to_core(self) -> Aperture {
        match self {
            Self::Constant(eps) => Aperture::Constant(eps),
            Self::Elliptical { center, major, minor } => Aperture::Elliptical {
                center: point(center),
                major,
                minor,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub dirichlet: BTreeMap<String, ValueConfig>,
    #[serde(default)]
    pub neumann: BTreeMap<String, ValueConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueConfig {
    Constant(f64),
    Affine(Affine),
}

/// `c + dx x + dy y`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub c: f64,
    #[serde(default)]
    pub dx: f64,
    #[serde(default)]
    pub dy: f64,
}

impl Affine {
    pub fn eval(&self, p: Point) -> f64 {
        self.c + self.dx * p.x + self.dy * p.y
    }
}

impl ValueConfig {
    fn is_finite(&self) -> bool {
        match self {
            Self::Constant(v) => v.is_finite(),
            Self::Affine(a) => a.c.is_finite() && a.dx.is_finite() && a.dy.is_finite(),
        }
    }

    fn to_core(self) -> BoundaryValue {
        match self {
            Self::Constant(v) => BoundaryValue::Constant(v),
            Self::Affine(a) => BoundaryValue::function(move |p| a.eval(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub name: String,
    pub from: [f64; 2],
    pub to: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    101
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerKind {
    /// Point Jacobi, with the copies of each split vertex inverted together.
    #[default]
    BlockJacobi,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub preconditioner: PreconditionerKind,
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: None,
            preconditioner: PreconditionerKind::default(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn invalid(field: impl std::fmt::Display, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config field `{field}`: {msg}"))
}

/// Validated solver inputs built from a scenario.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub network: FractureNetwork,
    pub bcs: BoundaryConditionSet,
    pub profiles: Vec<(String, (Point, Point), usize)>,
}

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.domain, Domain::Interval { .. })
    }

    /// Sets the mesh resolution to `n` cells per direction.
    pub fn with_resolution(mut self, n: usize) -> Self {
        self.mesh.nx = n;
        if !self.is_interval() {
            self.mesh.ny = Some(n);
        }
        self
    }

    /// Checks everything that can be checked before meshing.
    pub fn validate(&self) -> CliResult<()> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        match self.domain {
            Domain::Interval { length } if !(length > 0.0 && length.is_finite()) => {
                return Err(invalid("domain.interval.length", "must be positive"));
            }
            Domain::Rectangle { lower, upper }
                if !(upper[0] > lower[0] && upper[1] > lower[1])
                    || lower.iter().chain(&upper).any(|v| !v.is_finite()) =>
            {
                return Err(invalid("domain.rectangle", "upper corner must exceed lower corner"));
            }
            _ => {}
        }
        if self.mesh.nx == 0 {
            return Err(invalid("mesh.nx", "must be positive"));
        }
        match (self.is_interval(), self.mesh.ny) {
            (false, None) => return Err(invalid("mesh.ny", "required for a rectangle")),
            (false, Some(0)) => return Err(invalid("mesh.ny", "must be positive")),
            (true, Some(_)) => return Err(invalid("mesh.ny", "not allowed for an interval")),
            _ => {}
        }
        let mobilities = match &self.mobility {
            Mobility::Uniform(k) => std::slice::from_ref(k),
            Mobility::PerSubdomain(ks) if ks.is_empty() => {
                return Err(invalid("mobility", "list must not be empty"));
            }
            Mobility::PerSubdomain(ks) => ks.as_slice(),
        };
        if mobilities.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(invalid("mobility", "values must be positive"));
        }
        for (j, f) in self.fractures.iter().enumerate() {
            let field = |what: &str| format!("fractures[{j}].{what}");
            let expected = if self.is_interval() {
                "exactly one point"
            } else {
                "at least two points"
            };
            if (self.is_interval() && f.path.len() != 1) || (!self.is_interval() && f.path.len() < 2) {
                return Err(invalid(field("path"), format!("needs {expected}")));
            }
            if !(f.mobility > 0.0 && f.mobility.is_finite()) {
                return Err(invalid(field("mobility"), "must be positive"));
            }
            match f.aperture {
                ApertureConfig::Constant(eps) if !(eps > 0.0 && eps.is_finite()) => {
                    return Err(invalid(field("aperture"), "must be positive"));
                }
                ApertureConfig::Elliptical { major, minor, .. }
                    if !(major > 0.0 && minor > 0.0 && major.is_finite() && minor.is_finite()) =>
                {
                    return Err(invalid(field("aperture"), "axes must be positive"));
                }
                _ => {}
            }
        }
        let mut seen = Vec::new();
        for (kind, map) in [
            ("dirichlet", &self.boundary.dirichlet),
            ("neumann", &self.boundary.neumann),
        ] {
            for (side, value) in map {
                let field = format!("boundary.{kind}.{side}");
                let tag = BoundaryTag::parse(side)
                    .ok_or_else(|| invalid(&field, "expected one of left, right, bottom, top"))?;
                if self.is_interval() && !matches!(tag, BoundaryTag::Left | BoundaryTag::Right) {
                    return Err(invalid(&field, "an interval only has left and right ends"));
                }
                if seen.contains(&tag) {
                    return Err(invalid(&field, "side already has a condition"));
                }
                if !value.is_finite() {
                    return Err(invalid(&field, "must be finite"));
                }
                seen.push(tag);
            }
        }
        if self.boundary.dirichlet.is_empty() {
            return Err(invalid(
                "boundary.dirichlet",
                "at least one side needs a Dirichlet condition",
            ));
        }
        let mut names = Vec::new();
        for (i, p) in self.profiles.iter().enumerate() {
            if p.name.is_empty() || names.contains(&&p.name) {
                return Err(invalid(format!("profiles[{i}].name"), "must be non-empty and unique"));
            }
            if p.samples < 2 {
                return Err(invalid(format!("profiles[{i}].samples"), "must be at least 2"));
            }
            names.push(&p.name);
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(invalid("solver.tol", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Mesh, fracture network and boundary data for this scenario.
    pub fn build(&self) -> CliResult<Problem> {
        self.validate()?;
        let mesh = match self.domain {
            Domain::Interval { length } => build_interval(self.mesh.nx, length)?,
            Domain::Rectangle { lower, upper } => build_structured_quad(
                self.mesh.nx,
                self.mesh.ny.expect("validated"),
                point(lower),
                point(upper),
            )?,
        };
        let fractures = self
            .fractures
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let spec = if self.is_interval() {
                    FractureSpec::point(f.path[0][0], f.aperture.to_core(), f.mobility)
                } else {
                    FractureSpec::new(
                        f.path.iter().copied().map(point).collect(),
                        f.aperture.to_core(),
                        f.mobility,
                    )
                };
                spec.map_err(|e| invalid(format!("fractures[{j}]"), e))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut bcs = BoundaryConditionSet::new();
        for (side, v) in &self.boundary.dirichlet {
            bcs = bcs.with_dirichlet(BoundaryTag::parse(side).expect("validated"), v.to_core());
        }
        for (side, v) in &self.boundary.neumann {
            bcs = bcs.with_neumann(BoundaryTag::parse(side).expect("validated"), v.to_core());
        }
        let profiles = self
            .profiles
            .iter()
            .map(|p| (p.name.clone(), (point(p.from), point(p.to)), p.samples))
            .collect();
        Ok(Problem {
            mesh,
            network: FractureNetwork::new(fractures),
            bcs,
            profiles,
        })
    }

    /// Mobility of each subdomain once their number is known.
    pub fn subdomain_mobilities(&self, n_subdomains: usize) -> CliResult<Vec<f64>> {
        match &self.mobility {
            Mobility::Uniform(k) => Ok(vec![*k; n_subdomains]),
            Mobility::PerSubdomain(ks) if ks.len() == n_subdomains => Ok(ks.clone()),
            Mobility::PerSubdomain(ks) => Err(invalid(
                "mobility",
                format!(
                    "{} values given but the fractures cut {n_subdomains} subdomains",
                    ks.len()
                ),
            )),
        }
    }
}
