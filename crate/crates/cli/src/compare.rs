//! Comparison of a solved scenario against an independent reference.

use std::collections::BTreeMap;
use std::path::Path;

use fracflow_core::oracle::{solve_1d_interface_analytic, solve_equidim_2d, EquidimProblem, OneDimProblem};
use fracflow_core::postprocess::{evaluate_at, profile_error};
use fracflow_core::{Aperture, Point, Profile, SolveOptions};
use serde::Serialize;

use crate::config::{ApertureConfig, Domain, Mobility, ValueConfig};
use crate::error::{CliError, CliResult};
use crate::runner::{solve, write_json, Solved};
use crate::Scenario;

/// Band resolution used for a varying aperture. Each row of the resolved
/// mesh snaps the inclusion to whole band columns, so a coarse band
/// misrepresents the local thickness.
pub const VARYING_BAND_CELLS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    /// Closed-form solution of the 1D interface problem, valid for an
    /// interval or a y-invariant rectangle problem.
    Analytic1d,
    /// Resolved solve with the inclusion meshed as a band of cells.
    Equidim {
        /// Uniform cells per direction before the band is inserted.
        n: Option<usize>,
        /// Cells across the inclusion; defaults to 2 for a constant aperture
        /// and [`VARYING_BAND_CELLS`] otherwise.
        band_cells: Option<usize>,
    },
}

impl Oracle {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Analytic1d => "analytic1d",
            Self::Equidim { .. } => "equidim",
        }
    }

    pub fn parse(name: &str, n: Option<usize>, band_cells: Option<usize>) -> CliResult<Self> {
        match name {
            "analytic1d" => Ok(Self::Analytic1d),
            "equidim" => Ok(Self::Equidim { n, band_cells }),
            other => Err(CliError::Config(format!(
                "unknown oracle `{other}`; expected analytic1d or equidim"
            ))),
        }
    }

    /// Pass threshold used when none is given: absolute nodal error for the
    /// analytic oracle, l2 error relative to the pressure range for the
    /// resolved one.
    pub fn default_tolerance(&self, scenario: &Scenario) -> f64 {
        match self {
            Self::Analytic1d if scenario.is_interval() => 1e-10,
            Self::Analytic1d => 1e-8,
            Self::Equidim { .. } => 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileComparison {
    pub l2: f64,
    pub max: f64,
    /// Normalization of `relative_l2`: the reference profile's own range,
    /// or the whole reference range for fracture traces.
    pub range: f64,
    pub relative_l2: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalComparison {
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpComparison {
    pub computed: f64,
    pub exact: f64,
    pub error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub oracle: String,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_cells: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<NodalComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpComparison>,
    pub profiles: BTreeMap<String, ProfileComparison>,
    pub pass: bool,
}

fn unsupported(oracle: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("oracle {oracle} does not apply: {why}"))
}

fn constant(v: &ValueConfig) -> Option<f64> {
    match v {
        ValueConfig::Constant(c) => Some(*c),
        ValueConfig::Affine(_) => None,
    }
}

/// The single straight vertical fracture, as `(x, y range, aperture, k_f)`.
fn vertical_fracture(s: &Scenario, oracle: &str) -> CliResult<(f64, (f64, f64), ApertureConfig, f64)> {
    let [f] = s.fractures.as_slice() else {
        return Err(unsupported(oracle, "exactly one fracture is required"));
    };
    if s.is_interval() {
        return Ok((f.path[0][0], (0.0, 0.0), f.aperture, f.mobility));
    }
    let x = f.path[0][0];
    if f.path.iter().any(|p| p[0] != x) {
        return Err(unsupported(oracle, "the fracture must be a vertical line"));
    }
    let ys = f.path.iter().map(|p| p[1]);
    let lo = ys.clone().fold(f64::INFINITY, f64::min);
    let hi = ys.fold(f64::NEG_INFINITY, f64::max);
    Ok((x, (lo, hi), f.aperture, f.mobility))
}

fn compare_profiles(
    solved: &Solved,
    tol: f64,
    reference: impl Fn(Point) -> CliResult<f64>,
    fracture_range: Option<f64>,
) -> CliResult<BTreeMap<String, ProfileComparison>> {
    let mut profiles: Vec<(String, Profile, Option<f64>)> =
        solved.profiles()?.into_iter().map(|(n, p)| (n, p, None)).collect();
    // a trace across a blocking fracture is nearly constant, so its own
    // range is no scale
    if let Some(range) = fracture_range {
        for j in 0..solved.split.n_fractures() {
            profiles.push((format!("fracture_{j}"), solved.fracture_trace(j)?.0, Some(range)));
        }
    }
    let mut out = BTreeMap::new();
    for (name, computed, range) in profiles {
        let mut failure = None;
        let expected = computed.map_points(|p| {
            reference(p).unwrap_or_else(|e| {
                failure = Some(e);
                f64::NAN
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let (l2, max) = profile_error(&computed, &expected)?;
        let range = range.unwrap_or_else(|| expected.range());
        let relative_l2 = if range > 0.0 { l2 / range } else { l2 };
        out.insert(
            name,
            ProfileComparison {
                l2,
                max,
                range,
                relative_l2,
                pass: relative_l2 <= tol,
            },
        );
    }
    Ok(out)
}

fn analytic1d(solved: &Solved, tol: f64) -> CliResult<CompareReport> {
    const NAME: &str = "analytic1d";
    let s = &solved.scenario;
    let (x_frac, y_range, aperture, kf) = vertical_fracture(s, NAME)?;
    let ApertureConfig::Constant(eps) = aperture else {
        return Err(unsupported(NAME, "the aperture must be constant"));
    };
    let (x0, length) = match s.domain {
        Domain::Interval { length } => (0.0, length),
        Domain::Rectangle { lower, upper } => {
            if y_range != (lower[1], upper[1]) {
                return Err(unsupported(NAME, "the fracture must span the full height"));
            }
            (lower[0], upper[0] - lower[0])
        }
    };
    let b = &s.boundary;
    let h = b.neumann.get("left").and_then(constant);
    let g = b.dirichlet.get("right").and_then(constant);
    let others_free = b.dirichlet.len() == 1
        && b.neumann
            .iter()
            .all(|(side, v)| side == "left" || constant(v) == Some(0.0));
    let (Some(h), Some(g), true) = (h, g, others_free) else {
        return Err(unsupported(
            NAME,
            "needs a constant flux on the left, a constant pressure on the right and no flow elsewhere",
        ));
    };
    let (k1, k2) = match &s.mobility {
        Mobility::Uniform(k) => (*k, *k),
        Mobility::PerSubdomain(ks) => (ks[0], ks[ks.len() - 1]),
    };
    let exact = solve_1d_interface_analytic(&OneDimProblem {
        length,
        center: x_frac - x0,
        eps,
        k1,
        k2,
        kf,
        h,
    })?;

    let on_interface = |x: f64| (x - x_frac).abs() <= 1e-12 * length;
    let sub = solved.split.subdomain_of_vertex();
    let max_error = solved
        .split
        .mesh()
        .vertices()
        .iter()
        .zip(&solved.pressure)
        .zip(&sub)
        .map(|((p, v), &d)| {
            let x = p.x - x0;
            let e = match (on_interface(p.x), d) {
                (true, 0) => exact.eval_left(x),
                (true, _) => exact.eval_right(x),
                (false, _) => exact.eval(x),
            };
            (v - (e + g)).abs()
        })
        .fold(0.0_f64, f64::max);
    let (computed, exact_jump) = {
        let (_, jump) = solved.fracture_trace(0)?;
        let values = jump.values();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        (mean, exact.jump().expect("interface solution has a jump").1)
    };
    let jump_error = (computed - exact_jump).abs();
    let profiles = compare_profiles(solved, tol, |p| Ok(exact.eval(p.x - x0) + g), None)?;
    // profile errors here are absolute, like the nodal check
    let profiles: BTreeMap<_, _> = profiles
        .into_iter()
        .map(|(k, mut c)| {
            c.pass = c.max <= tol;
            (k, c)
        })
        .collect();
    let nodes = NodalComparison {
        max_error,
        pass: max_error <= tol,
    };
    let jump = JumpComparison {
        computed,
        exact: exact_jump,
        error: jump_error,
        pass: jump_error <= tol,
    };
    let pass = nodes.pass && jump.pass && profiles.values().all(|c| c.pass);
    Ok(CompareReport {
        scenario: s.name.clone(),
        oracle: NAME.into(),
        tolerance: tol,
        oracle_cells: None,
        nodes: Some(nodes),
        jump: Some(jump),
        profiles,
        pass,
    })
}

fn equidim(solved: &Solved, tol: f64, n: Option<usize>, band_cells: Option<usize>) -> CliResult<CompareReport> {
    const NAME: &str = "equidim";
    let s = &solved.scenario;
    let Domain::Rectangle { lower, upper } = s.domain else {
        return Err(unsupported(NAME, "the domain must be a rectangle"));
    };
    let (x_frac, y_range, aperture, kf) = vertical_fracture(s, NAME)?;
    let Mobility::Uniform(k) = s.mobility else {
        return Err(unsupported(NAME, "the background mobility must be uniform"));
    };
    let n = n.unwrap_or(2 * s.mesh.nx.max(s.mesh.ny.unwrap_or(0)));
    let band_cells = band_cells.unwrap_or(match aperture {
        ApertureConfig::Constant(_) => 2,
        ApertureConfig::Elliptical { .. } => VARYING_BAND_CELLS,
    });
    let pb = EquidimProblem {
        lower: Point::new(lower[0], lower[1]),
        upper: Point::new(upper[0], upper[1]),
        nx_outside: n,
        ny: n,
        band_cells_across: band_cells,
        fracture_x: x_frac,
        fracture_y: y_range,
        aperture: aperture.to_core(),
        k_background: k,
        kf,
    };
    if !matches!(pb.aperture, Aperture::Constant(_)) && band_cells < 2 {
        return Err(unsupported(NAME, "a varying aperture needs at least two band cells"));
    }
    let reference = solve_equidim_2d(&pb, &solved.problem.bcs, SolveOptions::default())?;
    let cells_x = pb.x_nodes()?.len() - 1;
    let (lo, hi) = reference
        .pressure
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    let profiles = compare_profiles(
        solved,
        tol,
        |p| Ok(evaluate_at(&reference.split, &reference.pressure, p)?),
        Some(hi - lo),
    )?;
    let pass = profiles.values().all(|c| c.pass);
    Ok(CompareReport {
        scenario: s.name.clone(),
        oracle: NAME.into(),
        tolerance: tol,
        oracle_cells: Some([cells_x, n]),
        nodes: None,
        jump: None,
        profiles,
        pass,
    })
}

/// Solves `scenario`, compares it with `oracle` and, when `out` is given,
/// writes `compare.json` there.
pub fn compare(scenario: &Scenario, oracle: Oracle, tol: Option<f64>, out: Option<&Path>) -> CliResult<CompareReport> {
    let tol = tol.unwrap_or_else(|| oracle.default_tolerance(scenario));
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Config("comparison tolerance must be positive".into()));
    }
    let solved = solve(scenario)?;
    let report = match oracle {
        Oracle::Analytic1d => analytic1d(&solved, tol)?,
        Oracle::Equidim { n, band_cells } => equidim(&solved, tol, n, band_cells)?,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("compare.json"), &report)?;
    }
    Ok(report)
}
