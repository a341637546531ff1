//! Built-in scenarios.

use std::collections::BTreeMap;

use crate::config::{
    Affine, ApertureConfig, BoundaryConfig, Domain, FractureConfig, MeshConfig, Mobility, ProfileConfig, Scenario,
    SolverConfig, ValueConfig,
};
use crate::error::{CliError, CliResult};

pub struct Builtin {
    pub name: &'static str,
    /// The first entry is the default.
    pub variants: &'static [&'static str],
    pub description: &'static str,
}

pub const BUILTINS: [Builtin; 6] = [
    Builtin {
        name: "onedim",
        variants: &[],
        description: "1D bar of length 1 with a thin blocking layer at x = 0.5 (eps = k_f = 1e-4), inflow 1 at x = 0, p = 0 at x = 1",
    },
    Builtin {
        name: "regular2d",
        variants: &["conductive", "blocking"],
        description: "unit square cut by six fractures into ten subdomains, eps = 1e-4, k_f = 1e4 or 1e-4; inflow 1 on the left, p = 1 on the right",
    },
    Builtin {
        name: "single_vertical",
        variants: &[],
        description: "one blocking fracture at x = 0.5 (eps = k_f = 1e-2) on a 64x64 grid; inflow 1 on the left, p = y on the right",
    },
    Builtin {
        name: "patch_eps_sweep",
        variants: &["1e-2", "1e-3", "1e-4"],
        description: "uniform medium with a matching fracture (k = k_f = 1) at x = 0.5; p = 1 - x is exact without the fracture",
    },
    Builtin {
        name: "wentzell_tangential",
        variants: &[],
        description: "conductive fracture at x = 0.5 (eps = 1e-2, k_f = 1e2) with flow along it: p = 1 at y = 0, p = 0 at y = 1",
    },
    Builtin {
        name: "ellipse2d",
        variants: &["thin", "resolved"],
        description: "fracture at x = 0.5 with elliptical aperture (minor axis 1e-4, or 1e-2 when resolved) and k_f/eps_max = 1; inflow 1 on the left, p = 1 on the right (boundary data chosen here, not prescribed)",
    },
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|b| b.name)
}

fn rectangle() -> Domain {
    Domain::Rectangle {
        lower: [0.0, 0.0],
        upper: [1.0, 1.0],
    }
}

fn square_mesh(n: usize) -> MeshConfig {
    MeshConfig { nx: n, ny: Some(n) }
}

fn segment(a: [f64; 2], b: [f64; 2], eps: f64, kf: f64) -> FractureConfig {
    FractureConfig {
        path: vec![a, b],
        aperture: ApertureConfig::Constant(eps),
        mobility: kf,
        source: None,
    }
}

fn sides(entries: &[(&str, ValueConfig)]) -> BTreeMap<String, ValueConfig> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn profile(name: &str, from: [f64; 2], to: [f64; 2], samples: usize) -> ProfileConfig {
    ProfileConfig {
        name: name.into(),
        from,
        to,
        samples,
    }
}

fn inflow_left_pressure_right(p_right: ValueConfig) -> BoundaryConfig {
    BoundaryConfig {
        dirichlet: sides(&[("right", p_right)]),
        neumann: sides(&[("left", ValueConfig::Constant(1.0))]),
    }
}

fn vertical_line() -> ([f64; 2], [f64; 2]) {
    ([0.5, 0.0], [0.5, 1.0])
}

fn solver(tol: f64) -> SolverConfig {
    SolverConfig {
        tol,
        ..SolverConfig::default()
    }
}

/// Built-in scenario `name`; `variant` defaults to the first listed one and
/// `n` overrides the mesh resolution.
pub fn builtin(name: &str, variant: Option<&str>, n: Option<usize>) -> CliResult<Scenario> {
    let info = BUILTINS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| CliError::Config(format!("unknown scenario `{name}`")))?;
    let variant = match (variant, info.variants) {
        (None, vs) => vs.first().copied().unwrap_or(""),
        (Some(v), vs) if vs.contains(&v) => v,
        (Some(v), []) => {
            return Err(CliError::Config(format!(
                "scenario `{name}` has no variants, got `{v}`"
            )))
        }
        (Some(v), vs) => {
            return Err(CliError::Config(format!(
                "unknown variant `{v}` of `{name}`; expected one of {}",
                vs.join(", ")
            )))
        }
    };
    let full_name = if variant.is_empty() {
        name.to_string()
    } else {
        format!("{name}-{variant}")
    };
    let (x0, x1) = vertical_line();
    let mut s = match name {
        "onedim" => Scenario {
            name: full_name,
            description: info.description.into(),
            domain: Domain::Interval { length: 1.0 },
            mesh: MeshConfig { nx: 64, ny: None },
            mobility: Mobility::Uniform(1.0),
            fractures: vec![FractureConfig {
                path: vec![[0.5, 0.0]],
                aperture: ApertureConfig::Constant(1e-4),
                mobility: 1e-4,
                source: None,
            }],
            boundary: BoundaryConfig {
                dirichlet: sides(&[("right", ValueConfig::Constant(0.0))]),
                neumann: sides(&[("left", ValueConfig::Constant(1.0))]),
            },
            profiles: vec![],
            solver: solver(1e-13),
            reference: None,
        },
        "regular2d" => {
            let kf = if variant == "blocking" { 1e-4 } else { 1e4 };
            let lines = [
                ([0.0, 0.5], [1.0, 0.5]),
                ([0.5, 0.0], [0.5, 1.0]),
                ([0.5, 0.75], [1.0, 0.75]),
                ([0.75, 0.5], [0.75, 1.0]),
                ([0.5, 0.625], [0.75, 0.625]),
                ([0.625, 0.5], [0.625, 0.75]),
            ];
            Scenario {
                name: full_name,
                description: info.description.into(),
                domain: rectangle(),
                mesh: square_mesh(32),
                mobility: Mobility::Uniform(1.0),
                fractures: lines
                    .iter()
                    .map(|&(a, b)| FractureConfig {
                        source: Some("external-benchmark".into()),
                        ..segment(a, b, 1e-4, kf)
                    })
                    .collect(),
                boundary: inflow_left_pressure_right(ValueConfig::Constant(1.0)),
                profiles: vec![profile("AA", [0.0, 0.7], [1.0, 0.7], 101), profile("BB", x0, x1, 101)],
                // penalty entries near 1e6 put the attainable residual near 2e-10
                solver: solver(if variant == "blocking" { 1e-10 } else { 1e-9 }),
                reference: None,
            }
        }
        "single_vertical" => Scenario {
            name: full_name,
            description: info.description.into(),
            domain: rectangle(),
            mesh: square_mesh(64),
            mobility: Mobility::Uniform(1.0),
            fractures: vec![segment(x0, x1, 1e-2, 1e-2)],
            boundary: inflow_left_pressure_right(ValueConfig::Affine(Affine {
                c: 0.0,
                dx: 0.0,
                dy: 1.0,
            })),
            profiles: vec![profile("AA", [0.0, 0.7], [1.0, 0.7], 201)],
            solver: SolverConfig::default(),
            reference: None,
        },
        "patch_eps_sweep" => {
            let eps: f64 = variant.parse().expect("variant names are numbers");
            Scenario {
                name: full_name,
                description: info.description.into(),
                domain: rectangle(),
                mesh: square_mesh(32),
                mobility: Mobility::Uniform(1.0),
                fractures: vec![segment(x0, x1, eps, 1.0)],
                boundary: BoundaryConfig {
                    dirichlet: sides(&[
                        ("left", ValueConfig::Constant(1.0)),
                        ("right", ValueConfig::Constant(0.0)),
                    ]),
                    neumann: BTreeMap::new(),
                },
                profiles: vec![profile("AA", [0.0, 0.7], [1.0, 0.7], 101)],
                solver: solver(1e-12),
                reference: Some(Affine {
                    c: 1.0,
                    dx: -1.0,
                    dy: 0.0,
                }),
            }
        }
        "wentzell_tangential" => Scenario {
            name: full_name,
            description: info.description.into(),
            domain: rectangle(),
            mesh: square_mesh(64),
            mobility: Mobility::Uniform(1.0),
            fractures: vec![segment(x0, x1, 1e-2, 1e2)],
            boundary: BoundaryConfig {
                dirichlet: sides(&[
                    ("bottom", ValueConfig::Constant(1.0)),
                    ("top", ValueConfig::Constant(0.0)),
                ]),
                neumann: BTreeMap::new(),
            },
            profiles: vec![profile("centerline", x0, x1, 65)],
            solver: SolverConfig::default(),
            reference: None,
        },
        "ellipse2d" => {
            let minor = if variant == "resolved" { 1e-2 } else { 1e-4 };
            Scenario {
                name: full_name,
                description: info.description.into(),
                domain: rectangle(),
                mesh: square_mesh(32),
                mobility: Mobility::Uniform(1.0),
                fractures: vec![FractureConfig {
                    path: vec![x0, x1],
                    aperture: ApertureConfig::Elliptical {
                        center: [0.5, 0.5],
                        major: 1.0 + minor,
                        minor,
                    },
                    mobility: minor,
                    source: None,
                }],
                boundary: inflow_left_pressure_right(ValueConfig::Constant(1.0)),
                profiles: vec![profile("AA", [0.0, 0.7], [1.0, 0.7], 101)],
                solver: SolverConfig::default(),
                reference: None,
            }
        }
        _ => unreachable!("names come from BUILTINS"),
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("--n must be positive".into()));
        }
        s = s.with_resolution(n);
    }
    s.validate()?;
    Ok(s)
}
