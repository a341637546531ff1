//! Solving a scenario and writing its artifacts.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use fracflow_core::assembly::{assemble_unconstrained, InterfaceModel};
use fracflow_core::postprocess::{
    flux_balance, fracture_jump, fracture_pressure, sample_profile, write_solution_csv, FluxBalance,
};
use fracflow_core::solver::{solve_preconditioned, Preconditioner};
use fracflow_core::split::split_mesh;
use fracflow_core::{Point, Profile, SolveReport, SplitMesh, UnconstrainedSystem};
use serde::Serialize;

use crate::config::{PreconditionerKind, Problem, Scenario};
use crate::error::CliResult;

/// A solved scenario with everything needed for post-processing.
#[derive(Debug, Clone)]
pub struct Solved {
    pub scenario: Scenario,
    pub problem: Problem,
    pub split: SplitMesh,
    pub mobilities: Vec<f64>,
    pub system: UnconstrainedSystem,
    pub pressure: Vec<f64>,
    pub report: SolveReport,
    pub balance: FluxBalance<f64>,
}

pub fn solve(scenario: &Scenario) -> CliResult<Solved> {
    let problem = scenario.build()?;
    let split = split_mesh(&problem.mesh, &problem.network)?;
    let mobilities = scenario.subdomain_mobilities(split.n_subdomains())?;
    let models = InterfaceModel::for_network(&split, &problem.network);
    let system = assemble_unconstrained(&split, &mobilities, &models, &problem.bcs)?;
    let reduced = system.eliminate();
    let pc = match scenario.solver.preconditioner {
        PreconditionerKind::BlockJacobi => Preconditioner::block_jacobi(&reduced.matrix, &split.copy_groups())?,
        PreconditionerKind::Jacobi => Preconditioner::jacobi(&reduced.matrix),
    };
    let (pressure, report) = solve_preconditioned(&reduced.matrix, &reduced.rhs, &pc, scenario.solver.options())?;
    let balance = flux_balance(&system, &pressure)?;
    Ok(Solved {
        scenario: scenario.clone(),
        problem,
        split,
        mobilities,
        system,
        pressure,
        report,
        balance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixChecks {
    /// `max |A 1| / max |A|` before boundary conditions.
    pub constant_mode_residual: f64,
    /// `max |A - Aᵀ| / max |A|`
    pub symmetry_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpSummary {
    pub fracture: usize,
    /// Largest `|[p]|` over the fracture vertices and where it occurs.
    pub max_abs_jump: f64,
    pub location: [f64; 2],
    pub jump_at_max: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub file: String,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub dofs: usize,
    pub subdomains: usize,
    pub fractures: usize,
    pub solve_method: String,
    pub cg_iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub boundary_fluxes: BTreeMap<String, f64>,
    pub inflow: f64,
    pub mass_balance_defect: f64,
    pub matrix: MatrixChecks,
    pub interface_jumps: Vec<JumpSummary>,
    pub profiles: BTreeMap<String, ProfileSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_max_deviation: Option<f64>,
}

impl Solved {
    pub fn matrix_checks(&self) -> MatrixChecks {
        let a = &self.system.system.matrix;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let ones = vec![1.0; a.dim()];
        let row_sums = a.mul_vec(&ones).into_iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        MatrixChecks {
            constant_mode_residual: row_sums / scale,
            symmetry_defect: a.symmetry_defect() / scale,
        }
    }

    /// Named profiles requested by the scenario.
    pub fn profiles(&self) -> CliResult<Vec<(String, Profile)>> {
        self.problem
            .profiles
            .iter()
            .map(|(name, seg, n)| Ok((name.clone(), sample_profile(&self.split, &self.pressure, *seg, *n)?)))
            .collect()
    }

    /// Pressure `{p}` and jump `[p]` along fracture `j`.
    pub fn fracture_trace(&self, j: usize) -> CliResult<(Profile, Profile)> {
        Ok((
            fracture_pressure(&self.split, &self.pressure, j)?,
            fracture_jump(&self.split, &self.pressure, j)?,
        ))
    }

    pub fn reference_deviation(&self) -> Option<f64> {
        let r = self.scenario.reference?;
        Some(
            self.split
                .mesh()
                .vertices()
                .iter()
                .zip(&self.pressure)
                .fold(0.0_f64, |m, (p, v)| m.max((v - r.eval(*p)).abs())),
        )
    }

    pub fn summary(&self) -> CliResult<Summary> {
        let mut interface_jumps = Vec::new();
        for j in 0..self.split.n_fractures() {
            let (_, jump) = self.fracture_trace(j)?;
            let at = jump
                .samples
                .iter()
                .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
                .expect("fractures have at least one vertex");
            interface_jumps.push(JumpSummary {
                fracture: j,
                max_abs_jump: at.value.abs(),
                location: [at.point.x, at.point.y],
                jump_at_max: at.value,
                file: fracture_file(j),
            });
        }
        let profiles = self
            .profiles()?
            .into_iter()
            .map(|(name, p)| {
                let values = p.values();
                let summary = ProfileSummary {
                    file: profile_file(&name),
                    samples: p.len(),
                    min: values.iter().copied().fold(f64::INFINITY, f64::min),
                    max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                };
                (name, summary)
            })
            .collect();
        Ok(Summary {
            scenario: self.scenario.name.clone(),
            dofs: self.split.n_dofs(),
            subdomains: self.split.n_subdomains(),
            fractures: self.split.n_fractures(),
            solve_method: format!("{:?}", self.report.method),
            cg_iterations: self.report.iterations,
            relative_residual: self.report.relative_residual,
            converged: self.report.converged,
            boundary_fluxes: self
                .balance
                .per_tag
                .iter()
                .map(|(t, v)| (t.name().to_string(), *v))
                .collect(),
            inflow: self.balance.inflow,
            mass_balance_defect: self.balance.defect,
            matrix: self.matrix_checks(),
            interface_jumps,
            profiles,
            reference_max_deviation: self.reference_deviation(),
        })
    }
}

/// File-system friendly form of a profile name.
pub fn profile_file(name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("profile_{clean}.csv")
}

pub fn fracture_file(j: usize) -> String {
    format!("fracture_{j}.csv")
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_fracture_csv<W: Write>(pressure: &Profile, jump: &Profile, mut w: W) -> std::io::Result<()> {
    writeln!(w, "s,x,y,p,jump")?;
    for (p, j) in pressure.samples.iter().zip(&jump.samples) {
        let Point { x, y } = p.point;
        writeln!(w, "{:.16e},{x:.16e},{y:.16e},{:.16e},{:.16e}", p.s, p.value, j.value)?;
    }
    Ok(())
}

/// Solves `scenario` and writes its CSV files and `summary.json` into `out`.
pub fn run(scenario: &Scenario, out: &Path) -> CliResult<Summary> {
    let solved = solve(scenario)?;
    fs::create_dir_all(out)?;
    let mut w = create(out, "solution.csv")?;
    write_solution_csv(&solved.split, &solved.pressure, &mut w)?;
    w.flush()?;
    for (name, p) in solved.profiles()? {
        let mut w = create(out, &profile_file(&name))?;
        p.write_csv(&mut w)?;
        w.flush()?;
    }
    for j in 0..solved.split.n_fractures() {
        let (pressure, jump) = solved.fracture_trace(j)?;
        let mut w = create(out, &fracture_file(j))?;
        write_fracture_csv(&pressure, &jump, &mut w)?;
        w.flush()?;
    }
    let summary = solved.summary()?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
