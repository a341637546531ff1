use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracflow_cli::{builtin, compare, run, CliError, CliResult, Oracle, Scenario, BUILTINS};

#[derive(Parser)]
#[command(
    name = "fracflow",
    version,
    about = "Darcy flow with thin fractures as interface conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Select {
    /// Path to a JSON scenario, or the name of a built-in scenario.
    scenario: String,
    /// Variant of a built-in scenario.
    #[arg(long)]
    variant: Option<String>,
    /// Override the mesh resolution (cells per direction).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Print a scenario as JSON.
    Show(Select),
    /// Solve a scenario and write CSV files and summary.json.
    Run {
        #[command(flatten)]
        select: Select,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario and compare it with a reference solution.
    Compare {
        #[command(flatten)]
        select: Select,
        /// analytic1d or equidim
        #[arg(long)]
        oracle: String,
        /// Output directory for compare.json.
        #[arg(long)]
        out: PathBuf,
        /// Cells per direction of the resolved reference (default 2 nx).
        #[arg(long)]
        oracle_n: Option<usize>,
        /// Cells across the inclusion in the resolved reference
        /// (default 2, or 32 for a varying aperture).
        #[arg(long)]
        band_cells: Option<usize>,
        /// Pass threshold (default 1e-10 or 1e-8 absolute for analytic1d,
        /// 0.02 of the pressure range for equidim).
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn load(sel: &Select) -> CliResult<Scenario> {
    let path = Path::new(&sel.scenario);
    if path.is_file() {
        if sel.variant.is_some() {
            return Err(CliError::Config("--variant only applies to built-in scenarios".into()));
        }
        let s = Scenario::load(path)?;
        return match sel.n {
            Some(0) => Err(CliError::Config("--n must be positive".into())),
            Some(n) => {
                let s = s.with_resolution(n);
                s.validate()?;
                Ok(s)
            }
            None => Ok(s),
        };
    }
    builtin(&sel.scenario, sel.variant.as_deref(), sel.n)
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::List => {
            for b in &BUILTINS {
                let variants = if b.variants.is_empty() {
                    String::new()
                } else {
                    format!(" [{}]", b.variants.join(", "))
                };
                println!("{}{variants}: {}", b.name, b.description);
            }
        }
        Command::Show(sel) => println!("{}", load(&sel)?.to_json()),
        Command::Run { select, out } => {
            let s = run(&load(&select)?, &out)?;
            println!(
                "{}: {} dofs, {} subdomains, {} ({} iterations, residual {:.3e}), mass balance defect {:.3e}",
                s.scenario,
                s.dofs,
                s.subdomains,
                s.solve_method,
                s.cg_iterations,
                s.relative_residual,
                s.mass_balance_defect
            );
            if !s.converged {
                return Err(CliError::Solver(format!(
                    "solver did not reach the requested tolerance (relative residual {:.3e})",
                    s.relative_residual
                )));
            }
        }
        Command::Compare {
            select,
            oracle,
            out,
            oracle_n,
            band_cells,
            tol,
        } => {
            let oracle = Oracle::parse(&oracle, oracle_n, band_cells)?;
            let r = compare(&load(&select)?, oracle, tol, Some(&out))?;
            if let Some(n) = &r.nodes {
                println!("nodes: max error {:.3e}", n.max_error);
            }
            if let Some(j) = &r.jump {
                println!("jump: {:.6e} (exact {:.6e})", j.computed, j.exact);
            }
            for (name, c) in &r.profiles {
                println!(
                    "{name}: l2 {:.3e}, max {:.3e}, relative l2 {:.3e}{}",
                    c.l2,
                    c.max,
                    c.relative_l2,
                    if c.pass { "" } else { " FAIL" }
                );
            }
            if !r.pass {
                return Err(CliError::Comparison(format!(
                    "{} does not match {} within {:e}",
                    r.scenario, r.oracle, r.tolerance
                )));
            }
            println!("{} matches {} within {:e}", r.scenario, r.oracle, r.tolerance);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
