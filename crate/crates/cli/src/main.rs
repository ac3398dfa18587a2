//! `degvis`: run simulations and bound-verification campaigns.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 positivity loss,
//! 3 incomplete campaign, 4 a verdict failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use degvis_core::diagnostics::read_records_csv;
use degvis_core::harness::{
    self, assess, domain_doubling_check, grid_refinement_study, write_assessment, Assessment,
    CampaignOptions, CampaignSummary, EpsSpec, ExperimentConfig, ScalingFit,
};
use degvis_core::profiles::{validate_initial, InitialFamily};
use degvis_core::solver::Termination;
use degvis_core::Error;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_POSITIVITY: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;
const EXIT_VERDICT: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "degvis",
    version,
    about = "Degenerate-viscosity Navier-Stokes simulations and bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation (first eps, first cell count) and write its outputs.
    Simulate(RunArgs),
    /// Run the full campaign, then verify bounds and fit the eps scaling.
    Sweep(RunArgs),
    /// Recompute the verdicts of a finished campaign directory.
    Verify(DirArgs),
    /// Grid self-convergence study over the configured cell counts.
    Refine {
        #[command(flatten)]
        run: RunArgs,
        /// Also compare against a run on a doubled domain.
        #[arg(long)]
        domain_doubling: bool,
    },
    /// Write plot data for a finished campaign and print its verdicts.
    Report(DirArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the eps list (repeatable).
    #[arg(long = "eps")]
    eps: Vec<f64>,
    /// Replace the cell counts (repeatable).
    #[arg(long = "cells")]
    cells: Vec<usize>,
    #[arg(long)]
    end_time: Option<f64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Run initial data that fails the hypothesis checks; pulse amplitudes
    /// are then used as given.
    #[arg(long)]
    allow_hypothesis_violation: bool,
}

#[derive(Args, Debug)]
struct DirArgs {
    /// Campaign directory.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IncompleteCampaign { .. } => EXIT_INCOMPLETE,
            Error::PositivityLoss { .. } => EXIT_POSITIVITY,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, cli.verbose),
        Command::Sweep(a) => sweep(a, cli.verbose),
        Command::Verify(d) => verify(&d.out),
        Command::Refine {
            run,
            domain_doubling,
        } => refine(run, *domain_doubling, cli.verbose),
        Command::Report(d) => report(&d.out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| match e {
        Error::Io(io) => Failure {
            code: EXIT_CONFIG,
            message: format!("cannot read config {}: {io}", args.config.display()),
        },
        other => other.into(),
    })?;
    if !args.eps.is_empty() {
        cfg.eps = args.eps.iter().map(|e| EpsSpec::Value(*e)).collect();
    }
    if !args.cells.is_empty() {
        cfg.grid.cells = args.cells.clone();
    }
    if let Some(t) = args.end_time {
        cfg.end_time = t;
    }
    if args.allow_hypothesis_violation {
        cfg.skip_hypothesis_check = true;
        if let InitialFamily::CompressivePulse(p) | InitialFamily::ExpansivePulse(p) =
            &mut cfg.initial
        {
            p.enforce_mono_w0 = false;
        }
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure {
            code: EXIT_CONFIG,
            message: "no output directory: pass --out or set output_dir".into(),
        })?;
    Ok((cfg, out))
}

fn refuse_overwrite(marker: &Path, force: bool) -> Result<(), Failure> {
    if marker.exists() && !force {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "{} already exists; pass --force to overwrite",
                marker.display()
            ),
        });
    }
    Ok(())
}

fn simulate(args: &RunArgs, verbose: bool) -> CliResult {
    let (mut cfg, out) = load(args)?;
    refuse_overwrite(&out.join("run.json"), args.force)?;
    cfg.write_snapshots = true;
    let model = cfg.gas_model()?;
    let bounds = cfg.theory_bounds(&model)?;
    let eps = cfg.resolved_eps(&bounds)?[0];
    let cells = cfg.grid.cells[0];
    let data = cfg.initial_data(&model, cells)?;
    let validation = validate_initial(&model, &data)?;
    if !validation.all_passed() && !cfg.skip_hypothesis_check {
        let failed: Vec<&str> = validation
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "initial data fails {}; pass --allow-hypothesis-violation to run anyway",
                failed.join(", ")
            ),
        });
    }
    if verbose {
        eprintln!(
            "simulating eps = {eps:e}, N = {cells}, T = {}",
            cfg.end_time
        );
    }
    let report = harness::execute_run(&cfg, &model, &data, &validation, eps, &out)?;
    if verbose {
        eprintln!(
            "{} steps in {:.2} s",
            report.steps, report.wall_clock_seconds
        );
    }
    match report.termination {
        Termination::Completed => {
            println!(
                "completed: {} snapshots written to {}",
                report.records.len(),
                out.display()
            );
            Ok(EXIT_OK)
        }
        Termination::PositivityLoss { node, x, t, rho } => {
            println!(
                "positivity lost at node {node} (x = {x}) at t = {t}: rho = {rho}; failing state in {}",
                out.join("failed_state.csv").display()
            );
            Ok(EXIT_POSITIVITY)
        }
        Termination::UserAbort { t } => {
            println!("aborted at t = {t}");
            Ok(EXIT_OK)
        }
    }
}

fn print_assessment(a: &Assessment) {
    print!("{}", a.verdicts.to_table());
    match &a.scaling {
        Ok(ScalingFit::Fitted {
            slope,
            theta,
            residual,
            ..
        }) => {
            println!(
                "eps scaling: slope {slope:.4} (theta {theta:.4}), log residual {residual:.3e}"
            )
        }
        Ok(ScalingFit::Degenerate { reason }) => println!("eps scaling: {reason}"),
        Err(msg) => println!("eps scaling: not fitted ({msg})"),
    }
}

fn verdict_code(a: &Assessment) -> u8 {
    if a.passed() {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

fn sweep(args: &RunArgs, verbose: bool) -> CliResult {
    let (cfg, out) = load(args)?;
    let mut opts = CampaignOptions::from_env();
    opts.force = args.force;
    if verbose {
        eprintln!(
            "campaign: {} eps x {} grids into {}",
            cfg.eps.len(),
            cfg.grid.cells.len(),
            out.display()
        );
    }
    let (summary, assessment) = harness::sweep(&cfg, &out, &opts)?;
    if verbose {
        for r in &summary.runs {
            eprintln!("  eps {:e} N {}: {:?}", r.eps, r.cells, r.termination);
        }
    }
    print_assessment(&assessment);
    Ok(verdict_code(&assessment))
}

fn verify(dir: &Path) -> CliResult {
    let summary = CampaignSummary::load(dir)?;
    let assessment = assess(&summary)?;
    write_assessment(dir, &assessment)?;
    print_assessment(&assessment);
    Ok(verdict_code(&assessment))
}

fn refine(args: &RunArgs, doubling: bool, verbose: bool) -> CliResult {
    let (cfg, out) = load(args)?;
    let target = out.join("refinement.json");
    refuse_overwrite(&target, args.force)?;
    let model = cfg.gas_model()?;
    let bounds = cfg.theory_bounds(&model)?;
    let eps = cfg.resolved_eps(&bounds)?[0];
    let mut solver = cfg.solver_config(eps);
    solver.snapshot_interval = solver.end_time;
    if verbose {
        eprintln!(
            "refinement over N = {:?} to T = {}",
            cfg.grid.cells, cfg.end_time
        );
    }
    let report = grid_refinement_study(
        &model,
        &solver,
        &cfg.initial,
        cfg.grid.half_length,
        &cfg.grid.cells,
    )?;
    fs::create_dir_all(&out).map_err(Error::from)?;
    fs::write(
        &target,
        serde_json::to_string_pretty(&report).map_err(Error::from)?,
    )
    .map_err(Error::from)?;
    let show = |o: harness::Order| match o.value() {
        Some(p) => format!("{p:.4}"),
        None => "exact".into(),
    };
    println!("N          {:?}", report.cells);
    println!("diff rho   {:?}", report.diff_rho);
    println!("diff u     {:?}", report.diff_u);
    println!("order rho  {}", show(report.order_rho));
    println!("order u    {}", show(report.order_u));
    if doubling {
        let d = domain_doubling_check(
            &model,
            &solver,
            &cfg.initial,
            cfg.grid.half_length,
            cfg.grid.cells[0],
        )?;
        fs::write(
            out.join("domain_doubling.json"),
            serde_json::to_string_pretty(&d).map_err(Error::from)?,
        )
        .map_err(Error::from)?;
        println!(
            "domain doubling: max relative change {:.3e}",
            d.max_relative_change
        );
    }
    Ok(EXIT_OK)
}

fn report(dir: &Path) -> CliResult {
    let summary = CampaignSummary::load(dir)?;
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(Error::from)?;
    let finest = summary.runs.iter().map(|r| r.cells).max().unwrap_or(0);

    let mut script = String::from("# gnuplot script; run from this directory\n");
    let mut sup_w_plots = Vec::new();
    let mut min_rho_plots = Vec::new();
    let mut loglog = String::from("# eps max_t_sup_w\n");
    for (ie, eps) in summary.eps.iter().enumerate() {
        let Some(run) = summary
            .runs
            .iter()
            .find(|r| r.eps == *eps && r.cells == finest)
        else {
            continue;
        };
        let file =
            fs::File::open(dir.join(&run.dir).join("diagnostics.csv")).map_err(Error::from)?;
        let records = read_records_csv(file)?;
        let mut sup_w = format!("# eps = {eps:e}, N = {finest}\n# t sup_w\n");
        let mut min_rho = format!("# eps = {eps:e}, N = {finest}\n# t min_rho\n");
        for r in &records {
            sup_w.push_str(&format!("{:.17e} {:.17e}\n", r.t, r.sup_w));
            min_rho.push_str(&format!("{:.17e} {:.17e}\n", r.t, r.min_rho));
        }
        let (a, b) = (
            format!("sup_w_eps{ie:02}.dat"),
            format!("min_rho_eps{ie:02}.dat"),
        );
        fs::write(plots.join(&a), sup_w).map_err(Error::from)?;
        fs::write(plots.join(&b), min_rho).map_err(Error::from)?;
        sup_w_plots.push(format!("'{a}' using 1:2 with lines title 'eps={eps:.3e}'"));
        min_rho_plots.push(format!("'{b}' using 1:2 with lines title 'eps={eps:.3e}'"));
        loglog.push_str(&format!("{:.17e} {:.17e}\n", eps, run.max_sup_w));
    }
    fs::write(plots.join("max_w_vs_eps.dat"), loglog).map_err(Error::from)?;
    let b = &summary.bounds;
    let mut reference = format!("# eps C_gamma*eps^theta (theta = {:.17e})\n", b.theta);
    for eps in &summary.eps {
        reference.push_str(&format!(
            "{:.17e} {:.17e}\n",
            eps,
            b.active_potential_bound(*eps)
        ));
    }
    fs::write(plots.join("theta_reference.dat"), reference).map_err(Error::from)?;

    script.push_str("set terminal pngcairo size 900,600\n");
    script.push_str(&format!(
        "set output 'sup_w.png'\nset xlabel 't'\nplot {}\n",
        sup_w_plots.join(", ")
    ));
    script.push_str(&format!(
        "set output 'min_rho.png'\nset ylabel 'min rho'\nplot {}, {:.17e} title 'kappa(T)'\n",
        min_rho_plots.join(", "),
        b.kappa_t
    ));
    script.push_str(
        "set output 'max_w_vs_eps.png'\nset logscale xy\nset xlabel 'eps'\n\
         plot 'max_w_vs_eps.dat' using 1:(abs($2)) with points title '|max sup w|', \
         'theta_reference.dat' using 1:2 with lines title 'C eps^theta'\n",
    );
    fs::write(plots.join("plots.gp"), script).map_err(Error::from)?;

    let assessment = assess(&summary)?;
    print_assessment(&assessment);
    println!("plot data written to {}", plots.display());
    Ok(EXIT_OK)
}
