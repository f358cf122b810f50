use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ddr_plate::harness::{format_dat, run_convergence, run_single, MeshSource, OutputFormat, RunConfig};
use ddr_plate::manufactured::SolutionKind;
use ddr_plate::Error;

/// Convergence studies for the DDR Reissner-Mindlin plate scheme.
///
/// Thread count follows RAYON_NUM_THREADS.
#[derive(Parser, Debug)]
#[command(name = "ddr-plate", version)]
struct Args {
    /// Directory of mesh files (.json or .typ2), run in file-name order.
    #[arg(long, conflicts_with = "mesh_family")]
    mesh_dir: Option<PathBuf>,
    /// Built-in mesh family: tri, hexa or locref.
    #[arg(long, default_value = "tri")]
    mesh_family: String,
    /// Number of refinements; levels 0..=N of the family are used.
    #[arg(long, default_value_t = 3)]
    refinements: usize,
    #[arg(long, default_value_t = 0)]
    degree: usize,
    #[arg(long, default_value_t = 0.1)]
    thickness: f64,
    /// polynomial or analytical.
    #[arg(long, default_value = "polynomial")]
    solution: String,
    #[arg(long, default_value_t = 1.0)]
    young: f64,
    #[arg(long, default_value_t = 0.3)]
    poisson: f64,
    #[arg(long, default_value_t = 5.0 / 6.0)]
    kappa0: f64,
    /// Extra exactness degree for quadrature of non-polynomial data.
    #[arg(long, default_value_t = 0)]
    quad_boost: usize,
    /// Output directory for data_rates.dat / data_rates.csv / run.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// dat, csv or both.
    #[arg(long, default_value = "both")]
    format: String,
    /// Solve on the first mesh only.
    #[arg(long)]
    single: bool,
    /// Write zero in the Time column (byte-reproducible output).
    #[arg(long)]
    no_time: bool,
}

fn config(args: &Args) -> Result<RunConfig, Error> {
    let solution = SolutionKind::parse(&args.solution)
        .ok_or_else(|| Error::Config(format!("unknown solution '{}'", args.solution)))?;
    let meshes = match &args.mesh_dir {
        Some(d) => MeshSource::Directory(d.clone()),
        None => MeshSource::Family {
            family: args.mesh_family.clone(),
            refinements: args.refinements,
        },
    };
    let c = RunConfig {
        meshes,
        degree: args.degree,
        thickness: args.thickness,
        young: args.young,
        poisson: args.poisson,
        kappa0: args.kappa0,
        solution,
        quad_boost: args.quad_boost,
        out: args.out.clone(),
        format: OutputFormat::parse(&args.format)?,
        record_time: !args.no_time,
    };
    c.validate()?;
    Ok(c)
}

fn run(args: &Args) -> Result<(), Error> {
    let c = config(args)?;
    if args.single {
        let r = run_single(&c)?;
        println!(
            "h = {}  elements = {}  dofs = {}  E_h = {}  backward error = {:e}  |r|/|b| = {:e}  time = {:.3}s",
            r.mesh_size, r.n_elements, r.dofs, r.error, r.residual, r.rhs_residual, r.seconds
        );
    } else {
        let study = run_convergence(&c)?;
        print!("{}", format_dat(&study.records));
        let be = study.reports.iter().map(|r| r.residual).fold(0.0, f64::max);
        let rr = study.reports.iter().map(|r| r.rhs_residual).fold(0.0, f64::max);
        eprintln!("max backward error {be:e}, max |r|/|b| {rr:e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
