//! Convergence-study driver: runs the scheme on a mesh sequence against a
//! manufactured solution and writes `MeshSize Error DOFs Rate Time` tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector2;
use serde::Serialize;

use crate::assembly::{apply_bc_and_solve, assemble_energy_norm, relative_error, Discretisation, MaterialParams};
use crate::error::{Error, Result};
use crate::manufactured::{ExactSolution, SolutionKind};
use crate::mesh::{load_mesh, MeshFamily, MeshFormat, PolygonalMesh};

pub const MAX_DEGREE: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MeshSource {
    /// Levels `0..=refinements` of a built-in family.
    Family {
        family: String,
        refinements: usize,
    },
    /// Every `.json` / `.typ2` file of a directory, in file-name order.
    Directory(PathBuf),
    Files(Vec<PathBuf>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Dat,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<OutputFormat> {
        match s {
            "dat" => Ok(OutputFormat::Dat),
            "csv" => Ok(OutputFormat::Csv),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub meshes: MeshSource,
    pub degree: usize,
    pub thickness: f64,
    pub young: f64,
    pub poisson: f64,
    pub kappa0: f64,
    #[serde(serialize_with = "ser_kind")]
    pub solution: SolutionKind,
    pub quad_boost: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// When false the Time column is written as zero, so that reruns give
    /// byte-identical files.
    pub record_time: bool,
}

fn ser_kind<S: serde::Serializer>(k: &SolutionKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.name())
}

impl RunConfig {
    /// Triangular family, `E = 1`, `nu = 0.3`, `kappa0 = 5/6`, no output.
    pub fn new(degree: usize, thickness: f64, solution: SolutionKind, refinements: usize) -> Self {
        RunConfig {
            meshes: MeshSource::Family {
                family: "tri".into(),
                refinements,
            },
            degree,
            thickness,
            young: 1.0,
            poisson: 0.3,
            kappa0: 5.0 / 6.0,
            solution,
            quad_boost: 0,
            out: None,
            format: OutputFormat::Both,
            record_time: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "degree {} outside 0..={MAX_DEGREE}",
                self.degree
            )));
        }
        self.material().map(|_| ())
    }

    pub fn material(&self) -> Result<MaterialParams<f64>> {
        MaterialParams::new(self.young, self.poisson, self.thickness, self.kappa0)
    }

    pub fn load_meshes(&self) -> Result<Vec<PolygonalMesh<f64>>> {
        match &self.meshes {
            MeshSource::Family { family, refinements } => {
                let fam = MeshFamily::parse(family)?;
                fam.sequence(refinements + 1)
            }
            MeshSource::Directory(dir) => {
                let entries = fs::read_dir(dir).map_err(|e| Error::Parse {
                    path: dir.clone(),
                    message: e.to_string(),
                })?;
                let mut files: Vec<PathBuf> = entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "typ2")))
                    .collect();
                files.sort();
                if files.is_empty() {
                    return Err(Error::Parse {
                        path: dir.clone(),
                        message: "no mesh files found".into(),
                    });
                }
                files.iter().map(|p| load_mesh(p, MeshFormat::from_path(p))).collect()
            }
            MeshSource::Files(files) => files.iter().map(|p| load_mesh(p, MeshFormat::from_path(p))).collect(),
        }
    }
}

/// Outcome of one solve.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub mesh_size: f64,
    pub n_elements: usize,
    pub dofs: usize,
    pub error: f64,
    /// Normwise backward error of the linear solve.
    pub residual: f64,
    /// `||r|| / ||b||` of the linear solve.
    pub rhs_residual: f64,
    pub seconds: f64,
}

/// Full pipeline on one mesh.
pub fn run_on_mesh(config: &RunConfig, mesh: PolygonalMesh<f64>) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mat = config.material()?;
    let exact = ExactSolution::new(config.solution, mat);
    let h = mesh.h;
    let n_elements = mesh.n_elements();
    let disc = Discretisation::new(mesh, config.degree, config.quad_boost)?;
    let theta = |x: &Vector2<f64>| exact.theta(x);
    let u = |x: &Vector2<f64>| exact.u(x);
    let f = |x: &Vector2<f64>| exact.f(x);
    let interp = disc.interpolate_pair(&theta, &u)?;
    let dirichlet = if exact.homogeneous_bc { None } else { Some(&interp) };
    let sol = apply_bc_and_solve(&disc, &mat, &f, dirichlet)?;
    let gram = assemble_energy_norm(&disc, &mat);
    let error = relative_error(&gram, &sol.x, &interp)?;
    Ok(RunReport {
        mesh_size: h,
        n_elements,
        dofs: sol.n_free,
        error,
        residual: sol.stats.backward_error,
        rhs_residual: sol.stats.rhs_residual,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs on the first mesh of the configured source.
pub fn run_single(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let mesh = config
        .load_meshes()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("no mesh".into()))?;
    run_on_mesh(config, mesh)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub h: f64,
    pub dofs: usize,
    pub error: f64,
    pub rate: Option<f64>,
    pub time: f64,
}

/// `rate_i = log(E_{i-1}/E_i) / log(h_{i-1}/h_i)`; the first rate is empty.
pub fn compute_rates(records: &[ConvergenceRecord]) -> Result<Vec<ConvergenceRecord>> {
    let mut out = records.to_vec();
    for i in 0..out.len() {
        out[i].rate = if i == 0 {
            None
        } else {
            let (h0, h1) = (records[i - 1].h, records[i].h);
            if h0 == h1 {
                return Err(Error::DegenerateRate(h0, h1));
            }
            Some((records[i - 1].error / records[i].error).ln() / (h0 / h1).ln())
        };
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub records: Vec<ConvergenceRecord>,
    pub reports: Vec<RunReport>,
}

/// Runs every mesh of the configured sequence and, if an output directory
/// is set, writes `data_rates.dat` / `data_rates.csv` and `run.json`.
pub fn run_convergence(config: &RunConfig) -> Result<ConvergenceStudy> {
    config.validate()?;
    let meshes = config.load_meshes()?;
    if meshes.len() < 2 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 2 meshes, got {}",
            meshes.len()
        )));
    }
    let mut reports = Vec::with_capacity(meshes.len());
    for (i, m) in meshes.into_iter().enumerate() {
        reports.push(run_on_mesh(config, m).map_err(|e| e.context(format!("mesh {i}")))?);
    }
    let raw: Vec<ConvergenceRecord> = reports
        .iter()
        .map(|r| ConvergenceRecord {
            h: r.mesh_size,
            dofs: r.dofs,
            error: r.error,
            rate: None,
            time: if config.record_time { r.seconds } else { 0.0 },
        })
        .collect();
    let records = compute_rates(&raw)?;
    if let Some(dir) = &config.out {
        write_outputs(config, dir, &records)?;
    }
    Ok(ConvergenceStudy { records, reports })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_outputs(config: &RunConfig, dir: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    if matches!(config.format, OutputFormat::Dat | OutputFormat::Both) {
        let p = dir.join("data_rates.dat");
        fs::write(&p, format_dat(records)).map_err(io_err(&p))?;
    }
    if matches!(config.format, OutputFormat::Csv | OutputFormat::Both) {
        let p = dir.join("data_rates.csv");
        fs::write(&p, format_csv(records)).map_err(io_err(&p))?;
    }
    let p = dir.join("run.json");
    let meta = serde_json::to_string_pretty(config).expect("config serialises");
    fs::write(&p, meta + "\n").map_err(io_err(&p))?;
    Ok(())
}

pub const HEADER: [&str; 5] = ["MeshSize", "Error", "DOFs", "Rate", "Time"];

/// Whitespace-separated table; a missing rate is written as `-`.
pub fn format_dat(records: &[ConvergenceRecord]) -> String {
    let mut s = HEADER.join(" ") + "\n";
    for r in records {
        let rate = r.rate.map_or("-".to_string(), |v| v.to_string());
        s += &format!("{} {} {} {} {}\n", r.h, r.error, r.dofs, rate, r.time);
    }
    s
}

pub fn format_csv(records: &[ConvergenceRecord]) -> String {
    let mut s = HEADER.join(",") + "\n";
    for r in records {
        let rate = r.rate.map_or(String::new(), |v| v.to_string());
        s += &format!("{},{},{},{},{}\n", r.h, r.error, r.dofs, rate, r.time);
    }
    s
}

fn parse_table(text: &str, sep: Option<char>, empty: &str) -> Result<Vec<ConvergenceRecord>> {
    let bad = |m: String| Error::Parse {
        path: PathBuf::new(),
        message: m,
    };
    let mut lines = text.lines();
    let header: Vec<&str> = match sep {
        Some(c) => lines.next().unwrap_or("").split(c).collect(),
        None => lines.next().unwrap_or("").split_whitespace().collect(),
    };
    if header != HEADER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = match sep {
            Some(c) => line.split(c).collect(),
            None => line.split_whitespace().collect(),
        };
        if f.len() != 5 {
            return Err(bad(format!("row {}: expected 5 fields", n + 1)));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", n + 1)));
        out.push(ConvergenceRecord {
            h: num(f[0])?,
            error: num(f[1])?,
            dofs: f[2].parse().map_err(|e| bad(format!("row {}: {e}", n + 1)))?,
            rate: if f[3] == empty { None } else { Some(num(f[3])?) },
            time: num(f[4])?,
        });
    }
    Ok(out)
}

pub fn parse_dat(text: &str) -> Result<Vec<ConvergenceRecord>> {
    parse_table(text, None, "-")
}

pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    parse_table(text, Some(','), "")
}
