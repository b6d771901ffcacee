//! Command-line harness of the laboratory: sweeps, verification, plots, glue runs and dumps.

pub mod config;
pub mod csv;
pub mod plot;
pub mod sweep;
pub mod verify;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use wente_core::glue::{run_glue, GlueConfig, GlueRun};
use wente_core::green::{dirichlet_potential, neumann_potential};
use wente_core::mobius::{bubble_at, jacobian_density};
use wente_core::{BubbleSpec, ConcentrationGrid, Extent, LabError};

use crate::config::{ConfigError, LabConfig};
use crate::sweep::{neumann_modes, sweep_mesh};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "wente-lab",
    version,
    about = "Wente-type estimates on the unit disc"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ε sweep of the Dirichlet, Neumann and Robin problems, written to sweep.csv
    Sweep(Common),
    /// Invariant suite at reduced resolution, written to verify.txt
    Verify(Common),
    /// SVG charts of a sweep CSV into plots/
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gluing construction, per-level table written to glue.csv
    Glue(Common),
    /// Dirichlet, Neumann and Robin solutions of one bubble problem into fields/
    Solve(Common),
    /// The graded sweep mesh as a plain-text snapshot
    MeshDump(Common),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
    #[arg(long)]
    pub eps_steps: Option<usize>,
    #[arg(long)]
    pub grid_nr: Option<usize>,
    #[arg(long)]
    pub grid_ntheta: Option<usize>,
    #[arg(long)]
    pub fem_h: Option<f64>,
    /// boundary arc of the Robin condition, repeatable
    #[arg(long, num_args = 2, value_names = ["START", "END"], allow_negative_numbers = true, action = clap::ArgAction::Append)]
    pub arc: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<usize>,
}

impl Common {
    /// File values first, then flags.
    pub fn resolve(&self) -> Result<LabConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => LabConfig::load(path)?,
            None => LabConfig::default(),
        };
        if let Some(v) = self.eps_min {
            cfg.eps_min = v;
        }
        if let Some(v) = self.eps_max {
            cfg.eps_max = v;
        }
        if let Some(v) = self.eps_steps {
            cfg.eps_steps = v;
        }
        if let Some(v) = self.grid_nr {
            cfg.n_r = v;
        }
        if let Some(v) = self.grid_ntheta {
            cfg.n_theta = v;
        }
        if let Some(v) = self.fem_h {
            cfg.fem_h = v;
        }
        if !self.arc.is_empty() {
            cfg.arcs = self.arc.chunks(2).map(|c| (c[0], c[1])).collect();
        }
        let n = self.alpha.len().max(self.beta.len()).max(self.gamma.len());
        if n > 0 {
            let pick = |v: &[f64], default: f64, name: &str| -> Result<Vec<f64>, ConfigError> {
                match v.len() {
                    0 => Ok(vec![default; n]),
                    l if l == n => Ok(v.to_vec()),
                    l => Err(ConfigError(format!(
                        "--{name} given {l} times, expected {n} to match the other coefficients"
                    ))),
                }
            };
            let (a, b, g) = (
                pick(&self.alpha, 1.0, "alpha")?,
                pick(&self.beta, 0.0, "beta")?,
                pick(&self.gamma, 0.0, "gamma")?,
            );
            cfg.coeffs = (0..n).map(|i| (a[i], b[i], g[i])).collect();
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.depth {
            cfg.glue_depth = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> i32 {
    eprintln!("cannot write {}: {e}", path.display());
    EXIT_USAGE
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), i32> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_fail(path, e))
}

pub fn cmd_sweep(cfg: &LabConfig) -> Result<i32, i32> {
    let rows = sweep::run_sweep(cfg).map_err(|e| {
        eprintln!("{e}");
        EXIT_USAGE
    })?;
    let mut buf = Vec::new();
    sweep::write_sweep(&mut buf, &rows).expect("writing to memory");
    let path = cfg.out.join("sweep.csv");
    write_file(&path, &buf)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let flagged = rows.iter().filter(|r| r.cross_solver_flag).count();
    println!(
        "{} rows written to {}; {failed} failed, {flagged} flagged by the cross-solver gate",
        rows.len(),
        path.display()
    );
    Ok(if failed > 0 {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

pub fn cmd_verify(cfg: &LabConfig) -> Result<i32, i32> {
    let report = verify::verify(cfg).map_err(|e| {
        eprintln!("{e}");
        EXIT_USAGE
    })?;
    let text = format!("{report}\n");
    print!("{text}");
    write_file(&cfg.out.join("verify.txt"), text.as_bytes())?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

pub fn cmd_plot(csv: &Path, out: &Path) -> Result<i32, i32> {
    match plot::plot_csv(csv, &out.join("plots")) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("{}: {e}", csv.display());
            Err(EXIT_USAGE)
        }
    }
}

const GLUE_HEADER: &str =
    "level,epsilon,projected_norm,image_norm,remainder_l2,lambda,c_n,threshold_literal,threshold_scaled,alphas,pairing";

/// The configured glue run on a concentration grid at the smallest ladder scale.
pub fn glue_run(cfg: &LabConfig) -> Result<GlueRun<ConcentrationGrid>, LabError> {
    let ladder = cfg.glue_ladder();
    let eps_min = ladder.iter().cloned().fold(f64::INFINITY, f64::min);
    let grid = Arc::new(ConcentrationGrid::new(
        eps_min,
        cfg.conc_n_theta,
        cfg.conc_per_octave,
        Extent::Disc,
    )?);
    let config = GlueConfig {
        ladder,
        depth: cfg.glue_depth,
        policy: cfg.threshold_policy(),
        k_max: neumann_modes(eps_min),
        r0: cfg.r0,
        cutoff_inner: cfg.cutoff_inner,
    };
    run_glue(grid, config)
}

pub fn cmd_glue(cfg: &LabConfig) -> Result<i32, i32> {
    let path = cfg.out.join("glue.csv");
    if cfg.glue_depth == 0 {
        write_file(&path, format!("{GLUE_HEADER}\n").as_bytes())?;
        println!("depth 0: empty table written to {}", path.display());
        return Ok(EXIT_OK);
    }
    let fail = |e: LabError| {
        eprintln!("glue: {e}");
        EXIT_CHECK_FAILED
    };
    let run = glue_run(cfg).map_err(fail)?;
    let pairings = run.state.pairing_table().map_err(fail)?;
    let mut buf = Vec::new();
    run.state
        .write_report(&mut buf, &pairings)
        .expect("writing to memory");
    if let Some(LabError::LadderExhausted {
        level,
        best,
        threshold,
    }) = &run.stopped
    {
        // failed level: best projected norm and the threshold it missed
        writeln!(
            buf,
            "{level},NaN,{},NaN,NaN,NaN,NaN,NaN,{},,NaN",
            csv::fmt_f64(*best),
            csv::fmt_f64(*threshold)
        )
        .expect("writing to memory");
    }
    write_file(&path, &buf)?;
    for p in &pairings {
        println!(
            "pairing n={} value={} lower_bound(n - 3 C_A)={}",
            p.n,
            csv::fmt_f64(p.value),
            csv::fmt_f64(p.lower_bound())
        );
    }
    println!("C_A = {}", csv::fmt_f64(run.state.c_a));
    let mut ok = true;
    for (i, l) in run.state.levels.iter().enumerate() {
        let c = &l.checks;
        println!(
            "level {}: eps={} (i)={} (ii)={} (iii) literal={} scaled={} (1)={} (2)={} (3)={}",
            i + 1,
            csv::fmt_f64(l.epsilon),
            c.property_i(),
            c.property_ii(),
            c.property_iii_literal(),
            c.property_iii_scaled(),
            c.property_1(),
            c.property_2(),
            c.property_3()
        );
        ok &= c.construction_holds();
    }
    if let Some(e) = &run.stopped {
        eprintln!("glue stopped: {e}");
        ok = false;
    }
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Solutions at `eps_max` written as `r,theta,value` snapshots.
pub fn cmd_solve(cfg: &LabConfig) -> Result<i32, i32> {
    let fail = |e: LabError| {
        eprintln!("solve: {e}");
        EXIT_CHECK_FAILED
    };
    let epsilon = cfg.eps_max;
    let spec = BubbleSpec::with_cutoff(epsilon, cfg.r0, cfg.cutoff_inner).map_err(fail)?;
    let grid = Arc::new(
        ConcentrationGrid::new(epsilon, cfg.conc_n_theta, cfg.conc_per_octave, Extent::Disc)
            .map_err(fail)?,
    );
    let f = jacobian_density(&spec, &grid).total();
    let u = dirichlet_potential(&f);
    let v = neumann_potential(&f, neumann_modes(epsilon)).map_err(fail)?;
    let dir = cfg.out.join("fields");
    for (name, field) in [
        ("source", &f),
        ("dirichlet", &u.values),
        ("neumann", &v.zero_mean()),
    ] {
        let mut buf = Vec::new();
        field.write_csv(&mut buf).expect("writing to memory");
        write_file(&dir.join(format!("{name}.csv")), &buf)?;
    }
    let mesh = sweep_mesh(cfg).map_err(|e| {
        eprintln!("{e}");
        EXIT_USAGE
    })?;
    let source = |w: wente_core::Complex2| bubble_at(&spec, w).jacobian();
    for c in cfg.robin_coeffs().map_err(|_| EXIT_USAGE)? {
        let sol = wente_core::fem::solve_robin(
            &mesh,
            c,
            wente_core::fem::RobinProblem {
                source: Some(&source),
                ..Default::default()
            },
        )
        .map_err(fail)?;
        let mut buf = String::from("x,y,value\n");
        for (p, value) in mesh.vertices.iter().zip(&sol.values) {
            buf.push_str(&format!(
                "{},{},{}\n",
                csv::fmt_f64(p.re),
                csv::fmt_f64(p.im),
                csv::fmt_f64(*value)
            ));
        }
        let name = format!("robin_{}_{}_{}.csv", c.alpha, c.beta, c.gamma);
        write_file(&dir.join(name), buf.as_bytes())?;
    }
    println!("fields written to {}", dir.display());
    Ok(EXIT_OK)
}

pub fn cmd_mesh_dump(cfg: &LabConfig) -> Result<i32, i32> {
    let mesh = sweep_mesh(cfg).map_err(|e| {
        eprintln!("{e}");
        EXIT_USAGE
    })?;
    let mut buf = Vec::new();
    mesh.write_snapshot(&mut buf).expect("writing to memory");
    let path = cfg.out.join("mesh.txt");
    write_file(&path, &buf)?;
    println!(
        "{} vertices, {} triangles, min angle {:.2} deg -> {}",
        mesh.n_vertices(),
        mesh.triangles.len(),
        mesh.min_angle().to_degrees(),
        path.display()
    );
    Ok(EXIT_OK)
}

/// Parses `args` and runs the chosen subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let with_config =
        |common: &Common, f: fn(&LabConfig) -> Result<i32, i32>| match common.resolve() {
            Ok(cfg) => f(&cfg).unwrap_or_else(|code| code),
            Err(e) => {
                eprintln!("{e}");
                EXIT_USAGE
            }
        };
    match &cli.command {
        Command::Sweep(c) => with_config(c, cmd_sweep),
        Command::Verify(c) => with_config(c, cmd_verify),
        Command::Glue(c) => with_config(c, cmd_glue),
        Command::Solve(c) => with_config(c, cmd_solve),
        Command::MeshDump(c) => with_config(c, cmd_mesh_dump),
        Command::Plot { csv, out } => {
            let out = out.clone().unwrap_or_else(|| PathBuf::from("out"));
            cmd_plot(csv, &out).unwrap_or_else(|code| code)
        }
    }
}
