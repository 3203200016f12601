//! Command-line front end. Every command writes its data files plus a
//! `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 1 non-convergence or failed check, 2 usage
//! error, 3 geometry violation.

pub mod range;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::continuation::{
    limiting_estimate, seed_from_bifurcation, states_at_omega, trace_branch, BranchSelector, ContinuationConfig,
    LimitingThresholds,
};
use crate::contour::{FourierContour, SpectralGrid};
use crate::dynamics::{append_snapshot, evolve_rigid_check_with, snapshot_table, EvolveOptions, RigidCheck};
use crate::io::{boundary_table, fmt_real, CsvTable};
use crate::residual::{Problem, Shape};
use crate::solver::{newton_solve, NewtonConfig, NewtonReport};
use crate::spectra;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vstate", version, about = "Rotating vortex patches in the unit disc")]
pub struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tables of the bifurcation spectrum.
    #[command(subcommand)]
    Eigen(EigenCmd),
    /// A single Newton solve at fixed Ω.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Trace a bifurcation branch.
    #[command(subcommand)]
    Branch(BranchCmd),
    /// Evolve a state with the contour dynamics and check rigid rotation.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum EigenCmd {
    /// λ_m and Ω_m of discs: columns m,b,lambda,omega.
    Sc {
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: String,
    },
    /// λ_m^± over b2 ∈ [0, b_m^⋆]: columns m,b2,lambda_minus,lambda_plus.
    Dc {
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        m: String,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Also write the crossings with the 1-fold curve.
        #[arg(long)]
        intersections: bool,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
    },
    /// The 1-fold eigenvalues over b2 ∈ (0, b1).
    Onefold {
        #[arg(long)]
        b1: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Fold radii b_m^⋆: columns m,b1,b_star.
    Bstar {
        #[arg(long)]
        b1: String,
        #[arg(long)]
        m: String,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Grid size; a multiple of 2m.
    #[arg(long = "n", default_value_t = 256)]
    pub nodes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveOpts {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub omega: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Initial first-mode coefficient (outer curve).
    #[arg(long, default_value_t = 1e-3)]
    pub seed_a1: f64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Start from the nearest crossing of Ω on the branch instead of the seed.
    #[arg(long)]
    pub from_branch: bool,
    /// Which crossing to keep with --from-branch, counted along the branch from 1.
    #[arg(long, default_value_t = 1)]
    pub state: usize,
}

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    Sc {
        #[arg(long)]
        b: f64,
        #[command(flatten)]
        opts: SolveOpts,
    },
    Dc {
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        b2: f64,
        /// Initial first-mode coefficient of the inner curve.
        #[arg(long, default_value_t = 0.0)]
        seed_a2: f64,
        /// Branch used by --from-branch.
        #[arg(long, value_enum, default_value_t = Side::Plus)]
        from: Side,
        #[command(flatten)]
        opts: SolveOpts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Args, Serialize)]
pub struct BranchOpts {
    #[arg(long)]
    pub m: usize,
    /// Starting grid size; refined automatically up to --max-n.
    #[arg(long = "n", default_value_t = 128)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2048)]
    pub max_n: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta_omega: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_points: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub gap_floor: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub initial_step: f64,
    #[arg(long, default_value_t = 5e-2)]
    pub max_step: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub min_step: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Locate each saddle-node fold precisely (stored in branch.json).
    #[arg(long)]
    pub refine_folds: bool,
}

#[derive(Debug, Subcommand)]
pub enum BranchCmd {
    Sc {
        #[arg(long)]
        b: f64,
        #[command(flatten)]
        opts: BranchOpts,
    },
    Dc {
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        b2: f64,
        #[arg(long, value_enum)]
        from: Side,
        #[command(flatten)]
        opts: BranchOpts,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// State file written by `solve`.
    #[arg(long)]
    pub state: PathBuf,
    /// Angular velocity; defaults to the one stored in the state.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Duration; defaults to one symmetry period 2π/(m|Ω|).
    #[arg(long = "t")]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Nodes per boundary; defaults to the state's grid.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Write node snapshots every this many steps (0: none).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
}

/// A converged (or attempted) state as written by `solve`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub problem: Problem,
    pub nodes: usize,
    pub contours: Vec<FourierContour>,
    pub report: NewtonReport,
}

/// Record of one run: command, parameters, outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub nodes: Option<usize>,
    pub version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn table(&mut self, name: &str, t: &CsvTable) -> Result<()> {
        t.write(&self.dir.join(name))?;
        self.files.push(name.into());
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), s)?;
        self.files.push(name.into());
        Ok(())
    }

    fn finish(self, command: &str, parameters: serde_json::Value, nodes: Option<usize>) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.into(),
            parameters,
            nodes,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: self.files,
        };
        std::fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Precondition(_) => EXIT_USAGE,
        e if e.is_geometric() => EXIT_GEOMETRY,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("VSTATE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Eigen(cmd) => eigen(cmd, &cli.out),
        Command::Solve(cmd) => solve(cmd, &cli.out),
        Command::Branch(cmd) => branch(cmd, &cli.out),
        Command::Verify(args) => verify(args, &cli.out),
    }
}

fn eigen(cmd: &EigenCmd, dir: &Path) -> Result<i32> {
    let mut out = Outputs::new(dir)?;
    let params;
    match cmd {
        EigenCmd::Sc { b, m } => {
            let (bs, ms) = (range::parse_reals(b)?, range::parse_ints(m)?);
            let mut t = CsvTable::new(["m", "b", "lambda", "omega"]);
            for &m in &ms {
                for &b in &bs {
                    let (l, o) = spectra::sc_eigen(m, b)?;
                    t.push(vec![m.to_string(), fmt_real(b), fmt_real(l), fmt_real(o)]);
                }
            }
            out.table("eigen_sc.csv", &t)?;
            params = json!({"kind": "sc", "b": b, "m": m});
        }
        EigenCmd::Dc { b1, m, samples, intersections, n_max } => {
            let ms = range::parse_ints(m)?;
            if ms.iter().any(|&m| m < 2) {
                return Err(Error::Config("mode range must start at 2; use `eigen onefold` for m = 1".into()));
            }
            let mut t = CsvTable::new(["m", "b2", "lambda_minus", "lambda_plus"]);
            for &m in &ms {
                for (b2, lm, lp) in spectra::eigen_curve(m, *b1, *samples)? {
                    t.push(vec![m.to_string(), fmt_real(b2), fmt_real(lm), fmt_real(lp)]);
                }
            }
            out.table("eigen_dc.csv", &t)?;
            if *intersections {
                let mut x = CsvTable::new(["n", "x_n", "lambda"]);
                for (n, xn) in spectra::onefold_intersections(*b1, *n_max)? {
                    x.push(vec![n.to_string(), fmt_real(xn), fmt_real(1.0 + xn * xn - b1 * b1)]);
                }
                out.table("intersections.csv", &x)?;
            }
            params = json!({"kind": "dc", "b1": b1, "m": m, "samples": samples, "intersections": intersections, "n_max": n_max});
        }
        EigenCmd::Onefold { b1, samples } => {
            let mut t = CsvTable::new(["b2", "lambda_minus", "lambda_plus", "omega_plus", "omega_minus"]);
            let count = (*samples).max(2);
            for i in 1..count {
                let b2 = b1 * i as f64 / count as f64;
                let (lm, lp, _) = spectra::onefold_eigen(*b1, b2)?;
                let (op, om) = spectra::omega_pair(lp, lm);
                t.push_reals(&[b2, lm, lp, op, om]);
            }
            out.table("eigen_onefold.csv", &t)?;
            params = json!({"kind": "onefold", "b1": b1, "samples": samples});
        }
        EigenCmd::Bstar { b1, m } => {
            let (bs, ms) = (range::parse_reals(b1)?, range::parse_ints(m)?);
            let mut t = CsvTable::new(["m", "b1", "b_star"]);
            for &m in &ms {
                for &b in &bs {
                    let s = spectra::b_star(m, b, spectra::DEFAULT_TOL)?;
                    t.push(vec![m.to_string(), fmt_real(b), fmt_real(s)]);
                }
            }
            out.table("bstar.csv", &t)?;
            params = json!({"kind": "bstar", "b1": b1, "m": m});
        }
    }
    let manifest = out.finish("eigen", params, None)?;
    println!("wrote {}", manifest.outputs.join(", "));
    Ok(EXIT_OK)
}

fn branch_config(opts: &BranchOpts, shape: &Shape) -> ContinuationConfig {
    ContinuationConfig {
        initial_step: opts.initial_step,
        min_step: opts.min_step,
        max_step: opts.max_step,
        max_points: opts.max_points,
        gap_floor: opts.gap_floor,
        tol: opts.tol,
        max_nodes: opts.max_n,
        refine_folds: opts.refine_folds,
        ..ContinuationConfig::for_shape(shape)
    }
}

fn selector(side: Side) -> BranchSelector {
    match side {
        Side::Plus => BranchSelector::Plus,
        Side::Minus => BranchSelector::Minus,
    }
}

fn solve(cmd: &SolveCmd, dir: &Path) -> Result<i32> {
    let (shape, opts, seed_a2, side) = match cmd {
        SolveCmd::Sc { b, opts } => (Shape::simply(*b)?, opts, 0.0, BranchSelector::Sc),
        SolveCmd::Dc { b1, b2, seed_a2, from, opts } => (Shape::doubly(*b1, *b2)?, opts, *seed_a2, selector(*from)),
    };
    let p = Problem::new(shape, opts.m, opts.omega)?;
    let grid = SpectralGrid::new(opts.grid.nodes)?;
    let modes = p.modes(&grid)?;
    let mut cfg = NewtonConfig { max_iter: opts.max_iter, ..NewtonConfig::for_problem(&p) };
    if let Some(t) = opts.tol {
        cfg.tol = t;
    }
    if let Some(h) = opts.fd_step {
        cfg.fd_step = h;
    }
    let (x, report) = if opts.from_branch {
        let coarse = SpectralGrid::new(4 * opts.m * (modes + 1).min(32))?;
        let seed = seed_from_bifurcation(shape, opts.m, side, opts.seed_a1.abs().max(1e-6), 0.0, &coarse)?;
        let ccfg = ContinuationConfig { max_nodes: grid.len(), ..ContinuationConfig::for_shape(&shape) };
        let b = trace_branch(&seed, &coarse, &ccfg)?;
        let states = states_at_omega(&b, opts.omega, &grid, &cfg, 1e-6)?;
        let count = states.len();
        match states.into_iter().nth(opts.state.max(1) - 1) {
            Some(s) => s,
            None => {
                eprintln!("the traced branch crosses Ω = {} at {count} distinct states", opts.omega);
                return Ok(EXIT_FAILURE);
            }
        }
    } else {
        let mut x = vec![0.0; p.unknowns(&grid)?];
        x[0] = opts.seed_a1;
        if shape.curves() == 2 {
            x[modes] = seed_a2;
        }
        newton_solve(&p, &x, &grid, &cfg)?
    };
    let contours = p.contours(&x)?;
    let mut out = Outputs::new(dir)?;
    let state = StateFile { problem: p, nodes: grid.len(), contours: contours.clone(), report: report.clone() };
    out.text("state.json", &serde_json::to_string_pretty(&state)?)?;
    out.text("report.json", &serde_json::to_string_pretty(&report)?)?;
    for (i, c) in contours.iter().enumerate() {
        out.table(&format!("boundary_{}.csv", i + 1), &boundary_table(c, &grid))?;
    }
    let params = json!({"problem": p, "opts": opts, "seed_a2": seed_a2, "newton": cfg});
    out.finish("solve", params, Some(grid.len()))?;
    println!(
        "converged: {} after {} iterations, residual {:.3e}, trivial: {}",
        report.converged, report.iterations, report.final_sup_norm, report.trivial
    );
    Ok(if report.converged { EXIT_OK } else { EXIT_FAILURE })
}

fn branch(cmd: &BranchCmd, dir: &Path) -> Result<i32> {
    let (shape, opts, sel) = match cmd {
        BranchCmd::Sc { b, opts } => (Shape::simply(*b)?, opts, BranchSelector::Sc),
        BranchCmd::Dc { b1, b2, from, opts } => (Shape::doubly(*b1, *b2)?, opts, selector(*from)),
    };
    let grid = SpectralGrid::new(opts.nodes)?;
    let seed = seed_from_bifurcation(shape, opts.m, sel, opts.eps, opts.delta_omega, &grid)?;
    for w in &seed.warnings {
        eprintln!("warning: {w}");
    }
    let cfg = branch_config(opts, &shape);
    let b = trace_branch(&seed, &grid, &cfg)?;
    let limit = limiting_estimate(&b, &LimitingThresholds::default())?;
    let mut out = Outputs::new(dir)?;
    out.table("branch.csv", &b.csv())?;
    out.text("branch.json", &b.to_json()?)?;
    out.text("limit.json", &serde_json::to_string_pretty(&limit)?)?;
    let params = json!({"shape": shape, "selector": sel, "opts": opts, "continuation": cfg});
    out.finish("branch", params, Some(opts.nodes))?;
    let (lo, hi) = b.omega_range();
    for f in &b.folds {
        println!("fold at Ω = {}, a_first = {}", fmt_real(f.omega), fmt_real(f.a_first));
    }
    println!(
        "{} points, Ω in [{lo:.6}, {hi:.6}], folds at {:?}, stopped: {:?}, limit: {:?}",
        b.points.len(),
        b.fold_indices,
        b.termination,
        limit.kind
    );
    Ok(EXIT_OK)
}

fn verify(args: &VerifyArgs, dir: &Path) -> Result<i32> {
    let state: StateFile = serde_json::from_str(&std::fs::read_to_string(&args.state)?)?;
    let omega = args.omega.unwrap_or(state.problem.omega);
    let duration = args
        .duration
        .unwrap_or_else(|| 2.0 * std::f64::consts::PI / (state.problem.fold as f64 * omega.abs().max(1e-12)));
    let opts = EvolveOptions { nodes: args.nodes.unwrap_or(state.nodes), sample_every: args.snapshot_every.max(1).min(args.steps.max(1)) };
    let mut snaps = snapshot_table();
    let result = evolve_rigid_check_with(&state.contours, omega, duration, args.steps, &opts, |s| {
        if args.snapshot_every > 0 {
            append_snapshot(&mut snaps, s);
        }
    });
    let mut out = Outputs::new(dir)?;
    let (check, code): (Option<RigidCheck>, i32) = match result {
        Ok(r) => {
            let pass = r.max_deviation <= args.tol;
            (Some(r), if pass { EXIT_OK } else { EXIT_FAILURE })
        }
        Err(Error::Instability { time }) => {
            eprintln!("a boundary left the disc at t = {time}");
            (None, EXIT_FAILURE)
        }
        Err(e) => return Err(e),
    };
    let report = json!({
        "omega": omega,
        "duration": duration,
        "steps": args.steps,
        "tol": args.tol,
        "check": check,
        "pass": code == EXIT_OK,
    });
    out.text("verify.json", &serde_json::to_string_pretty(&report)?)?;
    if args.snapshot_every > 0 {
        out.table("snapshots.csv", &snaps)?;
    }
    out.finish("verify", json!({"args": args}), Some(opts.nodes))?;
    match &check {
        Some(c) => println!("max deviation {:.3e} (tol {:.1e}): {}", c.max_deviation, args.tol, if code == 0 { "pass" } else { "fail" }),
        None => println!("fail: unstable"),
    }
    Ok(code)
}
