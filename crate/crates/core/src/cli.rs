//! Command-line interface: `simulate`, `fit`, `baseline`, and `evaluate`
//! subcommands producing reproducible batch runs. Every output directory
//! gets a manifest with content hashes; wall time lands in `timing.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baselines::{kernel_map, mc_threshold, significant_voxels, KernelSpec};
use crate::engine::{run_chains, ChainConfig, ChainOutput};
use crate::error::{Error, Result};
use crate::eval::{autocorrelation, dic, ess, mspe, summarize};
use crate::field::{PeakField, TruthMap};
use crate::gmrf::{assemble_precision, build_diff_operator};
use crate::grid::LatticeGrid;
use crate::io::{
    format_sig6, read_binary_grid, read_grid_csv, write_grid_csv, write_json, write_pgm,
    write_xy_csv, RunManifest,
};
use crate::io::peaks::{peak_field_from_list, read_peak_list, SlabFilter};
use crate::io::stream::{read_stream, write_stream};
use crate::model::{Link, ModelSpec};
use crate::simgen::{bimodal_truth, sample_peaks, two_disc_truth, DiscProfile, TwoDiscParams, BIMODAL_DOMAIN};

#[derive(Parser, Debug)]
#[command(
    name = "peakmeta",
    version,
    about = "Spatially adaptive Bayesian binary regression on 2-D lattices, with kernel baselines"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate simulation truth maps and peak fields
    Simulate(SimulateArgs),
    /// Fit the adaptive-GMRF binary regression model to a peak field
    Fit(FitArgs),
    /// Kernel-based ALE/KDA baseline with a Monte Carlo threshold
    Baseline(BaselineArgs),
    /// Summarize fits: DIC, MSPE against a truth map, threshold sweeps
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(subcommand)]
    pub kind: SimulateKind,
}

#[derive(Subcommand, Debug)]
pub enum SimulateKind {
    /// Smooth bimodal probability surface
    Bimodal(BimodalArgs),
    /// Two-disc activation map over a constant background
    #[command(name = "two-disc")]
    TwoDisc(TwoDiscArgs),
}

#[derive(Args, Debug)]
pub struct BimodalArgs {
    /// Square lattice side
    #[arg(long, default_value_t = 30)]
    pub grid: usize,
    /// Coordinate domain lower bound
    #[arg(long, default_value_t = BIMODAL_DOMAIN.0)]
    pub domain_lo: f64,
    /// Coordinate domain upper bound
    #[arg(long, default_value_t = BIMODAL_DOMAIN.1)]
    pub domain_hi: f64,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TwoDiscArgs {
    /// Square lattice side
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Disc centers as "row,col;row,col"
    #[arg(long, default_value = "20,20;44,44")]
    pub centers: String,
    #[arg(long, default_value_t = 6.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.4)]
    pub peak_prob: f64,
    #[arg(long, default_value_t = 0.01)]
    pub background: f64,
    /// Constant peak probability across each disc instead of the
    /// raised-cosine taper
    #[arg(long)]
    pub flat_top: bool,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Peak field: binary grid CSV, or a coordinate list with --peak-list
    pub peaks: PathBuf,
    #[arg(long, value_parser = parse_link, default_value = "probit")]
    pub link: LinkArg,
    /// Degrees of freedom for --link student-t
    #[arg(long)]
    pub df: Option<f64>,
    /// Prior miscoding probability; 0 disables robustification
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 15000)]
    pub iters: u64,
    #[arg(long, default_value_t = 5000)]
    pub burnin: u64,
    #[arg(long, default_value_t = 10)]
    pub thin: u64,
    #[arg(long, default_value_t = 1)]
    pub chains: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Freeze the local variances at 1 (nonadaptive GMRF)
    #[arg(long)]
    pub nonadaptive: bool,
    /// Local-variance prior degrees of freedom
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    /// Half-t prior degrees of freedom
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Half-t prior scale
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Extra monitor voxel (row-major index)
    #[arg(long)]
    pub monitor: Option<usize>,
    /// Treat the input as an x,y peak-coordinate list
    #[arg(long)]
    pub peak_list: bool,
    /// Lattice size ROWSxCOLS, required with --peak-list
    #[arg(long)]
    pub grid: Option<String>,
    /// Slab center for x,y,z peak lists
    #[arg(long)]
    pub slab_center: Option<f64>,
    /// Slab halfwidth for x,y,z peak lists
    #[arg(long)]
    pub slab_halfwidth: Option<f64>,
    /// Grid spacing (physical units per cell)
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    /// Dump the initial precision matrix in coordinate format
    #[arg(long)]
    pub dump_precision: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkArg {
    Probit,
    Logit,
    StudentT,
    Laplace,
}

fn parse_link(s: &str) -> std::result::Result<LinkArg, String> {
    match s {
        "probit" => Ok(LinkArg::Probit),
        "logit" => Ok(LinkArg::Logit),
        "student-t" => Ok(LinkArg::StudentT),
        "laplace" => Ok(LinkArg::Laplace),
        other => Err(format!(
            "unknown link {other:?} (expected probit, logit, student-t, laplace)"
        )),
    }
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    /// Peak field as a binary grid CSV
    pub peaks: PathBuf,
    /// ale (Gaussian kernel) or kda (spherical kernel)
    #[arg(long)]
    pub method: String,
    /// Gaussian kernel FWHM (ale)
    #[arg(long)]
    pub fwhm: Option<f64>,
    /// Sphere radius (kda)
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub nperm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid spacing (physical units per cell)
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Fit output directories
    pub fits: Vec<PathBuf>,
    /// Truth map CSV for MSPE and threshold sweeps
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Truth mask level: active = truth > mask-level
    #[arg(long, default_value_t = 0.05)]
    pub mask_level: f64,
    /// Probability thresholds for the sweep
    #[arg(long, default_value = "0.01,0.05,0.1,0.2,0.3,0.5")]
    pub thresholds: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(args: CliArgs, command_echo: Vec<String>) -> i32 {
    let result = match args.command {
        Command::Simulate(a) => cmd_simulate(a, command_echo),
        Command::Fit(a) => cmd_fit(a, command_echo),
        Command::Baseline(a) => cmd_baseline(a, command_echo),
        Command::Evaluate(a) => cmd_evaluate(a, command_echo),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("peakmeta: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            e.exit_code()
        }
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_map(
    dir: &Path,
    stem: &str,
    grid: &LatticeGrid,
    data: &[f64],
    manifest: &mut RunManifest,
) -> Result<()> {
    let csv = dir.join(format!("{stem}.csv"));
    write_grid_csv(&csv, grid, data, format_sig6)?;
    manifest.add_output(&format!("{stem}.csv"), &csv)?;
    let pgm = dir.join(format!("{stem}.pgm"));
    write_pgm(&pgm, grid, data)?;
    manifest.add_output(&format!("{stem}.pgm"), &pgm)?;
    Ok(())
}

fn write_timing(dir: &Path, started: Instant) -> Result<()> {
    write_json(
        &dir.join("timing.json"),
        &serde_json::json!({ "wall_time_secs": started.elapsed().as_secs_f64() }),
    )
}

// ---------------------------------------------------------------------------
// simulate

fn cmd_simulate(args: SimulateArgs, echo: Vec<String>) -> Result<()> {
    match args.kind {
        SimulateKind::Bimodal(a) => simulate_bimodal(a, echo),
        SimulateKind::TwoDisc(a) => simulate_two_disc(a, echo),
    }
}

fn simulate_common(
    out: &Path,
    truth: &TruthMap,
    replicates: usize,
    seed: u64,
    echo: Vec<String>,
    config: serde_json::Value,
    started: Instant,
) -> Result<()> {
    ensure_out_dir(out)?;
    let mut manifest = RunManifest::new(echo, seed, config);
    let truth_path = out.join("truth.csv");
    write_grid_csv(&truth_path, &truth.grid, &truth.p, format_sig6)?;
    manifest.add_output("truth.csv", &truth_path)?;
    write_pgm(&out.join("truth.pgm"), &truth.grid, &truth.p)?;
    manifest.add_output("truth.pgm", &out.join("truth.pgm"))?;
    for rep in 0..replicates {
        let peaks = sample_peaks(truth, seed.wrapping_add(rep as u64));
        let name = if replicates == 1 {
            "peaks.csv".to_string()
        } else {
            format!("peaks_r{rep:03}.csv")
        };
        let path = out.join(&name);
        let data: Vec<f64> = peaks.y.iter().map(|&v| v as f64).collect();
        write_grid_csv(&path, &peaks.grid, &data, |v| format!("{}", v as u8))?;
        manifest.add_output(&name, &path)?;
    }
    manifest.write(out)?;
    write_timing(out, started)
}

fn simulate_bimodal(args: BimodalArgs, echo: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let grid = LatticeGrid::new(args.grid, args.grid)?;
    let truth = bimodal_truth(&grid, (args.domain_lo, args.domain_hi))?;
    let config = serde_json::json!({
        "kind": "bimodal",
        "grid": args.grid,
        "domain": [args.domain_lo, args.domain_hi],
        "replicates": args.replicates,
        "seed": args.seed,
    });
    simulate_common(&args.out, &truth, args.replicates, args.seed, echo, config, started)
}

fn parse_centers(s: &str) -> Result<Vec<(f64, f64)>> {
    let mut centers = Vec::new();
    for part in s.split(';') {
        let xy: Vec<&str> = part.split(',').map(str::trim).collect();
        if xy.len() != 2 {
            return Err(Error::Config(format!("bad center {part:?}, expected row,col")));
        }
        let j: f64 = xy[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad center row {:?}", xy[0])))?;
        let k: f64 = xy[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad center col {:?}", xy[1])))?;
        centers.push((j, k));
    }
    Ok(centers)
}

fn simulate_two_disc(args: TwoDiscArgs, echo: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let grid = LatticeGrid::new(args.grid, args.grid)?;
    let params = TwoDiscParams {
        centers: parse_centers(&args.centers)?,
        radius: args.radius,
        peak_prob: args.peak_prob,
        background: args.background,
        profile: if args.flat_top {
            DiscProfile::FlatTop
        } else {
            DiscProfile::RaisedCosine
        },
    };
    let truth = two_disc_truth(&grid, &params)?;
    let config = serde_json::json!({
        "kind": "two-disc",
        "grid": args.grid,
        "params": params,
        "replicates": args.replicates,
        "seed": args.seed,
    });
    simulate_common(&args.out, &truth, args.replicates, args.seed, echo, config, started)
}

// ---------------------------------------------------------------------------
// fit

fn load_peaks(args: &FitArgs) -> Result<PeakField> {
    if args.peak_list {
        let dims = args.grid.as_deref().ok_or_else(|| {
            Error::Config("--peak-list requires --grid ROWSxCOLS".into())
        })?;
        let (n1, n2) = parse_dims(dims)?;
        let grid = LatticeGrid::new(n1, n2)?.with_spacing(args.spacing)?;
        let slab = match (args.slab_center, args.slab_halfwidth) {
            (Some(center), Some(halfwidth)) => Some(SlabFilter { center, halfwidth }),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "--slab-center and --slab-halfwidth must be given together".into(),
                ))
            }
        };
        let list = read_peak_list(&args.peaks, slab)?;
        peak_field_from_list(&grid, &list)
    } else {
        let field = read_binary_grid(&args.peaks)?;
        let grid = field.grid.with_spacing(args.spacing)?;
        PeakField::new(grid, field.y)
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("bad grid {s:?}, expected ROWSxCOLS")));
    }
    let n1 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad rows {:?}", parts[0])))?;
    let n2 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad cols {:?}", parts[1])))?;
    Ok((n1, n2))
}

fn model_spec(args: &FitArgs) -> Result<ModelSpec> {
    let link = match args.link {
        LinkArg::Probit => Link::Probit,
        LinkArg::Logit => Link::Logit,
        LinkArg::StudentT => Link::StudentT {
            df: args.df.unwrap_or(4.0),
        },
        LinkArg::Laplace => Link::Laplace,
    };
    if args.df.is_some() && !matches!(args.link, LinkArg::StudentT) {
        return Err(Error::Config("--df only applies to --link student-t".into()));
    }
    let spec = ModelSpec {
        link,
        nu: args.nu,
        rho: args.rho,
        s: args.scale,
        r: args.r,
        adaptive: !args.nonadaptive,
    };
    spec.validate()?;
    Ok(spec)
}

fn cmd_fit(args: FitArgs, echo: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let field = load_peaks(&args)?;
    let spec = model_spec(&args)?;
    let cfg = ChainConfig {
        iterations: args.iters,
        burn_in: args.burnin,
        thin: args.thin,
        seed: args.seed,
        chains: args.chains,
        monitor: args.monitor,
    };
    cfg.validate(field.grid.len())?;
    if cfg.retained() == 0 {
        return Err(Error::Config(
            "no retained samples: increase --iters or decrease --thin".into(),
        ));
    }

    ensure_out_dir(&args.out)?;
    let config = serde_json::json!({
        "spec": spec,
        "iterations": cfg.iterations,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "chains": cfg.chains,
        "seed": cfg.seed,
        "monitor": cfg.monitor,
        "grid": { "n1": field.grid.n1(), "n2": field.grid.n2(), "spacing": field.grid.spacing() },
    });
    let mut manifest = RunManifest::new(echo, args.seed, config);
    manifest.add_input(&args.peaks.display().to_string(), &args.peaks)?;

    // normalized copy of the response grid, so evaluate runs self-contained
    let peaks_copy = args.out.join("peaks.csv");
    let ydata: Vec<f64> = field.y.iter().map(|&v| v as f64).collect();
    write_grid_csv(&peaks_copy, &field.grid, &ydata, |v| format!("{}", v as u8))?;
    manifest.add_output("peaks.csv", &peaks_copy)?;

    if args.dump_precision {
        let op = build_diff_operator(&field.grid);
        let a = assemble_precision(&op, &vec![1.0; op.n_rows()])?;
        let path = args.out.join("precision_coo.txt");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        a.write_coo(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(&path, e))?;
        manifest.add_output("precision_coo.txt", &path)?;
    }

    // a failed Gibbs step still leaves a manifest describing the aborted run
    let outputs = match run_chains(&spec, &field, &cfg) {
        Ok(o) => o,
        Err(e) => {
            manifest.aborted(&e);
            manifest.write(&args.out)?;
            write_timing(&args.out, started)?;
            return Err(e);
        }
    };
    let streams: Vec<_> = outputs.iter().map(|o| o.stream.clone()).collect();

    for out in &outputs {
        let stem = format!("samples_c{}", out.stream.run.chain);
        write_stream(&args.out, &stem, &out.stream)?;
        manifest.add_output(&format!("{stem}.bin"), &args.out.join(format!("{stem}.bin")))?;
        manifest.add_output(&format!("{stem}.json"), &args.out.join(format!("{stem}.json")))?;
    }

    let (prob_map, miscoding_map) = summarize(&streams, spec.link)?;
    write_map(&args.out, "prob_map", &field.grid, &prob_map, &mut manifest)?;
    write_map(&args.out, "miscoding_map", &field.grid, &miscoding_map, &mut manifest)?;

    let d = dic(&streams, &field.y, spec.link, spec.r)?;
    write_diagnostics(&args.out, &outputs[0], &d, &mut manifest)?;

    manifest.write(&args.out)?;
    write_timing(&args.out, started)
}

#[derive(Serialize)]
struct DiagnosticsDoc {
    dic: f64,
    dbar: f64,
    d_at_mean: f64,
    monitors: Vec<MonitorDoc>,
}

#[derive(Serialize)]
struct MonitorDoc {
    voxel: usize,
    ess_z: Option<f64>,
    ess_w: Option<f64>,
}

fn write_diagnostics(
    dir: &Path,
    chain0: &ChainOutput,
    d: &crate::eval::Dic,
    manifest: &mut RunManifest,
) -> Result<()> {
    let ddir = dir.join("diagnostics");
    ensure_out_dir(&ddir)?;
    let traces = &chain0.traces;
    let iters = &chain0.stream.retained_iters;
    let mut monitors = Vec::new();
    for (mi, &voxel) in traces.voxels.iter().enumerate() {
        for (kind, series) in [("z", &traces.z[mi]), ("w", &traces.w[mi])] {
            let name = format!("trace_{kind}_v{voxel}.csv");
            write_xy_csv(
                &ddir.join(&name),
                ("iteration", "value"),
                iters
                    .iter()
                    .zip(series)
                    .map(|(it, v)| (it.to_string(), format_sig6(*v))),
            )?;
            manifest.add_output(&format!("diagnostics/{name}"), &ddir.join(&name))?;
        }
        let max_lag = traces.z[mi].len().saturating_sub(1).min(50);
        if max_lag > 0 {
            let acf = autocorrelation(&traces.z[mi], max_lag)?;
            let name = format!("acf_z_v{voxel}.csv");
            write_xy_csv(
                &ddir.join(&name),
                ("lag", "acf"),
                acf.iter()
                    .enumerate()
                    .map(|(l, a)| (l.to_string(), format_sig6(*a))),
            )?;
            manifest.add_output(&format!("diagnostics/{name}"), &ddir.join(&name))?;
        }
        monitors.push(MonitorDoc {
            voxel,
            ess_z: ess(&traces.z[mi]),
            ess_w: ess(&traces.w[mi]),
        });
    }
    // global-scale trace
    let name = "trace_theta_sq.csv";
    write_xy_csv(
        &ddir.join(name),
        ("iteration", "value"),
        iters
            .iter()
            .zip(&chain0.stream.theta_sq)
            .map(|(it, v)| (it.to_string(), format_sig6(*v))),
    )?;
    manifest.add_output(&format!("diagnostics/{name}"), &ddir.join(name))?;

    let doc = DiagnosticsDoc {
        dic: d.dic,
        dbar: d.dbar,
        d_at_mean: d.d_at_mean,
        monitors,
    };
    write_json(&ddir.join("diagnostics.json"), &doc)?;
    manifest.add_output("diagnostics/diagnostics.json", &ddir.join("diagnostics.json"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// baseline

fn cmd_baseline(args: BaselineArgs, echo: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let field = read_binary_grid(&args.peaks)?;
    let grid = field.grid.with_spacing(args.spacing)?;
    let field = PeakField::new(grid, field.y)?;
    let kernel = match args.method.as_str() {
        "ale" => KernelSpec::GaussianFwhm {
            fwhm: args.fwhm.ok_or_else(|| Error::Config("--method ale needs --fwhm".into()))?,
        },
        "kda" => KernelSpec::Sphere {
            radius: args
                .radius
                .ok_or_else(|| Error::Config("--method kda needs --radius".into()))?,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown method {other:?} (expected ale or kda)"
            )))
        }
    };

    ensure_out_dir(&args.out)?;
    let config = serde_json::json!({
        "method": args.method,
        "kernel": kernel,
        "alpha": args.alpha,
        "n_perm": args.nperm,
        "seed": args.seed,
        "spacing": args.spacing,
    });
    let mut manifest = RunManifest::new(echo, args.seed, config);
    manifest.add_input(&args.peaks.display().to_string(), &args.peaks)?;

    let map = kernel_map(&field, &kernel)?;
    let n_peaks = field.count_ones();
    let threshold = mc_threshold(n_peaks, &kernel, &grid, args.alpha, args.nperm, args.seed)?;
    let sig = significant_voxels(&map, threshold);

    let max = map.iter().cloned().fold(f64::MIN, f64::max).max(1e-300);
    let scaled: Vec<f64> = map.iter().map(|v| v / max).collect();
    let csv = args.out.join("kernel_map.csv");
    write_grid_csv(&csv, &grid, &map, format_sig6)?;
    manifest.add_output("kernel_map.csv", &csv)?;
    write_pgm(&args.out.join("kernel_map.pgm"), &grid, &scaled)?;
    manifest.add_output("kernel_map.pgm", &args.out.join("kernel_map.pgm"))?;

    let sig_data: Vec<f64> = sig.iter().map(|&v| v as f64).collect();
    let sig_path = args.out.join("significance.csv");
    write_grid_csv(&sig_path, &grid, &sig_data, |v| format!("{}", v as u8))?;
    manifest.add_output("significance.csv", &sig_path)?;

    let metrics = serde_json::json!({
        "method": args.method,
        "alpha": args.alpha,
        "n_perm": args.nperm,
        "n_peaks": n_peaks,
        "threshold": threshold,
        "significant_voxels": sig.iter().map(|&v| v as usize).sum::<usize>(),
    });
    write_json(&args.out.join("metrics.json"), &metrics)?;
    manifest.add_output("metrics.json", &args.out.join("metrics.json"))?;

    manifest.write(&args.out)?;
    write_timing(&args.out, started)
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Serialize)]
struct FitReport {
    dir: String,
    link: String,
    r: f64,
    adaptive: bool,
    seed: u64,
    chains: usize,
    retained: usize,
    dic: f64,
    dbar: f64,
    d_at_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mspe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepRow>>,
}

#[derive(Serialize)]
struct SweepRow {
    threshold: f64,
    tp: usize,
    fp: usize,
    fn_: usize,
    tn: usize,
}

fn discover_chains(dir: &Path) -> Result<Vec<String>> {
    let mut stems = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".json") {
            if stem.starts_with("samples_c") {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    if stems.is_empty() {
        return Err(Error::Config(format!(
            "no samples_c*.json streams found in {}",
            dir.display()
        )));
    }
    Ok(stems)
}

fn cmd_evaluate(args: EvaluateArgs, echo: Vec<String>) -> Result<()> {
    let started = Instant::now();
    if args.fits.is_empty() {
        return Err(Error::Config("evaluate needs at least one fit directory".into()));
    }
    let thresholds: Vec<f64> = args
        .thresholds
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad threshold {t:?}")))
        })
        .collect::<Result<_>>()?;

    let truth = match &args.truth {
        Some(path) => {
            let (n1, n2, p) = read_grid_csv(path)?;
            Some(TruthMap::new(LatticeGrid::new(n1, n2)?, p)?)
        }
        None => None,
    };

    ensure_out_dir(&args.out)?;
    let config = serde_json::json!({
        "fits": args.fits.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "truth": args.truth.as_ref().map(|p| p.display().to_string()),
        "mask_level": args.mask_level,
        "thresholds": thresholds,
    });
    let mut manifest = RunManifest::new(echo, 0, config);

    let mut reports = Vec::new();
    for dir in &args.fits {
        let stems = discover_chains(dir)?;
        let streams: Vec<_> = stems
            .iter()
            .map(|stem| read_stream(dir, stem))
            .collect::<Result<_>>()?;
        let y = read_binary_grid(&dir.join("peaks.csv"))?;
        let spec = streams[0].spec;
        if y.grid.len() != streams[0].n_voxels() {
            return Err(Error::Dim(format!(
                "peaks.csv in {} does not match the stream lattice",
                dir.display()
            )));
        }
        let d = dic(&streams, &y.y, spec.link, spec.r)?;
        let (prob_map, _) = summarize(&streams, spec.link)?;

        let (mspe_val, sweep) = match &truth {
            Some(t) => {
                if t.grid.len() != prob_map.len() {
                    return Err(Error::Dim(format!(
                        "truth grid ({}x{}) does not match fit {}",
                        t.grid.n1(),
                        t.grid.n2(),
                        dir.display()
                    )));
                }
                let mask: Vec<bool> = t.p.iter().map(|&p| p > args.mask_level).collect();
                let sweep = thresholds
                    .iter()
                    .map(|&thr| {
                        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
                        for (p, &active) in prob_map.iter().zip(&mask) {
                            match (*p > thr, active) {
                                (true, true) => tp += 1,
                                (true, false) => fp += 1,
                                (false, true) => fn_ += 1,
                                (false, false) => tn += 1,
                            }
                        }
                        SweepRow {
                            threshold: thr,
                            tp,
                            fp,
                            fn_,
                            tn,
                        }
                    })
                    .collect();
                (Some(mspe(&prob_map, &t.p)?), Some(sweep))
            }
            None => (None, None),
        };

        manifest.add_input(&dir.display().to_string(), &dir.join("manifest.json"))?;
        reports.push(FitReport {
            dir: dir.display().to_string(),
            link: spec.link.name().to_string(),
            r: spec.r,
            adaptive: spec.adaptive,
            seed: streams[0].run.seed,
            chains: streams.len(),
            retained: streams.iter().map(|s| s.n_retained()).sum(),
            dic: d.dic,
            dbar: d.dbar,
            d_at_mean: d.d_at_mean,
            mspe: mspe_val,
            sweep,
        });
    }

    // adaptive-vs-nonadaptive DIC comparison table
    let table_path = args.out.join("dic_table.csv");
    let mut table = String::from("fit,model,dic,dbar,d_at_mean\n");
    for rep in &reports {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            rep.dir,
            if rep.adaptive { "adaptive" } else { "nonadaptive" },
            format_sig6(rep.dic),
            format_sig6(rep.dbar),
            format_sig6(rep.d_at_mean),
        ));
    }
    std::fs::write(&table_path, table).map_err(|e| Error::io(&table_path, e))?;
    manifest.add_output("dic_table.csv", &table_path)?;

    let metrics = serde_json::json!({ "fits": reports });
    write_json(&args.out.join("metrics.json"), &metrics)?;
    manifest.add_output("metrics.json", &args.out.join("metrics.json"))?;

    manifest.write(&args.out)?;
    write_timing(&args.out, started)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_centers_parse() {
        assert_eq!(parse_dims("30x40").unwrap(), (30, 40));
        assert!(parse_dims("30").is_err());
        assert!(parse_dims("ax4").is_err());
        let c = parse_centers("20,20;44,44").unwrap();
        assert_eq!(c, vec![(20.0, 20.0), (44.0, 44.0)]);
        assert!(parse_centers("20;44").is_err());
    }

    #[test]
    fn link_parsing() {
        assert_eq!(parse_link("probit").unwrap(), LinkArg::Probit);
        assert_eq!(parse_link("student-t").unwrap(), LinkArg::StudentT);
        assert!(parse_link("cauchy").is_err());
    }
}
