//! `oopt`: command-line driver for data generation, training,
//! reconstruction, evaluation and mesh statistics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use offsetopt::config::{parse_voxel, RunConfig};
use offsetopt::extraction::edge_adjacency_stats;
use offsetopt::io::{load_cloud, load_mesh, save_cloud, save_mesh};
use offsetopt::metrics::evaluate;
use offsetopt::network::{load_params, save_params, NetConfig, NetworkParams};
use offsetopt::optimizer::diagnostics_csv;
use offsetopt::pipeline::reconstruct;
use offsetopt::sampling::{sample_surface_with_density, wave_density};
use offsetopt::trainer::{
    generate_training_mesh, loss_trace_csv, train, Augmentation, MeshSpec, Optimizer, PrimitiveKind, TrainConfig,
    TrainingSet,
};
use offsetopt::{geometry::PointCloud, Error};

#[derive(Parser)]
#[command(name = "oopt", version, about = "Explicit surface reconstruction by per-point offset optimization")]
struct Cli {
    /// Worker threads (falls back to OOPT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print a JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write remeshed synthetic primitives (and optional sample clouds).
    GenData(GenData),
    /// Train the triangle network on a directory of meshes.
    Train(Train),
    /// Reconstruct a mesh from a point cloud.
    Reconstruct(Reconstruct),
    /// Compare a reconstruction against a ground-truth mesh.
    Evaluate(Evaluate),
    /// Edge-adjacency histogram of a mesh as CSV.
    Stats(Stats),
}

#[derive(Args)]
struct GenData {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Meshes to write, cycling through the primitive kinds.
    #[arg(long, default_value_t = 24)]
    count: usize,
    /// Comma-separated kinds: sphere, torus, box, heightfield, icosphere.
    #[arg(long, default_value = "sphere,torus,box,heightfield")]
    kinds: String,
    /// Target edge length (shapes fit roughly in the unit sphere).
    #[arg(long, default_value_t = 0.08)]
    edge: f64,
    /// Seed of the first mesh; later meshes use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write this many density-biased surface samples per mesh as .xyz.
    #[arg(long, default_value_t = 0)]
    cloud_samples: usize,
    /// Lowest relative sampling density for --cloud-samples (1 is uniform).
    #[arg(long, default_value_t = 0.2)]
    density_low: f64,
}

#[derive(Args)]
struct Train {
    /// Directory of .obj/.ply training meshes.
    #[arg(long)]
    input: PathBuf,
    /// Parameter file to write.
    #[arg(long)]
    out: PathBuf,
    /// Loss trace CSV (default: <out>.loss.csv).
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    #[arg(long = "K", default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Centers per step.
    #[arg(long, default_value_t = 512)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// adam or momentum.
    #[arg(long, default_value = "adam")]
    optimizer: String,
    /// Global gradient-norm clip.
    #[arg(long)]
    clip: Option<f64>,
    /// Jitter as a fraction of the median nearest-neighbor distance.
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
    /// Transformer layers.
    #[arg(long, default_value_t = 5)]
    layers: usize,
    /// Seed for initialization, batching and augmentation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Reconstruct {
    /// Point cloud (.xyz, .ply or .obj; faces are ignored).
    #[arg(long)]
    input: PathBuf,
    /// Trained network parameters from `train`.
    #[arg(long)]
    params: PathBuf,
    /// Output mesh (.obj or .ply).
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration CSV (default: <out>.diagnostics.csv).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// key = value settings; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Voxel size in input units, `auto`, or `off` [default: off].
    #[arg(long)]
    voxel: Option<String>,
    /// Offset iterations; 0 skips optimization [default: 100].
    #[arg(long = "T")]
    t: Option<usize>,
    /// Neighbors per point [default: 50].
    #[arg(long = "K")]
    k: Option<usize>,
    /// Points per gradient chunk [default: 1024].
    #[arg(long)]
    chunk: Option<usize>,
    /// Run seed; reconstruction itself draws no random numbers.
    #[arg(long)]
    seed: Option<u64>,
    /// Remove faces until every edge has at most two.
    #[arg(long)]
    strict_manifold: bool,
}

#[derive(Args)]
struct Evaluate {
    /// Ground-truth mesh.
    #[arg(long)]
    gt: PathBuf,
    /// Reconstructed mesh.
    #[arg(long)]
    pred: PathBuf,
    /// key = value settings; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Samples per surface [default: 100000].
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for surface sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Stats {
    #[arg(long)]
    input: PathBuf,
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericFailure { .. } | Error::TrainingFailure { .. } | Error::UndefinedLoss => 3,
            Error::InvalidParameter(_) | Error::UnknownKey { .. } | Error::Range(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn gen_data(a: &GenData, json_out: bool) -> Result<(), Failure> {
    let kinds: Vec<PrimitiveKind> = a
        .kinds
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, Error>>()?;
    if kinds.is_empty() {
        return Err(usage("--kinds is empty"));
    }
    fs::create_dir_all(&a.out).map_err(|e| Failure::from(Error::Io { path: a.out.clone(), source: e }))?;
    let mut written = Vec::new();
    for i in 0..a.count {
        let kind = kinds[i % kinds.len()];
        let spec = MeshSpec {
            kind,
            edge: a.edge,
            seed: a.seed.wrapping_add(i as u64),
        };
        let mesh = generate_training_mesh(&spec)?;
        let path = a.out.join(format!("{:03}_{}.obj", i, kind.name()));
        save_mesh(&mesh, &path)?;
        if a.cloud_samples > 0 {
            let s = sample_surface_with_density(&mesh, a.cloud_samples, spec.seed, wave_density(a.density_low))?;
            save_cloud(&PointCloud::new(s.points)?, path.with_extension("xyz"))?;
        }
        written.push(json!({"path": path.display().to_string(), "vertices": mesh.vertices.len(), "faces": mesh.faces.len()}));
    }
    if json_out {
        println!("{}", json!({ "meshes": written }));
    }
    Ok(())
}

fn train_cmd(a: &Train, json_out: bool) -> Result<(), Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(&a.input)
        .map_err(|e| Failure::from(Error::Io { path: a.input.clone(), source: e }))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("obj" | "ply")))
        .collect();
    files.sort();
    let meshes = files.iter().map(load_mesh).collect::<Result<Vec<_>, _>>()?;
    let set = TrainingSet::new(meshes)?;
    let optimizer = match a.optimizer.as_str() {
        "adam" => Optimizer::Adam,
        "momentum" => Optimizer::Momentum,
        o => return Err(usage(format!("unknown optimizer {o:?}; expected adam or momentum"))),
    };
    let cfg = TrainConfig {
        k: a.k,
        batch: a.batch,
        steps: a.steps,
        lr: a.lr,
        optimizer,
        clip: a.clip,
        augmentation: Augmentation {
            jitter: a.jitter,
            ..Augmentation::default()
        },
        seed: a.seed,
        ..TrainConfig::default()
    };
    let net = NetConfig {
        layers: a.layers,
        ..NetConfig::default()
    };
    let (params, trace) = train(&set, &cfg, NetworkParams::init(net, a.seed))?;
    save_params(&params, &a.out)?;
    let loss_path = a.loss_csv.clone().unwrap_or_else(|| sibling(&a.out, ".loss.csv"));
    write_file(&loss_path, loss_trace_csv(&trace).as_bytes())?;
    if json_out {
        let last = trace.last().map(|p| p.loss);
        println!("{}", json!({"meshes": files.len(), "steps": trace.len(), "final_loss": last, "checksum": params.checksum()}));
    }
    Ok(())
}

fn reconstruct_cmd(a: &Reconstruct, json_out: bool) -> Result<(), Failure> {
    let mut rc = load_config(a.config.as_deref())?;
    if let Some(v) = &a.voxel {
        rc.voxel = parse_voxel(v)?;
    }
    if let Some(t) = a.t {
        rc.set("T", &t.to_string())?;
    }
    if let Some(k) = a.k {
        rc.set("K", &k.to_string())?;
    }
    if let Some(c) = a.chunk {
        rc.set("chunk", &c.to_string())?;
    }
    if let Some(s) = a.seed {
        rc.seed = s;
    }
    rc.strict_manifold |= a.strict_manifold;
    let cloud = load_cloud(&a.input)?;
    let params = load_params(&a.params)?;
    let r = reconstruct(&cloud, &params, &rc.reconstruct_config())?;
    save_mesh(&r.mesh, &a.out)?;
    let diag_path = a.diagnostics.clone().unwrap_or_else(|| sibling(&a.out, ".diagnostics.csv"));
    write_file(&diag_path, diagnostics_csv(&r.diagnostics).as_bytes())?;
    if json_out {
        let hist: serde_json::Map<String, serde_json::Value> =
            r.stats.histogram.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        println!(
            "{}",
            json!({
                "input_points": cloud.len(),
                "mesh_vertices": r.mesh.vertices.len(),
                "faces": r.mesh.faces.len(),
                "edges": r.stats.edges,
                "manifold_percent": r.stats.manifold_percent,
                "edge_adjacency": hist,
                "voxel_size": r.voxel_size,
                "iterations": r.diagnostics.len(),
            })
        );
    }
    Ok(())
}

fn evaluate_cmd(a: &Evaluate, json_out: bool) -> Result<(), Failure> {
    let mut rc = load_config(a.config.as_deref())?;
    if let Some(n) = a.samples {
        rc.set("samples", &n.to_string())?;
    }
    if let Some(s) = a.seed {
        rc.seed = s;
    }
    let gt = load_mesh(&a.gt)?;
    let pred = load_mesh(&a.pred)?;
    let report = evaluate(&gt, &pred, &rc.metric_params())?;
    if let Some(out) = &a.out {
        write_file(out, report.to_csv().as_bytes())?;
    }
    if json_out {
        let s = report.scaled();
        println!(
            "{}",
            json!({"cd1": s[0], "cd2": s[1], "f1": s[2], "nc": s[3], "nr": s[4], "ecd1": s[5], "ef1": s[6]})
        );
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn stats_cmd(a: &Stats, json_out: bool) -> Result<(), Failure> {
    let mesh = load_mesh(&a.input)?;
    let stats = edge_adjacency_stats(&mesh);
    match &a.out {
        Some(p) => write_file(p, stats.to_csv().as_bytes())?,
        None if !json_out => print!("{}", stats.to_csv()),
        None => {}
    }
    if json_out {
        let hist: serde_json::Map<String, serde_json::Value> =
            stats.histogram.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        println!(
            "{}",
            json!({"faces": mesh.faces.len(), "edges": stats.edges, "manifold_percent": stats.manifold_percent, "edge_adjacency": hist})
        );
    }
    Ok(())
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, Failure> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    if let Ok(v) = std::env::var("OOPT_THREADS") {
        let n = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("OOPT_THREADS must be a positive integer, got {v:?}")))?;
        return Ok(Some(n));
    }
    let config = match &cli.command {
        Command::Reconstruct(r) => r.config.as_ref(),
        Command::Evaluate(e) => e.config.as_ref(),
        _ => None,
    };
    Ok(config
        .and_then(|p| fs::read_to_string(p).ok())
        .and_then(|t| RunConfig::threads_in(&t)))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = thread_count(cli)? {
        if n == 0 {
            return Err(usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot size the thread pool: {e}")))?;
    }
    match &cli.command {
        Command::GenData(a) => gen_data(a, cli.json),
        Command::Train(a) => train_cmd(a, cli.json),
        Command::Reconstruct(a) => reconstruct_cmd(a, cli.json),
        Command::Evaluate(a) => evaluate_cmd(a, cli.json),
        Command::Stats(a) => stats_cmd(a, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
