use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pcdenoise::eval::{chamfer_one_sided, removal_metrics, surface_distance, SurfaceDescriptor};
use pcdenoise::io::{self, ply::ExtraColumn};
use pcdenoise::{run_pipeline, PipelineConfig};
use pcdenoise_core::contamination::{
    contaminate, sample_sphere, sample_sphere_even, sample_torus, IsolationReference, NoiseSpec, WhiteNoise,
};
use pcdenoise_core::mesh::{circumradius_stats, mesh_laplacian_smooth, prune_large_triangles};
use pcdenoise_core::octree::{uniformize, Octree, OctreeConfig};
use pcdenoise_core::Point3;

#[derive(Parser)]
#[command(name = "pcdenoise", version, about = "Point cloud denoising with balanced octrees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove white noise and outliers, then smooth.
    Denoise(DenoiseArgs),
    /// Add perturbation, white noise and outlier clusters to a clean cloud.
    Contaminate(ContaminateArgs),
    /// Write a synthetic sample of an analytic surface.
    Sample(SampleArgs),
    /// Print octree and uniform grid statistics.
    OctreeStats(OctreeStatsArgs),
    /// Prune oversized triangles and smooth a reconstructed mesh.
    MeshPost(MeshPostArgs),
    /// Measure a cloud against an analytic surface or a reference cloud.
    Eval(EvalArgs),
}

#[derive(Args)]
struct DenoiseArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    #[arg(long, default_value_t = 40.0)]
    gamma: f64,
    /// Number of surfaces (largest components) to keep.
    #[arg(short, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed iteration count instead of the derived cap.
    #[arg(long = "max-iters")]
    max_iterations: Option<usize>,
    /// Take representatives from the uniform grid.
    #[arg(long)]
    uniform_q: bool,
    #[arg(long, default_value_t = pcdenoise_core::octree::DEFAULT_MAX_DEPTH)]
    max_depth: u32,
    #[arg(long)]
    no_clustering: bool,
    #[arg(long)]
    no_density: bool,
    #[arg(long)]
    no_smoothing: bool,
    /// JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the clustered and filtered clouds with this path prefix.
    #[arg(long)]
    intermediates: Option<PathBuf>,
    /// ASCII PLY output.
    #[arg(long)]
    ascii: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Isolation {
    Perturbed,
    Original,
}

#[derive(Args)]
struct ContaminateArgs {
    input: PathBuf,
    /// Labeled output cloud (.ply keeps labels).
    #[arg(short, long)]
    output: PathBuf,
    /// Perturbation standard deviation in percent of the diagonal.
    #[arg(long, default_value_t = 0.0)]
    sigma_pct: f64,
    #[arg(long, default_value_t = 5000, conflicts_with = "white_noise_pct")]
    white_noise: usize,
    /// White noise in percent of the input size.
    #[arg(long)]
    white_noise_pct: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    cluster_probability: f64,
    #[arg(long, default_value_t = 0.05)]
    isolation_radius: f64,
    /// Largest number of points in one outlier cluster.
    #[arg(long, default_value_t = 400)]
    cluster_max: u32,
    #[arg(long, default_value_t = 0.001)]
    cluster_radius_scale: f64,
    #[arg(long, value_enum, default_value_t = Isolation::Perturbed)]
    isolation: Isolation,
    #[arg(long)]
    replace_seed_point: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON summary; defaults to the output path with a .json extension.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    ascii: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Sphere,
    /// Evenly spread sphere points; ignores the seed.
    EvenSphere,
    Torus,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(value_enum)]
    shape: Shape,
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    output: PathBuf,
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    major: f64,
    #[arg(long, default_value_t = 0.25)]
    minor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct OctreeStatsArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = pcdenoise_core::octree::DEFAULT_MAX_DEPTH)]
    max_depth: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MeshPostArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    epsilon: f64,
    #[arg(long)]
    skip_prune: bool,
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Drop vertices no triangle uses.
    #[arg(long)]
    compact: bool,
}

#[derive(Args)]
struct EvalArgs {
    input: PathBuf,
    /// e.g. `sphere:r=1`, `torus:R=1,r=0.25`, `plane:nz=1`.
    #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
    surface: Option<SurfaceDescriptor>,
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Labeled cloud before removal; label metrics compare it with the input.
    #[arg(long)]
    before: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_cloud(path: &Path) -> Result<pcdenoise_core::PointCloud> {
    io::read_point_cloud(path).with_context(|| format!("reading {}", path.display()))
}

fn denoise(a: DenoiseArgs) -> Result<()> {
    let cloud = read_cloud(&a.input)?;
    let config = PipelineConfig {
        alpha: a.alpha,
        beta: a.beta,
        lambda: a.lambda,
        gamma: a.gamma,
        k: a.k,
        seed: a.seed,
        max_iterations: a.max_iterations,
        uniform_q: a.uniform_q,
        max_depth: a.max_depth,
        clustering: !a.no_clustering,
        density_filter: !a.no_density,
        smoothing: !a.no_smoothing,
        ..PipelineConfig::default()
    };
    let out = run_pipeline(&cloud, &config)?;
    let extra = (a.k > 1).then(|| ExtraColumn {
        name: "component",
        values: &out.component_ids,
    });
    io::write_point_cloud(&a.output, &out.points, a.ascii, extra)
        .with_context(|| format!("writing {}", a.output.display()))?;
    if let Some(prefix) = &a.intermediates {
        let stem = prefix.display();
        io::write_point_cloud(Path::new(&format!("{stem}.clustered.ply")), &out.clustered, a.ascii, None)?;
        io::write_point_cloud(Path::new(&format!("{stem}.filtered.ply")), &out.filtered, a.ascii, None)?;
    }
    let r = &out.report;
    eprintln!(
        "|P| = {}  |P'| = {}  |P''| = {}  |Q| = {}  l_avg = {:.4e}  l_P = {:.4e}  {:.2}s",
        r.input_points,
        r.clustered_points,
        r.filtered_points,
        r.representatives,
        r.mean_leaf_size,
        r.cell_size,
        r.times.total
    );
    for note in &r.notes {
        eprintln!("note: {note}");
    }
    if let Some(path) = &a.report {
        write_json(path, r)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ContaminationSummary {
    seed: u64,
    input_points: usize,
    output_points: usize,
    diagonal: f64,
    sigma_fraction: f64,
    white_noise: usize,
    isolated_white_noise: usize,
    clusters: usize,
    outliers: usize,
}

fn contaminate_cmd(a: ContaminateArgs) -> Result<()> {
    let clean = read_cloud(&a.input)?;
    let spec = NoiseSpec {
        sigma_fraction: a.sigma_pct / 100.0,
        white_noise: match a.white_noise_pct {
            Some(pct) => WhiteNoise::Fraction(pct / 100.0),
            None => WhiteNoise::Count(a.white_noise),
        },
        cluster_probability: a.cluster_probability,
        isolation_radius_fraction: a.isolation_radius,
        cluster_max_count: a.cluster_max,
        cluster_radius_scale: a.cluster_radius_scale,
        isolation_reference: match a.isolation {
            Isolation::Perturbed => IsolationReference::Perturbed,
            Isolation::Original => IsolationReference::Original,
        },
        replace_seed_point: a.replace_seed_point,
        seed: a.seed,
    };
    let c = contaminate(&clean, &spec)?;
    io::write_point_cloud(&a.output, &c.cloud, a.ascii, None)
        .with_context(|| format!("writing {}", a.output.display()))?;
    let summary = ContaminationSummary {
        seed: a.seed,
        input_points: clean.len(),
        output_points: c.cloud.len(),
        diagonal: c.diagonal,
        sigma_fraction: a.sigma_pct / 100.0,
        white_noise: c.white_noise_count,
        isolated_white_noise: c.isolated_white_noise,
        clusters: c.clusters.len(),
        outliers: c.cloud.count_label(pcdenoise_core::Label::Outlier),
    };
    let report = a.report.unwrap_or_else(|| a.output.with_extension("json"));
    write_json(&report, &summary)
}

fn sample(a: SampleArgs) -> Result<()> {
    let cloud = match a.shape {
        Shape::Sphere => sample_sphere(a.n, Point3::ORIGIN, a.radius, a.seed),
        Shape::EvenSphere => sample_sphere_even(a.n, Point3::ORIGIN, a.radius),
        Shape::Torus => sample_torus(a.n, a.major, a.minor, a.seed),
    };
    io::write_point_cloud(&a.output, &cloud, a.ascii, None)?;
    Ok(())
}

#[derive(Serialize)]
struct OctreeStats {
    points: usize,
    root_side: f64,
    nodes: usize,
    leaves: usize,
    depth: u32,
    mean_leaf_size: f64,
    /// (level, leaves, non-empty leaves)
    levels: Vec<(u32, usize, usize)>,
    grid_level: u32,
    cell_size: f64,
    occupied_cells: usize,
}

fn octree_stats(a: OctreeStatsArgs) -> Result<()> {
    let cloud = read_cloud(&a.input)?;
    let tree = Octree::build_with(&cloud, &OctreeConfig { max_depth: a.max_depth })?;
    let grid = uniformize(&tree, &cloud, a.alpha)?;
    let stats = OctreeStats {
        points: cloud.len(),
        root_side: tree.root_cube().side,
        nodes: tree.node_count(),
        leaves: tree.leaf_count(),
        depth: tree.depth(),
        mean_leaf_size: tree.mean_leaf_size()?,
        levels: tree.level_histogram(),
        grid_level: grid.level(),
        cell_size: grid.cell_size(),
        occupied_cells: grid.len(),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
        return Ok(());
    }
    println!("points          {}", stats.points);
    println!("root side       {:.6e}", stats.root_side);
    println!("nodes / leaves  {} / {}", stats.nodes, stats.leaves);
    println!("depth           {}", stats.depth);
    println!("mean leaf size  {:.6e}", stats.mean_leaf_size);
    println!("grid level      {} (cell {:.6e}, {} occupied)", stats.grid_level, stats.cell_size, stats.occupied_cells);
    println!("level  leaves  non-empty");
    for (level, leaves, nonempty) in &stats.levels {
        println!("{level:>5}  {leaves:>6}  {nonempty:>9}");
    }
    Ok(())
}

fn mesh_post(a: MeshPostArgs) -> Result<()> {
    let mut mesh = io::read_mesh(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    if !a.skip_prune {
        let stats = circumradius_stats(&mesh)?;
        let before = mesh.triangles.len();
        mesh = prune_large_triangles(&mesh, a.epsilon)?;
        eprintln!(
            "pruned {} of {} triangles (r_avg {:.4e}, r_sd {:.4e}, limit {:.4e})",
            before - mesh.triangles.len(),
            before,
            stats.mean,
            stats.std_dev,
            stats.threshold(a.epsilon)
        );
    }
    mesh = mesh_laplacian_smooth(&mesh, a.iterations, a.step)?;
    if a.compact {
        mesh = mesh.compact();
    }
    io::write_mesh(&a.output, &mesh).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let cloud = read_cloud(&a.input)?;
    let distances = match (&a.surface, &a.reference) {
        (Some(s), _) => surface_distance(cloud.points(), s),
        (None, Some(r)) => chamfer_one_sided(cloud.points(), read_cloud(r)?.points()),
        (None, None) => bail!("either --surface or --ref is required"),
    };
    let removal = match &a.before {
        Some(b) => {
            let before = read_cloud(b)?;
            let m = removal_metrics(&before, &cloud);
            if m.is_none() {
                eprintln!("note: label metrics need labels in both clouds");
            }
            m
        }
        None => None,
    };
    if a.json {
        let v = serde_json::json!({ "distance": distances, "removal": removal });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("{distances}");
        if let Some(m) = removal {
            println!(
                "surface recall {:.4}  noise removed {:.4}  precision {:.4}",
                m.surface_recall, m.noise_removed, m.precision
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Contaminate(a) => contaminate_cmd(a),
        Command::Sample(a) => sample(a),
        Command::OctreeStats(a) => octree_stats(a),
        Command::MeshPost(a) => mesh_post(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
