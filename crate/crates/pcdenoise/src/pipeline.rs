//! The denoising pipeline: clustering, density filtering and smoothing.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use pcdenoise_core::clustering::{build_leaf_graph, connected_components, k_largest_cells};
use pcdenoise_core::density::{prune_very_noisy, PruneGuard};
use pcdenoise_core::octree::{uniformize, Octree, OctreeConfig, UniformLeafGrid, DEFAULT_MAX_DEPTH};
use pcdenoise_core::smoothing::{
    build_representatives, select_neighbors, smooth, RepresentativeSource, SmoothingConfig,
};
use pcdenoise_core::{Label, PointCloud};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Used only by mesh postprocessing; kept here so one config describes a run.
    pub epsilon: f64,
    pub k: usize,
    /// Recorded in the report. No stage draws random numbers.
    pub seed: u64,
    pub max_iterations: Option<usize>,
    /// Take representatives from the uniformized grid instead of the
    /// adaptive octree.
    pub uniform_q: bool,
    pub max_depth: u32,
    pub clustering: bool,
    pub density_filter: bool,
    pub smoothing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 2.0,
            lambda: 0.25,
            gamma: 40.0,
            epsilon: 10.0,
            k: 1,
            seed: 0,
            max_iterations: None,
            uniform_q: false,
            max_depth: DEFAULT_MAX_DEPTH,
            clustering: true,
            density_filter: true,
            smoothing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Input,
    Octree,
    Uniformize,
    Clustering,
    DensityFilter,
    Smoothing,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::Octree => "octree",
            Stage::Uniformize => "uniformize",
            Stage::Clustering => "clustering",
            Stage::DensityFilter => "density-filter",
            Stage::Smoothing => "smoothing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    pub source: pcdenoise_core::Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for pcdenoise_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub surface: usize,
    pub white_noise: usize,
    pub outlier: usize,
}

impl LabelCounts {
    pub fn of(cloud: &PointCloud) -> Option<LabelCounts> {
        cloud.labels()?;
        Some(LabelCounts {
            surface: cloud.count_label(Label::Surface),
            white_noise: cloud.count_label(Label::WhiteNoise),
            outlier: cloud.count_label(Label::Outlier),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRoundReport {
    pub cells_before: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: usize,
    pub removed_cells: usize,
    pub removed_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub id: usize,
    pub cells: usize,
    pub points: usize,
    pub filtered_points: usize,
    pub density_rounds: Vec<DensityRoundReport>,
    /// `"no-cells-removed"` or `"too-few-cells"` when a guard stopped the loop.
    pub density_guard: Option<String>,
    pub final_mean: Option<f64>,
    pub final_std_dev: Option<f64>,
    pub representatives: usize,
    pub iteration_cap: usize,
    pub iterations: usize,
    pub last_moved: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimes {
    pub octree: f64,
    pub uniformize: f64,
    pub clustering: f64,
    pub density_filter: f64,
    pub smoothing: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    /// |P|
    pub input_points: usize,
    /// |P'|
    pub clustered_points: usize,
    /// |P''|
    pub filtered_points: usize,
    /// |Q|
    pub representatives: usize,
    /// |P_f|
    pub output_points: usize,
    pub octree_leaves: usize,
    pub octree_depth: u32,
    pub mean_leaf_size: f64,
    pub cell_size: f64,
    pub grid_level: u32,
    pub occupied_cells: usize,
    pub component_count: usize,
    pub component_cells: Vec<usize>,
    pub components: Vec<ComponentReport>,
    pub labels_input: Option<LabelCounts>,
    pub labels_clustered: Option<LabelCounts>,
    pub labels_filtered: Option<LabelCounts>,
    pub notes: Vec<String>,
    /// Seconds per stage.
    pub times: StageTimes,
}

/// Pipeline output: `P_f`, the component each output point came from, and
/// the intermediate clouds.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub points: PointCloud,
    pub component_ids: Vec<u32>,
    pub clustered: PointCloud,
    pub filtered: PointCloud,
    pub report: RunReport,
}

fn check_config(config: &PipelineConfig) -> pcdenoise_core::Result<()> {
    use pcdenoise_core::Error::InvalidParameter;
    if !(config.alpha >= 1.0) || !config.alpha.is_finite() {
        return Err(InvalidParameter {
            name: "alpha",
            reason: "must be a finite value >= 1",
        });
    }
    if !(config.beta >= 1.0) || !config.beta.is_finite() {
        return Err(InvalidParameter {
            name: "beta",
            reason: "must be a finite value >= 1",
        });
    }
    if config.k == 0 {
        return Err(InvalidParameter {
            name: "k",
            reason: "must be at least 1",
        });
    }
    smoothing_config(config).validate()
}

fn smoothing_config(config: &PipelineConfig) -> SmoothingConfig {
    SmoothingConfig {
        lambda: config.lambda,
        gamma: config.gamma,
        max_iterations: config.max_iterations,
    }
}

fn guard_name(g: PruneGuard) -> String {
    match g {
        PruneGuard::NoCellsRemoved => "no-cells-removed",
        PruneGuard::TooFewCells => "too-few-cells",
    }
    .to_string()
}

/// Runs every enabled stage. With `k > 1`, density filtering and smoothing
/// run on each component separately and the results are concatenated in
/// component order.
pub fn run_pipeline(cloud: &PointCloud, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let start = Instant::now();
    check_config(config).at(Stage::Input)?;
    cloud.validate().at(Stage::Input)?;
    if cloud.is_empty() {
        return Err(PipelineError {
            stage: Stage::Input,
            source: pcdenoise_core::Error::EmptyInput,
        });
    }
    let octree_config = OctreeConfig {
        max_depth: config.max_depth,
    };
    let mut times = StageTimes::default();
    let mut notes = Vec::new();

    let t = Instant::now();
    let tree = Octree::build_with(cloud, &octree_config).at(Stage::Octree)?;
    let mean_leaf_size = tree.mean_leaf_size().at(Stage::Octree)?;
    times.octree = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let grid = uniformize(&tree, cloud, config.alpha).at(Stage::Uniformize)?;
    times.uniformize = t.elapsed().as_secs_f64();
    if grid.cell_size() > config.alpha * mean_leaf_size {
        notes.push("root cube is already finer than alpha * l_avg; the grid is the root cell".into());
    }
    let octree_leaves = tree.leaf_count();
    let octree_depth = tree.depth();
    drop(tree);

    let t = Instant::now();
    let labeling = connected_components(&build_leaf_graph(&grid));
    let groups: Vec<Vec<usize>> = if config.clustering {
        if config.k >= labeling.component_count() && labeling.component_count() > 0 {
            notes.push(format!(
                "k = {} covers all {} components; every point passes clustering",
                config.k,
                labeling.component_count()
            ));
        }
        k_largest_cells(&labeling, config.k)
    } else {
        notes.push("clustering disabled; all cells form one group".into());
        vec![(0..grid.len()).collect()]
    };
    let component_grids: Vec<UniformLeafGrid> = groups.iter().map(|g| grid.subgrid(g)).collect();
    let clustered_idx = sorted_indices(&component_grids);
    let clustered = cloud.select(&clustered_idx);
    times.clustering = t.elapsed().as_secs_f64();

    let mut components = Vec::new();
    let mut filtered_grids = Vec::new();
    let t = Instant::now();
    for (id, cg) in component_grids.iter().enumerate() {
        let mut rep = ComponentReport {
            id,
            cells: cg.len(),
            points: cg.point_count(),
            filtered_points: cg.point_count(),
            density_rounds: Vec::new(),
            density_guard: None,
            final_mean: None,
            final_std_dev: None,
            representatives: 0,
            iteration_cap: 0,
            iterations: 0,
            last_moved: 0,
        };
        if config.density_filter {
            let out = prune_very_noisy(cg, config.beta).at(Stage::DensityFilter)?;
            rep.density_rounds = out
                .rounds
                .iter()
                .map(|r| DensityRoundReport {
                    cells_before: r.cells_before,
                    mean: r.mean,
                    std_dev: r.std_dev,
                    threshold: r.threshold,
                    removed_cells: r.removed_cells,
                    removed_points: r.removed_points,
                })
                .collect();
            rep.density_guard = out.guard.map(guard_name);
            rep.final_mean = Some(out.mean);
            rep.final_std_dev = Some(out.std_dev);
            rep.filtered_points = out.grid.point_count();
            filtered_grids.push(out.grid);
        } else {
            filtered_grids.push(cg.clone());
        }
        components.push(rep);
    }
    if !config.density_filter {
        notes.push("density filter disabled".into());
    }
    let filtered = cloud.select(&sorted_indices(&filtered_grids));
    times.density_filter = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut out_points = Vec::new();
    let mut component_ids = Vec::new();
    let source = if config.uniform_q {
        RepresentativeSource::UniformGrid { alpha: config.alpha }
    } else {
        RepresentativeSource::AdaptiveOctree
    };
    let smoothing = smoothing_config(config);
    for (rep, fg) in components.iter_mut().zip(&filtered_grids) {
        let part = cloud.select(&fg.point_indices());
        if part.is_empty() {
            continue;
        }
        if config.smoothing {
            let mut set = build_representatives(&part, source, &octree_config).at(Stage::Smoothing)?;
            select_neighbors(&mut set);
            let out = smooth(&set, &smoothing).at(Stage::Smoothing)?;
            rep.representatives = set.len();
            rep.iteration_cap = out.cap;
            rep.iterations = out.iterations;
            rep.last_moved = out.last_moved;
            component_ids.extend(std::iter::repeat_n(rep.id as u32, out.positions.len()));
            out_points.extend(out.positions);
        } else {
            rep.representatives = part.len();
            component_ids.extend(std::iter::repeat_n(rep.id as u32, part.len()));
            out_points.extend_from_slice(part.points());
        }
    }
    if !config.smoothing {
        notes.push("smoothing disabled; output is the filtered cloud".into());
    }
    times.smoothing = t.elapsed().as_secs_f64();
    times.total = start.elapsed().as_secs_f64();

    let representatives = components.iter().map(|c| c.representatives).sum();
    let report = RunReport {
        config: config.clone(),
        input_points: cloud.len(),
        clustered_points: clustered.len(),
        filtered_points: filtered.len(),
        representatives,
        output_points: out_points.len(),
        octree_leaves,
        octree_depth,
        mean_leaf_size,
        cell_size: grid.cell_size(),
        grid_level: grid.level(),
        occupied_cells: grid.len(),
        component_count: labeling.component_count(),
        component_cells: labeling.sizes.clone(),
        components,
        labels_input: LabelCounts::of(cloud),
        labels_clustered: LabelCounts::of(&clustered),
        labels_filtered: LabelCounts::of(&filtered),
        notes,
        times,
    };
    Ok(PipelineOutput {
        points: PointCloud::new(out_points),
        component_ids,
        clustered,
        filtered,
        report,
    })
}

fn sorted_indices(grids: &[UniformLeafGrid]) -> Vec<u32> {
    let mut idx: Vec<u32> = grids.iter().flat_map(|g| g.point_indices()).collect();
    idx.sort_unstable();
    idx
}
