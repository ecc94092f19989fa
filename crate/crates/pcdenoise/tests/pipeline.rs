mod common;

use pcdenoise::pipeline::Stage;
use pcdenoise::{run_pipeline, PipelineConfig};
use pcdenoise_core::contamination::{sample_sphere_even, WhiteNoise};
use pcdenoise_core::{Label, Point3, PointCloud};

#[test]
fn clean_sphere_passes_untouched() {
    let cloud = sample_sphere_even(20_000, Point3::ORIGIN, 1.0);
    let out = run_pipeline(&cloud, &PipelineConfig::default()).unwrap();
    let r = &out.report;
    assert_eq!(r.component_count, 1);
    assert_eq!(out.clustered, cloud);
    assert_eq!(out.filtered, cloud);
    assert!(r.components[0].density_rounds.is_empty());
    assert_eq!(r.components[0].density_guard, None);
    let (m, sd) = (r.components[0].final_mean.unwrap(), r.components[0].final_std_dev.unwrap());
    assert!(2.0 * sd <= m);
}

#[test]
fn contaminated_sphere_loses_noise() {
    let cloud = common::contaminated_sphere(20_000, WhiteNoise::Count(5000), 0.0, 1);
    let out = run_pipeline(&cloud, &PipelineConfig::default()).unwrap();
    let r = &out.report;
    assert!(r.input_points > r.clustered_points);
    assert!(r.components.iter().all(|c| c.density_guard.is_none()));
    let before = r.labels_input.unwrap();
    let after = r.labels_clustered.unwrap();
    assert_eq!(before.surface, 20_000);
    assert!(after.white_noise < before.white_noise);

    // Counts in the report agree with a recount.
    assert_eq!(r.clustered_points, out.clustered.len());
    assert_eq!(r.filtered_points, out.filtered.len());
    assert_eq!(r.output_points, out.points.len());
    assert_eq!(after.surface, common::count(&out.clustered, Label::Surface));
    assert_eq!(r.labels_filtered.unwrap().outlier, common::count(&out.filtered, Label::Outlier));
    assert_eq!(r.component_cells.iter().sum::<usize>(), r.occupied_cells);
    assert_eq!(r.components[0].cells, r.component_cells[0]);
    assert_eq!(out.component_ids.len(), out.points.len());
}

#[test]
fn oversized_k_passes_everything_with_a_note() {
    let cloud = common::contaminated_sphere(3000, WhiteNoise::Count(300), 0.0, 2);
    let config = PipelineConfig { k: 1_000_000, density_filter: false, smoothing: false, ..PipelineConfig::default() };
    let out = run_pipeline(&cloud, &config).unwrap();
    assert_eq!(out.clustered, cloud);
    assert!(out.report.notes.iter().any(|n| n.contains("covers all")));
}

#[test]
fn multiple_components_are_tagged() {
    let mut pts = sample_sphere_even(5000, Point3::ORIGIN, 1.0).points().to_vec();
    pts.extend(sample_sphere_even(3000, Point3::new(5.0, 0.0, 0.0), 0.7).points());
    let out = run_pipeline(&PointCloud::new(pts), &PipelineConfig { k: 2, ..PipelineConfig::default() }).unwrap();
    assert_eq!(out.report.components.len(), 2);
    let big = out.component_ids.iter().filter(|&&c| c == 0).count();
    assert_eq!(big, out.report.components[0].representatives);
    assert!(out.points.points().iter().zip(&out.component_ids).all(|(p, &c)| (c == 0) == (p.x < 2.5)));
}

#[test]
fn runs_are_deterministic() {
    let cloud = common::contaminated_sphere(10_000, WhiteNoise::Count(2000), 0.005, 3);
    let a = run_pipeline(&cloud, &PipelineConfig::default()).unwrap();
    let b = run_pipeline(&cloud, &PipelineConfig::default()).unwrap();
    assert_eq!(a.points, b.points);
    assert_eq!(a.filtered, b.filtered);
}

#[test]
fn errors_name_their_stage() {
    let e = run_pipeline(&PointCloud::new(vec![]), &PipelineConfig::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Input);
    let bad = PipelineConfig { alpha: 0.5, ..PipelineConfig::default() };
    let cloud = common::mixed_cloud(0, 500);
    let e = run_pipeline(&cloud, &bad).unwrap_err();
    assert!(e.to_string().starts_with("input"), "{e}");
    let nan = PointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)]);
    assert_eq!(run_pipeline(&nan, &PipelineConfig::default()).unwrap_err().stage, Stage::Input);
    let shallow = PipelineConfig { max_depth: 2, ..PipelineConfig::default() };
    let e = run_pipeline(&cloud, &shallow).unwrap_err();
    assert_eq!(e.stage, Stage::Octree);
    assert!(e.to_string().contains("depth"));
}

#[test]
fn smoothing_brings_points_closer_to_the_sphere() {
    let cloud = common::contaminated_sphere(10_000, WhiteNoise::Count(2000), 0.005, 4);
    let out = run_pipeline(&cloud, &PipelineConfig::default()).unwrap();
    let rms = |pc: &PointCloud| {
        (pc.points().iter().map(|p| (p.norm() - 1.0).powi(2)).sum::<f64>() / pc.len() as f64).sqrt()
    };
    assert!(rms(&out.points) < rms(&cloud));
}
