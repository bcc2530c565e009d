use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{dissimilarity, Grid, RegionMask, ScalarField};
use crate::segmentation::{Image, RegionStats, SegmentationProblem};
use crate::shape::rasterize;
use crate::solver::{active_count, solve_fixed, ACTIVE_THRESHOLD};

use super::config::{parse_record, ComposeSpec, ExperimentConfig};
use super::{build_dictionary, coefficients_csv, finish, initial_alpha, output_dir, stream, write_text, RunSummary, INIT_STREAM};

/// Union of the `include` shapes minus the union of the `exclude` shapes.
pub fn target_mask(spec: &ComposeSpec, grid: &Grid<f64>) -> Result<RegionMask<f64>> {
    let union = |records: &[String]| -> Result<RegionMask<f64>> {
        records.iter().try_fold(RegionMask::empty(*grid), |acc, r| acc.union(&rasterize(&parse_record(r)?, grid)?))
    };
    union(&spec.include)?.minus(&union(&spec.exclude)?)
}

/// Fits the dictionary to a binary target by segmenting the target itself.
pub fn run_compose_demo(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let spec = cfg.compose.as_ref().ok_or_else(|| Error::Config("missing [compose] section".into()))?;
    let grid = cfg.grid.build()?;
    let dict = build_dictionary(&cfg.dictionary, grid, &cfg.base_dir)?;
    let target = target_mask(spec, &grid)?;
    let pixels = ScalarField::from_values(grid, target.values().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())?;
    let problem =
        SegmentationProblem::new(Image::fully_observed(pixels)?, dict, spec.eps, RegionStats { u_in: 1.0, u_ex: 0.0 })?;
    let params = cfg.solver.params(problem.dictionary().len(), problem.dictionary().lift());
    let alpha0 = initial_alpha(&spec.init, problem.dictionary().len(), stream(cfg.seed, INIT_STREAM));
    let (alpha, trace) = solve_fixed(&problem, &alpha0, &params)?;

    let fitted = problem.segmentation_mask(&alpha)?;
    let mut summary = RunSummary::with_trace(cfg, &trace, active_count(&alpha));
    let positive = alpha.iter().filter(|&&a| a > ACTIVE_THRESHOLD).count();
    let negative = alpha.iter().filter(|&&a| a < -ACTIVE_THRESHOLD).count();
    summary.metrics.insert("positive".into(), positive as f64);
    summary.metrics.insert("negative".into(), negative as f64);
    summary.metrics.insert("dissimilarity".into(), dissimilarity(&fitted, &target)?);
    summary.metrics.insert("iou".into(), fitted.iou(&target)?);
    summary.metrics.insert("asym_l1".into(), crate::solver::asym_l1(&alpha, params.w));

    let dir = output_dir(cfg)?;
    write_text(&mut summary, &dir, "coefficients", "coefficients.csv", &coefficients_csv(problem.dictionary(), &alpha))?;
    write_text(&mut summary, &dir, "trace", "trace.csv", &trace.to_csv())?;
    let path = dir.join("target.pgm");
    target.write_pgm(&path)?;
    summary.artifacts.insert("target".into(), path);
    let path = dir.join("mask.pgm");
    fitted.write_pgm(&path)?;
    summary.artifacts.insert("mask".into(), path);
    finish(summary, &dir, started)
}
