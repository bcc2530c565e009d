use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{dissimilarity, Grid, RegionMask, ScalarField};
use crate::segmentation::{Image, RegionStats, SegmentationProblem};
use crate::shape::rasterize;
use crate::solver::active_count;

use super::config::{parse_record, ExperimentConfig, SegmentSpec};
use super::{
    build_dictionary, coefficients_csv, finish, initial_alpha, output_dir, stream, write_text, RunSummary, INIT_STREAM,
    MASK_STREAM, NOISE_STREAM,
};

/// Ground truth mask and the noisy, partially observed image built from `spec.truth`.
pub fn synthetic_image(spec: &SegmentSpec, grid: &Grid<f64>, seed: u64) -> Result<(RegionMask<f64>, Image<f64>)> {
    let truth = spec
        .truth
        .iter()
        .try_fold(RegionMask::empty(*grid), |acc, r| acc.union(&rasterize(&parse_record(r)?, grid)?))?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream(seed, NOISE_STREAM));
    let values = truth
        .values()
        .iter()
        .map(|&inside| {
            let clean = if inside { spec.foreground } else { spec.background };
            let z: f64 = StandardNormal.sample(&mut rng);
            clean + spec.noise * z
        })
        .collect();
    let image = Image::fully_observed(ScalarField::from_values(*grid, values)?)?;
    let image = image.drop_pixels(spec.missing, stream(seed, MASK_STREAM))?;
    Ok((truth, image))
}

/// Image intensities on observed pixels, zero on missing ones and white on the
/// boundary of `mask`.
fn overlay(image: &Image<f64>, mask: &RegionMask<f64>) -> Vec<u8> {
    let grid = image.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let obs: Vec<f64> = image.observed().indices().map(|k| image.pixels().values()[k]).collect();
    let lo = obs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let m = mask.values();
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            let edge = m[k]
                && (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny || !m[k - 1] || !m[k + 1] || !m[k - nx] || !m[k + nx]);
            if edge {
                255
            } else if image.observed().values()[k] {
                (32.0 + 191.0 * (image.pixels().values()[k] - lo) / span).round() as u8
            } else {
                0
            }
        })
        .collect()
}

pub fn run_segmentation(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let spec = cfg.segment.as_ref().ok_or_else(|| Error::Config("missing [segment] section".into()))?;
    let grid = cfg.grid.build()?;
    let (truth, image) = match &spec.image {
        Some(path) => {
            let mask = spec.mask.as_ref().map(|m| cfg.resolve(m));
            let image = Image::load_pgm(grid, &cfg.resolve(path), mask.as_deref())?;
            let image = if spec.missing > 0.0 { image.drop_pixels(spec.missing, stream(cfg.seed, MASK_STREAM))? } else { image };
            (None, image)
        }
        None => {
            let (truth, image) = synthetic_image(spec, &grid, cfg.seed)?;
            (Some(truth), image)
        }
    };
    let dict = build_dictionary(&cfg.dictionary, grid, &cfg.base_dir)?;
    let n = dict.len();

    let observed: Vec<f64> = image.observed().indices().map(|k| image.pixels().values()[k]).collect();
    let hi = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = observed.iter().copied().fold(f64::INFINITY, f64::min);
    let observed_area = image.observed().area();
    let alpha0 = initial_alpha(&spec.init, n, stream(cfg.seed, INIT_STREAM));
    let mut problem = SegmentationProblem::new(image, dict, spec.eps, RegionStats { u_in: hi, u_ex: lo })?
        .with_stats_update_period(spec.stats_update_period)?;
    let mut stats = problem.update_stats(&alpha0)?;
    if (stats.u_in - stats.u_ex) * (spec.foreground - spec.background) < 0.0 {
        std::mem::swap(&mut stats.u_in, &mut stats.u_ex);
    }
    problem.set_stats(stats);

    let mut params = cfg.solver.params(n, problem.dictionary().lift());
    if let (None, Some(kappa)) = (cfg.solver.sigma, cfg.solver.discrepancy) {
        params.sigma = kappa * spec.noise * observed_area.sqrt();
    }
    let (alpha, trace) = problem.segment(&alpha0, &params)?;

    let mask = problem.segmentation_mask(&alpha)?;
    let mut summary = RunSummary::with_trace(cfg, &trace, active_count(&alpha));
    summary.metrics.insert("sigma".into(), params.sigma);
    summary.metrics.insert("u_in".into(), problem.stats().u_in);
    summary.metrics.insert("u_ex".into(), problem.stats().u_ex);
    summary.metrics.insert("observed_fraction".into(), problem.image().observed().count() as f64 / grid.len() as f64);
    if let Some(truth) = &truth {
        summary.metrics.insert("iou".into(), mask.iou(truth)?);
        summary.metrics.insert("dissimilarity".into(), dissimilarity(&mask, truth)?);
    }

    let dir = output_dir(cfg)?;
    write_text(&mut summary, &dir, "coefficients", "coefficients.csv", &coefficients_csv(problem.dictionary(), &alpha))?;
    write_text(&mut summary, &dir, "trace", "trace.csv", &trace.to_csv())?;
    let path = dir.join("mask.pgm");
    mask.write_pgm(&path)?;
    summary.artifacts.insert("mask".into(), path);
    let path = dir.join("overlay.pgm");
    crate::pgm::write_u8(&path, grid.nx(), grid.ny(), &overlay(problem.image(), &mask))?;
    summary.artifacts.insert("overlay".into(), path);
    if let Some(truth) = &truth {
        let path = dir.join("truth.pgm");
        truth.write_pgm(&path)?;
        summary.artifacts.insert("truth".into(), path);
    }
    finish(summary, &dir, started)
}
