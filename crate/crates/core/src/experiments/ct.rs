use std::time::Instant;

use crate::ct::{
    fbp_baseline, simulate_counts, Attenuation, CountData, CtProblem, Noise, PhaseLevels, Phantom, RadonOperator,
    RayGeometry,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::solver::{active_count, solve_fixed};

use super::config::{parse_record, CtModel, CtSpec, ExperimentConfig};
use super::{
    build_dictionary, coefficients_csv, finish, initial_alpha, output_dir, stream, write_text, RunSummary, INIT_STREAM,
    NOISE_STREAM,
};

fn spec(cfg: &ExperimentConfig) -> Result<&CtSpec> {
    cfg.ct.as_ref().ok_or_else(|| Error::Config("missing [ct] section".into()))
}

/// Phantom from the configured file, or from the inline layers.
pub fn ct_phantom(cfg: &ExperimentConfig) -> Result<Option<Phantom<f64>>> {
    let ct = spec(cfg)?;
    if let Some(path) = &ct.phantom_file {
        return Ok(Some(Phantom::from_text(&std::fs::read_to_string(cfg.resolve(path))?)?));
    }
    if ct.phantom.is_empty() {
        return Ok(None);
    }
    let layers = ct.phantom.iter().map(|l| Ok((l.mu, parse_record(&l.record)?))).collect::<Result<_>>()?;
    Ok(Some(Phantom { background: ct.background, layers }))
}

fn geometry(ct: &CtSpec, grid: &Grid<f64>) -> Result<RayGeometry<f64>> {
    let (x0, x1, y0, y1) = grid.extents();
    let reach = [x0, x1].iter().map(|x| x * x).fold(0.0, f64::max) + [y0, y1].iter().map(|y| y * y).fold(0.0, f64::max);
    let half_width = ct.half_width.unwrap_or(reach.sqrt() * 1.01);
    RayGeometry::equispaced(ct.angles, ct.rays, half_width)
}

fn noise(ct: &CtSpec) -> Noise {
    Noise { poisson: ct.poisson, gauss_pct: ct.gauss_pct }
}

fn write_field(summary: &mut RunSummary, dir: &std::path::Path, name: &str, field: &ScalarField<f64>) -> Result<()> {
    let path = dir.join(format!("{name}.pgm"));
    field.write_pgm(&path)?;
    summary.artifacts.insert(name.into(), path);
    write_text(summary, dir, &format!("{name}_csv"), &format!("{name}.csv"), &field.to_csv())
}

struct Scan {
    op: RadonOperator<f64>,
    data: CountData<f64>,
    truth: Option<ScalarField<f64>>,
}

fn scan(cfg: &ExperimentConfig, grid: Grid<f64>, from_file: bool) -> Result<Scan> {
    let ct = spec(cfg)?;
    let truth = ct_phantom(cfg)?.map(|p| p.render(&grid));
    if let (true, Some(path)) = (from_file, &ct.counts) {
        let data = CountData::from_csv(&std::fs::read_to_string(cfg.resolve(path))?)?;
        let op = RadonOperator::new(data.geometry.clone(), grid);
        return Ok(Scan { op, data, truth });
    }
    let truth = truth.ok_or_else(|| Error::Config("ct simulation needs a phantom".into()))?;
    let op = RadonOperator::new(geometry(ct, &grid)?, grid);
    let data = simulate_counts(&truth, &op, ct.lambda_t, noise(ct), stream(cfg.seed, NOISE_STREAM))?;
    Ok(Scan { op, data, truth: Some(truth) })
}

/// Simulates the configured scan and writes the counts, phantom and FBP image.
pub fn run_ct_sim(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let grid = cfg.grid.build()?;
    let Scan { data, truth, .. } = scan(cfg, grid, false)?;
    let mut summary = RunSummary::new(cfg);
    let dir = output_dir(cfg)?;
    write_text(&mut summary, &dir, "counts", "counts.csv", &data.to_csv())?;
    let fbp = fbp_baseline(&data, &grid)?;
    if let Some(truth) = &truth {
        write_field(&mut summary, &dir, "phantom", truth)?;
        summary.metrics.insert("rmse_fbp".into(), fbp.rmse(truth)?);
    }
    write_field(&mut summary, &dir, "fbp", &fbp)?;
    summary.metrics.insert("starved_rays".into(), data.counts.iter().filter(|&&c| c == 0.0).count() as f64);
    finish(summary, &dir, started)
}

fn reconstruct(cfg: &ExperimentConfig, from_file: bool) -> Result<RunSummary> {
    let started = Instant::now();
    let ct = spec(cfg)?;
    let grid = cfg.grid.build()?;
    let Scan { op, data, truth } = scan(cfg, grid, from_file)?;
    let dict = build_dictionary(&cfg.dictionary, grid, &cfg.base_dir)?;
    let lift = dict.lift();
    let (model, contrast) = match ct.model {
        CtModel::Single => (Attenuation::Single { dict, u_in: ct.u_in, u_ex: ct.u_ex }, (ct.u_in - ct.u_ex).abs()),
        CtModel::Two => {
            let levels = PhaseLevels { mu_a: ct.mu_a, mu_s: ct.mu_s, mu_b: ct.mu_b };
            (Attenuation::Two { dicts: [dict.clone(), dict], levels }, (ct.mu_b - ct.mu_a).abs())
        }
    };
    let problem = CtProblem::new(op, data.clone(), model, ct.eps)?;
    let n = crate::solver::ResidualProblem::dim(&problem);
    let mut params = cfg.solver.params(n, lift);
    if let (None, Some(kappa)) = (cfg.solver.sigma, cfg.solver.discrepancy) {
        params.sigma = kappa * data.noise_level(noise(ct));
    }
    let alpha0 = initial_alpha(&ct.init, n, stream(cfg.seed, INIT_STREAM));
    let (alpha, trace) =
        if ct.alternating { problem.reconstruct_alternating(&alpha0, &params)? } else { solve_fixed(&problem, &alpha0, &params)? };

    let mu = problem.mu_from_alpha(&alpha)?;
    let fbp = fbp_baseline(&data, &grid)?;
    let mut summary = RunSummary::with_trace(cfg, &trace, active_count(&alpha));
    summary.metrics.insert("sigma".into(), params.sigma);
    summary.metrics.insert("contrast".into(), contrast);
    if let Some(truth) = &truth {
        let rmse = mu.rmse(truth)?;
        summary.metrics.insert("rmse".into(), rmse);
        summary.metrics.insert("rmse_fbp".into(), fbp.rmse(truth)?);
        summary.metrics.insert("rmse_relative".into(), rmse / contrast);
    }

    let dir = output_dir(cfg)?;
    let mut coeffs = String::new();
    let parts = problem.split(&alpha)?;
    for (k, part) in parts.iter().enumerate() {
        let csv = coefficients_csv(problem.dictionary(k), part);
        if k == 0 {
            coeffs.push_str("phase,");
            coeffs.push_str(csv.lines().next().unwrap_or_default());
            coeffs.push('\n');
        }
        for line in csv.lines().skip(1) {
            coeffs.push_str(&format!("{k},{line}\n"));
        }
    }
    write_text(&mut summary, &dir, "coefficients", "coefficients.csv", &coeffs)?;
    write_text(&mut summary, &dir, "trace", "trace.csv", &trace.to_csv())?;
    if !from_file || ct.counts.is_none() {
        write_text(&mut summary, &dir, "counts", "counts.csv", &data.to_csv())?;
    }
    write_field(&mut summary, &dir, "mu", &mu)?;
    write_field(&mut summary, &dir, "fbp", &fbp)?;
    if let Some(truth) = &truth {
        write_field(&mut summary, &dir, "phantom", truth)?;
    }
    finish(summary, &dir, started)
}

/// Reconstructs from the configured counts file, simulating when none is given.
pub fn run_ct_recon(cfg: &ExperimentConfig) -> Result<RunSummary> {
    reconstruct(cfg, true)
}

/// Simulates the scan from the phantom and reconstructs it.
pub fn run_ct(cfg: &ExperimentConfig) -> Result<RunSummary> {
    reconstruct(cfg, false)
}
