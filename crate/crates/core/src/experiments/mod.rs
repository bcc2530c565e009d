//! Experiment drivers: configuration, dictionary generation, runs and artifacts.

mod compose;
mod config;
mod ct;
mod dictionary;
mod segment;
mod summary;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use compose::{run_compose_demo, target_mask};
pub use config::{
    ComposeSpec, CtModel, CtSpec, DictionarySpec, ExperimentConfig, ExperimentKind, GridSpec, InitSpec, LabeledShape,
    Lattice, PhantomLayer, SegmentSpec, SolverSpec,
};
pub use ct::{ct_phantom, run_ct, run_ct_recon, run_ct_sim};
pub use dictionary::{build_dictionary, builtin_prototype, dictionary_shapes, run_build_dict};
pub use segment::{run_segmentation, synthetic_image};
pub use summary::RunSummary;

use crate::error::Result;
use crate::knoll::Dictionary;
use crate::segmentation::random_init;

/// Offsets keeping the seeded streams of one run independent.
pub(crate) const NOISE_STREAM: u64 = 0;
pub(crate) const MASK_STREAM: u64 = 1;
pub(crate) const INIT_STREAM: u64 = 2;

pub(crate) fn stream(seed: u64, offset: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(offset)
}

/// Initial coefficients for a dictionary of `n` knolls.
pub fn initial_alpha(spec: &InitSpec, n: usize, seed: u64) -> Vec<f64> {
    let mut alpha = vec![spec.fill; n];
    if spec.values.is_empty() {
        for (a, r) in alpha.iter_mut().zip(random_init::<f64>(n, spec.fraction, seed)) {
            if r != 0.0 {
                *a = r;
            }
        }
    } else {
        for &(i, v) in &spec.values {
            if i < n {
                alpha[i] = v;
            }
        }
    }
    alpha
}

/// `index,label,value`, one row per knoll.
pub fn coefficients_csv(dict: &Dictionary<f64>, alpha: &[f64]) -> String {
    let mut out = String::from("index,label,value\n");
    for (i, (k, a)) in dict.knolls().iter().zip(alpha).enumerate() {
        let _ = writeln!(out, "{i},\"{}\",{a:e}", k.label().replace('"', "\"\""));
    }
    out
}

pub(crate) fn output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.resolve(&cfg.out);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub(crate) fn write_text(summary: &mut RunSummary, dir: &Path, name: &str, file: &str, text: &str) -> Result<()> {
    let path = dir.join(file);
    std::fs::write(&path, text)?;
    summary.artifacts.insert(name.into(), path);
    Ok(())
}

/// Runs the experiment named by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    match cfg.kind {
        ExperimentKind::ComposeDemo => run_compose_demo(cfg),
        ExperimentKind::Segment => run_segmentation(cfg),
        ExperimentKind::Ct => run_ct(cfg),
    }
}

pub(crate) fn finish(mut summary: RunSummary, dir: &Path, started: Instant) -> Result<RunSummary> {
    summary.wall_time_s = started.elapsed().as_secs_f64();
    summary.write(dir)?;
    Ok(summary)
}
