//! Dictionary generation from a placement lattice.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::knoll::Dictionary;
use crate::shape::Shape;

use super::config::{parse_record, DictionarySpec, ExperimentConfig};
use super::{finish, output_dir, write_text, RunSummary};

/// Unit-scale prototype centered at the origin.
pub fn builtin_prototype(name: &str) -> Result<Shape<f64>> {
    let h = 3f64.sqrt() / 3.0;
    Ok(match name {
        "circle" => Shape::circle(0.0, 0.0, 1.0),
        "square" => Shape::rectangle(0.0, 0.0, 1.0, 1.0),
        "triangle" => Shape::triangle([-1.0, -h], [1.0, -h], [0.0, 2.0 * h]),
        "ellipse" => Shape::ellipse(0.0, 0.0, 1.0, 0.5, 0.0),
        other => return Err(Error::Config(format!("unknown prototype {other:?}"))),
    })
}

/// Shapes and labels of the dictionary described by `spec`, in build order:
/// explicit shapes, then prototypes x sizes x rotations x placements.
pub fn dictionary_shapes(spec: &DictionarySpec) -> Result<Vec<(Shape<f64>, String)>> {
    let mut protos: Vec<(String, Shape<f64>)> = Vec::new();
    for name in &spec.shapes {
        protos.push((name.clone(), builtin_prototype(name)?));
    }
    for p in &spec.prototypes {
        protos.push((p.label.clone(), p.shape()?));
    }
    let mut points = spec.points.clone();
    if let Some(lattice) = &spec.lattice {
        points.extend(lattice.points()?);
    }
    if !protos.is_empty() && points.is_empty() {
        return Err(Error::Config("prototypes need a lattice or explicit points".into()));
    }

    let count = spec.explicit.len() + protos.len() * spec.sizes.len() * spec.rotations.len() * points.len();
    if count > spec.cap {
        return Err(Error::DictionaryTooLarge { count, cap: spec.cap });
    }
    if count == 0 {
        return Err(Error::Config("dictionary spec produces no shapes".into()));
    }

    let mut shapes = Vec::with_capacity(count);
    for e in &spec.explicit {
        shapes.push((parse_record(&e.record)?, e.label.clone()));
    }
    for (name, proto) in &protos {
        for &size in &spec.sizes {
            for &deg in &spec.rotations {
                let turned = proto.rotated(deg.to_radians());
                for &[x, y] in &points {
                    let label = format!("{name}@({},{})s{size}r{deg}", tidy(x), tidy(y));
                    shapes.push((turned.placed([x, y], size), label));
                }
            }
        }
    }
    Ok(shapes)
}

/// Rounds away lattice arithmetic noise such as `0.3600000000000001`.
fn tidy(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Builds the dictionary on `grid`, or loads `spec.file` (resolved against `base`).
pub fn build_dictionary(spec: &DictionarySpec, grid: Grid<f64>, base: &Path) -> Result<Dictionary<f64>> {
    if let Some(file) = &spec.file {
        let path = if file.is_absolute() { file.clone() } else { base.join(file) };
        let dict = Dictionary::load(&path)?;
        if *dict.grid() != grid {
            return Err(Error::GridMismatch);
        }
        if dict.len() > spec.cap {
            return Err(Error::DictionaryTooLarge { count: dict.len(), cap: spec.cap });
        }
        return Ok(dict);
    }
    Dictionary::build(grid, spec.lift, dictionary_shapes(spec)?)
}

/// Builds the configured dictionary and writes it as `dictionary.txt`.
pub fn run_build_dict(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let grid = cfg.grid.build()?;
    let dict = build_dictionary(&cfg.dictionary, grid, &cfg.base_dir)?;
    let dir = output_dir(cfg)?;
    let mut summary = RunSummary::new(cfg);
    summary.metrics.insert("knolls".into(), dict.len() as f64);
    write_text(&mut summary, &dir, "dictionary", "dictionary.txt", &dict.to_text())?;
    finish(summary, &dir, started)
}
