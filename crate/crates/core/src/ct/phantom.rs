use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::scalar::Real;
use crate::shape::Shape;

/// Piecewise constant attenuation map: a background value and shapes painted
/// in order, later shapes overwriting earlier ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom<T> {
    pub background: T,
    pub layers: Vec<(T, Shape<T>)>,
}

impl<T: Real> Phantom<T> {
    pub fn render(&self, grid: &Grid<T>) -> ScalarField<T> {
        ScalarField::from_fn(*grid, |p| {
            self.layers.iter().rev().find(|(_, s)| s.contains(p)).map_or(self.background, |(v, _)| *v)
        })
    }

    /// `background V` followed by `shape MU <shape record>` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("background {}\n", self.background);
        for (v, s) in &self.layers {
            writeln!(out, "shape {v} {s}").expect("string write");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut background = None;
        let mut layers = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
            let (key, rest) = line.split_once(' ').ok_or_else(|| err("expected a keyword and a value"))?;
            match key {
                "background" => background = Some(rest.trim().parse::<T>().map_err(|_| err("bad background value"))?),
                "shape" => {
                    let (mu, record) = rest.trim().split_once(' ').ok_or_else(|| err("expected `shape MU RECORD`"))?;
                    let mu = mu.parse::<T>().map_err(|_| err("bad attenuation"))?;
                    let shape: Shape<T> = record.parse().map_err(|e: Error| err(&e.to_string()))?;
                    layers.push((mu, shape));
                }
                _ => return Err(err("unknown keyword")),
            }
        }
        let background = background.ok_or(Error::Parse { line: 0, msg: "missing background line".into() })?;
        Ok(Self { background, layers })
    }
}
