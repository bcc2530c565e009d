//! Knolls, shape dictionaries and the parametric level set
//! `phi(x, alpha) = -c + sum_i alpha_i psi_i(x)`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{mask_from_positive_support, Grid, RegionMask, ScalarField};
use crate::scalar::Real;
use crate::shape::Shape;

pub const DEFAULT_LIFT: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 0.05;

/// Smoothed Heaviside with support width `2 eps`.
pub fn heaviside_eps<T: Real>(x: T, eps: T) -> T {
    if x > eps {
        T::one()
    } else if x < -eps {
        T::zero()
    } else {
        let half = T::of(0.5);
        let h = half + x / (T::of(2.0) * eps) + (T::PI() * x / eps).sin() / (T::of(2.0) * T::PI());
        // sin rounding leaves about 1e-17 of overshoot at the band edges
        h.max(T::zero()).min(T::one())
    }
}

/// Derivative of [`heaviside_eps`]; zero outside `[-eps, eps]`.
pub fn delta_eps<T: Real>(x: T, eps: T) -> T {
    if x.abs() > eps {
        T::zero()
    } else {
        let two_eps = T::of(2.0) * eps;
        T::one() / two_eps + (T::PI() * x / eps).cos() / two_eps
    }
}

/// Compactly supported nonnegative field for one dictionary shape, stored
/// sparsely over its support and normalized to a maximum of one.
#[derive(Debug, Clone, PartialEq)]
pub struct Knoll<T> {
    shape: Shape<T>,
    label: String,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Real> Knoll<T> {
    /// Builds `(rho + c)^+ / max`, `rho` being the signed distance of `shape`.
    pub fn new(shape: Shape<T>, grid: &Grid<T>, c: T, label: impl Into<String>) -> Result<Self> {
        if c <= T::zero() || !c.is_finite() {
            return Err(Error::InvalidParameter("lifting parameter c must be positive".into()));
        }
        shape.validate()?;
        let (lo, hi) = shape.bounding_box();
        let mut indices = Vec::new();
        let mut values = Vec::new();
        // outside the bounding box dilated by c the clipped field vanishes
        for j in 0..grid.ny() {
            let y = grid.y(j);
            if y < lo[1] - c || y > hi[1] + c {
                continue;
            }
            for i in 0..grid.nx() {
                let x = grid.x(i);
                if x < lo[0] - c || x > hi[0] + c {
                    continue;
                }
                let v = shape.signed_distance_at([x, y]) + c;
                if v > T::zero() {
                    indices.push(grid.index(i, j) as u32);
                    values.push(v);
                }
            }
        }
        if indices.is_empty() {
            return Err(Error::EmptyKnoll);
        }
        let peak = values.iter().copied().fold(T::zero(), T::max);
        values.iter_mut().for_each(|v| *v /= peak);
        Ok(Self { shape, label: label.into(), indices, values })
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    /// Support pixels (linear grid indices) and the field values there.
    pub fn sparse(&self) -> (&[u32], &[T]) {
        (&self.indices, &self.values)
    }
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn field(&self, grid: &Grid<T>) -> ScalarField<T> {
        let mut f = ScalarField::zeros(*grid);
        let vals = f.values_mut();
        for (&k, &v) in self.indices.iter().zip(&self.values) {
            vals[k as usize] = v;
        }
        f
    }

    pub fn support(&self, grid: &Grid<T>) -> RegionMask<T> {
        let mut m = RegionMask::empty(*grid);
        let vals = m.values_mut();
        for &k in &self.indices {
            vals[k as usize] = true;
        }
        m
    }

    /// `sum_p psi(p) * field[p]` over the support.
    #[inline]
    pub fn correlate(&self, field: &[T]) -> T {
        self.indices.iter().zip(&self.values).map(|(&k, &v)| v * field[k as usize]).sum()
    }
}

/// Ordered collection of knolls on a shared grid, with the lifting parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    grid: Grid<T>,
    c: T,
    knolls: Vec<Knoll<T>>,
}

const FORMAT_HEADER: &str = "knollset-dictionary";
const FORMAT_VERSION: &str = "1";

impl<T: Real> Dictionary<T> {
    /// Builds one knoll per `(shape, label)` pair, in order.
    pub fn build(grid: Grid<T>, c: T, shapes: Vec<(Shape<T>, String)>) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::InvalidParameter("dictionary needs at least one shape".into()));
        }
        if c <= T::zero() || !c.is_finite() {
            return Err(Error::InvalidParameter("lifting parameter c must be positive".into()));
        }
        for (_, label) in &shapes {
            if label.contains(['\t', '\n', '\r']) {
                return Err(Error::InvalidParameter(format!("label {label:?} contains tab or newline")));
            }
        }
        let knolls = shapes
            .into_par_iter()
            .map(|(shape, label)| Knoll::new(shape, &grid, c, label))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, c, knolls })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn lift(&self) -> T {
        self.c
    }
    pub fn len(&self) -> usize {
        self.knolls.len()
    }
    pub fn is_empty(&self) -> bool {
        self.knolls.is_empty()
    }
    pub fn knolls(&self) -> &[Knoll<T>] {
        &self.knolls
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: n });
        }
        Ok(())
    }

    /// Dense `sum_i w_i psi_i`, accumulated in knoll order.
    pub fn combine(&self, weights: &[T]) -> Result<Vec<T>> {
        self.check_len(weights.len())?;
        let mut out = vec![T::zero(); self.grid.len()];
        for (knoll, &w) in self.knolls.iter().zip(weights) {
            if w == T::zero() {
                continue;
            }
            for (&k, &v) in knoll.indices.iter().zip(&knoll.values) {
                out[k as usize] += w * v;
            }
        }
        Ok(out)
    }

    /// `[sum_p psi_i(p) field[p]]_i`, the transpose of [`Self::combine`].
    pub fn correlate(&self, field: &[T]) -> Result<Vec<T>> {
        if field.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), got: field.len() });
        }
        Ok(self.knolls.par_iter().map(|k| k.correlate(field)).collect())
    }

    /// `phi(x, alpha) = -c + sum_i alpha_i psi_i(x)`.
    pub fn assemble_level_set(&self, alpha: &[T]) -> Result<ScalarField<T>> {
        let mut values = self.combine(alpha)?;
        values.iter_mut().for_each(|v| *v -= self.c);
        ScalarField::from_values(self.grid, values)
    }

    /// Positive support of the assembled level set.
    pub fn shape_of(&self, alpha: &[T]) -> Result<RegionMask<T>> {
        Ok(mask_from_positive_support(&self.assemble_level_set(alpha)?))
    }

    /// Text serialization: header, grid, lift, then one shape record per line.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let (x0, x1, y0, y1) = g.extents();
        let mut out = format!("{FORMAT_HEADER} {FORMAT_VERSION}\n");
        let _ = writeln!(out, "grid {} {} {x0} {x1} {y0} {y1}", g.nx(), g.ny());
        let _ = writeln!(out, "c {}", self.c);
        let _ = writeln!(out, "count {}", self.len());
        for k in &self.knolls {
            let _ = writeln!(out, "knoll\t{}\t{}", k.label, k.shape);
        }
        out
    }

    /// Parses [`Self::to_text`] output and regenerates the knoll fields.
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));

        let (n, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FORMAT_HEADER) {
            return Err(err(n + 1, "missing dictionary header"));
        }
        match parts.next() {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(Error::Version(v.to_string())),
            None => return Err(err(n + 1, "missing version")),
        }

        let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
            let (n, line) = lines.next().ok_or_else(|| err(0, &format!("missing {key} line")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(err(n + 1, &format!("expected {key}")));
            }
            Ok((n + 1, it.map(str::to_string).collect()))
        };
        let num = |line: usize, s: &str| s.parse::<T>().map_err(|_| err(line, &format!("bad number {s:?}")));

        let (ln, g) = field("grid")?;
        if g.len() != 6 {
            return Err(err(ln, "grid expects nx ny x_min x_max y_min y_max"));
        }
        let nx = g[0].parse::<usize>().map_err(|_| err(ln, "bad nx"))?;
        let ny = g[1].parse::<usize>().map_err(|_| err(ln, "bad ny"))?;
        let grid = Grid::new(nx, ny, num(ln, &g[2])?, num(ln, &g[3])?, num(ln, &g[4])?, num(ln, &g[5])?)?;
        let (ln, cv) = field("c")?;
        let c = num(ln, cv.first().ok_or_else(|| err(ln, "missing c"))?)?;
        if c <= T::zero() {
            return Err(Error::InvalidParameter("lifting parameter c must be positive".into()));
        }
        let (ln, cnt) = field("count")?;
        let count = cnt.first().and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| err(ln, "bad count"))?;

        let mut shapes = Vec::with_capacity(count);
        for (n, line) in lines {
            let mut cols = line.splitn(3, '\t');
            if cols.next() != Some("knoll") {
                return Err(err(n + 1, "expected knoll record"));
            }
            let label = cols.next().ok_or_else(|| err(n + 1, "missing label"))?;
            let rec = cols.next().ok_or_else(|| err(n + 1, "missing shape"))?;
            let shape: Shape<T> = rec.parse().map_err(|e: Error| err(n + 1, &e.to_string()))?;
            shapes.push((shape, label.to_string()));
        }
        if shapes.len() != count {
            return Err(err(0, &format!("count says {count} knolls, found {}", shapes.len())));
        }
        if shapes.is_empty() {
            return Err(Error::InvalidParameter("dictionary needs at least one shape".into()));
        }
        Self::build(grid, c, shapes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::dissimilarity;
    use crate::shape::rasterize;

    fn grid() -> Grid<f64> {
        Grid::square(101, -1.5, 1.5).unwrap()
    }

    fn dict(shapes: Vec<Shape<f64>>) -> Dictionary<f64> {
        let named = shapes.into_iter().enumerate().map(|(i, s)| (s, format!("s{i}"))).collect();
        Dictionary::build(grid(), 0.1, named).unwrap()
    }

    #[test]
    fn heaviside_branches() {
        let eps = 0.05f64;
        assert_eq!(heaviside_eps(0.0, eps), 0.5);
        assert!((heaviside_eps(eps, eps) - 1.0).abs() < 1e-15);
        assert!(heaviside_eps(-eps, eps).abs() < 1e-15);
        assert_eq!(heaviside_eps(0.2, eps), 1.0);
        assert_eq!(heaviside_eps(-0.2, eps), 0.0);
        for k in 0..=2000 {
            let h = heaviside_eps(-0.06 + 0.12 * k as f64 / 2000.0, eps);
            assert!((0.0..=1.0).contains(&h));
        }
        assert_eq!(delta_eps(0.06, eps), 0.0);
    }

    #[test]
    fn delta_integrates_to_one() {
        // trapezoid oracle
        let eps = 0.05f64;
        let n = 20_000;
        let h = 2.0 * eps / n as f64;
        let mut s = 0.5 * (delta_eps(-eps, eps) + delta_eps(eps, eps));
        for k in 1..n {
            s += delta_eps(-eps + k as f64 * h, eps);
        }
        assert!((s * h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn delta_is_derivative_of_heaviside() {
        let eps = 0.05f64;
        for k in -9..=9 {
            let x = k as f64 * 0.005;
            let fd = (heaviside_eps(x + 1e-7, eps) - heaviside_eps(x - 1e-7, eps)) / 2e-7;
            assert!((fd - delta_eps(x, eps)).abs() < 1e-5);
        }
    }

    #[test]
    fn knoll_peak_and_clipping() {
        // on a grid with a sample exactly at the center
        let g = Grid::<f64>::square(101, -1.01, 1.01).unwrap();
        let shape = Shape::circle(0.0, 0.0, 0.9);
        let k = Knoll::new(shape.clone(), &g, 0.1, "c").unwrap();
        let f = k.field(&g);
        assert!((f.get(50, 50) - 1.0).abs() < 1e-12);
        assert!((f.max() - 1.0).abs() < 1e-12);
        for (idx, p) in g.points().enumerate() {
            if shape.signed_distance_at(p) <= -0.1 {
                assert_eq!(f.values()[idx], 0.0);
            }
        }
        let k2 = Knoll::new(shape, &g, 0.1, "c").unwrap();
        assert_eq!(k, k2);
        assert!(matches!(Knoll::new(Shape::circle(5.0, 5.0, 0.5), &g, 0.1, "x"), Err(Error::EmptyKnoll)));
    }

    #[test]
    fn zero_alpha_gives_constant_level_set() {
        let d = dict(vec![Shape::circle(0.0, 0.0, 0.5), Shape::circle(0.3, 0.0, 0.4)]);
        let phi = d.assemble_level_set(&[0.0, 0.0]).unwrap();
        assert!(phi.values().iter().all(|&v| v == -0.1));
        assert_eq!(d.shape_of(&[0.0, 0.0]).unwrap().count(), 0);
        assert!(matches!(d.assemble_level_set(&[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn single_knoll_level_sets() {
        let d = dict(vec![Shape::circle(0.0, 0.0, 0.6)]);
        let psi = d.knolls()[0].field(d.grid());
        let phi = d.assemble_level_set(&[0.2]).unwrap();
        // alpha = 2c puts the zero level set at psi = 1/2
        for (p, f) in psi.values().iter().zip(phi.values()) {
            assert!(((*f > 0.0) == (*p > 0.5)) || (p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn large_weight_reproduces_shape() {
        let s = Shape::rect_from_corners(-0.6, -0.4, 0.5, 0.7);
        let d = dict(vec![s.clone()]);
        let truth = rasterize(&s, d.grid()).unwrap();
        // weight equal to the unnormalized peak reproduces the shape exactly
        let peak = 0.55 + 0.1;
        let exact = d.shape_of(&[peak]).unwrap();
        assert!(dissimilarity(&exact, &truth).unwrap() <= 0.02 * truth.area());
    }

    #[test]
    fn union_of_two_circles() {
        let (a, b) = (Shape::circle(-0.3, 0.0, 0.5), Shape::circle(0.3, 0.0, 0.5));
        let d = dict(vec![a.clone(), b.clone()]);
        let g = d.grid();
        let union = rasterize(&a, g).unwrap().union(&rasterize(&b, g).unwrap()).unwrap();
        let m = d.shape_of(&[0.3 * 2.0, 0.3 * 2.0]).unwrap();
        assert!(dissimilarity(&m, &union).unwrap() <= 0.02 * union.area());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let d = dict(vec![
            Shape::circle(0.1, 0.0, 0.5),
            Shape::ellipse(-0.2, 0.3, 0.4, 0.2, 0.3),
            Shape::triangle([-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5]),
        ]);
        let back = Dictionary::<f64>::from_text(&d.to_text()).unwrap();
        assert_eq!(back, d);
        let alpha = [0.3, -1.2, 0.7];
        assert_eq!(back.assemble_level_set(&alpha).unwrap(), d.assemble_level_set(&alpha).unwrap());
    }

    #[test]
    fn malformed_files_rejected() {
        let d = dict(vec![Shape::circle(0.0, 0.0, 0.5)]);
        let text = d.to_text();
        let empty = text.lines().filter(|l| !l.starts_with("knoll\t")).collect::<Vec<_>>().join("\n").replace("count 1", "count 0");
        assert!(Dictionary::<f64>::from_text(&empty).is_err());
        assert!(Dictionary::<f64>::from_text(&text.replace("c 0.1", "c -0.1")).is_err());
        assert!(Dictionary::<f64>::from_text(&text.replace("c 0.1", "c 0")).is_err());
        assert!(matches!(
            Dictionary::<f64>::from_text(&text.replace("knollset-dictionary 1", "knollset-dictionary 9")),
            Err(Error::Version(_))
        ));
        assert!(Dictionary::<f64>::from_text("garbage").is_err());
    }
}
