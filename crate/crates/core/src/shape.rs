//! Shape primitives with exact signed distance functions.
//!
//! Signed distance is positive inside, negative outside and zero on the
//! boundary.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid, RegionMask, ScalarField};
use crate::scalar::Real;

pub type Point<T> = [T; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum Shape<T> {
    Circle { center: Point<T>, radius: T },
    Ellipse { center: Point<T>, radii: [T; 2], rotation: T },
    Rectangle { center: Point<T>, half: [T; 2], rotation: T },
    Triangle { vertices: [Point<T>; 3] },
    Polygon { vertices: Vec<Point<T>> },
}

#[inline]
fn sub<T: Real>(a: Point<T>, b: Point<T>) -> Point<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

/// Rotates `p - center` by `-angle`, giving coordinates in the shape frame.
#[inline]
fn to_local<T: Real>(p: Point<T>, center: Point<T>, angle: T) -> Point<T> {
    let d = sub(p, center);
    let (s, c) = angle.sin_cos();
    [c * d[0] + s * d[1], -s * d[0] + c * d[1]]
}

fn point_segment_distance<T: Real>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).max(T::zero()).min(T::one());
    let dx = ap[0] - t * ab[0];
    let dy = ap[1] - t * ab[1];
    dx.hypot(dy)
}

/// Crossing-number point-in-polygon test (interior only; boundary handled by
/// the caller through the distance).
fn crossing_inside<T: Real>(p: Point<T>, vs: &[Point<T>]) -> bool {
    let mut inside = false;
    let n = vs.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vs[i], vs[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_intersect<T: Real>(p1: Point<T>, p2: Point<T>, q1: Point<T>, q2: Point<T>) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    let on = |a: Point<T>, b: Point<T>, p: Point<T>, d: T| {
        d == z
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn shoelace<T: Real>(vs: &[Point<T>]) -> T {
    let n = vs.len();
    let twice: T = (0..n).map(|i| cross(vs[i], vs[(i + 1) % n])).sum();
    twice / T::of(2.0)
}

/// Distance from `(y0, y1)` (first quadrant) to the ellipse with semi-axes
/// `e0 >= e1`, by bisection on the Lagrange multiplier.
fn ellipse_distance_quadrant<T: Real>(e0: T, e1: T, y0: T, y1: T) -> T {
    let zero = T::zero();
    let one = T::one();
    if y1 > zero {
        if y0 > zero {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - one;
            if g == zero {
                return zero;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let n0 = r0 * z0;
            let mut s0 = z1 - one;
            let mut s1 = if g < zero { zero } else { n0.hypot(z1) - one };
            let mut s = zero;
            for _ in 0..300 {
                s = (s0 + s1) / T::of(2.0);
                if s == s0 || s == s1 {
                    break;
                }
                let ratio0 = n0 / (s + r0);
                let ratio1 = z1 / (s + one);
                let gs = ratio0 * ratio0 + ratio1 * ratio1 - one;
                if gs > zero {
                    s0 = s;
                } else if gs < zero {
                    s1 = s;
                } else {
                    break;
                }
            }
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + one);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (one - xde0 * xde0).max(zero).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

impl<T: Real> Shape<T> {
    pub fn circle(cx: T, cy: T, radius: T) -> Self {
        Shape::Circle { center: [cx, cy], radius }
    }
    pub fn ellipse(cx: T, cy: T, a: T, b: T, rotation: T) -> Self {
        Shape::Ellipse { center: [cx, cy], radii: [a, b], rotation }
    }
    /// Rectangle from its center and half extents.
    pub fn rectangle(cx: T, cy: T, hx: T, hy: T) -> Self {
        Shape::Rectangle { center: [cx, cy], half: [hx, hy], rotation: T::zero() }
    }
    /// Rectangle from corner coordinates.
    pub fn rect_from_corners(x0: T, y0: T, x1: T, y1: T) -> Self {
        let two = T::of(2.0);
        Self::rectangle((x0 + x1) / two, (y0 + y1) / two, (x1 - x0).abs() / two, (y1 - y0).abs() / two)
    }
    pub fn triangle(a: Point<T>, b: Point<T>, c: Point<T>) -> Self {
        Shape::Triangle { vertices: [a, b, c] }
    }
    pub fn polygon(vertices: Vec<Point<T>>) -> Self {
        Shape::Polygon { vertices }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Shape::Circle { .. } => "circle",
            Shape::Ellipse { .. } => "ellipse",
            Shape::Rectangle { .. } => "rect",
            Shape::Triangle { .. } => "triangle",
            Shape::Polygon { .. } => "polygon",
        }
    }

    fn vertices(&self) -> Option<&[Point<T>]> {
        match self {
            Shape::Triangle { vertices } => Some(vertices),
            Shape::Polygon { vertices } => Some(vertices),
            _ => None,
        }
    }

    /// Checks the shape is a non-degenerate closed bounded region.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        let degenerate = |msg: &str| Err(Error::DegenerateShape(format!("{}: {msg}", self.kind())));
        match self {
            Shape::Circle { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius <= T::zero() {
                    return degenerate("radius must be positive");
                }
            }
            Shape::Ellipse { center, radii, rotation } | Shape::Rectangle { center, half: radii, rotation } => {
                if !finite(center) || !finite(radii) || !rotation.is_finite() {
                    return degenerate("non-finite parameters");
                }
                if radii[0] <= T::zero() || radii[1] <= T::zero() {
                    return degenerate("extents must be positive");
                }
            }
            Shape::Triangle { .. } | Shape::Polygon { .. } => {
                let vs = self.vertices().unwrap();
                if vs.len() < 3 {
                    return degenerate("need at least 3 vertices");
                }
                if vs.iter().any(|v| !finite(v)) {
                    return degenerate("non-finite vertex");
                }
                let (lo, hi) = self.bounding_box();
                let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
                if shoelace(vs).abs() <= T::of(1e-12) * scale * scale || scale <= T::zero() {
                    return degenerate("zero area (collinear vertices)");
                }
                let n = vs.len();
                for i in 0..n {
                    let (a, b) = (vs[i], vs[(i + 1) % n]);
                    if a == b {
                        return degenerate("repeated vertex");
                    }
                    for j in i + 1..n {
                        // skip edges sharing a vertex
                        if j == i + 1 || (i == 0 && j == n - 1) {
                            continue;
                        }
                        if segments_intersect(a, b, vs[j], vs[(j + 1) % n]) {
                            return degenerate("self-intersecting boundary");
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point<T>, Point<T>) {
        match self {
            Shape::Circle { center, radius } => {
                ([center[0] - *radius, center[1] - *radius], [center[0] + *radius, center[1] + *radius])
            }
            Shape::Ellipse { center, radii, rotation } => {
                let (s, c) = rotation.sin_cos();
                let ex = (radii[0] * c).hypot(radii[1] * s);
                let ey = (radii[0] * s).hypot(radii[1] * c);
                ([center[0] - ex, center[1] - ey], [center[0] + ex, center[1] + ey])
            }
            Shape::Rectangle { center, half, rotation } => {
                let (s, c) = rotation.sin_cos();
                let ex = (half[0] * c).abs() + (half[1] * s).abs();
                let ey = (half[0] * s).abs() + (half[1] * c).abs();
                ([center[0] - ex, center[1] - ey], [center[0] + ex, center[1] + ey])
            }
            Shape::Triangle { .. } | Shape::Polygon { .. } => {
                let vs = self.vertices().unwrap();
                let mut lo = [T::infinity(); 2];
                let mut hi = [T::neg_infinity(); 2];
                for v in vs {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Exact area of the continuous shape.
    pub fn area(&self) -> T {
        match self {
            Shape::Circle { radius, .. } => T::PI() * *radius * *radius,
            Shape::Ellipse { radii, .. } => T::PI() * radii[0] * radii[1],
            Shape::Rectangle { half, .. } => T::of(4.0) * half[0] * half[1],
            _ => shoelace(self.vertices().unwrap()).abs(),
        }
    }

    /// Inside-or-on-boundary test.
    pub fn contains(&self, p: Point<T>) -> bool {
        match self {
            Shape::Circle { center, radius } => {
                let d = sub(p, *center);
                d[0] * d[0] + d[1] * d[1] <= *radius * *radius
            }
            Shape::Ellipse { center, radii, rotation } => {
                let q = to_local(p, *center, *rotation);
                let (u, v) = (q[0] / radii[0], q[1] / radii[1]);
                u * u + v * v <= T::one()
            }
            Shape::Rectangle { center, half, rotation } => {
                let q = to_local(p, *center, *rotation);
                q[0].abs() <= half[0] && q[1].abs() <= half[1]
            }
            _ => {
                let vs = self.vertices().unwrap();
                crossing_inside(p, vs) || self.boundary_distance(p) == T::zero()
            }
        }
    }

    fn boundary_distance(&self, p: Point<T>) -> T {
        let vs = self.vertices().expect("polygonal shape");
        let n = vs.len();
        (0..n).map(|i| point_segment_distance(p, vs[i], vs[(i + 1) % n])).fold(T::infinity(), T::min)
    }

    /// Signed Euclidean distance to the boundary at a single point.
    pub fn signed_distance_at(&self, p: Point<T>) -> T {
        match self {
            Shape::Circle { center, radius } => {
                let d = sub(p, *center);
                *radius - d[0].hypot(d[1])
            }
            Shape::Ellipse { center, radii, rotation } => {
                let q = to_local(p, *center, *rotation);
                let (mut e0, mut e1) = (radii[0], radii[1]);
                let (mut y0, mut y1) = (q[0].abs(), q[1].abs());
                if e0 < e1 {
                    std::mem::swap(&mut e0, &mut e1);
                    std::mem::swap(&mut y0, &mut y1);
                }
                let d = ellipse_distance_quadrant(e0, e1, y0, y1);
                if self.contains(p) {
                    d
                } else {
                    -d
                }
            }
            Shape::Rectangle { center, half, rotation } => {
                let q = to_local(p, *center, *rotation);
                let dx = q[0].abs() - half[0];
                let dy = q[1].abs() - half[1];
                let z = T::zero();
                let outside = dx.max(z).hypot(dy.max(z));
                let inside = dx.max(dy).min(z);
                -(outside + inside)
            }
            _ => {
                let d = self.boundary_distance(p);
                if crossing_inside(p, self.vertices().unwrap()) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Rotates a polygonal shape about its vertex centroid, or adds to the
    /// rotation angle of an ellipse or rectangle. Circles are unchanged.
    pub fn rotated(&self, angle: T) -> Self {
        match self {
            Shape::Circle { .. } => self.clone(),
            Shape::Ellipse { center, radii, rotation } => {
                Shape::Ellipse { center: *center, radii: *radii, rotation: *rotation + angle }
            }
            Shape::Rectangle { center, half, rotation } => {
                Shape::Rectangle { center: *center, half: *half, rotation: *rotation + angle }
            }
            _ => {
                let vs = self.vertices().unwrap();
                let n = T::of_usize(vs.len());
                let cx = vs.iter().map(|v| v[0]).sum::<T>() / n;
                let cy = vs.iter().map(|v| v[1]).sum::<T>() / n;
                let (s, c) = angle.sin_cos();
                let rot: Vec<Point<T>> = vs
                    .iter()
                    .map(|v| {
                        let (dx, dy) = (v[0] - cx, v[1] - cy);
                        [cx + c * dx - s * dy, cy + s * dx + c * dy]
                    })
                    .collect();
                match self {
                    Shape::Triangle { .. } => Shape::Triangle { vertices: [rot[0], rot[1], rot[2]] },
                    _ => Shape::Polygon { vertices: rot },
                }
            }
        }
    }

    /// Translates and uniformly scales about the origin: `p -> offset + scale * p`.
    pub fn placed(&self, offset: Point<T>, scale: T) -> Self {
        let tf = |p: Point<T>| [offset[0] + scale * p[0], offset[1] + scale * p[1]];
        match self {
            Shape::Circle { center, radius } => Shape::Circle { center: tf(*center), radius: *radius * scale },
            Shape::Ellipse { center, radii, rotation } => Shape::Ellipse {
                center: tf(*center),
                radii: [radii[0] * scale, radii[1] * scale],
                rotation: *rotation,
            },
            Shape::Rectangle { center, half, rotation } => Shape::Rectangle {
                center: tf(*center),
                half: [half[0] * scale, half[1] * scale],
                rotation: *rotation,
            },
            Shape::Triangle { vertices } => Shape::Triangle { vertices: vertices.map(tf) },
            Shape::Polygon { vertices } => Shape::Polygon { vertices: vertices.iter().map(|&v| tf(v)).collect() },
        }
    }
}

/// Pixels whose centers lie inside or on the boundary of the shape.
pub fn rasterize<T: Real>(shape: &Shape<T>, grid: &Grid<T>) -> Result<RegionMask<T>> {
    shape.validate()?;
    Ok(RegionMask::from_fn(*grid, |p| shape.contains(p)))
}

/// Exact signed distance sampled on the grid.
pub fn signed_distance<T: Real>(shape: &Shape<T>, grid: &Grid<T>) -> Result<ScalarField<T>> {
    shape.validate()?;
    Ok(ScalarField::from_fn(*grid, |p| shape.signed_distance_at(p)))
}

impl<T: Real> fmt::Display for Shape<T> {
    /// Whitespace separated record: kind followed by its numeric parameters.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Circle { center, radius } => write!(f, "circle {} {} {}", center[0], center[1], radius),
            Shape::Ellipse { center, radii, rotation } => {
                write!(f, "ellipse {} {} {} {} {}", center[0], center[1], radii[0], radii[1], rotation)
            }
            Shape::Rectangle { center, half, rotation } => {
                write!(f, "rect {} {} {} {} {}", center[0], center[1], half[0], half[1], rotation)
            }
            Shape::Triangle { vertices } => {
                write!(f, "triangle")?;
                for v in vertices {
                    write!(f, " {} {}", v[0], v[1])?;
                }
                Ok(())
            }
            Shape::Polygon { vertices } => {
                write!(f, "polygon {}", vertices.len())?;
                for v in vertices {
                    write!(f, " {} {}", v[0], v[1])?;
                }
                Ok(())
            }
        }
    }
}

impl<T: Real> FromStr for Shape<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse { line: 0, msg };
        let mut tokens = s.split_whitespace();
        let kind = tokens.next().ok_or_else(|| bad("empty shape record".into()))?;
        let nums: Vec<T> = tokens
            .map(|t| t.parse::<T>().map_err(|_| bad(format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        let expect = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(bad(format!("{kind} expects {n} numbers, got {}", nums.len())))
            }
        };
        let shape = match kind {
            "circle" => {
                expect(3)?;
                Shape::circle(nums[0], nums[1], nums[2])
            }
            "ellipse" => {
                expect(5)?;
                Shape::ellipse(nums[0], nums[1], nums[2], nums[3], nums[4])
            }
            "rect" => {
                expect(5)?;
                Shape::Rectangle { center: [nums[0], nums[1]], half: [nums[2], nums[3]], rotation: nums[4] }
            }
            "triangle" => {
                expect(6)?;
                Shape::triangle([nums[0], nums[1]], [nums[2], nums[3]], [nums[4], nums[5]])
            }
            "polygon" => {
                let n = nums.first().and_then(|v| v.to_usize()).ok_or_else(|| bad("polygon needs a vertex count".into()))?;
                expect(1 + 2 * n)?;
                Shape::polygon(nums[1..].chunks(2).map(|c| [c[0], c[1]]).collect())
            }
            other => return Err(bad(format!("unknown shape kind {other:?}"))),
        };
        Ok(shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dissimilarity, mask_from_positive_support};

    fn grid() -> Grid<f64> {
        Grid::square(128, -2.0, 2.0).unwrap()
    }

    fn unit_square() -> Shape<f64> {
        Shape::rect_from_corners(0.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn circle_membership() {
        let c = Shape::circle(0.0, 0.0, 1.0);
        assert!(c.contains([0.0, 0.0]));
        assert!(!c.contains([1.5, 1.5]));
        assert_eq!(c.signed_distance_at([0.0, 0.0]), 1.0);
        assert_eq!(c.signed_distance_at([2.0, 0.0]), -1.0);
        let r = 0.37;
        assert_eq!(Shape::circle(0.0, 0.0, r).signed_distance_at([0.0, 0.0]), r);
    }

    #[test]
    fn square_area_and_centroid_distance() {
        let g = grid();
        let m = rasterize(&unit_square(), &g).unwrap();
        assert!((m.area() - 1.0).abs() <= 0.03);
        assert_eq!(unit_square().signed_distance_at([0.5, 0.5]), 0.5);
    }

    #[test]
    fn disjoint_disks_dissimilarity() {
        let g = grid();
        let a = rasterize(&Shape::circle(-1.0, 0.0, 0.9), &g).unwrap();
        let b = rasterize(&Shape::circle(1.0, 0.0, 0.9), &g).unwrap();
        let want = 2.0 * std::f64::consts::PI * 0.81;
        let got = dissimilarity(&a, &b).unwrap();
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");
    }

    #[test]
    fn degenerate_shapes_rejected() {
        let g = grid();
        assert!(rasterize(&Shape::circle(0.0, 0.0, 0.0), &g).is_err());
        let flat = Shape::triangle([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]);
        assert!(signed_distance(&flat, &g).is_err());
        let bowtie = Shape::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(bowtie.validate().is_err());
    }

    #[test]
    fn ellipse_distance_matches_dense_boundary_sampling() {
        let e = Shape::ellipse(0.2, -0.1, 0.9, 0.4, 0.3);
        let boundary: Vec<[f64; 2]> = (0..200_000)
            .map(|k| {
                let t = k as f64 / 200_000.0 * std::f64::consts::TAU;
                let (s, c) = 0.3f64.sin_cos();
                let (x, y) = (0.9 * t.cos(), 0.4 * t.sin());
                [0.2 + c * x - s * y, -0.1 + s * x + c * y]
            })
            .collect();
        for p in [[0.0, 0.0], [1.5, 0.3], [-0.4, 0.5], [0.21, -0.09], [0.0, -1.2]] {
            let brute = boundary.iter().map(|b| (b[0] - p[0]).hypot(b[1] - p[1])).fold(f64::INFINITY, f64::min);
            let got = e.signed_distance_at(p);
            assert!((got.abs() - brute).abs() < 1e-5, "{p:?}: {got} vs {brute}");
            assert_eq!(got > 0.0, e.contains(p));
        }
    }

    #[test]
    fn rasterize_agrees_with_sdf_support() {
        let g = grid();
        let shapes = [
            Shape::circle(0.1, 0.2, 0.7),
            Shape::ellipse(-0.3, 0.1, 1.1, 0.5, 0.7),
            Shape::Rectangle { center: [0.2, -0.4], half: [0.6, 0.3], rotation: 0.4 },
            Shape::triangle([-1.0, -1.0], [1.2, -0.8], [0.1, 1.3]),
            Shape::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]),
        ];
        for s in &shapes {
            let m = rasterize(s, &g).unwrap();
            let sdf = signed_distance(s, &g).unwrap();
            let pos = mask_from_positive_support(&sdf);
            for k in 0..g.len() {
                if sdf.values()[k].abs() > 1e-12 {
                    assert_eq!(m.values()[k], pos.values()[k], "{s} at {k}");
                }
            }
        }
    }

    #[test]
    fn records_round_trip() {
        let shapes = [
            Shape::circle(0.1, -0.2, 0.3),
            Shape::ellipse(0.1, 0.2, 0.3, 0.4, 0.5),
            Shape::Rectangle { center: [1.0 / 3.0, 0.0], half: [0.1, 0.7], rotation: -0.25 },
            Shape::triangle([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]),
            Shape::polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.5]]),
        ];
        for s in shapes {
            let back: Shape<f64> = s.to_string().parse().unwrap();
            assert_eq!(back, s);
        }
        assert!("hexagon 1 2".parse::<Shape<f64>>().is_err());
        assert!("circle 1 2".parse::<Shape<f64>>().is_err());
    }
}
