use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::radon::{RadonOperator, RayGeometry};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::scalar::Real;

/// Photon statistics applied by [`simulate_counts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub poisson: bool,
    /// Standard deviation of the additive Gaussian as a fraction of `|v|`.
    pub gauss_pct: f64,
}

impl Noise {
    pub const NONE: Noise = Noise { poisson: false, gauss_pct: 0.0 };
}

/// Detected photon counts per ray and the derived log measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData<T> {
    pub geometry: RayGeometry<T>,
    pub counts: Vec<T>,
    pub lambda_t: T,
    /// `-log(counts / lambda_t)` plus Gaussian noise; zero on starved rays.
    pub measurements: Vec<T>,
}

impl<T: Real> CountData<T> {
    pub fn new(geometry: RayGeometry<T>, counts: Vec<T>, lambda_t: T, measurements: Vec<T>) -> Result<Self> {
        let m = geometry.ray_count();
        if counts.len() != m || measurements.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: counts.len().min(measurements.len()) });
        }
        if !(lambda_t > T::zero()) {
            return Err(Error::InvalidParameter(format!("blank scan count must be positive, got {lambda_t}")));
        }
        if counts.iter().any(|&c| !(c >= T::zero())) || measurements.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("counts must be nonnegative and measurements finite".into()));
        }
        Ok(Self { geometry, counts, lambda_t, measurements })
    }

    /// Diagonal weights of the data misfit: the counts themselves.
    pub fn weights(&self) -> &[T] {
        &self.counts
    }

    /// Expected norm of the weighted measurement error under `noise`,
    /// `sqrt(sum_m counts_m (var_poisson + (g v_m)^2))` over unstarved rays, where
    /// `var_poisson = 1 / counts_m` when counting noise is present.
    pub fn noise_level(&self, noise: Noise) -> T {
        let g = T::of(noise.gauss_pct);
        let p = if noise.poisson { T::one() } else { T::zero() };
        self.counts
            .iter()
            .zip(&self.measurements)
            .filter(|(&c, _)| c > T::zero())
            .map(|(&c, &v)| p + c * (g * v) * (g * v))
            .sum::<T>()
            .sqrt()
    }

    pub fn to_csv(&self) -> String {
        let g = &self.geometry;
        let mut out = String::from("# knollset-counts 1\n");
        writeln!(out, "# rays_per_angle {} half_width {} lambda_t {}", g.rays_per_angle(), g.half_width(), self.lambda_t)
            .expect("string write");
        out.push_str("angle_index,ray_index,angle,offset,count,measurement\n");
        for m in 0..g.ray_count() {
            let (theta, s) = g.ray(m);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                m / g.rays_per_angle(),
                m % g.rays_per_angle(),
                theta,
                s,
                self.counts[m],
                self.measurements[m]
            )
            .expect("string write");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        match lines.next() {
            Some((_, "# knollset-counts 1")) => {}
            Some((_, other)) => return Err(Error::Version(other.to_string())),
            None => return Err(parse_err(0, "empty file")),
        }
        let (ln, meta) = lines.next().ok_or_else(|| parse_err(1, "missing geometry line"))?;
        let fields: Vec<&str> = meta.trim_start_matches('#').split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "rays_per_angle" || fields[2] != "half_width" || fields[4] != "lambda_t" {
            return Err(parse_err(ln, "expected `# rays_per_angle R half_width D lambda_t L`"));
        }
        let num = |s: &str| s.parse::<T>().map_err(|_| parse_err(ln, "bad number"));
        let rays: usize = fields[1].parse().map_err(|_| parse_err(ln, "bad ray count"))?;
        let half_width = num(fields[3])?;
        let lambda_t = num(fields[5])?;
        lines.next();

        let (mut angles, mut counts, mut meas) = (Vec::new(), Vec::new(), Vec::new());
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(parse_err(ln, "expected 6 columns"));
            }
            let num = |s: &str| s.trim().parse::<T>().map_err(|_| parse_err(ln, "bad number"));
            let ray: usize = cols[1].trim().parse().map_err(|_| parse_err(ln, "bad ray index"))?;
            if ray == 0 {
                angles.push(num(cols[2])?);
            }
            counts.push(num(cols[4])?);
            meas.push(num(cols[5])?);
        }
        let geometry = RayGeometry::new(angles, rays, half_width)?;
        Self::new(geometry, counts, lambda_t, meas)
    }
}

/// Simulated transmission scan of `mu_true`:
/// `lambda_m = lambda_t exp(-v_m)`, counts `~ Poisson(lambda_m)`,
/// measurements `-log(counts / lambda_t)` plus zero-mean Gaussian noise of
/// standard deviation `gauss_pct |v|`. Starved rays get a zero measurement.
pub fn simulate_counts<T: Real>(
    mu_true: &ScalarField<T>,
    op: &RadonOperator<T>,
    lambda_t: T,
    noise: Noise,
    seed: u64,
) -> Result<CountData<T>> {
    if !(lambda_t > T::zero()) {
        return Err(Error::InvalidParameter(format!("blank scan count must be positive, got {lambda_t}")));
    }
    let v = op.radon_apply(mu_true)?.values;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lt = lambda_t.to_f64_lossy();
    let mut counts = Vec::with_capacity(v.len());
    let mut meas = Vec::with_capacity(v.len());
    for &vm in &v {
        let ideal = lt * (-vm.to_f64_lossy()).exp();
        let count = if noise.poisson && ideal > 0.0 {
            Poisson::new(ideal).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut rng)
        } else {
            ideal
        };
        let mut measured = if count > 0.0 { -(count / lt).ln() } else { 0.0 };
        if noise.gauss_pct > 0.0 && count > 0.0 {
            let sd = noise.gauss_pct * measured.abs();
            let z: f64 = rng.sample(StandardNormal);
            measured += sd * z;
        }
        counts.push(T::of(count));
        meas.push(T::of(measured));
    }
    CountData::new(op.geometry().clone(), counts, lambda_t, meas)
}
