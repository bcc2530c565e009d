use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::counts::CountData;
use super::radon::RayGeometry;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::scalar::Real;

/// Filtered back projection of parallel-beam line integrals: discrete ramp
/// (Ram-Lak) filtering by FFT, linear interpolation on the detector, and
/// `pi / angles` weighting.
pub fn fbp<T: Real>(geometry: &RayGeometry<T>, values: &[T], grid: &Grid<T>) -> Result<ScalarField<T>> {
    let n_ang = geometry.angles().len();
    if n_ang < 2 {
        return Err(Error::InvalidParameter("filtered back projection needs at least two angles".into()));
    }
    let rays = geometry.rays_per_angle();
    if values.len() != geometry.ray_count() {
        return Err(Error::LengthMismatch { expected: geometry.ray_count(), got: values.len() });
    }
    let tau = geometry.spacing();
    let len = (2 * rays).next_power_of_two();

    let mut kernel = vec![Complex::new(T::zero(), T::zero()); len];
    let pi2 = T::PI() * T::PI();
    kernel[0].re = T::one() / (T::of(4.0) * tau * tau);
    for n in (1..rays).step_by(2) {
        let v = -T::one() / (T::of_usize(n * n) * pi2 * tau * tau);
        kernel[n].re = v;
        kernel[len - n].re = v;
    }
    let mut planner = FftPlanner::<T>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    forward.process(&mut kernel);

    let scale = tau / T::of_usize(len);
    let filtered: Vec<Vec<T>> = values
        .chunks(rays)
        .map(|proj| {
            let mut buf: Vec<Complex<T>> = (0..len)
                .map(|k| Complex::new(if k < rays { proj[k] } else { T::zero() }, T::zero()))
                .collect();
            forward.process(&mut buf);
            for (b, k) in buf.iter_mut().zip(&kernel) {
                *b *= *k;
            }
            inverse.process(&mut buf);
            buf[..rays].iter().map(|c| c.re * scale).collect()
        })
        .collect();

    let trig: Vec<(T, T)> = geometry.angles().iter().map(|a| a.sin_cos()).collect();
    let weight = T::PI() / T::of_usize(n_ang);
    let half = geometry.half_width();
    let values: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let [x, y] = grid.point(k);
            let mut acc = T::zero();
            for ((sin, cos), q) in trig.iter().zip(&filtered) {
                let s = x * *cos + y * *sin;
                let u = (s + half) / tau - T::of(0.5);
                if u < T::zero() || u > T::of_usize(rays - 1) {
                    continue;
                }
                let i0 = u.floor().to_usize().unwrap_or(0).min(rays - 1);
                let i1 = (i0 + 1).min(rays - 1);
                let f = u - T::of_usize(i0);
                acc += q[i0] * (T::one() - f) + q[i1] * f;
            }
            acc * weight
        })
        .collect();
    ScalarField::from_values(*grid, values)
}

/// FBP reconstruction from the log measurements of a scan.
pub fn fbp_baseline<T: Real>(data: &CountData<T>, grid: &Grid<T>) -> Result<ScalarField<T>> {
    fbp(&data.geometry, &data.measurements, grid)
}
