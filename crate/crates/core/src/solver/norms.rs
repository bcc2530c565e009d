//! Asymmetric l1 geometry: the norm-like gauge `sum_{a>=0} a + w sum_{a<0} |a|`,
//! its polar, and Euclidean projection onto its ball.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Positive entries count once, negative entries are weighted by `w`.
pub fn asym_l1<T: Real>(alpha: &[T], w: T) -> T {
    alpha.iter().map(|&a| if a >= T::zero() { a } else { -a * w }).sum()
}

/// Polar of [`asym_l1`]: `max(max_{a>=0} a, max_{a<0} |a| / w)`, i.e. the
/// support function of the unit asymmetric ball.
pub fn asym_linf_polar<T: Real>(alpha: &[T], w: T) -> T {
    alpha
        .iter()
        .map(|&a| if a >= T::zero() { a } else { -a / w })
        .fold(T::zero(), T::max)
}

/// Euclidean projection of `target` onto `{a : asym_l1(a, w) <= tau}`.
///
/// The asymmetric ball agrees with the weighted l1 ball `sum d_i |a_i| <= tau`,
/// `d_i = 1` where `target_i >= 0` and `d_i = w` elsewhere, on the orthant
/// containing `target`, and both projections keep the signs of `target`. The
/// weighted projection is a soft threshold `|t_i| - lambda d_i` whose level
/// `lambda` comes from sorting the ratios `|t_i| / d_i`.
pub fn project_asym_ball<T: Real>(target: &[T], tau: T, w: T) -> Result<Vec<T>> {
    if !(tau >= T::zero()) {
        return Err(Error::InvalidParameter(format!("projection radius must be nonnegative, got {tau}")));
    }
    if !(w > T::zero()) {
        return Err(Error::InvalidParameter(format!("asymmetry weight must be positive, got {w}")));
    }
    if asym_l1(target, w) <= tau {
        return Ok(target.to_vec());
    }
    if tau == T::zero() {
        return Ok(vec![T::zero(); target.len()]);
    }
    let weight = |a: T| if a >= T::zero() { T::one() } else { w };

    let mut order: Vec<usize> = (0..target.len()).filter(|&i| target[i] != T::zero()).collect();
    let ratio = |i: usize| target[i].abs() / weight(target[i]);
    order.sort_by(|&a, &b| ratio(b).partial_cmp(&ratio(a)).unwrap_or(std::cmp::Ordering::Equal));

    let mut s1 = T::zero();
    let mut s2 = T::zero();
    let mut lambda = T::zero();
    for (k, &i) in order.iter().enumerate() {
        let d = weight(target[i]);
        s1 += d * target[i].abs();
        s2 += d * d;
        lambda = (s1 - tau) / s2;
        if k + 1 == order.len() || ratio(order[k + 1]) <= lambda {
            break;
        }
    }
    let lambda = lambda.max(T::zero());

    let mut out: Vec<T> = target
        .iter()
        .map(|&t| {
            let shrunk = (t.abs() - lambda * weight(t)).max(T::zero());
            if t >= T::zero() {
                shrunk
            } else {
                -shrunk
            }
        })
        .collect();

    // cancellation in s1 - tau can leave huge targets marginally outside
    let reached = asym_l1(&out, w);
    if reached > tau {
        let shrink = tau / reached;
        out.iter_mut().for_each(|v| *v *= shrink);
    }

    // KKT check: feasible, sign compatible
    debug_assert!(asym_l1(&out, w) <= tau * (T::one() + T::of(1e-12)));
    debug_assert!(out.iter().zip(target).all(|(&o, &t)| o == T::zero() || (o > T::zero()) == (t > T::zero())));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn asym_l1_examples() {
        assert!((asym_l1(&[1.0f64, -2.0], 0.1) - 1.2).abs() < 1e-15);
        assert_eq!(asym_l1(&[0.5, -2.0, 3.0], 1.0), 5.5);
        assert_eq!(asym_l1(&[0.0, 0.0, 0.0], 7.0), 0.0);
    }

    #[test]
    fn polar_examples() {
        assert_eq!(asym_linf_polar(&[1.0, -2.0], 0.5), 4.0);
        assert_eq!(asym_linf_polar(&[0.5, -2.0, 1.5], 1.0), 2.0);
    }

    #[test]
    fn polar_is_support_function_of_unit_ball() {
        // barycentric lattice on every facet of the unit asymmetric ball in R^3
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 120usize;
        for &w in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut best = f64::NEG_INFINITY;
            for signs in 0..8u32 {
                let vertex = |k: usize| if signs >> k & 1 == 0 { 1.0 } else { -1.0 / w };
                for i in 0..=n {
                    for j in 0..=n - i {
                        let l = [i, j, n - i - j].map(|v| v as f64 / n as f64);
                        let val: f64 = (0..3).map(|k| l[k] * vertex(k) * a[k]).sum();
                        best = best.max(val);
                    }
                }
            }
            let polar = asym_linf_polar(&a, w);
            assert!((best - polar).abs() < 1e-3 * polar.max(1.0), "w={w}: {best} vs {polar}");
        }
    }

    #[test]
    fn projection_examples() {
        let inside = [0.2, -0.3];
        assert_eq!(project_asym_ball(&inside, 1.0, 1.0).unwrap(), inside.to_vec());
        for w in [0.1f64, 1.0, 10.0] {
            let p = project_asym_ball(&[3.0, 0.0], 1.0, w).unwrap();
            assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);
        }
        assert!(project_asym_ball(&[1.0], -1.0, 1.0).is_err());
        assert_eq!(project_asym_ball(&[1.0, -4.0], 0.0, 1.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn projection_matches_planar_grid_search() {
        // brute force over a fine polar sampling of the 2-D ball boundary
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &w in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            for _ in 0..10 {
                let t: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                let tau = 1.0;
                if asym_l1(&t, w) <= tau {
                    continue;
                }
                let mut best = (f64::INFINITY, [0.0, 0.0]);
                let n = 400_000;
                for k in 0..n {
                    let th = k as f64 / n as f64 * std::f64::consts::TAU;
                    let d = [th.cos(), th.sin()];
                    let s = tau / asym_l1(&d, w);
                    let p = [d[0] * s, d[1] * s];
                    let dist = (p[0] - t[0]).hypot(p[1] - t[1]);
                    if dist < best.0 {
                        best = (dist, p);
                    }
                }
                let got = project_asym_ball(&t, tau, w).unwrap();
                for a in 0..2 {
                    assert!((got[a] - best.1[a]).abs() < 1e-4, "w={w} t={t:?}: {got:?} vs {:?}", best.1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn projection_is_feasible_sign_compatible_and_optimal(
            t in proptest::collection::vec(-5.0f64..5.0, 1..8),
            tau in 0.0f64..4.0,
            w in prop::sample::select(vec![0.1, 0.5, 1.0, 2.0, 10.0]),
            probe in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            let p = project_asym_ball(&t, tau, w).unwrap();
            prop_assert!(asym_l1(&p, w) <= tau + 1e-10);
            for (a, b) in p.iter().zip(&t) {
                prop_assert!(*a == 0.0 || (a.signum() == b.signum()));
            }
            // idempotent
            let pp = project_asym_ball(&p, tau, w).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
            // variational inequality against a feasible probe point
            let z: Vec<f64> = probe.iter().take(t.len()).copied().collect();
            let nz = asym_l1(&z, w);
            let z: Vec<f64> = if nz > tau { z.iter().map(|v| v * tau / nz).collect() } else { z };
            let vi: f64 = t.iter().zip(&p).zip(&z).map(|((ti, pi), zi)| (ti - pi) * (zi - pi)).sum();
            prop_assert!(vi <= 1e-9);
        }
    }
}
