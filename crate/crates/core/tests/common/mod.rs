#![allow(dead_code)]

use knollset::solver::{asym_l1, AffineProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn affine(rows: usize, cols: usize, a: &[f64], b: &[f64]) -> AffineProblem<f64> {
    AffineProblem::new(rows, cols, a.to_vec(), b.to_vec()).unwrap()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Point on the facet with sign pattern `signs` whose first `d-1` magnitudes
/// are `head`; pulled back onto the facet edge when `head` overshoots.
fn facet_point(head: &[f64], signs: &[f64], tau: f64, w: f64) -> Vec<f64> {
    let d = signs.len();
    let weight = |k: usize| if signs[k] > 0.0 { 1.0 } else { w };
    let mut mags: Vec<f64> = head.iter().map(|v| v.max(0.0)).collect();
    let used: f64 = mags.iter().enumerate().map(|(k, m)| weight(k) * m).sum();
    if used > tau {
        for m in &mut mags {
            *m *= tau / used;
        }
        mags.push(0.0);
    } else {
        mags.push((tau - used) / weight(d - 1));
    }
    mags.iter().zip(signs).map(|(m, s)| m * s).collect()
}

fn lattice(dims: usize, per_axis: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..per_axis as i64).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

/// Projection onto the asymmetric ball by grid search over the boundary
/// facets: a coarse lattice on every facet, then repeated local refinement of
/// the best few. Only for targets outside the ball.
pub fn grid_search_projection(t: &[f64], tau: f64, w: f64) -> Vec<f64> {
    let d = t.len();
    assert!(asym_l1(t, w) > tau);
    if d == 1 {
        return vec![if t[0] > 0.0 { tau } else { -tau / w }];
    }
    let coarse = 24usize;
    let mut candidates: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for pattern in 0..(1u32 << d) {
        let signs: Vec<f64> = (0..d).map(|k| if pattern >> k & 1 == 0 { 1.0 } else { -1.0 }).collect();
        let range: Vec<f64> = (0..d - 1).map(|k| if signs[k] > 0.0 { tau } else { tau / w }).collect();
        let mut best = (f64::INFINITY, vec![]);
        for idx in lattice(d - 1, coarse + 1) {
            let head: Vec<f64> = idx.iter().zip(&range).map(|(&i, r)| i as f64 / coarse as f64 * r).collect();
            let f = dist2(&facet_point(&head, &signs, tau, w), t);
            if f < best.0 {
                best = (f, facet_point(&head, &signs, tau, w)[..d - 1].iter().map(|v| v.abs()).collect());
            }
        }
        candidates.push((best.0, best.1, signs));
    }

    // only the most promising facets are refined
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(4);
    let k = 5i64;
    let offsets = lattice(d - 1, (2 * k + 1) as usize);
    let mut overall = (f64::INFINITY, vec![]);
    for (mut fbest, mut head, signs) in candidates {
        let range: Vec<f64> = (0..d - 1).map(|k| if signs[k] > 0.0 { tau } else { tau / w }).collect();
        let mut h = 1.0 / coarse as f64;
        for _ in 0..22 {
            h *= 0.5;
            let center = head.clone();
            for off in &offsets {
                let trial: Vec<f64> =
                    center.iter().zip(off).zip(&range).map(|((c, &o), r)| (c + (o - k) as f64 * h * r).max(0.0)).collect();
                let f = dist2(&facet_point(&trial, &signs, tau, w), t);
                if f < fbest {
                    fbest = f;
                    // canonical head: magnitudes of the point actually reached
                    head = facet_point(&trial, &signs, tau, w)[..d - 1].iter().map(|v| v.abs()).collect();
                }
            }
        }
        if fbest < overall.0 {
            overall = (fbest, facet_point(&head, &signs, tau, w));
        }
    }
    overall.1
}

/// Reference BPDN solution `min ||x||_1 s.t. ||Ax - b|| <= sigma` by
/// enumerating every support and sign pattern and solving the KKT system on it.
pub fn brute_force_bpdn(rows: usize, cols: usize, a: &[f64], b: &[f64], sigma: f64) -> Vec<f64> {
    let am = DMatrix::from_row_slice(rows, cols, a);
    let bv = DVector::from_column_slice(b);
    if bv.norm() <= sigma {
        return vec![0.0; cols];
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for support in 1u32..(1 << cols) {
        let idx: Vec<usize> = (0..cols).filter(|&j| support >> j & 1 == 1).collect();
        if idx.len() > rows {
            continue;
        }
        let sub = am.select_columns(&idx);
        let gram = sub.transpose() * &sub;
        let Some(chol) = gram.clone().cholesky() else { continue };
        let x_ls = chol.solve(&(sub.transpose() * &bv));
        let r_ls = &sub * &x_ls - &bv;
        let slack = sigma * sigma - r_ls.norm_squared();
        if slack < 0.0 {
            continue;
        }
        for pattern in 0u32..(1 << idx.len()) {
            let s = DVector::from_iterator(idx.len(), (0..idx.len()).map(|k| if pattern >> k & 1 == 0 { 1.0 } else { -1.0 }));
            let ms = chol.solve(&s);
            let q = s.dot(&ms);
            let mu = (slack / q).sqrt();
            let x = &x_ls - &ms * mu;
            if x.iter().zip(s.iter()).any(|(xi, si)| xi * si <= 0.0) {
                continue;
            }
            let r = &sub * &x - &bv;
            let corr = am.transpose() * &r;
            if corr.iter().any(|c| c.abs() > mu * (1.0 + 1e-9) + 1e-12) {
                continue;
            }
            let l1 = x.iter().map(|v| v.abs()).sum::<f64>();
            if best.as_ref().is_none_or(|(v, _)| l1 < *v) {
                let mut full = vec![0.0; cols];
                for (k, &j) in idx.iter().enumerate() {
                    full[j] = x[k];
                }
                best = Some((l1, full));
            }
        }
    }
    best.expect("a feasible support exists").1
}

/// Minimum l2-norm least squares solution.
pub fn least_squares(rows: usize, cols: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let am = DMatrix::from_row_slice(rows, cols, a);
    let svd = am.svd(true, true);
    svd.solve(&DVector::from_column_slice(b), 1e-12).unwrap().iter().copied().collect()
}
