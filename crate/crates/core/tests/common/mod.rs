//! Reference implementations shared by the integration tests. Each one is
//! written from the defining formula, without the fast paths the library
//! uses.

#![allow(dead_code)]

use depthup::DepthImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, scale: f64) -> DepthImage {
    let data = (0..w * h).map(|_| rng.random::<f64>() * scale).collect();
    DepthImage::new(w, h, data).unwrap()
}

/// Guided filter by explicit per-window regression over clipped windows.
pub fn naive_guided_filter(p: &DepthImage, guide: &DepthImage, r: usize, eps: f64) -> DepthImage {
    let (w, h) = p.dims();
    let window = |x: usize, y: usize| {
        let xs = x.saturating_sub(r)..(x + r + 1).min(w);
        let ys = y.saturating_sub(r)..(y + r + 1).min(h);
        (xs, ys)
    };
    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (xs, ys) = window(x, y);
            let mut n = 0.0;
            let (mut si, mut sp, mut sii, mut sip) = (0.0, 0.0, 0.0, 0.0);
            for yy in ys {
                for xx in xs.clone() {
                    let (i, v) = (guide.get(xx, yy), p.get(xx, yy));
                    n += 1.0;
                    si += i;
                    sp += v;
                    sii += i * i;
                    sip += i * v;
                }
            }
            let (mi, mp) = (si / n, sp / n);
            let var = sii / n - mi * mi;
            let cov = sip / n - mi * mp;
            let ak = cov / (var + eps);
            a[y * w + x] = ak;
            b[y * w + x] = mp - ak * mi;
        }
    }
    DepthImage::from_fn(w, h, |x, y| {
        let (xs, ys) = window(x, y);
        let mut n = 0.0;
        let (mut sa, mut sb) = (0.0, 0.0);
        for yy in ys {
            for xx in xs.clone() {
                n += 1.0;
                sa += a[yy * w + xx];
                sb += b[yy * w + xx];
            }
        }
        sa / n * guide.get(x, y) + sb / n
    })
}

/// Periodic forward difference as a sparse row: `(u[next] - u[i])`.
fn dx_pairs(w: usize, h: usize) -> Vec<(usize, usize)> {
    (0..w * h)
        .map(|i| (i, (i / w) * w + (i % w + 1) % w))
        .collect()
}

fn dy_pairs(w: usize, h: usize) -> Vec<(usize, usize)> {
    (0..w * h)
        .map(|i| (i, ((i / w + 1) % h) * w + i % w))
        .collect()
}

/// `D^T g` for a difference operator given as (i, next) pairs.
fn apply_transpose(pairs: &[(usize, usize)], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for (row, &(i, j)) in pairs.iter().enumerate() {
        out[i] -= g[row];
        out[j] += g[row];
    }
    out
}

fn apply(pairs: &[(usize, usize)], u: &[f64]) -> Vec<f64> {
    pairs.iter().map(|&(i, j)| u[j] - u[i]).collect()
}

/// Right-hand side `d + rho z + beta (Dx^T h + Dy^T v)`.
pub fn normal_rhs(
    d: &DepthImage,
    z: &DepthImage,
    h: &DepthImage,
    v: &DepthImage,
    rho: f64,
    beta: f64,
) -> Vec<f64> {
    let (w, hh) = d.dims();
    let dxt = apply_transpose(&dx_pairs(w, hh), h.data());
    let dyt = apply_transpose(&dy_pairs(w, hh), v.data());
    (0..w * hh)
        .map(|i| d.data()[i] + rho * z.data()[i] + beta * (dxt[i] + dyt[i]))
        .collect()
}

/// `((1 + rho) I + beta (Dx^T Dx + Dy^T Dy)) u`.
pub fn normal_apply(u: &DepthImage, rho: f64, beta: f64) -> Vec<f64> {
    let (w, h) = u.dims();
    let (px, py) = (dx_pairs(w, h), dy_pairs(w, h));
    let gx = apply_transpose(&px, &apply(&px, u.data()));
    let gy = apply_transpose(&py, &apply(&py, u.data()));
    (0..w * h)
        .map(|i| (1.0 + rho) * u.data()[i] + beta * (gx[i] + gy[i]))
        .collect()
}

/// Assembles the periodic normal equations as a dense matrix and solves
/// them by Gaussian elimination with partial pivoting.
pub fn dense_solve(
    d: &DepthImage,
    z: &DepthImage,
    h: &DepthImage,
    v: &DepthImage,
    rho: f64,
    beta: f64,
) -> DepthImage {
    let (w, hh) = d.dims();
    let n = w * hh;
    let mut m = vec![vec![0.0; n + 1]; n];
    for (j, row) in (0..n).map(|j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        (
            j,
            normal_apply(&DepthImage::new(w, hh, e).unwrap(), rho, beta),
        )
    }) {
        for i in 0..n {
            m[i][j] = row[i];
        }
    }
    for (i, r) in normal_rhs(d, z, h, v, rho, beta).into_iter().enumerate() {
        m[i][n] = r;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                let (top, bottom) = m.split_at_mut(r);
                for (a, b) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                    *a -= f * b;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    DepthImage::new(w, hh, x).unwrap()
}

/// Quadratic u-subproblem energy under periodic differences.
pub fn quadratic_energy(
    u: &DepthImage,
    d: &DepthImage,
    z: &DepthImage,
    h: &DepthImage,
    v: &DepthImage,
    rho: f64,
    beta: f64,
) -> f64 {
    let (w, hh) = u.dims();
    let ux = apply(&dx_pairs(w, hh), u.data());
    let uy = apply(&dy_pairs(w, hh), u.data());
    let mut e = 0.0;
    for i in 0..w * hh {
        let (a, b) = (u.data()[i] - d.data()[i], u.data()[i] - z.data()[i]);
        let (c, g) = (ux[i] - h.data()[i], uy[i] - v.data()[i]);
        e += a * a + rho * b * b + beta * (c * c + g * g);
    }
    e
}

/// `H^t` written out from its three cases.
pub fn h_t(p: f64, t: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if p.abs() <= 1.0 {
        t
    } else {
        1.0
    }
}

/// Minimizer of `(x - p)^2 + alpha H^t(p)` over a uniform grid of the given
/// step on `[-|x| - 2, |x| + 2]`, together with the exact candidates
/// `{0, +-1, x}`. Returns `(argmin, energy)`; ties keep the earlier
/// candidate.
pub fn grid_prox(x: f64, t: f64, alpha: f64, step: f64) -> (f64, f64) {
    let e = |p: f64| (x - p) * (x - p) + alpha * h_t(p, t);
    let mut best = (0.0, e(0.0));
    for cand in [1.0, -1.0, x] {
        let ec = e(cand);
        if ec < best.1 {
            best = (cand, ec);
        }
    }
    let lo = -x.abs() - 2.0;
    let n = ((2.0 * x.abs() + 4.0) / step).round() as usize;
    // Scan the squared distance per penalty band; the penalty is constant
    // inside each band.
    let mut best_band = [(f64::INFINITY, 0.0); 2];
    for k in 0..=n {
        let p = lo + k as f64 * step;
        if p == 0.0 {
            continue;
        }
        let band = (p.abs() > 1.0) as usize;
        let d = (x - p) * (x - p);
        if d < best_band[band].0 {
            best_band[band] = (d, p);
        }
    }
    for (band, &(d, p)) in best_band.iter().enumerate() {
        let ec = d + alpha * if band == 0 { t } else { 1.0 };
        if ec < best.1 {
            best = (p, ec);
        }
    }
    best
}
