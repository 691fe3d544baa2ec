//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's numerical code;
//! each oracle is a direct, slow transcription of the defining formula.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

pub fn random_values(rng: &mut SplitMix64, len: usize, scale: f32) -> Vec<f32> {
    (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Random strictly increasing subset of `0..n` with `m` elements.
pub fn random_subset(rng: &mut SplitMix64, n: usize, m: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        all.swap(i, j);
    }
    let mut out = all[..m].to_vec();
    out.sort_unstable();
    out
}

fn clamp(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

// ---------------------------------------------------------------- lifting

/// `(sigma, kernel_size)` for `m` anchors out of `n` tokens.
pub fn blur_params(m: usize, n: usize) -> (f64, usize) {
    let rho = m as f64 / n as f64;
    let sigma = 0.4 / rho.sqrt();
    let k = (2 * (1.5 * sigma).floor() as usize + 1).max(3);
    (sigma, k)
}

/// Nearest anchor by squared grid distance; ties to the lower index.
pub fn nearest_fill(values: &[f32], anchors: &[usize], h: usize, w: usize, d: usize) -> Vec<f32> {
    let mut out = vec![0.0; h * w * d];
    for i in 0..h * w {
        let (r, c) = ((i / w) as i64, (i % w) as i64);
        let mut best = (i64::MAX, usize::MAX);
        for (j, &a) in anchors.iter().enumerate() {
            let (ar, ac) = ((a / w) as i64, (a % w) as i64);
            let dist = (r - ar).pow(2) + (c - ac).pow(2);
            if dist < best.0 || (dist == best.0 && a < anchors[best.1]) {
                best = (dist, j);
            }
        }
        out[i * d..(i + 1) * d].copy_from_slice(&values[best.1 * d..(best.1 + 1) * d]);
    }
    out
}

/// Direct 2-D convolution with the outer product of a normalised sampled
/// Gaussian and edge-clamped reads.
pub fn blur_2d(grid: &[f32], h: usize, w: usize, d: usize, sigma: f64, k: usize) -> Vec<f64> {
    let r = (k / 2) as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|o| (-(o * o) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let taps: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let mut out = vec![0.0; h * w * d];
    for row in 0..h {
        for col in 0..w {
            for ch in 0..d {
                let mut acc = 0.0;
                for (a, dr) in (-r..=r).enumerate() {
                    for (b, dc) in (-r..=r).enumerate() {
                        let rr = clamp(row as i64 + dr, h);
                        let cc = clamp(col as i64 + dc, w);
                        acc += taps[a] * taps[b] * grid[(rr * w + cc) * d + ch] as f64;
                    }
                }
                out[(row * w + col) * d + ch] = acc;
            }
        }
    }
    out
}

/// Nearest fill, blur, then anchors restored.
pub fn lift(values: &[f32], anchors: &[usize], h: usize, w: usize, d: usize) -> Vec<f64> {
    let filled = nearest_fill(values, anchors, h, w, d);
    if anchors.len() == h * w {
        return filled.iter().map(|&x| x as f64).collect();
    }
    let (sigma, k) = blur_params(anchors.len(), h * w);
    let mut out = blur_2d(&filled, h, w, d, sigma, k);
    for (j, &a) in anchors.iter().enumerate() {
        for ch in 0..d {
            out[a * d + ch] = values[j * d + ch] as f64;
        }
    }
    out
}

// ------------------------------------------------------------- importance

/// Channel-mean population variance over each edge-clamped window.
pub fn importance(grid: &[f32], h: usize, w: usize, d: usize, window: usize) -> Vec<f64> {
    let r = (window / 2) as i64;
    let mut out = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let mut score = 0.0;
            for ch in 0..d {
                let mut cells = Vec::with_capacity(window * window);
                for dr in -r..=r {
                    for dc in -r..=r {
                        let rr = clamp(row as i64 + dr, h);
                        let cc = clamp(col as i64 + dc, w);
                        cells.push(grid[(rr * w + cc) * d + ch] as f64);
                    }
                }
                let mean = cells.iter().sum::<f64>() / cells.len() as f64;
                score += cells.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / cells.len() as f64;
            }
            out[row * w + col] = score / d as f64;
        }
    }
    out
}

/// Indices of the `count` highest scores among `candidates`, sorted.
pub fn top_tokens(scores: &[f64], candidates: &[usize], count: usize) -> Vec<usize> {
    let mut c = candidates.to_vec();
    c.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out = c[..count].to_vec();
    out.sort_unstable();
    out
}

// ------------------------------------------------------------------- beta

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    // Halving stops at the rounding floor, or the recursion never settles.
    let sub = (tol / 2.0).max(1e-15);
    adaptive(f, a, m, fa, flm, fm, left, sub, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, sub, depth - 1)
}

pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn beta_integrand(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| (1.0 - u.powf(1.0 / b)).max(0.0).powf(a - 1.0)
}

/// Regularised incomplete beta by quadrature. With `u = (1 - x)^b` the
/// `(1 - x)^(b - 1)` singularity disappears:
/// `int_0^x t^(a-1) (1-t)^(b-1) dt = (1/b) int_{(1-x)^b}^1 (1 - u^(1/b))^(a-1) du`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    let g = beta_integrand(a, b);
    integrate(&g, (1.0 - x).powf(b), 1.0, 1e-13) / integrate(&g, 0.0, 1.0, 1e-13)
}

/// Inverse of [`reg_inc_beta`] by bisection.
pub fn inv_reg_inc_beta(s: f64, a: f64, b: f64) -> f64 {
    let g = beta_integrand(a, b);
    let full = integrate(&g, 0.0, 1.0, 1e-13);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if integrate(&g, (1.0 - mid).powf(b), 1.0, 1e-13) / full < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// --------------------------------------------------------------- selector

/// Even-row/even-column points plus every border token.
pub fn base_selector(h: usize, w: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let border = r == 0 || c == 0 || r == h - 1 || c == w - 1;
            if border || (r % 2 == 0 && c % 2 == 0) {
                out.push(r * w + c);
            }
        }
    }
    out
}

// ------------------------------------------------------------------- misc

pub fn max_abs_diff(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max)
}

pub fn relative_l2(x: &[f32], reference: &[f32]) -> f64 {
    let num: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (*a as f64 - *b as f64).powi(2))
        .sum();
    let den: f64 = reference.iter().map(|b| (*b as f64).powi(2)).sum();
    (num / den).sqrt()
}

/// Plain dense Euler loop `y <- y + dt v(y, t)` in f64 arithmetic with f32
/// storage, driven by a per-token velocity closure.
pub fn euler_loop(
    mut y: Vec<f32>,
    timesteps: &[f64],
    v: &dyn Fn(&[f32], f64) -> Vec<f32>,
) -> Vec<f32> {
    for w in timesteps.windows(2) {
        let vel = v(&y, w[0]);
        let dt = w[1] - w[0];
        for (a, b) in y.iter_mut().zip(&vel) {
            *a = (*a as f64 + dt * *b as f64) as f32;
        }
    }
    y
}
