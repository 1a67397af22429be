//! Independent oracles for the integration tests. Everything here goes through
//! nalgebra rather than the crate's own eigensolver.

#![allow(dead_code)]

use cfa_core::rng::Rng;
use cfa_core::SymMatrix;
use nalgebra::{DMatrix, SymmetricEigen};

pub fn to_na(a: &SymMatrix) -> DMatrix<f64> {
    let p = a.dim();
    DMatrix::from_fn(p, p, |i, j| a.get(i, j))
}

pub fn from_na(a: &DMatrix<f64>) -> SymMatrix {
    SymMatrix::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Eigenvalues in descending order.
pub fn eigvals_desc(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    v
}

pub fn sub_diag(a: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut m = a.clone();
    for (i, di) in d.iter().enumerate() {
        m[(i, i)] -= di;
    }
    m
}

/// Sum of the `p - r` smallest eigenvalues of `sigma - diag(phi)`, unclamped.
pub fn trailing(sigma: &DMatrix<f64>, phi: &[f64], r: usize) -> f64 {
    eigvals_desc(&sub_diag(sigma, phi)).iter().skip(r).sum()
}

/// `sum_{i > r} max(lambda_i, 0)^q`.
pub fn trailing_q(sigma: &DMatrix<f64>, phi: &[f64], r: usize, q: f64) -> f64 {
    eigvals_desc(&sub_diag(sigma, phi))
        .iter()
        .skip(r)
        .map(|&v| if q == 1.0 { v } else { v.max(0.0).powf(q) })
        .sum()
}

pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    *eigvals_desc(a).last().unwrap()
}

/// Largest `t` with `sigma - diag(prefix, t)` PSD, via the Schur complement of the
/// leading block. `None` when the leading block is already indefinite.
fn max_last(sigma: &DMatrix<f64>, prefix: &[f64]) -> Option<f64> {
    let p = sigma.nrows();
    let k = p - 1;
    let a = DMatrix::from_fn(k, k, |i, j| sigma[(i, j)] - if i == j { prefix[i] } else { 0.0 });
    let e = SymmetricEigen::new(a);
    let scale = e.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if e.eigenvalues.iter().any(|&v| v < -1e-12 * scale) {
        return None;
    }
    let s = DMatrix::from_fn(k, 1, |i, _| sigma[(i, k)]);
    let proj = e.eigenvectors.transpose() * s;
    let mut m = sigma[(k, k)];
    for i in 0..k {
        let lam = e.eigenvalues[i];
        if lam > 1e-12 * scale {
            m -= proj[(i, 0)] * proj[(i, 0)] / lam;
        } else if proj[(i, 0)].abs() > 1e-9 {
            return None;
        }
    }
    Some(m)
}

/// Minimum of the signed trailing sum over the feasible part of the box.
///
/// The first `p - 1` coordinates run over `n` equispaced points each. The objective is
/// concave in `phi`, so along the last coordinate the minimum sits at an end of the
/// feasible interval, which is computed exactly. Returns `+inf` when nothing on the
/// grid is feasible.
pub fn grid_oracle(sigma: &SymMatrix, r: usize, lower: &[f64], upper: &[f64], n: usize) -> f64 {
    grid_argmin(sigma, r, lower, upper, n).0
}

/// Grid minimum and the first `p - 1` coordinates of its minimizer.
fn grid_argmin(sigma: &SymMatrix, r: usize, lower: &[f64], upper: &[f64], n: usize) -> (f64, Vec<f64>) {
    let s = to_na(sigma);
    let p = s.nrows();
    let axis = |i: usize, k: usize| {
        if n <= 1 {
            lower[i]
        } else {
            lower[i] + (upper[i] - lower[i]) * k as f64 / (n - 1) as f64
        }
    };
    let mut best = (f64::INFINITY, lower[..p - 1].to_vec());
    let mut idx = vec![0usize; p - 1];
    let mut phi = vec![0.0; p];
    loop {
        for i in 0..p - 1 {
            phi[i] = axis(i, idx[i]);
        }
        if let Some(m) = max_last(&s, &phi[..p - 1]) {
            let hi = m.min(upper[p - 1]);
            if hi >= lower[p - 1] {
                for t in [lower[p - 1], hi] {
                    phi[p - 1] = t;
                    let v = trailing(&s, &phi, r);
                    if v < best.0 {
                        best = (v, phi[..p - 1].to_vec());
                    }
                }
            }
        }
        let mut k = 0;
        while k < p - 1 {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == p - 1 {
            break;
        }
    }
    best
}

/// [`grid_oracle`] followed by `levels` zoomed grids of `zoom_n` points per axis,
/// each spanning two cells either side of the previous minimizer. Returns the
/// plain and the refined value; the latter is never above the former.
pub fn refined_grid_oracle(
    sigma: &SymMatrix,
    r: usize,
    lower: &[f64],
    upper: &[f64],
    n: usize,
    levels: usize,
    zoom_n: usize,
) -> (f64, f64) {
    let p = lower.len();
    let (plain, mut at) = grid_argmin(sigma, r, lower, upper, n);
    let mut best = plain;
    let mut cell: Vec<f64> = (0..p).map(|i| (upper[i] - lower[i]) / (n - 1).max(1) as f64).collect();
    for _ in 0..levels {
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for i in 0..p - 1 {
            lo[i] = (at[i] - 2.0 * cell[i]).max(lower[i]);
            hi[i] = (at[i] + 2.0 * cell[i]).min(upper[i]);
            cell[i] = (hi[i] - lo[i]) / (zoom_n - 1) as f64;
        }
        let (v, a) = grid_argmin(sigma, r, &lo, &hi, zoom_n);
        if v < best {
            best = v;
            at = a;
        }
    }
    (plain, best)
}

/// Plain feasibility-filtered grid over the whole box for `f_q`, any `q`.
pub fn full_grid_oracle(sigma: &SymMatrix, r: usize, q: f64, upper: &[f64], n: usize) -> f64 {
    let s = to_na(sigma);
    let p = s.nrows();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; p];
    loop {
        let phi: Vec<f64> = (0..p).map(|i| upper[i] * idx[i] as f64 / (n - 1) as f64).collect();
        let m = sub_diag(&s, &phi);
        let ev = eigvals_desc(&m);
        if *ev.last().unwrap() >= -1e-9 {
            best = best.min(trailing_q(&s, &phi, r, q));
        }
        let mut k = 0;
        while k < p {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == p {
            break;
        }
    }
    best
}

/// `u_i = max{phi_i : sigma - phi_i e_i e_i' PSD}` from the Schur complement, with
/// the `i`-th coordinate moved last.
pub fn u_oracle(sigma: &SymMatrix) -> Vec<f64> {
    let s = to_na(sigma);
    let p = s.nrows();
    (0..p)
        .map(|i| {
            let mut order: Vec<usize> = (0..p).filter(|&j| j != i).collect();
            order.push(i);
            let perm = DMatrix::from_fn(p, p, |a, b| s[(order[a], order[b])]);
            max_last(&perm, &vec![0.0; p - 1]).unwrap_or(0.0).max(0.0)
        })
        .collect()
}

/// Correlation matrix of `L L' + diag(d)` with `L` standard normal `p x k` and
/// `d ~ U[lo, hi]`.
pub fn random_factor_corr(rng: &mut Rng, p: usize, k: usize, lo: f64, hi: f64) -> SymMatrix {
    let l: Vec<f64> = (0..p * k).map(|_| rng.normal()).collect();
    let d: Vec<f64> = (0..p).map(|_| rng.uniform_in(lo, hi)).collect();
    let raw = SymMatrix::from_fn(p, |i, j| {
        let mut v: f64 = (0..k).map(|t| l[i * k + t] * l[j * k + t]).sum();
        if i == j {
            v += d[i];
        }
        v
    });
    let s: Vec<f64> = (0..p).map(|i| 1.0 / raw.get(i, i).sqrt()).collect();
    SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { raw.get(i, j) * s[i] * s[j] })
}

pub fn random_symmetric(rng: &mut Rng, p: usize) -> SymMatrix {
    let v: Vec<f64> = (0..p * p).map(|_| rng.normal()).collect();
    SymMatrix::from_fn(p, |i, j| 0.5 * (v[i * p + j] + v[j * p + i]))
}

pub fn random_psd(rng: &mut Rng, p: usize) -> SymMatrix {
    let v: Vec<f64> = (0..p * p).map(|_| rng.normal()).collect();
    SymMatrix::from_fn(p, |i, j| (0..p).map(|t| v[i * p + t] * v[j * p + t]).sum())
}

/// Rejection sample of `phi ~ U[0, u]` with `sigma - diag(phi)` PSD.
pub fn random_feasible(rng: &mut Rng, sigma: &SymMatrix, u: &[f64]) -> Vec<f64> {
    let s = to_na(sigma);
    loop {
        let phi: Vec<f64> = u.iter().map(|&ui| rng.uniform_in(0.0, ui)).collect();
        if lambda_min(&sub_diag(&s, &phi)) >= 0.0 {
            return phi;
        }
    }
}

/// Envelope of `-x y`, restated from its definition.
pub fn envelope(x: f64, y: f64, l: f64, u: f64) -> f64 {
    let a = -u * x;
    let b = l - l * x - y;
    if a > b {
        a
    } else {
        b
    }
}

/// Node relaxation objective over rank-`(p - r)` projectors `W` on a sphere grid and
/// feasible `phi` on a grid of the box. An upper estimate of the relaxation optimum
/// for `p <= 3`.
pub fn relaxation_oracle(sigma: &SymMatrix, r: usize, lower: &[f64], upper: &[f64], n_phi: usize, n_ang: usize) -> f64 {
    let s = to_na(sigma);
    let p = s.nrows();
    assert!(p <= 3);
    let mut ws: Vec<DMatrix<f64>> = Vec::new();
    let dirs: Vec<Vec<f64>> = match p {
        1 => vec![vec![1.0]],
        2 => (0..n_ang)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / n_ang as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for a in 0..n_ang {
                for b in 0..=n_ang {
                    let th = std::f64::consts::PI * a as f64 / n_ang as f64;
                    let ph = std::f64::consts::PI * b as f64 / n_ang as f64;
                    out.push(vec![ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos()]);
                }
            }
            out
        }
    };
    let eye = DMatrix::<f64>::identity(p, p);
    let k = p - r;
    for v in &dirs {
        let vv = DMatrix::from_fn(p, p, |i, j| v[i] * v[j]);
        if k == p {
            ws.push(eye.clone());
            break;
        } else if k == 1 {
            ws.push(vv);
        } else if k == p - 1 {
            ws.push(&eye - vv);
        }
    }
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; p];
    loop {
        let phi: Vec<f64> = (0..p)
            .map(|i| lower[i] + (upper[i] - lower[i]) * idx[i] as f64 / (n_phi - 1) as f64)
            .collect();
        if lambda_min(&sub_diag(&s, &phi)) >= -1e-12 {
            for w in &ws {
                let mut val = w.dot(&s);
                for i in 0..p {
                    val += envelope(w[(i, i)], phi[i], lower[i], upper[i]);
                }
                best = best.min(val);
            }
        }
        let mut t = 0;
        while t < p {
            idx[t] += 1;
            if idx[t] < n_phi {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
        if t == p {
            break;
        }
    }
    best
}
