//! Upper limits `u` on each uniqueness, Weyl lower bounds, pruning and root tightening.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CfaError, Result};
use crate::linalg::{eigh, eigvalsh, lambda_min, SymMatrix};

/// Grid size for bound tightening.
pub const TIGHTEN_GRID: usize = 20;
/// Eigenvalues at or below `U_FLOOR * lambda_max` are treated as zero in [`compute_u`].
pub const U_FLOOR: f64 = 1e-10;
/// `compute_u` re-checks every coordinate against the definition up to this dimension.
pub const U_VERIFY_MAX_DIM: usize = 256;

const NULL_WEIGHT_TOL: f64 = 1e-8;

/// Box `lower <= phi <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CfaError::input("box bounds differ in length"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(&l, &u)| !(l >= 0.0) || !(u >= l) || !u.is_finite())
        {
            return Err(CfaError::input("box bounds need 0 <= lower <= upper < inf"));
        }
        Ok(Self { lower, upper })
    }

    /// `[0, u]`.
    pub fn root(u: &[f64]) -> Self {
        Self {
            lower: vec![0.0; u.len()],
            upper: u.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, phi: &[f64], tol: f64) -> bool {
        phi.iter()
            .enumerate()
            .all(|(i, &x)| x >= self.lower[i] - tol && x <= self.upper[i] + tol)
    }

    /// Componentwise `min(max(phi, lower), upper)`.
    pub fn clamp(&self, phi: &[f64]) -> Vec<f64> {
        phi.iter()
            .enumerate()
            .map(|(i, &x)| x.max(self.lower[i]).min(self.upper[i]))
            .collect()
    }
}

/// `u_i = min { m' sigma m : m_i = 1 }`, the largest value `phi_i` can take in the feasible set.
///
/// Coordinates with weight on the numerical null space get `u_i = 0`; the rest use
/// `1 / (sigma^+)_ii`. Up to [`U_VERIFY_MAX_DIM`] each value is re-checked against
/// `lambda_min(sigma - u_i e_i e_i')` and moved by bisection when that check fails.
pub fn compute_u(sigma: &SymMatrix) -> Vec<f64> {
    let p = sigma.dim();
    let e = eigh(sigma);
    let lmax = e.lambda_max().max(0.0);
    if lmax <= 0.0 {
        return vec![0.0; p];
    }
    let floor = U_FLOOR * lmax;
    let mut u: Vec<f64> = (0..p)
        .map(|i| {
            let (mut null_w, mut inv) = (0.0, 0.0);
            for (k, &lam) in e.values.iter().enumerate() {
                let v = e.vectors[(i, k)];
                if lam > floor {
                    inv += v * v / lam;
                } else {
                    null_w += v * v;
                }
            }
            if null_w > NULL_WEIGHT_TOL || inv <= 0.0 {
                0.0
            } else {
                1.0 / inv
            }
        })
        .collect();
    if p <= U_VERIFY_MAX_DIM {
        let vtol = 1e-9 * lmax;
        for i in 0..p {
            if u[i] > 0.0 {
                u[i] = verify_u(sigma, i, u[i], vtol);
            }
        }
    }
    u
}

fn verify_u(sigma: &SymMatrix, i: usize, ui: f64, vtol: f64) -> f64 {
    let h = |x: f64| {
        let mut m = sigma.clone();
        m.set(i, i, sigma.get(i, i) - x);
        lambda_min(&m)
    };
    let at = h(ui);
    if at.abs() <= vtol {
        return ui;
    }
    // h is concave and nonincreasing; find where it crosses -vtol and keep the outer end.
    let (mut lo, mut hi) = if at < -vtol {
        (0.0, ui)
    } else {
        (ui, sigma.get(i, i))
    };
    if h(hi) >= -vtol {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= -vtol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `sum_{i > r} max{lambda_i(sigma - diag(ubox)), 0}`.
pub fn weyl_lower_bound(sigma: &SymMatrix, ubox: &[f64], r: usize) -> f64 {
    eigvalsh(&sigma.sub_diag(ubox))
        .iter()
        .skip(r)
        .map(|&v| v.max(0.0))
        .sum()
}

/// True when a node whose bound is `bound` cannot beat `z_f` by more than `tol`.
#[inline]
pub fn prunes(bound: f64, z_f: f64, tol: f64) -> bool {
    z_f - tol < bound
}

pub fn prune_test(sigma: &SymMatrix, node: &BoxBounds, r: usize, z_f: f64, tol: f64) -> bool {
    prunes(weyl_lower_bound(sigma, &node.upper, r), z_f, tol)
}

/// Raises each `lower_j` to the largest interior grid point `alpha` such that capping
/// `phi_j <= alpha` already forces the Weyl bound above `z_f - tol`.
pub fn tighten_bounds(
    sigma: &SymMatrix,
    node: &BoxBounds,
    r: usize,
    z_f: f64,
    tol: f64,
    grid_points: usize,
) -> BoxBounds {
    let mut out = node.clone();
    if !z_f.is_finite() || grid_points == 0 {
        return out;
    }
    let p = node.dim();
    let mut ubox = node.upper.clone();
    for j in 0..p {
        let (l, u) = (node.lower[j], node.upper[j]);
        if !(u > l) {
            continue;
        }
        let alpha = |k: usize| l + (u - l) * k as f64 / (grid_points + 1) as f64;
        let mut fails = |k: usize| {
            ubox[j] = alpha(k);
            prunes(weyl_lower_bound(sigma, &ubox, r), z_f, tol)
        };
        // The bound grows as alpha shrinks, so the pruned grid indices form a prefix 1..=k*.
        if !fails(1) {
            ubox[j] = u;
            continue;
        }
        let (mut good, mut bad) = (1usize, grid_points + 1);
        while bad - good > 1 {
            let mid = (good + bad) / 2;
            if fails(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        ubox[j] = u;
        out.lower[j] = alpha(good);
    }
    out
}
