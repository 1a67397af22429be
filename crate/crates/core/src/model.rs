//! Problem definition, objective, feasibility and low-rank recovery.

use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{CfaError, Result};
use crate::linalg::{self, best_rank_r, eigvalsh, power, SymMatrix, FEAS_TOL, PSD_REL_TOL};

pub const DEFAULT_CG_TOL: f64 = 1e-5;
pub const DEFAULT_ADMM_TOL_FACTOR: f64 = 1e-4;

/// One solve: `min ||sigma - (theta + diag(phi))||_q^q` with `rank(theta) <= r`.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub sigma: SymMatrix,
    pub r: usize,
    pub q: f64,
    pub cg_tol: f64,
    /// Inner ADMM tolerance is `cg_tol * admm_tol_factor`.
    pub admm_tol_factor: f64,
}

impl ProblemSpec {
    /// Validates `sigma` (finite, PSD up to [`PSD_REL_TOL`]) and the shape parameters.
    pub fn new(sigma: SymMatrix, r: usize, q: f64) -> Result<Self> {
        let spec = Self {
            sigma,
            r,
            q,
            cg_tol: DEFAULT_CG_TOL,
            admm_tol_factor: DEFAULT_ADMM_TOL_FACTOR,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tolerances(mut self, cg_tol: f64, admm_tol_factor: f64) -> Result<Self> {
        self.cg_tol = cg_tol;
        self.admm_tol_factor = admm_tol_factor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.sigma.dim();
        if p == 0 {
            return Err(CfaError::input("sigma is empty"));
        }
        if !self.sigma.is_finite() {
            return Err(CfaError::input("sigma has non-finite entries"));
        }
        if self.r >= p {
            return Err(CfaError::input(alloc::format!(
                "rank r = {} must be below p = {}",
                self.r,
                p
            )));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(CfaError::input("q must be a finite number >= 1"));
        }
        if !(self.cg_tol > 0.0) || !(self.admm_tol_factor > 0.0) {
            return Err(CfaError::input("tolerances must be positive"));
        }
        let ev = eigvalsh(&self.sigma);
        let (lmax, lmin) = (ev[0], ev[p - 1]);
        if lmin < -PSD_REL_TOL * lmax.max(0.0) {
            return Err(CfaError::NotPsd {
                lambda_min: lmin,
                lambda_max: lmax,
            });
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.sigma.dim()
    }

    pub fn admm_tol(&self) -> f64 {
        self.cg_tol * self.admm_tol_factor
    }
}

/// Uniqueness vector, the diagonal of `Phi`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PhiVec(pub Vec<f64>);

impl PhiVec {
    pub fn zeros(p: usize) -> Self {
        PhiVec(alloc::vec![0.0; p])
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for PhiVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for PhiVec {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for PhiVec {
    fn from(v: Vec<f64>) -> Self {
        PhiVec(v)
    }
}

/// A fitted model.
#[derive(Clone, Debug)]
pub struct Solution {
    pub phi: PhiVec,
    pub theta: SymMatrix,
    pub objective: f64,
    pub w: Option<SymMatrix>,
}

/// Margins reported by [`check_feasible`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub min_phi: f64,
    pub lambda_min: f64,
}

pub fn check_feasible(spec: &ProblemSpec, phi: &[f64], tol: f64) -> Feasibility {
    feasibility(&spec.sigma, phi, tol)
}

pub(crate) fn feasibility(sigma: &SymMatrix, phi: &[f64], tol: f64) -> Feasibility {
    let min_phi = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_min = linalg::lambda_min(&sigma.sub_diag(phi));
    Feasibility {
        feasible: min_phi >= -tol && lambda_min >= -tol,
        min_phi,
        lambda_min,
    }
}

/// `sum_{i > r} lambda_i(sigma - diag(phi))^q` without a feasibility check.
/// For `q = 1` the eigenvalues enter signed; otherwise negative ones are clamped.
pub fn trailing_objective(sigma: &SymMatrix, phi: &[f64], r: usize, q: f64) -> f64 {
    let ev = eigvalsh(&sigma.sub_diag(phi));
    trailing_from_values(&ev, r, q)
}

pub(crate) fn trailing_from_values(ev: &[f64], r: usize, q: f64) -> f64 {
    ev.iter()
        .skip(r)
        .map(|&v| if q == 1.0 { v } else { power(v.max(0.0), q) })
        .sum()
}

/// Objective `f_q(phi)`; rejects `phi` whose residual has `lambda_min < -FEAS_TOL`.
pub fn objective_fq(spec: &ProblemSpec, phi: &[f64]) -> Result<f64> {
    let ev = eigvalsh(&spec.sigma.sub_diag(phi));
    let lmin = ev[ev.len() - 1];
    let min_phi = phi.iter().copied().fold(f64::INFINITY, f64::min);
    if lmin < -FEAS_TOL || min_phi < -FEAS_TOL {
        return Err(CfaError::Infeasible {
            lambda_min: lmin,
            min_phi,
        });
    }
    Ok(trailing_from_values(&ev, spec.r, spec.q))
}

/// Best rank-`r` approximation of `sigma - diag(phi)`.
pub fn recover_theta(spec: &ProblemSpec, phi: &[f64]) -> Result<SymMatrix> {
    let f = check_feasible(spec, phi, FEAS_TOL);
    if !f.feasible {
        return Err(CfaError::Infeasible {
            lambda_min: f.lambda_min,
            min_phi: f.min_phi,
        });
    }
    Ok(best_rank_r(&spec.sigma.sub_diag(phi), spec.r))
}

/// Builds a [`Solution`] from a feasible `phi`.
pub fn complete_solution(spec: &ProblemSpec, phi: PhiVec, w: Option<SymMatrix>) -> Result<Solution> {
    let objective = objective_fq(spec, &phi)?;
    let theta = recover_theta(spec, &phi)?;
    Ok(Solution {
        phi,
        theta,
        objective,
        w,
    })
}

/// Pulls `phi` back into the feasible set: clamp at zero, shift the diagonal down
/// by the PSD violation, and fall back to scaling toward zero.
pub fn repair_feasibility(sigma: &SymMatrix, phi: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = phi.iter().map(|&v| v.max(0.0)).collect();
    let target = -1e-13 * sigma.max_abs().max(1.0);
    for _ in 0..3 {
        let lmin = linalg::lambda_min(&sigma.sub_diag(&x));
        if lmin >= target {
            return x;
        }
        let t = -lmin * (1.0 + 1e-9) + 1e-15;
        for v in x.iter_mut() {
            *v = (*v - t).max(0.0);
        }
    }
    let ok = |s: f64| linalg::lambda_min(&sigma.sub_diag(&scaled(&x, s))) >= target;
    if ok(1.0) {
        return x;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    scaled(&x, lo)
}

fn scaled(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}
