//! ADMM for `min sum_i (c_i phi_i^2 + d_i phi_i)` over `{phi >= 0 : sigma - diag(phi) PSD}`.
//!
//! Splitting `Lambda = sigma - diag(phi)` with an unscaled multiplier `nu`; each sweep
//! updates `phi` in closed form, projects `Lambda` onto the PSD cone, then ascends `nu`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CfaError, Result};
use crate::linalg::{project_psd, SymMatrix};
use crate::model::PhiVec;

pub const DEFAULT_MAX_ITER: usize = 50_000;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadDiagObjective {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl QuadDiagObjective {
    /// `c = 0, d = -w_ii`: the `q = 1` subproblem for a fixed `W`.
    pub fn linear_from_w(w: &SymMatrix) -> Self {
        let p = w.dim();
        Self {
            c: vec![0.0; p],
            d: w.diag().iter().map(|v| -v).collect(),
        }
    }

    /// `c_i = w_ii`, `d_i = -2 <w_i, sigma_i>`: the `q = 2` subproblem.
    pub fn quadratic_from_w(w: &SymMatrix, sigma: &SymMatrix) -> Self {
        Self {
            c: w.diag(),
            d: w.diag_of_product(sigma).iter().map(|v| -2.0 * v).collect(),
        }
    }

    pub fn value(&self, phi: &[f64]) -> f64 {
        phi.iter()
            .zip(self.c.iter().zip(&self.d))
            .map(|(&x, (&c, &d))| c * x * x + d * x)
            .sum()
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.c.len() != p || self.d.len() != p {
            return Err(CfaError::input("objective length does not match sigma"));
        }
        if self.c.iter().any(|&c| !(c >= 0.0)) || self.d.iter().any(|d| !d.is_finite()) {
            return Err(CfaError::input("objective needs finite d and c >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmmConfig {
    pub max_iter: usize,
    pub rho: f64,
    /// Rebalance `rho` when one residual exceeds the other by this ratio.
    pub balance_ratio: f64,
    pub balance_factor: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            rho: 1.0,
            balance_ratio: 10.0,
            balance_factor: 2.0,
        }
    }
}

/// Solver state; pass it back in as a warm start.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub phi: PhiVec,
    pub lambda: SymMatrix,
    pub nu: SymMatrix,
    pub rho: f64,
    /// Iterations spent by the solve that produced this state.
    pub iterations: usize,
    pub primal_residual: f64,
}

impl AdmmState {
    pub fn cold(sigma: &SymMatrix, rho: f64) -> Self {
        let p = sigma.dim();
        Self {
            phi: PhiVec::zeros(p),
            lambda: sigma.clone(),
            nu: SymMatrix::zeros(p),
            rho,
            iterations: 0,
            primal_residual: f64::INFINITY,
        }
    }
}

/// Closed-form `phi` step: `rho / (rho + 2c) * max{(sigma_ii - lambda_ii) - (d + nu_ii) / rho, 0}`.
#[inline]
pub fn phi_update(sigma_ii: f64, lambda_ii: f64, nu_ii: f64, c: f64, d: f64, rho: f64) -> f64 {
    rho / (rho + 2.0 * c) * ((sigma_ii - lambda_ii) - (d + nu_ii) / rho).max(0.0)
}

pub fn solve_phi_subproblem(
    sigma: &SymMatrix,
    obj: &QuadDiagObjective,
    tol: f64,
    warm: Option<AdmmState>,
) -> Result<(PhiVec, AdmmState)> {
    solve_phi_subproblem_with(sigma, obj, tol, &AdmmConfig::default(), warm)
}

pub fn solve_phi_subproblem_with(
    sigma: &SymMatrix,
    obj: &QuadDiagObjective,
    tol: f64,
    cfg: &AdmmConfig,
    warm: Option<AdmmState>,
) -> Result<(PhiVec, AdmmState)> {
    let (st, converged) = run_admm(sigma, obj, tol, cfg, warm)?;
    if converged {
        return Ok((st.phi.clone(), st));
    }
    Err(CfaError::Convergence {
        solver: "phi-subproblem ADMM",
        iterations: st.iterations,
        residual: st.primal_residual,
        best: st.phi.0,
    })
}

/// The ADMM loop; the flag is false when `cfg.max_iter` ran out.
pub(crate) fn run_admm(
    sigma: &SymMatrix,
    obj: &QuadDiagObjective,
    tol: f64,
    cfg: &AdmmConfig,
    warm: Option<AdmmState>,
) -> Result<(AdmmState, bool)> {
    let p = sigma.dim();
    obj.validate(p)?;
    if !(tol > 0.0) {
        return Err(CfaError::input("ADMM tolerance must be positive"));
    }
    let mut st = match warm {
        Some(s) if s.phi.len() == p && s.lambda.dim() == p && s.rho > 0.0 => s,
        _ => AdmmState::cold(sigma, cfg.rho),
    };
    let sdiag = sigma.diag();
    let mut prev_obj = obj.value(&st.phi);
    for it in 1..=cfg.max_iter {
        let rho = st.rho;
        for i in 0..p {
            st.phi[i] = phi_update(
                sdiag[i],
                st.lambda.get(i, i),
                st.nu.get(i, i),
                obj.c[i],
                obj.d[i],
                rho,
            );
        }
        let target = sigma.sub_diag(&st.phi);
        let lam_new = project_psd(&target.lincomb(1.0, &st.nu, -1.0 / rho));
        let resid = lam_new.sub(&target);
        let dual_sq: f64 = (0..p)
            .map(|i| {
                let d = lam_new.get(i, i) - st.lambda.get(i, i);
                d * d
            })
            .sum();
        let dual = rho * libm::sqrt(dual_sq);
        st.nu = st.nu.lincomb(1.0, &resid, rho);
        st.lambda = lam_new;
        let primal = resid.frobenius();
        st.primal_residual = primal;
        st.iterations = it;
        let cur_obj = obj.value(&st.phi);
        let obj_change = libm::fabs(cur_obj - prev_obj) / libm::fabs(cur_obj).max(1.0);
        prev_obj = cur_obj;
        if primal <= tol && obj_change <= tol {
            return Ok((st, true));
        }
        // The dual residual only steers rho.
        if it % 5 == 0 {
            if primal > cfg.balance_ratio * dual {
                st.rho *= cfg.balance_factor;
            } else if dual > cfg.balance_ratio * primal {
                st.rho /= cfg.balance_factor;
            }
        }
    }
    Ok((st, false))
}

/// Minimum trace factor analysis: maximize `sum phi` over the feasible set.
pub fn solve_mtfa(sigma: &SymMatrix, tol: f64) -> Result<(PhiVec, SymMatrix)> {
    let p = sigma.dim();
    let obj = QuadDiagObjective {
        c: vec![0.0; p],
        d: vec![-1.0; p],
    };
    let (phi, _) = solve_phi_subproblem(sigma, &obj, tol, None)?;
    let phi = PhiVec(crate::model::repair_feasibility(sigma, &phi));
    let theta = sigma.sub_diag(&phi);
    Ok((phi, theta))
}
