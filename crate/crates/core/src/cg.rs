//! Conditional-gradient upper bounds.
//!
//! [`solve_cg_concave`] alternates an exact `Phi` step (ADMM) with the eigenvector
//! `W` step, descending the concave marginal `G_q(W)`. [`solve_cg_smooth`] linearizes
//! `g_q(W, Phi) = Tr(W (sigma - Phi)^q)` in both blocks and takes Armijo steps.

use alloc::vec::Vec;

use crate::error::{CfaError, Result};
use crate::linalg::{eigh, power, EigenPairs, SymMatrix};
use crate::model::{complete_solution, repair_feasibility, PhiVec, ProblemSpec, Solution};
use crate::phi_admm::{run_admm, AdmmConfig, AdmmState, QuadDiagObjective};
use crate::rng::Rng;
use crate::weyl::compute_u;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Joint linearization with an Armijo line search.
    Smooth,
    /// Alternating exact `Phi` and `W` steps on the concave marginal.
    Concave,
}

impl Algorithm {
    /// `Concave` for `q` in {1, 2}, `Smooth` otherwise.
    pub fn default_for(q: f64) -> Self {
        if q == 1.0 || q == 2.0 {
            Algorithm::Concave
        } else {
            Algorithm::Smooth
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgConfig {
    pub max_iter: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub eta_min: f64,
    /// Number of starts; starts after the first draw `phi ~ U[0, u]`.
    pub restarts: usize,
    pub seed: u64,
    pub admm: AdmmConfig,
    /// Continue from the feasibility-repaired last ADMM iterate when the inner solve
    /// hits `admm.max_iter`. When false the cap is a [`CfaError::Convergence`].
    pub accept_inexact: bool,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            armijo_c: 1e-4,
            backtrack: 0.5,
            eta_min: 1e-8,
            restarts: 1,
            seed: 0,
            admm: AdmmConfig::default(),
            accept_inexact: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    /// The line search found no decrease down to `eta_min`.
    Stationary,
    IterationCap,
}

/// One trace entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CgIterate {
    pub iteration: usize,
    /// `g_q(W, Phi)` at the accepted iterate.
    pub g_value: f64,
    /// `G_q(W)`; only the concave scheme evaluates it.
    pub big_g: Option<f64>,
    /// Concave scheme: `Delta(W)`. Smooth scheme: directional derivative along the
    /// conditional-gradient direction. Both are `<= 0`.
    pub delta: f64,
    /// Accepted Armijo step (smooth scheme only).
    pub step: Option<f64>,
    pub admm_iterations: usize,
    /// False when the inner solve hit its cap and the repaired last iterate was used.
    pub admm_converged: bool,
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Solution,
    pub trace: Vec<CgIterate>,
    pub status: CgStatus,
    pub algorithm: Algorithm,
}

impl CgOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Projector onto the trailing `p - r` eigenvectors of `m`.
pub fn update_w(m: &SymMatrix, r: usize) -> SymMatrix {
    w_from_eigen(&eigh(m), r)
}

fn w_from_eigen(e: &EigenPairs, r: usize) -> SymMatrix {
    let p = e.dim();
    if 2 * r <= p {
        let top = e.spectral_map(|k, _| if k < r { 1.0 } else { 0.0 });
        SymMatrix::identity(p).sub(&top)
    } else {
        e.spectral_map(|k, _| if k >= r { 1.0 } else { 0.0 })
    }
}

/// `(sigma - diag(phi))^q` with negative eigenvalues clamped when `q != 1`.
fn residual_power(sigma: &SymMatrix, phi: &[f64], q: f64) -> (SymMatrix, EigenPairs) {
    let x = sigma.sub_diag(phi);
    let e = eigh(&x);
    if q == 1.0 {
        return (x, e);
    }
    let m = e.spectral_map(|_, v| power(v.max(0.0), q));
    let em = EigenPairs {
        values: e.values.iter().map(|&v| power(v.max(0.0), q)).collect(),
        vectors: e.vectors.clone(),
    };
    (m, em)
}

/// `g_q(W, Phi) = <W, (sigma - Phi)^q>`.
pub fn g_value(spec: &ProblemSpec, w: &SymMatrix, phi: &[f64]) -> f64 {
    if spec.q == 1.0 {
        w.dot(&spec.sigma) - w.diag().iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()
    } else {
        w.dot(&residual_power(&spec.sigma, phi, spec.q).0)
    }
}

/// `Delta(W) = sum_{i > r} lambda_i(M) - <W, M>` with `M = (sigma - Phi)^q`.
pub fn stationarity_gap(spec: &ProblemSpec, w: &SymMatrix, phi: &[f64]) -> f64 {
    let (m, e) = residual_power(&spec.sigma, phi, spec.q);
    e.trailing_sum(spec.r, |v| v) - w.dot(&m)
}

fn phi_objective(spec: &ProblemSpec, w: &SymMatrix) -> QuadDiagObjective {
    if spec.q == 1.0 {
        QuadDiagObjective::linear_from_w(w)
    } else {
        QuadDiagObjective::quadratic_from_w(w, &spec.sigma)
    }
}

fn phi_step(
    spec: &ProblemSpec,
    obj: &QuadDiagObjective,
    cfg: &CgConfig,
    warm: Option<AdmmState>,
) -> Result<(Vec<f64>, AdmmState, bool)> {
    let (st, converged) = run_admm(&spec.sigma, obj, spec.admm_tol(), &cfg.admm, warm)?;
    if converged {
        return Ok((st.phi.0.clone(), st, true));
    }
    if !cfg.accept_inexact {
        return Err(CfaError::Convergence {
            solver: "phi-subproblem ADMM inside conditional gradient",
            iterations: st.iterations,
            residual: st.primal_residual,
            best: st.phi.0,
        });
    }
    Ok((repair_feasibility(&spec.sigma, &st.phi), st, false))
}

fn default_start(spec: &ProblemSpec) -> Vec<f64> {
    compute_u(&spec.sigma).iter().map(|v| 0.5 * v).collect()
}

fn start_point(spec: &ProblemSpec, init: Option<&[f64]>) -> Result<Vec<f64>> {
    let raw = match init {
        Some(x) if x.len() != spec.p() => {
            return Err(CfaError::input("initial phi has the wrong length"))
        }
        Some(x) => x.to_vec(),
        None => default_start(spec),
    };
    Ok(repair_feasibility(&spec.sigma, &raw))
}

pub fn solve_cg_concave(spec: &ProblemSpec, init: Option<&[f64]>) -> Result<CgOutcome> {
    solve_cg_concave_with(spec, &CgConfig::default(), init, &mut |_| {})
}

pub fn solve_cg_concave_with(
    spec: &ProblemSpec,
    cfg: &CgConfig,
    init: Option<&[f64]>,
    observer: &mut dyn FnMut(&CgIterate),
) -> Result<CgOutcome> {
    spec.validate()?;
    if spec.q != 1.0 && spec.q != 2.0 {
        return Err(CfaError::input(
            "the concave scheme supports q = 1 and q = 2; use the smooth scheme",
        ));
    }
    let mut phi = start_point(spec, init)?;
    let (_, e0) = residual_power(&spec.sigma, &phi, spec.q);
    let mut w = w_from_eigen(&e0, spec.r);
    let mut warm: Option<AdmmState> = None;
    let mut trace = Vec::new();
    let mut prev_g: Option<f64> = None;
    let mut status = CgStatus::IterationCap;
    for k in 1..=cfg.max_iter {
        let obj = phi_objective(spec, &w);
        let (cand, st, admm_converged) = phi_step(spec, &obj, cfg, warm)?;
        let admm_iterations = st.iterations;
        warm = Some(st);
        // Keep the previous Phi when the inexact step would not decrease g for this W;
        // this makes the recorded G sequence monotone by construction.
        let g_cand = g_value(spec, &w, &cand);
        let g_prev = g_value(spec, &w, &phi);
        let g = if g_cand <= g_prev {
            phi = cand;
            g_cand
        } else {
            g_prev
        };
        let (m, e) = residual_power(&spec.sigma, &phi, spec.q);
        let delta = e.trailing_sum(spec.r, |v| v) - w.dot(&m);
        let it = CgIterate {
            iteration: k,
            g_value: g,
            big_g: Some(g),
            delta,
            step: None,
            admm_iterations,
            admm_converged,
        };
        observer(&it);
        trace.push(it);
        if g <= 1e-12 || prev_g.is_some_and(|gp| gp - g <= spec.cg_tol * gp) {
            status = CgStatus::Converged;
            break;
        }
        prev_g = Some(g);
        w = w_from_eigen(&e, spec.r);
    }
    let phi = PhiVec(repair_feasibility(&spec.sigma, &phi));
    let solution = complete_solution(spec, phi, Some(w))?;
    Ok(CgOutcome {
        solution,
        trace,
        status,
        algorithm: Algorithm::Concave,
    })
}

pub fn solve_cg_smooth(spec: &ProblemSpec, init: Option<&[f64]>) -> Result<CgOutcome> {
    solve_cg_smooth_with(spec, &CgConfig::default(), init, &mut |_| {})
}

pub fn solve_cg_smooth_with(
    spec: &ProblemSpec,
    cfg: &CgConfig,
    init: Option<&[f64]>,
    observer: &mut dyn FnMut(&CgIterate),
) -> Result<CgOutcome> {
    spec.validate()?;
    let q = spec.q;
    let mut phi = start_point(spec, init)?;
    let (_, e0) = residual_power(&spec.sigma, &phi, q);
    let mut w = w_from_eigen(&e0, spec.r);
    let mut g = g_value(spec, &w, &phi);
    let mut warm: Option<AdmmState> = None;
    let mut trace = Vec::new();
    let mut status = CgStatus::IterationCap;
    for k in 1..=cfg.max_iter {
        let (m, e) = residual_power(&spec.sigma, &phi, q);
        let w_bar = w_from_eigen(&e, spec.r);
        let ell: Vec<f64> = if q == 1.0 {
            w.diag().iter().map(|v| -v).collect()
        } else {
            let x = spec.sigma.sub_diag(&phi);
            let xq1 = eigh(&x).spectral_map(|_, v| libm::pow(v.max(0.0), q - 1.0));
            w.diag_of_product(&xq1).iter().map(|v| -q * v).collect()
        };
        let obj = QuadDiagObjective {
            c: alloc::vec![0.0; phi.len()],
            d: ell.clone(),
        };
        let (phi_bar, st, admm_converged) = phi_step(spec, &obj, cfg, warm)?;
        let admm_iterations = st.iterations;
        warm = Some(st);
        let d_w = w_bar.sub(&w);
        let d_phi: Vec<f64> = phi_bar.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let slope = m.dot(&d_w) + ell.iter().zip(&d_phi).map(|(a, b)| a * b).sum::<f64>();
        let mut accepted: Option<(f64, SymMatrix, Vec<f64>, f64)> = None;
        if slope < 0.0 {
            let mut eta = 1.0;
            while eta >= cfg.eta_min {
                let w_try = w.lincomb(1.0, &d_w, eta);
                let phi_try: Vec<f64> = phi.iter().zip(&d_phi).map(|(a, b)| a + eta * b).collect();
                let g_try = g_value(spec, &w_try, &phi_try);
                if g_try <= g + cfg.armijo_c * eta * slope {
                    accepted = Some((eta, w_try, phi_try, g_try));
                    break;
                }
                eta *= cfg.backtrack;
            }
        }
        let Some((eta, w_new, phi_new, g_new)) = accepted else {
            status = CgStatus::Stationary;
            break;
        };
        let decrease = g - g_new;
        w = w_new;
        phi = phi_new;
        g = g_new;
        let it = CgIterate {
            iteration: k,
            g_value: g,
            big_g: None,
            delta: slope,
            step: Some(eta),
            admm_iterations,
            admm_converged,
        };
        observer(&it);
        trace.push(it);
        if g <= 1e-12 || decrease <= spec.cg_tol * g.abs() {
            status = CgStatus::Converged;
            break;
        }
    }
    let phi = PhiVec(repair_feasibility(&spec.sigma, &phi));
    let solution = complete_solution(spec, phi, Some(w))?;
    Ok(CgOutcome {
        solution,
        trace,
        status,
        algorithm: Algorithm::Smooth,
    })
}

/// Runs `cfg.restarts` starts of `algorithm` and keeps the lowest objective.
pub fn solve_cg(
    spec: &ProblemSpec,
    algorithm: Algorithm,
    cfg: &CgConfig,
    init: Option<&[f64]>,
    observer: &mut dyn FnMut(&CgIterate),
) -> Result<CgOutcome> {
    let run = |start: Option<&[f64]>, obs: &mut dyn FnMut(&CgIterate)| match algorithm {
        Algorithm::Concave => solve_cg_concave_with(spec, cfg, start, obs),
        Algorithm::Smooth => solve_cg_smooth_with(spec, cfg, start, obs),
    };
    let mut best = run(init, observer)?;
    if cfg.restarts > 1 {
        let u = compute_u(&spec.sigma);
        let mut rng = Rng::new(cfg.seed);
        for _ in 1..cfg.restarts {
            let start: Vec<f64> = u.iter().map(|&ui| rng.uniform_in(0.0, ui)).collect();
            let out = run(Some(&start), &mut |_| {})?;
            if out.solution.objective < best.solution.objective {
                best = out;
            }
        }
    }
    Ok(best)
}
