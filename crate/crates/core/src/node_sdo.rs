//! Node relaxation for `q = 1`: the trailing-eigenvalue objective with each bilinear
//! term `-W_ii phi_i` replaced by its convex envelope on `[0, 1] x [l_i, u_i]`,
//!
//! ```text
//! min  <W, sigma> - sum_i z_i
//! s.t. 0 <= W <= I, Tr W = p - r,  sigma - diag(phi) PSD,  phi >= l,
//!      z_i <= u_i W_ii,  z_i <= phi_i + l_i W_ii - l_i.
//! ```
//!
//! The solver is a three-block ADMM on the consensus `Y1 = W`, `Y2 = sigma - diag(phi)`,
//! `Y3 = (diag W, phi)`. Its multipliers are turned into an exactly feasible point of the
//! Lagrangian dual, whose value is the certified bound
//!
//! ```text
//! sum_{k > r} lambda_k(sigma - diag(u) + diag((u - l) mu)) - <P, sigma - diag(l)>,
//! P PSD,  0 <= mu <= 1,  diag(P) >= mu.
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::cg::solve_cg_concave;
use crate::error::{CfaError, Result};
use crate::linalg::{eigh, eigvalsh, lambda_min, project_psd, project_spectrahedron, SymMatrix};
use crate::model::{repair_feasibility, PhiVec, ProblemSpec};
use crate::weyl::BoxBounds;

pub const DEFAULT_NODE_TOL: f64 = 1e-3;
pub const DEFAULT_NODE_MAX_ITER: usize = 5_000;

/// Convex envelope of `-x y` on `[0, 1] x [l, u]`.
#[inline]
pub fn envelope_value(x: f64, y: f64, l: f64, u: f64) -> f64 {
    (-u * x).max(l - l * x - y)
}

#[derive(Clone, Debug)]
pub struct NodeRelaxation {
    pub sigma: SymMatrix,
    pub r: usize,
    pub bounds: BoxBounds,
}

impl NodeRelaxation {
    pub fn new(sigma: SymMatrix, r: usize, bounds: BoxBounds) -> Result<Self> {
        if bounds.dim() != sigma.dim() {
            return Err(CfaError::input("box dimension does not match sigma"));
        }
        if r >= sigma.dim() {
            return Err(CfaError::input("rank must be below p"));
        }
        Ok(Self { sigma, r, bounds })
    }

    pub fn p(&self) -> usize {
        self.sigma.dim()
    }

    /// Relaxation objective at `(w, phi)` with `z` at its envelope maximum.
    pub fn primal_value(&self, w: &SymMatrix, phi: &[f64]) -> f64 {
        let b = &self.bounds;
        w.dot(&self.sigma)
            + (0..self.p())
                .map(|i| envelope_value(w.get(i, i), phi[i], b.lower[i], b.upper[i]))
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    /// Dual bound evaluation period, in iterations.
    pub check_every: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_NODE_TOL,
            max_iter: DEFAULT_NODE_MAX_ITER,
            rho: 1.0,
            check_every: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Converged,
    /// Iteration cap hit; the bound is valid but may be loose.
    Degraded,
    /// `sigma - diag(l)` is not PSD, so the box holds no feasible point.
    Infeasible,
}

/// ADMM state, reusable across nodes of the same problem.
#[derive(Clone, Debug)]
pub struct NodeWarm {
    w: SymMatrix,
    phi: Vec<f64>,
    y1: SymMatrix,
    y2: SymMatrix,
    d: Vec<f64>,
    psi: Vec<f64>,
    v1: SymMatrix,
    v2: SymMatrix,
    vd: Vec<f64>,
    vpsi: Vec<f64>,
    rho: f64,
}

#[derive(Clone, Debug)]
pub struct NodeResult {
    pub lower_bound: f64,
    /// Relaxation objective at the returned primal point.
    pub relaxation_value: f64,
    pub primal_phi: PhiVec,
    pub primal_w: SymMatrix,
    pub primal_z: Vec<f64>,
    pub status: NodeStatus,
    pub iterations: usize,
    pub warm: Option<NodeWarm>,
}

/// Multipliers of the node relaxation. `mu` goes with `z_i <= phi_i + l_i W_ii - l_i`,
/// `sigma_mult` with `z_i <= u_i W_ii`, `f_lower`/`f_upper` with `l <= phi <= u`, and `p`
/// with `sigma - diag(phi) PSD`.
#[derive(Clone, Debug)]
pub struct DualPoint {
    pub mu: Vec<f64>,
    pub sigma_mult: Vec<f64>,
    pub f_lower: Vec<f64>,
    pub f_upper: Vec<f64>,
    pub p: SymMatrix,
}

#[derive(Clone, Debug)]
pub struct RepairedDual {
    pub point: DualPoint,
    pub bound: f64,
}

/// Dual objective of a feasible point: `sum_{k>r} lambda_k(A) - <P, sigma - diag(l)> - u'f_u`.
fn dual_value(rel: &NodeRelaxation, mu: &[f64], p: &SymMatrix, f_upper: &[f64]) -> f64 {
    let b = &rel.bounds;
    let n = rel.p();
    let shift: Vec<f64> = (0..n)
        .map(|i| b.upper[i] - (b.upper[i] - b.lower[i]) * mu[i])
        .collect();
    let a = rel.sigma.sub_diag(&shift);
    let ev = eigvalsh(&a);
    let fan: f64 = ev.iter().skip(rel.r).sum();
    let pen = p.dot(&rel.sigma.sub_diag(&b.lower));
    let fu: f64 = f_upper.iter().zip(&b.upper).map(|(f, u)| f * u).sum();
    // Cover rounding in the eigenvalues.
    let slack = 16.0 * f64::EPSILON * (n as f64) * (ev[0].abs() + ev[n - 1].abs() + 1.0);
    fan - pen - fu - slack
}

/// Turns an approximate dual point into an exactly feasible one and returns its value.
///
/// Steps, in order: `f_u = 0`; clamp `mu, sigma >= 0` and rescale to `mu + sigma = 1`;
/// project `P` onto the PSD cone and set `f_l = diag(P) - mu`, lowering `mu_i` (and raising
/// `sigma_i`) wherever that would be negative; the matrix equality is then met by taking
/// the eigenvalue multiplier and its PSD slack from the spectrum of `A(mu)`, which is what
/// the trailing eigenvalue sum in the objective encodes.
pub fn dual_repair(cand: &DualPoint, rel: &NodeRelaxation) -> RepairedDual {
    let n = rel.p();
    let f_upper = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut sg = vec![1.0; n];
    for i in 0..n {
        let (m, s) = (cand.mu[i].max(0.0), cand.sigma_mult[i].max(0.0));
        if m + s > 0.0 && m.is_finite() && s.is_finite() {
            mu[i] = m / (m + s);
            sg[i] = 1.0 - mu[i];
        }
    }
    let p = project_psd(&cand.p);
    let mut f_lower = vec![0.0; n];
    for i in 0..n {
        let pii = p.get(i, i);
        if pii < mu[i] {
            mu[i] = pii.max(0.0);
            sg[i] = 1.0 - mu[i];
        }
        f_lower[i] = pii - mu[i];
    }
    let bound = dual_value(rel, &mu, &p, &f_upper);
    RepairedDual {
        point: DualPoint {
            mu,
            sigma_mult: sg,
            f_lower,
            f_upper,
            p,
        },
        bound,
    }
}

/// `min` over the box of the 2-D prox of `t max(l - l d - psi, -u d)` at `(a, b)`, with `psi >= l`.
fn envelope_prox(a: f64, b: f64, l: f64, u: f64, t: f64) -> (f64, f64) {
    let g = |d: f64, s: f64| (l - l * d - s) - (-u * d);
    // Gradients of the two pieces are (-l, -1) and (-u, 0).
    let (d1, s1) = (a + t * l, b + t);
    let (d0, s0) = (a + t * u, b);
    let (d, s) = if g(d1, s1) >= 0.0 {
        (d1, s1)
    } else if g(d0, s0) <= 0.0 {
        (d0, s0)
    } else {
        // Mixed weight theta on the first piece; delta = (u - l, -1).
        let (dx, dy) = (u - l, -1.0);
        let theta = (g(a + t * u, b) / (t * (dx * dx + dy * dy))).clamp(0.0, 1.0);
        (a + t * (theta * l + (1.0 - theta) * u), b + t * theta)
    };
    if s >= l {
        return (d, s);
    }
    // On psi = l the term is t max(-l d, -u d): slope -l for d > 0 and -u for d < 0.
    let d = if a + t * l > 0.0 {
        a + t * l
    } else if a + t * u < 0.0 {
        a + t * u
    } else {
        0.0
    };
    (d, l)
}

impl NodeWarm {
    fn cold(rel: &NodeRelaxation, rho: f64) -> Self {
        let n = rel.p();
        let w = SymMatrix::identity(n).scale((n - rel.r) as f64 / n as f64);
        let phi = rel.bounds.lower.clone();
        Self {
            y1: w.clone(),
            y2: project_psd(&rel.sigma.sub_diag(&phi)),
            d: w.diag(),
            psi: phi.clone(),
            w,
            phi,
            v1: SymMatrix::zeros(n),
            v2: SymMatrix::zeros(n),
            vd: vec![0.0; n],
            vpsi: vec![0.0; n],
            rho,
        }
    }

    fn rescale(&mut self, factor: f64) {
        self.rho *= factor;
        self.v1 = self.v1.scale(1.0 / factor);
        self.v2 = self.v2.scale(1.0 / factor);
        self.vd.iter_mut().for_each(|v| *v /= factor);
        self.vpsi.iter_mut().for_each(|v| *v /= factor);
    }

    fn dual_candidate(&self, rel: &NodeRelaxation) -> DualPoint {
        let b = &rel.bounds;
        let n = rel.p();
        let mu: Vec<f64> = (0..n)
            .map(|i| {
                let w = b.width(i);
                if w > 0.0 {
                    ((self.rho * self.vd[i] + b.upper[i]) / w).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        DualPoint {
            sigma_mult: mu.iter().map(|m| 1.0 - m).collect(),
            mu,
            f_lower: vec![0.0; n],
            f_upper: vec![0.0; n],
            p: self.v2.scale(-self.rho),
        }
    }
}

/// Best valid bound from the ADMM multipliers. Besides the repaired point itself, `mu` is
/// raised to `min(1, P_ii)` (still feasible, never worse) and `(mu, P) = 0` is tried; the
/// latter is the trailing sum of `sigma - diag(u)`.
fn certified_bound(rel: &NodeRelaxation, st: &NodeWarm) -> f64 {
    let rep = dual_repair(&st.dual_candidate(rel), rel);
    let n = rel.p();
    let raised: Vec<f64> = (0..n)
        .map(|i| if rel.bounds.width(i) > 0.0 { rep.point.p.get(i, i).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    let zero = vec![0.0; n];
    rep.bound
        .max(dual_value(rel, &raised, &rep.point.p, &zero))
        .max(dual_value(rel, &zero, &SymMatrix::zeros(n), &zero))
}

pub fn solve_node(rel: &NodeRelaxation, tol: f64, warm: Option<NodeWarm>) -> Result<NodeResult> {
    solve_node_with(
        rel,
        &NodeConfig {
            tol,
            ..NodeConfig::default()
        },
        warm,
    )
}

pub fn solve_node_with(
    rel: &NodeRelaxation,
    cfg: &NodeConfig,
    warm: Option<NodeWarm>,
) -> Result<NodeResult> {
    if !(cfg.tol > 0.0) || cfg.check_every == 0 {
        return Err(CfaError::input("node tolerance and check period must be positive"));
    }
    let n = rel.p();
    let b = &rel.bounds;
    let sigma = &rel.sigma;
    let e0 = eigh(&sigma.sub_diag(&b.lower));
    let scale = e0.lambda_max().abs().max(1.0);
    if e0.lambda_min() < -1e-10 * scale {
        let w = SymMatrix::identity(n).scale((n - rel.r) as f64 / n as f64);
        return Ok(NodeResult {
            lower_bound: f64::INFINITY,
            relaxation_value: f64::INFINITY,
            primal_phi: PhiVec(b.lower.clone()),
            primal_z: vec![0.0; n],
            primal_w: w,
            status: NodeStatus::Infeasible,
            iterations: 0,
            warm,
        });
    }
    let mut st = match warm {
        Some(s) if s.phi.len() == n && s.rho > 0.0 => s,
        _ => NodeWarm::cold(rel, cfg.rho),
    };
    let sdiag = sigma.diag();
    let trace_w = (n - rel.r) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut status = NodeStatus::Degraded;
    let mut iterations = cfg.max_iter;
    let abs_tol = cfg.tol * libm::sqrt(n as f64);
    for it in 1..=cfg.max_iter {
        let rho = st.rho;
        // x-update: least squares against Y - V.
        let b1 = st.y1.sub(&st.v1);
        let b2 = st.y2.sub(&st.v2);
        let mut w = b1;
        for i in 0..n {
            let wi = 0.5 * (w.get(i, i) + st.d[i] - st.vd[i]);
            w.set(i, i, wi);
            st.phi[i] = 0.5 * ((sdiag[i] - b2.get(i, i)) + st.psi[i] - st.vpsi[i]);
        }
        st.w = w;
        // Y-update.
        let resid_mat = sigma.sub_diag(&st.phi);
        let y1 = project_spectrahedron(&st.w.add(&st.v1).lincomb(1.0, sigma, -1.0 / rho), trace_w);
        let y2 = project_psd(&resid_mat.add(&st.v2));
        let mut dual_sq = 0.0;
        for i in 0..n {
            let (d, s) = envelope_prox(
                st.w.get(i, i) + st.vd[i],
                st.phi[i] + st.vpsi[i],
                b.lower[i],
                b.upper[i],
                1.0 / rho,
            );
            dual_sq += (d - st.d[i]) * (d - st.d[i]) + (s - st.psi[i]) * (s - st.psi[i]);
            st.d[i] = d;
            st.psi[i] = s;
        }
        let dy1 = y1.sub(&st.y1);
        let dy2 = y2.sub(&st.y2);
        dual_sq += dy1.dot(&dy1) + dy2.dot(&dy2);
        st.y1 = y1;
        st.y2 = y2;
        // Multiplier update.
        let r1 = st.w.sub(&st.y1);
        let r2 = resid_mat.sub(&st.y2);
        st.v1 = st.v1.add(&r1);
        st.v2 = st.v2.add(&r2);
        let mut primal_sq = r1.dot(&r1) + r2.dot(&r2);
        for i in 0..n {
            let rd = st.w.get(i, i) - st.d[i];
            let rp = st.phi[i] - st.psi[i];
            st.vd[i] += rd;
            st.vpsi[i] += rp;
            primal_sq += rd * rd + rp * rp;
        }
        let primal = libm::sqrt(primal_sq);
        let dual = rho * libm::sqrt(dual_sq);
        let small = primal <= abs_tol && dual <= abs_tol;
        if small || it % cfg.check_every == 0 {
            best = best.max(certified_bound(rel, &st));
            let (phi, _) = clamp_primal(rel, &st);
            let upper = rel.primal_value(&st.y1, &phi);
            if small || upper - best <= cfg.tol * upper.abs().max(1.0) {
                status = NodeStatus::Converged;
                iterations = it;
                break;
            }
        }
        if it % cfg.check_every == 0 {
            if primal > 10.0 * dual {
                st.rescale(2.0);
            } else if dual > 10.0 * primal {
                st.rescale(0.5);
            }
        }
    }
    if status == NodeStatus::Degraded {
        best = best.max(certified_bound(rel, &st));
    }
    let (phi, z) = feasible_primal(rel, &st);
    Ok(NodeResult {
        lower_bound: best,
        relaxation_value: rel.primal_value(&st.y1, &phi),
        primal_phi: PhiVec(phi),
        primal_w: st.y1.clone(),
        primal_z: z,
        status,
        iterations,
        warm: Some(st),
    })
}

/// `phi` clamped into the box and the matching envelope `z`.
fn clamp_primal(rel: &NodeRelaxation, st: &NodeWarm) -> (Vec<f64>, Vec<f64>) {
    let phi = rel.bounds.clamp(&st.phi);
    let z = envelope_z(rel, &st.y1, &phi);
    (phi, z)
}

/// Like [`clamp_primal`], then pulled toward `l` until `sigma - diag(phi)` is PSD, so the
/// point is feasible for the relaxation. Assumes `sigma - diag(l)` is (nearly) PSD.
fn feasible_primal(rel: &NodeRelaxation, st: &NodeWarm) -> (Vec<f64>, Vec<f64>) {
    let l = &rel.bounds.lower;
    let top = rel.bounds.clamp(&st.phi);
    let at = |t: f64| -> Vec<f64> { l.iter().zip(&top).map(|(a, b)| a + t * (b - a)).collect() };
    let floor = lambda_min(&rel.sigma.sub_diag(l)).min(0.0);
    let ok = |t: f64| lambda_min(&rel.sigma.sub_diag(&at(t))) >= floor;
    let phi = if ok(1.0) {
        top
    } else {
        // lambda_min is concave along the segment, so the feasible part is an interval [0, t*].
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(lo)
    };
    let z = envelope_z(rel, &st.y1, &phi);
    (phi, z)
}

fn envelope_z(rel: &NodeRelaxation, w: &SymMatrix, phi: &[f64]) -> Vec<f64> {
    let b = &rel.bounds;
    (0..rel.p())
        .map(|i| {
            let wi = w.get(i, i);
            (phi[i] + b.lower[i] * wi - b.lower[i]).min(b.upper[i] * wi)
        })
        .collect()
}

/// Restores feasibility of `phi_approx` and runs the concave scheme from there.
pub fn polish_incumbent(phi_approx: &[f64], spec: &ProblemSpec) -> Result<(PhiVec, f64)> {
    let start = repair_feasibility(&spec.sigma, phi_approx);
    let base = crate::model::objective_fq(spec, &start)?;
    let out = solve_cg_concave(spec, Some(&start))?;
    if out.solution.objective <= base {
        Ok((out.solution.phi, out.solution.objective))
    } else {
        Ok((PhiVec(start), base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn running() -> SymMatrix {
        SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap()
    }

    fn random_psd(rng: &mut Rng, p: usize) -> SymMatrix {
        let g: Vec<f64> = (0..p * p).map(|_| rng.normal()).collect();
        let m = SymMatrix::from_fn(p, |i, j| g[i * p + j] + g[j * p + i]);
        m.sym_product(&m)
    }

    fn rel(sigma: SymMatrix, r: usize, l: Vec<f64>, u: Vec<f64>) -> NodeRelaxation {
        NodeRelaxation::new(sigma, r, BoxBounds::new(l, u).unwrap()).unwrap()
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(envelope_value(0.5, 0.5, 0.0, 1.0), -0.5);
        for (x, y) in [(0.0, 0.2), (0.0, 0.9), (1.0, 0.2), (1.0, 0.9)] {
            assert!((envelope_value(x, y, 0.2, 0.9) + x * y).abs() < 1e-15);
        }
        assert!((envelope_value(0.3, 0.4, 0.4, 0.4) + 0.12).abs() < 1e-15);
    }

    #[test]
    fn prox_is_optimal_on_grid() {
        let (l, u, t) = (0.2, 0.9, 0.7);
        for (a, b) in [(0.3, 0.1), (1.5, -0.4), (-0.2, 0.8), (0.5, 0.5)] {
            let (d, s) = envelope_prox(a, b, l, u, t);
            let f = |d: f64, s: f64| t * envelope_value(d, s, l, u) + 0.5 * ((d - a).powi(2) + (s - b).powi(2));
            let fv = f(d, s);
            assert!(s >= l - 1e-15);
            for i in -40..=40 {
                for j in 0..=40 {
                    let (dd, ss) = (d + i as f64 * 0.01, l + j as f64 * 0.02);
                    assert!(f(dd, ss) >= fv - 1e-12, "({a},{b}): {dd},{ss}");
                }
            }
        }
    }

    #[test]
    fn point_box_gives_fan_value() {
        let mut rng = Rng::new(3);
        for p in 3..=6 {
            let s = random_psd(&mut rng, p);
            for r in 0..p {
                let nr = rel(s.clone(), r, vec![0.0; p], vec![0.0; p]);
                let res = solve_node(&nr, 1e-3, None).unwrap();
                let fan: f64 = eigvalsh(&s).iter().skip(r).sum();
                assert!(res.lower_bound >= fan - 1e-4 && res.lower_bound <= fan + 1e-9);
            }
        }
    }

    #[test]
    fn identity_box_optimum_zero() {
        let nr = rel(SymMatrix::identity(2), 0, vec![0.0; 2], vec![1.0; 2]);
        let res = solve_node(&nr, 1e-4, None).unwrap();
        assert!(res.lower_bound <= 1e-9 && res.lower_bound >= -1e-3, "{}", res.lower_bound);
    }

    #[test]
    fn running_example_range() {
        let nr = rel(running(), 1, vec![0.0; 2], vec![0.75; 2]);
        let res = solve_node(&nr, 1e-4, None).unwrap();
        assert!(res.lower_bound <= 1e-9 && res.lower_bound >= -0.75, "{}", res.lower_bound);
        assert_eq!(res.status, NodeStatus::Converged);
    }

    #[test]
    fn infeasible_box() {
        let nr = rel(running(), 0, vec![0.8, 0.8], vec![0.9, 0.9]);
        let res = solve_node(&nr, 1e-3, None).unwrap();
        assert_eq!(res.status, NodeStatus::Infeasible);
        assert_eq!(res.lower_bound, f64::INFINITY);
    }

    #[test]
    fn repair_keeps_feasible_point() {
        let nr = rel(running(), 0, vec![0.0; 2], vec![0.75; 2]);
        let cand = DualPoint {
            mu: vec![0.25, 0.5],
            sigma_mult: vec![0.75, 0.5],
            f_lower: vec![0.25, 0.0],
            f_upper: vec![0.0; 2],
            p: SymMatrix::from_diag(&[0.5, 0.5]),
        };
        let rep = dual_repair(&cand, &nr);
        assert_eq!(rep.point.mu, cand.mu);
        let direct = dual_value(&nr, &cand.mu, &cand.p, &[0.0, 0.0]);
        assert_eq!(rep.bound, direct);
        // Scrambled input is still mapped to a feasible point.
        let bad = DualPoint {
            mu: vec![-1.0, 3.0],
            sigma_mult: vec![0.0, 1.0],
            f_lower: vec![0.0; 2],
            f_upper: vec![1.0; 2],
            p: SymMatrix::from_diag(&[0.1, -2.0]),
        };
        let rep = dual_repair(&bad, &nr);
        let q = &rep.point;
        for i in 0..2 {
            assert!((q.mu[i] + q.sigma_mult[i] - 1.0).abs() < 1e-15);
            assert!(q.mu[i] >= 0.0 && q.p.get(i, i) >= q.mu[i]);
            assert!(q.f_lower[i] >= 0.0 && q.f_upper[i] == 0.0);
        }
        assert!(rep.bound.is_finite());
    }

    #[test]
    fn warm_start_is_faster() {
        let mut rng = Rng::new(11);
        let s = random_psd(&mut rng, 5).add(&SymMatrix::identity(5));
        let s = crate::linalg::to_correlation(&s).unwrap();
        let u = crate::weyl::compute_u(&s);
        let parent = rel(s.clone(), 1, vec![0.0; 5], u.clone());
        let res = solve_node(&parent, 1e-3, None).unwrap();
        let mut upper = u.clone();
        upper[0] = 0.5 * u[0];
        let child = rel(s, 1, vec![0.0; 5], upper);
        let cold = solve_node(&child, 1e-3, None).unwrap();
        let warm = solve_node(&child, 1e-3, res.warm).unwrap();
        assert!(warm.iterations <= cold.iterations, "{} vs {}", warm.iterations, cold.iterations);
    }

    #[test]
    fn polish_examples() {
        let spec = ProblemSpec::new(running(), 1, 1.0).unwrap();
        let (phi, f) = polish_incumbent(&[0.0, 0.0], &spec).unwrap();
        assert!(f <= 0.5 + 1e-12);
        assert!(crate::model::check_feasible(&spec, &phi, 1e-9).feasible);
        let (_, f) = polish_incumbent(&[0.9, 0.9], &spec).unwrap();
        assert!(f.is_finite() && f <= 0.5);
    }
}
