//! Branch and bound certification for `q = 1`.
//!
//! Nodes are boxes `[l, u]` on `phi`. Each carries an inherited envelope bound `z_c` and
//! its Weyl bound `w_c`; the global lower bound is the minimum of `max(z_c, w_c)` over open
//! nodes and of the final bounds of closed leaves.

use alloc::vec::Vec;

use crate::cg::solve_cg_concave;
use crate::error::{CfaError, Result};
use crate::model::{complete_solution, trailing_objective, PhiVec, ProblemSpec, Solution};
use crate::node_sdo::{
    polish_incumbent, solve_node_with, NodeConfig, NodeRelaxation, NodeResult, NodeStatus,
    NodeWarm, DEFAULT_NODE_TOL,
};
use crate::rng::Rng;
use crate::weyl::{compute_u, prunes, tighten_bounds, weyl_lower_bound, BoxBounds, TIGHTEN_GRID};

/// Splits closer than this to an endpoint fall back to the midpoint.
const SPLIT_EPS: f64 = 1e-12;
/// A polished point must beat the incumbent by this much to replace it.
const IMPROVE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct BbConfig {
    pub tol: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub node_cap: usize,
    /// Seconds; `f64::INFINITY` for none.
    pub time_cap: f64,
    pub rng_seed: u64,
    pub root_tighten: bool,
    pub tighten_grid: usize,
    pub node_tol: f64,
    pub node_max_iter: usize,
    /// Nodes solved per round. Above 1 the relaxations of a round run on scoped threads
    /// (with `std`); results are applied in selection order, so runs stay deterministic.
    pub jobs: usize,
}

impl Default for BbConfig {
    fn default() -> Self {
        Self {
            tol: 0.1,
            epsilon: 0.4,
            beta: 0.9,
            node_cap: 100_000,
            time_cap: f64::INFINITY,
            rng_seed: 0,
            root_tighten: true,
            tighten_grid: TIGHTEN_GRID,
            node_tol: DEFAULT_NODE_TOL,
            node_max_iter: crate::node_sdo::DEFAULT_NODE_MAX_ITER,
            jobs: 1,
        }
    }
}

impl BbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(CfaError::input("bb tolerance must be positive"));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(CfaError::input("epsilon must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(CfaError::input("beta must lie in [0, 1]"));
        }
        if self.node_cap == 0 || !(self.time_cap > 0.0) || self.jobs == 0 {
            return Err(CfaError::input("node cap, time cap and jobs must be positive"));
        }
        if !(self.node_tol > 0.0) {
            return Err(CfaError::input("node tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BbNode {
    pub bounds: BoxBounds,
    /// Envelope bound inherited from the ancestors.
    pub z_c: f64,
    /// `weyl_lower_bound(sigma, bounds.upper, r)` at creation.
    pub w_c: f64,
    pub depth: usize,
    warm: Option<NodeWarm>,
}

impl BbNode {
    pub fn new(bounds: BoxBounds, z_c: f64, w_c: f64, depth: usize) -> Self {
        Self {
            bounds,
            z_c,
            w_c,
            depth,
            warm: None,
        }
    }

    /// `max(z_c, w_c)`.
    pub fn bound(&self) -> f64 {
        self.z_c.max(self.w_c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GapClosed,
    NodeCap,
    TimeCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeAction {
    /// Weyl bound already within `tol` of the incumbent.
    PrunedWeyl,
    /// Inherited envelope bound already within `tol` of the incumbent.
    PrunedInherited,
    /// Relaxation bound within `tol` of the incumbent.
    Fathomed,
    Infeasible,
    Branched,
}

/// Emitted after every processed node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEvent {
    pub node: usize,
    pub depth: usize,
    pub action: NodeAction,
    /// `max(z_c, w_c)`, raised by the relaxation bound when the node was solved.
    pub node_bound: f64,
    pub z_f: f64,
    pub z_lb: f64,
    pub bounds: BoxBounds,
    pub volume: f64,
    pub open: usize,
    pub elapsed: f64,
}

#[derive(Clone, Debug)]
pub struct BbReport {
    pub incumbent: Solution,
    pub z_f: f64,
    pub z_lb: f64,
    pub gap: f64,
    pub initial_objective: f64,
    pub root_weyl_bound: f64,
    /// Envelope bound of the root relaxation; `None` when the root was never solved.
    pub root_ce_bound: Option<f64>,
    pub nodes_processed: usize,
    pub nodes_pruned_weyl: usize,
    pub nodes_solved: usize,
    pub nodes_degraded: usize,
    pub incumbent_updates: usize,
    pub wall_time: f64,
    pub termination: Termination,
    pub rng_seed: u64,
}

/// Elapsed seconds since the start of a run.
pub trait Clock {
    fn elapsed(&self) -> f64;
}

/// A clock that never advances; time caps are then inert.
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
pub struct StdClock(std::time::Instant);

#[cfg(feature = "std")]
impl StdClock {
    pub fn start() -> Self {
        StdClock(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for StdClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(feature = "std")]
pub fn certify(spec: &ProblemSpec, cfg: &BbConfig) -> Result<BbReport> {
    certify_with(spec, cfg, &StdClock::start(), &mut |_| {})
}

/// Splits `node` on the coordinate with the largest envelope violation `|z_i - W_ii phi_i|`
/// at `(1 - eps) phi_i + eps l_i`. Children inherit `z_c = inherited` and get fresh Weyl bounds.
pub fn branch_node(
    sigma: &crate::linalg::SymMatrix,
    r: usize,
    node: &BbNode,
    primal: &NodeResult,
    eps: f64,
    inherited: f64,
) -> (BbNode, BbNode) {
    let b = &node.bounds;
    let p = b.dim();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..p {
        if b.width(i) <= SPLIT_EPS {
            continue;
        }
        let v = libm::fabs(primal.primal_z[i] - primal.primal_w.get(i, i) * primal.primal_phi[i]);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    let (i, alpha) = match best {
        Some((i, v)) if v > 0.0 => {
            let (l, u) = (b.lower[i], b.upper[i]);
            let a = (1.0 - eps) * primal.primal_phi[i] + eps * l;
            if a <= l + SPLIT_EPS || a >= u - SPLIT_EPS {
                (i, 0.5 * (l + u))
            } else {
                (i, a)
            }
        }
        _ => {
            let i = (0..p)
                .max_by(|&a, &c| b.width(a).total_cmp(&b.width(c)).then(c.cmp(&a)))
                .unwrap_or(0);
            (i, 0.5 * (b.lower[i] + b.upper[i]))
        }
    };
    let mut lo = b.clone();
    lo.upper[i] = alpha;
    let mut hi = b.clone();
    hi.lower[i] = alpha;
    let make = |bx: BoxBounds| {
        let w = weyl_lower_bound(sigma, &bx.upper, r);
        BbNode {
            bounds: bx,
            z_c: inherited,
            w_c: w,
            depth: node.depth + 1,
            warm: primal.warm.clone(),
        }
    };
    (make(lo), make(hi))
}

/// Removes and returns a node. With probability `beta` the node minimizing
/// `max(z_c, w_c)`; otherwise, with probability `beta`, a node attaining `min(Z, W)`
/// (`Z`, `W` the minima of `z_c`, `w_c`), else the argmin of `w_c` when `Z < W` and of
/// `z_c` when `Z > W`. Exact ties between `Z` and `W` go to `z_c`; ties among nodes go to
/// the earliest inserted.
pub fn select_node(open: &mut Vec<BbNode>, beta: f64, rng: &mut Rng) -> Option<BbNode> {
    if open.is_empty() {
        return None;
    }
    let argmin = |f: &dyn Fn(&BbNode) -> f64| {
        let mut best = 0;
        for k in 1..open.len() {
            if f(&open[k]) < f(&open[best]) {
                best = k;
            }
        }
        best
    };
    let k = if rng.uniform() < beta {
        argmin(&|n| n.bound())
    } else {
        let kz = argmin(&|n| n.z_c);
        let kw = argmin(&|n| n.w_c);
        let (z, w) = (open[kz].z_c, open[kw].w_c);
        if rng.uniform() < beta {
            if z <= w {
                kz
            } else {
                kw
            }
        } else if z < w {
            kw
        } else {
            kz
        }
    };
    Some(open.remove(k))
}

struct Run<'a> {
    spec: &'a ProblemSpec,
    cfg: &'a BbConfig,
    node_cfg: NodeConfig,
    phi_f: PhiVec,
    z_f: f64,
    z_lb: f64,
    closed_min: f64,
    open: Vec<BbNode>,
    processed: usize,
    pruned_weyl: usize,
    solved: usize,
    degraded: usize,
    updates: usize,
    root_ce: Option<f64>,
}

impl Run<'_> {
    fn close(&mut self, bound: f64) {
        self.closed_min = self.closed_min.min(bound);
    }

    /// `pending` is the smallest bound among nodes taken from the pool but not yet closed.
    fn refresh_lb(&mut self, pending: f64) {
        let open_min = self.open.iter().map(BbNode::bound).fold(f64::INFINITY, f64::min);
        let cand = self.z_f.min(self.closed_min).min(open_min).min(pending);
        if cand > self.z_lb {
            self.z_lb = cand;
        }
        if self.z_lb > self.z_f {
            self.z_lb = self.z_f;
        }
    }

    /// Screens a node before solving; returns the action when no solve is needed.
    fn screen(&mut self, node: &BbNode) -> Option<NodeAction> {
        let tol = self.cfg.tol;
        if prunes(node.w_c, self.z_f, tol) {
            self.pruned_weyl += 1;
            self.close(node.bound());
            return Some(NodeAction::PrunedWeyl);
        }
        if prunes(node.z_c, self.z_f, tol) {
            self.close(node.bound());
            return Some(NodeAction::PrunedInherited);
        }
        None
    }

    fn relaxation(&self, node: &BbNode) -> NodeRelaxation {
        NodeRelaxation {
            sigma: self.spec.sigma.clone(),
            r: self.spec.r,
            bounds: node.bounds.clone(),
        }
    }

    /// Applies a solved relaxation: incumbent update, fathoming or branching.
    fn apply(&mut self, node: BbNode, res: Result<NodeResult>) -> Result<(NodeAction, f64)> {
        let res = res?;
        self.solved += 1;
        if node.depth == 0 {
            self.root_ce = Some(res.lower_bound);
        }
        if res.status == NodeStatus::Infeasible {
            return Ok((NodeAction::Infeasible, f64::INFINITY));
        }
        if res.status == NodeStatus::Degraded {
            self.degraded += 1;
        }
        let t = trailing_objective(&self.spec.sigma, &res.primal_phi, self.spec.r, 1.0);
        if t < self.z_f {
            let (phi, f) = polish_incumbent(&res.primal_phi, self.spec)?;
            if f < self.z_f - IMPROVE_EPS {
                self.z_f = f;
                self.phi_f = phi;
                self.updates += 1;
            }
        }
        let node_lb = node.bound().max(res.lower_bound);
        let splittable = (0..node.bounds.dim()).any(|i| node.bounds.width(i) > SPLIT_EPS);
        if prunes(node_lb, self.z_f, self.cfg.tol) || !splittable {
            self.close(node_lb);
            return Ok((NodeAction::Fathomed, node_lb));
        }
        let inherited = node.z_c.max(res.lower_bound);
        let (a, b) = branch_node(
            &self.spec.sigma,
            self.spec.r,
            &node,
            &res,
            self.cfg.epsilon,
            inherited,
        );
        self.open.push(a);
        self.open.push(b);
        Ok((NodeAction::Branched, node_lb))
    }
}

fn solve_batch(rels: &[(NodeRelaxation, Option<NodeWarm>)], cfg: &NodeConfig) -> Vec<Result<NodeResult>> {
    #[cfg(feature = "std")]
    if rels.len() > 1 {
        return std::thread::scope(|s| {
            let handles: Vec<_> = rels
                .iter()
                .map(|(rel, warm)| s.spawn(move || solve_node_with(rel, cfg, warm.clone())))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("node solver thread panicked"))
                .collect()
        });
    }
    rels.iter()
        .map(|(rel, warm)| solve_node_with(rel, cfg, warm.clone()))
        .collect()
}

/// [`certify`] with an explicit clock and a per-node observer.
pub fn certify_with(
    spec: &ProblemSpec,
    cfg: &BbConfig,
    clock: &dyn Clock,
    observer: &mut dyn FnMut(&NodeEvent),
) -> Result<BbReport> {
    spec.validate()?;
    cfg.validate()?;
    if spec.q != 1.0 {
        return Err(CfaError::input("certification is implemented for q = 1 only"));
    }
    let sigma = &spec.sigma;
    let r = spec.r;
    let cg = solve_cg_concave(spec, None)?;
    let initial_objective = cg.solution.objective;
    let u = compute_u(sigma);
    let mut root_box = BoxBounds::root(&u);
    let root_weyl = weyl_lower_bound(sigma, &u, r);
    let mut run = Run {
        spec,
        cfg,
        node_cfg: NodeConfig {
            tol: cfg.node_tol,
            max_iter: cfg.node_max_iter,
            ..NodeConfig::default()
        },
        phi_f: cg.solution.phi.clone(),
        z_f: initial_objective,
        z_lb: f64::NEG_INFINITY,
        closed_min: f64::INFINITY,
        open: Vec::new(),
        processed: 0,
        pruned_weyl: 0,
        solved: 0,
        degraded: 0,
        updates: 0,
        root_ce: None,
    };
    if cfg.root_tighten {
        let tight = tighten_bounds(sigma, &root_box, r, run.z_f, cfg.tol, cfg.tighten_grid);
        // Each cut-off slab {phi_j < l_j} carries the Weyl bound of its own upper corner.
        for j in 0..u.len() {
            if tight.lower[j] > root_box.lower[j] {
                let mut corner = u.clone();
                corner[j] = tight.lower[j];
                run.close(weyl_lower_bound(sigma, &corner, r));
            }
        }
        root_box = tight;
    }
    run.open.push(BbNode::new(root_box, f64::NEG_INFINITY, root_weyl, 0));
    run.refresh_lb(f64::INFINITY);
    let mut rng = Rng::new(cfg.rng_seed);
    let mut termination = Termination::GapClosed;
    'outer: while !run.open.is_empty() {
        if run.processed >= cfg.node_cap {
            termination = Termination::NodeCap;
            break;
        }
        if clock.elapsed() >= cfg.time_cap {
            termination = Termination::TimeCap;
            break;
        }
        let room = cfg.jobs.min(cfg.node_cap - run.processed);
        let mut batch: Vec<BbNode> = Vec::new();
        let mut screened: Vec<(BbNode, NodeAction)> = Vec::new();
        while batch.len() < room && screened.len() + batch.len() < room {
            let Some(node) = select_node(&mut run.open, cfg.beta, &mut rng) else {
                break;
            };
            match run.screen(&node) {
                Some(action) => screened.push((node, action)),
                None => batch.push(node),
            }
        }
        let batch_min = batch.iter().map(BbNode::bound).fold(f64::INFINITY, f64::min);
        for (node, action) in screened {
            run.processed += 1;
            run.refresh_lb(batch_min);
            emit(&run, observer, &node, action, node.bound(), clock);
            if run.z_f - run.z_lb <= cfg.tol {
                break 'outer;
            }
        }
        let rels: Vec<(NodeRelaxation, Option<NodeWarm>)> = batch
            .iter_mut()
            .map(|n| (run.relaxation(n), n.warm.take()))
            .collect();
        let results = solve_batch(&rels, &run.node_cfg);
        let pending: Vec<f64> = batch.iter().map(BbNode::bound).collect();
        for (k, (node, res)) in batch.into_iter().zip(results).enumerate() {
            let (action, nb) = run.apply(node.clone(), res)?;
            run.processed += 1;
            run.refresh_lb(pending[k + 1..].iter().copied().fold(f64::INFINITY, f64::min));
            emit(&run, observer, &node, action, nb, clock);
            if run.z_f - run.z_lb <= cfg.tol {
                break 'outer;
            }
        }
    }
    if run.open.is_empty() {
        run.refresh_lb(f64::INFINITY);
        termination = Termination::GapClosed;
    } else if run.z_f - run.z_lb <= cfg.tol {
        termination = Termination::GapClosed;
    }
    let incumbent = complete_solution(spec, run.phi_f.clone(), None)?;
    Ok(BbReport {
        z_f: run.z_f,
        z_lb: run.z_lb,
        gap: run.z_f - run.z_lb,
        incumbent,
        initial_objective,
        root_weyl_bound: root_weyl,
        root_ce_bound: run.root_ce,
        nodes_processed: run.processed,
        nodes_pruned_weyl: run.pruned_weyl,
        nodes_solved: run.solved,
        nodes_degraded: run.degraded,
        incumbent_updates: run.updates,
        wall_time: clock.elapsed(),
        termination,
        rng_seed: cfg.rng_seed,
    })
}

fn emit(
    run: &Run<'_>,
    observer: &mut dyn FnMut(&NodeEvent),
    node: &BbNode,
    action: NodeAction,
    node_bound: f64,
    clock: &dyn Clock,
) {
    observer(&NodeEvent {
        node: run.processed,
        depth: node.depth,
        action,
        node_bound,
        z_f: run.z_f,
        z_lb: run.z_lb,
        bounds: node.bounds.clone(),
        volume: node.bounds.volume(),
        open: run.open.len(),
        elapsed: clock.elapsed(),
    });
}
