//! Serializable report shapes. `schema/reports.schema.json` mirrors these.

use cfa_core::bench::{GroundTruth, InstanceClass, InstanceSpec, MetricRow, Scaling};
use cfa_core::branch_bound::{BbReport, NodeAction, NodeEvent, Termination};
use cfa_core::cg::{Algorithm, CgIterate, CgStatus};
use cfa_core::linalg::{lambda_min, sym_eigenvalues};
use cfa_core::{PhiVec, Solution, SymMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Serialize)]
pub struct Metrics {
    pub error_phi: f64,
    pub explained_variance: f64,
    pub error_theta: f64,
    pub lambda_min: f64,
}

impl From<MetricRow> for Metrics {
    fn from(m: MetricRow) -> Self {
        Self {
            error_phi: m.error_phi,
            explained_variance: m.explained_variance,
            error_theta: m.error_theta,
            lambda_min: m.lambda_min,
        }
    }
}

#[derive(Serialize)]
pub struct SolveReport {
    pub p: usize,
    pub r: usize,
    pub q: f64,
    pub algorithm: &'static str,
    pub status: &'static str,
    pub objective: f64,
    pub phi: Vec<f64>,
    pub theta_eigenvalues: Vec<f64>,
    pub explained_variance: f64,
    pub lambda_min: f64,
    pub iterations: usize,
    pub inexact_steps: usize,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

#[derive(Serialize)]
pub struct Incumbent {
    pub objective: f64,
    pub phi: Vec<f64>,
    pub theta_eigenvalues: Vec<f64>,
    pub explained_variance: f64,
    pub lambda_min: f64,
}

#[derive(Serialize)]
pub struct CertifyReport {
    pub p: usize,
    pub r: usize,
    pub termination: &'static str,
    pub z_f: f64,
    pub z_lb: f64,
    pub gap: f64,
    pub initial_objective: f64,
    pub root_weyl_bound: f64,
    pub root_ce_bound: Option<f64>,
    pub nodes_processed: usize,
    pub nodes_pruned_weyl: usize,
    pub nodes_solved: usize,
    pub nodes_degraded: usize,
    pub incumbent_updates: usize,
    pub wall_time: f64,
    pub rng_seed: u64,
    pub incumbent: Incumbent,
}

#[derive(Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub g_value: f64,
    pub big_g: Option<f64>,
    pub delta: f64,
    pub step: Option<f64>,
    pub admm_iterations: usize,
    pub admm_converged: bool,
}

impl From<&CgIterate> for TraceRecord {
    fn from(t: &CgIterate) -> Self {
        Self {
            iteration: t.iteration,
            g_value: t.g_value,
            big_g: t.big_g,
            delta: t.delta,
            step: t.step,
            admm_iterations: t.admm_iterations,
            admm_converged: t.admm_converged,
        }
    }
}

#[derive(Serialize)]
pub struct ProgressRecord<'a> {
    pub node: usize,
    pub depth: usize,
    pub action: &'static str,
    pub node_bound: f64,
    pub z_f: f64,
    pub z_lb: f64,
    pub open: usize,
    pub volume: f64,
    pub elapsed: f64,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl<'a> From<&'a NodeEvent> for ProgressRecord<'a> {
    fn from(e: &'a NodeEvent) -> Self {
        Self {
            node: e.node,
            depth: e.depth,
            action: action_name(e.action),
            node_bound: e.node_bound,
            z_f: e.z_f,
            z_lb: e.z_lb,
            open: e.open,
            volume: e.volume,
            elapsed: e.elapsed,
            lower: &e.bounds.lower,
            upper: &e.bounds.upper,
        }
    }
}

pub fn action_name(a: NodeAction) -> &'static str {
    match a {
        NodeAction::PrunedWeyl => "pruned_weyl",
        NodeAction::PrunedInherited => "pruned_inherited",
        NodeAction::Fathomed => "fathomed",
        NodeAction::Infeasible => "infeasible",
        NodeAction::Branched => "branched",
    }
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::GapClosed => "gap_closed",
        Termination::NodeCap => "node_cap",
        Termination::TimeCap => "time_cap",
    }
}

pub fn status_name(s: CgStatus) -> &'static str {
    match s {
        CgStatus::Converged => "converged",
        CgStatus::Stationary => "stationary",
        CgStatus::IterationCap => "iteration_cap",
    }
}

pub fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Smooth => "alg1",
        Algorithm::Concave => "alg2",
    }
}

/// Share of `tr(sigma - diag(phi))` carried by the top `r` eigenvalues of `theta`.
pub fn explained_variance(sigma: &SymMatrix, phi: &[f64], theta_ev: &[f64], r: usize) -> f64 {
    if r == 0 {
        return 0.0;
    }
    theta_ev.iter().take(r).sum::<f64>() / sigma.sub_diag(phi).trace()
}

pub fn incumbent(sigma: &SymMatrix, sol: &Solution, r: usize) -> CliResult<Incumbent> {
    let ev = sym_eigenvalues(&sol.theta)?;
    Ok(Incumbent {
        objective: sol.objective,
        explained_variance: explained_variance(sigma, &sol.phi, &ev, r),
        lambda_min: lambda_min(&sigma.sub_diag(&sol.phi)),
        phi: sol.phi.0.clone(),
        theta_eigenvalues: ev,
    })
}

pub fn certify_report(sigma: &SymMatrix, r: usize, rep: &BbReport) -> CliResult<CertifyReport> {
    Ok(CertifyReport {
        p: sigma.dim(),
        r,
        termination: termination_name(rep.termination),
        z_f: rep.z_f,
        z_lb: rep.z_lb,
        gap: rep.gap,
        initial_objective: rep.initial_objective,
        root_weyl_bound: rep.root_weyl_bound,
        root_ce_bound: rep.root_ce_bound,
        nodes_processed: rep.nodes_processed,
        nodes_pruned_weyl: rep.nodes_pruned_weyl,
        nodes_solved: rep.nodes_solved,
        nodes_degraded: rep.nodes_degraded,
        incumbent_updates: rep.incumbent_updates,
        wall_time: rep.wall_time,
        rng_seed: rep.rng_seed,
        incumbent: incumbent(sigma, &rep.incumbent, r)?,
    })
}

/// JSON sidecar emitted by `datagen`; the matrix itself goes to CSV.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct TruthFile {
    pub class: String,
    pub p: usize,
    pub big_r: usize,
    pub r_inner: usize,
    pub seed: u64,
    pub label: String,
    pub phi_true: Vec<f64>,
    pub theta_true: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub alpha: f64,
    pub phi_bar: f64,
    pub raw_trace_theta: f64,
    pub raw_trace_phi: f64,
}

impl TruthFile {
    pub fn from_truth(g: &GroundTruth) -> Self {
        Self {
            class: g.spec.class.to_string(),
            p: g.spec.p,
            big_r: g.spec.big_r,
            r_inner: g.spec.r_inner,
            seed: g.spec.seed,
            label: g.spec.label(),
            phi_true: g.phi_true.0.clone(),
            theta_true: g.theta_true.to_rows(),
            d: g.scaling.d.clone(),
            alpha: g.scaling.alpha,
            phi_bar: g.scaling.phi_bar,
            raw_trace_theta: g.scaling.raw_trace_theta,
            raw_trace_phi: g.scaling.raw_trace_phi,
        }
    }

    /// Reassembles the ground truth around an already loaded `sigma`.
    pub fn into_truth(self, sigma: SymMatrix) -> CliResult<GroundTruth> {
        let p = sigma.dim();
        if self.p != p || self.phi_true.len() != p || self.theta_true.len() != p {
            return Err(CliError::input(format!(
                "truth sidecar is for p = {}, matrix has p = {p}",
                self.p
            )));
        }
        let class: InstanceClass = self.class.parse()?;
        Ok(GroundTruth {
            spec: InstanceSpec {
                class,
                p,
                big_r: self.big_r,
                r_inner: self.r_inner,
                seed: self.seed,
            },
            sigma,
            theta_true: SymMatrix::from_rows(&self.theta_true)?,
            phi_true: PhiVec(self.phi_true),
            scaling: Scaling {
                d: self.d,
                alpha: self.alpha,
                phi_bar: self.phi_bar,
                raw_trace_theta: self.raw_trace_theta,
                raw_trace_phi: self.raw_trace_phi,
            },
        })
    }
}
