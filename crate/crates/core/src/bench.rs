//! Synthetic instance classes, the principal-components baseline and the metric suite.
//!
//! Draw order is fixed: loading entries row by row (only the entries that are random),
//! then the uniquenesses. Every instance is returned in correlation units.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use faer::Mat;

use crate::error::{CfaError, Result};
use crate::linalg::{self, best_rank_r, correlation_scaling, eigh, eigvalsh, SymMatrix};
use crate::model::PhiVec;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceClass {
    A1,
    A2,
    B1,
    B2,
    B3,
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InstanceClass::A1 => "A1",
            InstanceClass::A2 => "A2",
            InstanceClass::B1 => "B1",
            InstanceClass::B2 => "B2",
            InstanceClass::B3 => "B3",
        };
        f.write_str(s)
    }
}

impl FromStr for InstanceClass {
    type Err = CfaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A1" => Ok(InstanceClass::A1),
            "A2" => Ok(InstanceClass::A2),
            "B1" => Ok(InstanceClass::B1),
            "B2" => Ok(InstanceClass::B2),
            "B3" => Ok(InstanceClass::B3),
            other => Err(CfaError::input(alloc::format!("unknown instance class {other:?}"))),
        }
    }
}

/// Shape of one synthetic instance. `big_r` is the generative rank and `r_inner`
/// the structured block size of B2/B3; unused fields are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub class: InstanceClass,
    pub p: usize,
    pub big_r: usize,
    pub r_inner: usize,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn a1(big_r: usize, p: usize, seed: u64) -> Self {
        Self { class: InstanceClass::A1, p, big_r, r_inner: 0, seed }
    }
    pub fn a2(p: usize, seed: u64) -> Self {
        Self { class: InstanceClass::A2, p, big_r: p, r_inner: 0, seed }
    }
    pub fn b1(big_r: usize, p: usize, seed: u64) -> Self {
        Self { class: InstanceClass::B1, p, big_r, r_inner: 0, seed }
    }
    pub fn b2(r_inner: usize, big_r: usize, p: usize, seed: u64) -> Self {
        Self { class: InstanceClass::B2, p, big_r, r_inner, seed }
    }
    pub fn b3(r_inner: usize, big_r: usize, p: usize, seed: u64) -> Self {
        Self { class: InstanceClass::B3, p, big_r, r_inner, seed }
    }

    /// Label in the usual notation, e.g. `A1(3/200)`.
    pub fn label(&self) -> String {
        match self.class {
            InstanceClass::A1 | InstanceClass::B1 => {
                alloc::format!("{}({}/{})", self.class, self.big_r, self.p)
            }
            InstanceClass::A2 => alloc::format!("A2({})", self.p),
            InstanceClass::B2 | InstanceClass::B3 => alloc::format!(
                "{}({}/{}/{})",
                self.class,
                self.r_inner,
                self.big_r,
                self.p
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CfaError::input(alloc::format!("{}: {m}", self.label())));
        if self.p < 2 {
            return bad("p must be at least 2");
        }
        match self.class {
            InstanceClass::A1 if !(1..self.p).contains(&self.big_r) => bad("A1 needs 1 <= R < p"),
            InstanceClass::B1 if !(1..=self.p).contains(&self.big_r) => bad("B1 needs 1 <= R <= p"),
            InstanceClass::B2 | InstanceClass::B3
                if !(self.r_inner >= 1 && self.r_inner <= self.big_r && self.big_r <= self.p) =>
            {
                bad("needs 1 <= r <= R <= p")
            }
            _ => Ok(()),
        }
    }
}

/// Scalars used while building an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    /// Correlation scaling `1 / sqrt(sigma_ii)` applied to the raw covariance.
    pub d: Vec<f64>,
    /// B classes: `alpha` with `Tr(theta) = alpha Tr(phi)`; 1 for A classes.
    pub alpha: f64,
    /// A classes: the multiplier `phi_bar` of the uniqueness grid; 1 for B classes.
    pub phi_bar: f64,
    /// Traces of the raw (pre-standardization) common and unique parts.
    pub raw_trace_theta: f64,
    pub raw_trace_phi: f64,
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub spec: InstanceSpec,
    /// Correlation matrix `D (theta + diag(phi)) D` of the raw model.
    pub sigma: SymMatrix,
    /// `D theta D`.
    pub theta_true: SymMatrix,
    /// `D^2 phi`.
    pub phi_true: PhiVec,
    pub scaling: Scaling,
}

/// Builds the instance described by `spec`.
pub fn generate(spec: &InstanceSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let p = spec.p;
    let mut rng = Rng::new(spec.seed);
    let (theta, phi, alpha, phi_bar) = match spec.class {
        InstanceClass::A1 => {
            let l = Mat::from_fn(p, spec.big_r, |_, _| 0.0);
            let l = fill_rowwise(l, &mut rng, |_, _| true);
            let theta = gram(&l);
            let ltl = SymMatrix::from_mat((l.transpose() * &l).as_ref());
            let ev = eigvalsh(&ltl);
            let (l1, lr) = (ev[0], ev[spec.big_r - 1]);
            let grid: Vec<f64> = (0..p)
                .map(|i| l1 + (lr - l1) * i as f64 / p as f64)
                .collect();
            let (phi, bar) = scale_to_trace(grid, theta.trace());
            (theta, phi, 1.0, bar)
        }
        InstanceClass::A2 => {
            let g = fill_rowwise(Mat::zeros(p, p), &mut rng, |_, _| true);
            let e = eigh(&gram(&g));
            let lam: Vec<f64> = (1..=p).map(|i| libm::pow(0.8, i as f64 / 2.0)).collect();
            let theta = e.spectral_map(|k, _| lam[k]);
            let (l1, lp) = (lam[0], lam[p - 1]);
            let grid: Vec<f64> = (0..p)
                .map(|i| l1 + (lp - l1) * i as f64 / (p - 1) as f64)
                .collect();
            let (phi, bar) = scale_to_trace(grid, theta.trace());
            (theta, phi, 1.0, bar)
        }
        InstanceClass::B1 | InstanceClass::B2 | InstanceClass::B3 => {
            let (r, big_r) = (spec.r_inner, spec.big_r);
            let l = match spec.class {
                InstanceClass::B1 => Mat::from_fn(p, big_r, |i, j| if i <= j { 1.0 } else { 0.0 }),
                InstanceClass::B2 => {
                    let base = Mat::from_fn(p, big_r, |i, j| if i < r && j < r { 1.0 } else { 0.0 });
                    fill_rowwise(base, &mut rng, |i, _| i >= r)
                }
                _ => {
                    let base = Mat::from_fn(p, big_r, |i, j| if j < r && i <= j { 1.0 } else { 0.0 });
                    fill_rowwise(base, &mut rng, |i, j| j >= r && i < big_r)
                }
            };
            let theta = gram(&l);
            let raw: Vec<f64> = (0..p).map(|_| libm::fabs(rng.normal())).collect();
            let raw_sum: f64 = raw.iter().sum();
            if !(raw_sum > 0.0) {
                return Err(CfaError::input("degenerate uniqueness draw"));
            }
            let alpha = theta.trace() / raw_sum;
            let phi: Vec<f64> = raw.iter().map(|v| alpha * v).collect();
            (theta, phi, alpha, 1.0)
        }
    };
    let raw_trace_theta = theta.trace();
    let raw_trace_phi: f64 = phi.iter().sum();
    let cov = theta.add_diag(&phi);
    let d = correlation_scaling(&cov)?;
    let theta_true = SymMatrix::from_fn(p, |i, j| d[i] * theta.get(i, j) * d[j]);
    let phi_true: Vec<f64> = phi.iter().zip(&d).map(|(v, s)| v * s * s).collect();
    let sigma = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            1.0
        } else {
            d[i] * cov.get(i, j) * d[j]
        }
    });
    Ok(GroundTruth {
        spec: spec.clone(),
        sigma,
        theta_true,
        phi_true: PhiVec(phi_true),
        scaling: Scaling {
            d,
            alpha,
            phi_bar,
            raw_trace_theta,
            raw_trace_phi,
        },
    })
}

fn fill_rowwise(mut m: Mat<f64>, rng: &mut Rng, random: impl Fn(usize, usize) -> bool) -> Mat<f64> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if random(i, j) {
                m[(i, j)] = rng.normal();
            }
        }
    }
    m
}

fn gram(l: &Mat<f64>) -> SymMatrix {
    SymMatrix::from_mat((l * l.transpose()).as_ref())
}

fn scale_to_trace(grid: Vec<f64>, target: f64) -> (Vec<f64>, f64) {
    let s: f64 = grid.iter().sum();
    let bar = target / s;
    (grid.iter().map(|v| v * bar).collect(), bar)
}

/// Principal components: `theta = best_rank_r(sigma)`, `phi = max{diag(sigma - theta), 0}`.
pub fn pc_baseline(sigma: &SymMatrix, r: usize) -> (PhiVec, SymMatrix) {
    let theta = best_rank_r(sigma, r);
    let phi = sigma
        .sub(&theta)
        .diag()
        .iter()
        .map(|&v| v.max(0.0))
        .collect();
    (PhiVec(phi), theta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRow {
    /// `sum (phi_hat_i - phi_i)^2`.
    pub error_phi: f64,
    /// `sum_{i <= r} lambda_i(theta_hat) / sum_i lambda_i(sigma - phi_hat)`.
    pub explained_variance: f64,
    /// `||theta_hat - theta_r||_F^2` with `theta_r` the best rank-`r` part of the truth.
    pub error_theta: f64,
    /// `lambda_min(sigma - diag(phi_hat))`.
    pub lambda_min: f64,
}

pub fn metrics(truth: &GroundTruth, phi: &[f64], theta: &SymMatrix, r: usize) -> MetricRow {
    let error_phi = phi
        .iter()
        .zip(truth.phi_true.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let resid = truth.sigma.sub_diag(phi);
    let top: f64 = eigvalsh(theta).iter().take(r).sum();
    let total = resid.trace();
    let explained_variance = if r == 0 { 0.0 } else { top / total };
    let theta_r = best_rank_r(&truth.theta_true, r);
    let diff = theta.sub(&theta_r);
    MetricRow {
        error_phi,
        explained_variance,
        error_theta: diff.dot(&diff),
        lambda_min: linalg::lambda_min(&resid),
    }
}

/// A short deterministic seed list `base, base + 1, ...`.
pub fn seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| base + k).collect()
}
