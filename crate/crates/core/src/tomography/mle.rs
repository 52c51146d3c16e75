//! Maximum-likelihood reconstruction over `ρ = T†T / Tr(T†T)` with `T`
//! lower triangular, optimized by L-BFGS.

use nalgebra::{Cholesky, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{linear_inversion, ProjectorSet, TomographyDataset, N_SETTINGS};
use crate::error::{Error, Result};
use crate::qmetrics::{Matrix4c, TwoQubitState};

/// Four real diagonal entries followed by (re, im) of the six sub-diagonal ones.
pub const N_PARAMS: usize = 16;

const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (3, 0), (2, 1), (3, 1), (3, 2)];
const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
/// Consecutive small-improvement iterations required to stop.
const PATIENCE: usize = 3;
/// Weight of the full-rank starting point mixed into the linear estimate.
const INIT_MIXING: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodModel {
    /// Independent Poisson counts with free overall rate.
    #[default]
    RawPoisson,
    /// Multinomial counts within each complete measurement basis.
    BasisNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub model: LikelihoodModel,
    pub max_iterations: usize,
    /// Stop when the relative objective change stays below this for several
    /// iterations.
    pub rel_tol: f64,
    pub grad_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { model: LikelihoodModel::RawPoisson, max_iterations: 5000, rel_tol: 1e-10, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceReason {
    RelativeChange,
    Gradient,
    /// No step along the search direction decreases the objective at
    /// floating-point resolution.
    LineSearchStalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleDiagnostics {
    pub iterations: usize,
    /// `Σ n_k ln Tr(ρ Π_k)`, comparable across models and estimators.
    pub log_likelihood: f64,
    /// Final value of the minimized objective.
    pub objective: f64,
    pub gradient_norm: f64,
    pub reason: ConvergenceReason,
    pub model: LikelihoodModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub state: TwoQubitState,
    pub diagnostics: MleDiagnostics,
}

pub fn t_matrix(params: &[f64; N_PARAMS]) -> Matrix4c {
    let mut t = Matrix4c::zeros();
    for i in 0..4 {
        t[(i, i)] = Complex64::new(params[i], 0.0);
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        t[(i, j)] = Complex64::new(params[4 + 2 * k], params[5 + 2 * k]);
    }
    t
}

/// Inverse of [`t_matrix`] for `m = T†T`. Needs `m` positive definite.
pub fn params_from_matrix(m: &Matrix4c) -> Result<[f64; N_PARAMS]> {
    // Cholesky of the index-reversed matrix gives P m P = L L†; then
    // m = (P L P)(P L P)† and T = (P L P)† is lower triangular.
    let mut reversed = Matrix4c::zeros();
    for i in 0..4 {
        for j in 0..4 {
            reversed[(i, j)] = m[(3 - i, 3 - j)];
        }
    }
    let l = Cholesky::new(reversed)
        .ok_or_else(|| Error::DegenerateData("matrix is not positive definite".to_string()))?
        .unpack();
    let mut t = Matrix4c::zeros();
    for i in 0..4 {
        for j in 0..4 {
            t[(i, j)] = l[(3 - j, 3 - i)].conj();
        }
    }
    let mut p = [0.0; N_PARAMS];
    for i in 0..4 {
        p[i] = t[(i, i)].re;
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        p[4 + 2 * k] = t[(i, j)].re;
        p[5 + 2 * k] = t[(i, j)].im;
    }
    Ok(p)
}

/// Unnormalized rates `μ_k = ‖T v_k‖²` and their parameter derivatives.
fn rates_with_jacobian(params: &[f64; N_PARAMS]) -> (Vec<f64>, Vec<[f64; N_PARAMS]>) {
    let t = t_matrix(params);
    let mut rates = Vec::with_capacity(N_SETTINGS);
    let mut jac = Vec::with_capacity(N_SETTINGS);
    for p in ProjectorSet::standard().projectors() {
        let v: Vector4<Complex64> = p.vector.to_vector();
        let w = t * v;
        rates.push(w.norm_squared());
        let mut d = [0.0; N_PARAMS];
        for i in 0..4 {
            d[i] = 2.0 * (w[i].conj() * v[i]).re;
        }
        for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            let z = w[i].conj() * v[j];
            d[4 + 2 * k] = 2.0 * z.re;
            d[5 + 2 * k] = -2.0 * z.im;
        }
        jac.push(d);
    }
    (rates, jac)
}

fn group_sums(values: &[f64]) -> [f64; 9] {
    let mut sums = [0.0; 9];
    for (p, v) in ProjectorSet::standard().projectors().iter().zip(values) {
        sums[p.group()] += v;
    }
    sums
}

/// `n ln(n/μ)` with the `0 ln 0 = 0` convention.
fn xlogratio(n: f64, mu: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * (n / mu).ln()
    }
}

/// Objective minimized by [`mle_reconstruct_with`]: the negative
/// log-likelihood offset so that a perfect fit scores zero.
pub fn objective(params: &[f64; N_PARAMS], dataset: &TomographyDataset, model: LikelihoodModel) -> f64 {
    let (mu, _) = rates_with_jacobian(params);
    let n = &dataset.counts;
    match model {
        LikelihoodModel::RawPoisson => n.iter().zip(&mu).map(|(&n, &m)| m - n + xlogratio(n, m)).sum(),
        LikelihoodModel::BasisNormalized => {
            let ng = group_sums(n);
            let mg = group_sums(&mu);
            let set = ProjectorSet::standard();
            let fit: f64 = set
                .projectors()
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let g = p.group();
                    xlogratio(n[k], ng[g] * mu[k] / mg[g])
                })
                .sum();
            let tr: f64 = params.iter().map(|x| x * x).sum();
            fit + scale_penalty(dataset) * (tr - 1.0).powi(2)
        }
    }
}

/// The basis-normalized likelihood ignores the scale of `T`; a quadratic
/// pin on `Tr(T†T)` removes the flat direction.
fn scale_penalty(dataset: &TomographyDataset) -> f64 {
    dataset.total().max(1.0)
}

pub fn objective_gradient(
    params: &[f64; N_PARAMS],
    dataset: &TomographyDataset,
    model: LikelihoodModel,
) -> [f64; N_PARAMS] {
    let (mu, jac) = rates_with_jacobian(params);
    let n = &dataset.counts;
    let mut grad = [0.0; N_PARAMS];
    match model {
        LikelihoodModel::RawPoisson => {
            for k in 0..N_SETTINGS {
                let c = 1.0 - if n[k] == 0.0 { 0.0 } else { n[k] / mu[k] };
                for (g, d) in grad.iter_mut().zip(&jac[k]) {
                    *g += c * d;
                }
            }
        }
        LikelihoodModel::BasisNormalized => {
            let set = ProjectorSet::standard();
            let ng = group_sums(n);
            let mg = group_sums(&mu);
            for (k, p) in set.projectors().iter().enumerate() {
                let grp = p.group();
                let c = ng[grp] / mg[grp] - if n[k] == 0.0 { 0.0 } else { n[k] / mu[k] };
                for (g, d) in grad.iter_mut().zip(&jac[k]) {
                    *g += c * d;
                }
            }
            let tr: f64 = params.iter().map(|x| x * x).sum();
            let c = 4.0 * scale_penalty(dataset) * (tr - 1.0);
            for (g, x) in grad.iter_mut().zip(params) {
                *g += c * x;
            }
        }
    }
    grad
}

/// `Σ n_k ln Tr(ρ Π_k)`; `-∞` if a setting with counts has zero probability.
pub fn state_log_likelihood(state: &TwoQubitState, dataset: &TomographyDataset) -> f64 {
    ProjectorSet::standard()
        .probabilities(state)
        .iter()
        .zip(&dataset.counts)
        .map(|(&p, &n)| if n == 0.0 { 0.0 } else { n * p.ln() })
        .sum()
}

/// Maximum-likelihood state with default options.
pub fn mle_reconstruct(dataset: &TomographyDataset) -> Result<MleResult> {
    mle_reconstruct_with(dataset, &MleOptions::default())
}

/// Maximum-likelihood state. Starts from the PSD-projected linear estimate
/// mixed slightly with white noise so that `T` starts full rank. Fails with
/// [`Error::Convergence`] when the iteration cap is reached, carrying the best
/// state found.
pub fn mle_reconstruct_with(dataset: &TomographyDataset, options: &MleOptions) -> Result<MleResult> {
    let linear = linear_inversion(dataset)?;
    let start = linear.project_psd()?;
    let scale = match options.model {
        LikelihoodModel::RawPoisson => dataset.total() / 9.0,
        LikelihoodModel::BasisNormalized => 1.0,
    };
    let m0 = (start.rho() * Complex64::new(1.0 - INIT_MIXING, 0.0)
        + Matrix4c::identity() * Complex64::new(INIT_MIXING / 4.0, 0.0))
        * Complex64::new(scale, 0.0);
    let x0 = params_from_matrix(&m0)?;

    let model = options.model;
    let run = lbfgs(
        x0,
        |x| objective(x, dataset, model),
        |x| objective_gradient(x, dataset, model),
        options,
    );
    let t = t_matrix(&run.x);
    let state = TwoQubitState::from_matrix_normalized(t.adjoint() * t)?;
    let diagnostics = MleDiagnostics {
        iterations: run.iterations,
        log_likelihood: state_log_likelihood(&state, dataset),
        objective: run.fx,
        gradient_norm: norm(&run.gx),
        reason: run.reason,
        model,
    };
    if run.reason == ConvergenceReason::MaxIterations {
        return Err(Error::Convergence { best: Box::new(state), diagnostics: Box::new(diagnostics) });
    }
    Ok(MleResult { state, diagnostics })
}

fn dot(a: &[f64; N_PARAMS], b: &[f64; N_PARAMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64; N_PARAMS]) -> f64 {
    dot(a, a).sqrt()
}

struct LbfgsRun {
    x: [f64; N_PARAMS],
    fx: f64,
    gx: [f64; N_PARAMS],
    iterations: usize,
    reason: ConvergenceReason,
}

/// Search direction `-H g` from the two-loop recursion.
fn two_loop(g: &[f64; N_PARAMS], history: &[([f64; N_PARAMS], [f64; N_PARAMS], f64)]) -> [f64; N_PARAMS] {
    let mut q = *g;
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.map(|v| -v)
}

fn lbfgs(
    x0: [f64; N_PARAMS],
    f: impl Fn(&[f64; N_PARAMS]) -> f64,
    grad: impl Fn(&[f64; N_PARAMS]) -> [f64; N_PARAMS],
    options: &MleOptions,
) -> LbfgsRun {
    let mut x = x0;
    let mut fx = f(&x);
    let mut gx = grad(&x);
    let mut history: Vec<([f64; N_PARAMS], [f64; N_PARAMS], f64)> = Vec::with_capacity(HISTORY);
    let mut quiet = 0;

    for iter in 1..=options.max_iterations {
        if norm(&gx) < options.grad_tol {
            return LbfgsRun { x, fx, gx, iterations: iter - 1, reason: ConvergenceReason::Gradient };
        }
        let mut dir = two_loop(&gx, &history);
        let mut slope = dot(&gx, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = gx.map(|v| -v);
            slope = dot(&gx, &dir);
        }
        let mut step = if history.is_empty() { (1.0 / norm(&gx)).min(1.0) } else { 1.0 };

        let accepted = loop {
            let mut xn = x;
            for (xi, di) in xn.iter_mut().zip(&dir) {
                *xi += step * di;
            }
            let fxn = f(&xn);
            if fxn.is_finite() && fxn <= fx + ARMIJO * step * slope {
                break Some((xn, fxn));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((xn, fxn)) = accepted else {
            if history.is_empty() {
                return LbfgsRun { x, fx, gx, iterations: iter, reason: ConvergenceReason::LineSearchStalled };
            }
            history.clear();
            continue;
        };

        let gn = grad(&xn);
        let mut s = [0.0; N_PARAMS];
        let mut y = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - gx[i];
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == HISTORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }

        let rel = (fx - fxn).abs() / fxn.abs().max(1.0);
        x = xn;
        fx = fxn;
        gx = gn;
        quiet = if rel < options.rel_tol { quiet + 1 } else { 0 };
        if quiet >= PATIENCE {
            return LbfgsRun { x, fx, gx, iterations: iter, reason: ConvergenceReason::RelativeChange };
        }
    }
    LbfgsRun { x, fx, gx, iterations: options.max_iterations, reason: ConvergenceReason::MaxIterations }
}
