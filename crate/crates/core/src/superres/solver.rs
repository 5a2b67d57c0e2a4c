//! Minimizer of `a‖Ax − C‖₂ + Σφ(x)` with φ(x) = b·x for x ≥ 0 and
//! (b + 2c)·|x| otherwise.
//!
//! The square-root loss is handled by alternating minimization: for a fixed
//! noise level σ the problem `½‖Ax − C‖² + (σ/a)Σφ(x)` is a bound-constrained
//! QP in the split variables x = p − q (p, q ≥ 0), solved by a primal–dual
//! interior-point method; σ is then reset to the residual norm. Each step
//! cannot increase the original objective. Columns enter the QP through a
//! working set grown from the optimality-condition violations, so the
//! dictionary is never materialized.

use nalgebra::{DMatrix, DVector};

use super::{basis, SuperResGrid, Weights, MAX_DECAY_EXPONENT};
use crate::units::HBAR;

/// Separable dictionary: column (i, j) at lag k is `decay[k, i]·osc[k, j]`.
pub(crate) struct Dictionary {
    decay: DMatrix<f64>,
    osc: DMatrix<f64>,
    grid: SuperResGrid,
    lags: Vec<f64>,
}

impl Dictionary {
    pub(crate) fn new(grid: &SuperResGrid, lags: &[f64]) -> Self {
        let decay = DMatrix::from_fn(lags.len(), grid.gammas().len(), |k, i| {
            (-(grid.gammas()[i] * lags[k] / HBAR).min(MAX_DECAY_EXPONENT)).exp()
        });
        let osc = DMatrix::from_fn(lags.len(), grid.omegas().len(), |k, j| (grid.omegas()[j] * lags[k] / HBAR).cos());
        Self {
            decay,
            osc,
            grid: grid.clone(),
            lags: lags.to_vec(),
        }
    }

    pub(crate) fn n_modes(&self) -> usize {
        self.grid.n_modes()
    }

    /// `Aᵀv` over the whole grid.
    pub(crate) fn correlate(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut weighted = self.osc.clone();
        for (k, mut row) in weighted.row_iter_mut().enumerate() {
            row *= v[k];
        }
        let m = self.decay.transpose() * weighted;
        let n_omega = self.grid.omegas().len();
        let mut out = vec![0.0; self.n_modes()];
        for i in 0..m.nrows() {
            for j in 0..n_omega {
                out[i * n_omega + j] = m[(i, j)];
            }
        }
        out
    }

    pub(crate) fn columns(&self, set: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.lags.len(), set.len(), |k, c| {
            let (g, w) = self.grid.mode(set[c]);
            basis(g, w, self.lags[k])
        })
    }
}

pub(crate) struct SolverSettings {
    pub max_outer: usize,
    pub tolerance: f64,
    pub block: usize,
    pub max_working: usize,
}

pub(crate) struct RunResult {
    /// Sparse coefficients as (column, value).
    pub x: Vec<(usize, f64)>,
    pub objective: f64,
    pub residual_norm: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn phi(x: f64, w: &Weights) -> f64 {
    if x >= 0.0 {
        w.b * x
    } else {
        -(w.b + 2.0 * w.c) * x
    }
}

/// Cholesky factor of `m`, retried with growing diagonal shifts when roundoff
/// has cost positive definiteness.
fn cholesky_jittered(m: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let top = m.diagonal().amax();
    if let Some(c) = m.clone().cholesky() {
        return Some(c);
    }
    for jitter in [1e-14, 1e-12, 1e-10] {
        let mut trial = m.clone();
        for k in 0..trial.nrows() {
            trial[(k, k)] += jitter * top;
        }
        if let Some(c) = trial.cholesky() {
            return Some(c);
        }
    }
    log::debug!("lag-space Newton matrix lost definiteness (max diagonal {top:e})");
    None
}

/// Interior-point solution of `min ½‖Ax − C‖² + μΣφ(x)` written as a QP in
/// (p, q) ≥ 0; returns x = p − q, or `None` if the iteration broke down.
fn split_qp(a: &DMatrix<f64>, c: &DVector<f64>, mu: f64, w: &Weights) -> Option<DVector<f64>> {
    // ‖Ax − C‖² = ‖ΣVᵀx − UᵀC‖² + const, so the lag dimension shrinks to the
    // numerical rank of the working columns
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
    let top = svd.singular_values.amax();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > RANK_CUTOFF * top)
        .collect();
    if keep.is_empty() {
        return Some(DVector::zeros(a.ncols()));
    }
    let reduced = DMatrix::from_fn(keep.len(), a.ncols(), |r, k| svd.singular_values[keep[r]] * vt[(keep[r], k)]);
    let projected = DVector::from_fn(keep.len(), |r, _| u.column(keep[r]).dot(c));
    split_qp_reduced(&reduced, &projected, mu, w)
}

/// Relative singular value below which working-set directions are dropped.
const RANK_CUTOFF: f64 = 1e-13;

fn split_qp_reduced(a: &DMatrix<f64>, c: &DVector<f64>, mu: f64, w: &Weights) -> Option<DVector<f64>> {
    let n = a.ncols();
    let m_rows = a.nrows();
    let at = a.transpose();
    let h = &at * c;
    let lin_p = DVector::from_fn(n, |k, _| mu * w.b - h[k]);
    let lin_q = DVector::from_fn(n, |k, _| mu * (w.b + 2.0 * w.c) + h[k]);
    let scale = lin_p.amax().max(lin_q.amax()).max(1.0);
    let tol = 1e-12;

    let mut p = DVector::from_element(n, 1.0);
    let mut q = DVector::from_element(n, 1.0);
    let mut lp = DVector::from_element(n, scale);
    let mut lq = DVector::from_element(n, scale);

    for _ in 0..200 {
        let gx = &at * (a * (&p - &q));
        let rp = &gx + &lin_p - &lp;
        let rq = -&gx + &lin_q - &lq;
        let gap = p.dot(&lp) + q.dot(&lq);
        let mu_c = gap / (2 * n) as f64;
        let obj = 0.5 * (&p - &q).dot(&gx) + lin_p.dot(&p) + lin_q.dot(&q);
        if rp.amax().max(rq.amax()) <= tol * scale && mu_c <= tol * obj.abs().max(1.0) / (2 * n) as f64 {
            return Some(p - q);
        }

        // (Q + D)dz = r with Q = [[AᵀA, −AᵀA], [−AᵀA, AᵀA]] is solved through
        // Woodbury in lag space: M = I + A E Aᵀ, E = 1/d_p + 1/d_q.
        let dp = lp.component_div(&p);
        let dq = lq.component_div(&q);
        let e = DVector::from_fn(n, |k, _| 1.0 / dp[k] + 1.0 / dq[k]);
        let mut scaled = a.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= e[k];
        }
        let mut m = &scaled * &at;
        for k in 0..m_rows {
            m[(k, k)] += 1.0;
        }
        let chol = cholesky_jittered(m)?;
        let solve = |r1: &DVector<f64>, r2: &DVector<f64>| {
            let v = DVector::from_fn(n, |k, _| r1[k] / dp[k] - r2[k] / dq[k]);
            let y = chol.solve(&(a * v));
            let aty = &at * y;
            let up = DVector::from_fn(n, |k, _| (r1[k] - aty[k]) / dp[k]);
            let uq = DVector::from_fn(n, |k, _| (r2[k] + aty[k]) / dq[k]);
            (up, uq)
        };
        let step = |v: &DVector<f64>, dv: &DVector<f64>| {
            v.iter()
                .zip(dv.iter())
                .filter(|(_, &d)| d < 0.0)
                .map(|(&x, &d)| -x / d)
                .fold(1.0_f64, f64::min)
        };

        // predictor
        let (dpa, dqa) = solve(&(-&rp - &lp), &(-&rq - &lq));
        let dlpa = DVector::from_fn(n, |k, _| -lp[k] - dp[k] * dpa[k]);
        let dlqa = DVector::from_fn(n, |k, _| -lq[k] - dq[k] * dqa[k]);
        let ap = step(&p, &dpa).min(step(&q, &dqa));
        let ad = step(&lp, &dlpa).min(step(&lq, &dlqa));
        let gap_aff = (&p + ap * &dpa).dot(&(&lp + ad * &dlpa)) + (&q + ap * &dqa).dot(&(&lq + ad * &dlqa));
        let sigma = (gap_aff / gap).powi(3);
        let target = sigma * mu_c;

        // corrector
        let cp = DVector::from_fn(n, |k, _| (target - p[k] * lp[k] - dpa[k] * dlpa[k]) / p[k]);
        let cq = DVector::from_fn(n, |k, _| (target - q[k] * lq[k] - dqa[k] * dlqa[k]) / q[k]);
        let (dpc, dqc) = solve(&(-&rp + &cp), &(-&rq + &cq));
        let dlp = DVector::from_fn(n, |k, _| cp[k] - dp[k] * dpc[k]);
        let dlq = DVector::from_fn(n, |k, _| cq[k] - dq[k] * dqc[k]);
        let ap = step(&p, &dpc).min(step(&q, &dqc));
        let ad = step(&lp, &dlp).min(step(&lq, &dlq));
        p += 0.99 * ap * dpc;
        q += 0.99 * ap * dqc;
        lp += 0.99 * ad * dlp;
        lq += 0.99 * ad * dlq;
        if !(p.iter().chain(q.iter()).all(|v| v.is_finite())) {
            return None;
        }
    }
    Some(p - q)
}

/// Runs the alternating scheme from noise level `sigma0` and initial working
/// set `initial`.
pub(crate) fn solve(
    dict: &Dictionary,
    c: &DVector<f64>,
    w: &Weights,
    sigma0: f64,
    initial: &[usize],
    settings: &SolverSettings,
) -> RunResult {
    let n_modes = dict.n_modes();
    let c_norm = c.norm();
    let scale = dict.correlate(c).iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut working: Vec<usize> = Vec::new();
    let mut in_set = vec![false; n_modes];
    fn add(working: &mut Vec<usize>, in_set: &mut [bool], k: usize) {
        if !in_set[k] {
            in_set[k] = true;
            working.push(k);
        }
    }
    for &k in initial {
        add(&mut working, &mut in_set, k);
    }

    let mut best = RunResult {
        x: Vec::new(),
        objective: w.a * c_norm,
        residual_norm: c_norm,
        trace: vec![w.a * c_norm],
        converged: false,
    };
    let mut sigma = sigma0;
    let mut cols = dict.columns(&working);
    for _ in 0..settings.max_outer {
        let mu = sigma / w.a;
        let mut x: Option<DVector<f64>> = None;
        loop {
            let Some(xw) = split_qp(&cols, c, mu, w) else {
                log::debug!("interior-point step broke down at working set size {}", working.len());
                break;
            };
            let r = &cols * &xw - c;
            let gr = dict.correlate(&r);
            let mut violations: Vec<(usize, f64)> = gr
                .iter()
                .enumerate()
                .filter(|(k, _)| !in_set[*k])
                .map(|(k, &g)| (k, (-(g + mu * w.b)).max(g - mu * (w.b + 2.0 * w.c))))
                .filter(|(_, v)| *v > settings.tolerance * scale)
                .collect();
            x = Some(xw);
            if violations.is_empty() || working.len() >= settings.max_working {
                break;
            }
            violations.sort_by(|p, q| q.1.total_cmp(&p.1).then(p.0.cmp(&q.0)));
            let start = working.len();
            for &(k, _) in violations.iter().take(settings.block) {
                add(&mut working, &mut in_set, k);
            }
            let fresh = dict.columns(&working[start..]);
            let mut grown = DMatrix::zeros(cols.nrows(), working.len());
            grown.columns_mut(0, start).copy_from(&cols);
            grown.columns_mut(start, working.len() - start).copy_from(&fresh);
            cols = grown;
        }
        let Some(xw) = x else { break };
        let n = xw.len();
        let residual = (cols.columns(0, n) * &xw - c).norm();
        let value = w.a * residual + xw.iter().map(|&v| phi(v, w)).sum::<f64>();
        if !(value.is_finite() && value < best.objective * (1.0 - settings.tolerance)) {
            best.converged = value.is_finite();
            break;
        }
        best.objective = value;
        best.residual_norm = residual;
        best.x = working[..n].iter().copied().zip(xw.iter().copied()).filter(|(_, v)| *v != 0.0).collect();
        best.trace.push(value);
        sigma = residual.max(1e-12 * c_norm);
    }
    best
}
