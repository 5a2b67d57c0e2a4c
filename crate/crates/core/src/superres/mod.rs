//! Sparse fit of an autocorrelation onto a dictionary of damped cosines
//! λ e^{−γt/ħ} cos(Ωt/ħ), followed by non-negative debiasing and
//! reconstruction of the spectral density.
//!
//! The fit minimizes `a‖Aλ − C‖₂ + b‖λ‖₁ + cΣ(|λ| − λ)`; see [`solver`] for
//! the method.

mod nnls;
mod solver;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bath::{AutocorrelationSeries, SpectralCurve};
use crate::error::{invalid, Error, Result};
use crate::noise::derive_seed;
use crate::units::{thermal_energy, EV_TO_CM1, HBAR};

pub use nnls::{nnls, NnlsSolution};

/// Exponent beyond which e^{−γt/ħ} is treated as e^{−700}.
const MAX_DECAY_EXPONENT: f64 = 700.0;

/// Linewidth and frequency axes of the dictionary (cm⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct SuperResGrid {
    gammas: Vec<f64>,
    omegas: Vec<f64>,
}

fn axis(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

impl SuperResGrid {
    pub fn new(gammas: Vec<f64>, omegas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || omegas.is_empty() {
            return invalid("super-resolution grid axes must be nonempty");
        }
        if gammas.windows(2).any(|w| w[1] <= w[0]) || omegas.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("super-resolution grid axes must be strictly increasing");
        }
        if gammas[0] <= 0.0 {
            return invalid("linewidths must be positive");
        }
        if omegas[0] < 0.0 {
            return invalid("frequencies must be nonnegative");
        }
        Ok(Self { gammas, omegas })
    }

    /// Uniform axes `γ ∈ [γ₀, γ₁]` and `Ω ∈ [Ω₀, Ω₁]`, endpoints included when
    /// they fall on the step.
    pub fn uniform(gamma: (f64, f64, f64), omega: (f64, f64, f64)) -> Result<Self> {
        if !(gamma.2 > 0.0 && omega.2 > 0.0) {
            return invalid("grid steps must be positive");
        }
        Self::new(axis(gamma.0, gamma.1, gamma.2), axis(omega.0, omega.1, omega.2))
    }

    /// Desk-scale default: γ 1–200 cm⁻¹ in steps of 5, Ω 0–0.2 eV in steps
    /// of 2 cm⁻¹.
    pub fn desk() -> Self {
        Self::uniform((1.0, 200.0, 5.0), (0.0, 0.2 * EV_TO_CM1, 2.0)).expect("valid default grid")
    }

    /// Full-resolution grid: γ 1–200 cm⁻¹ in steps of 0.5, Ω 0–0.2 eV in
    /// steps of 5·10⁻⁵ eV.
    pub fn fine() -> Self {
        Self::uniform((1.0, 200.0, 0.5), (0.0, 0.2 * EV_TO_CM1, 5e-5 * EV_TO_CM1)).expect("valid fine grid")
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn n_modes(&self) -> usize {
        self.gammas.len() * self.omegas.len()
    }

    /// Column index of mode `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.omegas.len() + j
    }

    /// `(i, j)` of column `k`.
    pub fn position(&self, k: usize) -> (usize, usize) {
        (k / self.omegas.len(), k % self.omegas.len())
    }

    /// `(γ, Ω)` of column `k`.
    pub fn mode(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.position(k);
        (self.gammas[i], self.omegas[j])
    }
}

fn basis(gamma: f64, omega: f64, t: f64) -> f64 {
    (-(gamma * t / HBAR).min(MAX_DECAY_EXPONENT)).exp() * (omega * t / HBAR).cos()
}

/// `A[k, (i, j)] = e^{−γ_i t_k/ħ} cos(Ω_j t_k/ħ)`; columns ordered as
/// [`SuperResGrid::index`].
pub fn design_matrix(grid: &SuperResGrid, lags: &[f64]) -> Result<DMatrix<f64>> {
    if lags.is_empty() {
        return invalid("design matrix needs at least one lag");
    }
    let modes: Vec<(f64, f64)> = (0..grid.n_modes()).map(|k| grid.mode(k)).collect();
    Ok(columns(&modes, lags))
}

fn columns(modes: &[(f64, f64)], lags: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(lags.len(), modes.len(), |r, c| basis(modes[c].0, modes[c].1, lags[r]))
}

/// Objective weights a, b, c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { a: 1e4, b: 1.0, c: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub weights: Weights,
    /// Longest lag included in the fit (fs).
    pub cutoff: f64,
    /// Use every `lag_stride`-th lag.
    pub lag_stride: usize,
    /// Outer (noise-level) iterations per run.
    pub max_iter: usize,
    /// Relative objective decrease below which a run stops; also the
    /// relative optimality violation that admits a new column.
    pub tolerance: f64,
    /// Columns added to the working set per round.
    pub block: usize,
    /// Working-set size at which column generation stops.
    pub max_working_set: usize,
    /// Additional runs from random starting points.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            cutoff: 3000.0,
            lag_stride: 1,
            max_iter: 50,
            tolerance: 1e-8,
            block: 40,
            max_working_set: 800,
            restarts: 3,
            seed: 0,
        }
    }
}

/// One retained dictionary element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub gamma: f64,
    pub omega: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperResSolution {
    /// Nonzero coefficients only.
    pub modes: Vec<Mode>,
    pub weights: Weights,
    /// Lags the coefficients were fitted against (fs).
    pub lags: Vec<f64>,
    pub objective: f64,
    pub residual_norm: f64,
    /// Best objective so far, sampled during the winning run.
    pub trace: Vec<f64>,
    /// Final objective of every run (first entry: zero start).
    pub run_objectives: Vec<f64>,
    /// Threshold used by [`debias`], if applied.
    pub debias_threshold: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub converged: bool,
    pub warning: Option<String>,
}

impl SuperResSolution {
    pub fn l1_mass(&self) -> f64 {
        self.modes.iter().map(|m| m.lambda.abs()).sum()
    }
}

fn penalty(x: f64, w: &Weights) -> f64 {
    if x >= 0.0 {
        w.b * x
    } else {
        -(w.b + 2.0 * w.c) * x
    }
}

/// `a‖Ax − C‖₂ + Σ φ(x)`, where φ combines the ℓ₁ and negativity terms.
pub fn objective(a: &DMatrix<f64>, x: &DVector<f64>, c: &DVector<f64>, w: &Weights) -> f64 {
    w.a * (a * x - c).norm() + x.iter().map(|&v| penalty(v, w)).sum::<f64>()
}

fn fit_lags(c: &AutocorrelationSeries, cutoff: f64, stride: usize) -> Result<(Vec<f64>, DVector<f64>)> {
    if stride == 0 {
        return invalid("lag stride must be at least 1");
    }
    if !(cutoff >= 0.0) {
        return invalid("fit cutoff must be nonnegative");
    }
    let (lags, values): (Vec<f64>, Vec<f64>) = c
        .values()
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(k, &v)| (k as f64 * c.dt(), v))
        .take_while(|(t, _)| *t <= cutoff * (1.0 + 1e-12))
        .unzip();
    if lags.is_empty() {
        return invalid("no lags inside the fit cutoff");
    }
    Ok((lags, DVector::from_vec(values)))
}

/// Fits `c` (lags up to `options.cutoff`) onto `grid`.
///
/// The iteration starts from zero and from `options.restarts` random points;
/// the run with the lowest objective is returned.
pub fn fit(c: &AutocorrelationSeries, grid: &SuperResGrid, options: &FitOptions) -> Result<SuperResSolution> {
    let w = options.weights;
    if !(w.a > 0.0 && w.b >= 0.0 && w.c >= 0.0) || ![w.a, w.b, w.c].iter().all(|v| v.is_finite()) {
        return invalid("objective weights must be finite with a > 0, b >= 0, c >= 0");
    }
    if options.block == 0 || options.max_working_set == 0 {
        return invalid("working-set block and limit must be positive");
    }
    let (lags, target) = fit_lags(c, options.cutoff, options.lag_stride)?;
    if target.iter().any(|v| !v.is_finite()) {
        return invalid("autocorrelation contains non-finite values");
    }

    if target.iter().all(|&v| v == 0.0) {
        return Ok(SuperResSolution {
            modes: Vec::new(),
            weights: w,
            lags,
            objective: 0.0,
            residual_norm: 0.0,
            trace: vec![0.0],
            run_objectives: vec![0.0],
            debias_threshold: None,
            kkt_residual: None,
            converged: true,
            warning: None,
        });
    }

    let dict = solver::Dictionary::new(grid, &lags);
    let n = dict.n_modes();
    let settings = solver::SolverSettings {
        max_outer: options.max_iter,
        tolerance: options.tolerance,
        block: options.block,
        max_working: options.max_working_set,
    };
    let correlation = dict.correlate(&target);
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&p, &q| correlation[q].abs().total_cmp(&correlation[p].abs()).then(p.cmp(&q)));
    let seeded: Vec<usize> = ranked.into_iter().take(options.block).collect();

    let sigma0 = target.norm();
    let mut runs = Vec::with_capacity(options.restarts + 1);
    runs.push(solver::solve(&dict, &target, &w, sigma0, &seeded, &settings));
    for r in 0..options.restarts {
        // random starting noise level and random extra columns
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(options.seed, r as u64));
        let start = sigma0 * 4f64.powf(rng.random_range(-1.0..1.0));
        let mut initial = seeded.clone();
        initial.extend((0..options.block).map(|_| rng.random_range(0..n)));
        runs.push(solver::solve(&dict, &target, &w, start, &initial, &settings));
    }
    let run_objectives: Vec<f64> = runs.iter().map(|r| r.objective).collect();
    let best = runs
        .into_iter()
        .min_by(|p, q| p.objective.total_cmp(&q.objective))
        .expect("at least one run");
    if !best.converged {
        log::warn!("super-resolution fit stopped at the iteration limit");
    }
    let modes = best
        .x
        .iter()
        .map(|&(k, lambda)| {
            let (gamma, omega) = grid.mode(k);
            Mode { gamma, omega, lambda }
        })
        .collect();
    Ok(SuperResSolution {
        modes,
        weights: w,
        lags,
        objective: best.objective,
        residual_norm: best.residual_norm,
        trace: best.trace,
        run_objectives,
        debias_threshold: None,
        kkt_residual: None,
        converged: best.converged,
        warning: (!best.converged).then(|| "iteration limit reached before the objective settled".to_string()),
    })
}

/// Default threshold for retaining modes in [`debias`].
pub const DEFAULT_DEBIAS_THRESHOLD: f64 = 5e-8;

/// Keeps modes with |λ| > `threshold` and refits them to `c` by
/// non-negative least squares on the lags used for the fit.
pub fn debias(sol: &SuperResSolution, c: &AutocorrelationSeries, threshold: f64) -> Result<SuperResSolution> {
    let retained: Vec<(f64, f64)> = sol
        .modes
        .iter()
        .filter(|m| m.lambda.abs() > threshold)
        .map(|m| (m.gamma, m.omega))
        .collect();
    let target = DVector::from_iterator(
        sol.lags.len(),
        sol.lags.iter().map(|&t| {
            let k = (t / c.dt()).round() as usize;
            c.values().get(k).copied().unwrap_or(0.0)
        }),
    );
    if sol.lags.iter().any(|&t| (t / c.dt()).round() as usize >= c.len()) {
        return Err(Error::Mismatch("fitted lags exceed the autocorrelation length".into()));
    }
    let mut out = SuperResSolution {
        debias_threshold: Some(threshold),
        ..sol.clone()
    };
    if retained.is_empty() {
        log::warn!("no super-resolution modes above {threshold}; returning the zero solution");
        out.modes.clear();
        out.residual_norm = target.norm();
        out.objective = sol.weights.a * out.residual_norm;
        out.kkt_residual = Some(0.0);
        out.warning = Some(format!("no modes above the debias threshold {threshold}"));
        return Ok(out);
    }
    let a = columns(&retained, &sol.lags);
    let solution = nnls(&a, &target)?;
    out.modes = retained
        .iter()
        .zip(solution.x.iter())
        .filter(|(_, &v)| v > 0.0)
        .map(|(&(gamma, omega), &lambda)| Mode { gamma, omega, lambda })
        .collect();
    out.residual_norm = solution.residual_norm;
    out.objective = objective(&a, &solution.x, &target, &sol.weights);
    out.kkt_residual = Some(solution.kkt_residual);
    Ok(out)
}

/// J(ω) = ω/(2πk_BT) Σ λ [γ/(γ² + (ω−Ω)²) + γ/(γ² + (ω+Ω)²)], the cosine
/// transform of the fitted correlation function.
pub fn reconstruct_sd(sol: &SuperResSolution, omega: &[f64], temperature: f64) -> Result<SpectralCurve> {
    if !(temperature > 0.0) {
        return invalid("temperature must be positive");
    }
    if omega.iter().any(|&w| w < 0.0) {
        return invalid("reconstruction grid must be nonnegative");
    }
    let pre = 1.0 / (2.0 * std::f64::consts::PI * thermal_energy(temperature));
    let values = omega
        .iter()
        .map(|&w| {
            pre * w
                * sol
                    .modes
                    .iter()
                    .map(|m| {
                        let g2 = m.gamma * m.gamma;
                        m.lambda * (m.gamma / (g2 + (w - m.omega).powi(2)) + m.gamma / (g2 + (w + m.omega).powi(2)))
                    })
                    .sum::<f64>()
        })
        .collect();
    SpectralCurve::new(omega.to_vec(), values)
}
