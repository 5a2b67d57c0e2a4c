//! The command workflows. Each returns the manifest of what it wrote.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use nisebath::averaging::{averaging_registry, AveragingParams, DEFAULT_INTERPOLATION_FACTOR, DEFAULT_LOG_FLOOR};
use nisebath::bath::{
    apply_damping, autocorrelation, average_autocorrelations, resample, sd_from_autocorrelation, suggest_cutoff,
    CorrelationSource, CutoffOptions, DampingSpec, ResampleOptions,
};
use nisebath::io::{self, Table};
use nisebath::nise::{
    boltzmann_density, correction_registry, run_ensemble, site_state, CorrectionParams, NoiseSource,
    SystemHamiltonian,
};
use nisebath::noise::{samples_for_duration, steps_for_duration, windows_from_trajectory, SiteNoiseGenerator};
use nisebath::observables::{absorption_spectrum, align_shift, apply_shift, ensemble_sigma, normalize_peak};
use nisebath::superres::{self, FitOptions, SuperResGrid};
use nisebath::NoiseTrajectory;

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

fn save(table: &Table, dir: &Path, name: &str, manifest: &mut Manifest) -> CliResult<PathBuf> {
    let path = dir.join(name);
    table.save(&path)?;
    manifest.record(dir, &path)?;
    Ok(path)
}

fn load_noise(path: &Path) -> CliResult<NoiseTrajectory> {
    Ok(io::read_noise(&Table::load(path)?)?)
}

/// Noise generated on demand; owns its generator.
struct Generated {
    generator: SiteNoiseGenerator,
    seed: u64,
    count: usize,
}

impl NoiseSource for Generated {
    fn count(&self) -> usize {
        self.count
    }

    fn realization(&self, r: usize) -> nisebath::Result<NoiseTrajectory> {
        Ok(self.generator.realization(self.seed, r as u64))
    }
}

/// Realizations for propagation: windows of `noise.input_file` when given,
/// otherwise generated from the bath section.
fn noise_source(
    cfg: &LoadedConfig,
    n_sites: usize,
    n_steps: usize,
    manifest: &mut Manifest,
) -> CliResult<Box<dyn NoiseSource>> {
    let c = &cfg.config;
    let noise = c.noise()?;
    let time = c.time()?;
    let Some(file) = &noise.input_file else {
        let temperature = c.system()?.temperature_k;
        let models = cfg.site_densities(n_sites)?;
        let generator = SiteNoiseGenerator::new(&models, temperature, n_steps + 1, time.dt_fs)?;
        return Ok(Box::new(Generated {
            generator,
            seed: c.seed,
            count: noise.realizations,
        }));
    };
    let mut traj = load_noise(&cfg.input("noise.input_file", file)?)?;
    if traj.n_sites() != n_sites {
        return Err(CliError::Config(format!(
            "noise file has {} sites, the Hamiltonian {n_sites}",
            traj.n_sites()
        )));
    }
    if (traj.dt() - time.dt_fs).abs() > 1e-9 * time.dt_fs {
        let from = traj.dt();
        traj = resample(&traj, time.dt_fs, ResampleOptions::default())?;
        manifest
            .notes
            .push(format!("noise resampled from {from} fs to {} fs", time.dt_fs));
    }
    let stride_fs = noise.window_stride_fs.unwrap_or(time.duration_fs);
    let stride = ((stride_fs / time.dt_fs).round() as usize).max(1);
    let mut windows = windows_from_trajectory(&traj, n_steps + 1, stride)?;
    if windows.is_empty() {
        return Err(CliError::Config(format!(
            "noise file of {} samples is shorter than one {n_steps}-step window",
            traj.len()
        )));
    }
    if windows.len() < noise.realizations {
        let note = format!("only {} windows available; {} requested", windows.len(), noise.realizations);
        log::warn!("{note}");
        manifest.notes.push(note);
    }
    windows.truncate(noise.realizations);
    Ok(Box::new(Windows(windows)))
}

struct Windows(Vec<NoiseTrajectory>);

impl NoiseSource for Windows {
    fn count(&self) -> usize {
        self.0.len()
    }

    fn realization(&self, r: usize) -> nisebath::Result<NoiseTrajectory> {
        self.0.as_slice().realization(r)
    }
}

pub fn gen_noise(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("gen-noise", c)?;
    let time = c.time()?;
    let noise = c.noise()?;
    let temperature = c.system()?.temperature_k;
    let n_sites = match (&c.system()?.hamiltonian_file, &c.system()?.preset, noise.sites) {
        (_, _, Some(n)) => n,
        (None, None, None) => 1,
        _ => cfg.hamiltonian()?.n_sites(),
    };
    let models = cfg.site_densities(n_sites)?;
    let n_samples = samples_for_duration(time.duration_fs, time.dt_fs);
    let generator = SiteNoiseGenerator::new(&models, temperature, n_samples, time.dt_fs)?;
    let dir = cfg.output_dir()?;
    let width = noise.realizations.saturating_sub(1).to_string().len().max(4);
    let paths: Vec<PathBuf> = (0..noise.realizations)
        .into_par_iter()
        .map(|r| {
            let traj = generator.realization(c.seed, r as u64);
            let path = dir.join(format!("noise_{r:0width$}.csv"));
            io::noise_table(&traj).meta("realization", r).save(&path)?;
            Ok(path)
        })
        .collect::<CliResult<_>>()?;
    for p in &paths {
        manifest.record(&dir, p)?;
    }
    Ok(manifest)
}

pub fn estimate_sd(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("estimate-sd", c)?;
    let est = c.estimate()?;
    let temperature = c.system()?.temperature_k;
    let mut series = Vec::new();
    for (k, file) in est.input_files.iter().enumerate() {
        let traj = load_noise(&cfg.input(&format!("estimate.input_files[{k}]"), file)?)?;
        for site in traj.sites() {
            series.push(autocorrelation(site, traj.dt())?);
        }
    }
    let c_avg = average_autocorrelations(&series)?;
    let (cutoff, suggested) = match est.cutoff_fs {
        Some(t) => (t, false),
        None => {
            let s = suggest_cutoff(&c_avg, CutoffOptions::default())?;
            if s.warning {
                manifest.notes.push(format!("no flat noise floor found; cutoff set to {} fs", s.cutoff));
            }
            (s.cutoff, true)
        }
    };
    let spec = match est.exponent {
        Some(b) if est.damping == "general" => DampingSpec::general(cutoff, b),
        _ => DampingSpec::new(&est.damping, cutoff),
    };
    let damped = apply_damping(&c_avg, &spec)?;
    let curve = sd_from_autocorrelation(&damped, temperature)?;
    let dir = cfg.output_dir()?;
    save(&io::autocorrelation_table(&c_avg), &dir, "autocorrelation.csv", &mut manifest)?;
    let table = io::spectral_curve_table(&curve)
        .meta("damping", &spec.kind)
        .meta("cutoff_fs", cutoff)
        .meta("cutoff_suggested", suggested)
        .meta("trajectories", series.len());
    save(&table, &dir, "sd_estimate.csv", &mut manifest)?;
    Ok(manifest)
}

pub fn superres_fit(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("superres-fit", c)?;
    let s = c.superres()?;
    let temperature = c.system()?.temperature_k;
    let table = Table::load(&cfg.input("superres.input_file", &s.input_file)?)?;
    let corr = io::read_autocorrelation(&table, CorrelationSource::Estimated)?;
    let grid = SuperResGrid::uniform(
        (s.gamma_cm1[0], s.gamma_cm1[1], s.gamma_cm1[2]),
        (s.omega_cm1[0], s.omega_cm1[1], s.omega_cm1[2]),
    )?;
    let defaults = FitOptions::default();
    let options = FitOptions {
        cutoff: s.window_fs,
        restarts: s.restarts.unwrap_or(defaults.restarts),
        lag_stride: s.lag_stride.unwrap_or(defaults.lag_stride),
        seed: c.seed,
        ..defaults
    };
    let mut sol = superres::fit(&corr, &grid, &options)?;
    if let Some(w) = &sol.warning {
        manifest.notes.push(w.clone());
    }
    if s.debias {
        sol = superres::debias(&sol, &corr, superres::DEFAULT_DEBIAS_THRESHOLD)?;
    }
    let dir = cfg.output_dir()?;
    let mut modes = io::modes_table(&sol.modes)
        .meta("objective", sol.objective)
        .meta("converged", sol.converged)
        .meta("debiased", s.debias);
    if let Some(k) = sol.kkt_residual {
        modes = modes.meta("kkt_residual", k);
    }
    save(&modes, &dir, "modes.csv", &mut manifest)?;
    let top = s.sd_max_cm1.unwrap_or(s.omega_cm1[1] + 4.0 * s.gamma_cm1[1]);
    let omega: Vec<f64> = (0..=(top.max(1.0).ceil() as usize)).map(|w| w as f64).collect();
    let curve = superres::reconstruct_sd(&sol, &omega, temperature)?;
    save(&io::spectral_curve_table(&curve), &dir, "sd_superres.csv", &mut manifest)?;
    Ok(manifest)
}

pub fn resample_cmd(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("resample", c)?;
    let r = c.resample()?;
    let traj = load_noise(&cfg.input("resample.input_file", &r.input_file)?)?;
    let out = resample(&traj, r.dt_target_fs, ResampleOptions { taper: r.taper })?;
    let dir = cfg.output_dir()?;
    save(&io::noise_table(&out), &dir, "resampled.csv", &mut manifest)?;
    Ok(manifest)
}

pub fn propagate(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("propagate", c)?;
    let p = c.propagation()?;
    let temperature = c.system()?.temperature_k;
    let h = cfg.hamiltonian()?;
    let n = h.n_sites();
    if p.initial_site > n {
        return Err(CliError::Config(format!(
            "propagation.initial_site {} exceeds {n} sites",
            p.initial_site
        )));
    }
    let time = c.time()?;
    let n_steps = steps_for_duration(time.duration_fs, time.dt_fs);
    let source = noise_source(cfg, n, n_steps, &mut manifest)?;
    let correction = correction_registry().build(&p.mode, &CorrectionParams { temperature })?;
    let params = AveragingParams {
        factor: p.interpolation_factor.unwrap_or(DEFAULT_INTERPOLATION_FACTOR),
        floor: p.log_floor.unwrap_or(DEFAULT_LOG_FLOOR),
    };
    let registry = averaging_registry();
    let schemes = p
        .averaging
        .iter()
        .map(|name| registry.build(name, &params))
        .collect::<nisebath::Result<Vec<_>>>()?;
    if p.mode == "nise" && schemes.iter().any(|s| s.name() != "plain") {
        manifest
            .notes
            .push("logarithmic averaging applied to plain NISE dynamics".to_string());
    }
    let with_reference = schemes.iter().any(|s| s.needs_reference());
    let psi0 = site_state(n, p.initial_site - 1)?;
    let run = run_ensemble(&h, source.as_ref(), correction.as_ref(), with_reference, n_steps, &psi0)?;
    if run.stats.weak_overlap_steps > 0 {
        manifest.notes.push(format!(
            "{} steps with strong eigenbasis rotation ({} at near-degenerate levels)",
            run.stats.weak_overlap_steps, run.stats.degenerate_crossings
        ));
    }
    let dir = cfg.output_dir()?;
    for scheme in &schemes {
        let series = scheme.average(&run)?;
        let table = io::populations_table(&series)
            .meta("mode", run.mode)
            .meta("realizations", run.count);
        save(&table, &dir, &format!("populations_{}.csv", scheme.name()), &mut manifest)?;
        if let Some(l) = &series.lifetimes {
            save(&io::lifetimes_table(l), &dir, "lifetimes.csv", &mut manifest)?;
        }
    }
    Ok(manifest)
}

pub fn absorption(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("absorption", c)?;
    let a = c.absorption.clone().unwrap_or_default();
    let temperature = c.system()?.temperature_k;
    let h = cfg.hamiltonian()?;
    let dipoles = cfg.dipoles(h.n_sites())?;
    let time = c.time()?;
    let n_steps = steps_for_duration(time.duration_fs, time.dt_fs);
    let source = noise_source(cfg, h.n_sites(), n_steps, &mut manifest)?;
    let mode = a.mode.as_deref().unwrap_or("nise");
    let correction = correction_registry().build(mode, &CorrectionParams { temperature })?;
    let sigma = ensemble_sigma(&h, source.as_ref(), correction.as_ref(), n_steps, &dipoles)?;
    let mut spectrum = absorption_spectrum(&sigma, time.dt_fs, a.apodize)?;
    if a.center_on_mean_energy {
        spectrum = apply_shift(&spectrum, -mean_energy(&h));
    }
    if a.normalize {
        spectrum = normalize_peak(&spectrum)?;
    }
    if let Some(reference) = &a.align_to {
        let r = io::read_spectrum(&Table::load(&cfg.input("absorption.align_to", reference)?)?)?;
        let range = a
            .align_range_cm1
            .map(|[lo, hi]| (lo, hi))
            .unwrap_or((r.omega[0], r.omega[r.omega.len() - 1]));
        let shift = align_shift(&spectrum, &r, range, a.max_shift_cm1.unwrap_or(500.0))?;
        spectrum = apply_shift(&spectrum, shift);
    }
    let dir = cfg.output_dir()?;
    let mut sigma_table = Table::new(&["t_fs", "re", "im"]).meta("mode", mode);
    sigma_table.rows = sigma
        .iter()
        .enumerate()
        .map(|(i, z)| vec![i as f64 * time.dt_fs, z.re, z.im])
        .collect();
    save(&sigma_table, &dir, "sigma.csv", &mut manifest)?;
    save(
        &io::spectrum_table(&spectrum).meta("mode", mode),
        &dir,
        "spectrum.csv",
        &mut manifest,
    )?;
    Ok(manifest)
}

fn mean_energy(h: &SystemHamiltonian) -> f64 {
    let e = h.site_energies();
    e.iter().sum::<f64>() / e.len() as f64
}

pub fn equilibrium(cfg: &LoadedConfig) -> CliResult<Manifest> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("equilibrium", c)?;
    let temperature = c.system()?.temperature_k;
    let h = cfg.hamiltonian()?;
    let rho = boltzmann_density(h.matrix(), temperature)?;
    let mut table = Table::new(&["site", "population"]).meta("temperature_K", temperature);
    table.rows = (0..h.n_sites()).map(|k| vec![(k + 1) as f64, rho[(k, k)]]).collect();
    let dir = cfg.output_dir()?;
    save(&table, &dir, "equilibrium.csv", &mut manifest)?;
    Ok(manifest)
}
