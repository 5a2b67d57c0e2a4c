//! Run configuration: a sectioned TOML document with units in the key names.
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nisebath::nise::SystemHamiltonian;
use nisebath::observables::DipoleSet;
use nisebath::spectral::DrudeLorentzPeak;
use nisebath::{io, presets, SpectralDensity};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed of every random stream. Required.
    pub seed: u64,
    /// Worker threads; 0 or absent uses all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superres: Option<SuperresSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<ResampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorption: Option<AbsorptionSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    /// Square site-basis matrix in cm⁻¹.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian_file: Option<String>,
    /// Built-in model: fmo, dimer_strong, dimer_weak, dimer_slow_switch,
    /// high_frequency_dimer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// CSV with header x,y,z, one row per site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipoles_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakConfig {
    pub center_cm1: f64,
    pub reorg_cm1: f64,
    pub tau_fs: f64,
}

/// Exactly one source: `peaks`, `sd_file`, `preset` or `site_sd_files`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peaks: Option<Vec<PeakConfig>>,
    /// Tabulated J(ω) with header omega_cm1,J_cm1, used on every site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_file: Option<String>,
    /// One tabulated file per site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_sd_files: Option<Vec<String>>,
    /// three_peak, two_peak, one_peak, fmo_like, or a dimer preset name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Rescales every site density to this reorganization energy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_cm1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt_fs: f64,
    pub duration_fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub realizations: usize,
    /// Long trajectory cut into overlapping windows instead of generating
    /// noise in-process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_file: Option<String>,
    /// Offset between consecutive windows of `input_file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_stride_fs: Option<f64>,
    /// Number of sites for gen-noise when no Hamiltonian is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    /// nise or tnise.
    pub mode: String,
    /// Any of plain, constructed, interpolated.
    pub averaging: Vec<String>,
    /// One-based site holding the initial excitation.
    pub initial_site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub input_files: Vec<String>,
    /// step, exponential, gaussian or general.
    #[serde(default = "default_damping")]
    pub damping: String,
    /// Damping cutoff; suggested from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_fs: Option<f64>,
    /// Exponent of the general damping function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

fn default_damping() -> String {
    "gaussian".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperresSection {
    /// Correlation function with header t_fs,C_cm2.
    pub input_file: String,
    pub window_fs: f64,
    /// (first, last, step) of the damping grid in cm⁻¹.
    pub gamma_cm1: [f64; 3],
    /// (first, last, step) of the frequency grid in cm⁻¹.
    pub omega_cm1: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_stride: Option<usize>,
    #[serde(default = "yes")]
    pub debias: bool,
    /// Upper edge of the reconstructed spectral density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_max_cm1: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleSection {
    pub input_file: String,
    pub dt_target_fs: f64,
    /// Fraction of the band rolled off before padding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionSection {
    /// nise (default) or tnise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub apodize: bool,
    /// Subtract the mean site energy from the frequency axis.
    #[serde(default)]
    pub center_on_mean_energy: bool,
    /// Reference spectrum to align to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align_to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align_range_cm1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_shift_cm1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(describe_toml_error(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> CliResult<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    /// Checks that do not touch the file system.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(s) = &self.system {
            positive("system.temperature_K", s.temperature_k)?;
            if s.hamiltonian_file.is_some() && s.preset.is_some() {
                return config_err("system: give either hamiltonian_file or preset, not both");
            }
        }
        if let Some(t) = &self.time {
            positive("time.dt_fs", t.dt_fs)?;
            positive("time.duration_fs", t.duration_fs)?;
        }
        if let Some(b) = &self.bath {
            let sources = [
                b.peaks.is_some(),
                b.sd_file.is_some(),
                b.site_sd_files.is_some(),
                b.preset.is_some(),
            ];
            if sources.iter().filter(|&&x| x).count() != 1 {
                return config_err("bath: give exactly one of peaks, sd_file, site_sd_files or preset");
            }
            if let Some(l) = b.lambda_cm1 {
                positive("bath.lambda_cm1", l)?;
            }
            for p in b.peaks.iter().flatten() {
                positive("bath.peaks.tau_fs", p.tau_fs)?;
                if !(p.reorg_cm1 >= 0.0 && p.center_cm1 >= 0.0) {
                    return config_err("bath.peaks: center_cm1 and reorg_cm1 must be nonnegative");
                }
            }
        }
        if let Some(n) = &self.noise {
            if n.realizations == 0 {
                return config_err("noise.realizations must be at least 1");
            }
            if let Some(s) = n.window_stride_fs {
                positive("noise.window_stride_fs", s)?;
            }
        }
        if let Some(p) = &self.propagation {
            if !["nise", "tnise"].contains(&p.mode.as_str()) {
                return config_err(format!("propagation.mode must be nise or tnise, got '{}'", p.mode));
            }
            if p.averaging.is_empty() {
                return config_err("propagation.averaging lists no scheme");
            }
            if p.initial_site == 0 {
                return config_err("propagation.initial_site is one-based");
            }
            if let Some(f) = p.interpolation_factor {
                positive("propagation.interpolation_factor", f)?;
            }
            if let Some(f) = p.log_floor {
                positive("propagation.log_floor", f)?;
            }
        }
        if let Some(e) = &self.estimate {
            if e.input_files.is_empty() {
                return config_err("estimate.input_files is empty");
            }
            if let Some(c) = e.cutoff_fs {
                positive("estimate.cutoff_fs", c)?;
            }
        }
        if let Some(s) = &self.superres {
            positive("superres.window_fs", s.window_fs)?;
            for (name, g) in [("superres.gamma_cm1", s.gamma_cm1), ("superres.omega_cm1", s.omega_cm1)] {
                if !(g[2] > 0.0 && g[1] >= g[0]) {
                    return config_err(format!("{name} must be [first, last, step] with last ≥ first and step > 0"));
                }
            }
        }
        if let Some(mode) = self.absorption.as_ref().and_then(|a| a.mode.as_ref()) {
            if !["nise", "tnise"].contains(&mode.as_str()) {
                return config_err(format!("absorption.mode must be nise or tnise, got '{mode}'"));
            }
        }
        if let Some(r) = &self.resample {
            positive("resample.dt_target_fs", r.dt_target_fs)?;
        }
        Ok(())
    }

    pub fn system(&self) -> CliResult<&SystemSection> {
        self.system.as_ref().ok_or_else(|| missing("system"))
    }

    pub fn time(&self) -> CliResult<&TimeSection> {
        self.time.as_ref().ok_or_else(|| missing("time"))
    }

    pub fn bath(&self) -> CliResult<&BathSection> {
        self.bath.as_ref().ok_or_else(|| missing("bath"))
    }

    pub fn noise(&self) -> CliResult<&NoiseSection> {
        self.noise.as_ref().ok_or_else(|| missing("noise"))
    }

    pub fn propagation(&self) -> CliResult<&PropagationSection> {
        self.propagation.as_ref().ok_or_else(|| missing("propagation"))
    }

    pub fn estimate(&self) -> CliResult<&EstimateSection> {
        self.estimate.as_ref().ok_or_else(|| missing("estimate"))
    }

    pub fn superres(&self) -> CliResult<&SuperresSection> {
        self.superres.as_ref().ok_or_else(|| missing("superres"))
    }

    pub fn resample(&self) -> CliResult<&ResampleSection> {
        self.resample.as_ref().ok_or_else(|| missing("resample"))
    }
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("config has no [{section}] section"))
}

fn positive(key: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config_err(format!("{key} must be positive, got {v}"))
    }
}

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

/// A parsed config together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = RunConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    /// Resolves `rel` against the config directory and checks it exists.
    pub fn input(&self, key: &str, rel: &str) -> CliResult<PathBuf> {
        let p = self.base.join(rel);
        if !p.is_file() {
            return config_err(format!("{key}: file {} does not exist", p.display()));
        }
        Ok(p)
    }

    pub fn output_dir(&self) -> CliResult<PathBuf> {
        let dir = self.base.join(&self.config.output.dir);
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("cannot create output dir {}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn hamiltonian(&self) -> CliResult<SystemHamiltonian> {
        let sys = self.config.system()?;
        if let Some(file) = &sys.hamiltonian_file {
            let path = self.input("system.hamiltonian_file", file)?;
            let f = std::fs::File::open(&path)?;
            return Ok(io::read_hamiltonian(f)?);
        }
        match sys.preset.as_deref() {
            Some("fmo") => Ok(presets::fmo_hamiltonian()?),
            Some("high_frequency_dimer") => Ok(presets::high_frequency_dimer()?),
            Some(name) => Ok(dimer_preset(name)?.hamiltonian()?),
            None => config_err("system: give hamiltonian_file or preset"),
        }
    }

    pub fn dipoles(&self, n_sites: usize) -> CliResult<DipoleSet> {
        let sys = self.config.system()?;
        let d = match (&sys.dipoles_file, sys.preset.as_deref()) {
            (Some(file), _) => io::read_dipoles(&io::Table::load(&self.input("system.dipoles_file", file)?)?)?,
            (None, Some("fmo")) => presets::fmo_dipoles()?,
            _ => return config_err("absorption needs system.dipoles_file"),
        };
        if d.len() != n_sites {
            return config_err(format!("{} dipoles for {n_sites} sites", d.len()));
        }
        Ok(d)
    }

    /// One spectral density per site.
    pub fn site_densities(&self, n_sites: usize) -> CliResult<Vec<SpectralDensity>> {
        let bath = self.config.bath()?;
        let mut list = if let Some(files) = &bath.site_sd_files {
            if files.len() != n_sites {
                return config_err(format!("bath.site_sd_files lists {} files for {n_sites} sites", files.len()));
            }
            files
                .iter()
                .map(|f| self.tabulated(f))
                .collect::<CliResult<Vec<_>>>()?
        } else {
            let sd = if let Some(peaks) = &bath.peaks {
                let list = peaks
                    .iter()
                    .map(|p| DrudeLorentzPeak::with_decay_time(p.center_cm1, p.reorg_cm1, p.tau_fs))
                    .collect::<nisebath::Result<Vec<_>>>()?;
                SpectralDensity::drude_lorentz(list)
            } else if let Some(file) = &bath.sd_file {
                self.tabulated(file)?
            } else {
                match bath.preset.as_deref().unwrap_or_default() {
                    "three_peak" => presets::three_peak_sd(3)?,
                    "two_peak" => presets::three_peak_sd(2)?,
                    "one_peak" => presets::three_peak_sd(1)?,
                    "fmo_like" => presets::fmo_like_sd()?,
                    name => dimer_preset(name)?.spectral_density()?,
                }
            };
            vec![sd; n_sites]
        };
        if let Some(l) = bath.lambda_cm1 {
            list = list.iter().map(|sd| sd.rescale_to_lambda(l)).collect::<nisebath::Result<_>>()?;
        }
        Ok(list)
    }

    fn tabulated(&self, rel: &str) -> CliResult<SpectralDensity> {
        let table = io::Table::load(&self.input("bath.sd_file", rel)?)?;
        let curve = io::read_spectral_curve(&table)?;
        Ok(SpectralDensity::tabulated(curve.omega, curve.values)?)
    }
}

fn dimer_preset(name: &str) -> CliResult<presets::TwoSiteSystem> {
    match name {
        "dimer_strong" => Ok(presets::DIMER_STRONG),
        "dimer_weak" => Ok(presets::DIMER_WEAK),
        "dimer_slow_switch" => Ok(presets::DIMER_SLOW_SWITCH),
        other => config_err(format!("unknown preset '{other}'")),
    }
}
