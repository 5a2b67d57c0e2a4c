//! Model systems used by the examples, the CLI and the test-suite.

use crate::error::Result;
use crate::nise::SystemHamiltonian;
use crate::observables::DipoleSet;
use crate::spectral::{DrudeLorentzPeak, SpectralDensity};

/// Three broad Drude–Lorentz peaks at Ω = 0, 725 and 1200 cm⁻¹, λ = 20 cm⁻¹
/// each, decay time 100 fs. `peaks` keeps the first one, two or three.
pub fn three_peak_sd(peaks: usize) -> Result<SpectralDensity> {
    let list = [0.0, 725.0, 1200.0]
        .iter()
        .take(peaks.clamp(1, 3))
        .map(|&center| DrudeLorentzPeak::with_decay_time(center, 20.0, 100.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralDensity::drude_lorentz(list))
}

/// Vibrational lines (Ω, λ) of the structured pigment-protein stand-in.
const FMO_LINES: [(f64, f64); 14] = [
    (36.0, 2.0),
    (70.0, 2.0),
    (117.0, 3.0),
    (185.0, 3.0),
    (237.0, 2.5),
    (260.0, 2.0),
    (327.0, 2.0),
    (381.0, 1.5),
    (479.0, 1.0),
    (565.0, 1.5),
    (747.0, 2.0),
    (790.0, 1.5),
    (1186.0, 1.5),
    (1217.0, 1.0),
];

/// Decay time (fs) of the narrow vibrational lines in [`fmo_like_sd`].
pub const FMO_LINE_DECAY_FS: f64 = 2000.0;

/// A structured spectral density in the style of pigment-protein complexes:
/// an overdamped low-frequency background (λ = 12 cm⁻¹, 80 fs) plus
/// fourteen narrow underdamped lines. Averaged over seven sites, the
/// correlation function of 100 ps trajectories sinks into its statistical
/// floor after three to four picoseconds.
pub fn fmo_like_sd() -> Result<SpectralDensity> {
    let mut peaks = vec![DrudeLorentzPeak::with_decay_time(0.0, 12.0, 80.0)?];
    for &(center, reorg) in &FMO_LINES {
        peaks.push(DrudeLorentzPeak::with_decay_time(center, reorg, FMO_LINE_DECAY_FS)?);
    }
    Ok(SpectralDensity::drude_lorentz(peaks))
}

/// Site energies (cm⁻¹) of the seven-site FMO model.
pub const FMO_SITE_ENERGIES: [f64; 7] = [12410.0, 12530.0, 12210.0, 12320.0, 12480.0, 12630.0, 12440.0];

/// Couplings (site m, site n, V) with one-based site labels.
pub const FMO_COUPLINGS: [(usize, usize, f64); 21] = [
    (1, 2, -87.7),
    (1, 3, 5.5),
    (1, 4, -5.9),
    (1, 5, 6.7),
    (1, 6, -13.7),
    (1, 7, -9.9),
    (2, 3, 30.8),
    (2, 4, 8.2),
    (2, 5, 0.7),
    (2, 6, 11.8),
    (2, 7, 4.3),
    (3, 4, -53.5),
    (3, 5, -2.2),
    (3, 6, -9.6),
    (3, 7, 6.0),
    (4, 5, -70.7),
    (4, 6, -17.0),
    (4, 7, -63.3),
    (5, 6, 81.1),
    (5, 7, -1.3),
    (6, 7, 39.7),
];

pub fn fmo_hamiltonian() -> Result<SystemHamiltonian> {
    let couplings: Vec<(usize, usize, f64)> = FMO_COUPLINGS.iter().map(|&(m, n, v)| (m - 1, n - 1, v)).collect();
    SystemHamiltonian::from_parts(&FMO_SITE_ENERGIES, &couplings)
}

/// Unit transition dipoles of illustrative, pairwise non-parallel
/// orientation for the seven FMO sites.
pub fn fmo_dipoles() -> Result<DipoleSet> {
    let raw: [[f64; 3]; 7] = [
        [-0.741, -0.561, -0.370],
        [-0.857, 0.504, 0.107],
        [-0.197, 0.957, -0.211],
        [-0.799, -0.534, -0.277],
        [-0.737, 0.656, 0.164],
        [-0.135, -0.879, 0.457],
        [-0.495, -0.708, -0.503],
    ];
    let unit = raw
        .iter()
        .map(|v| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        })
        .collect();
    DipoleSet::new(unit)
}

/// Parameters of a two-site system with a Drude bath on both sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSiteSystem {
    pub coupling: f64,
    pub tau_fs: f64,
    pub reorg: f64,
    /// Energy of site 1; site 2 sits at zero.
    pub energy: f64,
    pub temperature: f64,
}

impl TwoSiteSystem {
    pub fn hamiltonian(&self) -> Result<SystemHamiltonian> {
        SystemHamiltonian::from_parts(&[self.energy, 0.0], &[(0, 1, self.coupling)])
    }

    pub fn spectral_density(&self) -> Result<SpectralDensity> {
        Ok(SpectralDensity::drude_lorentz(vec![DrudeLorentzPeak::with_decay_time(
            0.0,
            self.reorg,
            self.tau_fs,
        )?]))
    }
}

/// Strongly coupled benchmark dimer.
pub const DIMER_STRONG: TwoSiteSystem = TwoSiteSystem {
    coupling: 134.8,
    tau_fs: 81.8,
    reorg: 192.6,
    energy: -302.4,
    temperature: 300.0,
};

/// Weakly coupled benchmark dimer.
pub const DIMER_WEAK: TwoSiteSystem = TwoSiteSystem {
    coupling: 63.5,
    tau_fs: 81.0,
    reorg: 9.2,
    energy: -72.3,
    temperature: 300.0,
};

/// Benchmark dimer for which the interpolation factor matters.
pub const DIMER_SLOW_SWITCH: TwoSiteSystem = TwoSiteSystem {
    coupling: -82.4,
    tau_fs: 65.8,
    reorg: 386.3,
    energy: -253.5,
    temperature: 300.0,
};

/// Dimer used to probe high-frequency bath modes: ΔE = 200 cm⁻¹, V = 100 cm⁻¹.
pub fn high_frequency_dimer() -> Result<SystemHamiltonian> {
    SystemHamiltonian::from_parts(&[200.0, 0.0], &[(0, 1, 100.0)])
}
