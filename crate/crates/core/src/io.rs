//! CSV formats for trajectories, spectral densities, correlation functions,
//! fitted modes, populations, lifetimes and spectra.
//!
//! Every file is a header row followed by numeric rows. Metadata travels in
//! leading `# key=value` comment lines.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::averaging::{EnsembleDensitySeries, LifetimeSet};
use crate::bath::{AutocorrelationSeries, CorrelationSource, SpectralCurve};
use crate::error::{Error, Result};
use crate::nise::SystemHamiltonian;
use crate::noise::NoiseTrajectory;
use crate::observables::{AbsorptionSpectrum, DipoleSet};
use crate::superres::Mode;

/// A numeric CSV table with `# key=value` metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn write(&self, out: impl Write) -> Result<()> {
        let mut out = BufWriter::new(out);
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            // `{:?}` prints the shortest string that parses back to the same f64
            w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(input: impl Read) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(input).read_to_string(&mut text)?;
        let mut metadata = Vec::new();
        for line in text.lines() {
            let Some(rest) = line.trim_start().strip_prefix('#') else {
                break;
            };
            if let Some((k, v)) = rest.split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != header.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("'{f}' is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { metadata, header, rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(File::open(path)?)
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.len() != expected.len() || self.header.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{}', found '{}'", expected.join(","), self.header.join(",")),
            });
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Parse {
            line: 2,
            message: "need at least two time points".into(),
        });
    }
    let dt = times[1] - times[0];
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs().max(1e-12) {
            return Err(Error::Parse {
                line: k + 3,
                message: "time grid is not uniform".into(),
            });
        }
    }
    Ok(dt)
}

pub fn spectral_curve_table(curve: &SpectralCurve) -> Table {
    let mut t = Table::new(&["omega_cm1", "J_cm1"]);
    t.rows = curve.omega.iter().zip(&curve.values).map(|(&w, &j)| vec![w, j]).collect();
    t
}

pub fn read_spectral_curve(table: &Table) -> Result<SpectralCurve> {
    table.expect_header(&["omega_cm1", "J_cm1"])?;
    SpectralCurve::new(table.column(0), table.column(1))
}

pub fn noise_table(traj: &NoiseTrajectory) -> Table {
    let mut header = vec!["t_fs".to_string()];
    header.extend((1..=traj.n_sites()).map(|n| format!("dE_site{n}_cm1")));
    let mut t = Table {
        header,
        ..Table::default()
    }
    .meta("dt_fs", traj.dt());
    if let Some(seed) = traj.seed() {
        t = t.meta("seed", seed);
    }
    t.rows = (0..traj.len())
        .map(|i| {
            let mut row = vec![i as f64 * traj.dt()];
            row.extend(traj.at(i));
            row
        })
        .collect();
    t
}

pub fn read_noise(table: &Table) -> Result<NoiseTrajectory> {
    if table.header.first().map(String::as_str) != Some("t_fs") || table.header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "noise files start with t_fs followed by one column per site".into(),
        });
    }
    let dt = match table.get("dt_fs") {
        Some(v) => v.parse::<f64>().map_err(|_| Error::Parse {
            line: 1,
            message: format!("bad dt_fs '{v}'"),
        })?,
        None => uniform_step(&table.column(0))?,
    };
    let sites = (1..table.header.len()).map(|k| table.column(k)).collect();
    let traj = NoiseTrajectory::new(dt, sites)?;
    Ok(match table.get("seed").and_then(|s| s.parse::<u64>().ok()) {
        Some(seed) => traj.with_seed(seed),
        None => traj,
    })
}

pub fn autocorrelation_table(c: &AutocorrelationSeries) -> Table {
    let mut t = Table::new(&["t_fs", "C_cm2"]);
    t.rows = c
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| vec![k as f64 * c.dt(), v])
        .collect();
    t
}

pub fn read_autocorrelation(table: &Table, source: CorrelationSource) -> Result<AutocorrelationSeries> {
    table.expect_header(&["t_fs", "C_cm2"])?;
    let dt = uniform_step(&table.column(0))?;
    AutocorrelationSeries::new(table.column(1), dt, source)
}

pub fn modes_table(modes: &[Mode]) -> Table {
    let mut t = Table::new(&["gamma_cm1", "Omega_cm1", "lambda_cm2"]);
    t.rows = modes.iter().map(|m| vec![m.gamma, m.omega, m.lambda]).collect();
    t
}

pub fn read_modes(table: &Table) -> Result<Vec<Mode>> {
    table.expect_header(&["gamma_cm1", "Omega_cm1", "lambda_cm2"])?;
    Ok(table
        .rows
        .iter()
        .map(|r| Mode {
            gamma: r[0],
            omega: r[1],
            lambda: r[2],
        })
        .collect())
}

pub fn populations_table(series: &EnsembleDensitySeries) -> Table {
    let mut header = vec!["t_fs".to_string()];
    header.extend((1..=series.n_sites()).map(|n| format!("pop_site{n}")));
    let mut t = Table {
        header,
        ..Table::default()
    }
    .meta("averaging", series.tag.as_str());
    t.rows = series
        .populations()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![i as f64 * series.dt];
            row.extend(p);
            row
        })
        .collect();
    t
}

/// Full density matrices flattened row-major as re/im pairs.
pub fn density_table(series: &EnsembleDensitySeries) -> Table {
    let n = series.n_sites();
    let mut header = vec!["t_fs".to_string()];
    for a in 1..=n {
        for b in 1..=n {
            header.push(format!("re_{a}_{b}"));
            header.push(format!("im_{a}_{b}"));
        }
    }
    let mut t = Table {
        header,
        ..Table::default()
    }
    .meta("averaging", series.tag.as_str())
    .meta("coherences_valid", series.coherences_valid);
    t.rows = series
        .matrices
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut row = vec![i as f64 * series.dt];
            for a in 0..n {
                for b in 0..n {
                    row.push(m[(a, b)].re);
                    row.push(m[(a, b)].im);
                }
            }
            row
        })
        .collect();
    t
}

pub fn lifetimes_table(lifetimes: &LifetimeSet) -> Table {
    let mut t = Table::new(&["site", "tau_fs", "flag"]);
    t.rows = lifetimes
        .taus
        .iter()
        .zip(&lifetimes.fallback)
        .enumerate()
        .map(|(k, (&tau, &flag))| vec![(k + 1) as f64, tau, if flag { 1.0 } else { 0.0 }])
        .collect();
    t
}

pub fn spectrum_table(spectrum: &AbsorptionSpectrum) -> Table {
    let mut t = Table::new(&["omega_cm1", "intensity"])
        .meta("shift_cm1", spectrum.shift)
        .meta("normalized", spectrum.normalized);
    t.rows = spectrum
        .omega
        .iter()
        .zip(&spectrum.intensity)
        .map(|(&w, &v)| vec![w, v])
        .collect();
    t
}

pub fn read_spectrum(table: &Table) -> Result<AbsorptionSpectrum> {
    table.expect_header(&["omega_cm1", "intensity"])?;
    let omega = table.column(0);
    uniform_step(&omega)?;
    Ok(AbsorptionSpectrum {
        omega,
        intensity: table.column(1),
        shift: table.get("shift_cm1").and_then(|s| s.parse().ok()).unwrap_or(0.0),
        normalized: table.get("normalized") == Some("true"),
        imaginary_residue: 0.0,
    })
}

/// Square matrix, one row per line, no header; `#` starts a comment.
pub fn read_hamiltonian(input: impl Read) -> Result<SystemHamiltonian> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: k + 1,
                    message: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse {
            line: 0,
            message: format!("Hamiltonian must be square, found {n} rows"),
        });
    }
    SystemHamiltonian::new(DMatrix::from_fn(n, n, |a, b| rows[a][b]))
}

pub fn hamiltonian_text(h: &SystemHamiltonian) -> String {
    let m = h.matrix();
    let mut out = String::new();
    for a in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|b| format!("{:?}", m[(a, b)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Dipoles as a table with header "x,y,z", one site per row.
pub fn read_dipoles(table: &Table) -> Result<DipoleSet> {
    table.expect_header(&["x", "y", "z"])?;
    DipoleSet::new(table.rows.iter().map(|r| [r[0], r[1], r[2]]).collect())
}

pub fn dipoles_table(d: &DipoleSet) -> Table {
    let mut t = Table::new(&["x", "y", "z"]);
    t.rows = d.vectors().iter().map(|v| v.to_vec()).collect();
    t
}
