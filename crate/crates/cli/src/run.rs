use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use optomech_core::covariance::{CovarianceIntegrator, CovarianceState, CovarianceTrajectory};
use optomech_core::entanglement::{entanglement_timeseries, write_entanglement_csv, EntanglementReport};
use optomech_core::meanfield::{integrate_meanfield, MeanFieldTrajectory};
use optomech_core::perturbative::{expand, FourierExpansion, DEFAULT_J_MAX, DEFAULT_N_MAX};
use optomech_core::MeanFieldState;
use serde::Serialize;

use crate::config::{Column, Output, Reduce, ScenarioSpec};
use crate::error::{HarnessError, Result};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Everything computed for one scenario, kept in memory.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub spec: ScenarioSpec,
    pub dt: f64,
    pub t_end: f64,
    pub meanfield: MeanFieldTrajectory,
    pub expansion: Option<FourierExpansion>,
    /// Sampled every `spec.output_stride` steps.
    pub covariance: Option<CovarianceTrajectory>,
    pub entanglement: Option<Vec<EntanglementReport>>,
}

/// Runs the simulation described by `spec` without touching the filesystem.
pub fn execute(spec: &ScenarioSpec) -> Result<ScenarioOutput> {
    spec.validate()?;
    let ctx = |source| HarnessError::Run { scenario: spec.name.clone(), source };
    let dt = spec.dt_value()?;
    let t_end = spec.t_end_value()?;
    let params = spec.params;
    let meanfield = integrate_meanfield(&params, MeanFieldState::default(), t_end, dt).map_err(ctx)?;

    let expansion = if spec.outputs.contains(&Output::Perturbative) {
        Some(expand(&params, DEFAULT_N_MAX, DEFAULT_J_MAX, spec.variant).map_err(ctx)?)
    } else {
        None
    };

    let covariance = if spec.needs_covariance() {
        let integrator = CovarianceIntegrator::new(params).with_stride(spec.output_stride);
        Some(integrator.run(CovarianceState::thermal(&params), &meanfield, t_end).map_err(ctx)?)
    } else {
        None
    };

    let entanglement = match (&covariance, spec.outputs.contains(&Output::Entanglement)) {
        (Some(cov), true) => Some(entanglement_timeseries(&cov.states, &params, spec.qd_frame).map_err(ctx)?),
        _ => None,
    };

    Ok(ScenarioOutput { spec: spec.clone(), dt, t_end, meanfield, expansion, covariance, entanglement })
}

impl ScenarioOutput {
    /// `(t, value)` pairs of a column at the output stride, if it was computed.
    pub fn series(&self, column: Column) -> Option<Vec<(f64, f64)>> {
        match column.source() {
            Output::Meanfield => {
                let pick = |s: &MeanFieldState| match column {
                    Column::Q => s.q,
                    Column::P => s.p,
                    Column::ReA => s.a.re,
                    Column::ImA => s.a.im,
                    Column::AbsA => s.a.norm(),
                    Column::ReSigma => s.sigma.re,
                    _ => s.sigma.im,
                };
                Some(
                    self.meanfield
                        .times
                        .iter()
                        .zip(&self.meanfield.states)
                        .step_by(self.spec.output_stride)
                        .map(|(t, s)| (*t, pick(s)))
                        .collect(),
                )
            }
            Output::Fluctuations => self.fluctuation_series(column),
            Output::Entanglement => {
                let reports = self.entanglement.as_ref()?;
                Some(
                    reports
                        .iter()
                        .map(|r| {
                            let v = match column {
                                Column::MirrorQd => r.mirror_qd,
                                Column::CavityQd => r.cavity_qd,
                                _ => r.cavity_mirror,
                            };
                            (r.t, v)
                        })
                        .collect(),
                )
            }
            Output::Perturbative => None,
        }
    }

    fn fluctuation_series(&self, column: Column) -> Option<Vec<(f64, f64)>> {
        use optomech_core::covariance::{fluctuation_energies, phonon_number};
        let cov = self.covariance.as_ref()?;
        Some(
            cov.states
                .iter()
                .map(|s| {
                    let e = fluctuation_energies(s);
                    let v = match column {
                        Column::MirrorEnergy => e.mirror,
                        Column::CavityEnergy => e.cavity,
                        Column::ExcitonEnergy => e.exciton,
                        _ => phonon_number(s),
                    };
                    (s.t, v)
                })
                .collect(),
        )
    }

    /// Applies a summary statistic to a column.
    pub fn reduce(&self, column: Column, reduce: Reduce) -> Option<f64> {
        let series = self.series(column)?;
        reduce_series(&series, reduce, self.spec.tau(), self.dt)
    }

    /// Writes the requested CSV files and `run.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
        let mut files = Vec::new();
        let stride = self.spec.output_stride;
        if self.spec.outputs.contains(&Output::Meanfield) {
            files.push(write_file(dir, "meanfield.csv", |w| self.meanfield.write_csv(w, stride))?);
        }
        if let Some(exp) = &self.expansion {
            files.push(write_file(dir, "perturbative_coefficients.csv", |w| exp.write_csv(w))?);
            let mut rows = Vec::new();
            for &t in self.meanfield.times.iter().step_by(stride) {
                let s = exp.reconstruct(self.spec.params.g_om, t).map_err(|source| HarnessError::Run {
                    scenario: self.spec.name.clone(),
                    source,
                })?;
                rows.push((t, s));
            }
            files.push(write_file(dir, "perturbative_reconstruction.csv", |w| {
                writeln!(w, "t,q,p,re_a,im_a,re_sigma,im_sigma")?;
                for (t, s) in &rows {
                    writeln!(w, "{},{},{},{},{},{},{}", t, s.q, s.p, s.a.re, s.a.im, s.sigma.re, s.sigma.im)?;
                }
                Ok(())
            })?);
        }
        if let Some(cov) = &self.covariance {
            if self.spec.outputs.contains(&Output::Fluctuations) {
                files.push(write_file(dir, "covariance.csv", |w| cov.write_csv(w))?);
                files.push(write_file(dir, "energies.csv", |w| cov.write_energies_csv(w))?);
            }
        }
        if let Some(reports) = &self.entanglement {
            files.push(write_file(dir, "entanglement.csv", |w| write_entanglement_csv(reports, w))?);
        }
        let names: Vec<String> = files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
        let record = RunRecord {
            code_version: CODE_VERSION,
            scenario: &self.spec,
            resolved: Resolved { tau: self.spec.tau(), dt: self.dt, t_end: self.t_end, steps: self.meanfield.len() - 1 },
            files: names,
        };
        files.push(write_json(dir, "run.json", &record)?);
        Ok(files)
    }
}

pub(crate) fn reduce_series(series: &[(f64, f64)], reduce: Reduce, tau: f64, dt: f64) -> Option<f64> {
    match reduce {
        Reduce::Max => series.iter().map(|(_, v)| *v).reduce(f64::max),
        Reduce::MeanLastFivePeriods => {
            let t_end = series.last()?.0;
            let start = t_end - 5.0 * tau + 0.5 * dt;
            let tail: Vec<f64> = series.iter().filter(|(t, _)| *t > start).map(|(_, v)| *v).collect();
            if tail.is_empty() {
                None
            } else {
                Some(tail.iter().sum::<f64>() / tail.len() as f64)
            }
        }
    }
}

#[derive(Serialize)]
struct Resolved {
    tau: f64,
    dt: f64,
    t_end: f64,
    steps: usize,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    code_version: &'static str,
    scenario: &'a ScenarioSpec,
    resolved: Resolved,
    files: Vec<String>,
}

pub(crate) fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(HarnessError::io(&path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(HarnessError::io(&path))?;
    Ok(path)
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

/// Runs a scenario and writes its files under `out_root/<name>`.
/// Writes into the manifest's `output_dir` when set, else `out_root/<name>`.
pub fn run_scenario(spec: &ScenarioSpec, out_root: &Path) -> Result<Vec<PathBuf>> {
    let output = execute(spec)?;
    let dir = spec.output_dir.clone().unwrap_or_else(|| out_root.join(&spec.name));
    output.write(&dir)
}
