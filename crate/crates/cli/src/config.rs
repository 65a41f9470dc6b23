//! Scenario and sweep manifests.
//!
//! A manifest is a TOML document with a `[params]` table holding every
//! system parameter, a time grid, the requested outputs and, for sweeps, a
//! `[sweep]` table naming the swept parameter.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use optomech_core::entanglement::QdFrame;
use optomech_core::meanfield::samples_per_period;
use optomech_core::model::PARAM_KEYS;
use optomech_core::perturbative::RecursionVariant;
use optomech_core::{Error as CoreError, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_T_END: TimeSpec = TimeSpec::Periods(70.0);
pub const DEFAULT_DT: TimeSpec = TimeSpec::PeriodFraction(2000.0);
pub const DEFAULT_OUTPUT_STRIDE: usize = 20;

/// A duration either in absolute units or relative to the drive period `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeSpec {
    Absolute(f64),
    /// `n tau`
    Periods(f64),
    /// `tau / n`
    PeriodFraction(f64),
}

impl TimeSpec {
    pub fn resolve(self, tau: f64) -> std::result::Result<f64, String> {
        let needs_period = !matches!(self, TimeSpec::Absolute(_));
        if needs_period && !(tau.is_finite() && tau > 0.0) {
            return Err(format!("{self} is relative to the drive period, but the drive frequency is zero"));
        }
        Ok(match self {
            TimeSpec::Absolute(t) => t,
            TimeSpec::Periods(n) => n * tau,
            TimeSpec::PeriodFraction(n) => tau / n,
        })
    }
}

impl FromStr for TimeSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let text = s.trim();
        let number = |x: &str| -> std::result::Result<f64, String> {
            let v: f64 = x.trim().parse().map_err(|_| format!("cannot read time {s:?}"))?;
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(format!("time {s:?} must be positive and finite"))
            }
        };
        if let Some(rest) = text.strip_prefix("tau") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(TimeSpec::Periods(1.0));
            }
            let divisor = rest.strip_prefix('/').ok_or_else(|| format!("cannot read time {s:?}"))?;
            return number(divisor).map(TimeSpec::PeriodFraction);
        }
        if let Some(count) = text.strip_suffix("tau") {
            let count = count.trim().trim_end_matches('*');
            return number(count).map(TimeSpec::Periods);
        }
        number(text).map(TimeSpec::Absolute)
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Absolute(t) => write!(f, "{t}"),
            TimeSpec::Periods(n) => write!(f, "{n}tau"),
            TimeSpec::PeriodFraction(n) => write!(f, "tau/{n}"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTime {
    Number(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for TimeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawTime::deserialize(d)? {
            RawTime::Number(v) if v.is_finite() && v > 0.0 => Ok(TimeSpec::Absolute(v)),
            RawTime::Number(v) => Err(serde::de::Error::custom(format!("time {v} must be positive and finite"))),
            RawTime::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for TimeSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Products a scenario run can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Meanfield,
    Perturbative,
    Fluctuations,
    Entanglement,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Output::Meanfield => "meanfield",
            Output::Perturbative => "perturbative",
            Output::Fluctuations => "fluctuations",
            Output::Entanglement => "entanglement",
        }
    }
}

/// A time series a sweep can reduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Q,
    P,
    ReA,
    ImA,
    AbsA,
    ReSigma,
    ImSigma,
    MirrorEnergy,
    CavityEnergy,
    ExcitonEnergy,
    Phonons,
    MirrorQd,
    CavityQd,
    CavityMirror,
}

impl Column {
    pub const ALL: [Column; 14] = [
        Column::Q,
        Column::P,
        Column::ReA,
        Column::ImA,
        Column::AbsA,
        Column::ReSigma,
        Column::ImSigma,
        Column::MirrorEnergy,
        Column::CavityEnergy,
        Column::ExcitonEnergy,
        Column::Phonons,
        Column::MirrorQd,
        Column::CavityQd,
        Column::CavityMirror,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Q => "q",
            Column::P => "p",
            Column::ReA => "re_a",
            Column::ImA => "im_a",
            Column::AbsA => "abs_a",
            Column::ReSigma => "re_sigma",
            Column::ImSigma => "im_sigma",
            Column::MirrorEnergy => "mirror_energy",
            Column::CavityEnergy => "cavity_energy",
            Column::ExcitonEnergy => "exciton_energy",
            Column::Phonons => "phonons",
            Column::MirrorQd => "E_md",
            Column::CavityQd => "E_cd",
            Column::CavityMirror => "E_cm",
        }
    }

    /// The output that has to be requested for this column to exist.
    pub fn source(self) -> Output {
        match self {
            Column::Q | Column::P | Column::ReA | Column::ImA | Column::AbsA | Column::ReSigma | Column::ImSigma => {
                Output::Meanfield
            }
            Column::MirrorEnergy | Column::CavityEnergy | Column::ExcitonEnergy | Column::Phonons => Output::Fluctuations,
            Column::MirrorQd | Column::CavityQd | Column::CavityMirror => Output::Entanglement,
        }
    }
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Column::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let known: Vec<_> = Column::ALL.iter().map(|c| c.name()).collect();
            format!("unknown column {s:?} (known: {})", known.join(", "))
        })
    }
}

/// Summary statistic applied to each swept run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduce {
    #[serde(rename = "max")]
    Max,
    #[serde(rename = "mean-last-5")]
    MeanLastFivePeriods,
}

/// One fully validated simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub provenance: String,
    pub notes: Vec<String>,
    pub params: SystemParams,
    pub t_end: TimeSpec,
    pub dt: TimeSpec,
    pub outputs: BTreeSet<Output>,
    pub output_stride: usize,
    #[serde(serialize_with = "frame_name")]
    pub qd_frame: QdFrame,
    #[serde(serialize_with = "variant_name")]
    pub variant: RecursionVariant,
    pub output_dir: Option<PathBuf>,
}

fn frame_name<S: serde::Serializer>(f: &QdFrame, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(f.name())
}

fn variant_name<S: serde::Serializer>(v: &RecursionVariant, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(v.name())
}

impl ScenarioSpec {
    pub fn tau(&self) -> f64 {
        self.params.period()
    }

    pub fn dt_value(&self) -> Result<f64> {
        self.dt.resolve(self.tau()).map_err(|message| HarnessError::Parse { origin: self.name.clone(), message })
    }

    pub fn t_end_value(&self) -> Result<f64> {
        self.t_end.resolve(self.tau()).map_err(|message| HarnessError::Parse { origin: self.name.clone(), message })
    }

    pub fn needs_covariance(&self) -> bool {
        self.outputs.contains(&Output::Fluctuations) || self.outputs.contains(&Output::Entanglement)
    }

    /// Checks the parameters and that the step divides the drive period.
    pub fn validate(&self) -> Result<()> {
        let invalid = |source: CoreError| HarnessError::Invalid { origin: self.name.clone(), source };
        self.params.validate().map_err(|e| invalid(e.into()))?;
        let dt = self.dt_value()?;
        if self.params.drive_freq > 0.0 {
            samples_per_period(self.tau(), dt).map_err(invalid)?;
        }
        let t_end = self.t_end_value()?;
        if t_end < dt {
            return Err(HarnessError::Parse {
                origin: self.name.clone(),
                message: format!("t_end = {t_end} is shorter than dt = {dt}"),
            });
        }
        if self.output_stride == 0 {
            return Err(HarnessError::Parse { origin: self.name.clone(), message: "output_stride must be at least 1".into() });
        }
        Ok(())
    }

    /// Copy with one parameter changed; `linked` keys receive the same value.
    pub fn with_param(&self, key: &str, linked: &[String], value: f64) -> Self {
        let mut next = self.clone();
        next.params.set(key, value);
        for k in linked {
            next.params.set(k, value);
        }
        next
    }
}

/// A secondary axis over which a whole sweep is repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesAxis {
    pub axis: String,
    #[serde(default)]
    pub linked: Vec<String>,
    pub values: Vec<f64>,
}

/// A family of runs over one parameter, each reduced to a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioSpec,
    pub axis: String,
    pub linked: Vec<String>,
    pub values: Vec<f64>,
    pub series: Option<SeriesAxis>,
    pub reduce: Reduce,
    pub columns: Vec<Column>,
}

impl SweepSpec {
    /// Parameter sets in output order: series value outermost, then axis value.
    pub fn points(&self) -> Vec<(Option<f64>, f64, ScenarioSpec)> {
        let series: Vec<Option<f64>> = match &self.series {
            Some(s) => s.values.iter().map(|v| Some(*v)).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for s in series {
            let base = match (&self.series, s) {
                (Some(axis), Some(v)) => self.base.with_param(&axis.axis, &axis.linked, v),
                _ => self.base.clone(),
            };
            for &v in &self.values {
                let mut spec = base.with_param(&self.axis, &self.linked, v);
                spec.name = match s {
                    Some(sv) => format!("{}[{}={sv},{}={v}]", self.base.name, self.series.as_ref().unwrap().axis, self.axis),
                    None => format!("{}[{}={v}]", self.base.name, self.axis),
                };
                out.push((s, v, spec));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let fail = |message: String| HarnessError::Sweep { origin: self.base.name.clone(), message };
        let check_axis = |axis: &str, linked: &[String], values: &[f64]| -> Result<()> {
            for key in std::iter::once(axis).chain(linked.iter().map(String::as_str)) {
                if !PARAM_KEYS.contains(&key) {
                    return Err(fail(format!("axis {key:?} is not a parameter")));
                }
            }
            if values.is_empty() {
                return Err(fail(format!("axis {axis:?} has no values")));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(fail(format!("axis {axis:?} has non-finite value {v}")));
            }
            Ok(())
        };
        check_axis(&self.axis, &self.linked, &self.values)?;
        if let Some(s) = &self.series {
            check_axis(&s.axis, &s.linked, &s.values)?;
        }
        if self.columns.is_empty() {
            return Err(fail("no columns to reduce".into()));
        }
        for c in &self.columns {
            if !self.base.outputs.contains(&c.source()) {
                return Err(HarnessError::UnavailableColumn {
                    origin: self.base.name.clone(),
                    column: c.name().into(),
                    needs: c.source().name(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Scenario(ScenarioSpec),
    Sweep(SweepSpec),
}

impl Config {
    pub fn name(&self) -> &str {
        match self {
            Config::Scenario(s) => &s.name,
            Config::Sweep(s) => &s.base.name,
        }
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        match self {
            Config::Scenario(s) => s,
            Config::Sweep(s) => &s.base,
        }
    }

    pub fn scenario_mut(&mut self) -> &mut ScenarioSpec {
        match self {
            Config::Scenario(s) => s,
            Config::Sweep(s) => &mut s.base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Config::Scenario(s) => s.validate(),
            Config::Sweep(s) => {
                s.validate()?;
                s.base.validate()
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    name: String,
    #[serde(default)]
    provenance: String,
    #[serde(default)]
    notes: Vec<String>,
    t_end: Option<TimeSpec>,
    dt: Option<TimeSpec>,
    outputs: Vec<Output>,
    output_stride: Option<usize>,
    qd_frame: Option<String>,
    variant: Option<String>,
    output_dir: Option<PathBuf>,
    params: SystemParams,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    #[serde(default)]
    linked: Vec<String>,
    values: Vec<f64>,
    reduce: Reduce,
    columns: Vec<String>,
    series: Option<SeriesAxis>,
}

/// Parses and validates a manifest. `origin` names it in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<Config> {
    let parse_err = |message: String| HarnessError::Parse { origin: origin.to_string(), message };
    let raw: RawManifest = toml::from_str(text).map_err(|e| parse_err(e.to_string().trim_end().to_string()))?;
    let qd_frame = match raw.qd_frame.as_deref() {
        None => QdFrame::default(),
        Some(name) => QdFrame::from_name(name).ok_or_else(|| parse_err(format!("unknown qd_frame {name:?}")))?,
    };
    let variant = match raw.variant.as_deref() {
        None => RecursionVariant::default(),
        Some(name) => RecursionVariant::from_name(name).ok_or_else(|| parse_err(format!("unknown variant {name:?}")))?,
    };
    let base = ScenarioSpec {
        name: raw.name,
        provenance: raw.provenance,
        notes: raw.notes,
        params: raw.params,
        t_end: raw.t_end.unwrap_or(DEFAULT_T_END),
        dt: raw.dt.unwrap_or(DEFAULT_DT),
        outputs: raw.outputs.into_iter().collect(),
        output_stride: raw.output_stride.unwrap_or(DEFAULT_OUTPUT_STRIDE),
        qd_frame,
        variant,
        output_dir: raw.output_dir,
    };
    let config = match raw.sweep {
        None => Config::Scenario(base),
        Some(sw) => {
            let columns = sw.columns.iter().map(|c| c.parse()).collect::<std::result::Result<Vec<Column>, _>>().map_err(parse_err)?;
            Config::Sweep(SweepSpec {
                base,
                axis: sw.axis,
                linked: sw.linked,
                values: sw.values,
                series: sw.series,
                reduce: sw.reduce,
                columns,
            })
        }
    };
    config.validate()?;
    Ok(config)
}

/// Reads and validates a manifest file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    parse_config(&text, &path.display().to_string())
}
