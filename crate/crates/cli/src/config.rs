//! Experiment configuration files (TOML) and `key=value` overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use convoga_core::simulator::{Experiment, Phase, RecordSchedule, StreamSpec};
use convoga_core::{
    GridPolicy, Interval, KernelSchedule, LearnerSpec, ProblemConstants, StepSchedule,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    ConvOga,
    #[default]
    VConvOga,
    Erm,
    DiscreteErm,
}

/// A seed count (expanded from `seed_base`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Count(100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub mu: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_fd_triples")]
    pub fd_triples: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_mc_reserves")]
    pub mc_reserves: usize,
    #[serde(default = "default_mc_sigma")]
    pub mc_sigma: f64,
    #[serde(default = "default_sign_grid")]
    pub sign_grid: usize,
}

fn default_sigmas() -> Vec<f64> {
    vec![1.0, 0.3, 0.1, 0.03]
}
fn default_fd_triples() -> usize {
    1000
}
fn default_mc_samples() -> usize {
    1_000_000
}
fn default_mc_reserves() -> usize {
    10
}
fn default_mc_sigma() -> f64 {
    0.1
}
fn default_sign_grid() -> usize {
    10_000
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            sigmas: default_sigmas(),
            fd_triples: default_fd_triples(),
            mc_samples: default_mc_samples(),
            mc_reserves: default_mc_reserves(),
            mc_sigma: default_mc_sigma(),
            sign_grid: default_sign_grid(),
        }
    }
}

/// Everything a run needs. Absent optional fields take learner-specific
/// defaults in [`ExperimentConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub learner: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Interval>,
    /// Fixed cell count for discrete ERM; absent means doubling refinement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_cells: Option<usize>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub seed_base: u64,
    /// Absent means dense up to 10³ then log-spaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u64>,
    /// Log-log slope window `[t_lo, t_hi]` for the summary line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_window: Option<[f64; 2]>,
    /// Lets `run-tracking` use a narrowing kernel.
    #[serde(default)]
    pub allow_decaying_kernel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
    #[serde(default)]
    pub verify: VerifySettings,
    pub phase: Vec<Phase>,
}

impl ExperimentConfig {
    /// Reads `path`, applies `overrides` in order, then deserialises.
    pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, overrides).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str, overrides: &[String]) -> anyhow::Result<Self> {
        let mut table: toml::Table = toml::from_str(text)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Ok(table.try_into()?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Copy with every learner default written out.
    pub fn resolved(&self) -> anyhow::Result<Self> {
        let mut c = self.clone();
        match c.learner {
            LearnerKind::VConvOga => {
                c.step.get_or_insert(StepSchedule { nu: 1.0, alpha: 1.0 });
                c.kernel.get_or_insert(KernelSchedule { sigma0: 1.0, alpha_sigma: 0.5 });
            }
            LearnerKind::ConvOga => {
                c.step.get_or_insert(StepSchedule { nu: 0.01, alpha: 0.0 });
                c.kernel.get_or_insert(KernelSchedule { sigma0: 0.05, alpha_sigma: 0.0 });
            }
            LearnerKind::Erm | LearnerKind::DiscreteErm => {}
        }
        if c.projection.is_none() {
            let top = self.stream()?.common_support_max();
            c.projection = Some(Interval::new(0.0, top)?);
        }
        Ok(c)
    }

    pub fn stream(&self) -> anyhow::Result<StreamSpec> {
        let mu = self.constants.map_or(0.0, |c| c.mu);
        Ok(StreamSpec::new(self.phase.clone(), mu)?)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Seeds::Count(n) => (self.seed_base..self.seed_base + n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }

    pub fn learner_spec(&self) -> anyhow::Result<LearnerSpec> {
        let need = |what: &str| anyhow!("learner {:?} needs a [{what}] section", self.learner);
        Ok(match self.learner {
            LearnerKind::ConvOga => {
                let kernel = self.kernel.ok_or_else(|| need("kernel"))?;
                if kernel.is_decaying() {
                    bail!("conv_oga uses a fixed kernel; set kernel.alpha_sigma = 0 or use v_conv_oga");
                }
                LearnerSpec::ConvOga { kernel, step: self.step.ok_or_else(|| need("step"))? }
            }
            LearnerKind::VConvOga => LearnerSpec::VConvOga {
                kernel: self.kernel.ok_or_else(|| need("kernel"))?,
                step: self.step.ok_or_else(|| need("step"))?,
            },
            LearnerKind::Erm => LearnerSpec::Erm,
            LearnerKind::DiscreteErm => LearnerSpec::DiscreteErm {
                grid: self.grid_cells.map_or(GridPolicy::Doubling, GridPolicy::Fixed),
            },
        })
    }

    /// Builds the experiment from a resolved config. Returned strings are
    /// non-fatal warnings.
    pub fn experiment(&self) -> anyhow::Result<(Experiment, Vec<String>)> {
        let stream = self.stream()?;
        let projection = self.projection.ok_or_else(|| anyhow!("config is not resolved"))?;
        let mut warnings = Vec::new();
        if let Some(k) = self.constants {
            for p in stream.phases() {
                ProblemConstants { mu: k.mu, c: k.c, lo: projection.lo(), hi: projection.hi() }
                    .validate(&p.distribution)?;
            }
            if let Some(step) = self.step {
                warnings.extend(step.rate_condition_warning(k.mu, k.c));
            }
        }
        let exp = Experiment {
            stream,
            learner: self.learner_spec()?,
            projection,
            r0: self.r0,
            seeds: self.seed_list(),
            record: self.record_stride.map_or(RecordSchedule::Auto, RecordSchedule::Stride),
        };
        exp.validate()?;
        Ok((exp, warnings))
    }
}

/// Applies `a.b.c=value` to a TOML table. The value is parsed as TOML and
/// falls back to a bare string. Arrays of tables cannot be reached.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> anyhow::Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not of the form key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override {assignment:?} has an empty key");
    }
    let value = parse_value(raw.trim());
    let (last, parents) = keys.split_last().expect("split yields at least one key");

    let mut cursor = table;
    for key in parents {
        let entry = cursor.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override {assignment:?}: {key} is not a table"),
        };
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
