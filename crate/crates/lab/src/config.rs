//! Experiment configuration files.
//!
//! A config is flat TOML: one `key = value` per line, numbers, strings, booleans and
//! arrays of numbers only. Every key is optional and unknown keys are rejected. The
//! resolved config (defaults filled in) is echoed into the run manifest.

use anyhow::{bail, Context, Result};
use blowup_core::{Params, Variant};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    PdeScan,
    WEvolve,
    ModulateTrack,
    TodaSweep,
    Tables,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::PdeScan => "pde-scan",
            Kind::WEvolve => "w-evolve",
            Kind::ModulateTrack => "modulate-track",
            Kind::TodaSweep => "toda-sweep",
            Kind::Tables => "tables",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Signed,
    Unsigned,
}

impl From<VariantName> for Variant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::Signed => Variant::Signed,
            VariantName::Unsigned => Variant::Unsigned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    OddSine,
    PlateausOpposite,
    GaussianPositive,
    ConstantExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyMode {
    /// No cone runs.
    None,
    /// Cone classification at local maxima of the amplitude curve.
    Maxima,
    /// Cone classification at every sample.
    All,
}

fn params_of(p: f64, variant: VariantName) -> Result<Params> {
    Params::new(p, variant.into()).map_err(|e| anyhow::anyhow!("{e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeScanConfig {
    pub p: f64,
    pub variant: VariantName,
    pub preset: PresetName,
    /// Preset amplitude; zero picks the preset default.
    pub amplitude: f64,
    /// Preset length scale; zero picks the preset default.
    pub width: f64,
    /// Blow-up time of `constant-exact`.
    pub t_blow: f64,
    /// Expected horizon used for the domain margin.
    pub t_bar: f64,
    pub dx: f64,
    pub cfl: f64,
    /// Freeze ceiling; zero picks the automatic one.
    pub ceiling: f64,
    pub freeze_cells: f64,
    pub t_end: f64,
    pub window_min: f64,
    pub window_max: f64,
    pub stride: usize,
    pub tau: f64,
    pub margin: f64,
    pub delta: f64,
    pub cone_intervals: usize,
    pub shoot_ds: f64,
    pub shoot_tol: f64,
    pub classify: ClassifyMode,
    /// Extra points to classify regardless of `classify`.
    pub points: Vec<f64>,
    /// Signed-line tracks at classified `S` points.
    pub tracks: bool,
    /// Half width `R` of the lower-bound window (unsigned variant only).
    pub lower_bound_r: f64,
}

impl Default for PdeScanConfig {
    fn default() -> Self {
        PdeScanConfig {
            p: 3.0,
            variant: VariantName::Signed,
            preset: PresetName::OddSine,
            amplitude: 0.0,
            width: 0.0,
            t_blow: 1.0,
            t_bar: 2.0,
            dx: 0.005,
            cfl: 0.9,
            ceiling: 0.0,
            freeze_cells: 4.0,
            t_end: 6.0,
            window_min: -2.0,
            window_max: 2.0,
            stride: 4,
            tau: 0.1,
            margin: 0.1,
            delta: 0.005,
            cone_intervals: 512,
            shoot_ds: 12.0,
            shoot_tol: 1e-6,
            classify: ClassifyMode::Maxima,
            points: vec![],
            tracks: true,
            lower_bound_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WEvolveConfig {
    pub p: f64,
    pub variant: VariantName,
    /// Number of random initial states.
    pub runs: usize,
    pub s_span: f64,
    /// Cone grid intervals of the coarse and fine runs.
    pub intervals: Vec<usize>,
    pub rtol: f64,
    pub atol: f64,
    pub energy_tol: f64,
    /// Amplitude of the random perturbation of `kappa(d)` relative to `kappa0`.
    pub amplitude: f64,
    pub modes: usize,
}

impl Default for WEvolveConfig {
    fn default() -> Self {
        WEvolveConfig {
            p: 3.0,
            variant: VariantName::Signed,
            runs: 10,
            s_span: 3.0,
            intervals: vec![128, 256],
            rtol: 1e-9,
            atol: 1e-11,
            energy_tol: 1e-6,
            amplitude: 0.2,
            modes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulateTrackConfig {
    pub p: f64,
    /// Soliton counts to plant.
    pub ks: Vec<usize>,
    pub gaps: Vec<f64>,
    pub xi_max: f64,
    pub n: usize,
    /// Random shift of the Newton start, uniform in `[-start_jitter, start_jitter]`.
    pub start_jitter: f64,
    pub tol: f64,
}

impl Default for ModulateTrackConfig {
    fn default() -> Self {
        ModulateTrackConfig {
            p: 3.0,
            ks: vec![2, 3],
            gaps: vec![8.0, 9.0, 10.0, 11.0, 12.0],
            xi_max: 40.0,
            n: 8001,
            start_jitter: 0.05,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TodaSweepConfig {
    pub p: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub s0: f64,
    pub s_end: f64,
    /// Initial gaps; zero picks `(p-1)/2`.
    pub gap: f64,
    pub c1: f64,
    pub outputs_per_decade: usize,
    pub fit_from: f64,
    pub fit_to: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TodaSweepConfig {
    fn default() -> Self {
        TodaSweepConfig {
            p: 3.0,
            k_min: 2,
            k_max: 4,
            s0: 1.0,
            s_end: 1e4,
            gap: 0.0,
            c1: 1.0,
            outputs_per_decade: 40,
            fit_from: 1e3,
            fit_to: 1e4,
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TablesConfig {
    pub p: f64,
    pub gaps: Vec<f64>,
}

impl Default for TablesConfig {
    fn default() -> Self {
        TablesConfig { p: 3.0, gaps: vec![8.0, 10.0, 12.0, 14.0] }
    }
}

/// A resolved configuration of one experiment kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    PdeScan(PdeScanConfig),
    WEvolve(WEvolveConfig),
    ModulateTrack(ModulateTrackConfig),
    TodaSweep(TodaSweepConfig),
    Tables(TablesConfig),
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let table: toml::Table = text.parse().context("config is not valid key-value text")?;
    for (k, v) in &table {
        let flat = match v {
            toml::Value::Table(_) => false,
            toml::Value::Array(a) => a.iter().all(|x| x.is_integer() || x.is_float()),
            _ => true,
        };
        if !flat {
            bail!("key `{k}`: only scalars and arrays of numbers are allowed");
        }
    }
    toml::Value::Table(table).try_into().context("config does not match the schema")
}

impl ExperimentConfig {
    /// Parses `text` (possibly empty) for `kind` and validates it.
    pub fn parse(kind: Kind, text: &str) -> Result<Self> {
        let cfg = match kind {
            Kind::PdeScan => ExperimentConfig::PdeScan(parse(text)?),
            Kind::WEvolve => ExperimentConfig::WEvolve(parse(text)?),
            Kind::ModulateTrack => ExperimentConfig::ModulateTrack(parse(text)?),
            Kind::TodaSweep => ExperimentConfig::TodaSweep(parse(text)?),
            Kind::Tables => ExperimentConfig::Tables(parse(text)?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(kind: Kind, path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        Self::parse(kind, &text)
    }

    pub fn kind(&self) -> Kind {
        match self {
            ExperimentConfig::PdeScan(_) => Kind::PdeScan,
            ExperimentConfig::WEvolve(_) => Kind::WEvolve,
            ExperimentConfig::ModulateTrack(_) => Kind::ModulateTrack,
            ExperimentConfig::TodaSweep(_) => Kind::TodaSweep,
            ExperimentConfig::Tables(_) => Kind::Tables,
        }
    }

    /// The resolved config as key-value text.
    pub fn to_text(&self) -> String {
        let r = match self {
            ExperimentConfig::PdeScan(c) => toml::to_string(c),
            ExperimentConfig::WEvolve(c) => toml::to_string(c),
            ExperimentConfig::ModulateTrack(c) => toml::to_string(c),
            ExperimentConfig::TodaSweep(c) => toml::to_string(c),
            ExperimentConfig::Tables(c) => toml::to_string(c),
        };
        r.expect("flat configs serialise")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let r = match self {
            ExperimentConfig::PdeScan(c) => serde_json::to_value(c),
            ExperimentConfig::WEvolve(c) => serde_json::to_value(c),
            ExperimentConfig::ModulateTrack(c) => serde_json::to_value(c),
            ExperimentConfig::TodaSweep(c) => serde_json::to_value(c),
            ExperimentConfig::Tables(c) => serde_json::to_value(c),
        };
        r.expect("configs serialise")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::PdeScan(c) => {
                params_of(c.p, c.variant)?;
                if !(c.dx > 0.0 && c.dx < 0.1) {
                    bail!("dx must be in (0, 0.1), got {}", c.dx);
                }
                if !(c.cfl > 0.0 && c.cfl <= 1.0) {
                    bail!("cfl must be in (0, 1], got {}", c.cfl);
                }
                if !(c.window_max > c.window_min) {
                    bail!("empty window [{}, {}]", c.window_min, c.window_max);
                }
                if c.stride == 0 || c.cone_intervals < 16 || c.cone_intervals % 2 != 0 {
                    bail!("stride must be positive and cone_intervals even and >= 16");
                }
                if !(c.t_bar > 0.0 && c.t_end > 0.0 && c.t_blow > 0.0 && c.delta > 0.0) {
                    bail!("t_bar, t_end, t_blow and delta must be positive");
                }
            }
            ExperimentConfig::WEvolve(c) => {
                params_of(c.p, c.variant)?;
                if c.runs == 0 || c.intervals.is_empty() || c.intervals.iter().any(|&n| n < 16 || n % 2 != 0) {
                    bail!("need runs >= 1 and even cone intervals >= 16");
                }
                if !(c.s_span > 0.0) {
                    bail!("s_span must be positive");
                }
            }
            ExperimentConfig::ModulateTrack(c) => {
                params_of(c.p, VariantName::Signed)?;
                if c.ks.is_empty() || c.ks.contains(&0) || c.gaps.iter().any(|&g| !(g > 0.5)) {
                    bail!("ks must be positive and gaps above 0.5");
                }
                if c.n < 101 || c.n % 2 == 0 {
                    bail!("n must be odd and at least 101");
                }
            }
            ExperimentConfig::TodaSweep(c) => {
                params_of(c.p, VariantName::Signed)?;
                if c.k_min < 1 || c.k_max < c.k_min {
                    bail!("need 1 <= k_min <= k_max");
                }
                if !(c.s0 > 0.0 && c.s_end > c.s0 && c.fit_from >= c.s0 && c.fit_to <= c.s_end && c.fit_to > c.fit_from) {
                    bail!("need 0 < s0 <= fit_from < fit_to <= s_end");
                }
            }
            ExperimentConfig::Tables(c) => {
                params_of(c.p, VariantName::Signed)?;
                if c.gaps.is_empty() || c.gaps.iter().any(|&g| !(g > 0.0)) {
                    bail!("gaps must be positive");
                }
            }
        }
        Ok(())
    }
}

pub fn params(p: f64, variant: VariantName) -> Result<Params> {
    params_of(p, variant)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = ExperimentConfig::parse(Kind::Tables, "").unwrap();
        assert_eq!(c, ExperimentConfig::Tables(TablesConfig::default()));
    }

    #[test]
    fn typed_keys_and_round_trip() {
        let text = "p = 2.0\nvariant = \"unsigned\"\npreset = \"gaussian-positive\"\ndx = 0.01\nclassify = \"none\"\n";
        let c = ExperimentConfig::parse(Kind::PdeScan, text).unwrap();
        let ExperimentConfig::PdeScan(s) = &c else { panic!() };
        assert_eq!((s.p, s.variant, s.preset, s.dx), (2.0, VariantName::Unsigned, PresetName::GaussianPositive, 0.01));
        assert_eq!(ExperimentConfig::parse(Kind::PdeScan, &c.to_text()).unwrap(), c);
    }

    #[test]
    fn schema_violations_are_rejected() {
        assert!(ExperimentConfig::parse(Kind::Tables, "q = 3").is_err());
        assert!(ExperimentConfig::parse(Kind::Tables, "p = \"three\"").is_err());
        assert!(ExperimentConfig::parse(Kind::Tables, "p = 1.0").is_err());
        assert!(ExperimentConfig::parse(Kind::TodaSweep, "k_min = 3\nk_max = 2").is_err());
        assert!(ExperimentConfig::parse(Kind::PdeScan, "[nested]\na = 1").is_err());
        assert!(ExperimentConfig::parse(Kind::PdeScan, "preset = \"square\"").is_err());
    }
}
