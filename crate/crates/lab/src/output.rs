//! Output directory, CSV tables and the run manifest.

use crate::config::{ExperimentConfig, Kind};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// A directory that experiments write into. File names are plain names; anything
/// that could leave the directory is refused.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let ok = !name.is_empty()
            && name != "."
            && name != ".."
            && !name.contains(['/', '\\'])
            && Path::new(name).components().count() == 1;
        if !ok {
            bail!("output name `{name}` is not a plain file name");
        }
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(self.root.join(name))
    }

    /// Writes serialisable rows as CSV with a header.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.path(name)?;
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("opening {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name)?;
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `manifest.json` listing every file written before it.
    pub fn manifest(&mut self, run: &RunInfo, cfg: &ExperimentConfig) -> Result<()> {
        let m = Manifest {
            experiment: cfg.kind(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: run.seed,
            threads: run.threads,
            config: cfg.to_json(),
            outputs: self.written.clone(),
        };
        let body = serde_json::to_string_pretty(&m)? + "\n";
        self.text("manifest.json", &body)
    }
}

/// Run settings outside the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunInfo {
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Kind,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    /// The full resolved config.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).context("manifest is not valid")
    }

    /// The config recorded in the manifest, validated again.
    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let c = self.config.clone();
        let cfg = match self.experiment {
            Kind::PdeScan => ExperimentConfig::PdeScan(serde_json::from_value(c)?),
            Kind::WEvolve => ExperimentConfig::WEvolve(serde_json::from_value(c)?),
            Kind::ModulateTrack => ExperimentConfig::ModulateTrack(serde_json::from_value(c)?),
            Kind::TodaSweep => ExperimentConfig::TodaSweep(serde_json::from_value(c)?),
            Kind::Tables => ExperimentConfig::Tables(serde_json::from_value(c)?),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_paths_outside() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path()).unwrap();
        for bad in ["../x.csv", "a/b.csv", "..", "", "/etc/passwd", "a\\b"] {
            assert!(out.text(bad, "x").is_err(), "{bad}");
        }
        out.text("ok.txt", "x").unwrap();
        assert_eq!(out.written(), ["ok.txt"]);
    }

    proptest::proptest! {
        #[test]
        fn accepted_names_stay_inside(name in "[a-z./\\\\]{0,8}") {
            let dir = tempfile::tempdir().unwrap();
            let mut out = OutDir::create(dir.path()).unwrap();
            if let Ok(p) = out.path(&name) {
                proptest::prop_assert_eq!(p.parent(), Some(dir.path()));
                proptest::prop_assert!(p.file_name().is_some());
            }
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path()).unwrap();
        let cfg = ExperimentConfig::parse(Kind::TodaSweep, "k_max = 3").unwrap();
        out.csv("a.csv", &[(1.0, 2.0)]).unwrap();
        out.manifest(&RunInfo { seed: 7, threads: 1 }, &cfg).unwrap();
        let m = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m.seed, 7);
        assert_eq!(m.outputs, ["a.csv"]);
        assert_eq!(m.experiment_config().unwrap(), cfg);
    }
}
