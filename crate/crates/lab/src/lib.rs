//! Experiment runner for `blowup-core`.
//!
//! Each experiment kind reads a flat key-value config ([`config`]), runs the
//! numerics, and writes CSV tables plus `manifest.json` into one output directory
//! ([`output`]). Initial data for the direct solver come from named [`presets`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod presets;

use anyhow::Result;
use blowup_core::physical::PointClass;
use config::ExperimentConfig;
use output::{OutDir, RunInfo};

/// Runs one experiment into `out` and returns a short human summary.
pub fn run(cfg: &ExperimentConfig, info: &RunInfo, out: &mut OutDir) -> Result<String> {
    let threads = info.threads;
    let summary = match cfg {
        ExperimentConfig::Tables(c) => {
            let rows = experiments::with_pool(threads, || experiments::tables(c, Some(out)))??;
            format!("{} table rows", rows.len())
        }
        ExperimentConfig::TodaSweep(c) => {
            let runs = experiments::with_pool(threads, || experiments::toda_sweep(c, Some(out)))??;
            runs.iter()
                .map(|r| {
                    let worst = r.fit.deviation.iter().cloned().fold(0.0, f64::max);
                    format!("k={}: a={:?} max deviation {:.3}", r.k, r.fit.a, worst)
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        ExperimentConfig::ModulateTrack(c) => {
            let rows = experiments::with_pool(threads, || experiments::modulate_track(c, info.seed, Some(out)))??;
            let worst = rows.iter().map(|r| r.max_dzeta).fold(0.0, f64::max);
            format!("{} decompositions, max |dzeta| {worst:.2e}", rows.len())
        }
        ExperimentConfig::WEvolve(c) => {
            let runs = experiments::with_pool(threads, || experiments::w_evolve(c, info.seed, Some(out)))??;
            let viol: usize = runs.iter().map(|r| r.report.violations.len()).sum();
            format!("{} runs, {viol} energy increases above tolerance", runs.len())
        }
        ExperimentConfig::PdeScan(c) => {
            let r = experiments::with_pool(threads, || experiments::pde_scan(c, Some(out)))??;
            format!(
                "Levine integral {:.6}; stop {:?} at t={:.4}; {} points: S={} R={} unknown={}",
                r.levine_integral,
                r.stop,
                r.t_final,
                r.curve.points.len(),
                r.count(PointClass::S),
                r.count(PointClass::R),
                r.count(PointClass::Unknown)
            )
        }
    };
    out.manifest(info, cfg)?;
    Ok(summary)
}
