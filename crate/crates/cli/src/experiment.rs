//! Running one configured experiment and writing its outputs.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use sbc_core::diagnostics::{ecdf_band, evolution_trace, EcdfBand, DEFAULT_N_MC, NULL_SEED};
use sbc_core::plot::{default_hist_bins, ecdf_difference_svg, evolution_svg, rank_histogram_svg};
use sbc_core::report::{rank_set_from_rows, report_entry, write_evolution_csv, write_rank_csv, write_report_json, ReportEntry};
use sbc_core::{run_sbc, NullCalibrator, RngStream, SbcConfig, SbcRun};
use sbc_models::bernoulli::{self, BernoulliModel, FamilyPosterior, QuantileFamily};
use sbc_models::gaussian::{self, GaussianPosterior, GaussianVariant, MvnModel};
use sbc_models::simplex::{self, OrderedSimplexVariant, SimplexModel, SimplexPosterior};

use crate::config::{ExperimentConfig, Model};

const BAND_COVERAGE: f64 = 0.95;
const BAND_STREAM: u64 = 0xba0d;

#[derive(Debug)]
pub struct Summary {
    pub entries: Vec<ReportEntry>,
    pub failed_simulations: usize,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass_5pct)
    }
}

fn selected<'a>(config: &'a ExperimentConfig, defaults: &[&'a str]) -> Vec<&'a str> {
    match &config.quantities {
        Some(names) => names.iter().map(String::as_str).collect(),
        None => defaults.to_vec(),
    }
}

pub fn run_experiment(config: &ExperimentConfig, timestamp: Option<&str>) -> Result<Summary> {
    let sbc = SbcConfig::new(config.sims, config.draws, config.seed).with_thin(config.thin);
    match config.model {
        Model::Gaussian => {
            let variant = GaussianVariant::from_name(&config.variant)?;
            let quantities = gaussian::quantities(&selected(config, &gaussian::DEFAULT_QUANTITIES), variant)?;
            let run = run_sbc(&MvnModel::new(config.n)?, &GaussianPosterior::new(variant)?, &quantities, sbc)?;
            emit(&run, config, timestamp)
        }
        Model::Bernoulli => {
            let family = QuantileFamily::from_name(&config.variant)?;
            let defaults: Vec<&str> = bernoulli::AnalyticQuantity::ALL.iter().map(|q| q.name()).collect();
            let quantities = selected(config, &defaults)
                .into_iter()
                .map(bernoulli::quantity)
                .collect::<Result<Vec<_>, _>>()?;
            let run = run_sbc(&BernoulliModel, &FamilyPosterior::new(family), &quantities, sbc)?;
            emit(&run, config, timestamp)
        }
        Model::Simplex => {
            let variant = OrderedSimplexVariant::from_name(&config.variant)?;
            let quantities = selected(config, &simplex::QUANTITIES)
                .into_iter()
                .map(simplex::quantity)
                .collect::<Result<Vec<_>, _>>()?;
            let run = run_sbc(&SimplexModel, &SimplexPosterior::new(variant), &quantities, sbc)?;
            emit(&run, config, timestamp)
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let mut out = create(dir, name)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Writes every output file. Reported values are computed from the same
/// rows that go into `ranks.csv`.
fn emit<D>(run: &SbcRun<D>, config: &ExperimentConfig, timestamp: Option<&str>) -> Result<Summary> {
    let dir = config.out.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let rows = run.rank_rows();
    let mut out = create(dir, "ranks.csv")?;
    write_rank_csv(&rows, &mut out)?;
    out.flush()?;

    let calibrator = NullCalibrator::default();
    let max_rank = run.max_rank();
    let mut bands: HashMap<usize, EcdfBand> = HashMap::new();
    let mut entries = Vec::new();
    let mut evolution = Vec::new();
    for q in &run.quantity_names {
        let ranks = rank_set_from_rows(&rows, q)?;
        if ranks.is_empty() {
            bail!("no simulation produced a rank for `{q}`");
        }
        entries.push(report_entry(q, &ranks, &calibrator)?);
        evolution.extend(evolution_trace(&ranks, q, config.step, &calibrator)?.points);

        let band = match bands.get(&ranks.len()) {
            Some(b) => b,
            None => {
                let stream = RngStream::new(NULL_SEED, BAND_STREAM);
                let b = ecdf_band(ranks.len(), max_rank, BAND_COVERAGE, DEFAULT_N_MC, &stream)?;
                bands.entry(ranks.len()).or_insert(b)
            }
        };
        write_text(dir, &format!("hist_{q}.svg"), &rank_histogram_svg(q, &ranks, band, default_hist_bins(max_rank), timestamp))?;
        write_text(dir, &format!("ecdf_{q}.svg"), &ecdf_difference_svg(q, &ranks, band, timestamp))?;
    }

    let mut out = create(dir, "evolution.csv")?;
    write_evolution_csv(&evolution, &mut out)?;
    out.flush()?;
    write_text(dir, "evolution.svg", &evolution_svg(&evolution, timestamp))?;

    let mut out = create(dir, "report.json")?;
    write_report_json(&entries, &mut out)?;
    out.flush()?;

    Ok(Summary { entries, failed_simulations: run.failures.len() })
}
