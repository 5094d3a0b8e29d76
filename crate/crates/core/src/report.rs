//! Rank tables, per-quantity reports and evolution traces on disk.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    chi_square_uniformity, DiagnosticsError, EvolutionPoint, NullCalibrator, RankSet,
};
use crate::engine::RankRow;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Summary of one quantity's rank set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub quantity: String,
    #[serde(rename = "S")]
    pub sims: usize,
    #[serde(rename = "M")]
    pub max_rank: u32,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub log_ratio: f64,
    pub chi2_p: f64,
    pub pass_5pct: bool,
}

/// Default number of χ² cells: `min(M+1, 20)`.
pub fn default_bins(max_rank: u32) -> usize {
    (max_rank as usize + 1).min(20)
}

pub fn report_entry(
    quantity: &str,
    ranks: &RankSet,
    calibrator: &NullCalibrator,
) -> Result<ReportEntry, ReportError> {
    let g = calibrator.assess(ranks)?;
    let chi = chi_square_uniformity(ranks, default_bins(ranks.max_rank()))?;
    Ok(ReportEntry {
        quantity: quantity.to_string(),
        sims: ranks.len(),
        max_rank: ranks.max_rank(),
        gamma: g.gamma,
        gamma_bar: g.gamma_bar,
        log_ratio: g.log_ratio,
        chi2_p: chi.p_value,
        pass_5pct: g.passes(),
    })
}

pub fn write_rank_csv<W: Write>(rows: &[RankRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["sim_index", "quantity", "rank", "max_rank", "n_less", "n_equals"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rank_csv<R: Read>(input: R) -> Result<Vec<RankRow>, ReportError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<RankRow>, _>>()
        .map_err(ReportError::from)
}

pub fn write_evolution_csv<W: Write>(points: &[EvolutionPoint], out: W) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    if points.is_empty() {
        w.write_record(["n_sims", "quantity", "log_ratio"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_evolution_csv<R: Read>(input: R) -> Result<Vec<EvolutionPoint>, ReportError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<EvolutionPoint>, _>>()
        .map_err(ReportError::from)
}

pub fn write_report_json<W: Write>(entries: &[ReportEntry], mut out: W) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut out, entries)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_report_json<R: Read>(input: R) -> Result<Vec<ReportEntry>, ReportError> {
    Ok(serde_json::from_reader(input)?)
}

/// Rebuilds the rank set of `quantity` from rank-table rows.
pub fn rank_set_from_rows(rows: &[RankRow], quantity: &str) -> Result<RankSet, DiagnosticsError> {
    let mut selected: Vec<&RankRow> = rows.iter().filter(|r| r.quantity == quantity).collect();
    selected.sort_by_key(|r| r.sim_index);
    let max_rank = selected.first().map(|r| r.max_rank).unwrap_or(0);
    RankSet::new(selected.iter().map(|r| r.rank).collect(), max_rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<RankRow> {
        vec![
            RankRow { sim_index: 0, quantity: "mu[1]".into(), rank: 3, max_rank: 5, n_less: 3, n_equals: 0 },
            RankRow { sim_index: 1, quantity: "mu[1]".into(), rank: 1, max_rank: 5, n_less: 0, n_equals: 2 },
        ]
    }

    #[test]
    fn rank_csv_round_trip() {
        let mut buf = Vec::new();
        write_rank_csv(&rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sim_index,quantity,rank,max_rank,n_less,n_equals\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_rank_csv(buf.as_slice()).unwrap(), rows());
    }

    #[test]
    fn empty_tables_keep_header() {
        let mut buf = Vec::new();
        write_rank_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "sim_index,quantity,rank,max_rank,n_less,n_equals\n");
    }

    #[test]
    fn report_json_uses_published_keys() {
        let entry = ReportEntry {
            quantity: "sum".into(),
            sims: 10,
            max_rank: 4,
            gamma: 0.5,
            gamma_bar: 0.1,
            log_ratio: 5f64.ln(),
            chi2_p: 0.3,
            pass_5pct: true,
        };
        let mut buf = Vec::new();
        write_report_json(std::slice::from_ref(&entry), &mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let keys: Vec<&String> = value[0].as_object().unwrap().keys().collect();
        for k in ["quantity", "S", "M", "gamma", "gamma_bar", "log_ratio", "chi2_p", "pass_5pct"] {
            assert!(keys.iter().any(|x| x.as_str() == k), "missing {k}");
        }
        assert_eq!(read_report_json(buf.as_slice()).unwrap(), vec![entry]);
    }

    #[test]
    fn evolution_round_trip() {
        let pts = vec![EvolutionPoint { n_sims: 10, quantity: "q".into(), log_ratio: -0.25 }];
        let mut buf = Vec::new();
        write_evolution_csv(&pts, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("n_sims,quantity,log_ratio\n"));
        assert_eq!(read_evolution_csv(buf.as_slice()).unwrap(), pts);
    }

    #[test]
    fn rows_to_rank_set() {
        let set = rank_set_from_rows(&rows(), "mu[1]").unwrap();
        assert_eq!(set.ranks(), &[3, 1]);
        assert_eq!(set.max_rank(), 5);
    }
}
