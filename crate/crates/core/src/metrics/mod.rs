//! Outcome statistics (success rate, sim-vs-real correlation) and
//! reconstruction quality (point-cloud distances, depth alignment).

mod depth;
mod recon;

pub use depth::{align_depth, DepthAlignment, DepthMap, MIN_VALID_PIXELS, REFINE_ITERATIONS, REFINE_STEP};
pub use recon::{recon_eval, ReconMetrics, DEFAULT_TAU};

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::EpisodeResult;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no results")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two points, got {0}")]
    TooFew(usize),
    #[error("correlation undefined: zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("settings do not match: only in sim [{sim_only}]; only in real [{real_only}]")]
    UnmatchedSettings { sim_only: String, real_only: String },
    #[error("{0}")]
    Input(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fraction of successful episodes.
pub fn success_rate(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooFew(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricsError::ZeroVariance("xs"));
    }
    if syy == 0.0 {
        return Err(MetricsError::ZeroVariance("ys"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Per-episode success flags for one evaluation setting (policy, scene and
/// mesh type).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub setting: String,
    pub successes: Vec<bool>,
}

impl EvalRecord {
    pub fn success_rate(&self) -> Result<f64, MetricsError> {
        if self.successes.is_empty() {
            return Err(MetricsError::Input(format!("setting `{}` has no episodes", self.setting)));
        }
        Ok(self.successes.iter().filter(|&&s| s).count() as f64 / self.successes.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrccRow {
    pub setting: String,
    pub sim_sr: f64,
    pub real_sr: f64,
    pub sim_episodes: usize,
    pub real_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrccReport {
    pub r: f64,
    pub rows: Vec<SrccRow>,
    pub warnings: Vec<String>,
}

/// Pairs per-setting success rates between simulation and the real world
/// and correlates them. Rows come out sorted by setting label.
pub fn srcc_report(sim: &[EvalRecord], real: &[EvalRecord]) -> Result<SrccReport, MetricsError> {
    let index = |recs: &[EvalRecord], side: &str| -> Result<BTreeMap<String, EvalRecord>, MetricsError> {
        let mut map = BTreeMap::new();
        for r in recs {
            if map.insert(r.setting.clone(), r.clone()).is_some() {
                return Err(MetricsError::Input(format!("duplicate setting `{}` in {side} records", r.setting)));
            }
        }
        Ok(map)
    };
    let sim = index(sim, "sim")?;
    let real = index(real, "real")?;
    let sim_only: Vec<&str> = sim.keys().filter(|k| !real.contains_key(*k)).map(String::as_str).collect();
    let real_only: Vec<&str> = real.keys().filter(|k| !sim.contains_key(*k)).map(String::as_str).collect();
    if !sim_only.is_empty() || !real_only.is_empty() {
        return Err(MetricsError::UnmatchedSettings {
            sim_only: sim_only.join(", "),
            real_only: real_only.join(", "),
        });
    }
    let mut rows = Vec::with_capacity(sim.len());
    for (setting, s) in &sim {
        let r = &real[setting];
        rows.push(SrccRow {
            setting: setting.clone(),
            sim_sr: s.success_rate()?,
            real_sr: r.success_rate()?,
            sim_episodes: s.successes.len(),
            real_episodes: r.successes.len(),
        });
    }
    let mut warnings = Vec::new();
    if rows.len() == 2 {
        let w = "only two settings: correlation is trivially +-1".to_string();
        log::warn!("{w}");
        warnings.push(w);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.sim_sr).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.real_sr).collect();
    let r = pearson(&xs, &ys)?;
    Ok(SrccReport { r, rows, warnings })
}

#[derive(Debug, Deserialize)]
struct SettingRow {
    setting: String,
    success: String,
    termination: Option<String>,
}

/// Reads evaluation records from a CSV with at least `setting` and
/// `success` columns (other columns are ignored). Rows with termination
/// `ABORTED` are skipped. Records keep first-appearance order.
pub fn read_eval_records<R: Read>(r: R) -> Result<Vec<EvalRecord>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut records: Vec<EvalRecord> = Vec::new();
    for (i, row) in rdr.deserialize::<SettingRow>().enumerate() {
        let row = row.map_err(|e| MetricsError::Input(format!("row {}: {e}", i + 1)))?;
        if row.termination.as_deref() == Some("ABORTED") {
            continue;
        }
        let success = match row.success.trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(MetricsError::Input(format!("row {}: success must be true/false, got `{other}`", i + 1))),
        };
        match records.iter_mut().find(|r| r.setting == row.setting) {
            Some(rec) => rec.successes.push(success),
            None => records.push(EvalRecord {
                setting: row.setting,
                successes: vec![success],
            }),
        }
    }
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TerminationReason;

    fn result(success: bool) -> EpisodeResult {
        EpisodeResult {
            episode_id: 0,
            success,
            steps: 1,
            distance_to_goal: 0.0,
            termination: TerminationReason::MaxStepsReached,
            reward: 0.0,
        }
    }

    fn record(setting: &str, wins: usize, n: usize) -> EvalRecord {
        EvalRecord {
            setting: setting.into(),
            successes: (0..n).map(|i| i < wins).collect(),
        }
    }

    #[test]
    fn success_rates() {
        let r: Vec<_> = (0..10).map(|i| result(i < 7)).collect();
        assert_eq!(success_rate(&r).unwrap(), 0.7);
        assert_eq!(success_rate(&r[7..]).unwrap(), 0.0);
        assert_eq!(success_rate(&r[..7]).unwrap(), 1.0);
        assert!(success_rate(&[]).is_err());
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&xs, &xs).unwrap(), 1.0);
        let neg: Vec<f64> = xs.iter().map(|x| 3.0 - x).collect();
        assert_eq!(pearson(&xs, &neg).unwrap(), -1.0);
        assert!((pearson(&xs, &[2.0, 1.0, 4.0, 3.0]).unwrap() - 0.6).abs() <= 1e-12);
        assert!(matches!(pearson(&xs, &[1.0; 4]), Err(MetricsError::ZeroVariance("ys"))));
        assert!(pearson(&xs, &xs[..3]).is_err());
        let scaled: Vec<f64> = [2.0, 1.0, 4.0, 3.0].iter().map(|y| 7.0 * y - 2.0).collect();
        assert!((pearson(&xs, &scaled).unwrap() - 0.6).abs() <= 1e-12);
    }

    #[test]
    fn srcc_identity_and_errors() {
        let sim = vec![record("a", 3, 10), record("b", 7, 10), record("c", 5, 10)];
        let rep = srcc_report(&sim, &sim).unwrap();
        assert!((rep.r - 1.0).abs() < 1e-12);
        assert!(rep.warnings.is_empty());

        let two = srcc_report(&sim[..2], &[record("a", 1, 10), record("b", 2, 10)]).unwrap();
        assert!((two.r.abs() - 1.0).abs() < 1e-12);
        assert_eq!(two.warnings.len(), 1);

        let err = srcc_report(&sim, &[record("a", 1, 10), record("z", 1, 10)]).unwrap_err().to_string();
        assert!(err.contains('z') && err.contains("b, c"), "{err}");
    }

    #[test]
    fn srcc_matches_direct_formula() {
        let pairs = [(0.1, 0.0), (0.3, 0.2), (0.5, 0.6), (0.6, 0.4), (0.8, 0.9), (0.9, 0.7)];
        let sim: Vec<_> = pairs.iter().enumerate().map(|(i, p)| record(&format!("s{i}"), (p.0 * 10.0f64).round() as usize, 10)).collect();
        let real: Vec<_> = pairs.iter().enumerate().map(|(i, p)| record(&format!("s{i}"), (p.1 * 10.0f64).round() as usize, 10)).collect();
        let rep = srcc_report(&sim, &real).unwrap();
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        assert!((rep.r - pearson(&xs, &ys).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn eval_csv() {
        let text = "setting,episode_id,success,termination\nA,0,true,TARGET_REACHED\nA,1,false,ABORTED\nB,0,0,MAX_STEPS_REACHED\nA,2,false,MAX_STEPS_REACHED\n";
        let recs = read_eval_records(text.as_bytes()).unwrap();
        assert_eq!(recs, vec![
            EvalRecord { setting: "A".into(), successes: vec![true, false] },
            EvalRecord { setting: "B".into(), successes: vec![false] },
        ]);
        assert!(read_eval_records("setting,success\nA,maybe\n".as_bytes()).is_err());
    }
}
