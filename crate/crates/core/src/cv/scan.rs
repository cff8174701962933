use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::povm::{default_interior_edges, quadrature_pair, TruncationConfig};
use crate::compat::{jm_robustness, lhs_robustness, CompatOptions, Depolarizing, RobustnessResult, SdpRecord};
use crate::compress::{seesaw_n_prep, SeesawOptions};
use crate::error::{Error, Result};
use crate::objects::{sandwich, DensityState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaChoice {
    MaximallyMixed,
    Thermal { beta: f64 },
}

impl SigmaChoice {
    pub fn state(&self, d: usize) -> DensityState {
        match *self {
            SigmaChoice::MaximallyMixed => DensityState::maximally_mixed(d),
            SigmaChoice::Thermal { beta } => DensityState::thermal(d, beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub dims: Vec<usize>,
    /// Finite bin edges; the tails to `±∞` are added automatically.
    pub interior_edges: Vec<f64>,
    pub quadrature_tol: f64,
    pub sigma: SigmaChoice,
    /// Preparation dimensions `n ≥ 2` probed by the see-saw. Empty skips
    /// the see-saw entirely.
    #[serde(default)]
    pub seesaw_ns: Vec<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_restarts() -> usize {
    4
}

fn default_cap() -> usize {
    crate::compat::DEFAULT_STRATEGY_CAP
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            dims: (2..=6).collect(),
            interior_edges: default_interior_edges(8),
            quadrature_tol: 1e-10,
            sigma: SigmaChoice::MaximallyMixed,
            seesaw_ns: Vec::new(),
            restarts: default_restarts(),
            seed: 0,
            cap: default_cap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// Every number in the row is backed by verified SDP certificates or
    /// holds trivially.
    Certified,
    /// The visibility is a see-saw lower bound.
    Heuristic,
    /// A solver or validation step refused; see `detail`.
    Refused,
}

/// One row per `(d, n)`. `eta_star` is the depolarizing joint-measurability
/// robustness of the binned pair at `d`. `visibility` is the largest
/// visibility at which the sandwich assemblage admits an `n`-preparation
/// model: the steering robustness for `n = 1`, 1 for `n ≥ d`, and a see-saw
/// lower bound in between.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub d: usize,
    pub bins: usize,
    pub eta_star: Option<f64>,
    pub seesaw_n: usize,
    pub visibility: Option<f64>,
    pub cert_status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanTable {
    pub config: ScanConfig,
    pub rows: Vec<ScanRow>,
    /// SDPs behind the certified cells, for independent re-verification.
    #[serde(skip)]
    pub records: Vec<SdpRecord>,
}

impl ScanTable {
    /// The `n = 1` rows, one per dimension.
    pub fn certified_rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.seesaw_n == 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,bins,eta_star,seesaw_n,visibility,cert_status\n");
        let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.9}"));
        for r in &self.rows {
            let status = serde_json::to_value(r.cert_status).expect("unit enum");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.d,
                r.bins,
                num(r.eta_star),
                r.seesaw_n,
                num(r.visibility),
                status.as_str().expect("string")
            ));
        }
        out
    }
}

struct DimOutcome {
    rows: Vec<ScanRow>,
    records: Vec<SdpRecord>,
}

fn refused(d: usize, bins: usize, n: usize, eta: Option<f64>, e: &Error) -> ScanRow {
    ScanRow { d, bins, eta_star: eta, seesaw_n: n, visibility: None, cert_status: CellStatus::Refused, detail: Some(e.to_string()) }
}

fn scan_dim(d: usize, cfg: &ScanConfig) -> DimOutcome {
    let bins = cfg.interior_edges.len() + 1;
    let compat = CompatOptions { cap: cfg.cap, ..CompatOptions::default() };
    let mut records = Vec::new();
    let mut rows = Vec::new();

    let prepared = TruncationConfig::from_interior(d, &cfg.interior_edges, cfg.quadrature_tol)
        .and_then(|t| quadrature_pair(&t))
        .and_then(|ms| Ok((sandwich(&cfg.sigma.state(d), &ms)?, ms)));
    let (asm, ms) = match prepared {
        Ok(v) => v,
        Err(e) => return DimOutcome { rows: vec![refused(d, bins, 1, None, &e)], records },
    };

    let mut take = |r: RobustnessResult| {
        records.extend(r.records);
        r.eta_star
    };
    let eta = match jm_robustness(&ms, &Depolarizing, compat) {
        Ok(r) => take(r),
        Err(e) => return DimOutcome { rows: vec![refused(d, bins, 1, None, &e)], records },
    };
    match lhs_robustness(&asm, compat) {
        Ok(r) => {
            let v = take(r);
            rows.push(ScanRow {
                d,
                bins,
                eta_star: Some(eta),
                seesaw_n: 1,
                visibility: Some(v),
                cert_status: CellStatus::Certified,
                detail: None,
            });
        }
        Err(e) => rows.push(refused(d, bins, 1, Some(eta), &e)),
    }

    for &n in cfg.seesaw_ns.iter().filter(|&&n| n >= 2) {
        if n >= d {
            rows.push(ScanRow {
                d,
                bins,
                eta_star: Some(eta),
                seesaw_n: n,
                visibility: Some(1.0),
                cert_status: CellStatus::Certified,
                detail: None,
            });
            continue;
        }
        let opts = SeesawOptions { restarts: cfg.restarts, seed: cfg.seed, cap: cfg.cap, ..SeesawOptions::default() };
        match seesaw_n_prep(&asm, n, &opts) {
            Ok(r) => rows.push(ScanRow {
                d,
                bins,
                eta_star: Some(eta),
                seesaw_n: n,
                visibility: Some(r.visibility),
                cert_status: CellStatus::Heuristic,
                detail: (!r.converged).then(|| "see-saw hit the round limit".to_string()),
            }),
            Err(e) => rows.push(refused(d, bins, n, Some(eta), &e)),
        }
    }
    DimOutcome { rows, records }
}

/// Robustness table of the binned position/momentum pair across Fock
/// truncations. Dimensions run in parallel; the output order and values do
/// not depend on scheduling.
pub fn incompressibility_scan(cfg: &ScanConfig) -> Result<ScanTable> {
    if cfg.dims.is_empty() {
        return Err(Error::Validation("scan needs at least one dimension".into()));
    }
    if cfg.dims.contains(&0) {
        return Err(Error::Validation("Fock dimensions must be positive".into()));
    }
    if let SigmaChoice::Thermal { beta } = cfg.sigma {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Validation(format!("thermal beta must be finite and non-negative, got {beta}")));
        }
    }
    // Surface bad edges once instead of per cell.
    TruncationConfig::from_interior(1, &cfg.interior_edges, cfg.quadrature_tol)?;
    let outcomes: Vec<DimOutcome> = cfg.dims.par_iter().map(|&d| scan_dim(d, cfg)).collect();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        records.extend(o.records);
    }
    Ok(ScanTable { config: cfg.clone(), rows, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bins_at_d2_are_incompatible() {
        let cfg = ScanConfig { dims: vec![2], interior_edges: vec![0.0], ..ScanConfig::default() };
        let t = incompressibility_scan(&cfg).unwrap();
        let row = &t.rows[0];
        assert_eq!(row.cert_status, CellStatus::Certified);
        assert!(row.eta_star.unwrap() < 1.0 - 1e-3);
        // Maximally mixed σ: steering and joint-measurability robustness agree.
        assert!((row.visibility.unwrap() - row.eta_star.unwrap()).abs() < 1e-3);
        assert!(t.records.iter().all(|r| r.verify(1e-6).ok));
    }

    #[test]
    fn single_bin_is_compatible() {
        let cfg = ScanConfig { dims: vec![3], interior_edges: vec![], ..ScanConfig::default() };
        let t = incompressibility_scan(&cfg).unwrap();
        assert!((t.rows[0].eta_star.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seesaw_rows_and_csv() {
        let cfg = ScanConfig { dims: vec![2], interior_edges: vec![0.0], seesaw_ns: vec![2], ..ScanConfig::default() };
        let t = incompressibility_scan(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].visibility, Some(1.0));
        let csv = t.to_csv();
        assert!(csv.starts_with("d,bins,eta_star,seesaw_n,visibility,cert_status\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(",certified"));
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = ScanConfig { dims: vec![], ..ScanConfig::default() };
        assert!(incompressibility_scan(&cfg).is_err());
        let cfg = ScanConfig { interior_edges: vec![1.0, -1.0], ..ScanConfig::default() };
        assert!(incompressibility_scan(&cfg).is_err());
    }
}
