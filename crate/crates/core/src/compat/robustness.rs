use serde::{Deserialize, Serialize};

use super::parent::{self, Decision};
use super::{CompatOptions, SdpRecord};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::objects::{Assemblage, MeasurementSet};
use crate::sdp::{self, SdpStatus};

/// Half-width of the bracket placed around the SDP optimum.
const BRACKET: f64 = 5e-5;
/// Bisection stops once the bracket is this narrow.
const BISECTION_TOL: f64 = 1e-4;

/// Noise targets `N_{a|x}` mixed in as `η M_{a|x} + (1 − η) N_{a|x}`. The
/// noise family must itself be jointly measurable and share the layout of
/// `ms`.
pub trait NoiseModel: Send + Sync {
    fn name(&self) -> &str;
    fn noise(&self, ms: &MeasurementSet) -> Vec<Vec<CMatrix>>;
}

/// `N_{a|x} = tr(M_{a|x}) I / d`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Depolarizing;

impl NoiseModel for Depolarizing {
    fn name(&self) -> &str {
        "depolarizing"
    }

    fn noise(&self, ms: &MeasurementSet) -> Vec<Vec<CMatrix>> {
        let d = ms.dim();
        let id = linalg::identity(d);
        ms.povms.iter().map(|p| p.effects.iter().map(|e| id.scale(e.trace().re / d as f64)).collect()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessMethod {
    /// Max-η SDP, confirmed by feasibility tests on both sides.
    SdpBracket,
    /// Bisection over feasibility tests.
    Bisection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub eta_star: f64,
    /// Largest tested η with a verified model.
    pub lower: f64,
    /// Smallest tested η with a verified witness; 1 when the set itself
    /// is compatible.
    pub upper: f64,
    pub method: RobustnessMethod,
    /// Every SDP solved along the way.
    #[serde(skip)]
    pub records: Vec<SdpRecord>,
}

pub fn jm_depolarizing_robustness(ms: &MeasurementSet) -> Result<RobustnessResult> {
    jm_robustness(ms, &Depolarizing, CompatOptions::default())
}

/// Largest `η` for which `η M + (1 − η) N` is jointly measurable.
pub fn jm_robustness(ms: &MeasurementSet, noise: &dyn NoiseModel, opts: CompatOptions) -> Result<RobustnessResult> {
    let targets: Vec<Vec<CMatrix>> = ms.povms.iter().map(|p| p.effects.clone()).collect();
    let n = noise.noise(ms);
    if n.len() != targets.len() || n.iter().zip(&targets).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Dimension(format!("noise model `{}` changed the outcome layout", noise.name())));
    }
    robustness(&linalg::identity(ms.dim()), &targets, &n, opts)
}

/// Largest `v` for which `v σ_{a|x} + (1 − v) tr(σ_{a|x}) σ` admits an LHS
/// model.
pub fn lhs_robustness(asm: &Assemblage, opts: CompatOptions) -> Result<RobustnessResult> {
    let n = asm.depolarized(0.0).members;
    robustness(&asm.total, &asm.members, &n, opts)
}

fn mix(targets: &[Vec<CMatrix>], noise: &[Vec<CMatrix>], eta: f64) -> Vec<Vec<CMatrix>> {
    targets.iter().zip(noise).map(|(t, n)| t.iter().zip(n).map(|(t, n)| t.scale(eta) + n.scale(1.0 - eta)).collect()).collect()
}

fn robustness(total: &CMatrix, targets: &[Vec<CMatrix>], noise: &[Vec<CMatrix>], opts: CompatOptions) -> Result<RobustnessResult> {
    let mut records = Vec::new();
    let probe = |eta: f64, records: &mut Vec<SdpRecord>| -> Result<bool> {
        let d = parent::decide(total, &mix(targets, noise, eta), opts)?;
        Ok(match d {
            Decision::Feasible { record, .. } => {
                records.push(record);
                true
            }
            Decision::Infeasible { record, .. } => {
                records.push(record);
                false
            }
        })
    };

    if let Some(eta_hat) = max_eta(total, targets, noise, opts, &mut records)? {
        let bracketed = if eta_hat >= 1.0 - BRACKET {
            probe(1.0, &mut records).ok().filter(|&f| f).map(|_| (1.0, 1.0, 1.0))
        } else {
            let lo = (eta_hat - BRACKET).max(0.0);
            let hi = (eta_hat + BRACKET).min(1.0);
            match (probe(lo, &mut records), probe(hi, &mut records)) {
                (Ok(true), Ok(false)) => Some((eta_hat, lo, hi)),
                _ => None,
            }
        };
        if let Some((eta_star, lower, upper)) = bracketed {
            return Ok(RobustnessResult { eta_star, lower, upper, method: RobustnessMethod::SdpBracket, records });
        }
    }

    if probe(1.0, &mut records)? {
        return Ok(RobustnessResult { eta_star: 1.0, lower: 1.0, upper: 1.0, method: RobustnessMethod::Bisection, records });
    }
    if !probe(0.0, &mut records)? {
        return Err(Error::Validation("noise family itself has no model".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut records)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RobustnessResult { eta_star: 0.5 * (lo + hi), lower: lo, upper: hi, method: RobustnessMethod::Bisection, records })
}

/// Solves the max-η SDP. `None` when the solver does not return a
/// verified optimum; the caller then falls back to bisection.
fn max_eta(
    total: &CMatrix,
    targets: &[Vec<CMatrix>],
    noise: &[Vec<CMatrix>],
    opts: CompatOptions,
    records: &mut Vec<SdpRecord>,
) -> Result<Option<f64>> {
    let (problem, layout) = parent::build(total, targets, Some(noise), opts.cap)?;
    let solution = sdp::solve(&problem, opts.tol)?;
    let record = SdpRecord { problem, solution };
    let ok = record.solution.status == SdpStatus::Optimal && record.verify(opts.tol).ok;
    let eta = layout.eta_block.map(|b| record.solution.block_values[b][(0, 0)].re.clamp(0.0, 1.0));
    records.push(record);
    Ok(if ok { eta } else { None })
}
