//! Threshold-state classification: zero mode, resonance candidate, or
//! inconclusive, from the fitted decay exponent.

use std::collections::BTreeMap;

use serde::Serialize;

use super::decay::{decay_fit, default_shells};
use super::{birman_schwinger_spectrum, residual, zero_modes_from, EigenConfig, EigenReport};
use crate::error::{LabError, Result};
use crate::field::{norm3, sobolev_norm, GridSpec, Space, SpinorField};
use crate::potential::PotentialField;

/// `σ = 3/2` separates `L²` from the wider threshold space.
pub const L2_EXPONENT: f64 = 1.5;
/// Lower end of the resonance window `(3/2 − 3, 3/2]`.
pub const RESONANCE_FLOOR: f64 = -1.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub gate: f64,
    pub margin: f64,
    pub mus: Vec<f64>,
    /// Largest relative growth of the partial quantity still called finite.
    pub growth_limit: f64,
    /// Fields are normalized to unit mass inside this radius before comparison.
    pub core_radius: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { gate: 0.2, margin: 0.1, mus: vec![0.4, 0.45], growth_limit: 0.10, core_radius: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    ZeroMode,
    ResonanceCandidate,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuTrend {
    FiniteTrend,
    Diverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuCheck {
    pub mu: f64,
    pub small_box: f64,
    pub large_box: f64,
    pub growth: f64,
    pub trend: MuTrend,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdClassification {
    pub kind: ThresholdKind,
    pub sigma: f64,
    pub std_error: f64,
    pub residual: f64,
    /// Keyed by `μ`; empty when no larger-box companion was supplied.
    pub mu_check: BTreeMap<String, MuCheck>,
}

impl ThresholdClassification {
    pub fn all_finite(&self) -> bool {
        self.mu_check.values().all(|m| m.trend == MuTrend::FiniteTrend)
    }
}

pub fn kind_from_sigma(sigma: f64, margin: f64) -> ThresholdKind {
    if sigma >= L2_EXPONENT + margin {
        ThresholdKind::ZeroMode
    } else if sigma > L2_EXPONENT - margin {
        ThresholdKind::Inconclusive
    } else if sigma > RESONANCE_FLOOR {
        ThresholdKind::ResonanceCandidate
    } else {
        ThresholdKind::Inconclusive
    }
}

/// `‖⟨ξ⟩ F(⟨x⟩^μ f)‖²` for `f` scaled to unit mass in `|x| < core_radius`.
pub fn mu_partial_quantity(f: &SpinorField, mu: f64, core_radius: f64) -> Result<f64> {
    f.require_space(Space::Position)?;
    let g = f.grid;
    let core: f64 = f
        .data
        .iter()
        .enumerate()
        .filter(|(i, _)| norm3(&g.position(*i)) < core_radius)
        .map(|(_, v)| v.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        * g.measure(Space::Position);
    if !(core > 0.0) {
        return Err(LabError::Precondition(format!("no mass inside |x| < {core_radius}")));
    }
    Ok(sobolev_norm(&f.weighted(mu), 1.0)?.value.powi(2) / core)
}

pub fn mu_check(small: &SpinorField, large: &SpinorField, mu: f64, cfg: &ClassifyConfig) -> Result<MuCheck> {
    if !(large.grid.half_width > small.grid.half_width) {
        return Err(LabError::Precondition("the companion field must live on a larger box".into()));
    }
    let a = mu_partial_quantity(small, mu, cfg.core_radius)?;
    let b = mu_partial_quantity(large, mu, cfg.core_radius)?;
    let growth = b / a - 1.0;
    let trend = if growth <= cfg.growth_limit { MuTrend::FiniteTrend } else { MuTrend::Diverging };
    Ok(MuCheck { mu, small_box: a, large_box: b, growth, trend })
}

/// Classifies `f` after checking that it nearly solves `H f = 0`. The
/// companion is the same state computed on a larger box.
pub fn classify_threshold_state(
    f: &SpinorField,
    q: &PotentialField,
    companion: Option<&SpinorField>,
    cfg: &ClassifyConfig,
) -> Result<ThresholdClassification> {
    let r = residual(f, q)?;
    if !(r <= cfg.gate) {
        return Err(LabError::ResidualGate { residual: r, gate: cfg.gate });
    }
    let fit = decay_fit(f, &default_shells(&f.grid))?;
    let mut checks = BTreeMap::new();
    if let Some(c) = companion {
        for &mu in &cfg.mus {
            checks.insert(format!("{mu}"), mu_check(f, c, mu, cfg)?);
        }
    }
    Ok(ThresholdClassification { kind: kind_from_sigma(fit.sigma, cfg.margin), sigma: fit.sigma, std_error: fit.std_error, residual: r, mu_check: checks })
}

#[derive(Debug, Clone)]
pub struct ThresholdSurvey {
    pub spectrum: EigenReport,
    pub modes: Vec<SpinorField>,
    pub companion_modes: Vec<SpinorField>,
    pub classifications: Vec<ThresholdClassification>,
}

/// Finds zero modes of the potential produced by `build` on `small` and `large`, classifying each
/// small-box mode with the first large-box mode as its companion.
///
/// The large-box mode stands in for the whole cluster: for the potentials
/// here the partial quantity is the same on every vector of a degenerate
/// cluster, since the blocks of `−AQ` coincide.
pub fn threshold_states<B>(
    build: B,
    small: &GridSpec,
    large: &GridSpec,
    tol: f64,
    eig: &EigenConfig,
    cfg: &ClassifyConfig,
) -> Result<ThresholdSurvey>
where
    B: Fn(&GridSpec) -> Result<PotentialField>,
{
    let q = build(small)?;
    let spectrum = birman_schwinger_spectrum(&q, eig)?;
    let modes = zero_modes_from(&spectrum, &q, tol)?;
    let mut companion_modes = Vec::new();
    if !modes.is_empty() {
        let ql = build(large)?;
        companion_modes = zero_modes_from(&birman_schwinger_spectrum(&ql, eig)?, &ql, tol)?;
    }
    let classifications = modes
        .iter()
        .map(|m| classify_threshold_state(m, &q, companion_modes.first(), cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdSurvey { spectrum, modes, companion_modes, classifications })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_bands() {
        assert_eq!(kind_from_sigma(2.0, 0.1), ThresholdKind::ZeroMode);
        assert_eq!(kind_from_sigma(1.6, 0.1), ThresholdKind::ZeroMode);
        assert_eq!(kind_from_sigma(1.55, 0.1), ThresholdKind::Inconclusive);
        assert_eq!(kind_from_sigma(1.45, 0.1), ThresholdKind::Inconclusive);
        assert_eq!(kind_from_sigma(1.4, 0.1), ThresholdKind::ResonanceCandidate);
        assert_eq!(kind_from_sigma(0.5, 0.1), ThresholdKind::ResonanceCandidate);
        assert_eq!(kind_from_sigma(-1.5, 0.1), ThresholdKind::Inconclusive);
    }

    #[test]
    fn trend_labels_serialize_with_dashes() {
        assert_eq!(serde_json::to_string(&MuTrend::FiniteTrend).unwrap(), "\"finite-trend\"");
        assert_eq!(serde_json::to_string(&ThresholdKind::ResonanceCandidate).unwrap(), "\"resonance_candidate\"");
    }
}
