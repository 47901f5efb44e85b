//! Power-law decay fits over radial shells.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{shell_profile, GridSpec, Shell, SpinorField};

pub const MIN_SHELLS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Pointwise exponent in `|f| ~ ⟨x⟩^{-σ}`.
    pub sigma: f64,
    pub std_error: f64,
    /// Slope of log density against log `⟨x⟩`, equal to `−2σ`.
    pub slope: f64,
    pub intercept: f64,
    #[serde(skip)]
    pub shells: Vec<Shell>,
}

impl DecayFit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("inner,outer,mass,points,mean_log_bracket,slope\n");
        for s in &self.shells {
            let _ = writeln!(out, "{},{},{:e},{},{},{}", s.inner, s.outer, s.mass, s.points, s.mean_log_bracket, self.slope);
        }
        out
    }
}

/// Dyadic edges `(L − h)/2^k` for `k = 4, …, 0`: four shells ending just
/// inside the box.
pub fn default_shells(grid: &GridSpec) -> Vec<f64> {
    let outer = grid.half_width - grid.spacing();
    (0..=4).rev().map(|k| outer / 2f64.powi(k)).collect()
}

/// Least-squares fit of `ln(mass / volume)` against the mean `ln⟨x⟩` of each
/// shell. A mass law `mass(R..2R) ∝ R^{3−2σ}` is a density law `⟨x⟩^{-2σ}`.
pub fn decay_fit(f: &SpinorField, edges: &[f64]) -> Result<DecayFit> {
    if edges.len() < MIN_SHELLS + 1 {
        return Err(LabError::Fit(format!("need at least {MIN_SHELLS} shells, got {}", edges.len().saturating_sub(1))));
    }
    let shells = shell_profile(f, edges)?;
    let total: f64 = shells.iter().map(|s| s.mass).sum();
    if let Some(s) = shells.iter().find(|s| !(s.mass > total * 1e-28)) {
        return Err(LabError::Fit(format!("shell [{}, {}) carries no mass", s.inner, s.outer)));
    }
    let dv = f.grid.measure(crate::field::Space::Position);
    let xs: Vec<f64> = shells.iter().map(|s| s.mean_log_bracket).collect();
    let ys: Vec<f64> = shells.iter().map(|s| (s.mass / (s.points as f64 * dv)).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(LabError::Fit("shells do not separate in radius".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_err = (rss / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit { sigma: -slope / 2.0, std_error: slope_err / 2.0, slope, intercept, shells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_grid, profiles, sample};

    #[test]
    fn recovers_synthetic_exponents() {
        let g = make_grid(32.0, 64).unwrap();
        for sigma in [1.5, 2.0, 3.0] {
            let f = sample(profiles::bracket_power(sigma, 0), &g).unwrap();
            let fit = decay_fit(&f, &default_shells(&g)).unwrap();
            assert!((fit.sigma - sigma).abs() < 0.1, "σ0 = {sigma}: fitted {}", fit.sigma);
        }
    }

    #[test]
    fn compact_support_is_rejected() {
        let g = make_grid(16.0, 32).unwrap();
        let bump = profiles::annulus_bump(1.0, 4.0);
        let f = sample(|x| [bump(x), 0.0, 0.0, 0.0].map(|v| num_complex::Complex64::new(v, 0.0)), &g).unwrap();
        assert!(matches!(decay_fit(&f, &default_shells(&g)), Err(LabError::Fit(_))));
    }

    #[test]
    fn too_few_shells() {
        let g = make_grid(16.0, 32).unwrap();
        let f = sample(profiles::bracket_power(2.0, 0), &g).unwrap();
        assert!(decay_fit(&f, &[1.0, 2.0, 4.0, 8.0]).is_err());
        let csv = decay_fit(&f, &default_shells(&g)).unwrap().to_csv();
        assert_eq!(csv.lines().count(), 5);
    }
}
