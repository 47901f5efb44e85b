//! Zero modes of `H = H₀ + Q` as fixed points of `T = −A Q`.

mod arnoldi;
mod classify;
mod decay;

pub use arnoldi::{block_eigs, EigenConfig, EigenReport};
pub use classify::{
    classify_threshold_state, mu_check, mu_partial_quantity, threshold_states, ClassifyConfig, MuCheck, MuTrend, ThresholdClassification,
    ThresholdKind, ThresholdSurvey,
};
pub use decay::{decay_fit, default_shells, DecayFit, MIN_SHELLS};

use num_complex::Complex64;
use serde::Serialize;

use crate::clifford::alpha_dot;
use crate::error::{LabError, Result};
use crate::field::{bracket, SpinorField};
use crate::freeop::{apply_a_spectral, apply_h0};
use crate::potential::{apply_potential, PotentialField};

/// `‖H₀f + Qf‖ / max(‖f‖, ‖H₀f‖)`.
pub fn residual(f: &SpinorField, q: &PotentialField) -> Result<f64> {
    let nf = f.norm();
    if nf == 0.0 {
        return Err(LabError::Precondition("residual of the zero field is undefined".into()));
    }
    let h0f = apply_h0(f)?;
    let r = h0f.add(&apply_potential(q, f)?)?;
    Ok(r.norm() / nf.max(h0f.norm()))
}

/// `T f = −A(Q f)` with the spectral `A`.
pub fn birman_schwinger_apply(q: &PotentialField, f: &SpinorField) -> Result<SpinorField> {
    Ok(apply_a_spectral(&apply_potential(q, f)?)?.field.scale_real(-1.0))
}

pub fn birman_schwinger_spectrum(q: &PotentialField, cfg: &EigenConfig) -> Result<EigenReport> {
    block_eigs(|f| birman_schwinger_apply(q, f), &q.grid, cfg)
}

/// Orthonormal basis of the eigenfields with `|λ − 1| ≤ tol` that also pass
/// `residual ≤ 10 tol`.
pub fn zero_modes_from(report: &EigenReport, q: &PotentialField, tol: f64) -> Result<Vec<SpinorField>> {
    let mut basis: Vec<SpinorField> = Vec::new();
    for (lam, f) in report.eigenvalues.iter().zip(&report.eigenfields) {
        if (lam - Complex64::new(1.0, 0.0)).norm() > tol {
            continue;
        }
        let mut v = f.clone();
        let before = v.norm();
        for _ in 0..2 {
            for b in &basis {
                let c = v.inner(b)?;
                v = v.axpy(-c, b)?;
            }
        }
        let n = v.norm();
        if n <= 1e-6 * before {
            continue;
        }
        let v = v.scale_real(1.0 / n);
        if residual(&v, q)? <= 10.0 * tol {
            basis.push(v);
        }
    }
    Ok(basis)
}

pub fn find_zero_modes(q: &PotentialField, tol: f64) -> Result<Vec<SpinorField>> {
    let report = birman_schwinger_spectrum(q, &EigenConfig::default())?;
    zero_modes_from(&report, q, tol)
}

/// Norm of the projection of `target / ‖target‖` onto the span of the
/// orthonormal `modes`.
pub fn cluster_overlap(modes: &[SpinorField], target: &SpinorField) -> Result<f64> {
    let nt = target.norm();
    if nt == 0.0 {
        return Err(LabError::Precondition("overlap with the zero field".into()));
    }
    let mut s = 0.0;
    for m in modes {
        s += target.inner(m)?.norm_sqr() / m.norm().powi(2);
    }
    Ok(s.sqrt() / nt)
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    /// `τ = 1/λ` for the real nonzero eigenvalues, ascending in `|τ|`.
    pub thresholds: Vec<f64>,
    pub note: Option<String>,
}

/// Couplings `τ` at which `τQ` acquires a zero mode.
pub fn coupling_thresholds_from(report: &EigenReport) -> CouplingReport {
    let top = report.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut out: Vec<f64> = Vec::new();
    for lam in &report.eigenvalues {
        let m = lam.norm();
        if m <= 1e-12 || m <= 1e-10 * top || lam.im.abs() > 1e-6 * m {
            continue;
        }
        let tau = 1.0 / lam.re;
        if !out.iter().any(|t| (t - tau).abs() <= 1e-6 * tau.abs()) {
            out.push(tau);
        }
    }
    out.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let note = out.is_empty().then(|| "no real nonzero eigenvalue of -AQ among those computed".to_string());
    CouplingReport { thresholds: out, note }
}

pub fn coupling_thresholds(q: &PotentialField, k: usize) -> Result<CouplingReport> {
    let cfg = EigenConfig { count: k, max_basis: (k + 12).max(32), ..EigenConfig::default() };
    Ok(coupling_thresholds_from(&birman_schwinger_spectrum(q, &cfg)?))
}

/// Relative gap between `H₀(⟨x⟩^μ f)` and
/// `−iμ (α·x)⟨x⟩^{μ−2} f + ⟨x⟩^μ H₀f`.
pub fn weighted_derivative_identity_check(f: &SpinorField, mu: f64) -> Result<f64> {
    let g = f.grid;
    let lhs = apply_h0(&f.weighted(mu))?;
    let h0f = apply_h0(f)?;
    let rhs = h0f.map(|i, hv| {
        let x = g.position(i);
        let b = bracket(&x);
        let ax = alpha_dot(&x).expect("lattice points are finite").mul_vec(&f.data[i]);
        let c = Complex64::new(0.0, -mu * b.powf(mu - 2.0));
        let w = b.powf(mu);
        [0, 1, 2, 3].map(|j| c * ax[j] + w * hv[j])
    });
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.sub(&rhs)?.norm() / scale)
}
