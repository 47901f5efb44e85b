use std::sync::OnceLock;

use num_complex::Complex64;

use dzl_core::bootstrap::empirical_bootstrap;
use dzl_core::field::{make_grid, profiles, random_field, sample, GridSpec, Space, SpinorField};
use dzl_core::potential::{loss_yau, PotentialField, PotentialSpec};
use dzl_core::rational::Rational;
use dzl_core::resonance::{
    birman_schwinger_spectrum, classify_threshold_state, cluster_overlap, coupling_thresholds, coupling_thresholds_from, decay_fit,
    default_shells, find_zero_modes, mu_check, residual, threshold_states, zero_modes_from, ClassifyConfig, EigenConfig, EigenReport, MuTrend,
    ThresholdKind,
};
use dzl_core::LabError;

struct LySetup {
    grid: GridSpec,
    q: PotentialField,
    spinor: SpinorField,
    report: EigenReport,
}

fn ly() -> &'static LySetup {
    static CELL: OnceLock<LySetup> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = make_grid(16.0, 32).unwrap();
        let l = loss_yau(&grid);
        let q = l.potential().unwrap();
        let report = birman_schwinger_spectrum(&q, &EigenConfig::default()).unwrap();
        LySetup { grid, q, spinor: l.spinor, report }
    })
}

fn nearest(report: &EigenReport, target: f64) -> Complex64 {
    *report.eigenvalues.iter().min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm())).unwrap()
}

#[test]
fn loss_yau_is_a_fixed_point() {
    let s = ly();
    assert!((nearest(&s.report, 1.0) - 1.0).norm() <= 0.1);
    let modes = zero_modes_from(&s.report, &s.q, 0.1).unwrap();
    assert!(!modes.is_empty());
    assert!(cluster_overlap(&modes, &s.spinor).unwrap() >= 0.95);
    for (r, l) in s.report.residuals.iter().zip(&s.report.eigenvalues) {
        assert!(*r <= 1e-8 * l.norm().max(1.0), "residual {r} for {l}");
    }
    let sorted = s.report.eigenvalues.windows(2).all(|w| w[0].norm() >= w[1].norm() - 1e-12);
    assert!(sorted);
}

#[test]
fn halving_the_potential_halves_the_eigenvalue() {
    let s = ly();
    let half = birman_schwinger_spectrum(&s.q.scaled(0.5), &EigenConfig::default()).unwrap();
    assert!((nearest(&half, 0.5) - 0.5 * nearest(&s.report, 1.0)).norm() <= 0.05);

    let tau = coupling_thresholds_from(&s.report).thresholds;
    assert!((tau[0].abs() - 1.0).abs() <= 0.1, "{tau:?}");
    let tau_half = coupling_thresholds_from(&half).thresholds;
    assert!((tau_half[0].abs() - 2.0).abs() <= 0.1, "{tau_half:?}");
}

#[test]
fn weak_and_vanishing_potentials_have_no_modes() {
    let g = make_grid(16.0, 32).unwrap();
    assert!(find_zero_modes(&PotentialField::zero(&g), 0.1).unwrap().is_empty());
    let small = PotentialField::scalar_decay(&g, 0.1, 2.0).unwrap();
    let report = birman_schwinger_spectrum(&small, &EigenConfig::default()).unwrap();
    assert!(report.eigenvalues.iter().all(|l| l.norm() < 0.5));
    assert!(zero_modes_from(&report, &small, 0.1).unwrap().is_empty());

    let none = coupling_thresholds(&PotentialField::zero(&make_grid(8.0, 16).unwrap()), 4).unwrap();
    assert!(none.thresholds.is_empty());
    assert!(none.note.is_some());
}

#[test]
fn loss_yau_classifies_as_zero_mode() {
    let s = ly();
    let cfg = ClassifyConfig::default();
    // The sampled mode is coarse at h = 1 and fails the gate; the eigenfield passes.
    assert!(matches!(classify_threshold_state(&s.spinor, &s.q, None, &cfg), Err(LabError::ResidualGate { .. })));
    let survey = threshold_states(|g| loss_yau(g).potential(), &s.grid, &make_grid(24.0, 48).unwrap(), 0.1, &EigenConfig::default(), &cfg).unwrap();
    assert!(!survey.classifications.is_empty());
    for c in &survey.classifications {
        assert_eq!(c.kind, ThresholdKind::ZeroMode);
        assert!((c.sigma - 2.0).abs() <= 0.15, "sigma {}", c.sigma);
        assert_eq!(c.mu_check["0.4"].trend, MuTrend::FiniteTrend);
    }
}

#[test]
fn loss_yau_weighted_norm_is_sharp() {
    let cfg = ClassifyConfig::default();
    let a = loss_yau(&make_grid(16.0, 32).unwrap()).spinor;
    let b = loss_yau(&make_grid(24.0, 48).unwrap()).spinor;
    assert_eq!(mu_check(&a, &b, 0.4, &cfg).unwrap().trend, MuTrend::FiniteTrend);
    assert_eq!(mu_check(&a, &b, 0.6, &cfg).unwrap().trend, MuTrend::Diverging);
    assert!(mu_check(&b, &a, 0.4, &cfg).is_err());
    let fit = decay_fit(&a, &default_shells(&a.grid)).unwrap();
    assert!((fit.sigma - 2.0).abs() <= 0.15);
}

#[test]
fn non_solutions_fail_the_gate() {
    let g = make_grid(16.0, 64).unwrap();
    let l = loss_yau(&g);
    let q = l.potential().unwrap();
    let slow = sample(profiles::bracket_power(1.2, 0), &g).unwrap();
    let cfg = ClassifyConfig::default();
    assert!(matches!(classify_threshold_state(&slow, &q, None, &cfg), Err(LabError::ResidualGate { .. })));
    assert!(classify_threshold_state(&l.spinor, &q, None, &cfg).is_ok());

    let noise = random_field(&g, 11);
    let rho = Rational::integer(2);
    assert!(matches!(empirical_bootstrap(&noise, &q, rho, 2, cfg.gate), Err(LabError::ResidualGate { .. })));
    let zero = SpinorField::zeros(g, Space::Position);
    let rounds = empirical_bootstrap(&zero, &q, rho, 3, cfg.gate).unwrap().rounds;
    assert_eq!(rounds.len(), 4);
    assert!(rounds.iter().all(|r| r.sigma == 0.0 && r.relative_change == 0.0));
    assert!(residual(&zero, &q).is_err());
}

#[test]
fn empirical_bootstrap_settles_on_loss_yau() {
    let change = |l: f64, n: usize| {
        let g = make_grid(l, n).unwrap();
        let ly = loss_yau(&g);
        let out = empirical_bootstrap(&ly.spinor, &ly.potential().unwrap(), Rational::integer(2), 1, 0.2).unwrap();
        assert!(out.nondecreasing);
        out.rounds[1].relative_change
    };
    let c16 = change(16.0, 64);
    let c24 = change(24.0, 96);
    assert!(c24 <= 0.1, "{c24}");
    assert!(c24 < c16, "{c16} -> {c24}");
}

#[test]
fn file_potentials_round_trip() {
    let g = make_grid(8.0, 16).unwrap();
    let q = PotentialSpec::Em { q: 0.3, a: 0.2, rho: 2.0 }.build(&g).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.dzl1");
    q.write_dzl1(std::fs::File::create(&path).unwrap()).unwrap();
    let spec: PotentialSpec = format!("file:{}", path.display()).parse().unwrap();
    let back = spec.build(&g).unwrap();
    assert_eq!(back.grid, q.grid);
    assert!(back.scaled(-1.0).max_abs() == q.max_abs());
    let f = random_field(&g, 5);
    let d = dzl_core::potential::apply_potential(&q, &f).unwrap().sub(&dzl_core::potential::apply_potential(&back, &f).unwrap()).unwrap();
    assert_eq!(d.norm(), 0.0);
    assert!(matches!(spec.build(&make_grid(8.0, 20).unwrap()), Err(LabError::GridMismatch)));
}
