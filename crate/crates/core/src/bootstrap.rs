//! Weight bookkeeping for the decay bootstrap `f = −AQf`.
//!
//! A field in `L^{2,s}` multiplied by `Q = O(⟨x⟩^{-ρ})` lands in
//! `L^{2,s+ρ}`; applying `A` then costs one power of `⟨x⟩` but is only
//! available for `−1/2 < s < 3/2`. Starting from `s = −3/2` the engine
//! repeats the pair of steps while it stays legal. Everything in the trace
//! is exact.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::SpinorField;
use crate::freeop::apply_a_spectral;
use crate::potential::{apply_potential, PotentialField};
use crate::rational::Rational;
use crate::resonance::{decay_fit, default_shells, residual};

/// Weight of a generic threshold state.
pub fn initial_weight() -> Rational {
    Rational::frac(-3, 2)
}

fn lower_a() -> Rational {
    Rational::frac(-1, 2)
}

fn upper_a() -> Rational {
    Rational::frac(3, 2)
}

/// Multiplication by a potential decaying like `⟨x⟩^{-ρ}`.
pub fn map_weight_through_q(s: Rational, rho: Rational) -> Result<Rational> {
    if rho <= Rational::ONE {
        return Err(LabError::Domain(format!("decay rate rho = {rho} must exceed 1")));
    }
    Ok(s + rho)
}

/// Application of `A`, bounded from `L^{2,s}` to `L^{2,s-1}` for `-1/2 < s < 3/2`.
pub fn map_weight_through_a(s: Rational) -> Result<Rational> {
    if s <= lower_a() || s >= upper_a() {
        return Err(LabError::Domain(format!(
            "A is bounded L^{{2,s}} -> L^{{2,s-1}} only for -1/2 < s < 3/2; got s = {s}"
        )));
    }
    Ok(s - Rational::ONE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Justification {
    /// `f ∈ L^{2,-3/2}` by hypothesis.
    Start,
    /// `s ↦ s + ρ` followed by `s ↦ s − 1`, with the intermediate weight checked.
    QThenA,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BootstrapStep {
    pub n: u64,
    pub s: Rational,
    /// Weight of `Q f` at this step, `s + ρ`.
    pub after_q: Rational,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BootstrapTrace {
    pub rho: Rational,
    pub input_rho: Rational,
    pub clamped: bool,
    pub note: Option<String>,
    pub steps: Vec<BootstrapStep>,
    pub n0: u64,
    /// `s_{n0} + ρ`, the weight available for `Qf` at the end.
    pub terminal_weight: Rational,
    pub terminal: String,
    /// Set when `terminal_weight` equals `3/2` exactly.
    pub boundary_flag: bool,
}

pub const TERMINAL_STATEMENT: &str = "f in L^{2,mu} for all mu < 1/2, hence <x>^mu f in H^1";

/// Value used in place of any `ρ ≥ 3`; a faster decay also satisfies the slower bound.
pub fn clamp_value() -> Rational {
    Rational::frac(5, 2)
}

/// Closed form of `n0`: the largest `n` with `n(ρ−1) < 2`.
pub fn n0_formula(rho: Rational) -> Result<u64> {
    if rho <= Rational::ONE {
        return Err(LabError::Domain(format!("decay rate rho = {rho} must exceed 1")));
    }
    let ratio = Rational::integer(2) / (rho - Rational::ONE);
    let n = if ratio.is_integer() { ratio.numer() - 1 } else { ratio.ceil() - 1 };
    Ok(n as u64)
}

pub fn bootstrap_trace(rho: Rational) -> Result<BootstrapTrace> {
    if rho <= Rational::ONE {
        return Err(LabError::Domain(format!(
            "decay rate rho = {rho} must exceed 1 (potentials decaying like <x>^-rho with rho > 1)"
        )));
    }
    let input_rho = rho;
    let (rho, clamped, note) = if rho >= Rational::integer(3) {
        let c = clamp_value();
        (c, true, Some(format!("rho = {input_rho} >= 3 replaced by {c}; the decay bound still holds")))
    } else {
        (rho, false, None)
    };

    let mut s = initial_weight();
    let mut steps = vec![BootstrapStep { n: 0, s, after_q: map_weight_through_q(s, rho)?, justification: Justification::Start }];
    // Continue while A is applicable to Q f.
    loop {
        let q = map_weight_through_q(s, rho)?;
        if q >= upper_a() {
            break;
        }
        s = map_weight_through_a(q)?;
        let n = steps.len() as u64;
        steps.push(BootstrapStep { n, s, after_q: map_weight_through_q(s, rho)?, justification: Justification::QThenA });
    }
    let last = steps.last().expect("trace starts with one step");
    let n0 = last.n;
    let terminal_weight = last.after_q;
    Ok(BootstrapTrace {
        rho,
        input_rho,
        clamped,
        note,
        n0,
        terminal_weight,
        terminal: TERMINAL_STATEMENT.to_string(),
        boundary_flag: terminal_weight == upper_a(),
        steps,
    })
}

impl BootstrapTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rho = {}{}", self.rho, if self.clamped { format!(" (input {})", self.input_rho) } else { String::new() });
        let _ = writeln!(out, "{:>4}  {:>12}  {:>12}  step", "n", "s_n", "s_n + rho");
        for st in &self.steps {
            let tag = match st.justification {
                Justification::Start => "start",
                Justification::QThenA => "multiply by Q, apply A",
            };
            let _ = writeln!(out, "{:>4}  {:>12}  {:>12}  {tag}", st.n, st.s.to_string(), st.after_q.to_string());
        }
        let _ = writeln!(out, "n0 = {}; s_n0 + rho = {} (needs >= 3/2)", self.n0, self.terminal_weight);
        let _ = writeln!(out, "boundary_flag = {}", self.boundary_flag);
        let _ = writeln!(out, "{}", self.terminal);
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapRound {
    pub round: usize,
    pub sigma: f64,
    pub std_error: f64,
    /// `‖f_i − f_{i-1}‖ / ‖f_{i-1}‖`; zero for round 0.
    pub relative_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalBootstrap {
    pub trace: BootstrapTrace,
    pub rounds: Vec<BootstrapRound>,
    /// Fitted exponents never drop by more than `MONOTONE_SLACK`.
    pub nondecreasing: bool,
}

pub const MONOTONE_SLACK: f64 = 0.1;

/// Iterates `f ↦ −A(Qf)` on grid data, fitting the decay exponent each round.
/// Round 0 is the input field.
pub fn empirical_bootstrap(f: &SpinorField, q: &PotentialField, rho: Rational, rounds: usize, gate: f64) -> Result<EmpiricalBootstrap> {
    let trace = bootstrap_trace(rho)?;
    if !f.grid.same_as(&q.grid) {
        return Err(LabError::GridMismatch);
    }
    if f.sum_sq() == 0.0 {
        let rounds = (0..=rounds).map(|round| BootstrapRound { round, sigma: 0.0, std_error: 0.0, relative_change: 0.0 }).collect();
        return Ok(EmpiricalBootstrap { trace, rounds, nondecreasing: true });
    }
    let r = residual(f, q)?;
    if !(r <= gate) {
        return Err(LabError::ResidualGate { residual: r, gate });
    }
    let shells = default_shells(&f.grid);
    let fit0 = decay_fit(f, &shells)?;
    let mut out = vec![BootstrapRound { round: 0, sigma: fit0.sigma, std_error: fit0.std_error, relative_change: 0.0 }];
    let mut cur = f.clone();
    for round in 1..=rounds {
        let next = apply_a_spectral(&apply_potential(q, &cur)?)?.field.scale_real(-1.0);
        let change = next.sub(&cur)?.norm() / cur.norm();
        let fit = decay_fit(&next, &shells)?;
        out.push(BootstrapRound { round, sigma: fit.sigma, std_error: fit.std_error, relative_change: change });
        cur = next;
    }
    let nondecreasing = out.windows(2).all(|w| w[1].sigma >= w[0].sigma - MONOTONE_SLACK);
    Ok(EmpiricalBootstrap { trace, rounds: out, nondecreasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::frac(n, d)
    }

    /// Enumerates `n = 0, 1, 2, …` directly from the closed form of `s_n`.
    fn brute_force(rho: Rational) -> (Vec<Rational>, u64) {
        let mut s = Vec::new();
        let mut n = 0i128;
        loop {
            let sn = r(-3, 2) + Rational::integer(n) * (rho - Rational::ONE);
            if n > 0 && !(sn + Rational::ONE < r(3, 2)) {
                break;
            }
            s.push(sn);
            n += 1;
        }
        let n0 = s.len() as u64 - 1;
        (s, n0)
    }

    #[test]
    fn rho_eight_fifths() {
        let t = bootstrap_trace(r(8, 5)).unwrap();
        let s: Vec<_> = t.steps.iter().map(|st| st.s).collect();
        assert_eq!(s, vec![r(-3, 2), r(-9, 10), r(-3, 10), r(3, 10)]);
        assert_eq!(t.n0, 3);
        assert_eq!(t.terminal_weight, r(19, 10));
        assert!(!t.boundary_flag);
    }

    #[test]
    fn rho_two_sits_on_the_boundary() {
        let t = bootstrap_trace(r(2, 1)).unwrap();
        let s: Vec<_> = t.steps.iter().map(|st| st.s).collect();
        assert_eq!(s, vec![r(-3, 2), r(-1, 2)]);
        assert_eq!(t.n0, 1);
        assert_eq!(t.terminal_weight, r(3, 2));
        assert!(t.boundary_flag);
        assert_eq!(t.terminal, TERMINAL_STATEMENT);
    }

    #[test]
    fn slow_decay_needs_many_steps() {
        let t = bootstrap_trace(r(101, 100)).unwrap();
        assert_eq!(t.n0, 199);
        assert_eq!(t.steps.len(), 200);
    }

    #[test]
    fn traces_match_enumeration() {
        for rho in [r(8, 5), r(2, 1), r(3, 2), r(101, 100), r(7, 3), r(5, 4)] {
            let t = bootstrap_trace(rho).unwrap();
            let (s, n0) = brute_force(rho);
            assert_eq!(t.steps.iter().map(|st| st.s).collect::<Vec<_>>(), s, "rho {rho}");
            assert_eq!(t.n0, n0);
            assert_eq!(n0_formula(rho).unwrap(), n0);
        }
    }

    #[test]
    fn three_halves_is_also_a_boundary_case() {
        let t = bootstrap_trace(r(3, 2)).unwrap();
        assert_eq!(t.n0, 3);
        assert!(t.boundary_flag);
    }

    #[test]
    fn weight_maps() {
        assert_eq!(map_weight_through_q(r(-3, 2), r(8, 5)).unwrap(), r(1, 10));
        assert_eq!(map_weight_through_q(r(0, 1), r(2, 1)).unwrap(), r(2, 1));
        assert!(map_weight_through_q(r(0, 1), r(1, 1)).is_err());
        assert_eq!(map_weight_through_a(r(1, 2)).unwrap(), r(-1, 2));
        assert_eq!(map_weight_through_a(r(0, 1)).unwrap(), r(-1, 1));
        assert!(map_weight_through_a(r(3, 2)).is_err());
        assert!(map_weight_through_a(r(-1, 2)).is_err());
        let msg = map_weight_through_a(r(2, 1)).unwrap_err().to_string();
        assert!(msg.contains("-1/2 < s < 3/2"), "{msg}");
    }

    #[test]
    fn clamps_fast_decay_and_rejects_slow() {
        let t = bootstrap_trace(r(4, 1)).unwrap();
        assert!(t.clamped);
        assert_eq!(t.rho, clamp_value());
        assert_eq!(t.input_rho, r(4, 1));
        assert!(t.note.is_some());
        assert!(bootstrap_trace(r(3, 1)).unwrap().clamped);
        assert!(bootstrap_trace(r(1, 1)).is_err());
        assert!(bootstrap_trace(r(1, 2)).is_err());
    }

    #[test]
    fn json_has_exact_pairs() {
        let j = bootstrap_trace(r(8, 5)).unwrap().to_json();
        assert!(j.contains(r#""num": -9"#), "{j}");
        assert!(j.contains(r#""den": 10"#));
        assert!(j.contains(r#""boundary_flag": false"#));
        let table = bootstrap_trace(r(2, 1)).unwrap().table();
        assert!(table.contains("boundary_flag = true"));
    }
}
