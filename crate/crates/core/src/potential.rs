//! Hermitian matrix potentials `Q(x)`: general samples, electromagnetic
//! couplings `q I − α·A`, scalar decays and the Loss–Yau magnetic zero mode.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{alpha_dot, apply_sigma_dot, pauli, sigma_dot, Matrix2, Matrix4, Weyl};
use crate::error::{LabError, Result};
use crate::field::{bracket, norm3, ordered_sum, read_dzl1, write_dzl1, GridSpec, Space, SpinorField};
use crate::fourier::{fft3, Direction};
use crate::freeop::apply_h0;

const CZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest entrywise `|Q − Q†|` accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayEnvelope {
    pub c: f64,
    pub rho: f64,
}

impl DecayEnvelope {
    pub fn new(c: f64, rho: f64) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(LabError::Domain(format!("decay rate must exceed 1, got {rho}")));
        }
        if !(c >= 0.0) {
            return Err(LabError::Domain(format!("envelope constant must be nonnegative, got {c}")));
        }
        Ok(DecayEnvelope { c, rho })
    }
}

/// Real scalar field on the position lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

/// Real 3-vector field on the position lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub data: Vec<[f64; 3]>,
}

/// Two-component spinor field on the position lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylField {
    pub grid: GridSpec,
    pub data: Vec<Weyl>,
}

impl ScalarField {
    pub fn sample<F: Fn([f64; 3]) -> f64 + Sync>(f: F, grid: &GridSpec) -> Result<Self> {
        let data: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("scalar potential sample".into()));
        }
        Ok(ScalarField { grid: *grid, data })
    }
}

impl VectorField {
    pub fn sample<F: Fn([f64; 3]) -> [f64; 3] + Sync>(f: F, grid: &GridSpec) -> Result<Self> {
        let data: Vec<[f64; 3]> = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("vector potential sample".into()));
        }
        Ok(VectorField { grid: *grid, data })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        VectorField { grid: *grid, data: vec![[0.0; 3]; grid.len()] }
    }
}

impl WeylField {
    pub fn norm(&self) -> f64 {
        let s: f64 = ordered_sum(self.data.len(), |i| self.data[i][0].norm_sqr() + self.data[i][1].norm_sqr());
        (s * self.grid.measure(Space::Position)).sqrt()
    }

    /// `σ·D φ` through the Pauli symbol `σ·ξ` on each Fourier mode.
    pub fn apply_sigma_d(&self) -> WeylField {
        let g = self.grid;
        let n = g.points;
        let mut comps: Vec<Vec<Complex64>> = (0..2).map(|c| self.data.iter().map(|w| w[c]).collect()).collect();
        comps.par_iter_mut().for_each(|c| fft3(c, n, Direction::Forward));
        let mut out: Vec<Vec<Complex64>> = vec![vec![CZERO; g.len()]; 2];
        for i in 0..g.len() {
            let r = apply_sigma_dot(&g.frequency(i), &[comps[0][i], comps[1][i]]);
            out[0][i] = r[0];
            out[1][i] = r[1];
        }
        let scale = 1.0 / g.len() as f64;
        out.par_iter_mut().for_each(|c| {
            fft3(c, n, Direction::Inverse);
            c.iter_mut().for_each(|z| *z *= scale);
        });
        WeylField { grid: g, data: (0..g.len()).map(|i| [out[0][i], out[1][i]]).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialField {
    pub grid: GridSpec,
    pub values: Vec<Matrix4>,
    pub decay: Option<DecayEnvelope>,
}

fn validate(grid: GridSpec, values: Vec<Matrix4>) -> Result<PotentialField> {
    if values.len() != grid.len() {
        return Err(LabError::GridMismatch);
    }
    if values.iter().any(|m| m.0.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
        return Err(LabError::NonFinite("potential sample".into()));
    }
    let q = PotentialField { grid, values, decay: None };
    let dev = hermiticity_check(&q);
    if dev > HERMITIAN_TOL {
        return Err(LabError::NotHermitian(dev));
    }
    Ok(q)
}

impl PotentialField {
    pub fn zero(grid: &GridSpec) -> Self {
        PotentialField { grid: *grid, values: vec![Matrix4::zero(); grid.len()], decay: None }
    }

    pub fn from_matrix_fn<F: Fn([f64; 3]) -> Matrix4 + Sync>(f: F, grid: &GridSpec) -> Result<Self> {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        validate(*grid, values)
    }

    /// `q(x) I − α·A(x)`.
    pub fn from_em(q: &ScalarField, a: &VectorField) -> Result<Self> {
        if !q.grid.same_as(&a.grid) {
            return Err(LabError::GridMismatch);
        }
        let values = q
            .data
            .par_iter()
            .zip(a.data.par_iter())
            .map(|(s, v)| Ok(Matrix4::identity().scale(*s) - alpha_dot(v)?))
            .collect::<Result<Vec<_>>>()?;
        validate(q.grid, values)
    }

    /// `amp ⟨x⟩^{-ρ} I`.
    pub fn scalar_decay(grid: &GridSpec, amp: f64, rho: f64) -> Result<Self> {
        let q = Self::from_matrix_fn(|x| Matrix4::identity().scale(amp * bracket(&x).powf(-rho)), grid)?;
        Ok(q.with_envelope(rho)?)
    }

    /// Records the smallest envelope constant for the given rate.
    pub fn with_envelope(mut self, rho: f64) -> Result<Self> {
        let c = decay_envelope(&self, rho)?;
        self.decay = Some(DecayEnvelope::new(c, rho)?);
        Ok(self)
    }

    pub fn scaled(&self, c: f64) -> PotentialField {
        PotentialField {
            grid: self.grid,
            values: self.values.par_iter().map(|m| m.scale(c)).collect(),
            decay: self.decay.map(|d| DecayEnvelope { c: d.c * c.abs(), rho: d.rho }),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|m| m.max_abs() == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.par_iter().map(|m| m.max_abs()).reduce(|| 0.0, f64::max)
    }

    /// Writes the DZL1 variant with 16 row-major entries per point.
    pub fn write_dzl1<W: Write>(&self, w: W) -> Result<()> {
        let flat: Vec<Complex64> = self.values.iter().flat_map(|m| m.0.iter().flatten().copied()).collect();
        write_dzl1(w, &self.grid, Space::Position, 16, &flat)
    }

    pub fn read_dzl1<R: BufRead>(r: R) -> Result<Self> {
        let raw = read_dzl1(r)?;
        if raw.components != 16 || raw.space != Space::Position {
            return Err(LabError::Format(format!(
                "potential files carry 16 position-space components, found {} in {} space",
                raw.components, raw.space
            )));
        }
        let values = raw
            .values
            .chunks_exact(16)
            .map(|c| {
                let mut m = Matrix4::zero();
                for (k, z) in c.iter().enumerate() {
                    m.0[k / 4][k % 4] = *z;
                }
                m
            })
            .collect();
        validate(raw.grid, values)
    }
}

/// Pointwise `Q(x) f(x)`.
pub fn apply_potential(q: &PotentialField, f: &SpinorField) -> Result<SpinorField> {
    f.require_space(Space::Position)?;
    if !q.grid.same_as(&f.grid) {
        return Err(LabError::GridMismatch);
    }
    Ok(f.map(|i, s| q.values[i].mul_vec(s)))
}

/// Smallest `C` with `|q_jk(x)| ≤ C ⟨x⟩^{-ρ}` at every lattice point.
pub fn decay_envelope(q: &PotentialField, rho: f64) -> Result<f64> {
    if !(rho > 1.0) {
        return Err(LabError::Domain(format!("decay rate must exceed 1, got {rho}")));
    }
    let g = q.grid;
    Ok(q.values
        .par_iter()
        .enumerate()
        .map(|(i, m)| m.max_abs() * bracket(&g.position(i)).powf(rho))
        .reduce(|| 0.0, f64::max))
}

pub fn hermiticity_check(q: &PotentialField) -> f64 {
    q.values.par_iter().map(|m| m.hermiticity_defect()).reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct LossYau {
    pub vector_potential: VectorField,
    pub weyl_mode: WeylField,
    /// `(0, φ)`: the Weyl mode in the lower two components.
    pub spinor: SpinorField,
}

impl LossYau {
    /// `Q = −α·A`.
    pub fn potential(&self) -> Result<PotentialField> {
        let q = ScalarField { grid: self.vector_potential.grid, data: vec![0.0; self.vector_potential.data.len()] };
        PotentialField::from_em(&q, &self.vector_potential)?.with_envelope(2.0)
    }
}

pub fn loss_yau(grid: &GridSpec) -> LossYau {
    loss_yau_with(grid, [Complex64::new(1.0, 0.0), CZERO])
}

/// `φ(x) = ⟨x⟩^{-3} (I + iσ·x) φ₀` and `A(x) = 3⟨x⟩^{-2} w(x)` with
/// `w = φ†σφ/|φ|²`. For unit `φ₀` the pair solves `σ·(D − A)φ = 0`
/// exactly, `|φ| = ⟨x⟩^{-2}` and `|A| = 3⟨x⟩^{-2}`.
pub fn loss_yau_with(grid: &GridSpec, phi0: Weyl) -> LossYau {
    let norm0 = (phi0[0].norm_sqr() + phi0[1].norm_sqr()).sqrt();
    let phi0 = [phi0[0] / norm0, phi0[1] / norm0];
    let sig = [1, 2, 3].map(|j| pauli(j).expect("index in range"));
    let (phi, a): (Vec<Weyl>, Vec<[f64; 3]>) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.position(i);
            let b2 = 1.0 + norm3(&x).powi(2);
            let m = Matrix2::identity() + sigma_dot(&x).scale_complex(Complex64::new(0.0, 1.0));
            let phi = m.mul_vec(&phi0).map(|z| z * b2.powf(-1.5));
            let mod2 = phi[0].norm_sqr() + phi[1].norm_sqr();
            let w = sig.map(|s| {
                let sp = s.mul_vec(&phi);
                (phi[0].conj() * sp[0] + phi[1].conj() * sp[1]).re / mod2
            });
            (phi, w.map(|c| 3.0 * c / b2))
        })
        .unzip();
    let spinor = SpinorField {
        grid: *grid,
        space: Space::Position,
        data: phi.iter().map(|p| [CZERO, CZERO, p[0], p[1]]).collect(),
    };
    LossYau {
        vector_potential: VectorField { grid: *grid, data: a },
        weyl_mode: WeylField { grid: *grid, data: phi },
        spinor,
    }
}

/// `σ·(D − A) φ`.
pub fn weyl_operator(a: &VectorField, phi: &WeylField) -> Result<WeylField> {
    if !a.grid.same_as(&phi.grid) {
        return Err(LabError::GridMismatch);
    }
    let mut out = phi.apply_sigma_d();
    out.data.par_iter_mut().enumerate().for_each(|(i, o)| {
        let t = apply_sigma_dot(&a.data[i], &phi.data[i]);
        o[0] -= t[0];
        o[1] -= t[1];
    });
    Ok(out)
}

/// `‖σ·(D − A)φ‖ / ‖φ‖`.
pub fn weyl_residual(a: &VectorField, phi: &WeylField) -> Result<f64> {
    let n = phi.norm();
    if n == 0.0 {
        return Err(LabError::Degenerate("zero Weyl field".into()));
    }
    Ok(weyl_operator(a, phi)?.norm() / n)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockIdentityReport {
    /// `‖(H₀ + Q) f‖ / ‖f‖` with `f = (0, φ)`, `Q = −α·A`.
    pub dirac_residual: f64,
    pub weyl_residual: f64,
    /// `‖(H₀ + Q) f − (σ·(D − A)φ, 0)‖ / ‖f‖`.
    pub embedding_gap: f64,
}

/// Compares the four-spinor residual of `(0, φ)` with the Weyl residual
/// placed in the upper components.
pub fn block_identity_check(a: &VectorField, phi: &WeylField) -> Result<BlockIdentityReport> {
    let grid = phi.grid;
    let f = SpinorField {
        grid,
        space: Space::Position,
        data: phi.data.iter().map(|p| [CZERO, CZERO, p[0], p[1]]).collect(),
    };
    let q = PotentialField::from_em(&ScalarField { grid, data: vec![0.0; grid.len()] }, a)?;
    let hf = apply_h0(&f)?.add(&apply_potential(&q, &f)?)?;
    let w = weyl_operator(a, phi)?;
    let embedded = SpinorField {
        grid,
        space: Space::Position,
        data: w.data.iter().map(|p| [p[0], p[1], CZERO, CZERO]).collect(),
    };
    let nf = f.norm();
    Ok(BlockIdentityReport {
        dirac_residual: hf.norm() / nf,
        weyl_residual: w.norm() / phi.norm(),
        embedding_gap: hf.sub(&embedded)?.norm() / nf,
    })
}

/// Built-in potential families addressable by name.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Zero,
    LossYau { scale: f64 },
    /// `amp ⟨x⟩^{-ρ} I`
    ScalarDecay { amp: f64, rho: f64 },
    /// `q ⟨x⟩^{-ρ} I − α·A` with the swirl `A = a ⟨x⟩^{-ρ-1} (−x₂, x₁, 0)`
    Em { q: f64, a: f64, rho: f64 },
    File { path: String },
}

impl PotentialSpec {
    pub fn build(&self, grid: &GridSpec) -> Result<PotentialField> {
        match self {
            PotentialSpec::Zero => Ok(PotentialField::zero(grid)),
            PotentialSpec::LossYau { scale } => Ok(loss_yau(grid).potential()?.scaled(*scale)),
            PotentialSpec::ScalarDecay { amp, rho } => PotentialField::scalar_decay(grid, *amp, *rho),
            PotentialSpec::Em { q, a, rho } => {
                let (q, a, rho) = (*q, *a, *rho);
                let qs = ScalarField::sample(|x| q * bracket(&x).powf(-rho), grid)?;
                let av = VectorField::sample(|x| {
                    let w = a * bracket(&x).powf(-rho - 1.0);
                    [-x[1] * w, x[0] * w, 0.0]
                }, grid)?;
                PotentialField::from_em(&qs, &av)?.with_envelope(rho)
            }
            PotentialSpec::File { path } => {
                let file = std::fs::File::open(path)?;
                let q = PotentialField::read_dzl1(std::io::BufReader::new(file))?;
                if !q.grid.same_as(grid) {
                    return Err(LabError::GridMismatch);
                }
                Ok(q)
            }
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "zero"),
            PotentialSpec::LossYau { scale } if *scale == 1.0 => write!(f, "loss-yau"),
            PotentialSpec::LossYau { scale } => write!(f, "loss-yau:scale={scale}"),
            PotentialSpec::ScalarDecay { amp, rho } => write!(f, "scalar-decay:amp={amp},rho={rho}"),
            PotentialSpec::Em { q, a, rho } => write!(f, "em:q={q},a={a},rho={rho}"),
            PotentialSpec::File { path } => write!(f, "file:{path}"),
        }
    }
}

fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| LabError::Parse(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| LabError::Parse(format!("bad number `{v}`")))?;
            if !v.is_finite() {
                return Err(LabError::Parse(format!("non-finite parameter `{kv}`")));
            }
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Parses `zero`, `loss-yau[:scale=s]`, `scalar-decay[:amp=..,rho=..]`,
/// `em[:q=..,a=..,rho=..]` and `file:PATH`.
impl FromStr for PotentialSpec {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        if name == "file" {
            if rest.is_empty() {
                return Err(LabError::Parse("file potential needs a path".into()));
            }
            return Ok(PotentialSpec::File { path: rest.to_string() });
        }
        let params = parse_params(rest)?;
        let get = |key: &str, default: f64, allowed: &[&str]| -> Result<f64> {
            for (k, _) in &params {
                if !allowed.contains(&k.as_str()) {
                    return Err(LabError::Parse(format!("unknown parameter `{k}` for `{name}`")));
                }
            }
            Ok(params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(default))
        };
        let spec = match name {
            "zero" => {
                get("", 0.0, &[])?;
                PotentialSpec::Zero
            }
            "loss-yau" => PotentialSpec::LossYau { scale: get("scale", 1.0, &["scale"])? },
            "scalar-decay" => {
                let keys = ["amp", "rho"];
                PotentialSpec::ScalarDecay { amp: get("amp", 0.1, &keys)?, rho: get("rho", 2.0, &keys)? }
            }
            "em" => {
                let keys = ["q", "a", "rho"];
                PotentialSpec::Em { q: get("q", 0.1, &keys)?, a: get("a", 0.1, &keys)?, rho: get("rho", 2.0, &keys)? }
            }
            other => return Err(LabError::Parse(format!("unknown potential `{other}`"))),
        };
        match spec {
            PotentialSpec::ScalarDecay { rho, .. } | PotentialSpec::Em { rho, .. } if rho <= 1.0 => {
                Err(LabError::Domain(format!("decay rate must exceed 1, got {rho}")))
            }
            _ => Ok(spec),
        }
    }
}
