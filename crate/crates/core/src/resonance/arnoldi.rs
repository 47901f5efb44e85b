//! Matrix-free block Krylov eigensolver with Rayleigh–Ritz restarts.
//!
//! The basis `V` is kept orthonormal and `W = T V` is stored alongside it, so
//! projections and residuals never need extra operator applications.
//! Expansion vectors are the residuals of the wanted Ritz pairs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::clifford::Spinor;
use crate::field::{random_field, GridSpec, SpinorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenConfig {
    pub count: usize,
    pub block: usize,
    pub max_basis: usize,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { count: 8, block: 4, max_basis: 32, tol: 1e-8, max_iterations: 500, seed: 20240301 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenReport {
    /// Sorted by modulus, largest first.
    pub eigenvalues: Vec<Complex64>,
    pub eigenfields: Vec<SpinorField>,
    /// `‖Tf − λf‖ / ‖f‖`, recomputed with a fresh application of `T`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub applications: usize,
    pub converged: bool,
}

const CHUNK: usize = 1024;

/// `G[a][b] = ⟨u_a, v_b⟩` with the grid measure, conjugate-linear in `u`.
/// One pass over the data; the chunked reduction order is fixed.
fn gram(us: &[SpinorField], vs: &[SpinorField]) -> DMatrix<Complex64> {
    let (p, q) = (us.len(), vs.len());
    if p == 0 || q == 0 {
        return DMatrix::zeros(p, q);
    }
    let n = us[0].data.len();
    let parts: Vec<Vec<Complex64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(n);
            let mut acc = vec![Complex64::new(0.0, 0.0); p * q];
            for (a, u) in us.iter().enumerate() {
                let ua = &u.data[range.clone()];
                for (b, v) in vs.iter().enumerate() {
                    let vb = &v.data[range.clone()];
                    let (mut re, mut im) = (0.0, 0.0);
                    for (x, y) in ua.iter().zip(vb) {
                        for t in 0..4 {
                            re += x[t].re * y[t].re + x[t].im * y[t].im;
                            im += x[t].re * y[t].im - x[t].im * y[t].re;
                        }
                    }
                    acc[a * q + b] = Complex64::new(re, im);
                }
            }
            acc
        })
        .collect();
    let dv = us[0].grid.measure(us[0].space);
    let mut g = DMatrix::zeros(p, q);
    for part in parts {
        for a in 0..p {
            for b in 0..q {
                g[(a, b)] += part[a * q + b];
            }
        }
    }
    g * Complex64::new(dv, 0.0)
}

/// Columns of `coeffs` as combinations of `fields`: `out_c = Σ_j coeffs[j,c] f_j`.
fn combine_many(fields: &[&SpinorField], coeffs: &DMatrix<Complex64>) -> Vec<SpinorField> {
    let first = fields[0];
    let p = coeffs.ncols();
    debug_assert_eq!(coeffs.nrows(), fields.len());
    let n = first.data.len();
    let zero = Complex64::new(0.0, 0.0);
    let chunks: Vec<Vec<Vec<Spinor>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(n);
            (0..p)
                .map(|col| {
                    let mut out = vec![[zero; 4]; range.len()];
                    for (j, f) in fields.iter().enumerate() {
                        let w = coeffs[(j, col)];
                        if w == zero {
                            continue;
                        }
                        for (o, v) in out.iter_mut().zip(&f.data[range.clone()]) {
                            for t in 0..4 {
                                o[t] += w * v[t];
                            }
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    let mut data: Vec<Vec<Spinor>> = (0..p).map(|_| Vec::with_capacity(n)).collect();
    for chunk in chunks {
        for (d, part) in data.iter_mut().zip(chunk) {
            d.extend(part);
        }
    }
    data.into_iter().map(|data| SpinorField { grid: first.grid, space: first.space, data }).collect()
}

/// Orthonormalizes `block` against the orthonormal `basis` with block
/// Gram–Schmidt, repeated once when a pass removes most of a vector, then
/// within itself. Returns the new block, the coefficients on `basis`
/// (`basis.len() × block.len()`) and the upper-triangular coefficients on
/// the new block, so that `block = basis C + new R`. Columns that collapse
/// below `floor` are replaced by `fresh` directions with a zero row in `R`.
fn orthonormalize_block(
    block: Vec<SpinorField>,
    basis: &[SpinorField],
    floor: f64,
    fresh: &mut dyn FnMut(&[SpinorField]) -> SpinorField,
) -> (Vec<SpinorField>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let (m, b) = (basis.len(), block.len());
    let mut coef = DMatrix::<Complex64>::zeros(m, b);
    let before: Vec<f64> = block.iter().map(|f| f.norm()).collect();
    let mut block = block;
    if m > 0 {
        for pass in 0..2 {
            if pass == 1 && block.iter().zip(&before).all(|(f, b0)| f.norm() > 0.5 * b0) {
                break;
            }
            let c = gram(basis, &block);
            let mut mix = DMatrix::zeros(m + b, b);
            mix.view_mut((0, 0), (m, b)).copy_from(&(-&c));
            mix.view_mut((m, 0), (b, b)).fill_with_identity();
            let fields: Vec<&SpinorField> = basis.iter().chain(block.iter()).collect();
            block = combine_many(&fields, &mix);
            coef += c;
        }
    }
    let mut r = DMatrix::<Complex64>::zeros(b, b);
    let mut out: Vec<SpinorField> = Vec::with_capacity(b);
    for (j, mut f) in block.into_iter().enumerate() {
        for _ in 0..2 {
            for (i, o) in out.iter().enumerate() {
                let c = f.inner(o).expect("same grid");
                r[(i, j)] += c;
                f = f.axpy(-c, o).expect("same grid");
            }
        }
        let n = f.norm();
        if n > floor {
            r[(j, j)] = Complex64::new(n, 0.0);
            out.push(f.scale_real(1.0 / n));
        } else {
            let mut all: Vec<SpinorField> = basis.to_vec();
            all.extend(out.iter().cloned());
            out.push(fresh(&all));
        }
    }
    (out, coef, r)
}

/// Eigenvalues and unit eigenvectors of a small dense matrix via complex Schur.
fn small_eig(h: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let m = h.nrows();
    if h.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok((vec![Complex64::new(0.0, 0.0); m], DMatrix::identity(m, m)));
    }
    let schur = nalgebra::linalg::Schur::try_new(h.clone(), f64::EPSILON, 100_000)
        .ok_or(LabError::Degenerate("Schur iteration on the projected matrix failed".into()))?;
    let (q, t) = schur.unpack();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut z = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..m {
        let lambda = t[(k, k)];
        z[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * z[(j, k)];
            }
            let d = t[(i, i)] - lambda;
            // Repeated eigenvalue: keep the vectors independent.
            z[(i, k)] = if d.norm() < 1e-12 * scale { Complex64::new(0.0, 0.0) } else { -s / d };
        }
    }
    let mut y = &q * z;
    for k in 0..m {
        let n = y.column(k).norm();
        if n > 0.0 {
            y.column_mut(k).unscale_mut(n);
        }
    }
    Ok(((0..m).map(|k| t[(k, k)]).collect(), y))
}

/// Top `cfg.count` eigenpairs of the linear map `op` by modulus.
///
/// Maintains a Krylov decomposition `T V = V H + F E` with `[V F]`
/// orthonormal, so the Ritz residual of `(θ, y)` is `‖E y‖`. Each sweep
/// appends `F` to the basis and orthogonalizes `T F` into the next `F`;
/// restarts keep the leading Ritz vectors, whose span is invariant under `H`.
pub fn block_eigs<F>(op: F, grid: &GridSpec, cfg: &EigenConfig) -> Result<EigenReport>
where
    F: Fn(&SpinorField) -> Result<SpinorField>,
{
    let k = cfg.count;
    let b = cfg.block.max(1);
    if k == 0 {
        return Err(LabError::Precondition("eigenvalue count must be at least 1".into()));
    }
    if cfg.max_basis < k + 2 * b {
        return Err(LabError::Precondition(format!("basis size {} too small for {} pairs with block {}", cfg.max_basis, k, b)));
    }
    if grid.len() * 4 < cfg.max_basis + b {
        return Err(LabError::Precondition("grid too small for the requested basis".into()));
    }

    let mut seed = cfg.seed;
    let mut fresh = |basis: &[SpinorField]| -> SpinorField {
        loop {
            let mut f = random_field(grid, seed);
            seed = seed.wrapping_add(1);
            let before = f.norm();
            for _ in 0..2 {
                let c = gram(basis, std::slice::from_ref(&f));
                for (j, bv) in basis.iter().enumerate() {
                    f = f.axpy(-c[(j, 0)], bv).expect("same grid");
                }
            }
            let n = f.norm();
            if n > 1e-3 * before {
                return f.scale_real(1.0 / n);
            }
        }
    };

    let mut v: Vec<SpinorField> = Vec::new();
    let mut h = DMatrix::<Complex64>::zeros(0, 0);
    let mut e = DMatrix::<Complex64>::zeros(b, 0);
    let mut f: Vec<SpinorField> = Vec::new();
    for _ in 0..b {
        let x = fresh(&f);
        f.push(x);
    }
    // Operator scale seen so far, for the breakdown threshold.
    let mut scale: f64 = 0.0;
    let mut applications = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut pairs: Vec<(Complex64, DVector<Complex64>)>;
    loop {
        // Append F and orthogonalize T F into the next block.
        let m = v.len();
        let mut tf = Vec::with_capacity(b);
        for x in &f {
            applications += 1;
            let y = op(x)?;
            scale = scale.max(y.norm());
            tf.push(y);
        }
        v.extend(f.drain(..));
        let floor = 1e-13 * scale.max(f64::MIN_POSITIVE);
        let (next, c, r) = orthonormalize_block(tf, &v, floor, &mut fresh);
        let mn = m + b;
        let mut hn = DMatrix::zeros(mn, mn);
        hn.view_mut((0, 0), (m, m)).copy_from(&h);
        hn.view_mut((m, 0), (b, m)).copy_from(&e);
        hn.view_mut((0, m), (mn, b)).copy_from(&c);
        let mut en = DMatrix::zeros(b, mn);
        en.view_mut((0, m), (b, b)).copy_from(&r);
        h = hn;
        e = en;
        f = next;
        iterations += 1;

        let (theta, y) = small_eig(&h)?;
        let mut order: Vec<usize> = (0..mn).collect();
        order.sort_by(|&a, &c| {
            theta[c].norm().total_cmp(&theta[a].norm()).then(theta[c].re.total_cmp(&theta[a].re)).then(theta[a].im.total_cmp(&theta[c].im))
        });
        pairs = order.iter().take(k.min(mn)).map(|&i| (theta[i], y.column(i).into_owned())).collect();
        let res: Vec<f64> = pairs.iter().map(|(_, y)| (&e * y).norm()).collect();
        if pairs.len() == k && res.iter().all(|r| *r <= cfg.tol) {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }

        if mn + b > cfg.max_basis {
            let keep = (k + b).min(mn);
            let mut yk = DMatrix::<Complex64>::zeros(mn, keep);
            for (c, &idx) in order.iter().take(keep).enumerate() {
                yk.set_column(c, &y.column(idx));
            }
            let q = yk.qr().q();
            let vr: Vec<&SpinorField> = v.iter().collect();
            v = combine_many(&vr, &q);
            h = q.adjoint() * &h * &q;
            e = &e * &q;
        }
    }

    let vr: Vec<&SpinorField> = v.iter().collect();
    let mut ycols = DMatrix::zeros(v.len(), pairs.len());
    for (c, (_, y)) in pairs.iter().enumerate() {
        ycols.set_column(c, y);
    }
    let xs = combine_many(&vr, &ycols);
    let mut eigenvalues = Vec::new();
    let mut eigenfields = Vec::new();
    let mut residuals = Vec::new();
    for ((theta, _), x) in pairs.into_iter().zip(xs) {
        let nx = x.norm();
        let x = if nx > 0.0 { x.scale_real(1.0 / nx) } else { x };
        applications += 1;
        let tx = op(&x)?;
        residuals.push(tx.axpy(-theta, &x)?.norm());
        eigenvalues.push(theta);
        eigenfields.push(x);
    }
    Ok(EigenReport { eigenvalues, eigenfields, residuals, iterations, applications, converged })
}
