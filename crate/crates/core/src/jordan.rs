//! Time-varying change of coordinates that makes the detectable block cooperative.
//!
//! `F_no = V J V⁻¹` with `J` real block-diagonal (1x1 real eigenvalues, 2x2
//! scaled rotations). A block-diagonal orthogonal factor `Q_t` undoes the
//! signs/rotations, `P_t = Q_t V⁻¹`, leaving a constant diagonal-type `Λ`:
//!
//! * DT: `Λ = P_{t+1} F_no P_t⁻¹`, non-negative and Schur;
//! * CT: `Λ P_t = Ṗ_t + P_t F_no`, Metzler and Hurwitz.
//!
//! Only semisimple spectra are handled; (near-)defective blocks are rejected.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::TimeDomain;

/// Default bound on the eigenvector-matrix condition number.
pub const DEFAULT_COND_MAX: f64 = 1e6;

const REAL_TOL: f64 = 1e-9;
const CLUSTER_TOL: f64 = 1e-6;
const EIGENSPACE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    /// Real eigenvalue.
    Real { eigenvalue: f64 },
    /// Conjugate pair `modulus · e^{±i·angle}` with `angle ∈ (0, π)`.
    Rotation { modulus: f64, angle: f64 },
}

impl Block {
    fn size(&self) -> usize {
        match self {
            Block::Real { .. } => 1,
            Block::Rotation { .. } => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JordanTransform {
    pub domain: TimeDomain,
    pub lambda: Matrix,
    pub v: Matrix,
    pub v_inv: Matrix,
    /// Real block-diagonal form with `V · real_form · V⁻¹ = F_no`.
    pub real_form: Matrix,
    /// Empty when the block was already cooperative (then `P_t ≡ I`).
    pub blocks: Vec<Block>,
    /// `‖P_t‖₂ + ‖P_t⁻¹‖₂ ≤ sigma` for every `t`.
    pub sigma: f64,
    pub eigvec_cond: f64,
    pub reconstruction_residual: f64,
}

pub fn build_transform(f_no: &Matrix, domain: TimeDomain, cond_max: f64) -> Result<JordanTransform> {
    let n = f_no.nrows();
    if f_no.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: f_no.ncols(),
        });
    }
    if n == 0 {
        return Ok(JordanTransform {
            domain,
            lambda: Matrix::zeros(0, 0),
            v: Matrix::zeros(0, 0),
            v_inv: Matrix::zeros(0, 0),
            real_form: Matrix::zeros(0, 0),
            blocks: Vec::new(),
            sigma: 0.0,
            eigvec_cond: 1.0,
            reconstruction_residual: 0.0,
        });
    }
    if !domain.is_stable(f_no, 0.0) {
        return Err(Error::NotStable);
    }
    if domain.is_cooperative(f_no) {
        let eye = Matrix::identity(n, n);
        return Ok(JordanTransform {
            domain,
            lambda: f_no.clone(),
            v: eye.clone(),
            v_inv: eye,
            real_form: f_no.clone(),
            blocks: Vec::new(),
            sigma: 2.0,
            eigvec_cond: 1.0,
            reconstruction_residual: 0.0,
        });
    }

    let scale = linalg::norm_2(f_no).max(f64::MIN_POSITIVE);
    let clusters = cluster_eigenvalues(&linalg::spectrum(f_no)?.eigenvalues, scale);

    let mut blocks = Vec::with_capacity(n);
    let mut columns: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    for (center, mult) in clusters {
        let space = eigenspace(f_no, center, mult, scale, cond_max)?;
        for v in space {
            if center.im == 0.0 {
                blocks.push(Block::Real {
                    eigenvalue: center.re,
                });
                columns.push(v.map(|z| z.re));
            } else {
                blocks.push(Block::Rotation {
                    modulus: center.norm(),
                    angle: center.arg(),
                });
                columns.push(v.map(|z| z.re));
                columns.push(v.map(|z| -z.im));
            }
        }
    }

    let v = Matrix::from_columns(&columns);
    let v_inv = v.clone().try_inverse().ok_or(Error::NearDefective {
        cond: f64::INFINITY,
        cond_max,
    })?;
    let eigvec_cond = linalg::norm_2(&v) * linalg::norm_2(&v_inv);
    if !(eigvec_cond <= cond_max) {
        return Err(Error::NearDefective {
            cond: eigvec_cond,
            cond_max,
        });
    }
    let real_form = assemble_real_form(&blocks, n);
    let reconstruction_residual = (&v * &real_form * &v_inv - f_no).norm();
    if reconstruction_residual > 1e-9 * f_no.norm() {
        return Err(Error::NearDefective {
            cond: eigvec_cond,
            cond_max,
        });
    }
    let lambda = assemble_lambda(&blocks, domain, n);
    Ok(JordanTransform {
        domain,
        lambda,
        sigma: linalg::norm_2(&v) + linalg::norm_2(&v_inv),
        v,
        v_inv,
        real_form,
        blocks,
        eigvec_cond,
        reconstruction_residual,
    })
}

/// Groups eigenvalues into (representative, multiplicity), keeping one
/// representative per conjugate pair (positive imaginary part). Sorted by
/// `(re, |im|)`, ties by first occurrence.
fn cluster_eigenvalues(eigs: &[Complex64], scale: f64) -> Vec<(Complex64, usize)> {
    let snapped: Vec<Complex64> = eigs
        .iter()
        .map(|z| {
            if z.im.abs() <= REAL_TOL * scale {
                Complex64::new(z.re, 0.0)
            } else {
                *z
            }
        })
        .filter(|z| z.im >= 0.0)
        .collect();
    let mut clusters: Vec<(Complex64, usize, usize)> = Vec::new();
    for (idx, z) in snapped.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|(c, _, _)| (c.im == 0.0) == (z.im == 0.0) && (*c - z).norm() <= CLUSTER_TOL * scale)
        {
            Some((c, m, _)) => {
                *c = (*c * *m as f64 + z) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => clusters.push((*z, 1, idx)),
        }
    }
    clusters.sort_by(|a, b| {
        a.0.re
            .total_cmp(&b.0.re)
            .then(a.0.im.abs().total_cmp(&b.0.im.abs()))
            .then(a.2.cmp(&b.2))
    });
    clusters.into_iter().map(|(c, m, _)| (c, m)).collect()
}

/// `mult` independent (complex) eigenvectors for eigenvalue `center`, each
/// scaled so its largest-modulus entry is exactly `1`.
fn eigenspace(
    f: &Matrix,
    center: Complex64,
    mult: usize,
    scale: f64,
    cond_max: f64,
) -> Result<Vec<nalgebra::DVector<Complex64>>> {
    let n = f.nrows();
    let shifted: DMatrix<Complex64> =
        f.map(|v| Complex::new(v, 0.0)) - DMatrix::<Complex64>::identity(n, n) * center;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let worst = sv[order[mult - 1]];
    if worst > EIGENSPACE_TOL * scale.max(1.0) {
        // Fewer independent eigenvectors than the algebraic multiplicity.
        return Err(Error::NearDefective {
            cond: f64::INFINITY,
            cond_max,
        });
    }
    Ok(order[..mult]
        .iter()
        .map(|&i| {
            let v = v_t.row(i).adjoint();
            // First entry of (numerically) maximal modulus becomes exactly 1.
            let largest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let k = v
                .iter()
                .position(|z| z.norm() >= largest * (1.0 - 1e-9))
                .expect("non-empty vector");
            let mut out = &v / v[k];
            out[k] = Complex64::new(1.0, 0.0);
            out
        })
        .collect())
}

fn assemble_real_form(blocks: &[Block], n: usize) -> Matrix {
    let mut j = Matrix::zeros(n, n);
    let mut k = 0;
    for b in blocks {
        match *b {
            Block::Real { eigenvalue } => j[(k, k)] = eigenvalue,
            Block::Rotation { modulus, angle } => {
                let (s, c) = angle.sin_cos();
                j[(k, k)] = modulus * c;
                j[(k, k + 1)] = -modulus * s;
                j[(k + 1, k)] = modulus * s;
                j[(k + 1, k + 1)] = modulus * c;
            }
        }
        k += b.size();
    }
    j
}

fn assemble_lambda(blocks: &[Block], domain: TimeDomain, n: usize) -> Matrix {
    let mut l = Matrix::zeros(n, n);
    let mut k = 0;
    for b in blocks {
        match (*b, domain) {
            (Block::Real { eigenvalue }, TimeDomain::Dt) => l[(k, k)] = eigenvalue.abs(),
            (Block::Real { eigenvalue }, TimeDomain::Ct) => l[(k, k)] = eigenvalue,
            (Block::Rotation { modulus, .. }, TimeDomain::Dt) => {
                l[(k, k)] = modulus;
                l[(k + 1, k + 1)] = modulus;
            }
            (Block::Rotation { modulus, angle }, TimeDomain::Ct) => {
                let re = modulus * angle.cos();
                l[(k, k)] = re;
                l[(k + 1, k + 1)] = re;
            }
        }
        k += b.size();
    }
    l
}

fn rotation(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, -s], [s, c]]
}

impl JordanTransform {
    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    /// Orthogonal block-diagonal factor `Q_t` (and `Q̇_t` in CT).
    fn q_factor(&self, t: f64, derivative: bool) -> Matrix {
        let n = self.dim();
        if self.blocks.is_empty() {
            return if derivative {
                Matrix::zeros(n, n)
            } else {
                Matrix::identity(n, n)
            };
        }
        let mut q = Matrix::zeros(n, n);
        let mut k = 0;
        for b in &self.blocks {
            match (*b, self.domain) {
                (Block::Real { eigenvalue }, TimeDomain::Dt) => {
                    q[(k, k)] = if eigenvalue < 0.0 && (t.round() as i64).rem_euclid(2) == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                }
                (Block::Real { .. }, TimeDomain::Ct) => {
                    q[(k, k)] = if derivative { 0.0 } else { 1.0 };
                }
                (Block::Rotation { angle, .. }, TimeDomain::Dt) => {
                    let r = rotation(-angle * t.round());
                    set_2x2(&mut q, k, r);
                }
                (Block::Rotation { modulus, angle }, TimeDomain::Ct) => {
                    let beta = modulus * angle.sin();
                    let r = rotation(-beta * t);
                    if derivative {
                        // d/dt R(-βt) = -β S R(-βt), S = [[0,-1],[1,0]]
                        let d = [
                            [beta * r[1][0], beta * r[1][1]],
                            [-beta * r[0][0], -beta * r[0][1]],
                        ];
                        set_2x2(&mut q, k, d);
                    } else {
                        set_2x2(&mut q, k, r);
                    }
                }
            }
            k += b.size();
        }
        q
    }

    /// Orthogonal part of the transform at `t` (DT times are rounded to the nearest step).
    pub fn q_at(&self, t: f64) -> Matrix {
        self.q_factor(t, false)
    }

    /// `(P_t, P_t⁻¹)`.
    pub fn transform_at(&self, t: f64) -> (Matrix, Matrix) {
        let q = self.q_factor(t, false);
        (&q * &self.v_inv, &self.v * q.transpose())
    }

    /// `Ṗ_t` from the per-block analytic derivative (CT only; zero in DT).
    pub fn derivative_at(&self, t: f64) -> Matrix {
        match self.domain {
            TimeDomain::Ct => self.q_factor(t, true) * &self.v_inv,
            TimeDomain::Dt => Matrix::zeros(self.dim(), self.dim()),
        }
    }

    /// `Σ_t`: `P_t` in CT, `P_{t+1}` in DT.
    pub fn sigma_factor(&self, t: f64) -> Matrix {
        match self.domain {
            TimeDomain::Ct => self.transform_at(t).0,
            TimeDomain::Dt => self.transform_at(t + 1.0).0,
        }
    }
}

fn set_2x2(m: &mut Matrix, k: usize, b: [[f64; 2]; 2]) {
    for i in 0..2 {
        for j in 0..2 {
            m[(k + i, k + j)] = b[i][j];
        }
    }
}
