//! Observability decomposition: split the state into a part seen by the output
//! and a detectable remainder that the output never sees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{LtiSystem, TimeDomain};

/// How the observable complement of `ker O` is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisStrategy {
    /// Unit vectors at the pivot columns of `O`; kernel columns scaled so their
    /// largest-magnitude entry is `+1`.
    #[default]
    Pivot,
    /// Orthonormal row space of `O` and orthonormal kernel.
    Orthonormal,
}

/// Minimum reciprocal condition accepted for the basis matrix.
const BASIS_RCOND_MIN: f64 = 1e-12;

/// `M = [M_o M_no]`, its inverse `N = [N_o; N_no]`, and the blocks of the
/// transformed system
///
/// ```text
/// z_o⁺  = F_o z_o + N_o u + D_o d
/// z_no⁺ = F_noo z_o + F_no z_no + N_no u + D_no d
/// y     = H_o z_o + W w
/// ```
#[derive(Debug, Clone)]
pub struct ObservabilityDecomposition {
    pub domain: TimeDomain,
    pub strategy: BasisStrategy,
    pub obsv: Matrix,
    pub n_o: usize,
    pub n_no: usize,
    pub basis_o: Matrix,
    pub basis_no: Matrix,
    pub basis: Matrix,
    pub proj: Matrix,
    pub proj_o: Matrix,
    pub proj_no: Matrix,
    pub f_o: Matrix,
    pub f_noo: Matrix,
    pub f_no: Matrix,
    pub d_o: Matrix,
    pub d_no: Matrix,
    pub h_o: Matrix,
}

/// Stack of `H, HF, …, HF^(n-1)`.
pub fn observability_matrix(f: &Matrix, h: &Matrix) -> Result<Matrix> {
    let n = f.nrows();
    if f.ncols() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "observability_matrix: F is {}x{}, H is {}x{}",
            f.nrows(),
            f.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    let mut blocks = Vec::with_capacity(n);
    let mut cur = h.clone();
    for _ in 0..n {
        let next = &cur * f;
        blocks.push(cur);
        cur = next;
    }
    Ok(linalg::vstack(&blocks.iter().collect::<Vec<_>>()))
}

/// Greedy column-pivoted Gram-Schmidt: indices of `count` independent columns, ascending.
fn pivot_columns(m: &Matrix, count: usize) -> Vec<usize> {
    let mut work = m.clone();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let best = (0..work.ncols())
            .filter(|j| !chosen.contains(j))
            .max_by(|&a, &b| work.column(a).norm().total_cmp(&work.column(b).norm()))
            .expect("rank never exceeds the column count");
        let q = work.column(best).normalize();
        for j in 0..work.ncols() {
            let c = q.dot(&work.column(j));
            let updated = work.column(j) - &q * c;
            work.set_column(j, &updated);
        }
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

/// Entries below this (after scaling to a unit max entry) are SVD round-off.
const SNAP_TOL: f64 = 1e-14;

/// Rescales each column so its largest-magnitude entry is exactly `+1`, then
/// flushes round-off entries to zero.
fn normalize_max_entry(k: &Matrix) -> Matrix {
    let mut out = k.clone();
    for mut col in out.column_iter_mut() {
        let (idx, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        let pivot = col[idx];
        col /= pivot;
        col[idx] = 1.0;
        for v in col.iter_mut() {
            if v.abs() < SNAP_TOL {
                *v = 0.0;
            }
        }
    }
    out
}

pub fn decompose(
    sys: &LtiSystem,
    rel_tol: f64,
    strategy: BasisStrategy,
) -> Result<ObservabilityDecomposition> {
    let n = sys.nx();
    let obsv = observability_matrix(&sys.f, &sys.h)?;
    let n_o = linalg::numerical_rank(&obsv, rel_tol);
    if n_o == 0 {
        return Err(Error::ZeroObservableRank);
    }
    let n_no = n - n_o;
    let kernel = linalg::kernel_basis(&obsv, rel_tol);
    let (basis_o, basis_no) = match strategy {
        BasisStrategy::Pivot => {
            let cols = pivot_columns(&obsv, n_o);
            let mut mo = Matrix::zeros(n, n_o);
            for (k, &j) in cols.iter().enumerate() {
                mo[(j, k)] = 1.0;
            }
            (mo, normalize_max_entry(&kernel))
        }
        BasisStrategy::Orthonormal => (linalg::row_space_basis(&obsv, rel_tol), kernel),
    };
    let basis = linalg::hstack(&[&basis_o, &basis_no]);
    let proj = linalg::invert(&basis, BASIS_RCOND_MIN)?;
    let proj_o = proj.rows(0, n_o).into_owned();
    let proj_no = proj.rows(n_o, n_no).into_owned();

    let f_no = &proj_no * &sys.f * &basis_no;
    if n_no > 0 && !sys.domain.is_stable(&f_no, 0.0) {
        let worst = linalg::spectrum(&f_no)?
            .eigenvalues
            .into_iter()
            .max_by(|a, b| match sys.domain {
                TimeDomain::Ct => a.re.total_cmp(&b.re),
                TimeDomain::Dt => a.norm().total_cmp(&b.norm()),
            })
            .expect("non-empty block");
        return Err(Error::NotDetectable(worst.to_string()));
    }

    Ok(ObservabilityDecomposition {
        domain: sys.domain,
        strategy,
        f_o: &proj_o * &sys.f * &basis_o,
        f_noo: &proj_no * &sys.f * &basis_o,
        f_no,
        d_o: &proj_o * &sys.d,
        d_no: &proj_no * &sys.d,
        h_o: &sys.h * &basis_o,
        obsv,
        n_o,
        n_no,
        basis_o,
        basis_no,
        basis,
        proj,
        proj_o,
        proj_no,
    })
}

/// Residuals and verdicts backing a decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub inverse_residual: f64,
    pub obsv_kernel_residual: f64,
    pub output_kernel_residual: f64,
    pub decoupling_residual: f64,
    pub observable_rank: usize,
    pub n_o: usize,
    pub n_no: usize,
    pub f_no_stable: bool,
    pub inverse_ok: bool,
    pub obsv_kernel_ok: bool,
    pub output_kernel_ok: bool,
    pub decoupling_ok: bool,
    pub observable_pair_ok: bool,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.inverse_ok
            && self.obsv_kernel_ok
            && self.output_kernel_ok
            && self.decoupling_ok
            && self.observable_pair_ok
            && self.f_no_stable
    }
}

/// Recomputes every structural property the observers rely on.
///
/// Residuals are Frobenius norms; each is compared with `tol` times the scale
/// of the product it comes from.
pub fn verify_decomposition(
    dec: &ObservabilityDecomposition,
    f: &Matrix,
    h: &Matrix,
    tol: f64,
) -> CertificateReport {
    let n = dec.basis.nrows();
    let inverse_residual = (&dec.proj * &dec.basis - Matrix::identity(n, n)).norm();
    let obsv_kernel_residual = (&dec.obsv * &dec.basis_no).norm();
    let output_kernel_residual = (h * &dec.basis_no).norm();
    let decoupling_residual = (&dec.proj_o * f * &dec.basis_no).norm();
    let scale_no = dec.basis_no.norm().max(1.0);
    let observable_rank = observability_matrix(&dec.f_o, &dec.h_o)
        .map(|o| linalg::numerical_rank(&o, linalg::DEFAULT_RANK_TOL))
        .unwrap_or(0);
    let f_no_stable = dec.n_no == 0 || dec.domain.is_stable(&dec.f_no, 0.0);
    CertificateReport {
        inverse_residual,
        obsv_kernel_residual,
        output_kernel_residual,
        decoupling_residual,
        observable_rank,
        n_o: dec.n_o,
        n_no: dec.n_no,
        f_no_stable,
        inverse_ok: inverse_residual <= tol * (1.0 + dec.proj.norm() * dec.basis.norm()),
        obsv_kernel_ok: obsv_kernel_residual <= tol * (1.0 + dec.obsv.norm() * scale_no),
        output_kernel_ok: output_kernel_residual <= tol * (1.0 + h.norm() * scale_no),
        decoupling_ok: decoupling_residual
            <= tol * (1.0 + dec.proj_o.norm() * f.norm() * scale_no),
        observable_pair_ok: observable_rank == dec.n_o,
    }
}
