//! Dense real matrix primitives shared by every stage of the design.
//!
//! Matrices are plain `nalgebra` dynamic matrices. The interval helpers here
//! (`pos_neg_split`, `interval_image`) are the only way bounds are pushed
//! through linear maps anywhere in the crate.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Singular values below this fraction of the largest one count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Largest dimension (of `vec(X)`'s factors) solved by Kronecker vectorization.
pub const KRONECKER_MAX_DIM: usize = 12;

/// Relative gap under which an eigenvalue of `P` and one of `-Q` are considered equal.
pub const SPECTRA_OVERLAP_TOL: f64 = 1e-9;

/// Eigenvalues of a square matrix plus the two stability summaries.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    pub max_real_part: f64,
}

impl SpectrumReport {
    pub fn is_hurwitz(&self, margin: f64) -> bool {
        self.max_real_part < -margin
    }

    pub fn is_schur(&self, margin: f64) -> bool {
        self.spectral_radius < 1.0 - margin
    }
}

/// Splits `m` into its positive part and the non-negative remainder, `m = plus - minus`.
pub fn pos_neg_split(m: &Matrix) -> (Matrix, Matrix) {
    let plus = m.map(|v| v.max(0.0));
    let minus = m.map(|v| (-v).max(0.0));
    (plus, minus)
}

pub fn pos_part(m: &Matrix) -> Matrix {
    m.map(|v| v.max(0.0))
}

pub fn neg_part(m: &Matrix) -> Matrix {
    m.map(|v| (-v).max(0.0))
}

/// Entrywise `|m|`, i.e. `m⁺ + m⁻`.
pub fn abs_part(m: &Matrix) -> Matrix {
    m.abs()
}

/// Tight box image of `[low, high]` under `a`.
pub fn interval_image(a: &Matrix, low: &Vector, high: &Vector) -> Result<(Vector, Vector)> {
    if low.len() != a.ncols() || high.len() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "interval_image: matrix has {} columns, bounds have {} and {} entries",
            a.ncols(),
            low.len(),
            high.len()
        )));
    }
    if let Some(i) = (0..low.len()).find(|&i| !(low[i] <= high[i])) {
        return Err(Error::UnorderedBounds(format!(
            "component {i}: {} > {}",
            low[i], high[i]
        )));
    }
    Ok(split_image(a, low, high))
}

/// Same as [`interval_image`] without the checks; callers guarantee shapes and ordering.
pub(crate) fn split_image(a: &Matrix, low: &Vector, high: &Vector) -> (Vector, Vector) {
    let (p, n) = pos_neg_split(a);
    (&p * low - &n * high, &p * high - &n * low)
}

/// Orthonormal basis of `ker m`, one column per null direction.
///
/// Numerical rank counts singular values above `rel_tol` times the largest one.
pub fn kernel_basis(m: &Matrix, rel_tol: f64) -> Matrix {
    let (_, v, rank) = full_svd(m, rel_tol);
    let n = m.ncols();
    v.columns(rank, n - rank).into_owned()
}

/// Orthonormal basis of the row space of `m` (the orthogonal complement of its kernel).
pub fn row_space_basis(m: &Matrix, rel_tol: f64) -> Matrix {
    let (_, v, rank) = full_svd(m, rel_tol);
    v.columns(0, rank).into_owned()
}

pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> usize {
    full_svd(m, rel_tol).2
}

/// Sorted singular values, the full right singular basis (as columns) and the numerical rank.
fn full_svd(m: &Matrix, rel_tol: f64) -> (Vec<f64>, Matrix, usize) {
    let n = m.ncols();
    // nalgebra only returns min(rows, cols) right singular vectors; pad with zero rows.
    let padded = if m.nrows() < n {
        let mut p = Matrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let largest = order.first().map(|&i| sv[i]).unwrap_or(0.0);
    let rank = if largest == 0.0 {
        0
    } else {
        order.iter().filter(|&&i| sv[i] > rel_tol * largest).count()
    };
    let mut v = Matrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &v_t.row(i).transpose());
    }
    (order.iter().map(|&i| sv[i]).collect(), v, rank)
}

/// Dense non-symmetric eigenvalues through the real Schur form.
pub fn spectrum(m: &Matrix) -> Result<SpectrumReport> {
    ensure_square(m)?;
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        spectral_radius,
        max_real_part,
    })
}

pub fn is_metzler(m: &Matrix) -> bool {
    m.nrows() == m.ncols()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] >= 0.0))
}

pub fn is_nonnegative(m: &Matrix) -> bool {
    m.iter().all(|&v| v >= 0.0)
}

/// `max Re λ < -margin`. Non-square input is never Hurwitz.
pub fn is_hurwitz(m: &Matrix, margin: f64) -> bool {
    spectrum(m).map(|s| s.is_hurwitz(margin)).unwrap_or(false)
}

/// `ρ < 1 - margin`. Non-square input is never Schur.
pub fn is_schur(m: &Matrix, margin: f64) -> bool {
    spectrum(m).map(|s| s.is_schur(margin)).unwrap_or(false)
}

fn ensure_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_sylvester_shapes(p: &Matrix, q: &Matrix, r: &Matrix) -> Result<()> {
    ensure_square(p)?;
    ensure_square(q)?;
    if r.nrows() != p.nrows() || r.ncols() != q.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "sylvester: P is {0}x{0}, Q is {1}x{1}, R is {2}x{3}",
            p.nrows(),
            q.nrows(),
            r.nrows(),
            r.ncols()
        )));
    }
    Ok(())
}

/// Rejects `(P, Q)` when some eigenvalue of `P` coincides with one of `-Q`.
fn check_disjoint_spectra(p: &Matrix, q: &Matrix) -> Result<()> {
    let sp = spectrum(p)?;
    let sq = spectrum(q)?;
    for lp in &sp.eigenvalues {
        for lq in &sq.eigenvalues {
            let scale = 1.0_f64.max(lp.norm()).max(lq.norm());
            if (lp + lq).norm() <= SPECTRA_OVERLAP_TOL * scale {
                return Err(Error::SpectraOverlap(format!("{lp}")));
            }
        }
    }
    Ok(())
}

/// Solves `P·X + X·Q = R`.
///
/// Small problems go through Kronecker vectorization, larger ones through the
/// Bartels-Stewart reduction to real Schur form.
pub fn solve_sylvester(p: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    check_sylvester_shapes(p, q, r)?;
    check_disjoint_spectra(p, q)?;
    if p.nrows().max(q.nrows()) <= KRONECKER_MAX_DIM {
        kronecker_solve(p, q, r)
    } else {
        bartels_stewart_solve(p, q, r)
    }
}

/// Kronecker path: `(I ⊗ P + Qᵀ ⊗ I) vec(X) = vec(R)` with column-major `vec`.
pub fn solve_sylvester_kronecker(p: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    check_sylvester_shapes(p, q, r)?;
    check_disjoint_spectra(p, q)?;
    kronecker_solve(p, q, r)
}

/// Schur-reduction path, usable at any size.
pub fn solve_sylvester_schur(p: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    check_sylvester_shapes(p, q, r)?;
    check_disjoint_spectra(p, q)?;
    bartels_stewart_solve(p, q, r)
}

fn kronecker_solve(p: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let (np, nq) = (p.nrows(), q.nrows());
    let eye_p = Matrix::identity(np, np);
    let eye_q = Matrix::identity(nq, nq);
    let big = eye_q.kronecker(p) + q.transpose().kronecker(&eye_p);
    let rhs = Vector::from_column_slice(r.as_slice());
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SpectraOverlap("singular Kronecker system".into()))?;
    Ok(Matrix::from_column_slice(np, nq, sol.as_slice()))
}

fn bartels_stewart_solve(p: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let (np, nq) = (p.nrows(), q.nrows());
    let (up, tp) = Schur::try_new(p.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailure)?
        .unpack();
    let (uq, tq) = Schur::try_new(q.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailure)?
        .unpack();
    // Tp·Y + Y·Tq = C with Tp, Tq upper quasi-triangular.
    let c = up.transpose() * r * &uq;
    let mut y = Matrix::zeros(np, nq);
    let eye = Matrix::identity(np, np);
    let singular = || Error::SpectraOverlap("singular Schur-reduced block".into());
    let mut k = 0;
    while k < nq {
        let two_by_two = k + 1 < nq && tq[(k + 1, k)] != 0.0;
        // Contribution of already-solved columns.
        let mut rhs_k = c.column(k).into_owned();
        for j in 0..k {
            rhs_k -= y.column(j) * tq[(j, k)];
        }
        if !two_by_two {
            let a = &tp + &eye * tq[(k, k)];
            let col = a.lu().solve(&rhs_k).ok_or_else(singular)?;
            y.set_column(k, &col);
            k += 1;
        } else {
            let mut rhs_k1 = c.column(k + 1).into_owned();
            for j in 0..k {
                rhs_k1 -= y.column(j) * tq[(j, k + 1)];
            }
            // [Tp + t_kk I,  t_{k+1,k} I ; t_{k,k+1} I, Tp + t_{k+1,k+1} I] [y_k; y_{k+1}]
            let mut a = Matrix::zeros(2 * np, 2 * np);
            a.view_mut((0, 0), (np, np))
                .copy_from(&(&tp + &eye * tq[(k, k)]));
            a.view_mut((0, np), (np, np))
                .copy_from(&(&eye * tq[(k + 1, k)]));
            a.view_mut((np, 0), (np, np))
                .copy_from(&(&eye * tq[(k, k + 1)]));
            a.view_mut((np, np), (np, np))
                .copy_from(&(&tp + &eye * tq[(k + 1, k + 1)]));
            let mut rhs = Vector::zeros(2 * np);
            rhs.rows_mut(0, np).copy_from(&rhs_k);
            rhs.rows_mut(np, np).copy_from(&rhs_k1);
            let sol = a.lu().solve(&rhs).ok_or_else(singular)?;
            y.set_column(k, &sol.rows(0, np).into_owned());
            y.set_column(k + 1, &sol.rows(np, np).into_owned());
            k += 2;
        }
    }
    Ok(up * y * uq.transpose())
}

/// Reciprocal condition number in the 1-norm, computed from an explicit inverse.
/// Returns 0 for matrices LU cannot invert.
pub fn rcond(m: &Matrix) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) => {
            let denom = norm_1(m) * norm_1(&inv);
            if denom.is_finite() && denom > 0.0 {
                1.0 / denom
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// Inverse of `m`, refusing matrices whose reciprocal condition is below `rcond_min`.
pub fn invert(m: &Matrix, rcond_min: f64) -> Result<Matrix> {
    ensure_square(m)?;
    let inv = m.clone().try_inverse().ok_or(Error::NearSingular {
        rcond: 0.0,
        rcond_min,
    })?;
    let rc = 1.0 / (norm_1(m) * norm_1(&inv));
    if !(rc >= rcond_min) {
        return Err(Error::NearSingular {
            rcond: if rc.is_finite() { rc } else { 0.0 },
            rcond_min,
        });
    }
    Ok(inv)
}

/// Maximum absolute column sum.
pub fn norm_1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn norm_2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Vertical stack of matrices sharing a column count.
pub fn vstack(blocks: &[&Matrix]) -> Matrix {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Horizontal concatenation of matrices sharing a row count.
pub fn hstack(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Builds a matrix from row arrays; every row must have the same length.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if nr == 0 || nc == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn split_examples() {
        let (p, n) = pos_neg_split(&m(&[&[1.0, -2.0], &[0.0, 3.0]]));
        assert_eq!(p, m(&[&[1.0, 0.0], &[0.0, 3.0]]));
        assert_eq!(n, m(&[&[0.0, 2.0], &[0.0, 0.0]]));

        let nonneg = m(&[&[0.0, 4.0], &[2.5, 1.0]]);
        let (p, n) = pos_neg_split(&nonneg);
        assert_eq!(p, nonneg);
        assert_eq!(n, Matrix::zeros(2, 2));

        let (p, n) = pos_neg_split(&m(&[&[-0.5]]));
        assert_eq!(p[(0, 0)], 0.0);
        assert_eq!(n[(0, 0)], 0.5);
    }

    #[test]
    fn interval_image_examples() {
        let a = m(&[&[1.0, -1.0]]);
        let (lo, hi) =
            interval_image(&a, &Vector::from_vec(vec![0.0, 0.0]), &Vector::from_vec(vec![1.0, 1.0]))
                .unwrap();
        assert_eq!((lo[0], hi[0]), (-1.0, 1.0));

        let low = Vector::from_vec(vec![-1.0, 2.0, 0.5]);
        let high = Vector::from_vec(vec![3.0, 2.0, 0.75]);
        let (lo, hi) = interval_image(&Matrix::identity(3, 3), &low, &high).unwrap();
        assert_eq!(lo, low);
        assert_eq!(hi, high);
    }

    #[test]
    fn interval_image_errors() {
        let a = Matrix::identity(2, 2);
        let bad = interval_image(&a, &Vector::zeros(3), &Vector::zeros(3));
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
        let unordered = interval_image(
            &a,
            &Vector::from_vec(vec![1.0, 0.0]),
            &Vector::from_vec(vec![0.0, 0.0]),
        );
        assert!(matches!(unordered, Err(Error::UnorderedBounds(_))));
    }

    #[test]
    fn kernel_of_example_observability_matrix() {
        let o = m(&[
            &[1.0, 0.0, 1.0, 1.0],
            &[-1.0, 0.0, 0.0, -1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[-1.0, 0.0, 1.0, 0.0],
        ]);
        let k = kernel_basis(&o, DEFAULT_RANK_TOL);
        assert_eq!(k.ncols(), 1);
        assert!(close(k[(1, 0)].abs(), 1.0, 1e-12));
        for i in [0, 2, 3] {
            assert!(k[(i, 0)].abs() < 1e-12);
        }
        assert_eq!(numerical_rank(&o, DEFAULT_RANK_TOL), 3);
    }

    #[test]
    fn kernel_trivial_cases() {
        assert_eq!(kernel_basis(&Matrix::identity(3, 3), 1e-9).ncols(), 0);
        let k = kernel_basis(&Matrix::zeros(3, 3), 1e-9);
        assert_eq!(k.ncols(), 3);
        assert!((k.transpose() * &k - Matrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let a = m(&[&[1.0, 2.0, 3.0]]);
        let k = kernel_basis(&a, 1e-9);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).norm() < 1e-12);
    }

    #[test]
    fn spectrum_examples() {
        let f_o = m(&[&[-1.0, 1.0, 0.0], &[0.0, 0.0, -1.0], &[0.0, -1.0, 0.0]]);
        let mut re: Vec<f64> = spectrum(&f_o).unwrap().eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([-1.0, -1.0, 1.0]) {
            assert!(close(*got, want, 1e-7), "{re:?}");
        }

        let d = Matrix::from_diagonal(&Vector::from_vec(vec![0.1, 0.2, 0.3]));
        let s = spectrum(&d).unwrap();
        assert!(close(s.spectral_radius, 0.3, 1e-15));

        let s = spectrum(&m(&[&[-0.5]])).unwrap();
        assert_eq!(s.eigenvalues[0].re, -0.5);
        assert!(s.is_schur(0.0));

        assert!(matches!(
            spectrum(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn structure_predicates() {
        let lambda = m(&[&[0.5]]);
        assert!(is_nonnegative(&lambda) && is_schur(&lambda, 0.0));
        let d = m(&[&[-1.0, 0.0], &[0.0, -2.0]]);
        assert!(is_metzler(&d) && is_hurwitz(&d, 0.0));
        assert!(!is_metzler(&m(&[&[0.0, 1.0], &[-1.0, 0.0]])));
        assert!(!is_schur(&m(&[&[1.0]]), 0.0));
        assert!(!is_schur(&m(&[&[0.95]]), 0.1));
    }

    #[test]
    fn sylvester_scalar() {
        let x = solve_sylvester(&m(&[&[-2.0]]), &m(&[&[0.0]]), &m(&[&[4.0]])).unwrap();
        assert!(close(x[(0, 0)], -2.0, 1e-15));
    }

    #[test]
    fn sylvester_overlap_rejected() {
        let r = solve_sylvester(&m(&[&[1.0]]), &m(&[&[-1.0]]), &m(&[&[1.0]]));
        assert!(matches!(r, Err(Error::SpectraOverlap(_))));
    }

    #[test]
    fn sylvester_schur_path_with_complex_blocks() {
        // Q has a complex pair, exercising the 2x2 branch.
        let p = m(&[&[3.0, 1.0, 0.0], &[0.0, 2.0, 0.5], &[0.2, 0.0, 4.0]]);
        let q = m(&[&[0.0, -2.0], &[2.0, 0.0]]);
        let r = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let x = solve_sylvester_schur(&p, &q, &r).unwrap();
        assert!((&p * &x + &x * &q - &r).norm() < 1e-12);
    }

    #[test]
    fn invert_examples() {
        // Columns e1, e3, e4, e2.
        let mm = m(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        let n = invert(&mm, 1e-12).unwrap();
        assert_eq!(n, mm.transpose());
        assert_eq!(invert(&Matrix::identity(3, 3), 1e-12).unwrap(), Matrix::identity(3, 3));
        assert!(matches!(
            invert(&m(&[&[1.0, 1.0], &[1.0, 1.0]]), 1e-12),
            Err(Error::NearSingular { .. })
        ));
    }
}
