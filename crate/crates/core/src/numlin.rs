//! Small dense real-matrix primitives shared by the design, certification
//! and simulation code.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. The matrices involved
//! are desk-scale (a handful of states), so the routines favour clarity and
//! robustness over speed.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Dense real matrix.
pub type Mat = DMatrix<f64>;
/// Dense real column vector.
pub type Vector = DVector<f64>;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub fn ensure_finite(m: &Mat) -> Result<(), NumError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumError::NonFinite)
    }
}

fn ensure_square(m: &Mat) -> Result<(), NumError> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(NumError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Largest absolute entry; zero for an empty matrix.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `(S + Sᵀ)/2`.
pub fn symmetrize(s: &Mat) -> Mat {
    (s + s.transpose()) * 0.5
}

/// Thin SVD `m = U diag(σ) Vᵀ` by one-sided Jacobi rotations, `σ` sorted
/// largest first. `U` is `r × k`, `V` is `c × k` with `k = min(r, c)`;
/// columns of `U` belonging to zero singular values are left at zero.
///
/// Used instead of the bidiagonal SVD in nalgebra, whose factors can lose
/// accuracy on exactly rank-deficient inputs.
pub fn svd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = m.shape();
    if r < c {
        let (u, s, v) = svd(&m.transpose());
        return (v, s, u);
    }
    let mut a = m.clone();
    let mut v = Mat::identity(c, c);
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for (mat, rows) in [(&mut a, r), (&mut v, c)] {
                    for k in 0..rows {
                        let x = mat[(k, i)];
                        let y = mat[(k, j)];
                        mat[(k, i)] = cs * x - sn * y;
                        mat[(k, j)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..c).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = Mat::zeros(r, c);
    let mut v_sorted = Mat::zeros(c, c);
    let mut sigma = Vec::with_capacity(c);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        if s > 0.0 {
            u.set_column(k, &(a.column(j) / s));
        }
        v_sorted.set_column(k, &v.column(j));
        sigma.push(s);
    }
    (u, sigma, v_sorted)
}

/// Singular values, largest first. Empty matrices have none.
fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    svd(m).1
}

/// Numerical rank: number of singular values above `rtol` times the largest.
pub fn mat_rank(m: &Mat, rtol: f64) -> Result<usize, NumError> {
    if !(rtol > 0.0) {
        return Err(NumError::InvalidArgument("rtol must be positive".into()));
    }
    ensure_finite(m)?;
    let sv = singular_values(m);
    let Some(&largest) = sv.first() else {
        return Ok(0);
    };
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rtol * largest).count())
}

/// Moore–Penrose pseudoinverse via the SVD.
///
/// Singular values below `max(rows, cols) · ε · σ_max` are treated as zero.
pub fn pinv(m: &Mat) -> Result<Mat, NumError> {
    ensure_finite(m)?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(Mat::zeros(c, r));
    }
    let (u, sigma, v) = svd(m);
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cutoff = (r.max(c) as f64) * f64::EPSILON * sigma_max;
    let mut out = Mat::zeros(c, r);
    for (k, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (v.column(k) * u.column(k).transpose()) / s;
        }
    }
    Ok(out)
}

/// Max-abs residuals of the four Penrose conditions for a candidate `m_pinv`.
pub fn penrose_residuals(m: &Mat, m_pinv: &Mat) -> [f64; 4] {
    let mpm = m * m_pinv * m;
    let pmp = m_pinv * m * m_pinv;
    let mp = m * m_pinv;
    let pm = m_pinv * m;
    [
        max_abs(&(mpm - m)),
        max_abs(&(pmp - m_pinv)),
        max_abs(&(&mp - mp.transpose())),
        max_abs(&(&pm - pm.transpose())),
    ]
}

/// Eigen-decomposition of the symmetric part of `s`, eigenvalues ascending.
pub fn sym_eigen(s: &Mat) -> Result<(Vec<f64>, Mat), NumError> {
    ensure_square(s)?;
    ensure_finite(s)?;
    let n = s.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let eig = symmetrize(s).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Smallest and largest eigenvalue of the symmetrized matrix.
pub fn sym_eig_extremes(s: &Mat) -> Result<(f64, f64), NumError> {
    let (values, _) = sym_eigen(s)?;
    match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(NumError::Dimension("empty matrix has no eigenvalues".into())),
    }
}

/// Largest eigenvalue of the symmetric part. Negative means `S ≺ 0` with that
/// margin.
pub fn definiteness_margin(s: &Mat) -> Result<f64, NumError> {
    sym_eig_extremes(s).map(|(_, hi)| hi)
}

/// Maximum real part over the eigenvalues of a general square matrix.
pub fn spectral_abscissa(m: &Mat) -> Result<f64, NumError> {
    ensure_square(m)?;
    ensure_finite(m)?;
    if m.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Solves the symmetric system `P·X = B` for symmetric positive definite `P`.
pub fn spd_solve(p: &Mat, b: &Mat) -> Result<Mat, NumError> {
    ensure_square(p)?;
    ensure_finite(p)?;
    ensure_finite(b)?;
    if p.nrows() != b.nrows() {
        return Err(NumError::Dimension(format!(
            "P is {}x{} but right-hand side has {} rows",
            p.nrows(),
            p.ncols(),
            b.nrows()
        )));
    }
    let chol = symmetrize(p).cholesky().ok_or(NumError::Singular)?;
    Ok(chol.solve(b))
}

/// Solves the Lyapunov equation `P·G + Gᵀ·P = -Q` through its Kronecker form.
///
/// Returns the symmetric part of the solution. Fails when `G` has a pair of
/// eigenvalues summing to zero.
pub fn solve_lyapunov(g: &Mat, q: &Mat) -> Result<Mat, NumError> {
    ensure_square(g)?;
    ensure_square(q)?;
    if g.nrows() != q.nrows() {
        return Err(NumError::Dimension("G and Q must have equal size".into()));
    }
    let n = g.nrows();
    let eye = Mat::identity(n, n);
    // vec(P·G) = (Gᵀ ⊗ I) vec(P), vec(Gᵀ·P) = (I ⊗ Gᵀ) vec(P), column-major vec.
    let op = g.transpose().kronecker(&eye) + eye.kronecker(&g.transpose());
    let rhs = Vector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = op.lu().solve(&rhs).ok_or(NumError::Singular)?;
    let p = Mat::from_column_slice(n, n, sol.as_slice());
    if !p.iter().all(|v| v.is_finite()) {
        return Err(NumError::Singular);
    }
    Ok(symmetrize(&p))
}

/// Orthonormal basis for the column space of `m`, as columns.
pub fn range_basis(m: &Mat, rtol: f64) -> Result<Mat, NumError> {
    ensure_finite(m)?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(Mat::zeros(r, 0));
    }
    let rank = mat_rank(m, rtol)?;
    let (u, _, _) = svd(m);
    Ok(u.columns(0, rank).into_owned())
}

/// Projects a symmetric matrix onto `{P : P ⪰ floor·I}` by clipping eigenvalues.
pub fn clip_eigenvalues(p: &Mat, floor: f64) -> Result<Mat, NumError> {
    let (values, vectors) = sym_eigen(p)?;
    let clipped = Vector::from_iterator(values.len(), values.iter().map(|&v| v.max(floor)));
    Ok(symmetrize(&(&vectors * Mat::from_diagonal(&clipped) * vectors.transpose())))
}

/// Parses a matrix written as `[a b; c d]` (commas also separate entries).
pub fn parse_matrix(text: &str) -> Result<Mat, NumError> {
    let body = text.trim();
    let body = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| NumError::InvalidArgument(format!("matrix must be bracketed: {text:?}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for row in body.split(';') {
        let entries = row
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| NumError::InvalidArgument(format!("bad matrix entry {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(entries);
    }
    if rows.len() == 1 && rows[0].is_empty() {
        return Err(NumError::InvalidArgument("empty matrix".into()));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(NumError::InvalidArgument(format!("ragged matrix {text:?}")));
    }
    let m = Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    ensure_finite(&m)?;
    Ok(m)
}
