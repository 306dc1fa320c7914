//! Unknown-input decoupling and structural observer design.
//!
//! With `T = I − E C`, an observer is structurally matched to the plant when
//! `T A − J C − G T = 0` and `T D = 0`. `E = D (C D)⁺` solves the second
//! equation whenever `rank(C D) = rank(D)`; `G = T A − L C` and
//! `J = T A E + L (I − C E)` then solve the first for any free gain `L`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numlin::{self, Mat, NumError, DEFAULT_RANK_RTOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("decoupling infeasible: rank(CD) = {rank_cd} but rank(D) = {rank_d}")]
    DecouplingInfeasible { rank_d: usize, rank_cd: usize },
    #[error("no stabilizing gain found (best spectral abscissa {best_abscissa:.6}, wanted <= {target:.6})")]
    SearchFailed { best_abscissa: f64, target: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A structurally matched observer with its recomputed residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralDesign {
    pub e: Mat,
    pub t: Mat,
    pub g: Mat,
    pub j: Mat,
    pub l: Option<Mat>,
    pub residual_sylvester: f64,
    pub residual_decoupling: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureResiduals {
    /// Max-abs of `(I − EC)A − JC − G(I − EC)`.
    pub sylvester: f64,
    /// Max-abs of `(I − EC)D`.
    pub decoupling: f64,
}

fn dim_err(msg: String) -> DesignError {
    DesignError::Dimension(msg)
}

fn check_cd(c: &Mat, d: &Mat) -> Result<(), DesignError> {
    if c.ncols() != d.nrows() {
        return Err(dim_err(format!(
            "C is {}x{} but D has {} rows",
            c.nrows(),
            c.ncols(),
            d.nrows()
        )));
    }
    Ok(())
}

pub fn decoupling_feasible(c: &Mat, d: &Mat) -> Result<bool, DesignError> {
    check_cd(c, d)?;
    let rank_d = numlin::mat_rank(d, DEFAULT_RANK_RTOL)?;
    let rank_cd = numlin::mat_rank(&(c * d), DEFAULT_RANK_RTOL)?;
    Ok(rank_d == rank_cd)
}

/// `E = D (C D)⁺`, the canonical solution of `(I − E C) D = 0`.
pub fn compute_e(c: &Mat, d: &Mat) -> Result<Mat, DesignError> {
    check_cd(c, d)?;
    let rank_d = numlin::mat_rank(d, DEFAULT_RANK_RTOL)?;
    let cd = c * d;
    let rank_cd = numlin::mat_rank(&cd, DEFAULT_RANK_RTOL)?;
    if rank_d != rank_cd {
        return Err(DesignError::DecouplingInfeasible { rank_d, rank_cd });
    }
    let e = d * numlin::pinv(&cd)?;
    Ok(e)
}

/// Residuals of the two structural equations, recomputed from scratch.
pub fn verify_structure(
    a: &Mat,
    c: &Mat,
    d: &Mat,
    e: &Mat,
    g: &Mat,
    j: &Mat,
) -> Result<StructureResiduals, DesignError> {
    let n = a.nrows();
    let n_y = c.nrows();
    let shapes_ok = a.shape() == (n, n)
        && c.ncols() == n
        && d.nrows() == n
        && e.shape() == (n, n_y)
        && g.shape() == (n, n)
        && j.shape() == (n, n_y);
    if !shapes_ok {
        return Err(dim_err(format!(
            "A {:?}, C {:?}, D {:?}, E {:?}, G {:?}, J {:?}",
            a.shape(),
            c.shape(),
            d.shape(),
            e.shape(),
            g.shape(),
            j.shape()
        )));
    }
    let t = Mat::identity(n, n) - e * c;
    let sylvester = &t * a - j * c - g * &t;
    let decoupling = &t * d;
    Ok(StructureResiduals {
        sylvester: numlin::max_abs(&sylvester),
        decoupling: numlin::max_abs(&decoupling),
    })
}

/// Builds `G = T A − L C`, `J = T A E + L (I − C E)` for the given free gain.
///
/// The returned residuals are recomputed from the resulting matrices; the
/// decoupling residual is measured against `D = 0` here, use
/// [`verify_structure`] with the plant's `D` for the full check.
pub fn design_gj(a: &Mat, c: &Mat, e: &Mat, l: &Mat) -> Result<StructuralDesign, DesignError> {
    let n = a.nrows();
    let n_y = c.nrows();
    if a.ncols() != n || c.ncols() != n || e.shape() != (n, n_y) || l.shape() != (n, n_y) {
        return Err(dim_err(format!(
            "A {:?}, C {:?}, E {:?}, L {:?}",
            a.shape(),
            c.shape(),
            e.shape(),
            l.shape()
        )));
    }
    let t = Mat::identity(n, n) - e * c;
    let ta = &t * a;
    let g = &ta - l * c;
    let j = &ta * e + l * (Mat::identity(n_y, n_y) - c * e);
    let res = verify_structure(a, c, &Mat::zeros(n, 0), e, &g, &j)?;
    Ok(StructuralDesign {
        e: e.clone(),
        t,
        g,
        j,
        l: Some(l.clone()),
        residual_sylvester: res.sylvester,
        residual_decoupling: res.decoupling,
    })
}

/// Full chain: `E` from the rank condition, then `G`, `J` from `L`, with the
/// decoupling residual measured against the real `D`.
pub fn design(a: &Mat, c: &Mat, d: &Mat, l: &Mat) -> Result<StructuralDesign, DesignError> {
    let e = compute_e(c, d)?;
    let mut out = design_gj(a, c, &e, l)?;
    let res = verify_structure(a, c, d, &out.e, &out.g, &out.j)?;
    out.residual_sylvester = res.sylvester;
    out.residual_decoupling = res.decoupling;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct StabilizeOptions {
    pub seed: u64,
    /// Budget of objective evaluations across all restarts.
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        StabilizeOptions { seed: 0, max_iters: 20_000, restarts: 16 }
    }
}

/// Finds `L` with spectral abscissa of `T A − L C` at most `−margin`.
///
/// Compass search on the entries of `L`, restarted from `L = 0` and from
/// seeded random points. Returns the first gain that meets the target.
/// Entries of `L` are kept within `1e3` times the scale of `T A`; beyond that
/// the eigenvalues of `T A − L C` are not computed reliably.
pub fn stabilize_l(t: &Mat, a: &Mat, c: &Mat, margin: f64, opts: &StabilizeOptions) -> Result<Mat, DesignError> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(DesignError::InvalidArgument(format!("margin must be positive, got {margin}")));
    }
    let n = a.nrows();
    let n_y = c.nrows();
    if t.shape() != (n, n) || a.ncols() != n || c.ncols() != n {
        return Err(dim_err(format!("T {:?}, A {:?}, C {:?}", t.shape(), a.shape(), c.shape())));
    }
    let ta = t * a;
    let target = -margin;
    let objective = |l: &Mat| numlin::spectral_abscissa(&(&ta - l * c)).unwrap_or(f64::INFINITY);
    let scale = numlin::max_abs(&ta).max(margin).max(1.0);
    let bound = 1e3 * scale;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut evals = 0usize;
    let mut best = f64::INFINITY;
    for restart in 0..opts.restarts.max(1) {
        let mut l = if restart == 0 {
            Mat::zeros(n, n_y)
        } else {
            Mat::from_fn(n, n_y, |_, _| rng.gen_range(-1.0..1.0) * (scale * restart as f64).min(bound))
        };
        let mut f = objective(&l);
        evals += 1;
        let mut step = scale;
        while evals < opts.max_iters {
            best = best.min(f);
            if f <= target {
                return Ok(l);
            }
            if step < 1e-10 * scale {
                break;
            }
            let mut improved = false;
            'coords: for idx in 0..n * n_y {
                for sign in [1.0, -1.0] {
                    let mut trial = l.clone();
                    trial[idx] += sign * step;
                    if trial[idx].abs() > bound {
                        continue;
                    }
                    let ft = objective(&trial);
                    evals += 1;
                    if ft < f {
                        l = trial;
                        f = ft;
                        improved = true;
                        break 'coords;
                    }
                }
            }
            if improved {
                step = (step * 1.5).min(bound);
            } else {
                step *= 0.5;
            }
        }
        best = best.min(f);
        if f <= target {
            return Ok(l);
        }
        if evals >= opts.max_iters {
            break;
        }
    }
    Err(DesignError::SearchFailed { best_abscissa: best, target })
}
