//! Lyapunov certificates for the cubic observer error dynamics
//! `ė = G e + T Δf_L + ((Ce)ᵀθ(Ce))·N·Ce` with `V = eᵀPe`.
//!
//! Verification assembles the block matrix inequalities for the Lipschitz and
//! one-sided Lipschitz cases and reports their definiteness margins. The
//! search side minimizes the largest eigenvalue of the block over `P` by
//! projected subgradient descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Certificate, CertificateBlock, LipschitzSpec, Multipliers, ObserverParams};
use crate::numlin::{self, Mat, NumError, Vector};

/// Smallest eigenvalue allowed for a searched `P`.
pub const P_FLOOR: f64 = 1e-6;

/// Residual below which a candidate nonzero equilibrium is reported.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no certificate found (best margin {best_margin:.3e}, required < {required:.3e})")]
    SearchFailed { best_margin: f64, required: f64 },
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Assembled block matrix and its largest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub block: Mat,
    pub margin: f64,
}

fn ensure_pd(p: &Mat) -> Result<(), CertError> {
    if p.nrows() != p.ncols() {
        return Err(CertError::InvalidCertificate(format!("P is {}x{}", p.nrows(), p.ncols())));
    }
    let asym = numlin::max_abs(&(p - p.transpose()));
    if asym > 1e-9 * numlin::max_abs(p).max(1.0) {
        return Err(CertError::InvalidCertificate("P is not symmetric".into()));
    }
    let (lo, _) = numlin::sym_eig_extremes(p)?;
    if lo <= 0.0 {
        return Err(CertError::InvalidCertificate(format!("P is not positive definite (min eigenvalue {lo:e})")));
    }
    Ok(())
}

fn check_gec(p: &Mat, g: &Mat, e: &Mat, c: &Mat) -> Result<Mat, CertError> {
    let n = p.nrows();
    if g.shape() != (n, n) || c.ncols() != n || e.shape() != (n, c.nrows()) {
        return Err(CertError::Dimension(format!(
            "P {:?}, G {:?}, E {:?}, C {:?}",
            p.shape(),
            g.shape(),
            e.shape(),
            c.shape()
        )));
    }
    Ok(Mat::identity(n, n) - e * c)
}

/// `[[PG + GᵀP + c₀I, k·P·T], [k·TᵀP, −d·I]]`.
fn assemble(p: &Mat, g: &Mat, t: &Mat, c0: f64, k: f64, d: f64) -> Mat {
    let n = p.nrows();
    let mut block = Mat::zeros(2 * n, 2 * n);
    let top_left = p * g + g.transpose() * p + Mat::identity(n, n) * c0;
    let off = (p * t) * k;
    block.view_mut((0, 0), (n, n)).copy_from(&top_left);
    block.view_mut((0, n), (n, n)).copy_from(&off);
    block.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
    block.view_mut((n, n), (n, n)).copy_from(&(Mat::identity(n, n) * -d));
    numlin::symmetrize(&block)
}

/// Block inequality for Lipschitz `f_L`:
/// `[[PG + GᵀP + γ²βI, P(I−EC)], [(I−EC)ᵀP, −βI]] ≺ 0`.
pub fn lmi_lipschitz(p: &Mat, beta: f64, gamma: f64, g: &Mat, e: &Mat, c: &Mat) -> Result<LmiBlock, CertError> {
    ensure_pd(p)?;
    if !(beta > 0.0) {
        return Err(CertError::Precondition(format!("beta must be positive, got {beta}")));
    }
    if !(gamma > 0.0) {
        return Err(CertError::Precondition(format!("gamma must be positive, got {gamma}")));
    }
    let t = check_gec(p, g, e, c)?;
    let block = assemble(p, g, &t, gamma * gamma * beta, 1.0, beta);
    let margin = numlin::definiteness_margin(&block)?;
    Ok(LmiBlock { block, margin })
}

pub fn verify_lmi_lipschitz(p: &Mat, beta: f64, gamma: f64, g: &Mat, e: &Mat, c: &Mat) -> Result<f64, CertError> {
    lmi_lipschitz(p, beta, gamma, g, e, c).map(|b| b.margin)
}

/// Block inequality for one-sided Lipschitz, quadratically inner-bounded
/// `f_L`:
/// `[[PG + GᵀP + 2(μ₁ρ + μ₂a)I, (μ₂b − μ₁)P(I−EC)], [·ᵀ, −2μ₁I]] ≺ 0`.
#[allow(clippy::too_many_arguments)]
pub fn lmi_osl(
    p: &Mat,
    mu1: f64,
    mu2: f64,
    rho: f64,
    a: f64,
    b: f64,
    g: &Mat,
    e: &Mat,
    c: &Mat,
) -> Result<LmiBlock, CertError> {
    ensure_pd(p)?;
    if !(mu1 > 0.0 && mu2 > 0.0) {
        return Err(CertError::Precondition(format!("mu1 and mu2 must be positive, got {mu1}, {mu2}")));
    }
    let t = check_gec(p, g, e, c)?;
    let block = assemble(p, g, &t, 2.0 * (mu1 * rho + mu2 * a), mu2 * b - mu1, 2.0 * mu1);
    let margin = numlin::definiteness_margin(&block)?;
    Ok(LmiBlock { block, margin })
}

#[allow(clippy::too_many_arguments)]
pub fn verify_lmi_osl(
    p: &Mat,
    mu1: f64,
    mu2: f64,
    rho: f64,
    a: f64,
    b: f64,
    g: &Mat,
    e: &Mat,
    c: &Mat,
) -> Result<f64, CertError> {
    lmi_osl(p, mu1, mu2, rho, a, b, g, e, c).map(|b| b.margin)
}

/// Margin of the block matching `spec` and `multipliers`.
pub fn verify_lmi(
    spec: &LipschitzSpec,
    multipliers: &Multipliers,
    p: &Mat,
    g: &Mat,
    e: &Mat,
    c: &Mat,
) -> Result<f64, CertError> {
    match (*spec, *multipliers) {
        (LipschitzSpec::Lipschitz { gamma }, Multipliers::Lipschitz { beta }) => {
            verify_lmi_lipschitz(p, beta, gamma, g, e, c)
        }
        (LipschitzSpec::OneSided { rho, a, b }, Multipliers::OneSided { mu1, mu2 }) => {
            verify_lmi_osl(p, mu1, mu2, rho, a, b, g, e, c)
        }
        _ => Err(CertError::InvalidCertificate(
            "multipliers do not match the Lipschitz condition kind".into(),
        )),
    }
}

/// Cubic gain `N = −α P⁻¹ Cᵀ θ`, computed by a Cholesky solve.
pub fn cubic_gain(p: &Mat, c: &Mat, theta: &Mat, alpha: f64) -> Result<Mat, CertError> {
    if !(alpha > 0.0) {
        return Err(CertError::Precondition(format!("alpha must be positive, got {alpha}")));
    }
    if c.ncols() != p.nrows() || theta.shape() != (c.nrows(), c.nrows()) {
        return Err(CertError::Dimension(format!(
            "P {:?}, C {:?}, theta {:?}",
            p.shape(),
            c.shape(),
            theta.shape()
        )));
    }
    ensure_pd(p)?;
    let rhs = c.transpose() * theta;
    let sol = numlin::spd_solve(p, &rhs)
        .map_err(|_| CertError::InvalidCertificate("P is singular".into()))?;
    Ok(sol * -alpha)
}

/// Outcome of the cubic-gain inequality `PNC + CᵀNᵀP ≺ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NClass {
    /// Strictly negative definite.
    StrictPass,
    /// Negative semidefinite, and negative definite on the range of `Cᵀ`.
    /// Reported with a warning: this is the best attainable when
    /// `rank(C) < n` and `N` follows the gain formula.
    SemidefinitePass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NConditionReport {
    pub matrix: Mat,
    pub margin: f64,
    pub class: NClass,
    /// Max-abs of `PNC + CᵀNᵀP + 2αCᵀθC`, when `(θ, α)` is supplied.
    pub identity_residual: Option<f64>,
}

/// Checks `PNC + CᵀNᵀP ≺ 0`. `gain_origin = (θ, α)` additionally measures
/// the identity that holds when `N` came from [`cubic_gain`].
pub fn verify_n_condition(
    p: &Mat,
    n: &Mat,
    c: &Mat,
    gain_origin: Option<(&Mat, f64)>,
) -> Result<NConditionReport, CertError> {
    let dim = p.nrows();
    if p.ncols() != dim || n.shape() != (dim, c.nrows()) || c.ncols() != dim {
        return Err(CertError::Dimension(format!("P {:?}, N {:?}, C {:?}", p.shape(), n.shape(), c.shape())));
    }
    let pnc = p * n * c;
    let matrix = numlin::symmetrize(&(&pnc + pnc.transpose()));
    let margin = numlin::definiteness_margin(&matrix)?;
    let tol = 1e-9 * numlin::max_abs(&matrix).max(1.0);
    let class = if margin < -tol {
        NClass::StrictPass
    } else if margin <= tol {
        let basis = numlin::range_basis(&c.transpose(), numlin::DEFAULT_RANK_RTOL)?;
        if basis.ncols() == 0 {
            NClass::Fail
        } else {
            let restricted = basis.transpose() * &matrix * &basis;
            if numlin::definiteness_margin(&restricted)? < -tol {
                NClass::SemidefinitePass
            } else {
                NClass::Fail
            }
        }
    } else {
        NClass::Fail
    };
    let identity_residual = gain_origin.map(|(theta, alpha)| {
        let target = c.transpose() * theta * c * (-2.0 * alpha);
        numlin::max_abs(&(&matrix - target))
    });
    Ok(NConditionReport { matrix, margin, class, identity_residual })
}

/// Result of checking that the error dynamics have no nonzero equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumVerdict {
    /// `N` is the gain-formula gain for a `P ≻ 0` with `PG + GᵀP ≺ 0` and
    /// `θ ⪰ 0`; then `vᵀP(Gv + q(v)NCv) = vᵀPGv − α q(v)² < 0` for `v ≠ 0`.
    GuaranteedByGainFormula,
    NoCounterexampleFound(SearchEffort),
    Counterexample { v: Vector, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchEffort {
    pub starts: usize,
    pub iterations: usize,
    /// Smallest residual `min_r ‖Gs + r²q(s)NCs‖` seen over unit `s`.
    pub best_residual: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumOptions {
    pub seed: u64,
    pub starts: usize,
    pub newton_iters: usize,
    /// `(P, α)` that `N` is claimed to come from.
    pub gain_origin: Option<(Mat, f64)>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions { seed: 0, starts: 64, newton_iters: 60, gain_origin: None }
    }
}

fn gain_formula_guarantees(g: &Mat, n: &Mat, c: &Mat, theta: &Mat, p: &Mat, alpha: f64) -> bool {
    if ensure_pd(p).is_err() {
        return false;
    }
    match numlin::definiteness_margin(&(-theta)) {
        Ok(m) if m <= 1e-12 * numlin::max_abs(theta).max(1.0) => {}
        _ => return false,
    }
    let Ok(expected) = cubic_gain(p, c, theta, alpha) else {
        return false;
    };
    if numlin::max_abs(&(&expected - n)) > 1e-10 * numlin::max_abs(&expected).max(1.0) {
        return false;
    }
    matches!(numlin::definiteness_margin(&(p * g + g.transpose() * p)), Ok(m) if m < 0.0)
}

/// Relative equilibrium residual `‖Gv + (vᵀCᵀθCv)NCv‖ / ‖v‖`.
pub fn equilibrium_residual(g: &Mat, n: &Mat, c: &Mat, theta: &Mat, v: &Vector) -> f64 {
    let cv = c * v;
    let q = cv.dot(&(theta * &cv));
    let r = g * v + (n * &cv) * q;
    r.norm() / v.norm()
}

/// Best `ρ = r² ≥ 0` for unit direction `s` and the resulting residual.
fn best_radius(g: &Mat, n: &Mat, c: &Mat, theta: &Mat, s: &Vector) -> (f64, f64) {
    let a = g * s;
    let cs = c * s;
    let b = (n * &cs) * cs.dot(&(theta * &cs));
    let bb = b.dot(&b);
    let rho = if bb > 0.0 { (-a.dot(&b) / bb).max(0.0) } else { 0.0 };
    (rho, (a + b * rho).norm())
}

/// Looks for `v ≠ 0` with `Gv + (vᵀCᵀθCv)·NCv = 0`.
///
/// Writes `v = r·s` with `‖s‖ = 1`, so the condition becomes
/// `Gs + r²·q(s)·NCs = 0`. Each seeded start runs Gauss–Newton on
/// `(s, r²)` with the unit-norm constraint appended. A counterexample is only
/// returned after its residual is recomputed on the actual `v`.
pub fn check_equilibrium_uniqueness(
    g: &Mat,
    n: &Mat,
    c: &Mat,
    theta: &Mat,
    opts: &EquilibriumOptions,
) -> EquilibriumVerdict {
    if let Some((p, alpha)) = &opts.gain_origin {
        if gain_formula_guarantees(g, n, c, theta, p, *alpha) {
            return EquilibriumVerdict::GuaranteedByGainFormula;
        }
    }
    let dim = g.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut effort = SearchEffort { starts: 0, iterations: 0, best_residual: f64::INFINITY };
    if dim == 0 {
        return EquilibriumVerdict::NoCounterexampleFound(effort);
    }
    let ctc = c.transpose() * theta * c;
    let nc = n * c;

    for start in 0..opts.starts.max(1) {
        effort.starts += 1;
        let mut s = if start < dim {
            let mut e = Vector::zeros(dim);
            e[start] = 1.0;
            e
        } else {
            let v = Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            if v.norm() == 0.0 {
                continue;
            }
            v
        };
        s /= s.norm();
        let (mut rho, mut res) = best_radius(g, n, c, theta, &s);
        for _ in 0..opts.newton_iters {
            effort.iterations += 1;
            if res <= 1e-15 {
                break;
            }
            let cs = c * &s;
            let q = cs.dot(&(theta * &cs));
            let ncs = &nc * &s;
            let mut f = Vector::zeros(dim + 1);
            f.rows_mut(0, dim).copy_from(&(g * &s + &ncs * (rho * q)));
            f[dim] = s.dot(&s) - 1.0;
            let grad_q = &ctc * &s * 2.0;
            let mut jac = Mat::zeros(dim + 1, dim + 1);
            let ds = g + (&ncs * grad_q.transpose() + &nc * q) * rho;
            jac.view_mut((0, 0), (dim, dim)).copy_from(&ds);
            jac.view_mut((0, dim), (dim, 1)).copy_from(&(&ncs * q));
            jac.view_mut((dim, 0), (1, dim)).copy_from(&(s.transpose() * 2.0));
            let Ok(jp) = numlin::pinv(&jac) else { break };
            let step = jp * f;
            let s_new = &s - step.rows(0, dim);
            let norm = s_new.norm();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            let s_new = s_new / norm;
            let (rho_new, res_new) = best_radius(g, n, c, theta, &s_new);
            if res_new < res || !res.is_finite() {
                s = s_new;
                rho = rho_new;
                res = res_new;
            } else {
                break;
            }
        }
        effort.best_residual = effort.best_residual.min(res);
        if res <= EQUILIBRIUM_TOL {
            let r = if rho > 0.0 { rho.sqrt() } else { 1.0 };
            let v = &s * r;
            let residual = equilibrium_residual(g, n, c, theta, &v);
            if residual <= EQUILIBRIUM_TOL {
                return EquilibriumVerdict::Counterexample { v, residual };
            }
        }
    }
    EquilibriumVerdict::NoCounterexampleFound(effort)
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub seed: u64,
    /// Required margin: the certificate must satisfy `margin < −tol`.
    pub tol: f64,
    /// Candidate values of β (Lipschitz case).
    pub beta_grid: Vec<f64>,
    /// Candidate values of μ₂ with μ₁ = 1 (one-sided case). `μ₂ = 1/b` is
    /// always tried as well when `b > 0`.
    pub mu2_grid: Vec<f64>,
    /// Subgradient iterations per start.
    pub max_iters: usize,
    /// Random starts in addition to the deterministic ones.
    pub random_starts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seed: 0,
            tol: 1e-6,
            beta_grid: vec![100.0],
            mu2_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            max_iters: 2000,
            random_starts: 4,
        }
    }
}

/// A Lyapunov matrix and multipliers satisfying the block inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiSolution {
    pub p: Mat,
    pub multipliers: Multipliers,
    pub lmi_margin: f64,
}

struct BlockShape {
    c0: f64,
    k: f64,
    d: f64,
    multipliers: Multipliers,
}

/// Minimizes `λ_max` of the block over `P ⪰ P_FLOOR·I` by projected
/// subgradient steps from several starts. Returns the best `(P, λ_max)`.
fn minimize_block(g: &Mat, t: &Mat, shape: &BlockShape, opts: &SearchOptions, rng: &mut ChaCha8Rng) -> Option<(Mat, f64)> {
    let n = g.nrows();
    let eye = Mat::identity(n, n);
    let objective = |p: &Mat| -> Option<(f64, Vector)> {
        let block = assemble(p, g, t, shape.c0, shape.k, shape.d);
        let (values, vectors) = numlin::sym_eigen(&block).ok()?;
        Some((*values.last()?, vectors.column(2 * n - 1).into_owned()))
    };

    let mut starts: Vec<Mat> = Vec::new();
    let scales = [0.01, 0.1, 1.0, 10.0].map(|s| s * shape.d.max(1e-3));
    for s in scales {
        starts.push(&eye * s);
    }
    if let Ok(lyap) = numlin::solve_lyapunov(g, &eye) {
        if let Ok((lo, hi)) = numlin::sym_eig_extremes(&lyap) {
            if lo > 0.0 {
                for s in scales {
                    starts.push(&lyap * (s / hi));
                }
            }
        }
    }
    for _ in 0..opts.random_starts {
        let m = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &m * m.transpose() + &eye * 0.1;
        let hi = numlin::sym_eig_extremes(&spd).map(|e| e.1).unwrap_or(1.0);
        starts.push(spd * (shape.d.max(1e-3) / hi));
    }

    let mut best: Option<(Mat, f64)> = None;
    for p0 in starts {
        let Ok(mut p) = numlin::clip_eigenvalues(&p0, P_FLOOR) else { continue };
        let radius = 0.2 * p.norm();
        for k in 0..opts.max_iters {
            let Some((lmax, v)) = objective(&p) else { break };
            if best.as_ref().is_none_or(|(_, m)| lmax < *m) {
                best = Some((p.clone(), lmax));
            }
            let a = v.rows(0, n).into_owned();
            let b = v.rows(n, n).into_owned();
            let ga = g * &a;
            let tb = t * &b;
            let grad = &ga * a.transpose() + &a * ga.transpose() + (&tb * a.transpose() + &a * tb.transpose()) * shape.k;
            let gnorm = grad.norm();
            if gnorm == 0.0 {
                break;
            }
            let step = radius / ((k + 1) as f64).sqrt();
            match numlin::clip_eigenvalues(&(&p - grad * (step / gnorm)), P_FLOOR) {
                Ok(next) => p = next,
                Err(_) => break,
            }
        }
    }
    best
}

/// Searches for `P` (and multipliers) making the block inequality hold.
///
/// Best effort: a failure does not prove that no certificate exists.
pub fn search_p(spec: &LipschitzSpec, g: &Mat, e: &Mat, c: &Mat, opts: &SearchOptions) -> Result<LmiSolution, CertError> {
    spec.check().map_err(CertError::Precondition)?;
    let n = g.nrows();
    if g.ncols() != n || c.ncols() != n || e.shape() != (n, c.nrows()) {
        return Err(CertError::Dimension(format!("G {:?}, E {:?}, C {:?}", g.shape(), e.shape(), c.shape())));
    }
    numlin::ensure_finite(g)?;
    let t = Mat::identity(n, n) - e * c;

    let shapes: Vec<BlockShape> = match *spec {
        LipschitzSpec::Lipschitz { gamma } => opts
            .beta_grid
            .iter()
            .filter(|b| **b > 0.0)
            .map(|&beta| BlockShape {
                c0: gamma * gamma * beta,
                k: 1.0,
                d: beta,
                multipliers: Multipliers::Lipschitz { beta },
            })
            .collect(),
        LipschitzSpec::OneSided { rho, a, b } => {
            let mut grid: Vec<f64> = opts.mu2_grid.iter().copied().filter(|m| *m > 0.0).collect();
            if b > 0.0 {
                grid.push(1.0 / b);
            }
            grid.into_iter()
                .map(|mu2| BlockShape {
                    c0: 2.0 * (rho + mu2 * a),
                    k: mu2 * b - 1.0,
                    d: 2.0,
                    multipliers: Multipliers::OneSided { mu1: 1.0, mu2 },
                })
                .collect()
        }
    };
    if shapes.is_empty() {
        return Err(CertError::Precondition("empty multiplier grid".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<LmiSolution> = None;
    for shape in &shapes {
        let Some((p, _)) = minimize_block(g, &t, shape, opts, &mut rng) else { continue };
        // Independent recomputation through the public verifier.
        let Ok(margin) = verify_lmi(spec, &shape.multipliers, &p, g, e, c) else { continue };
        if best.as_ref().is_none_or(|s| margin < s.lmi_margin) {
            best = Some(LmiSolution { p, multipliers: shape.multipliers, lmi_margin: margin });
        }
    }
    match best {
        Some(sol) if sol.lmi_margin < -opts.tol => Ok(sol),
        other => Err(CertError::SearchFailed {
            best_margin: other.map_or(f64::INFINITY, |s| s.lmi_margin),
            required: -opts.tol,
        }),
    }
}

/// Verifies a stored certificate block against an observer and returns the
/// recomputed certificate.
pub fn certify(
    spec: &LipschitzSpec,
    obs: &ObserverParams,
    c: &Mat,
    block: &CertificateBlock,
    eq_opts: &EquilibriumOptions,
) -> Result<Certificate, CertError> {
    let lmi_margin = verify_lmi(spec, &block.multipliers, &block.p, &obs.g, &obs.e, c)?;
    let n_report = verify_n_condition(&block.p, &obs.n, c, Some((&obs.theta, obs.alpha)))?;
    let opts = EquilibriumOptions { gain_origin: Some((block.p.clone(), obs.alpha)), ..eq_opts.clone() };
    let equilibrium = check_equilibrium_uniqueness(&obs.g, &obs.n, c, &obs.theta, &opts);
    Ok(Certificate {
        p: block.p.clone(),
        multipliers: block.multipliers,
        spec: *spec,
        lmi_margin,
        n_margin: n_report.margin,
        n_class: n_report.class,
        equilibrium,
    })
}

impl Certificate {
    /// All three conditions hold (semidefinite pass of the gain condition
    /// included).
    pub fn passes(&self) -> bool {
        self.lmi_margin < 0.0
            && self.n_class != NClass::Fail
            && !matches!(self.equilibrium, EquilibriumVerdict::Counterexample { .. })
    }
}
