#![allow(dead_code)]

use cubobs::cert;
use cubobs::design_uio;
use cubobs::exprlang::{BinOp, Dims, EvalEnv, Expr, Func, VarKind, VarRef};
use cubobs::model::{ObserverParams, PlantModel};
use cubobs::numlin::{self, Mat, Vector};
use cubobs::sim::{self, Prehistory, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(rng: &mut impl Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_spd(rng: &mut impl Rng, n: usize) -> Mat {
    let m = random_mat(rng, n, n);
    &m * m.transpose() + Mat::identity(n, n) * 0.5
}

pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Mat {
    random_mat(rng, n, n).qr().q()
}

/// Random `(A, C, D)`. With `n_g <= n_y` the draw satisfies
/// `rank(CD) = rank(D)` almost surely; callers still check.
pub fn random_feasible_system(rng: &mut impl Rng, n: usize, n_y: usize, n_g: usize) -> (Mat, Mat, Mat) {
    let a = random_mat(rng, n, n);
    let c = random_mat(rng, n_y, n);
    let d = random_mat(rng, n, n_g);
    (a, c, d)
}

/// Independent check of `TA − JC − GT = 0` and `TD = 0` with `T = I − EC`.
pub fn structural_residuals(a: &Mat, c: &Mat, d: &Mat, e: &Mat, g: &Mat, j: &Mat) -> (f64, f64) {
    let n = a.nrows();
    let t = Mat::identity(n, n) - e * c;
    let syl = &t * a - j * c - g * &t;
    let dec = &t * d;
    (syl.abs().max(), if dec.is_empty() { 0.0 } else { dec.abs().max() })
}

const FUNCS: [Func; 5] = [Func::Sin, Func::Cos, Func::Tanh, Func::Exp, Func::Abs];
const OPS: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

pub fn expr_dims() -> Dims {
    Dims { n: 3, n_u: 2, n_y: 2, input_slots: 2, output_slots: 1, allow_time: true }
}

/// Random tree over `expr_dims()` with at most `depth` levels.
pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => Expr::Const((rng.gen_range(0.0..10.0f64) * 1000.0).round() / 1000.0),
            1 => Expr::Time,
            2 => Expr::Var(VarRef { kind: VarKind::State, index: rng.gen_range(1..=3), delay_slot: 0 }),
            3 => Expr::Var(VarRef { kind: VarKind::Input, index: rng.gen_range(1..=2), delay_slot: rng.gen_range(0..=2) }),
            _ => Expr::Var(VarRef { kind: VarKind::Output, index: rng.gen_range(1..=2), delay_slot: rng.gen_range(0..=1) }),
        };
    }
    match rng.gen_range(0..4) {
        0 => Expr::Neg(Box::new(random_expr(rng, depth - 1))),
        1 => Expr::Bin(
            OPS[rng.gen_range(0..OPS.len())],
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        2 => Expr::Pow(Box::new(random_expr(rng, depth - 1)), rng.gen_range(1..=3)),
        _ => Expr::Call(FUNCS[rng.gen_range(0..FUNCS.len())], Box::new(random_expr(rng, depth - 1))),
    }
}

pub struct EnvData {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl EnvData {
    pub fn random(rng: &mut impl Rng) -> EnvData {
        let mut v = |k: usize| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        EnvData { t: v(1)[0].abs() * 5.0, x: v(3), u: vec![v(2), v(2), v(2)], y: vec![v(2), v(2)] }
    }

    pub fn env(&self) -> EvalEnv<'_> {
        EvalEnv { t: self.t, x: &self.x, u: &self.u, y: &self.y }
    }
}

/// Display → parse round trip; returns an error message on mismatch.
pub fn check_expr_round_trip(e: &Expr, envs: &[EnvData]) -> Result<(), String> {
    let text = e.to_string();
    let back = Expr::parse(&text, &expr_dims()).map_err(|err| format!("{text}: {err}"))?;
    if &back != e {
        return Err(format!("{text} reparsed as {back}"));
    }
    for env in envs {
        let a = e.eval(&env.env());
        let b = back.eval(&env.env());
        let same = match (&a, &b) {
            (Ok(x), Ok(y)) => x.to_bits() == y.to_bits(),
            (Err(x), Err(y)) => x == y,
            _ => false,
        };
        if !same {
            return Err(format!("{text}: {a:?} vs {b:?}"));
        }
    }
    Ok(())
}

pub fn expr_round_trip_suite(seed: u64, count: usize) -> Result<(), String> {
    let mut r = rng(seed);
    let envs: Vec<EnvData> = (0..10).map(|_| EnvData::random(&mut r)).collect();
    for _ in 0..count {
        let e = random_expr(&mut r, 5);
        check_expr_round_trip(&e, &envs)?;
    }
    Ok(())
}

pub fn penrose_suite(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let rows = r.gen_range(1..=6);
        let cols = r.gen_range(1..=6);
        let rank = r.gen_range(0..=rows.min(cols));
        let m = random_mat(&mut r, rows, rank) * random_mat(&mut r, rank, cols);
        let p = numlin::pinv(&m).map_err(|e| e.to_string())?;
        let scale = m.abs().max().max(1.0);
        for res in numlin::penrose_residuals(&m, &p) {
            let rel = res / scale;
            worst = worst.max(rel);
            if rel > 1e-9 {
                return Err(format!("Penrose residual {res} for {rows}x{cols} rank {rank}"));
            }
        }
    }
    Ok(worst)
}

pub fn structure_suite(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < count {
        let n = r.gen_range(2..=5);
        let n_y = r.gen_range(1..=n);
        let n_g = r.gen_range(1..=n_y);
        let (a, c, d) = random_feasible_system(&mut r, n, n_y, n_g);
        if !design_uio::decoupling_feasible(&c, &d).map_err(|e| e.to_string())? {
            continue;
        }
        let l = random_mat(&mut r, n, n_y) * 3.0;
        let s = design_uio::design(&a, &c, &d, &l).map_err(|e| e.to_string())?;
        let (syl, dec) = structural_residuals(&a, &c, &d, &s.e, &s.g, &s.j);
        let scale = a.abs().max().max(l.abs().max()).max(1.0);
        worst = worst.max(syl.max(dec));
        if syl > 1e-9 * scale || dec > 1e-9 {
            return Err(format!("residuals {syl}, {dec} for n = {n}, n_y = {n_y}, n_g = {n_g}"));
        }
        done += 1;
    }
    Ok(worst)
}

pub fn gain_identity_suite(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let n = r.gen_range(1..=5);
        let n_y = r.gen_range(1..=n);
        let p = random_spd(&mut r, n);
        let c = random_mat(&mut r, n_y, n);
        let theta = random_spd(&mut r, n_y);
        let alpha = r.gen_range(0.1..10.0);
        let gain = cert::cubic_gain(&p, &c, &theta, alpha).map_err(|e| e.to_string())?;
        let lhs = &p * &gain * &c + (&p * &gain * &c).transpose();
        let rhs = c.transpose() * &theta * &c * (-2.0 * alpha);
        let res = (&lhs - &rhs).abs().max() / rhs.abs().max().max(1.0);
        worst = worst.max(res);
        if res > 1e-9 {
            return Err(format!("identity residual {res} for n = {n}, n_y = {n_y}"));
        }
    }
    Ok(worst)
}

/// Stable 3-state plant with `f_L = 0`, its observer with `θ = 0`, and the
/// error matrix `G`.
pub fn linear_oracle_case(seed: u64) -> (PlantModel, ObserverParams) {
    let mut r = rng(seed);
    loop {
        let (mut a, c, d) = random_feasible_system(&mut r, 3, 2, 1);
        let shift = numlin::spectral_abscissa(&a).unwrap() + 0.5;
        a -= Mat::identity(3, 3) * shift;
        let e = design_uio::compute_e(&c, &d).unwrap();
        let t = Mat::identity(3, 3) - &e * &c;
        let opts = design_uio::StabilizeOptions { seed, ..Default::default() };
        let Ok(l) = design_uio::stabilize_l(&t, &a, &c, 0.3, &opts) else { continue };
        let s = design_uio::design(&a, &c, &d, &l).unwrap();
        if numlin::max_abs(&s.g) > 20.0 {
            continue;
        }
        let dims = Dims { n: 3, n_u: 1, n_y: 2, input_slots: 0, output_slots: 0, allow_time: false };
        let parse = |t: &str| Expr::parse(t, &dims).unwrap();
        let plant = PlantModel {
            a,
            c,
            d,
            n_u: 1,
            delta: vec![],
            tau: vec![],
            f_u: vec![parse("u1"), parse("0"), parse("0.5*u1")],
            f_g: vec![parse("sin(x1)")],
            f_l: vec![parse("0"), parse("0"), parse("0")],
        };
        let obs = ObserverParams {
            g: s.g,
            j: s.j,
            e: s.e,
            n: Mat::zeros(3, 2),
            theta: Mat::zeros(2, 2),
            alpha: 1.0,
        };
        return (plant, obs);
    }
}

/// Relative error of the simulated `e(t_end)` against `exp(G t_end) e(0)`.
pub fn linear_oracle_error(plant: &PlantModel, obs: &ObserverParams, h: f64, t_end: f64) -> f64 {
    let x0 = Vector::from_column_slice(&[0.3, -0.2, 0.1]);
    let xhat0 = Vector::from_column_slice(&[-1.0, 2.0, 1.5]);
    let cfg = SimConfig {
        h,
        t_end,
        x0: x0.clone(),
        xhat0: xhat0.clone(),
        input: vec![Expr::parse("sin(t)", &Dims::time_only()).unwrap()],
        prehistory: Prehistory::Hold,
        cubic_enabled: true,
    };
    let res = sim::simulate(plant, plant, obs, &cfg).unwrap();
    let k = res.t.len() - 1;
    // x̂(0) = w(0) + E y(0) with w(0) = x̂0 − E y(0), so e(0) = x0 − x̂0.
    let expected = (&obs.g * t_end).exp() * (&x0 - &xhat0);
    (res.error_at(k) - &expected).norm() / expected.norm()
}

/// Independent `‖Gv + (vᵀCᵀθCv)NCv‖ / ‖v‖`.
pub fn equilibrium_defect(g: &Mat, n: &Mat, c: &Mat, theta: &Mat, v: &Vector) -> f64 {
    let cv = c * v;
    let q = (cv.transpose() * theta * &cv)[(0, 0)];
    (g * v + n * &cv * q).norm() / v.norm()
}

pub struct EquilibriumStats {
    pub cases: usize,
    pub counterexamples: usize,
    pub worst_residual: f64,
}

/// Every reported counterexample over random `(G, N, C, θ)` must be a true
/// equilibrium.
pub fn equilibrium_soundness_suite(seed: u64, count: usize) -> Result<EquilibriumStats, String> {
    let mut r = rng(seed);
    let mut stats = EquilibriumStats { cases: 0, counterexamples: 0, worst_residual: 0.0 };
    for i in 0..count {
        let n = r.gen_range(1..=4);
        let n_y = r.gen_range(1..=n);
        let g = random_mat(&mut r, n, n) * 3.0;
        let gain = random_mat(&mut r, n, n_y);
        let c = random_mat(&mut r, n_y, n);
        let m = random_mat(&mut r, n_y, n_y);
        let theta = &m * m.transpose();
        let opts = cert::EquilibriumOptions { seed: i as u64, starts: 16, ..Default::default() };
        stats.cases += 1;
        if let cert::EquilibriumVerdict::Counterexample { v, .. } =
            cert::check_equilibrium_uniqueness(&g, &gain, &c, &theta, &opts)
        {
            let res = equilibrium_defect(&g, &gain, &c, &theta, &v);
            stats.counterexamples += 1;
            stats.worst_residual = stats.worst_residual.max(res);
            if v.norm() == 0.0 || res.is_nan() || res > 1e-8 {
                return Err(format!("spurious counterexample, residual {res}, |v| = {}", v.norm()));
            }
        }
    }
    Ok(stats)
}

/// Planted kernels: `θ = 0` and `G = M diag(0, λ₂, …) M⁻¹`. Each case must
/// return a counterexample lying in the kernel of `G`.
pub fn planted_kernel_suite(seed: u64, count: usize) -> Result<usize, String> {
    let mut r = rng(seed);
    for i in 0..count {
        let n = r.gen_range(1..=5);
        let n_y = r.gen_range(1..=n);
        let m = random_orthogonal(&mut r, n) + Mat::identity(n, n) * 0.1;
        let Some(m_inv) = m.clone().try_inverse() else { continue };
        let mut diag = Vector::from_fn(n, |_, _| r.gen_range(-3.0..-0.5));
        diag[0] = 0.0;
        let g = &m * Mat::from_diagonal(&diag) * m_inv;
        let gain = random_mat(&mut r, n, n_y);
        let c = random_mat(&mut r, n_y, n);
        let theta = Mat::zeros(n_y, n_y);
        let opts = cert::EquilibriumOptions { seed: i as u64, ..Default::default() };
        match cert::check_equilibrium_uniqueness(&g, &gain, &c, &theta, &opts) {
            cert::EquilibriumVerdict::Counterexample { v, .. } => {
                let res = (&g * &v).norm() / v.norm();
                if res > 1e-8 {
                    return Err(format!("case {i}: counterexample not in ker G, residual {res}"));
                }
            }
            other => return Err(format!("case {i} (n = {n}): planted kernel missed: {other:?}")),
        }
    }
    Ok(count)
}
