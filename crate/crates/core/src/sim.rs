//! Fixed-step simulation of a delayed plant coupled with a cubic observer.
//!
//! The plant and observer states are integrated together with classical RK4.
//! Delays must be whole multiples of the step so that delayed outputs are read
//! straight from the sample history; half-step stages interpolate linearly
//! between the two neighbouring samples. Delayed inputs are evaluated exactly
//! from the analytic input signal.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::exprlang::{Dims, EvalEnv, EvalError, Expr};
use crate::model::{self, ObserverParams, PlantModel, Violation};
use crate::numlin::{Mat, Vector};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid model: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("delay {delay} is not a multiple of step {h}")]
    DelayNotMultiple { delay: f64, h: f64 },
    #[error("evaluating {what} at t = {t}: {source}")]
    Eval { t: f64, what: String, source: EvalError },
    #[error("state became non-finite at step {step} (t = {t})")]
    Diverged { step: usize, t: f64 },
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("{}: {}", v.name, v.detail)).collect::<Vec<_>>().join("; ")
}

/// Values used for times before zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prehistory {
    /// Inputs come from the input signal at negative times; outputs hold `y(0)`.
    #[default]
    Hold,
    /// Inputs and outputs are zero before `t = 0`.
    Zero,
}

/// Default input signal. The example plant escapes in finite time once `x2`
/// turns negative, so the default input is kept nonnegative.
pub const DEFAULT_INPUT: &str = "1+sin(t)";

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub h: f64,
    pub t_end: f64,
    pub x0: Vector,
    pub xhat0: Vector,
    /// One signal per input channel, expressions in `t`.
    pub input: Vec<Expr>,
    pub prehistory: Prehistory,
    pub cubic_enabled: bool,
}

impl SimConfig {
    /// Step 0.01 over 20 s, `x(0) = 0`, `x̂(0) = (−5, …, −5)`,
    /// `u = 1 + sin(t)` on every channel.
    pub fn example_default(n: usize, n_u: usize) -> SimConfig {
        let sin_t = Expr::parse(DEFAULT_INPUT, &Dims::time_only()).expect("built-in signal");
        SimConfig {
            h: 0.01,
            t_end: 20.0,
            x0: Vector::zeros(n),
            xhat0: Vector::from_element(n, -5.0),
            input: vec![sin_t; n_u],
            prehistory: Prehistory::Hold,
            cubic_enabled: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub t: Vec<f64>,
    pub x: Vec<Vector>,
    pub xhat: Vec<Vector>,
    pub w: Vec<Vector>,
    pub y: Vec<Vector>,
    pub jo: Vec<f64>,
}

impl SimResult {
    pub fn error_at(&self, k: usize) -> Vector {
        &self.x[k] - &self.xhat[k]
    }

    pub fn final_jo(&self) -> f64 {
        self.jo.last().copied().unwrap_or(0.0)
    }

    /// Writes `t,x1..xn,xhat1..xhatn,y1..yny,Jo`, one row per grid point.
    pub fn write_csv(&self, out: &mut impl io::Write) -> io::Result<()> {
        let n = self.x.first().map_or(0, |v| v.len());
        let n_y = self.y.first().map_or(0, |v| v.len());
        let mut header = String::from("t");
        for i in 1..=n {
            write!(header, ",x{i}").unwrap();
        }
        for i in 1..=n {
            write!(header, ",xhat{i}").unwrap();
        }
        for i in 1..=n_y {
            write!(header, ",y{i}").unwrap();
        }
        header.push_str(",Jo\n");
        out.write_all(header.as_bytes())?;
        let mut line = String::new();
        for k in 0..self.t.len() {
            line.clear();
            write!(line, "{:.15e}", self.t[k]).unwrap();
            for v in self.x[k].iter().chain(self.xhat[k].iter()).chain(self.y[k].iter()) {
                write!(line, ",{v:.15e}").unwrap();
            }
            writeln!(line, ",{:.15e}", self.jo[k]).unwrap();
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), SimError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }
}

/// Cumulative squared estimation error `∫₀ᵗ ‖x − x̂‖² dτ` by the trapezoidal
/// rule on the result's grid.
pub fn cumulative_error(t: &[f64], x: &[Vector], xhat: &[Vector]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for k in 0..t.len() {
        let sq = (&x[k] - &xhat[k]).norm_squared();
        if let Some(p) = prev {
            acc += 0.5 * (t[k] - t[k - 1]) * (p + sq);
        }
        out.push(acc);
        prev = Some(sq);
    }
    out
}

/// Past output samples on the step grid.
///
/// Keeps the most recent `capacity` samples; sample index `k` is time `k·h`.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    samples: VecDeque<Vector>,
    capacity: usize,
    /// Index of the newest sample.
    newest: i64,
    prehistory: Vector,
}

impl HistoryBuffer {
    pub fn new(capacity: usize, first: Vector, prehistory: Prehistory) -> Self {
        let pre = match prehistory {
            Prehistory::Hold => first.clone(),
            Prehistory::Zero => Vector::zeros(first.len()),
        };
        let mut samples = VecDeque::with_capacity(capacity.max(1));
        samples.push_back(first);
        HistoryBuffer { samples, capacity: capacity.max(1), newest: 0, prehistory: pre }
    }

    pub fn push(&mut self, sample: Vector) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
        self.newest += 1;
    }

    /// Sample at grid index `k` (negative indices give the prehistory value).
    pub fn get(&self, k: i64) -> &Vector {
        if k < 0 {
            return &self.prehistory;
        }
        assert!(k <= self.newest, "lookup of future sample {k} (newest {})", self.newest);
        let back = (self.newest - k) as usize;
        assert!(back < self.samples.len(), "sample {k} no longer buffered");
        &self.samples[self.samples.len() - 1 - back]
    }

    /// Linear interpolation halfway between samples `k` and `k + 1`.
    pub fn midpoint(&self, k: i64) -> Vector {
        (self.get(k) + self.get(k + 1)) * 0.5
    }
}

/// Stage position inside a step.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Start,
    Half,
    End,
}

impl Stage {
    fn offset(self) -> f64 {
        match self {
            Stage::Start => 0.0,
            Stage::Half => 0.5,
            Stage::End => 1.0,
        }
    }
}

struct Side<'m> {
    plant: &'m PlantModel,
    delta_steps: Vec<i64>,
    tau_steps: Vec<i64>,
}

impl Side<'_> {
    fn inputs(&self, cfg: &SimConfig, h: f64, stage_t: f64) -> Result<Vec<Vec<f64>>, SimError> {
        let mut slots = Vec::with_capacity(self.delta_steps.len() + 1);
        slots.push(eval_input(cfg, stage_t)?);
        for &m in &self.delta_steps {
            let at = stage_t - m as f64 * h;
            if at < 0.0 && cfg.prehistory == Prehistory::Zero {
                slots.push(vec![0.0; cfg.input.len()]);
            } else {
                slots.push(eval_input(cfg, at)?);
            }
        }
        Ok(slots)
    }

    fn outputs(&self, live: &Vector, hist: &HistoryBuffer, k: i64, stage: Stage) -> Vec<Vec<f64>> {
        let mut slots = Vec::with_capacity(self.tau_steps.len() + 1);
        slots.push(live.as_slice().to_vec());
        for &m in &self.tau_steps {
            let v = if m == 0 {
                live.clone()
            } else {
                match stage {
                    Stage::Start => hist.get(k - m).clone(),
                    Stage::End => hist.get(k - m + 1).clone(),
                    Stage::Half => hist.midpoint(k - m),
                }
            };
            slots.push(v.as_slice().to_vec());
        }
        slots
    }
}

fn eval_input(cfg: &SimConfig, t: f64) -> Result<Vec<f64>, SimError> {
    cfg.input
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.eval(&EvalEnv::time(t))
                .map_err(|source| SimError::Eval { t, what: format!("input[{i}]"), source })
        })
        .collect()
}

fn eval_bundle(exprs: &[Expr], env: &EvalEnv<'_>, what: &str) -> Result<Vector, SimError> {
    let vals = exprs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.eval(env)
                .map_err(|source| SimError::Eval { t: env.t, what: format!("{what}[{i}]"), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Vector::from_vec(vals))
}

fn delay_steps(delays: &[f64], h: f64) -> Result<Vec<i64>, SimError> {
    delays
        .iter()
        .map(|&d| {
            let m = d / h;
            let r = m.round();
            if (m - r).abs() > 1e-9 * r.max(1.0) {
                Err(SimError::DelayNotMultiple { delay: d, h })
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

/// Checks step/delay compatibility without running anything.
pub fn check_delays(models: &[&PlantModel], h: f64) -> Result<(), SimError> {
    for m in models {
        delay_steps(&m.delta, h)?;
        delay_steps(&m.tau, h)?;
    }
    Ok(())
}

/// Integrates the truth plant together with an observer built on `design`.
///
/// The observer sees the truth plant's output; `design` supplies the
/// observer's `C`, `f_u` and `f_L`.
pub fn simulate(
    truth: &PlantModel,
    design: &PlantModel,
    obs: &ObserverParams,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    for plant in [truth, design] {
        let v = model::validate(plant, obs);
        if !v.is_empty() {
            return Err(SimError::Invalid(v));
        }
    }
    if truth.n() != design.n() || truth.n_u != design.n_u || truth.n_y() != design.n_y() {
        return Err(SimError::Config("truth and design models have different dimensions".into()));
    }
    let n = truth.n();
    if cfg.x0.len() != n || cfg.xhat0.len() != n {
        return Err(SimError::Config(format!("initial states must have length {n}")));
    }
    if cfg.input.len() != truth.n_u {
        return Err(SimError::Config(format!("expected {} input signals, got {}", truth.n_u, cfg.input.len())));
    }
    for (i, e) in cfg.input.iter().enumerate() {
        e.check_dims(&Dims::time_only())
            .map_err(|err| SimError::Config(format!("input[{i}]: {err}")))?;
    }
    if !(cfg.h > 0.0 && cfg.h.is_finite()) || !(cfg.t_end >= cfg.h) {
        return Err(SimError::Config(format!("need 0 < h <= t_end, got h = {}, t_end = {}", cfg.h, cfg.t_end)));
    }
    let h = cfg.h;
    let truth_side = Side { plant: truth, delta_steps: delay_steps(&truth.delta, h)?, tau_steps: delay_steps(&truth.tau, h)? };
    let design_side = Side { plant: design, delta_steps: delay_steps(&design.delta, h)?, tau_steps: delay_steps(&design.tau, h)? };
    let depth = truth_side.tau_steps.iter().chain(&design_side.tau_steps).copied().max().unwrap_or(0);

    let steps = (cfg.t_end / h).round() as usize;
    let t_mat = obs.t_matrix(&design.c);
    let cubic_scale = if cfg.cubic_enabled { 1.0 } else { 0.0 };

    let y0 = &truth.c * &cfg.x0;
    let mut hist = HistoryBuffer::new(depth as usize + 2, y0.clone(), cfg.prehistory);
    let mut x = cfg.x0.clone();
    let mut w = &cfg.xhat0 - &obs.e * &y0;

    let mut out = SimResult {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        xhat: Vec::with_capacity(steps + 1),
        w: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        jo: Vec::new(),
    };
    let record = |out: &mut SimResult, t: f64, x: &Vector, w: &Vector, y: Vector| {
        out.t.push(t);
        out.x.push(x.clone());
        out.xhat.push(w + &obs.e * &y);
        out.w.push(w.clone());
        out.y.push(y);
    };
    record(&mut out, 0.0, &x, &w, y0);

    // Right-hand side of the coupled system at one RK4 stage.
    let rhs = |k: usize, stage: Stage, x: &Vector, w: &Vector, hist: &HistoryBuffer| -> Result<(Vector, Vector), SimError> {
        let t_k = k as f64 * h;
        let ts = t_k + stage.offset() * h;
        let y = &truth.c * x;
        let k_i = k as i64;

        let u_truth = truth_side.inputs(cfg, h, ts)?;
        let y_truth = truth_side.outputs(&y, hist, k_i, stage);
        let env = EvalEnv { t: ts, x: x.as_slice(), u: &u_truth, y: &y_truth };
        let dx = &truth_side.plant.a * x
            + eval_bundle(&truth.f_u, &env, "truth f_u")?
            + &truth.d * eval_bundle(&truth.f_g, &env, "truth f_g")?
            + eval_bundle(&truth.f_l, &env, "truth f_L")?;

        let xhat = w + &obs.e * &y;
        let u_design = design_side.inputs(cfg, h, ts)?;
        let y_design = design_side.outputs(&y, hist, k_i, stage);
        let env = EvalEnv { t: ts, x: xhat.as_slice(), u: &u_design, y: &y_design };
        let ey = &y - &design.c * &xhat;
        let q = ey.dot(&(&obs.theta * &ey));
        let dw = &obs.g * w
            + &obs.j * &y
            + &t_mat * eval_bundle(&design_side.plant.f_u, &env, "design f_u")?
            + &t_mat * eval_bundle(&design.f_l, &env, "design f_L")?
            - (&obs.n * &ey) * (q * cubic_scale);
        Ok((dx, dw))
    };

    for k in 0..steps {
        let (k1x, k1w) = rhs(k, Stage::Start, &x, &w, &hist)?;
        let (k2x, k2w) = rhs(k, Stage::Half, &(&x + &k1x * (h / 2.0)), &(&w + &k1w * (h / 2.0)), &hist)?;
        let (k3x, k3w) = rhs(k, Stage::Half, &(&x + &k2x * (h / 2.0)), &(&w + &k2w * (h / 2.0)), &hist)?;
        // The end stage reads sample k + 1 - m, which exists whenever m >= 1.
        let (k4x, k4w) = rhs(k, Stage::End, &(&x + &k3x * h), &(&w + &k3w * h), &hist)?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        w += (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (h / 6.0);
        let t_next = (k + 1) as f64 * h;
        if !x.iter().chain(w.iter()).all(|v| v.is_finite()) {
            return Err(SimError::Diverged { step: k + 1, t: t_next });
        }
        let y = &truth.c * &x;
        hist.push(y.clone());
        record(&mut out, t_next, &x, &w, y);
    }
    out.jo = cumulative_error(&out.t, &out.x, &out.xhat);
    Ok(out)
}

/// Cubic-versus-linear comparison with otherwise identical settings.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub cubic: SimResult,
    pub linear: SimResult,
    pub jo_cubic: f64,
    pub jo_linear: f64,
    /// `jo_cubic / jo_linear`; 1 when both are zero.
    pub ratio: f64,
}

pub fn compare_cubic_linear(
    truth: &PlantModel,
    design: &PlantModel,
    obs: &ObserverParams,
    cfg: &SimConfig,
) -> Result<Comparison, SimError> {
    let cubic_cfg = SimConfig { cubic_enabled: true, ..cfg.clone() };
    let linear_cfg = SimConfig { cubic_enabled: false, ..cfg.clone() };
    let (cubic, linear) = std::thread::scope(|s| {
        let c = s.spawn(|| simulate(truth, design, obs, &cubic_cfg));
        let l = simulate(truth, design, obs, &linear_cfg);
        (c.join().expect("simulation thread panicked"), l)
    });
    let (cubic, linear) = (cubic?, linear?);
    let jo_cubic = cubic.final_jo();
    let jo_linear = linear.final_jo();
    let ratio = if jo_linear == 0.0 && jo_cubic == 0.0 { 1.0 } else { jo_cubic / jo_linear };
    Ok(Comparison { cubic, linear, jo_cubic, jo_linear, ratio })
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub nominal: Comparison,
    pub uncertain: Comparison,
}

impl Reproduction {
    /// `key=value` summary lines.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (tag, c) in [("nominal", &self.nominal), ("uncertain", &self.uncertain)] {
            writeln!(s, "jo_cubic_{tag}={:.15e}", c.jo_cubic).unwrap();
            writeln!(s, "jo_linear_{tag}={:.15e}", c.jo_linear).unwrap();
            writeln!(s, "ratio_{tag}={:.15e}", c.ratio).unwrap();
        }
        s
    }

    pub fn all_finite(&self) -> bool {
        [&self.nominal, &self.uncertain]
            .iter()
            .all(|c| c.jo_cubic.is_finite() && c.jo_linear.is_finite())
    }

    /// Writes the four trajectory CSVs and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (tag, c) in [("nominal", &self.nominal), ("uncertain", &self.uncertain)] {
            for (kind, r) in [("cubic", &c.cubic), ("linear", &c.linear)] {
                let path = dir.join(format!("{tag}_{kind}.csv"));
                r.save_csv(&path)?;
                written.push(path);
            }
        }
        let path = dir.join("summary.txt");
        fs::write(&path, self.summary())?;
        written.push(path);
        Ok(written)
    }
}

/// Runs the nominal and perturbed-plant comparisons of the built-in example
/// at `h = 0.01`, `t_end = 20`, `u(t) = 1 + sin(t)`.
pub fn reproduce_paper() -> Result<Reproduction, SimError> {
    let ex = model::paper_example();
    let cfg = SimConfig::example_default(ex.nominal.n(), ex.nominal.n_u);
    let nominal = compare_cubic_linear(&ex.nominal, &ex.nominal, &ex.observer, &cfg)?;
    let uncertain = compare_cubic_linear(&ex.uncertain, &ex.nominal, &ex.observer, &cfg)?;
    Ok(Reproduction { nominal, uncertain })
}

/// `eᵀ P e` along a run.
pub fn lyapunov_series(result: &SimResult, p: &Mat) -> Vec<f64> {
    (0..result.t.len())
        .map(|k| {
            let e = result.error_at(k);
            e.dot(&(p * &e))
        })
        .collect()
}
