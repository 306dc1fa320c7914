//! Plant, observer and certificate data model, validation, JSON configuration
//! and the built-in two-state example system.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::cert::{self, EquilibriumOptions, EquilibriumVerdict, NClass};
use crate::exprlang::{Dims, Expr, VarKind};
use crate::numlin::{self, Mat};

/// Delayed nonlinear plant
/// `ẋ = A x + f_u(U_δ, Y_τ) + D f_g(x, U_δ, Y_τ) + f_L(x, U_δ, Y_τ)`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: Mat,
    pub c: Mat,
    pub d: Mat,
    pub n_u: usize,
    /// Input delays in seconds; slot `k` in expressions reads `delta[k-1]`.
    pub delta: Vec<f64>,
    /// Output delays in seconds.
    pub tau: Vec<f64>,
    pub f_u: Vec<Expr>,
    pub f_g: Vec<Expr>,
    pub f_l: Vec<Expr>,
}

impl PlantModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_g(&self) -> usize {
        self.d.ncols()
    }

    /// Expression context for this plant's nonlinearities.
    pub fn dims(&self) -> Dims {
        Dims {
            n: self.n(),
            n_u: self.n_u,
            n_y: self.n_y(),
            input_slots: self.delta.len(),
            output_slots: self.tau.len(),
            allow_time: false,
        }
    }
}

/// Growth condition on `f_L` in the state argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LipschitzSpec {
    /// `‖f_L(x₁) − f_L(x₂)‖ ≤ γ‖x₁ − x₂‖`.
    Lipschitz { gamma: f64 },
    /// One-sided Lipschitz constant `rho` with quadratic inner-boundedness
    /// constants `a`, `b`.
    OneSided { rho: f64, a: f64, b: f64 },
}

impl LipschitzSpec {
    pub fn check(&self) -> Result<(), String> {
        match *self {
            LipschitzSpec::Lipschitz { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(format!("gamma must be positive, got {gamma}"))
            }
            LipschitzSpec::OneSided { rho, a, b } if ![rho, a, b].iter().all(|v| v.is_finite()) => {
                Err("rho, a and b must be finite".into())
            }
            _ => Ok(()),
        }
    }
}

/// Cubic observer
/// `ẇ = G w + J y + T f_u + T f_L(x̂) − ((Ce)ᵀθ(Ce))·N·Ce`, `x̂ = w + E y`,
/// with `T = I − E C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverParams {
    pub g: Mat,
    pub j: Mat,
    pub e: Mat,
    pub n: Mat,
    pub theta: Mat,
    pub alpha: f64,
}

impl ObserverParams {
    /// Copy with `N` recomputed from `P` by the gain formula `N = −αP⁻¹Cᵀθ`.
    pub fn with_gain_from(&self, p: &Mat, c: &Mat) -> Result<ObserverParams, cert::CertError> {
        let n = cert::cubic_gain(p, c, &self.theta, self.alpha)?;
        Ok(ObserverParams { n, ..self.clone() })
    }

    /// `I − E C`.
    pub fn t_matrix(&self, c: &Mat) -> Mat {
        Mat::identity(self.e.nrows(), self.e.nrows()) - &self.e * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multipliers {
    Lipschitz { beta: f64 },
    OneSided { mu1: f64, mu2: f64 },
}

/// Certificate as stored in a configuration document: the Lyapunov matrix and
/// multipliers, without any claimed margins.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateBlock {
    pub p: Mat,
    pub multipliers: Multipliers,
}

/// A verified certificate. The margins are recomputed, never taken from input.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub p: Mat,
    pub multipliers: Multipliers,
    pub spec: LipschitzSpec,
    pub lmi_margin: f64,
    pub n_margin: f64,
    pub n_class: NClass,
    pub equilibrium: EquilibriumVerdict,
}

impl Certificate {
    pub fn block(&self) -> CertificateBlock {
        CertificateBlock { p: self.p.clone(), multipliers: self.multipliers }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub name: String,
    pub detail: String,
}

fn violation(out: &mut Vec<Violation>, name: &str, detail: String) {
    out.push(Violation { name: name.to_string(), detail });
}

fn check_shape(out: &mut Vec<Violation>, name: &str, m: &Mat, rows: usize, cols: usize) -> bool {
    if m.shape() != (rows, cols) {
        violation(out, name, format!("expected {rows}x{cols}, got {}x{}", m.nrows(), m.ncols()));
        return false;
    }
    if !m.iter().all(|v| v.is_finite()) {
        violation(out, name, "non-finite entries".into());
        return false;
    }
    true
}

/// Checks the plant on its own.
pub fn validate_plant(plant: &PlantModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = plant.a.nrows();
    check_shape(&mut out, "A-dims", &plant.a, n, n);
    check_shape(&mut out, "C-dims", &plant.c, plant.c.nrows(), n);
    check_shape(&mut out, "D-dims", &plant.d, n, plant.d.ncols());
    if plant.c.nrows() == 0 {
        violation(&mut out, "C-dims", "at least one output is required".into());
    }
    for (name, list) in [("delta-nonneg", &plant.delta), ("tau-nonneg", &plant.tau)] {
        for (i, v) in list.iter().enumerate() {
            if !(*v >= 0.0 && v.is_finite()) {
                violation(&mut out, name, format!("entry {i} is {v}"));
            }
        }
    }
    let lens = [("f_u-len", plant.f_u.len(), n), ("f_g-len", plant.f_g.len(), plant.n_g()), ("f_L-len", plant.f_l.len(), n)];
    for (name, got, want) in lens {
        if got != want {
            violation(&mut out, name, format!("expected {want} expressions, got {got}"));
        }
    }
    let dims = plant.dims();
    for (label, exprs) in [("f_u", &plant.f_u), ("f_g", &plant.f_g), ("f_L", &plant.f_l)] {
        for (i, e) in exprs.iter().enumerate() {
            if let Err(err) = e.check_dims(&dims) {
                violation(&mut out, &format!("{label}-refs"), format!("{label}[{i}]: {err}"));
            }
        }
    }
    if plant.f_u.iter().any(|e| e.references(VarKind::State)) {
        violation(&mut out, "f_u-state", "f_u must not reference state".into());
    }
    out
}

/// Checks a plant/observer pair. An empty report means valid.
pub fn validate(plant: &PlantModel, obs: &ObserverParams) -> Vec<Violation> {
    let mut out = validate_plant(plant);
    let n = plant.n();
    let n_y = plant.n_y();
    check_shape(&mut out, "G-dims", &obs.g, n, n);
    check_shape(&mut out, "J-dims", &obs.j, n, n_y);
    check_shape(&mut out, "E-dims", &obs.e, n, n_y);
    check_shape(&mut out, "N-dims", &obs.n, n, n_y);
    if check_shape(&mut out, "theta-dims", &obs.theta, n_y, n_y) {
        let asym = numlin::max_abs(&(&obs.theta - obs.theta.transpose()));
        if asym > 1e-12 * numlin::max_abs(&obs.theta).max(1.0) {
            violation(&mut out, "theta-symmetry", format!("theta - thetaᵀ has max-abs {asym:e}"));
        } else if let Ok(m) = numlin::definiteness_margin(&(-&obs.theta)) {
            if m > 1e-12 * numlin::max_abs(&obs.theta).max(1.0) {
                violation(&mut out, "theta-psd", format!("theta has eigenvalue {:e}", -m));
            }
        }
    }
    if !(obs.alpha > 0.0 && obs.alpha.is_finite()) {
        violation(&mut out, "alpha-positive", format!("alpha is {}", obs.alpha));
    }
    out
}

/// The two-state example system with its observer and certificate.
#[derive(Debug, Clone)]
pub struct PaperExample {
    pub nominal: PlantModel,
    pub uncertain: PlantModel,
    pub observer: ObserverParams,
    pub certificate: Certificate,
    pub lipschitz: LipschitzSpec,
}

fn exprs(texts: &[&str], dims: &Dims) -> Vec<Expr> {
    texts.iter().map(|t| Expr::parse(t, dims).expect("built-in expression")).collect()
}

/// Builds the reference example: nominal plant, perturbed plant, the
/// decoupled observer and the Lyapunov certificate `P` with `β = 100`, `γ = 1`.
pub fn paper_example() -> PaperExample {
    let c = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
    let d = Mat::from_row_slice(2, 1, &[-1.0, 1.0]);
    let nominal_dims = Dims { n: 2, n_u: 1, n_y: 1, input_slots: 1, output_slots: 0, allow_time: false };
    let nominal = PlantModel {
        a: Mat::from_row_slice(2, 2, &[-2.0, -10.0, 0.0, -1.0]),
        c: c.clone(),
        d: d.clone(),
        n_u: 1,
        delta: vec![1.0],
        tau: vec![],
        f_u: exprs(&["u1@1", "u1"], &nominal_dims),
        f_g: exprs(&["x2*x1"], &nominal_dims),
        f_l: exprs(&["x1*cos(u1)", "sin(x2)"], &nominal_dims),
    };
    let uncertain = PlantModel {
        a: Mat::from_row_slice(2, 2, &[-0.9, -8.9, 1.1, 0.1]),
        delta: vec![2.0],
        ..nominal.clone()
    };
    let p = Mat::from_row_slice(2, 2, &[59.0535, 1.7898, 1.7898, 17.8858]);
    let theta = Mat::identity(1, 1);
    let alpha = 1.0;
    let n = cert::cubic_gain(&p, &c, &theta, alpha).expect("example P is positive definite");
    let observer = ObserverParams {
        g: Mat::from_row_slice(2, 2, &[-10.0, 0.0, 1.0, -11.0]),
        j: Mat::from_row_slice(2, 1, &[0.0, 9.0]),
        e: Mat::from_row_slice(2, 1, &[1.0, -1.0]),
        n,
        theta,
        alpha,
    };
    let lipschitz = LipschitzSpec::Lipschitz { gamma: 1.0 };
    let block = CertificateBlock { p, multipliers: Multipliers::Lipschitz { beta: 100.0 } };
    let certificate = cert::certify(&lipschitz, &observer, &c, &block, &EquilibriumOptions::default())
        .expect("example certificate verifies");
    PaperExample { nominal, uncertain, observer, certificate, lipschitz }
}

/// Structural residuals stored next to a designed observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoredResiduals {
    pub sylvester: f64,
    pub decoupling: f64,
}

/// Contents of a configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub plant: PlantModel,
    pub lipschitz: LipschitzSpec,
    pub observer: Option<ObserverParams>,
    pub residuals: Option<StoredResiduals>,
    pub certificate: Option<CertificateBlock>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read or write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("at {path}: {msg}")]
    Field { path: String, msg: String },
}

fn field_err(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { path: path.to_string(), msg: msg.into() }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn get<'v>(obj: &'v Map<String, Value>, prefix: &str, key: &str) -> Result<&'v Value, ConfigError> {
    obj.get(key).ok_or_else(|| field_err(&join(prefix, key), "missing field"))
}

fn as_number(v: &Value, path: &str) -> Result<f64, ConfigError> {
    let x = v.as_f64().ok_or_else(|| field_err(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(field_err(path, "expected a finite number"));
    }
    Ok(x)
}

fn get_number(obj: &Map<String, Value>, prefix: &str, key: &str) -> Result<f64, ConfigError> {
    as_number(get(obj, prefix, key)?, &join(prefix, key))
}

fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<usize, ConfigError> {
    get(obj, "", key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| field_err(key, "expected a nonnegative integer"))
}

fn get_matrix(
    obj: &Map<String, Value>,
    prefix: &str,
    key: &str,
    rows: usize,
    cols: usize,
) -> Result<Mat, ConfigError> {
    let path = join(prefix, key);
    let arr = get(obj, prefix, key)?
        .as_array()
        .ok_or_else(|| field_err(&path, "expected an array of rows"))?;
    if arr.len() != rows {
        return Err(field_err(&path, format!("expected {rows} rows, got {}", arr.len())));
    }
    let mut m = Mat::zeros(rows, cols);
    for (i, row) in arr.iter().enumerate() {
        let row_path = format!("{path}[{i}]");
        let row = row.as_array().ok_or_else(|| field_err(&row_path, "expected an array"))?;
        if row.len() != cols {
            return Err(field_err(&row_path, format!("expected {cols} columns, got {}", row.len())));
        }
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = as_number(v, &format!("{row_path}[{j}]"))?;
        }
    }
    Ok(m)
}

fn get_delays(obj: &Map<String, Value>, key: &str) -> Result<Vec<f64>, ConfigError> {
    let arr = get(obj, "", key)?.as_array().ok_or_else(|| field_err(key, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("{key}[{i}]");
            let x = as_number(v, &path)?;
            if x < 0.0 {
                return Err(field_err(&path, "delay must be nonnegative"));
            }
            Ok(x)
        })
        .collect()
}

fn get_exprs(obj: &Map<String, Value>, key: &str, count: usize, dims: &Dims) -> Result<Vec<Expr>, ConfigError> {
    let arr = get(obj, "", key)?.as_array().ok_or_else(|| field_err(key, "expected an array"))?;
    if arr.len() != count {
        return Err(field_err(key, format!("expected {count} expressions, got {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("{key}[{i}]");
            let text = v.as_str().ok_or_else(|| field_err(&path, "expected an expression string"))?;
            Expr::parse(text, dims).map_err(|e| field_err(&path, e.to_string()))
        })
        .collect()
}

fn as_object<'v>(v: &'v Value, path: &str) -> Result<&'v Map<String, Value>, ConfigError> {
    v.as_object().ok_or_else(|| field_err(path, "expected an object"))
}

impl Config {
    pub fn from_json(value: &Value) -> Result<Config, ConfigError> {
        let root = as_object(value, "<root>")?;
        let n = get_usize(root, "n")?;
        let n_u = get_usize(root, "n_u")?;
        let n_y = get_usize(root, "n_y")?;
        let n_g = get_usize(root, "n_g")?;
        if n == 0 {
            return Err(field_err("n", "state dimension must be positive"));
        }
        if n_y == 0 {
            return Err(field_err("n_y", "output dimension must be positive"));
        }
        let a = get_matrix(root, "", "A", n, n)?;
        let c = get_matrix(root, "", "C", n_y, n)?;
        let d = get_matrix(root, "", "D", n, n_g)?;
        let delta = get_delays(root, "delta")?;
        let tau = get_delays(root, "tau")?;
        let dims = Dims { n, n_u, n_y, input_slots: delta.len(), output_slots: tau.len(), allow_time: false };
        let f_u = get_exprs(root, "f_u", n, &dims)?;
        if let Some(i) = f_u.iter().position(|e| e.references(VarKind::State)) {
            return Err(field_err(&format!("f_u[{i}]"), "f_u must not reference state"));
        }
        let f_g = get_exprs(root, "f_g", n_g, &dims)?;
        let f_l = get_exprs(root, "f_L", n, &dims)?;
        let plant = PlantModel { a, c, d, n_u, delta, tau, f_u, f_g, f_l };

        let lip = as_object(get(root, "", "lipschitz")?, "lipschitz")?;
        let lipschitz = if lip.contains_key("gamma") {
            let gamma = get_number(lip, "lipschitz", "gamma")?;
            if gamma <= 0.0 {
                return Err(field_err("lipschitz.gamma", "gamma must be positive"));
            }
            LipschitzSpec::Lipschitz { gamma }
        } else {
            LipschitzSpec::OneSided {
                rho: get_number(lip, "lipschitz", "rho")?,
                a: get_number(lip, "lipschitz", "a")?,
                b: get_number(lip, "lipschitz", "b")?,
            }
        };

        let (observer, residuals) = match root.get("observer") {
            None | Some(Value::Null) => (None, None),
            Some(v) => {
                let o = as_object(v, "observer")?;
                let p = "observer";
                let obs = ObserverParams {
                    g: get_matrix(o, p, "G", n, n)?,
                    j: get_matrix(o, p, "J", n, n_y)?,
                    e: get_matrix(o, p, "E", n, n_y)?,
                    n: get_matrix(o, p, "N", n, n_y)?,
                    theta: get_matrix(o, p, "theta", n_y, n_y)?,
                    alpha: get_number(o, p, "alpha")?,
                };
                if obs.alpha <= 0.0 {
                    return Err(field_err("observer.alpha", "alpha must be positive"));
                }
                let residuals = match o.get("residuals") {
                    None | Some(Value::Null) => None,
                    Some(r) => {
                        let r = as_object(r, "observer.residuals")?;
                        Some(StoredResiduals {
                            sylvester: get_number(r, "observer.residuals", "sylvester")?,
                            decoupling: get_number(r, "observer.residuals", "decoupling")?,
                        })
                    }
                };
                (Some(obs), residuals)
            }
        };

        let certificate = match root.get("certificate") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let o = as_object(v, "certificate")?;
                let p = get_matrix(o, "certificate", "P", n, n)?;
                let multipliers = if o.contains_key("beta") {
                    Multipliers::Lipschitz { beta: get_number(o, "certificate", "beta")? }
                } else {
                    Multipliers::OneSided {
                        mu1: get_number(o, "certificate", "mu1")?,
                        mu2: get_number(o, "certificate", "mu2")?,
                    }
                };
                Some(CertificateBlock { p, multipliers })
            }
        };

        Ok(Config { plant, lipschitz, observer, residuals, certificate })
    }

    pub fn to_json(&self) -> Value {
        let p = &self.plant;
        let exprs = |v: &[Expr]| Value::from(v.iter().map(|e| e.to_string()).collect::<Vec<_>>());
        let mut root = json!({
            "n": p.n(),
            "n_u": p.n_u,
            "n_y": p.n_y(),
            "n_g": p.n_g(),
            "A": matrix_json(&p.a),
            "C": matrix_json(&p.c),
            "D": matrix_json(&p.d),
            "delta": p.delta,
            "tau": p.tau,
            "f_u": exprs(&p.f_u),
            "f_g": exprs(&p.f_g),
            "f_L": exprs(&p.f_l),
            "lipschitz": match self.lipschitz {
                LipschitzSpec::Lipschitz { gamma } => json!({ "gamma": gamma }),
                LipschitzSpec::OneSided { rho, a, b } => json!({ "rho": rho, "a": a, "b": b }),
            },
        });
        let map = root.as_object_mut().unwrap();
        if let Some(o) = &self.observer {
            let mut block = json!({
                "G": matrix_json(&o.g),
                "J": matrix_json(&o.j),
                "E": matrix_json(&o.e),
                "N": matrix_json(&o.n),
                "theta": matrix_json(&o.theta),
                "alpha": o.alpha,
            });
            if let Some(r) = &self.residuals {
                block["residuals"] = json!({ "sylvester": r.sylvester, "decoupling": r.decoupling });
            }
            map.insert("observer".into(), block);
        }
        if let Some(c) = &self.certificate {
            let block = match c.multipliers {
                Multipliers::Lipschitz { beta } => json!({ "P": matrix_json(&c.p), "beta": beta }),
                Multipliers::OneSided { mu1, mu2 } => {
                    json!({ "P": matrix_json(&c.p), "mu1": mu1, "mu2": mu2 })
                }
            };
            map.insert("certificate".into(), block);
        }
        root
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let value: Value = serde_json::from_str(&text)?;
        Config::from_json(&value)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let mut text = serde_json::to_string_pretty(&self.to_json())?;
        text.push('\n');
        fs::write(path, text).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
    }
}

pub fn matrix_json(m: &Mat) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|i| Value::from((0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
    )
}

impl PaperExample {
    /// Configuration document for the nominal plant with observer and
    /// certificate.
    pub fn nominal_config(&self) -> Config {
        Config {
            plant: self.nominal.clone(),
            lipschitz: self.lipschitz,
            observer: Some(self.observer.clone()),
            residuals: None,
            certificate: Some(self.certificate.block()),
        }
    }

    /// Configuration document for the perturbed plant only.
    pub fn uncertain_config(&self) -> Config {
        Config {
            plant: self.uncertain.clone(),
            lipschitz: self.lipschitz,
            observer: None,
            residuals: None,
            certificate: None,
        }
    }
}
