//! `cubobs` command-line front end.
//!
//! Exit codes: 0 success, 1 verification or certification failed, 2 bad
//! configuration or arguments, 3 numerical failure (divergence, search
//! failure).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cert::{self, CertError, EquilibriumOptions, EquilibriumVerdict, NClass, SearchOptions};
use crate::design_uio::{self, DesignError, StabilizeOptions};
use crate::exprlang::{Dims, Expr};
use crate::model::{self, CertificateBlock, Config, ObserverParams, StoredResiduals};
use crate::numlin::{self, Mat, Vector};
use crate::sim::{self, Prehistory, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    VerificationFailed = 1,
    ConfigError = 2,
    NumericalFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "cubobs", version, about = "Cubic observer design, certification and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute E, G, J satisfying the decoupling conditions.
    Design(DesignArgs),
    /// Verify or search for a Lyapunov certificate.
    Certify(CertifyArgs),
    /// Simulate plant and observer, writing a trajectory CSV.
    Simulate(SimulateArgs),
    /// Run the nominal and perturbed-plant comparisons of the built-in example.
    ReproducePaper(ReproduceArgs),
    /// Write the built-in example configurations (nominal.json, uncertain.json).
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("gain").required(true).args(["l", "auto_margin"])))]
struct DesignArgs {
    #[arg(long)]
    config: PathBuf,
    /// Free gain L in `[a; b]` row syntax.
    #[arg(long = "L", alias = "l", allow_hyphen_values = true)]
    l: Option<String>,
    /// Search for L placing all eigenvalues of G at real part <= -margin.
    #[arg(long)]
    auto_margin: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["search_p", "check_only"])))]
struct CertifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "search-P", alias = "search-p")]
    search_p: bool,
    #[arg(long, conflicts_with_all = ["out", "alpha"])]
    check_only: bool,
    /// Gain scale for N = -alpha P^-1 C^T theta (defaults to the observer's).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrehistoryArg {
    Hold,
    Zero,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Plant driving the simulation; the observer is always built from --config.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Input signal in t; repeat once per input channel, or give one for all.
    #[arg(long, default_value = sim::DEFAULT_INPUT, allow_hyphen_values = true)]
    input: Vec<String>,
    #[arg(long)]
    no_cubic: bool,
    /// Plant initial state, `[a; b]` (default zeros).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Observer initial estimate, `[a; b]` (default all -5).
    #[arg(long, allow_hyphen_values = true)]
    xhat0: Option<String>,
    #[arg(long, value_enum, default_value = "hold")]
    prehistory: PrehistoryArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => ExitStatus::ConfigError.code(),
            };
        }
    };
    run(cli.command).code()
}

fn run(cmd: Command) -> ExitStatus {
    let result = match cmd {
        Command::Design(a) => cmd_design(&a),
        Command::Certify(a) => cmd_certify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::ReproducePaper(a) => cmd_reproduce_paper(&a.out),
        Command::Example(a) => cmd_example(&a.out),
    };
    match result {
        Ok(status) => status,
        Err((status, msg)) => {
            eprintln!("error: {msg}");
            status
        }
    }
}

type CmdResult = Result<ExitStatus, (ExitStatus, String)>;

fn config_err(msg: impl std::fmt::Display) -> (ExitStatus, String) {
    (ExitStatus::ConfigError, msg.to_string())
}

fn load(path: &Path) -> Result<Config, (ExitStatus, String)> {
    Config::load(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn save(cfg: &Config, path: &Path) -> Result<(), (ExitStatus, String)> {
    cfg.save(path).map_err(config_err)
}

fn cmd_design(args: &DesignArgs) -> CmdResult {
    let mut cfg = load(&args.config)?;
    let plant = &cfg.plant;
    let feasible = design_uio::decoupling_feasible(&plant.c, &plant.d).map_err(config_err)?;
    if !feasible {
        println!("decoupling infeasible: rank(CD) ≠ rank(D)");
        return Ok(ExitStatus::VerificationFailed);
    }
    let e = design_uio::compute_e(&plant.c, &plant.d).map_err(config_err)?;
    let l = match (&args.l, args.auto_margin) {
        (Some(text), _) => {
            let l = numlin::parse_matrix(text).map_err(|e| config_err(format!("--L: {e}")))?;
            if l.shape() != (plant.n(), plant.n_y()) {
                return Err(config_err(format!(
                    "--L must be {}x{}, got {}x{}",
                    plant.n(),
                    plant.n_y(),
                    l.nrows(),
                    l.ncols()
                )));
            }
            l
        }
        (None, Some(margin)) => {
            let t = Mat::identity(plant.n(), plant.n()) - &e * &plant.c;
            let opts = StabilizeOptions { seed: args.seed, ..Default::default() };
            match design_uio::stabilize_l(&t, &plant.a, &plant.c, margin, &opts) {
                Ok(l) => l,
                Err(err @ DesignError::SearchFailed { .. }) => {
                    return Err((ExitStatus::NumericalFailure, err.to_string()));
                }
                Err(err) => return Err(config_err(err)),
            }
        }
        (None, None) => unreachable!("clap requires --L or --auto-margin"),
    };
    let design = design_uio::design(&plant.a, &plant.c, &plant.d, &l).map_err(config_err)?;
    let n_y = plant.n_y();
    let (theta, alpha) = match &cfg.observer {
        Some(o) => (o.theta.clone(), o.alpha),
        None => (Mat::identity(n_y, n_y), 1.0),
    };
    let n_gain = match &cfg.certificate {
        Some(block) => cert::cubic_gain(&block.p, &plant.c, &theta, alpha).unwrap_or_else(|_| Mat::zeros(plant.n(), n_y)),
        None => cfg.observer.as_ref().map_or_else(|| Mat::zeros(plant.n(), n_y), |o| o.n.clone()),
    };
    let spectral = numlin::spectral_abscissa(&design.g).unwrap_or(f64::NAN);
    println!("E = {}", fmt_matrix(&design.e));
    println!("G = {}", fmt_matrix(&design.g));
    println!("J = {}", fmt_matrix(&design.j));
    println!("L = {}", fmt_matrix(&l));
    println!("spectral_abscissa(G) = {spectral:.6e}");
    println!("residual_sylvester = {:.3e}", design.residual_sylvester);
    println!("residual_decoupling = {:.3e}", design.residual_decoupling);
    cfg.observer = Some(ObserverParams { g: design.g, j: design.j, e: design.e, n: n_gain, theta, alpha });
    cfg.residuals = Some(StoredResiduals {
        sylvester: design.residual_sylvester,
        decoupling: design.residual_decoupling,
    });
    save(&cfg, &args.out)?;
    if design.residual_sylvester > 1e-9 || design.residual_decoupling > 1e-9 {
        println!("structural residuals exceed 1e-9");
        return Ok(ExitStatus::VerificationFailed);
    }
    Ok(ExitStatus::Success)
}

fn report_certificate(c: &model::Certificate) {
    println!("lmi_margin = {:.6e}", c.lmi_margin);
    println!("n_margin = {:.6e}", c.n_margin);
    match c.n_class {
        NClass::StrictPass => println!("n_condition = strict"),
        NClass::SemidefinitePass => {
            println!("n_condition = semidefinite-pass");
            eprintln!(
                "warning: PNC + CᵀNᵀP is only negative semidefinite (negative definite on range(Cᵀ)); \
                 the cubic term contributes nonpositively to dV/dt"
            );
        }
        NClass::Fail => println!("n_condition = fail"),
    }
    match &c.equilibrium {
        EquilibriumVerdict::GuaranteedByGainFormula => println!("equilibrium = unique (guaranteed by gain formula)"),
        EquilibriumVerdict::NoCounterexampleFound(eff) => println!(
            "equilibrium = no counterexample found ({} starts, {} iterations, best residual {:.3e})",
            eff.starts, eff.iterations, eff.best_residual
        ),
        EquilibriumVerdict::Counterexample { v, residual } => println!(
            "equilibrium = counterexample v = {} (residual {residual:.3e})",
            fmt_matrix(&Mat::from_column_slice(v.len(), 1, v.as_slice()))
        ),
    }
}

fn cmd_certify(args: &CertifyArgs) -> CmdResult {
    let mut cfg = load(&args.config)?;
    let Some(obs) = cfg.observer.clone() else {
        return Err(config_err("config has no observer block"));
    };
    let violations = model::validate(&cfg.plant, &obs);
    if !violations.is_empty() {
        let text: Vec<_> = violations.iter().map(|v| format!("{}: {}", v.name, v.detail)).collect();
        return Err(config_err(text.join("; ")));
    }
    let c = cfg.plant.c.clone();
    let eq_opts = EquilibriumOptions { seed: args.seed, ..Default::default() };

    if args.check_only {
        let Some(block) = cfg.certificate.clone() else {
            return Err(config_err("--check-only needs a certificate block"));
        };
        return match cert::certify(&cfg.lipschitz, &obs, &c, &block, &eq_opts) {
            Ok(certificate) => {
                report_certificate(&certificate);
                Ok(if certificate.passes() { ExitStatus::Success } else { ExitStatus::VerificationFailed })
            }
            Err(CertError::InvalidCertificate(msg)) => {
                println!("invalid certificate: {msg}");
                Ok(ExitStatus::VerificationFailed)
            }
            Err(e) => Err(config_err(e)),
        };
    }

    let alpha = args.alpha.unwrap_or(obs.alpha);
    if !(alpha > 0.0) {
        return Err(config_err("--alpha must be positive"));
    }
    let opts = SearchOptions { seed: args.seed, ..Default::default() };
    let sol = match cert::search_p(&cfg.lipschitz, &obs.g, &obs.e, &c, &opts) {
        Ok(sol) => sol,
        Err(e @ CertError::SearchFailed { .. }) => return Err((ExitStatus::NumericalFailure, e.to_string())),
        Err(e) => return Err(config_err(e)),
    };
    let obs = ObserverParams { alpha, ..obs };
    let obs = obs.with_gain_from(&sol.p, &c).map_err(|e| (ExitStatus::NumericalFailure, e.to_string()))?;
    let block = CertificateBlock { p: sol.p.clone(), multipliers: sol.multipliers };
    let certificate = cert::certify(&cfg.lipschitz, &obs, &c, &block, &eq_opts)
        .map_err(|e| (ExitStatus::NumericalFailure, e.to_string()))?;
    println!("P = {}", fmt_matrix(&certificate.p));
    println!("N = {}", fmt_matrix(&obs.n));
    report_certificate(&certificate);
    if let Some(out) = &args.out {
        cfg.observer = Some(obs);
        cfg.certificate = Some(block);
        save(&cfg, out)?;
    }
    Ok(if certificate.passes() { ExitStatus::Success } else { ExitStatus::VerificationFailed })
}

fn parse_vector(text: &str, n: usize, flag: &str) -> Result<Vector, (ExitStatus, String)> {
    let m = numlin::parse_matrix(text).map_err(|e| config_err(format!("{flag}: {e}")))?;
    if m.len() != n || (m.nrows() != 1 && m.ncols() != 1) {
        return Err(config_err(format!("{flag} must have {n} entries")));
    }
    Ok(Vector::from_iterator(n, m.iter().copied()))
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let cfg = load(&args.config)?;
    let truth = match &args.truth {
        Some(p) => load(p)?.plant,
        None => cfg.plant.clone(),
    };
    let Some(obs) = cfg.observer.clone() else {
        return Err(config_err("config has no observer block"));
    };
    let design = cfg.plant;
    let n = design.n();
    let input = args
        .input
        .iter()
        .map(|s| Expr::parse(s, &Dims::time_only()).map_err(|e| config_err(format!("--input {s:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let input = if input.len() == 1 { vec![input[0].clone(); design.n_u] } else { input };
    let sim_cfg = SimConfig {
        h: args.step,
        t_end: args.t_end,
        x0: match &args.x0 {
            Some(s) => parse_vector(s, n, "--x0")?,
            None => Vector::zeros(n),
        },
        xhat0: match &args.xhat0 {
            Some(s) => parse_vector(s, n, "--xhat0")?,
            None => Vector::from_element(n, -5.0),
        },
        input,
        prehistory: match args.prehistory {
            PrehistoryArg::Hold => Prehistory::Hold,
            PrehistoryArg::Zero => Prehistory::Zero,
        },
        cubic_enabled: !args.no_cubic,
    };
    let result = sim::simulate(&truth, &design, &obs, &sim_cfg).map_err(sim_status)?;
    result.save_csv(&args.out).map_err(config_err)?;
    println!("steps = {}", result.t.len() - 1);
    println!("jo_final = {:.15e}", result.final_jo());
    Ok(ExitStatus::Success)
}

fn sim_status(e: SimError) -> (ExitStatus, String) {
    let status = match e {
        SimError::Diverged { .. } | SimError::Eval { .. } => ExitStatus::NumericalFailure,
        _ => ExitStatus::ConfigError,
    };
    (status, e.to_string())
}

fn cmd_reproduce_paper(out: &Path) -> CmdResult {
    fs::create_dir_all(out).map_err(|e| config_err(format!("{}: {e}", out.display())))?;
    let probe = out.join(".write-test");
    fs::write(&probe, b"").map_err(|e| config_err(format!("{} is not writable: {e}", out.display())))?;
    let _ = fs::remove_file(&probe);

    let rep = sim::reproduce_paper().map_err(sim_status)?;
    rep.write(out).map_err(config_err)?;
    print!("{}", rep.summary());
    let ok = rep.all_finite() && rep.uncertain.ratio < 1.0;
    Ok(if ok { ExitStatus::Success } else { ExitStatus::VerificationFailed })
}

fn cmd_example(out: &Path) -> CmdResult {
    fs::create_dir_all(out).map_err(|e| config_err(format!("{}: {e}", out.display())))?;
    let ex = model::paper_example();
    save(&ex.nominal_config(), &out.join("nominal.json"))?;
    save(&ex.uncertain_config(), &out.join("uncertain.json"))?;
    println!("wrote {} and {}", out.join("nominal.json").display(), out.join("uncertain.json").display());
    Ok(ExitStatus::Success)
}

pub fn fmt_matrix(m: &Mat) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect::<Vec<_>>().join(" "))
        .collect();
    format!("[{}]", rows.join("; "))
}
