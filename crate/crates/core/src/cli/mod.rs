//! Command-line front end.
//!
//! Every command writes its output to a temporary file next to `--out` and
//! renames it into place on success, so a failed run leaves no partial
//! output. A `<out>.provenance.json` sidecar records the parameters and the
//! derived quantities needed to rerun.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::kernel::{kernel_eval, GaussianKernel, NoisySystem};
use crate::matpow::io::{matrix_to_json, overflow_to_json, parse_matrix};
use crate::matpow::{matrix_power_squaring, matrix_power_with, PowerOptions};
use crate::numerics::{PowerResult, PrecisionReal};
use crate::taylor::AnalyticMapSpec;
use crate::tmembed::{
    decide_by_measure, embed, map_f64, monte_carlo_invariant, DecideOptions, EmbedOptions,
    TuringMachine, Variant, VariantKind, Verdict,
};
use crate::transfer::{invariant_measure, InitialDensity, InvariantOptions, Method, TransferError};

pub mod exit {
    pub const OK: i32 = 0;
    /// `decide` only.
    pub const REJECT: i32 = 1;
    pub const OVERFLOW: i32 = 2;
    pub const INDETERMINATE: i32 = 3;
    pub const INPUT: i32 = 4;
    pub const SOLVER: i32 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "noisy-dynamics", version, about = "Invariant measures of noisy maps, huge matrix powers, Turing-machine embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raise a JSON matrix to a (possibly enormous) integer power.
    Matpow(MatpowArgs),
    /// Invariant density of a noisy map, as CSV `x,density`.
    Invariant(InvariantArgs),
    /// Compile a Turing machine into a noisy map (JSON).
    Embed(EmbedCmd),
    /// Decide a Turing machine from the invariant measure of its embedding.
    Decide(DecideArgs),
    /// Monte Carlo histogram of a noisy map or embedded machine.
    Simulate(SimulateArgs),
    /// Samples of the noise kernel `K_ε(x, ·)`.
    KernelTable(KernelTableArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file; the provenance sidecar goes to `<out>.provenance.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub precision_bits: u32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PowerRoute {
    Spectral,
    Squaring,
}

#[derive(Debug, Args)]
pub struct MatpowArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Decimal exponent.
    #[arg(long)]
    pub exponent: String,
    /// Overflow bound `B = 2^bound_log2`.
    #[arg(long, default_value_t = 64)]
    pub bound_log2: i64,
    #[arg(long, value_enum, default_value_t = PowerRoute::Spectral)]
    pub route: PowerRoute,
    /// Skip the eigenvalue-separating perturbation.
    #[arg(long)]
    pub no_perturb: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Power,
    Eigen,
}

#[derive(Debug, Args)]
pub struct InvariantArgs {
    /// Map JSON, or the output of `embed`.
    #[arg(long)]
    pub map: PathBuf,
    /// Noise level; defaults to the one stored by `embed`.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Power)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 4.0)]
    pub ct: f64,
    #[arg(long, default_value_t = 2.0)]
    pub cn: f64,
    /// Starting Taylor degree.
    #[arg(long, default_value_t = 6)]
    pub taylor_degree: usize,
    #[arg(long, default_value_t = 24)]
    pub max_degree: usize,
    /// Grid intervals in the CSV.
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Piecewise,
    Sigmoid,
}

impl From<VariantArg> for VariantKind {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Piecewise => VariantKind::Piecewise,
            VariantArg::Sigmoid => VariantKind::Sigmoid,
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub tm: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Piecewise)]
    pub variant: VariantArg,
    #[arg(long)]
    pub c_exp: Option<f64>,
    /// Common value of α and β for the sigmoid variant.
    #[arg(long)]
    pub alpha_beta: Option<f64>,
    #[arg(long, default_value_t = crate::tmembed::CONFIG_CAP)]
    pub config_cap: usize,
}

#[derive(Debug, Args)]
pub struct EmbedCmd {
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[arg(long, default_value_t = 0.05)]
    pub w_reject: f64,
    /// Solve in fixed point at `--precision-bits` instead of f64.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Map JSON or `embed` output.
    #[arg(long, conflicts_with = "tm", required_unless_present = "tm")]
    pub map: Option<PathBuf>,
    /// Turing machine JSON, embedded with the piecewise variant.
    #[arg(long)]
    pub tm: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct KernelTableArgs {
    #[arg(long)]
    pub eps: f64,
    /// Kernel centre.
    #[arg(long)]
    pub center: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

/// A failed run: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input(msg: impl std::fmt::Display) -> Failure {
    Failure { code: exit::INPUT, message: msg.to_string() }
}

fn solver(msg: impl std::fmt::Display) -> Failure {
    Failure { code: exit::SOLVER, message: msg.to_string() }
}

impl From<TransferError> for Failure {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::Overflow { .. } => Failure { code: exit::OVERFLOW, message: e.to_string() },
            TransferError::Invalid(_) => input(e),
            _ => solver(e),
        }
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| input(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))
}

/// Write `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let name = path.file_name().ok_or_else(|| input(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(|e| solver(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| solver(format!("{}: {e}", path.display())))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

fn provenance(command: &str, params: Value, derived: Value) -> String {
    let v = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": params,
        "derived": derived,
    });
    serde_json::to_string_pretty(&v).expect("plain data serializes") + "\n"
}

fn finish(common: &Common, command: &str, output: &str, params: Value, derived: Value) -> Result<(), Failure> {
    write_atomic(&sidecar_path(&common.out), &provenance(command, params, derived))?;
    write_atomic(&common.out, output)
}

/// Parse the argument list and run; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Matpow(a) => cmd_matpow(&a),
        Command::Invariant(a) => cmd_invariant(&a),
        Command::Embed(a) => cmd_embed(&a),
        Command::Decide(a) => cmd_decide(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::KernelTable(a) => cmd_kernel_table(&a),
    }
}

fn cmd_matpow(a: &MatpowArgs) -> Result<i32, Failure> {
    let text = fs::read_to_string(&a.matrix).map_err(|e| input(format!("{}: {e}", a.matrix.display())))?;
    let m = parse_matrix(&text).map_err(|e| input(format!("{}: {e}", a.matrix.display())))?;
    let e: BigUint = a.exponent.trim().parse().map_err(|_| input(format!("exponent {:?} is not a non-negative integer", a.exponent)))?;
    let p = a.common.precision_bits;
    let bound = PrecisionReal::pow2(a.bound_log2, 64);
    let (result, derived) = match a.route {
        PowerRoute::Spectral => {
            let opts = PowerOptions { perturb: !a.no_perturb, ..Default::default() };
            let (r, rep) = matrix_power_with(&m, &e, p, &bound, &opts).map_err(solver)?;
            let d = json!({
                "working_bits": rep.working_bits,
                "perturbation_k": rep.perturbation_k,
                "t0_shift": rep.t0_shift,
                "separation_log2": rep.separation_log2,
                "retries": rep.retries,
            });
            (r, d)
        }
        PowerRoute::Squaring => (matrix_power_squaring(&m, &e, p, &bound).map_err(solver)?, json!({})),
    };
    let params = json!({
        "matrix": a.matrix, "exponent": e.to_string(), "bound_log2": a.bound_log2,
        "route": format!("{:?}", a.route).to_lowercase(), "perturb": !a.no_perturb, "precision_bits": p,
    });
    let (body, code) = match result {
        PowerResult::Value(v) => (matrix_to_json(&v), exit::OK),
        PowerResult::Overflow(o) => (overflow_to_json(&o), exit::OVERFLOW),
    };
    finish(&a.common, "matpow", &(body + "\n"), params, derived)?;
    Ok(code)
}

/// A map JSON, or an `embed` output carrying `map` and `eps`.
fn load_map(path: &Path) -> Result<(AnalyticMapSpec, Option<f64>), Failure> {
    let v = read_json(path)?;
    if let Some(inner) = v.get("map") {
        if inner.is_null() {
            return Err(input("this embedding has no analytic map; re-run embed with --variant sigmoid"));
        }
        let map = AnalyticMapSpec::from_json(inner).map_err(input)?;
        return Ok((map, v.get("eps").and_then(Value::as_f64)));
    }
    Ok((AnalyticMapSpec::from_json(&v).map_err(input)?, None))
}

fn cmd_invariant(a: &InvariantArgs) -> Result<i32, Failure> {
    let (map, stored_eps) = load_map(&a.map)?;
    let eps = a.eps.or(stored_eps).ok_or_else(|| input("--eps is required"))?;
    if !(eps > 0.0) {
        return Err(input("--eps must be positive"));
    }
    let p = a.common.precision_bits;
    let kernel = GaussianKernel::from_f64(eps, p).map_err(input)?;
    let sys = NoisySystem::new(map, kernel).map_err(input)?;
    let opts = InvariantOptions {
        method: match a.method {
            MethodArg::Power => Method::Power,
            MethodArg::Eigen => Method::Eigen,
        },
        c_t: a.ct,
        c_n: a.cn,
        taylor_degree: a.taylor_degree,
        max_degree: a.max_degree,
        precision_bits: p,
        initial: InitialDensity::Uniform,
        ..Default::default()
    };
    let sol = invariant_measure(&sys, a.delta, &opts)?;
    let d = &sol.diagnostics;
    let params = json!({
        "map": a.map, "eps": eps, "delta": a.delta, "method": format!("{:?}", a.method).to_lowercase(),
        "ct": a.ct, "cn": a.cn, "taylor_degree": a.taylor_degree, "max_degree": a.max_degree,
        "precision_bits": p, "grid": a.grid,
    });
    let derived = json!({
        "A": d.a, "N": d.degree, "t": d.t.to_string(), "t_clamped": d.t_clamped,
        "mass_renorm": d.mass_before, "mass_correction": d.mass_correction,
        "truncation_change": d.truncation_change, "residual": d.residual,
        "min_density": [d.min_density.0, d.min_density.1], "entry_tol": d.entry_tol,
        "working_bits": d.working_bits,
    });
    finish(&a.common, "invariant", &sol.density.to_csv(a.grid), params, derived)?;
    Ok(exit::OK)
}

fn load_tm(path: &Path) -> Result<TuringMachine, Failure> {
    TuringMachine::from_json(&read_json(path)?).map_err(input)
}

fn embed_options(a: &EmbedArgs) -> EmbedOptions {
    EmbedOptions {
        variant: a.variant.into(),
        c_exp: a.c_exp,
        alpha_beta: a.alpha_beta,
        config_cap: a.config_cap,
    }
}

fn embed_params(a: &EmbedArgs) -> Value {
    json!({
        "tm": a.tm, "variant": format!("{:?}", a.variant).to_lowercase(), "c_exp": a.c_exp,
        "alpha_beta": a.alpha_beta, "config_cap": a.config_cap,
    })
}

fn cmd_embed(a: &EmbedCmd) -> Result<i32, Failure> {
    let tm = load_tm(&a.embed.tm)?;
    let es = embed(&tm, &embed_options(&a.embed)).map_err(input)?;
    let map = match es.variant {
        Variant::Piecewise => Value::Null,
        Variant::Sigmoid { .. } => es.analytic_map().map_err(input)?.to_json(),
    };
    let variant = match es.variant {
        Variant::Piecewise => json!({"type": "piecewise"}),
        Variant::Sigmoid { alpha, beta, steepness } => {
            json!({"type": "sigmoid", "alpha": alpha, "beta": beta, "steepness": steepness})
        }
    };
    let out = json!({
        "S": es.s_count, "N": es.n, "s": es.s_index, "eps": es.eps,
        "variant": variant, "succ": es.succ, "map": map,
    });
    let derived = json!({"S": es.s_count, "N": es.n, "eps": es.eps});
    let body = serde_json::to_string_pretty(&out).expect("plain data serializes") + "\n";
    finish(&a.common, "embed", &body, embed_params(&a.embed), derived)?;
    Ok(exit::OK)
}

fn cmd_decide(a: &DecideArgs) -> Result<i32, Failure> {
    let tm = load_tm(&a.embed.tm)?;
    let opts = DecideOptions {
        embed: embed_options(&a.embed),
        w_reject: a.w_reject,
        high_precision: a.exact.then_some(a.common.precision_bits),
        ..Default::default()
    };
    let d = decide_by_measure(&tm, &opts).map_err(|e| match e {
        crate::tmembed::TmError::Invalid(_)
        | crate::tmembed::TmError::ConfigCap { .. }
        | crate::tmembed::TmError::EpsilonFloor { .. } => input(e),
        _ => solver(e),
    })?;
    let (name, code) = match d.verdict {
        Verdict::Accept => ("accept", exit::OK),
        Verdict::Reject => ("reject", exit::REJECT),
        Verdict::Indeterminate => ("indeterminate", exit::INDETERMINATE),
    };
    let out = json!({
        "verdict": name, "weight": d.weight, "residual": d.residual,
        "S": d.system.s_count, "N": d.system.n, "eps": d.system.eps,
    });
    let mut params = embed_params(&a.embed);
    params["w_reject"] = json!(a.w_reject);
    params["exact"] = json!(a.exact);
    params["precision_bits"] = json!(a.common.precision_bits);
    let derived = json!({"S": d.system.s_count, "N": d.system.n, "eps": d.system.eps});
    let body = serde_json::to_string_pretty(&out).expect("plain data serializes") + "\n";
    finish(&a.common, "decide", &body, params, derived)?;
    Ok(code)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32, Failure> {
    if a.steps < a.burn_in {
        return Err(input("--steps must be at least --burn-in"));
    }
    if a.bins == 0 {
        return Err(input("--bins must be positive"));
    }
    let (f, eps, x0): (Arc<dyn Fn(f64) -> f64 + Send + Sync>, f64, f64) = if let Some(tm) = &a.tm {
        let es = embed(&load_tm(tm)?, &EmbedOptions::default()).map_err(input)?;
        let eps = a.eps.unwrap_or(es.eps);
        let x0 = es.center_f64(es.home());
        let es = Arc::new(es);
        let f = map_f64(&es).map_err(input)?;
        // materialise the step table so the closure owns its data
        let table: Vec<f64> = (0..es.n).map(|k| f(es.center_f64(k))).collect();
        let n = es.n;
        let g = move |x: f64| table[((x * n as f64) as usize).min(n - 1)];
        (Arc::new(g), eps, x0)
    } else {
        let path = a.map.as_ref().expect("clap enforces --map or --tm");
        let (map, stored) = load_map(path)?;
        map.check_range().map_err(input)?;
        let eps = a.eps.or(stored).ok_or_else(|| input("--eps is required"))?;
        (Arc::new(move |x| map.eval_f64(x)), eps, 0.5)
    };
    if !(eps > 0.0) {
        return Err(input("--eps must be positive"));
    }
    let h = monte_carlo_invariant(&*f, eps, x0, a.steps, a.burn_in, a.seed, a.bins);
    let mut csv = String::from("bin_lo,bin_hi,mass\n");
    for (k, m) in h.masses().iter().enumerate() {
        let lo = k as f64 / a.bins as f64;
        let hi = (k + 1) as f64 / a.bins as f64;
        writeln!(csv, "{lo},{hi},{m}").expect("writing to a string");
    }
    let params = json!({
        "map": a.map, "tm": a.tm, "eps": eps, "steps": a.steps, "burn_in": a.burn_in,
        "seed": a.seed, "bins": a.bins, "x0": x0,
    });
    finish(&a.common, "simulate", &csv, params, json!({"samples": h.total()}))?;
    Ok(exit::OK)
}

fn cmd_kernel_table(a: &KernelTableArgs) -> Result<i32, Failure> {
    if !(a.eps > 0.0) || !(0.0..=1.0).contains(&a.center) || a.points == 0 {
        return Err(input("need eps > 0, 0 <= center <= 1 and points > 0"));
    }
    let p = a.common.precision_bits;
    let eps = PrecisionReal::from_f64(a.eps, p);
    let c = PrecisionReal::from_f64(a.center, p);
    let mut csv = String::from("y,density\n");
    for i in 0..=a.points {
        let y = i as f64 / a.points as f64;
        let v = kernel_eval(&PrecisionReal::from_f64(y, p), &c, &eps, p);
        writeln!(csv, "{y},{:.17e}", v.to_f64()).expect("writing to a string");
    }
    let params = json!({"eps": a.eps, "center": a.center, "points": a.points, "precision_bits": p});
    finish(&a.common, "kernel-table", &csv, params, json!({}))?;
    Ok(exit::OK)
}
