//! Command runner behind the `majflow` binary.
//!
//! Every command renders its result to a string first, so identical inputs, flags and
//! seed give byte-identical output.

use crate::ball::{majorization_maximizer, majorization_minimizer};
use crate::channel::{analyze, classify_eeb, rwa_beta_for_gibbs_factor, rwa_channel, DEFAULT_N_MAX};
use crate::entropy::{lipschitz_constant, uniform_continuity_bound, EntropyFunctional, LipschitzConstant};
use crate::error::Error;
use crate::flow::flow_path;
use crate::majorization::ProbabilityVector;
use crate::qlinalg::{ChannelJson, DensityMatrix};
use crate::ris::{
    clt_diagnostic, reduced_map, sample_ensemble, sigma_tot, RateFunction, RisProtocol, TrajectorySampler,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::ffi::OsString;
use std::io::Read;
use std::path::{Path, PathBuf};

/// Default PT eigenvalue tolerance for `classify`.
const DEFAULT_CLASSIFY_TOL: f64 = 1e-10;

/// Bundled protocols, addressable by name instead of a path.
const BUNDLED: [(&str, &str); 3] = [
    ("rwa", include_str!("../data/rwa.json")),
    ("full-dipole-beta1", include_str!("../data/full-dipole-beta1.json")),
    ("full-dipole-beta2", include_str!("../data/full-dipole-beta2.json")),
];

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MmmMode {
    Min,
    Max,
    Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RisMode {
    Lambda,
    Sigma,
    Sample,
    Clt,
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "majflow", version, about = "Majorization bounds, channel classification and repeated-interaction statistics")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for trajectory sampling.
    #[arg(long, global = true, env = "MAJFLOW_THREADS")]
    pub threads: Option<usize>,
    /// Tolerance override (PT eigenvalue tolerance for `classify`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tight continuity bound (or Lipschitz constant) of a functional such as `renyi:alpha=2`.
    Bound {
        functional: String,
        d: Option<usize>,
        epsilon: Option<f64>,
        /// Report the Lipschitz constant instead of the bound.
        #[arg(long)]
        lipschitz: bool,
    },
    /// Extrema of the total-variation ball and the flow path.
    Mmm {
        #[arg(value_enum)]
        mode: MmmMode,
        /// Entries separated by commas or spaces; `-` or absent reads stdin.
        vector: Option<String>,
        #[arg(long, short)]
        epsilon: f64,
        /// Read the vector from a file.
        #[arg(long, conflicts_with = "vector")]
        file: Option<PathBuf>,
    },
    /// Spectral report and entanglement-breaking verdict of a channel given as JSON.
    Classify {
        channel: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
    },
    /// Channel JSON of the resonant rotating-wave qubit channel with Gibbs factor g² and damping |γ|.
    RwaChannel {
        #[arg(long)]
        g: f64,
        #[arg(long)]
        abs_gamma: f64,
        #[arg(long, default_value_t = 0.8)]
        energy: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
    },
    /// Repeated-interaction analyses of a protocol file or bundled protocol name.
    Ris {
        #[arg(value_enum)]
        mode: RisMode,
        protocol: String,
        /// Override the number of probes T.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        n_traj: usize,
        #[arg(long, default_value_t = 1.5)]
        alpha_max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        /// Initial state: `invariant`, `mixed` or `diag:p1,p2,...`.
        #[arg(long, default_value = "invariant")]
        init: String,
    },
}

/// Failure of a command, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Library(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Library(e) if e.is_invalid_data() => 2,
            CliError::Library(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Shortest round-trip rendering, in exponent form for very small or large magnitudes.
pub fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && (x.abs() < 1e-5 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new() -> Self {
        Table(csv::WriterBuilder::new().flexible(true).from_writer(Vec::new()))
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> CliResult<()> {
        self.0.write_record(fields.into_iter().collect::<Vec<_>>()).map_err(|e| CliError::Input(e.to_string()))
    }

    fn finish(self) -> CliResult<String> {
        let bytes = self.0.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
    }
}

fn nums(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|&x| fmt_num(x))
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn to_json<T: serde::Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("report types always serialize")
}

impl RunConfig {
    /// Checks numeric flags before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("--tol must be positive and finite, got {t}")));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        match &self.command {
            Command::Bound { d, epsilon, lipschitz, .. } => {
                if *d == Some(0) {
                    return Err(CliError::Usage("dimension must be at least 1".into()));
                }
                if !lipschitz && (d.is_none() || epsilon.is_none()) {
                    return Err(CliError::Usage("bound needs <d> and <epsilon> unless --lipschitz is given".into()));
                }
                if let Some(e) = epsilon {
                    if !(0.0..=1.0).contains(e) {
                        return Err(CliError::Usage(format!("epsilon must lie in [0,1], got {e}")));
                    }
                }
            }
            Command::Mmm { epsilon, .. } => {
                if !(*epsilon >= 0.0 && epsilon.is_finite()) {
                    return Err(CliError::Usage(format!("epsilon must be finite and >= 0, got {epsilon}")));
                }
            }
            Command::Classify { n_max, .. } => {
                if *n_max == 0 {
                    return Err(CliError::Usage("--n-max must be at least 1".into()));
                }
            }
            Command::RwaChannel { g, abs_gamma, energy, lambda } => {
                if !(*g > 0.0 && *g <= 1.0) || !(*abs_gamma >= 0.0 && *abs_gamma < 1.0) {
                    return Err(CliError::Usage("need 0 < g <= 1 and 0 <= |γ| < 1".into()));
                }
                if !(*energy > 0.0 && energy.is_finite()) || !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(CliError::Usage("energy and lambda must be positive".into()));
                }
            }
            Command::Ris { steps, n_traj, alpha_max, points, .. } => {
                if *steps == Some(0) || *n_traj == 0 || *points < 3 {
                    return Err(CliError::Usage("need --steps >= 1, --n-traj >= 1 and --points >= 3".into()));
                }
                if !(*alpha_max > 0.0 && alpha_max.is_finite()) {
                    return Err(CliError::Usage("--alpha-max must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Runs the command and returns its rendered output.
    pub fn execute(&self) -> CliResult<String> {
        self.validate()?;
        match &self.command {
            Command::Bound { functional, d, epsilon, lipschitz } => self.bound(functional, *d, *epsilon, *lipschitz),
            Command::Mmm { mode, vector, epsilon, file } => {
                let text = match (vector, file) {
                    (_, Some(path)) => read_file(path)?,
                    (Some(v), None) if v != "-" => v.clone(),
                    _ => {
                        let mut s = String::new();
                        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Input(e.to_string()))?;
                        s
                    }
                };
                self.mmm(*mode, &parse_vector(&text)?, *epsilon)
            }
            Command::Classify { channel, n_max } => {
                let parsed: ChannelJson =
                    serde_json::from_str(&read_file(channel)?).map_err(|e| CliError::Input(e.to_string()))?;
                self.classify(&parsed, *n_max)
            }
            Command::RwaChannel { g, abs_gamma, energy, lambda } => {
                let tau = 2.0 * abs_gamma.acos() / lambda;
                let beta = rwa_beta_for_gibbs_factor(*g, *energy);
                let phi = rwa_channel(*energy, *energy, *lambda, tau, beta)?;
                Ok(json_text(&to_json(&ChannelJson::from_superoperator(&phi))))
            }
            Command::Ris { mode, protocol, steps, n_traj, alpha_max, points, init } => {
                let mut proto = load_protocol(protocol)?;
                if let Some(t) = steps {
                    proto = proto.with_steps(*t)?;
                }
                let rho = initial_state(&proto, init)?;
                self.with_pool(|| self.ris(*mode, &proto, &rho, *n_traj, *alpha_max, *points))
            }
        }
    }

    fn with_pool<T: Send>(&self, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
        match self.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?
                .install(f),
            None => f(),
        }
    }

    fn bound(&self, functional: &str, d: Option<usize>, eps: Option<f64>, lipschitz: bool) -> CliResult<String> {
        let d = d.unwrap_or(2);
        let f = functional.parse::<EntropyFunctional>()?.with_dim(d);
        if lipschitz {
            let k = lipschitz_constant(&f, d)?;
            if self.format == Format::Json {
                return Ok(json_text(&json!({"functional": f.name(), "d": d, "lipschitz": to_json(&k)})));
            }
            let (kind, lower, upper) = match k {
                LipschitzConstant::Exact { value } => ("exact", Some(value), value),
                LipschitzConstant::Bracket { lower, upper } => ("bracket", Some(lower), upper),
                LipschitzConstant::UpperBound { value } => ("upper_bound", None, value),
                LipschitzConstant::Infinite => ("infinite", None, f64::INFINITY),
            };
            let mut t = Table::new();
            t.row([f.name(), d.to_string(), kind.into(), lower.map(fmt_num).unwrap_or_default(), fmt_num(upper)])?;
            return t.finish();
        }
        let eps = eps.expect("validated");
        let b = uniform_continuity_bound(&f, d, eps)?;
        if self.format == Format::Json {
            return Ok(json_text(&json!({"functional": f.name(), "d": d, "epsilon": eps, "bound": to_json(&b)})));
        }
        let mut t = Table::new();
        t.row([f.name(), d.to_string(), fmt_num(eps), fmt_num(b.value), b.regime.as_str().into()])?;
        t.finish()
    }

    fn mmm(&self, mode: MmmMode, p: &ProbabilityVector, eps: f64) -> CliResult<String> {
        let d = p.dim();
        let header = || {
            ["epsilon".to_string(), "k_plus".into(), "k_minus".into()]
                .into_iter()
                .chain((1..=d).map(|i| format!("p{i}")))
        };
        match mode {
            MmmMode::Min | MmmMode::Max => {
                let v = if mode == MmmMode::Min {
                    majorization_minimizer(p, eps)?.result
                } else {
                    majorization_maximizer(p, eps)?
                };
                if self.format == Format::Json {
                    return Ok(json_text(&json!({"epsilon": eps, "result": v.as_slice()})));
                }
                let mut t = Table::new();
                t.row(std::iter::once("epsilon".to_string()).chain((1..=d).map(|i| format!("p{i}"))))?;
                t.row(std::iter::once(fmt_num(eps)).chain(nums(v.as_slice())))?;
                t.finish()
            }
            MmmMode::Path => {
                let path = flow_path(p, eps)?;
                if self.format == Format::Json {
                    return Ok(json_text(&to_json(&path)));
                }
                let mut t = Table::new();
                t.row(header())?;
                for b in &path {
                    t.row(
                        [fmt_num(b.epsilon), b.k_plus.to_string(), b.k_minus.to_string()]
                            .into_iter()
                            .chain(nums(b.point.as_slice())),
                    )?;
                }
                t.finish()
            }
        }
    }

    fn classify(&self, channel: &ChannelJson, n_max: usize) -> CliResult<String> {
        let phi = channel.to_superoperator()?;
        let report = analyze(&phi)?;
        let verdict = classify_eeb(&phi, n_max, self.tol.unwrap_or(DEFAULT_CLASSIFY_TOL))?;
        if self.format == Format::Json {
            return Ok(json_text(&json!({"report": to_json(&report), "verdict": to_json(&verdict)})));
        }
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut t = Table::new();
        t.row(
            ["period", "fixed_multiplicity", "faithful", "irreducible", "primitive", "ppt_step", "eb_step", "status"]
                .map(String::from),
        )?;
        t.row([
            opt(report.period_z),
            report.fixed_multiplicity.to_string(),
            report.faithful.to_string(),
            report.irreducible.to_string(),
            report.primitive.to_string(),
            opt(verdict.ppt_step),
            opt(verdict.eb_step),
            verdict.status.as_str().into(),
        ])?;
        t.finish()
    }

    fn ris(
        &self,
        mode: RisMode,
        proto: &RisProtocol,
        rho: &DensityMatrix,
        n_traj: usize,
        alpha_max: f64,
        points: usize,
    ) -> CliResult<String> {
        let json = self.format == Format::Json;
        let mut t = Table::new();
        match mode {
            RisMode::Lambda => {
                let rf = RateFunction::from_protocol(proto, alpha_max, points)?;
                let (lo, hi) = rf.slope_range();
                let xs: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
                let rates = xs.iter().map(|&x| rf.legendre(x)).collect::<crate::Result<Vec<_>>>()?;
                if json {
                    return Ok(json_text(&json!({
                        "alpha": rf.alphas, "lambda": rf.values, "lambda_d1": rf.d1, "lambda_d2": rf.d2,
                        "x": xs, "rate": rates,
                    })));
                }
                t.row(["alpha", "lambda", "x", "rate"].map(String::from))?;
                for i in 0..points {
                    t.row([fmt_num(rf.alphas[i]), fmt_num(rf.values[i]), fmt_num(xs[i]), fmt_num(rates[i])])?;
                }
            }
            RisMode::Sigma => {
                let ep = sigma_tot(proto, rho)?;
                if json {
                    return Ok(json_text(&json!({
                        "per_step": ep.per_step, "total": ep.total, "max_balance_residual": ep.max_balance_residual,
                    })));
                }
                t.row(["step", "sigma"].map(String::from))?;
                for (k, s) in ep.per_step.iter().enumerate() {
                    t.row([(k + 1).to_string(), fmt_num(*s)])?;
                }
                t.row(["total".to_string(), fmt_num(ep.total)])?;
            }
            RisMode::Sample => {
                let sampler = TrajectorySampler::new(proto, rho)?;
                let records = sample_ensemble(&sampler, n_traj, self.seed, false);
                if json {
                    return Ok(json_text(&to_json(&records)));
                }
                t.row(["index", "a_init", "a_fin", "sigma", "dy_tot", "ds_sys"].map(String::from))?;
                for (i, r) in records.iter().enumerate() {
                    t.row([
                        i.to_string(),
                        r.a_init_index.to_string(),
                        r.a_fin_index.to_string(),
                        fmt_num(r.sigma_traj),
                        fmt_num(r.dy_tot),
                        fmt_num(r.ds_sys),
                    ])?;
                }
            }
            RisMode::Clt => {
                let c = clt_diagnostic(proto, rho, proto.steps(), n_traj, self.seed)?;
                if json {
                    return Ok(json_text(&to_json(&c)));
                }
                t.row(
                    ["steps", "n_traj", "seed", "lambda_d1", "lambda_d2", "mean", "variance", "ks_gap"].map(String::from),
                )?;
                t.row([
                    c.steps.to_string(),
                    c.n_traj.to_string(),
                    c.seed.to_string(),
                    fmt_num(c.lambda_d1),
                    fmt_num(c.lambda_d2),
                    fmt_num(c.mean),
                    fmt_num(c.variance),
                    fmt_num(c.ks_gap),
                ])?;
            }
        }
        t.finish()
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses entries separated by commas, semicolons or whitespace, with optional brackets.
pub fn parse_vector(text: &str) -> CliResult<ProbabilityVector> {
    let cleaned: String = text.chars().map(|c| if matches!(c, '(' | ')' | '[' | ']') { ' ' } else { c }).collect();
    let entries = cleaned
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::Input(format!("malformed vector entry '{s}'"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ProbabilityVector::new(entries)?)
}

/// Reads a protocol from a path, or from the bundled set by name.
pub fn load_protocol(name: &str) -> CliResult<RisProtocol> {
    let text = match BUNDLED.iter().find(|(n, _)| *n == name || format!("{n}.json") == name) {
        Some((_, body)) if !Path::new(name).exists() => body.to_string(),
        _ => read_file(Path::new(name))?,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(RisProtocol::from_json(&value)?)
}

fn initial_state(proto: &RisProtocol, which: &str) -> CliResult<DensityMatrix> {
    match which {
        "invariant" => Ok(analyze(&reduced_map(proto, 0.0)?)?.invariant_state),
        "mixed" => Ok(DensityMatrix::maximally_mixed(proto.d_s())),
        other => match other.strip_prefix("diag:") {
            Some(list) => Ok(DensityMatrix::from_diagonal(parse_vector(list)?.as_slice())?),
            None => Err(CliError::Usage(format!("--init must be invariant, mixed or diag:..., got '{other}'"))),
        },
    }
}

/// Parses arguments, runs the command, writes the output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = cfg.execute().and_then(|text| match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match out {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("majflow: {e}");
            e.exit_code()
        }
    }
}
