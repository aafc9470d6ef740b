//! Command-line front end. Every run resolves one [`ExperimentConfig`] and
//! stamps its hash, the seed and the version into the output header, so that
//! equal inputs give byte-identical output.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{
    read_kick_file, ExperimentConfig, GrowthSection, KickKind, KicksSection, ObservableKind,
    ObservableSection, OutputSection, QmSection, SystemSection,
};

use crate::euclid::{decompose_primitive, length_budget, EuclidError, IntVector2};
use crate::growth::{self, GrowthError};
use crate::mixing::{self, MixError, Observable, SequentialSystem, ZeroTime};
use crate::qmorph::{build_engine, QmEngine, QmError, REvaluation};
use crate::sl2core::{
    is_conjugate_to_inverse, prime_criterion, Sl2Error, UnimodularMatrix, DEFAULT_TRIAL_BOUND,
};
use config::parse_matrix;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("mathematical precondition violated: {0}")]
    Math(String),
    #[error("numerically ambiguous: {0}")]
    Ambiguous(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Math(_) => 3,
            CliError::Ambiguous(_) => 4,
        }
    }
}

impl From<Sl2Error> for CliError {
    fn from(e: Sl2Error) -> Self {
        match e {
            Sl2Error::Determinant(_) | Sl2Error::Parse(_) => CliError::Parse(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<EuclidError> for CliError {
    fn from(e: EuclidError) -> Self {
        match e {
            EuclidError::Parse(_) => CliError::Parse(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<QmError> for CliError {
    fn from(e: QmError) -> Self {
        match e {
            QmError::NumericallyAmbiguous { .. } => CliError::Ambiguous(e.to_string()),
            QmError::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<MixError> for CliError {
    fn from(e: MixError) -> Self {
        match e {
            MixError::InvalidObservable(_) | MixError::InvalidArgument(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Mixing(m) => m.into(),
            _ => CliError::Math(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "catmix",
    version,
    about = "Mixing and growth experiments for sequential toral automorphisms"
)]
pub struct Cli {
    /// TOML experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    pub print_defaults: bool,
    /// Hyperbolic base matrix "a,b,c,d".
    #[arg(long = "h", global = true, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Kick period.
    #[arg(long, global = true)]
    pub t: Option<u32>,
    /// Number of compositions.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Kick file, one matrix per line.
    #[arg(long, global = true)]
    pub kicks: Option<PathBuf>,
    /// Observable as a JSON document.
    #[arg(long, global = true)]
    pub obs: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub engine_tol: Option<f64>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify a matrix and decide whether it is conjugate to its inverse.
    Classify {
        #[arg(allow_hyphen_values = true)]
        matrix: String,
    },
    /// Write a primitive vector as a word in elementary matrices.
    Decompose {
        #[arg(allow_hyphen_values = true)]
        vector: String,
    },
    /// Correlation decay of the kicked system.
    Mix,
    /// Evaluate the homogeneous quasi-morphism attached to h.
    Qm {
        /// Elements to evaluate; defaults to the config list, then to h.
        #[arg(long, allow_hyphen_values = true)]
        g: Vec<String>,
        /// Build the engine from this matrix instead of h.
        #[arg(long, allow_hyphen_values = true)]
        engine: Option<String>,
    },
    /// Trace certificate, trace bound and trace growth.
    Growth {
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
    },
    /// Bounds on the distance to the identity in elliptic and parabolic factors.
    Rho {
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
    },
}

/// Applies the flag overrides on top of the file config or the defaults.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(h) = &cli.h {
        cfg.system.h = h.clone();
    }
    if let Some(t) = cli.t {
        cfg.system.t = t;
        cfg.system.t_max = cfg.system.t_max.max(t);
    }
    if let Some(n) = cli.nmax {
        cfg.system.n_max = n;
    }
    if let Some(k) = &cli.kicks {
        cfg.kicks.kind = KickKind::File;
        cfg.kicks.file = Some(k.clone());
    }
    if let Some(o) = &cli.obs {
        cfg.observable.kind = ObservableKind::File;
        cfg.observable.file = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.engine.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.out = Some(o.clone());
    }
    if let Some(t) = cli.engine_tol {
        cfg.engine.tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args`, runs the command and returns the rendered output together
/// with its destination.
pub fn execute<I, T>(args: I) -> Result<(String, Option<PathBuf>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Parse(e.to_string()))?;
    let cfg = resolve_config(&cli)?;
    let text = match &cli.command {
        _ if cli.print_defaults => cfg.to_toml(),
        None => return Err(CliError::Parse("no subcommand given, see --help".into())),
        Some(cmd) => render(cmd, &cfg)?,
    };
    Ok((text, cfg.output.out.clone()))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        let _ = write!(stderr, "{e}");
        return 2;
    }
    let result = execute(args).and_then(|(text, out)| match out {
        Some(path) => std::fs::write(path, text).map_err(CliError::from),
        None => stdout.write_all(text.as_bytes()).map_err(CliError::from),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "catmix: {e}");
            e.exit_code()
        }
    }
}

fn meta(command: &str, cfg: &ExperimentConfig) -> Value {
    json!({
        "version": VERSION,
        "command": command,
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "config": cfg.canonical_toml(),
    })
}

fn json_doc(command: &str, cfg: &ExperimentConfig, body: Value) -> String {
    let mut doc = json!({ "meta": meta(command, cfg) });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
    s.push('\n');
    s
}

fn render(cmd: &Command, cfg: &ExperimentConfig) -> Result<String, CliError> {
    match cmd {
        Command::Classify { matrix } => classify(matrix, cfg),
        Command::Decompose { vector } => decompose(vector, cfg),
        Command::Mix => mix(cfg),
        Command::Qm { g, engine } => qm(g, engine.as_deref(), cfg),
        Command::Growth { g } => growth_cmd(g.as_deref(), cfg),
        Command::Rho { g } => rho(g.as_deref(), cfg),
    }
}

fn parse_arg_matrix(s: &str) -> Result<UnimodularMatrix, CliError> {
    s.parse::<UnimodularMatrix>().map_err(CliError::from)
}

fn classify(matrix: &str, cfg: &ExperimentConfig) -> Result<String, CliError> {
    let m = parse_arg_matrix(matrix)?;
    let class = m.classify();
    let mut body = json!({ "matrix": m.to_string(), "class": class.to_string(), "trace": m.trace().to_string() });
    if m.is_hyperbolic() {
        let v = is_conjugate_to_inverse(&m)?;
        body["conjugate_to_inverse"] = json!({
            "answer": v.answer,
            "witness": v.witness.map(|w| w.to_string()),
            "method": v.method,
        });
        body["prime_criterion"] = match prime_criterion(&m, DEFAULT_TRIAL_BOUND) {
            Ok(p) => serde_json::to_value(p).expect("serializable"),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    Ok(json_doc("classify", cfg, body))
}

fn parse_vector(s: &str) -> Result<IntVector2, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [p, q] = parts.as_slice() else {
        return Err(CliError::Parse(format!("expected \"p,q\", got {s:?}")));
    };
    let num = |x: &str| {
        x.parse::<num_bigint::BigInt>()
            .map_err(|e| CliError::Parse(format!("{x:?}: {e}")))
    };
    Ok(IntVector2::new(num(p)?, num(q)?))
}

fn decompose(vector: &str, cfg: &ExperimentConfig) -> Result<String, CliError> {
    let v = parse_vector(vector)?;
    let word = decompose_primitive(&v)?;
    let body = json!({
        "vector": [v.p.to_string(), v.q.to_string()],
        "word": word,
        "length": word.len(),
        "length_budget": length_budget(&v),
        "matrix": word.matrix().to_string(),
    });
    Ok(json_doc("decompose", cfg, body))
}

struct MixRow {
    n: usize,
    min_expansion: f64,
    corr: num_complex::Complex64,
    tail_bound: f64,
}

fn probe_zero_time(obs: &Observable, sys: &SequentialSystem) -> ZeroTime {
    mixing::zero_time(&obs.head(), sys)
}

fn mix(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let obs = cfg.observable()?;
    let n_max = cfg.system.n_max;
    // smallest period in [t, t_max] at which the probe reaches zero
    let mut chosen = None;
    for t in cfg.system.t..=cfg.system.t_max {
        let sys = mixing::compose(&cfg.system_spec(t)?, n_max)?;
        let zt = probe_zero_time(&obs, &sys);
        let reached = matches!(zt, ZeroTime::At(_));
        chosen = Some((t, sys, zt));
        if reached {
            break;
        }
    }
    let (t, sys, zt) = chosen.expect("t range is nonempty");

    let mut rows = Vec::with_capacity(n_max);
    for (n, f) in sys.iter() {
        let me = mixing::min_expansion(f, cfg.system.v_max);
        let (corr, tail_bound) = if obs.is_finite() {
            (mixing::correlation(&obs, &obs, f)?, 0.0)
        } else {
            let big = mixing::safe_truncation(f);
            let cut = num_traits::ToPrimitive::to_u64(&big)
                .unwrap_or(u64::MAX)
                .max(1);
            let hb = mixing::correlation_bound_holder(&obs, f, cut)?;
            (hb.exact_head, hb.tail_bound)
        };
        rows.push(MixRow {
            n,
            min_expansion: me.value,
            corr,
            tail_bound,
        });
    }

    let series: Vec<(u32, f64)> = rows
        .iter()
        .map(|r| (r.n as u32, r.corr.norm() + r.tail_bound))
        .collect();
    let fit = match mixing::decay_fit(&series) {
        Ok(f) => format!(
            "rate = {}; r2 = {}; points = {}; zeros = {}",
            f.rate, f.r2, f.points, f.zeros
        ),
        Err(MixError::AllZero) => "rate = superexponential; all correlations vanish".to_string(),
        Err(e) => format!("rate = unavailable; {e}"),
    };

    let mut s = String::new();
    s.push_str(&format!(
        "# catmix {VERSION}\n# command = mix\n# config_sha256 = {}\n# seed = {}\n",
        cfg.hash(),
        cfg.seed
    ));
    for line in cfg.canonical_toml().lines() {
        s.push_str(&format!("# config: {line}\n"));
    }
    s.push_str("n,min_expansion,corr_re,corr_im,corr_abs,tail_bound\n");
    for r in &rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.min_expansion,
            r.corr.re,
            r.corr.im,
            r.corr.norm(),
            r.tail_bound
        ));
    }
    let zt = match zt {
        ZeroTime::At(n) => n.to_string(),
        ZeroTime::NotReached => "not_reached".to_string(),
    };
    s.push_str(&format!(
        "# summary: t = {t}; t_searched = {}..={}; zero_time = {zt}\n",
        cfg.system.t, cfg.system.t_max
    ));
    s.push_str(&format!("# summary: {fit}\n"));
    Ok(s)
}

fn engine_for(matrix: &UnimodularMatrix, cfg: &ExperimentConfig) -> Result<QmEngine, CliError> {
    Ok(build_engine(matrix, cfg.engine.clone())?)
}

fn engine_summary(e: &QmEngine) -> Value {
    json!({
        "h": e.h().to_string(),
        "translation_length": e.translation_length(),
        "pattern_length": e.pattern().len(),
        "defect": e.defect(),
    })
}

fn qm(g: &[String], engine: Option<&str>, cfg: &ExperimentConfig) -> Result<String, CliError> {
    let h = match engine {
        Some(s) => parse_arg_matrix(s)?,
        None => cfg.h()?,
    };
    let e = engine_for(&h, cfg)?;
    let list: Vec<UnimodularMatrix> = if !g.is_empty() {
        g.iter()
            .map(|s| parse_arg_matrix(s))
            .collect::<Result<_, _>>()?
    } else if !cfg.qm.g.is_empty() {
        cfg.qm
            .g
            .iter()
            .map(|s| parse_matrix(s))
            .collect::<Result<_, _>>()?
    } else {
        vec![h.clone()]
    };
    let mut records = Vec::new();
    for x in list {
        let r = e.r_hom(&x, cfg.qm.n_max)?;
        records.push(REvaluation {
            g: x,
            n_max: cfg.qm.n_max,
            estimate: r.estimate,
            error_bar: r.error_bar,
        });
    }
    Ok(json_doc(
        "qm",
        cfg,
        json!({ "engine": engine_summary(&e), "records": records }),
    ))
}

fn target_or_last(g: Option<&str>, cfg: &ExperimentConfig) -> Result<UnimodularMatrix, CliError> {
    match g {
        Some(s) => parse_arg_matrix(s),
        None => {
            let sys = mixing::compose(&cfg.system_spec(cfg.system.t)?, cfg.system.n_max)?;
            Ok(sys.get(cfg.system.n_max).clone())
        }
    }
}

fn growth_cmd(g: Option<&str>, cfg: &ExperimentConfig) -> Result<String, CliError> {
    let f = target_or_last(g, cfg)?;
    let cert = growth::trace_certificate(&f)?;
    let e = engine_for(&cfg.h()?, cfg)?;
    let r = e.r_hom(&f, cfg.qm.n_max)?;
    let check = growth::trace_bound_check(&f, r.estimate, e.defect().value)?;
    let spec = cfg.system_spec(cfg.system.t)?;
    let lyap = growth::trace_lyapunov(&spec, cfg.system.n_max)?;
    let body = json!({
        "f": f.to_string(),
        "certificate": {
            "depth": cert.depth,
            "verified": cert.verify(),
            "depth_within_log_bound": cert.depth_within_log_bound(),
            "steps": cert.steps,
        },
        "r_hom": r,
        "trace_bound": check,
        "trace_lyapunov": lyap,
    });
    Ok(json_doc("growth", cfg, body))
}

fn rho(g: Option<&str>, cfg: &ExperimentConfig) -> Result<String, CliError> {
    let e = engine_for(&cfg.h()?, cfg)?;
    let dr = e.defect().value;
    let lip = cfg.growth.lip_const;
    let body = match g {
        Some(s) => {
            let g = parse_arg_matrix(s)?;
            let up = growth::rho_upper(&g);
            let r = e.r_hom(&g, cfg.qm.n_max)?;
            json!({
                "g": g.to_string(),
                "upper": up.upper,
                "verified": up.verify(&g),
                "witness": up.witness,
                "r_hom": r,
                "lower": growth::rho_lower(r.estimate, dr, lip)?,
            })
        }
        None => {
            let spec = cfg.system_spec(cfg.system.t)?;
            let bar = growth::rho_bar_kick_distance(&spec, cfg.system.n_max)?;
            let sys = mixing::compose(&spec, cfg.system.n_max)?;
            let mut lower = Vec::new();
            for (_, f) in sys.iter() {
                lower.push(growth::rho_lower(
                    e.r_hom(f, cfg.qm.n_max)?.estimate,
                    dr,
                    lip,
                )?);
            }
            json!({ "rho_bar": bar.bound, "upper": bar.per_n, "lower": lower })
        }
    };
    Ok(json_doc("rho", cfg, body))
}
