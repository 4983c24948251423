//! Command-line surface.
//!
//! Exit codes: 0 for Satisfied, Null and Complete; 1 for Violated, NotNull,
//! Inconclusive and failed runs; 2 for usage and input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use dischelm_core::fdeop::direct_discretize;
use dischelm_core::helmholtz::{check_helmholtz, check_selfadjoint};
use dischelm_core::integrate::{self, InitialGuess, StepConfig, TrajectoryStatus};
use dischelm_core::lagrange::{
    el_residual, null_check, null_decompose, verify_null_decomposition, verify_synthesis, ElOperator,
    SynthesizedLagrangian, DEFAULT_QUAD_ORDER,
};
use dischelm_core::{
    ContinuousOp, Error as CoreError, EvalError, LagrangianCouple, NullVerdict, Partition, Report, SamplingConfig,
    Scalar, SecondOrderOp, StencilOperator, Verdict,
};

use crate::io::{self, IoError, Role, SpecFile};
use crate::report::{to_json, ComparisonJson, DecompositionJson, ReportJson};

#[derive(Debug, Parser)]
#[command(
    name = "dischelm",
    version,
    about = "Discrete Helmholtz analysis of second-order difference schemes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the discrete Helmholtz condition of a scheme.
    CheckHelmholtz(CheckArgs),
    /// Sample self-adjointness of the scheme's Fréchet derivative.
    CheckSelfadjoint(CheckArgs),
    /// Build a Lagrangian couple for a scheme and verify it reproduces the scheme.
    Synthesize(SynthesizeArgs),
    /// Euler-Lagrange residual of a couple along a grid, or against a scheme.
    ElResidual(ElResidualArgs),
    /// Sample whether a couple is null.
    NullCheck(CoupleArgs),
    /// Split a null couple into a potential and a time-only term.
    NullDecompose(CoupleArgs),
    /// March a scheme forward from two initial values.
    Integrate(IntegrateArgs),
    /// March two schemes from the same data and report their deviation.
    Compare(CompareArgs),
    /// Run the worked examples end to end.
    Demo(DemoArgs),
}

/// Where a scheme comes from.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct OpSource {
    /// Scheme body in x, vm, vp, w, t, xi.
    #[arg(long, allow_hyphen_values = true)]
    pub op: Option<String>,
    /// Operator file; a couple file yields its Euler-Lagrange scheme.
    #[arg(long)]
    pub op_file: Option<PathBuf>,
    /// Continuous operator in x, v, w, t; requires --blend.
    #[arg(long, allow_hyphen_values = true)]
    pub continuous: Option<String>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct OpSourceB {
    #[arg(long, allow_hyphen_values = true)]
    pub op_b: Option<String>,
    #[arg(long)]
    pub op_b_file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub continuous_b: Option<String>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = true)]
pub struct CoupleSource {
    /// Minus half in x, v, t, xi.
    #[arg(long, allow_hyphen_values = true)]
    pub l_minus: Option<String>,
    /// Plus half in x, v, t, xi.
    #[arg(long, allow_hyphen_values = true)]
    pub l_plus: Option<String>,
    #[arg(long, conflicts_with_all = ["l_minus", "l_plus"])]
    pub couple_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub grids: usize,
    #[arg(long, default_value_t = 4)]
    pub n_min: usize,
    #[arg(long, default_value_t = 32)]
    pub n_max: usize,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.5])]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub amp: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_rel: f64,
}

impl SamplingArgs {
    pub fn config(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            grids: self.grids,
            n_min: self.n_min,
            n_max: self.n_max,
            h_set: self.h.clone(),
            q_amplitude: self.amp,
            tol_abs: self.tol_abs,
            tol_rel: self.tol_rel,
            ..SamplingConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: OpSource,
    #[arg(long, allow_hyphen_values = true)]
    pub blend: Option<f64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub source: OpSource,
    #[arg(long, allow_hyphen_values = true)]
    pub blend: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub anchor_y: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub anchor_z: f64,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Couple file to write; the verification report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["grid", "op", "op_file"])))]
pub struct ElResidualArgs {
    #[command(flatten)]
    pub couple: CoupleSource,
    /// Grid function CSV; prints `p,t,residual`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Scheme to compare against over sampled grids.
    #[arg(long, allow_hyphen_values = true)]
    pub op: Option<String>,
    #[arg(long)]
    pub op_file: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub couple: CoupleSource,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GuessArg {
    Linear,
    Previous,
}

#[derive(Debug, Clone, Args)]
pub struct StepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub q1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub newton_max_iter: usize,
    #[arg(long, value_enum, default_value_t = GuessArg::Linear)]
    pub guess: GuessArg,
}

impl StepArgs {
    fn partition(&self) -> Result<Partition, CliError> {
        Ok(Partition::new(self.t0, self.h, self.steps)?)
    }

    fn config(&self) -> Result<StepConfig, CliError> {
        let cfg = StepConfig {
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            initial_guess: match self.guess {
                GuessArg::Linear => InitialGuess::LinearExtrapolation,
                GuessArg::Previous => InitialGuess::PreviousValue,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub source: OpSource,
    #[arg(long, allow_hyphen_values = true)]
    pub blend: Option<f64>,
    #[command(flatten)]
    pub step: StepArgs,
    /// Trajectory CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: OpSource,
    #[arg(long, allow_hyphen_values = true)]
    pub blend: Option<f64>,
    #[command(flatten)]
    pub source_b: OpSourceB,
    #[arg(long, allow_hyphen_values = true)]
    pub blend_b: Option<f64>,
    #[command(flatten)]
    pub step: StepArgs,
    /// Fail when the deviation exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub grids: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl From<dischelm_core::ParseError> for CliError {
    fn from(e: dischelm_core::ParseError) -> Self {
        CliError::Core(e.into())
    }
}

/// Scheme given on the command line: an expression or a couple's
/// Euler-Lagrange map.
#[derive(Debug, Clone)]
pub enum Scheme {
    Expr(SecondOrderOp),
    Couple(LagrangianCouple),
}

impl StencilOperator for Scheme {
    fn apply<S: Scalar>(&self, args: &[S; 6]) -> Result<S, EvalError> {
        match self {
            Scheme::Expr(op) => op.apply(args),
            Scheme::Couple(c) => ElOperator(c).apply(args),
        }
    }
}

impl Scheme {
    /// The scheme whose couple is synthesized; couples are synthesized from
    /// their own Euler-Lagrange map only when given as expressions.
    fn expr(&self) -> Result<&SecondOrderOp, CliError> {
        match self {
            Scheme::Expr(op) => Ok(op),
            Scheme::Couple(_) => Err(CliError::Usage(
                "a couple file cannot be synthesized from; pass a scheme".into(),
            )),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn discretize(text: &str, blend: Option<f64>) -> Result<SecondOrderOp, CliError> {
    let blend = blend.ok_or_else(|| CliError::Usage("a continuous operator needs --blend".into()))?;
    Ok(direct_discretize(&ContinuousOp::parse(text)?, blend)?)
}

fn resolve_scheme(
    op: Option<&str>,
    file: Option<&Path>,
    continuous: Option<&str>,
    blend: Option<f64>,
) -> Result<Scheme, CliError> {
    if blend.is_some() && continuous.is_none() && file.is_none() {
        return Err(CliError::Usage("--blend applies only to continuous operators".into()));
    }
    if let Some(text) = op {
        return Ok(Scheme::Expr(SecondOrderOp::parse(text)?));
    }
    if let Some(text) = continuous {
        return Ok(Scheme::Expr(discretize(text, blend)?));
    }
    let path = file.ok_or_else(|| CliError::Usage("no operator given".into()))?;
    let spec = io::parse_spec_file(&read_file(path)?)?;
    match &spec {
        SpecFile::Operator {
            role: Role::Fde,
            expr,
            label,
        } => {
            if blend.is_some() {
                return Err(CliError::Usage("--blend applies only to continuous operators".into()));
            }
            Ok(Scheme::Expr(io::scheme_from(expr, label.as_deref())?))
        }
        SpecFile::Operator {
            role: Role::Continuous,
            expr,
            ..
        } => Ok(Scheme::Expr(discretize(expr, blend)?)),
        SpecFile::Operator {
            role: Role::Lagrangian, ..
        } => Err(CliError::Usage(format!(
            "{}: a single Lagrangian is not a scheme",
            path.display()
        ))),
        _ => Ok(Scheme::Couple(io::couple_from_spec(&spec)?)),
    }
}

fn scheme_a(src: &OpSource, blend: Option<f64>) -> Result<Scheme, CliError> {
    resolve_scheme(
        src.op.as_deref(),
        src.op_file.as_deref(),
        src.continuous.as_deref(),
        blend,
    )
}

fn scheme_b(src: &OpSourceB, blend: Option<f64>) -> Result<Scheme, CliError> {
    resolve_scheme(
        src.op_b.as_deref(),
        src.op_b_file.as_deref(),
        src.continuous_b.as_deref(),
        blend,
    )
}

fn resolve_couple(src: &CoupleSource) -> Result<LagrangianCouple, CliError> {
    match &src.couple_file {
        Some(path) => Ok(io::couple_from_spec(&io::parse_spec_file(&read_file(path)?)?)?),
        None => Ok(LagrangianCouple::parse(
            src.l_minus.as_deref().unwrap_or("0"),
            src.l_plus.as_deref().unwrap_or("0"),
        )?),
    }
}

fn sampling(args: &SamplingArgs) -> Result<SamplingConfig, CliError> {
    let cfg = args.config();
    cfg.validate()?;
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::File {
            path: p.to_path_buf(),
            source,
        }),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Satisfied => 0,
        Verdict::Violated | Verdict::Inconclusive => 1,
    }
}

fn null_code(v: NullVerdict) -> i32 {
    match v {
        NullVerdict::Null => 0,
        NullVerdict::NotNull | NullVerdict::Inconclusive => 1,
    }
}

fn emit_report(r: &Report, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32, CliError> {
    emit(out, &to_json(&ReportJson::new(r)), stdout)?;
    Ok(verdict_code(r.verdict))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                2
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

pub fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::CheckHelmholtz(a) => {
            let op = scheme_a(&a.source, a.blend)?;
            emit_report(
                &check_helmholtz(&op, &sampling(&a.sampling)?)?,
                a.out.as_deref(),
                stdout,
            )
        }
        Command::CheckSelfadjoint(a) => {
            let op = scheme_a(&a.source, a.blend)?;
            emit_report(
                &check_selfadjoint(&op, &sampling(&a.sampling)?)?,
                a.out.as_deref(),
                stdout,
            )
        }
        Command::Synthesize(a) => {
            let scheme = scheme_a(&a.source, a.blend)?;
            let cfg = sampling(&a.sampling)?;
            let op = scheme.expr()?;
            let couple = SynthesizedLagrangian::new(op.clone(), a.quad_order)?
                .with_anchors(a.anchor_y, a.anchor_z)
                .into_couple();
            if let Some(path) = &a.out {
                let text = io::format_couple(&couple).expect("synthesized couples have a file form");
                emit(Some(path), &text, stdout)?;
            }
            emit_report(&verify_synthesis(op, &couple, &cfg)?, None, stdout)
        }
        Command::ElResidual(a) => {
            let couple = resolve_couple(&a.couple)?;
            if let Some(path) = &a.grid {
                let q = io::read_grid_fn(read_file(path)?.as_bytes())?;
                let el = el_residual(&couple, &q)?;
                let mut text = String::from("p,t,residual\n");
                for (p, r) in el.iter() {
                    text.push_str(&format!("{p},{:?},{r:?}\n", q.partition().time(p)));
                }
                emit(a.out.as_deref(), &text, stdout)?;
                return Ok(0);
            }
            let op = resolve_scheme(a.op.as_deref(), a.op_file.as_deref(), None, None)?;
            emit_report(
                &verify_synthesis(&op, &couple, &sampling(&a.sampling)?)?,
                a.out.as_deref(),
                stdout,
            )
        }
        Command::NullCheck(a) => {
            let couple = resolve_couple(&a.couple)?;
            let r = null_check(&couple, &sampling(&a.sampling)?)?;
            emit(
                a.out.as_deref(),
                &to_json(&ReportJson::with_verdict(&r.report, r.verdict.as_str())),
                stdout,
            )?;
            Ok(null_code(r.verdict))
        }
        Command::NullDecompose(a) => null_decompose_cmd(a, stdout),
        Command::Integrate(a) => {
            let op = scheme_a(&a.source, a.blend)?;
            let tr = integrate::run(&op, a.step.q0, a.step.q1, a.step.partition()?, &a.step.config()?)?;
            let mut buf = Vec::new();
            io::write_trajectory(&tr, &mut buf)?;
            emit(a.out.as_deref(), &String::from_utf8_lossy(&buf), stdout)?;
            if let TrajectoryStatus::FailedAtStep(p, e) = tr.status() {
                writeln!(stderr, "integration stopped at step {p}: {e}")?;
            }
            Ok(if tr.is_complete() { 0 } else { 1 })
        }
        Command::Compare(a) => {
            let op_a = scheme_a(&a.source, a.blend)?;
            let op_b = scheme_b(&a.source_b, a.blend_b)?;
            let cmp = integrate::compare(
                &op_a,
                &op_b,
                a.step.q0,
                a.step.q1,
                a.step.partition()?,
                &a.step.config()?,
            )?;
            let json = ComparisonJson {
                max_deviation: cmp.max_deviation,
                deviations: cmp.deviations.clone(),
                status_a: cmp.a.status().to_string(),
                status_b: cmp.b.status().to_string(),
            };
            emit(a.out.as_deref(), &to_json(&json), stdout)?;
            let within = a.tol.is_none_or(|tol| cmp.max_deviation <= tol);
            Ok(if cmp.a.is_complete() && cmp.b.is_complete() && within {
                0
            } else {
                1
            })
        }
        Command::Demo(a) => crate::demo::run(a.seed, a.grids, stdout),
    }
}

fn null_decompose_cmd(a: &CoupleArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let couple = resolve_couple(&a.couple)?;
    let cfg = sampling(&a.sampling)?;
    let refused = |max_residual: f64, reason: String| DecompositionJson {
        report: ReportJson {
            verdict: NullVerdict::NotNull.as_str().to_string(),
            max_residual,
            samples: 0,
            tolerance_abs: cfg.tol_abs,
            tolerance_rel: cfg.tol_rel,
            witness: None,
        },
        residual_bound: None,
        reason: Some(reason),
    };
    let json = match null_decompose(&couple) {
        Ok(d) => {
            let r = verify_null_decomposition(&couple, &d, &cfg)?;
            DecompositionJson {
                report: ReportJson::with_verdict(&r, NullVerdict::from(r.verdict).as_str()),
                residual_bound: Some(d.residual_bound()),
                reason: None,
            }
        }
        Err(e @ CoreError::NotSeparable { residual }) => refused(residual.abs(), e.to_string()),
        Err(e @ CoreError::GammaDependsOnX { deviation }) => refused(deviation, e.to_string()),
        Err(e) => return Err(e.into()),
    };
    emit(a.out.as_deref(), &to_json(&json), stdout)?;
    Ok(if json.report.verdict == NullVerdict::Null.as_str() {
        0
    } else {
        1
    })
}
