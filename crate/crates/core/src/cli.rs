//! Command-line surface of the `stabgeo` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 model
//! or input parse failure, 4 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{config_for_measure, load_model, LoadedModel, ModelConfig};
use crate::dependence::{self, Sense};
use crate::error::{Error, Result};
use crate::geometry;
use crate::linalg::{basis, dot, norm};
use crate::moments;
use crate::onesided::{self, OneSidedModel, PSumModel};
use crate::quadrature::{QuadLevels, SphereRule};
use crate::simulate::{self, McEstimate, SampleBatch};
use crate::special::signed_pow;
use crate::spectral::{Kind, StableModel};
use crate::tolerances::Z_SCORE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "stabgeo", version, about = "Geometry and simulation of multivariate stable laws")]
pub struct Cli {
    /// Report rendering.
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Tolerance for boolean geometric tests (default from the model file, else 1e-7).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Circle rule size for d = 2.
    #[arg(long, global = true)]
    pub circle: Option<usize>,
    /// Gauss–Legendre level for d = 3.
    #[arg(long, global = true)]
    pub product: Option<usize>,
    /// Random directions for d >= 4.
    #[arg(long, global = true)]
    pub random: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentKind {
    /// `E |xi|^lambda`; params: lambda.
    Norm,
    /// `E |<xi, u>|^lambda`; params: lambda, u_1, ..., u_d.
    Scalar,
    /// `E |xi_1|^l1 |xi_2|^l2`; params: l1, l2. With --signed, signed powers.
    Mixed,
    /// `E sign(xi_1 xi_2)`; no params.
    Sign,
    /// `P(xi in A R^2_+)`; params: a11, a12, a21, a22 (default identity).
    Orthant,
    /// `E <xi, u>^order` for one-sided laws; params: order, u_1, ..., u_d.
    Onesided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SenseArg {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Moments,
    Dependence,
    Onesided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OneSidedOp {
    /// `E exp(-<xi, u>)`, or the character expectation of a p-sum law.
    Laplace,
    /// `P(xi <= x)` for the max-stable law with the model's atoms.
    Cdf,
    /// `E <xi, u>^order`; positive orders below alpha or any negative order.
    Moment,
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model configuration file (JSON).
    pub model: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model file.
    Validate(ModelArg),
    /// Gauge of the star body at u.
    Gauge {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u: Vec<f64>,
    },
    /// Volume of the star body.
    Volume(ModelArg),
    /// Density at x.
    Density {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Moments and probabilities in closed form.
    Moment {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum)]
        kind: MomentKind,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<f64>,
        /// Signed powers for --kind mixed.
        #[arg(long)]
        signed: bool,
    },
    /// Covariation of <xi, u1> on <xi, u2>.
    Covariation {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u1: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u2: Vec<f64>,
    },
    /// Linearity of the regression of coordinate k on the others.
    Regress {
        #[command(flatten)]
        model: ModelArg,
        /// Regressed coordinate, counted from 1.
        #[arg(long, default_value_t = 1)]
        axis: usize,
    },
    /// James orthogonality of the second coordinate to the first, or of blocks.
    James {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strong: bool,
        /// Block sizes d1,d2 for --strong.
        #[arg(long, value_delimiter = ',')]
        split: Vec<usize>,
        /// Directions per block for --strong.
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// One-sided and max-stable quantities.
    Onesided {
        #[arg(value_enum)]
        op: OneSidedOp,
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        order: Option<f64>,
    },
    /// Draw samples and write them as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(short = 'n', long, default_value_t = 100_000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Estimate a discrete spectral measure from the tail of a sample file.
    Estimate {
        #[arg(long)]
        samples: PathBuf,
        #[arg(short = 't', long)]
        threshold: f64,
        /// Group directions into this many angular bins (d = 2).
        #[arg(long)]
        bins: Option<usize>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Extremal portfolio direction.
    Portfolio {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        mu: Vec<f64>,
        #[arg(short = 'r', long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "min")]
        sense: SenseArg,
    },
    /// Compare closed forms with Monte Carlo estimates.
    Verify {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(short = 'n', long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// One formula-versus-simulation comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub formula: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    /// Test statistic compared with `threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when the z-score is below [`Z_SCORE`].
    fn z(name: impl Into<String>, formula: f64, est: McEstimate) -> Self {
        let z = est.z_score(formula);
        Check {
            name: name.into(),
            formula,
            mc_mean: est.mean,
            mc_se: est.se,
            statistic: z,
            threshold: Z_SCORE,
            pass: z < Z_SCORE,
        }
    }

    /// Passes when `sqrt(n) |mean - formula| < 4`.
    fn root_n(name: impl Into<String>, formula: f64, est: McEstimate) -> Self {
        let s = (est.mean - formula).abs() * (est.n as f64).sqrt();
        Check {
            name: name.into(),
            formula,
            mc_mean: est.mean,
            mc_se: est.se,
            statistic: s,
            threshold: 4.0,
            pass: s < 4.0,
        }
    }
}

/// Result of one command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub operation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub inputs: Map<String, Value>,
    pub values: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub tag: String,
}

impl Report {
    fn new(operation: &str, tag: &str) -> Self {
        Report {
            operation: operation.into(),
            model: None,
            inputs: Map::new(),
            values: Map::new(),
            error: None,
            checks: Vec::new(),
            tag: tag.into(),
        }
    }

    fn input(mut self, key: &str, v: impl Serialize) -> Self {
        self.inputs.insert(key.into(), json!(v));
        self
    }

    fn value(mut self, key: &str, v: impl Serialize) -> Self {
        self.values.insert(key.into(), json!(v));
        self
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Line-oriented rendering; every number is printed exactly as in the
    /// JSON rendering.
    pub fn to_text(&self) -> String {
        let num = |v: &Value| v.to_string();
        let mut s = format!("operation: {}\n", self.operation);
        if let Some(m) = &self.model {
            s += &format!("model: {m}\n");
        }
        for (k, v) in &self.inputs {
            s += &format!("input {k}: {}\n", num(v));
        }
        for (k, v) in &self.values {
            s += &format!("{k}: {}\n", num(v));
        }
        if let Some(e) = self.error {
            s += &format!("error: {}\n", num(&json!(e)));
        }
        for c in &self.checks {
            s += &format!(
                "check {}: formula={} mc_mean={} mc_se={} statistic={} threshold={} {}\n",
                c.name,
                num(&json!(c.formula)),
                num(&json!(c.mc_mean)),
                num(&json!(c.mc_se)),
                num(&json!(c.statistic)),
                num(&json!(c.threshold)),
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        if !self.checks.is_empty() {
            s += &format!("verdict: {}\n", if self.passed() { "PASS" } else { "FAIL" });
        }
        s += &format!("tag: {}\n", self.tag);
        s
    }
}

/// Quadrature levels, tolerance and default seed for one invocation.
pub struct Context {
    pub levels: QuadLevels,
    pub tol: f64,
    pub seed: u64,
}


fn load(path: &Path, cli: &Cli) -> Result<(LoadedModel, Context)> {
    let (cfg, model) = load_model(path).map_err(|e| match e {
        Error::Io(m) => Error::Parse(m),
        other => other,
    })?;
    Ok((model, context(Some(&cfg), cli)))
}

fn context(cfg: Option<&ModelConfig>, cli: &Cli) -> Context {
    let mut levels = cfg.map(|c| c.levels()).unwrap_or_default();
    if let Some(c) = cli.circle {
        levels.circle = c;
    }
    if let Some(p) = cli.product {
        levels.product = p;
    }
    if let Some(r) = cli.random {
        levels.random = r;
    }
    let tol = cli.tol.or(cfg.and_then(|c| c.tolerance)).unwrap_or(crate::tolerances::GEOMETRY);
    Context { levels, tol, seed: cfg.and_then(|c| c.seed).unwrap_or(0) }
}

fn rule_for(model: &StableModel, levels: &QuadLevels) -> Result<SphereRule> {
    if model.dim() == 2 {
        geometry::adapted_rule(model, levels)
    } else {
        levels.rule(model.dim())
    }
}

fn fingerprint(model: &LoadedModel) -> Result<String> {
    Ok(match model {
        LoadedModel::Stable(m) => m.fingerprint(),
        LoadedModel::OneSided(m) => m.to_model()?.fingerprint(),
        LoadedModel::PSum(m) => {
            let d = json!({"p": m.p(), "core": m.core().to_model()?.describe()});
            sha2_hex(&d)
        }
    })
}

fn sha2_hex(v: &Value) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(v.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name), runs the command, and
/// writes the report to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => report.to_json() + "\n",
                Format::Text => report.to_text(),
            };
            let _ = write!(out, "{text}");
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
        Err(e) => {
            let _ = writeln!(err, "stabgeo: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Validate(m) => {
            let (model, _) = load(&m.model, cli)?;
            Ok(Report::new("validate", "validate")
                .value("valid", true)
                .value("kind", model.kind_name())
                .value("alpha", model.alpha())
                .value("dimension", model.dim())
                .value("fingerprint", fingerprint(&model)?))
        }
        Command::Gauge { model, u } => {
            let (model, _) = load(&model.model, cli)?;
            let g = match &model {
                LoadedModel::Stable(m) => m.gauge(u)?,
                LoadedModel::OneSided(m) => m.to_model()?.gauge(u)?,
                LoadedModel::PSum(_) => return Err(Error::KindMismatch("p-sum models have no gauge".into())),
            };
            Ok(with_model(Report::new("gauge", "gauge").input("u", u).value("gauge", g), &model)?)
        }
        Command::Volume(m) => {
            let (model, ctx) = load(&m.model, cli)?;
            let sm = model.symmetric()?;
            let est = geometry::volume(sm, &rule_for(sm, &ctx.levels)?)?;
            let mut r = Report::new("volume", "volume").value("volume", est.value);
            r.error = Some(est.error);
            with_model(r, &model)
        }
        Command::Density { model, x } => {
            let (model, ctx) = load(&model.model, cli)?;
            let sm = model.symmetric()?;
            let est = moments::density(sm, x, &rule_for(sm, &ctx.levels)?)?;
            let mut r = Report::new("density", "density").input("x", x).value("density", est.value);
            r.error = Some(est.error);
            with_model(r, &model)
        }
        Command::Moment { model, kind, params, signed } => {
            let (model, ctx) = load(&model.model, cli)?;
            let r = moment(&model, *kind, params, *signed, &ctx)?;
            with_model(r.input("params", params), &model)
        }
        Command::Covariation { model, u1, u2 } => {
            let (model, _) = load(&model.model, cli)?;
            let c = dependence::covariation(model.symmetric()?, u1, u2)?;
            with_model(
                Report::new("covariation", "covariation").input("u1", u1).input("u2", u2).value("covariation", c),
                &model,
            )
        }
        Command::Regress { model, axis } => {
            let (model, ctx) = load(&model.model, cli)?;
            let sm = model.symmetric()?;
            if *axis == 0 || *axis > sm.dim() {
                return Err(Error::InvalidArgument(format!("axis must lie in 1..={}", sm.dim())));
            }
            let rep = dependence::regression_linearity_check(sm, axis - 1, &ctx.levels, ctx.tol)?;
            let mut r = Report::new("regress", "regression")
                .input("axis", axis)
                .input("tolerance", ctx.tol)
                .value("linear", rep.is_linear)
                .value("normal", &rep.normal)
                .value("residual", rep.residual);
            if sm.dim() == 2 && *axis == 1 {
                r = r.value("slope", dependence::regression_coefficient(sm)?);
            }
            with_model(r, &model)
        }
        Command::James { model, strong, split, nodes } => {
            let (model, ctx) = load(&model.model, cli)?;
            let sm = model.symmetric()?;
            let r = if *strong {
                let (d1, d2) = match split.as_slice() {
                    [a, b] => (*a, *b),
                    [] if sm.dim() == 2 => (1, 1),
                    _ => return Err(Error::InvalidArgument("--split needs two block sizes d1,d2".into())),
                };
                let rep = dependence::strong_james_check(sm, d1, d2, *nodes, ctx.tol)?;
                Report::new("james", "strong-james")
                    .input("split", [d1, d2])
                    .input("tolerance", ctx.tol)
                    .value("strong", rep.strong)
                    .value("weak", rep.weak)
                    .value("worst_ratio", rep.worst_ratio)
            } else {
                let ok = dependence::james_orthogonal_bivariate(sm, &ctx.levels.rule(2)?, ctx.tol)?;
                Report::new("james", "james").input("tolerance", ctx.tol).value("orthogonal", ok)
            };
            with_model(r, &model)
        }
        Command::Onesided { op, model, u, x, order } => {
            let (model, _) = load(&model.model, cli)?;
            let r = onesided_cmd(&model, *op, u, x, *order)?;
            with_model(r, &model)
        }
        Command::Simulate { model, n, seed, output } => {
            let (model, ctx) = load(&model.model, cli)?;
            let seed = seed.unwrap_or(ctx.seed);
            let batch = draw(&model, *n, seed)?;
            batch.write_csv(output)?;
            Ok(Report::new("simulate", "simulate")
                .input("n", n)
                .input("seed", seed)
                .input("rng", simulate::RNG_NAME)
                .value("output", output.display().to_string())
                .value("fingerprint", &batch.fingerprint))
        }
        Command::Estimate { samples, threshold, bins, output } => {
            let batch = SampleBatch::read_csv(samples)?;
            let kind = match batch.kind.as_str() {
                "symmetric" => Kind::Symmetric,
                "one-sided" => Kind::OneSided,
                other => return Err(Error::Unsupported(format!("tail estimation for {other} samples"))),
            };
            let (measure, k) = simulate::estimate_measure_from_batch(&batch, *threshold, kind, *bins)?;
            let cfg = config_for_measure(batch.alpha, kind, &measure)?;
            if let Some(path) = output {
                std::fs::write(path, cfg.to_json() + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            let atoms = measure.to_atoms()?;
            Ok(Report::new("estimate", "tail-estimate")
                .input("samples", samples.display().to_string())
                .input("threshold", threshold)
                .value("exceedances", k)
                .value("atoms", atoms.len())
                .value("total_mass", measure.total_mass())
                .value("source_fingerprint", &batch.fingerprint))
        }
        Command::Portfolio { model, mu, r, lambda, sense } => {
            let (model, _) = load(&model.model, cli)?;
            let sense = match sense {
                SenseArg::Min => Sense::Min,
                SenseArg::Max => Sense::Max,
            };
            let p = dependence::portfolio_direction(model.symmetric()?, mu, *r, *lambda, sense)?;
            with_model(
                Report::new("portfolio", "portfolio")
                    .input("mu", mu)
                    .input("r", r)
                    .input("lambda", lambda)
                    .input("sense", sense)
                    .value("weights", &p.weights)
                    .value("gauge", p.gauge)
                    .value("moment", p.moment)
                    .value("stationarity", p.stationarity)
                    .value("certified", p.certified),
                &model,
            )
        }
        Command::Verify { model, suite, n, seed } => {
            let (model, ctx) = load(&model.model, cli)?;
            let seed = seed.unwrap_or(ctx.seed);
            let checks = verify(&model, *suite, *n, seed, &ctx)?;
            let mut r = Report::new("verify", "verify")
                .input("n", n)
                .input("seed", seed)
                .input("rng", simulate::RNG_NAME)
                .value("checks_run", checks.len());
            r.checks = checks;
            with_model(r, &model)
        }
    }
}

fn with_model(mut r: Report, model: &LoadedModel) -> Result<Report> {
    r.model = Some(fingerprint(model)?);
    Ok(r)
}

fn draw(model: &LoadedModel, n: usize, seed: u64) -> Result<SampleBatch> {
    match model {
        LoadedModel::Stable(m) => simulate::sample_vector(m, n, seed),
        LoadedModel::OneSided(m) => simulate::sample_onesided(m, n, seed),
        LoadedModel::PSum(m) => simulate::sample_psum(m, n, seed),
    }
}

fn split_direction(params: &[f64], d: usize, what: &str) -> Result<(f64, Vec<f64>)> {
    if params.len() != d + 1 {
        return Err(Error::InvalidArgument(format!("{what} needs {} params: order then u_1..u_{d}", d + 1)));
    }
    Ok((params[0], params[1..].to_vec()))
}

fn moment(model: &LoadedModel, kind: MomentKind, params: &[f64], signed: bool, ctx: &Context) -> Result<Report> {
    let one = |what: &str| -> Result<f64> {
        match params {
            [x] => Ok(*x),
            _ => Err(Error::InvalidArgument(format!("{what} needs exactly one param"))),
        }
    };
    let rep = match kind {
        MomentKind::Onesided => {
            let m = model.onesided()?;
            let (order, u) = split_direction(params, m.dim(), "onesided moment")?;
            let v = onesided_moment(m, &u, order)?;
            return Ok(Report::new("moment", "onesided-moment").value("moment", v));
        }
        MomentKind::Norm => {
            let m = model.symmetric()?;
            moments::norm_moment(m, one("norm moment")?, &rule_for(m, &ctx.levels)?)?
        }
        MomentKind::Scalar => {
            let m = model.symmetric()?;
            let (lambda, u) = split_direction(params, m.dim(), "scalar moment")?;
            moments::scalar_moment(m, &u, lambda)?
        }
        MomentKind::Mixed => {
            let m = model.symmetric()?;
            let [l1, l2] = params else {
                return Err(Error::InvalidArgument("mixed moment needs params l1,l2".into()));
            };
            if signed {
                moments::signed_mixed_moment_2d(m, *l1, *l2)?
            } else {
                moments::mixed_abs_moment_2d(m, *l1, *l2)?
            }
        }
        MomentKind::Sign => moments::sign_moment_2d(model.symmetric()?)?,
        MomentKind::Orthant => {
            let a = match params {
                [] => DMatrix::identity(2, 2),
                [a, b, c, d] => DMatrix::from_row_slice(2, 2, &[*a, *b, *c, *d]),
                _ => return Err(Error::InvalidArgument("orthant needs params a11,a12,a21,a22".into())),
            };
            moments::orthant_probability_2d(model.symmetric()?, &a)?
        }
    };
    let mut r = Report::new("moment", &rep.tag).value("moment", rep.value);
    r.error = Some(rep.error);
    Ok(r)
}

fn onesided_moment(m: &OneSidedModel, u: &[f64], order: f64) -> Result<f64> {
    if order > 0.0 {
        onesided::onesided_moment_pos(m, u, order)
    } else if order < 0.0 {
        onesided::onesided_moment_neg(m, u, -order - 1.0)
    } else {
        Ok(1.0)
    }
}

fn onesided_cmd(model: &LoadedModel, op: OneSidedOp, u: &[f64], x: &[f64], order: Option<f64>) -> Result<Report> {
    match op {
        OneSidedOp::Laplace => {
            let v = match model {
                LoadedModel::OneSided(m) => onesided::laplace(m, u)?,
                LoadedModel::PSum(m) => m.character_expectation(u)?,
                LoadedModel::Stable(_) => return Err(Error::KindMismatch("expected a one-sided or p-sum model".into())),
            };
            Ok(Report::new("onesided-laplace", "laplace").input("u", u).value("laplace", v))
        }
        OneSidedOp::Cdf => {
            let atoms = match model {
                LoadedModel::OneSided(m) => m.atoms().to_vec(),
                LoadedModel::PSum(m) => m.core().atoms().to_vec(),
                LoadedModel::Stable(_) => return Err(Error::KindMismatch("expected a one-sided model".into())),
            };
            if x.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidArgument("cdf points must be positive".into()));
            }
            let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
            let p = onesided::maxstable_cdf(&atoms, &inv)?;
            Ok(Report::new("onesided-cdf", "max-stable-cdf").input("x", x).value("cdf", p))
        }
        OneSidedOp::Moment => {
            let order = order.ok_or_else(|| Error::InvalidArgument("--order is required".into()))?;
            let v = onesided_moment(model.onesided()?, u, order)?;
            Ok(Report::new("onesided-moment", "onesided-moment").input("u", u).input("order", order).value("moment", v))
        }
    }
}

/// Formula-versus-simulation checks for every applicable operation.
pub fn verify(model: &LoadedModel, suite: Suite, n: usize, seed: u64, ctx: &Context) -> Result<Vec<Check>> {
    let batch = draw(model, n, seed)?;
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut checks = Vec::new();
    match model {
        LoadedModel::Stable(m) => {
            if want(Suite::Moments) {
                checks.extend(moment_checks(m, &batch, ctx)?);
            }
            if want(Suite::Dependence) {
                checks.extend(dependence_checks(m, &batch)?);
            }
        }
        LoadedModel::OneSided(m) if want(Suite::Onesided) => checks.extend(onesided_checks(m, &batch)?),
        LoadedModel::PSum(m) if want(Suite::Onesided) => checks.extend(psum_checks(m, &batch)?),
        _ => {}
    }
    Ok(checks)
}

fn moment_checks(m: &StableModel, batch: &SampleBatch, ctx: &Context) -> Result<Vec<Check>> {
    let d = m.dim();
    let a = m.alpha();
    let mut out = Vec::new();
    for (i, u) in symmetric_directions(d).iter().enumerate() {
        let g = m.gauge(u)?;
        let v: Vec<f64> = u.iter().map(|x| x / g).collect();
        out.push(Check::root_n(format!("charfun[{i}]"), (-1f64).exp(), simulate::empirical_charfun(batch, &v)?));
    }
    let rule = rule_for(m, &ctx.levels)?;
    let mut orders = vec![if a < 2.0 { a / 4.0 } else { 0.5 }];
    if d >= 2 {
        orders.push(-0.5);
    }
    for l in orders {
        let f = moments::norm_moment(m, l, &rule)?.value;
        out.push(Check::z(format!("norm-moment[{l}]"), f, simulate::mc_functional(batch, |x| norm(x).powf(l))?));
    }
    let l = a / 4.0;
    let e1 = basis(d, 0);
    let f = moments::scalar_moment(m, &e1, l)?.value;
    out.push(Check::z(format!("scalar-moment[{l}]"), f, simulate::mc_functional(batch, |x| x[0].abs().powf(l))?));
    if d == 2 {
        let f = moments::sign_moment_2d(m)?.value;
        out.push(Check::z("sign-moment", f, simulate::mc_functional(batch, |x| (x[0] * x[1]).signum())?));
        let f = moments::orthant_probability_2d(m, &DMatrix::identity(2, 2))?.value;
        out.push(Check::z(
            "orthant-probability",
            f,
            simulate::mc_functional(batch, |x| f64::from(x[0] > 0.0 && x[1] > 0.0))?,
        ));
        let l = a / 5.0;
        let f = moments::mixed_abs_moment_2d(m, l, l)?.value;
        out.push(Check::z(
            format!("mixed-abs-moment[{l}]"),
            f,
            simulate::mc_functional(batch, |x| (x[0] * x[1]).abs().powf(l))?,
        ));
    }
    Ok(out)
}

/// Ratio `E xi_1 xi_2^<p-1> / E |xi_2|^p` with a delta-method standard error.
pub fn covariation_ratio_estimate(batch: &SampleBatch, p: f64) -> Result<McEstimate> {
    let num: Vec<f64> = batch.rows().map(|x| x[0] * signed_pow(x[1], p - 1.0)).collect();
    let den: Vec<f64> = batch.rows().map(|x| x[1].abs().powf(p)).collect();
    let a = McEstimate::from_values(&num)?;
    let b = McEstimate::from_values(&den)?;
    let r = a.mean / b.mean;
    let nf = batch.n as f64;
    let cov: f64 = num.iter().zip(&den).map(|(x, y)| (x - a.mean) * (y - b.mean)).sum::<f64>() / (nf - 1.0);
    let var = a.se * a.se - 2.0 * r * cov / nf + r * r * b.se * b.se;
    Ok(McEstimate { mean: r, se: var.max(0.0).sqrt() / b.mean, n: batch.n })
}

fn dependence_checks(m: &StableModel, batch: &SampleBatch) -> Result<Vec<Check>> {
    if m.dim() != 2 || m.alpha() <= 1.0 || m.alpha() >= 2.0 {
        return Ok(Vec::new());
    }
    let p = (1.0 + m.alpha()) / 2.0;
    let e1 = [1.0, 0.0];
    let e2 = [0.0, 1.0];
    let formula = dependence::covariation(m, &e1, &e2)? / m.gauge_pow(&e2)?;
    Ok(vec![Check::z(format!("covariation-ratio[{p}]"), formula, covariation_ratio_estimate(batch, p)?)])
}

fn onesided_checks(m: &OneSidedModel, batch: &SampleBatch) -> Result<Vec<Check>> {
    let d = m.dim();
    let mut out = Vec::new();
    for (i, u) in positive_directions(d).iter().enumerate() {
        let f = onesided::laplace(m, u)?;
        out.push(Check::root_n(format!("laplace[{i}]"), f, simulate::empirical_laplace(batch, u)?));
    }
    let u = vec![1.0; d];
    let b = m.alpha() / 4.0;
    let f = onesided::onesided_moment_pos(m, &u, b)?;
    out.push(Check::z(format!("moment[{b}]"), f, simulate::mc_functional(batch, |x| dot(x, &u).powf(b))?));
    let f = onesided::onesided_moment_neg(m, &u, 0.0)?;
    out.push(Check::z("moment[-1]", f, simulate::mc_functional(batch, |x| 1.0 / dot(x, &u))?));
    Ok(out)
}

fn psum_checks(m: &PSumModel, batch: &SampleBatch) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, u) in positive_directions(m.core().dim()).iter().enumerate() {
        let f = m.character_expectation(u)?;
        out.push(Check::root_n(format!("character[{i}]"), f, simulate::mc_functional(batch, |x| m.character(u, x))?));
    }
    Ok(out)
}

/// Sixteen directions, no two antipodal.
fn symmetric_directions(d: usize) -> Vec<Vec<f64>> {
    if d == 2 {
        dependence::direction_set(2, 32, 0).into_iter().take(16).collect()
    } else {
        dependence::direction_set(d, 16, 1)
    }
}

/// Sixteen distinct nonnegative directions.
fn positive_directions(d: usize) -> Vec<Vec<f64>> {
    if d == 2 {
        return dependence::direction_set(2, 64, 0).into_iter().take(16).collect();
    }
    dependence::direction_set(d, 16, 3)
        .into_iter()
        .map(|u| u.iter().map(|x| x.abs()).collect())
        .collect()
}
