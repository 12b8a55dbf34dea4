//! `hhm`: command-line front end for harmonic manifolds of hypergeometric type.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit codes: 0 on
//! success, 1 when `verify` finds a failing check, 2 for invalid parameters, grids
//! or input files, 3 when a kernel or quadrature fails to converge.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod grid;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hhm_core::damek_ricci::{
    describe_space, enumerate_lower_bound, enumerate_spaces, EnumeratedSpace,
};
use hhm_core::model::{
    classify_bounds, einstein_constant, entropy_lower_bound, entropy_upper_bound, normalize_ricci,
    normalized_model, sigma, theta, DEFAULT_BOUND_TOL,
};
use hhm_core::special::{spherical_function, DEFAULT_TOL};
use hhm_core::transform::{spherical_fourier, RadialProfile};
use hhm_core::verify::{run_all, VerifyConfig};
use hhm_core::ModelParams;

use config::{CliConfig, Format, ModelSpec};
use grid::GridSpec;
use output::{sink, write_json, write_rows};

#[derive(Parser, Debug)]
#[command(
    name = "hhm",
    version,
    about = "Harmonic manifolds of hypergeometric type"
)]
struct Cli {
    /// JSON configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Dimension (at least 3).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    ell: Option<f64>,
    /// Volume entropy.
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parameters, Einstein constant, Ricci normalization and bound classification.
    ModelInfo {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample Θ, σ or the spherical function Φ_λ on a radius grid.
    Eval {
        #[arg(value_enum)]
        quantity: Quantity,
        #[command(flatten)]
        model: ModelArgs,
        /// start:stop:step
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Damek–Ricci spaces.
    Dr {
        #[command(subcommand)]
        command: DrCommand,
    },
    /// Spherical Fourier transform of a radial profile over a λ grid.
    Transform {
        #[command(flatten)]
        model: ModelArgs,
        /// `bump:R=<radius>`, `zero:R=<radius>`, or a CSV file of `r,value` rows.
        #[arg(long)]
        profile: String,
        /// start:stop:step
        #[arg(long, allow_hyphen_values = true)]
        lambdas: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the check battery; exits 1 if any check fails.
    Verify {
        /// Check family, or a substring of check names.
        #[arg(long)]
        filter: Option<String>,
        /// Shift every radial solution so the battery must fail.
        #[arg(long, hide = true)]
        perturb: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Subcommand, Debug)]
enum DrCommand {
    /// All admissible (k = j·d_m, m) with m ≤ max-m and j ≤ max-j.
    Enumerate {
        #[arg(long)]
        max_m: u32,
        #[arg(long, default_value_t = 1)]
        max_j: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Spaces attaining the lower entropy bound (k = 2m).
    LowerBound {
        #[arg(long)]
        max_m: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quantity {
    Theta,
    Sigma,
    Phi,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::Theta => "theta",
            Quantity::Sigma => "sigma",
            Quantity::Phi => "phi",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Point {
    r: f64,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesDoc<P> {
    model: ModelSpec,
    series: Vec<P>,
    meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SpectralPoint {
    lambda: f64,
    value: f64,
    quad_error: f64,
}

#[derive(Debug, Serialize)]
struct DrRow {
    m: u32,
    k: u64,
    n: u32,
    q: f64,
    q_norm: f64,
    classification: String,
}

impl From<&EnumeratedSpace> for DrRow {
    fn from(e: &EnumeratedSpace) -> Self {
        DrRow {
            m: e.space.m,
            k: e.space.k,
            n: e.space.n,
            q: e.space.model.q(),
            q_norm: e.normalized_entropy,
            classification: e.classification.tag.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ModelInfo {
    model: ModelSpec,
    kappa: f64,
    scalar_curvature: f64,
    normalization: Option<Normalization>,
    lower_bound: f64,
    upper_bound: f64,
    /// Entropy and class of the Ricci-normalized model, or of the normalized model
    /// with the same ℓ when κ ≥ 0.
    normalized_q: f64,
    classification: String,
    classified_via: &'static str,
}

#[derive(Debug, Serialize)]
struct Normalization {
    c: f64,
    ell: f64,
    q: f64,
}

struct Ctx {
    config: CliConfig,
}

impl Ctx {
    fn model(&self, args: &ModelArgs) -> Result<ModelParams> {
        let base = self.config.model;
        let n = args
            .n
            .or(base.map(|m| m.n))
            .ok_or_else(|| anyhow!("missing --n"))?;
        let ell = args
            .ell
            .or(base.map(|m| m.ell))
            .ok_or_else(|| anyhow!("missing --ell"))?;
        let q = args
            .q
            .or(base.map(|m| m.q))
            .ok_or_else(|| anyhow!("missing --q"))?;
        Ok(ModelParams::new(n, ell, q)?)
    }

    fn format(&self, out: &OutputArgs) -> Format {
        out.format.or(self.config.format).unwrap_or_default()
    }

    fn output(&self, out: &OutputArgs) -> Option<PathBuf> {
        out.output.clone().or_else(|| self.config.output.clone())
    }

    fn tol(&self, flag: Option<f64>, default: f64) -> Result<f64> {
        let tol = flag.or(self.config.tol).unwrap_or(default);
        if !(tol > 0.0 && tol.is_finite()) {
            bail!("tolerance must be positive, got {tol}");
        }
        Ok(tol)
    }
}

fn model_spec(p: &ModelParams) -> ModelSpec {
    ModelSpec {
        n: p.n(),
        ell: p.ell(),
        q: p.q(),
    }
}

fn model_info(ctx: &Ctx, model: &ModelArgs, out: &OutputArgs) -> Result<()> {
    let p = ctx.model(model)?;
    let kappa = einstein_constant(&p);
    let (normalization, normalized_q, classification, via) = match normalize_ricci(&p) {
        Ok((np, c)) => {
            let class = classify_bounds(&np, DEFAULT_BOUND_TOL)?;
            let norm = Normalization {
                c: c.get(),
                ell: np.ell(),
                q: np.q(),
            };
            (Some(norm), np.q(), class.tag, "ricci_normalization")
        }
        Err(hhm_core::Error::NonNegativeRicci { .. }) => {
            let np = normalized_model(p.ell(), p.n())?;
            let class = classify_bounds(&np, DEFAULT_BOUND_TOL)?;
            (None, np.q(), class.tag, "normalized_model_at_same_ell")
        }
        Err(e) => return Err(e.into()),
    };
    if normalization.is_none() {
        eprintln!(
            "note: kappa = {} >= 0 admits no normalization to Ric = -(n-1); classifying the normalized model with ell = {}",
            kappa.kappa,
            p.ell()
        );
    }
    let info = ModelInfo {
        model: model_spec(&p),
        kappa: kappa.kappa,
        scalar_curvature: kappa.scalar_curvature(p.n()),
        normalization,
        lower_bound: entropy_lower_bound(p.n()),
        upper_bound: entropy_upper_bound(p.n()),
        normalized_q,
        classification: classification.to_string(),
        classified_via: via,
    };
    let mut w = sink(ctx.output(out).as_deref())?;
    match ctx.format(out) {
        Format::Json => write_json(&mut *w, &info)?,
        fmt => {
            let mut rows: Vec<(String, String)> = vec![
                ("n".into(), p.n().to_string()),
                ("ell".into(), p.ell().to_string()),
                ("q".into(), p.q().to_string()),
                ("kappa".into(), info.kappa.to_string()),
                ("scalar_curvature".into(), info.scalar_curvature.to_string()),
            ];
            match &info.normalization {
                Some(nz) => {
                    rows.push(("normalization_c".into(), nz.c.to_string()));
                    rows.push(("normalized_ell".into(), nz.ell.to_string()));
                }
                None => rows.push(("normalization_c".into(), "none".into())),
            }
            rows.extend([
                ("normalized_q".into(), info.normalized_q.to_string()),
                ("lower_bound".into(), info.lower_bound.to_string()),
                ("upper_bound".into(), info.upper_bound.to_string()),
                ("classification".into(), info.classification.clone()),
                ("classified_via".into(), via.to_string()),
            ]);
            #[derive(Serialize)]
            struct Row<'a> {
                field: &'a str,
                value: &'a str,
            }
            let rows: Vec<Row> = rows
                .iter()
                .map(|(f, v)| Row { field: f, value: v })
                .collect();
            write_rows(&mut *w, fmt, &["field", "value"], &rows, |r| {
                vec![r.field.to_string(), r.value.to_string()]
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn eval(
    ctx: &Ctx,
    quantity: Quantity,
    model: &ModelArgs,
    grid: Option<&str>,
    lambda: Option<f64>,
    tol: Option<f64>,
    out: &OutputArgs,
) -> Result<()> {
    let p = ctx.model(model)?;
    let grid = grid
        .or(ctx.config.grid.as_deref())
        .ok_or_else(|| anyhow!("missing --grid start:stop:step"))?;
    let radii = GridSpec::parse(grid)?.points()?;
    let lambda = lambda.or(ctx.config.lambda);
    let tol = ctx.tol(tol, DEFAULT_TOL)?;
    let mut series = Vec::with_capacity(radii.len());
    for &r in &radii {
        let value = match quantity {
            Quantity::Theta => theta(&p, r),
            Quantity::Sigma => sigma(&p, r),
            Quantity::Phi => {
                let l = lambda.ok_or_else(|| anyhow!("eval phi requires --lambda"))?;
                spherical_function(&p, l, r, tol)
            }
        }
        .with_context(|| format!("{} at r = {r}", quantity.name()))?;
        series.push(Point { r, value });
    }
    let mut meta = BTreeMap::new();
    meta.insert("quantity".into(), quantity.name().into());
    meta.insert("grid".into(), grid.into());
    if let (Quantity::Phi, Some(l)) = (quantity, lambda) {
        meta.insert("lambda".into(), l.into());
        meta.insert("tol".into(), tol.into());
    }
    let mut w = sink(ctx.output(out).as_deref())?;
    match ctx.format(out) {
        Format::Json => write_json(
            &mut *w,
            &SeriesDoc {
                model: model_spec(&p),
                series,
                meta,
            },
        )?,
        fmt => write_rows(&mut *w, fmt, &["r", "value"], &series, |pt| {
            vec![pt.r.to_string(), pt.value.to_string()]
        })?,
    }
    w.flush()?;
    Ok(())
}

fn dr(ctx: &Ctx, command: &DrCommand) -> Result<()> {
    let (rows, out): (Vec<DrRow>, &OutputArgs) = match command {
        DrCommand::Enumerate { max_m, max_j, out } => {
            let spaces = enumerate_spaces(*max_m, *max_j, DEFAULT_BOUND_TOL)?;
            (spaces.iter().map(DrRow::from).collect(), out)
        }
        DrCommand::LowerBound { max_m, out } => {
            let rows = enumerate_lower_bound(*max_m)?
                .into_iter()
                .map(|(m, k)| describe_space(k, m, DEFAULT_BOUND_TOL).map(|e| DrRow::from(&e)))
                .collect::<hhm_core::Result<Vec<_>>>()?;
            (rows, out)
        }
    };
    let mut w = sink(ctx.output(out).as_deref())?;
    match ctx.format(out) {
        Format::Json => write_json(&mut *w, &rows)?,
        fmt => write_rows(
            &mut *w,
            fmt,
            &["m", "k", "n", "q", "q_norm", "classification"],
            &rows,
            |r| {
                vec![
                    r.m.to_string(),
                    r.k.to_string(),
                    r.n.to_string(),
                    r.q.to_string(),
                    r.q_norm.to_string(),
                    r.classification.clone(),
                ]
            },
        )?,
    }
    w.flush()?;
    Ok(())
}

fn parse_profile(arg: &str) -> Result<RadialProfile> {
    let radius = |rest: &str| -> Result<f64> {
        let v = rest
            .strip_prefix("R=")
            .ok_or_else(|| anyhow!("profile `{arg}` needs the form <kind>:R=<radius>"))?;
        v.parse()
            .with_context(|| format!("profile radius `{v}` is not a number"))
    };
    if let Some(rest) = arg.strip_prefix("bump:") {
        return Ok(RadialProfile::bump(radius(rest)?)?);
    }
    if let Some(rest) = arg.strip_prefix("zero:") {
        return Ok(RadialProfile::zero(radius(rest)?)?);
    }
    let mut reader =
        csv::Reader::from_path(arg).with_context(|| format!("opening profile {arg}"))?;
    let mut points = Vec::new();
    for (i, row) in reader.deserialize::<(f64, f64)>().enumerate() {
        points.push(row.with_context(|| format!("profile {arg}, data row {}", i + 1))?);
    }
    RadialProfile::sampled(points).with_context(|| format!("profile {arg}"))
}

fn transform(
    ctx: &Ctx,
    model: &ModelArgs,
    profile: &str,
    lambdas: Option<&str>,
    tol: Option<f64>,
    out: &OutputArgs,
) -> Result<()> {
    let p = ctx.model(model)?;
    let profile = parse_profile(profile)?;
    let lambdas = lambdas
        .or(ctx.config.lambdas.as_deref())
        .ok_or_else(|| anyhow!("missing --lambdas start:stop:step"))?;
    let grid = GridSpec::parse(lambdas)?.points()?;
    let tol = ctx.tol(tol, 1e-10)?;
    let mut series = Vec::with_capacity(grid.len());
    let (mut hyp, mut ode) = (0usize, 0usize);
    for &lambda in &grid {
        let t = spherical_fourier(&p, &profile, lambda, tol)
            .with_context(|| format!("transform at lambda = {lambda}"))?;
        hyp += t.kernels.hypergeometric;
        ode += t.kernels.ode;
        series.push(SpectralPoint {
            lambda,
            value: t.value,
            quad_error: t.quad_error,
        });
    }
    if ode > 0 {
        eprintln!(
            "note: {ode} of {} kernel evaluations used the radial ODE fallback",
            hyp + ode
        );
    }
    let mut meta = BTreeMap::new();
    meta.insert("profile".into(), profile.description().into());
    meta.insert("support_radius".into(), profile.support_radius().into());
    meta.insert("lambdas".into(), lambdas.into());
    meta.insert("tol".into(), tol.into());
    let mut w = sink(ctx.output(out).as_deref())?;
    match ctx.format(out) {
        Format::Json => write_json(
            &mut *w,
            &SeriesDoc {
                model: model_spec(&p),
                series,
                meta,
            },
        )?,
        fmt => write_rows(
            &mut *w,
            fmt,
            &["lambda", "value", "quad_error"],
            &series,
            |s| {
                vec![
                    s.lambda.to_string(),
                    s.value.to_string(),
                    format!("{:.2e}", s.quad_error),
                ]
            },
        )?,
    }
    w.flush()?;
    Ok(())
}

fn verify(ctx: &Ctx, filter: Option<String>, perturb: bool, out: &OutputArgs) -> Result<ExitCode> {
    let report = run_all(&VerifyConfig {
        filter,
        perturb,
        ..Default::default()
    });
    if report.checks.is_empty() {
        bail!("filter matched no checks");
    }
    let mut w = sink(ctx.output(out).as_deref())?;
    match ctx.format(out) {
        Format::Json => write_json(&mut *w, &report)?,
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(&mut *w);
            for c in &report.checks {
                cw.serialize(c)?;
            }
            cw.flush()?;
        }
        Format::Table => writeln!(w, "{report}")?,
    }
    w.flush()?;
    for c in report.failures() {
        eprintln!("failed: {c}");
    }
    Ok(if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    let ctx = Ctx { config };
    match cli.command {
        Command::ModelInfo { model, out } => model_info(&ctx, &model, &out)?,
        Command::Eval {
            quantity,
            model,
            grid,
            lambda,
            tol,
            out,
        } => eval(&ctx, quantity, &model, grid.as_deref(), lambda, tol, &out)?,
        Command::Dr { command } => dr(&ctx, &command)?,
        Command::Transform {
            model,
            profile,
            lambdas,
            tol,
            out,
        } => transform(&ctx, &model, &profile, lambdas.as_deref(), tol, &out)?,
        Command::Verify {
            filter,
            perturb,
            out,
        } => return verify(&ctx, filter, perturb, &out),
    }
    Ok(ExitCode::SUCCESS)
}

/// 3 for convergence failures, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<hhm_core::Error>(),
            Some(hhm_core::Error::NoConvergence { .. } | hhm_core::Error::MaxSubdivisions { .. })
        )
    });
    if numeric {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse() {
        assert_eq!(parse_profile("bump:R=2").unwrap().support_radius(), 2.0);
        assert_eq!(parse_profile("zero:R=1.5").unwrap().eval(0.3), 0.0);
        assert!(parse_profile("bump:2").is_err());
        assert!(parse_profile("/nonexistent/profile.csv").is_err());
    }

    #[test]
    fn exit_codes() {
        let e: anyhow::Error = hhm_core::Error::NoConvergence { terms: 10, w: 0.9 }.into();
        assert_eq!(exit_code(&e.context("eval")), 3);
        let e: anyhow::Error = hhm_core::Error::InvalidParams("n".into()).into();
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow!("bad grid")), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
