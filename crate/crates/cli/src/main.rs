//! Command-line front end: phase diagrams, exact and simulated laws, limit-law
//! checks, estimates and confidence sets as CSV or JSON.

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwpotts::exact::{exact_moments, magnetization_law};
use cwpotts::inference::{
    augment_ci, ci_beta_from, ci_h_from, mle_beta, mle_h, two_step_ci, Axis, ConfidenceSet, EstimationResult,
};
use cwpotts::limits::{critical_local_limits, gaussian_limit_regular, ks_distance, quartic_law, sextic_law, ScalarLaw};
use cwpotts::phase::{classify_point, phase_diagram, PhaseStructure, PhaseTag, PointClass, SpecialType, CLASS_TOL};
use cwpotts::sampler::{dot, exact_sample, gibbs_chain, rescale, ChainConfig};
use cwpotts::{Error, ModelSpec, ProbVector};
use serde_json::{json, Value};

use output::{emit, num, render_json, Format, Table};

#[derive(Parser)]
#[command(name = "cwpotts", version, about = "p-tensor Curie-Weiss Potts model: phases, laws and inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ModelArgs {
    /// Interaction order p >= 2.
    #[arg(long)]
    p: u32,
    /// Number of colors q >= 2.
    #[arg(long)]
    q: u32,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    h: f64,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, Error> {
        ModelSpec::new(self.p, self.q, self.beta, self.h)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutArgs {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn write(&self, text: &str) -> Result<(), Error> {
        Ok(emit(self.out.as_deref(), text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    /// Estimate h with beta known.
    Field,
    /// Estimate beta with h known.
    Coupling,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Field => Axis::Field,
            AxisArg::Coupling => Axis::Coupling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    Exact,
    Gibbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CiMethodArg {
    Plain,
    Augmented,
    TwoStep,
}

#[derive(Args)]
struct DataArgs {
    /// Observed magnetization vector, comma separated.
    #[arg(long, conflicts_with_all = ["data_file", "simulate"])]
    data: Option<String>,
    /// File whose first non-empty line is the comma-separated magnetization vector.
    #[arg(long, conflicts_with = "simulate")]
    data_file: Option<PathBuf>,
    /// Draw the data from the exact law at (beta, h).
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Phase class of (beta, h) with the maximizers that witness it (JSON).
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        /// Move the point onto a landmark within this distance first.
        #[arg(long)]
        snap: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Class of every point of a grid.
    ///
    /// CSV columns: beta,h,tag. JSON adds the landmarks and the critical curve.
    PhaseDiagram {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        /// beta range as lo,hi.
        #[arg(long, default_value = "0,2")]
        beta_range: String,
        /// h range as lo,hi.
        #[arg(long, default_value = "0,1")]
        h_range: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        /// Samples of the critical curve in the JSON output.
        #[arg(long, default_value_t = 200)]
        curve_samples: usize,
        /// Also write the landmarks as JSON to this file.
        #[arg(long)]
        landmarks_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// beta_c and the special point (JSON).
    Landmarks {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Strongly critical curve from (beta_c, 0) to the special point.
    ///
    /// CSV columns: h,beta,s_low,s_high.
    Curve {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact law of the magnetization at size N.
    ///
    /// CSV columns: quantity,coordinate,count,value. Rows with quantity
    /// "marginal" give P(N X_r = count); rows "u1", "up" and "log_partition"
    /// leave coordinate and count empty.
    Exact {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "N")]
        n: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Samples of the magnetization rescaled around the nearest maximizer.
    ///
    /// CSV columns: index,center,t_n,w_1..w_q. The exponent of t_n follows
    /// the class: 1/2, 1/4 at type I, 1/6 at type II. With --density-out the
    /// limit density of t_n (or of w_1 at regular and critical points) is
    /// written with columns x,pdf,cdf.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SamplerArg::Exact)]
        sampler: SamplerArg,
        /// Gibbs burn-in sweeps.
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        /// Gibbs sweeps between kept samples.
        #[arg(long, default_value_t = 10)]
        thin: usize,
        /// Center and scale with the class of the landmark within this distance.
        #[arg(long)]
        snap: Option<f64>,
        #[arg(long)]
        density_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Maximum-likelihood estimate with its plain interval (JSON).
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Confidence set for one parameter with the other known (JSON).
    Ci {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = CiMethodArg::TwoStep)]
        method: CiMethodArg,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Kolmogorov-Smirnov distance between simulated fluctuations and their limit law (JSON).
    LimitCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        snap: Option<f64>,
        /// Projection direction for Gaussian limits, comma separated; defaults to the first coordinate.
        #[arg(long)]
        direction: Option<String>,
        /// Largest KS distance reported as a pass.
        #[arg(long, default_value_t = 0.05)]
        ks_tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn parse_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("cannot parse {t:?}: {e}"))))
        .collect()
}

fn parse_range(text: &str) -> Result<(f64, f64), Error> {
    match parse_list(text)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(Error::InvalidParameter(format!("expected lo,hi, got {text:?}"))),
    }
}

fn json_format_only(out: &OutArgs, command: &str) -> Result<(), Error> {
    if out.format_or(Format::Json) == Format::Csv {
        return Err(Error::InvalidParameter(format!("{command} writes JSON only")));
    }
    Ok(())
}

/// The class used for the point, after optional snapping, and the snap record.
fn resolve_class(spec: &ModelSpec, snap: Option<f64>) -> Result<(PointClass, Value), Error> {
    let Some(tol) = snap else {
        return Ok((classify_point(spec, CLASS_TOL), Value::Null));
    };
    let structure = PhaseStructure::compute(spec.p, spec.q)?;
    match structure.snap(spec.beta, spec.h, tol)? {
        Some((beta, h, target)) => {
            let moved = ModelSpec::new(spec.p, spec.q, beta, h)?;
            let record = json!({ "beta": beta, "h": h, "target": target });
            Ok((classify_point(&moved, CLASS_TOL), record))
        }
        None => Ok((classify_point(spec, CLASS_TOL), Value::Null)),
    }
}

fn cmd_classify(model: ModelArgs, snap: Option<f64>, out: &OutArgs) -> Result<(), Error> {
    json_format_only(out, "classify")?;
    let (class, snapped) = resolve_class(&model.spec()?, snap)?;
    let mut value = serde_json::to_value(&class).expect("classes serialize");
    value["snapped"] = snapped;
    out.write(&render_json(&value))
}

fn cmd_phase_diagram(
    p: u32,
    q: u32,
    beta_range: &str,
    h_range: &str,
    resolution: usize,
    curve_samples: usize,
    landmarks_out: Option<&std::path::Path>,
    out: &OutArgs,
) -> Result<(), Error> {
    let diagram = phase_diagram(p, q, parse_range(beta_range)?, parse_range(h_range)?, resolution, curve_samples)?;
    if let Some(path) = landmarks_out {
        output::emit(Some(path), &render_json(&serde_json::to_value(diagram.landmarks).expect("serializes")))?;
    }
    match out.format_or(Format::Csv) {
        Format::Json => out.write(&render_json(&serde_json::to_value(&diagram).expect("serializes"))),
        Format::Csv => {
            let mut table = Table::new(["beta", "h", "tag"]);
            for c in &diagram.cells {
                table.push(vec![num(c.beta), num(c.h), c.tag.as_str().to_string()]);
            }
            out.write(&table.render())
        }
    }
}

fn landmarks_json(structure: &PhaseStructure) -> Value {
    let kind = match structure.special.kind {
        SpecialType::I => "I",
        SpecialType::II => "II",
    };
    json!({
        "p": structure.p,
        "q": structure.q,
        "beta_c": structure.beta_c,
        "beta_tilde": structure.special.beta_tilde,
        "h_tilde": structure.special.h_tilde,
        "s_pq": structure.special.s_pq,
        "type": kind,
    })
}

fn cmd_landmarks(p: u32, q: u32, out: &OutArgs) -> Result<(), Error> {
    json_format_only(out, "landmarks")?;
    out.write(&render_json(&landmarks_json(&PhaseStructure::compute(p, q)?)))
}

fn cmd_curve(p: u32, q: u32, samples: usize, out: &OutArgs) -> Result<(), Error> {
    let structure = PhaseStructure::compute(p, q)?;
    let curve = structure.curve(samples)?;
    match out.format_or(Format::Csv) {
        Format::Json => out.write(&render_json(&json!({
            "landmarks": landmarks_json(&structure),
            "curve": curve,
        }))),
        Format::Csv => {
            let mut table = Table::new(["h", "beta", "s_low", "s_high"]);
            for c in &curve {
                table.push(vec![num(c.h), num(c.beta), num(c.s_low), num(c.s_high)]);
            }
            out.write(&table.render())
        }
    }
}

fn cmd_exact(model: ModelArgs, n: u32, out: &OutArgs) -> Result<(), Error> {
    let spec = model.spec()?;
    let law = magnetization_law(&spec, n)?;
    let moments = exact_moments(&spec, n)?;
    let marginals: Vec<Vec<f64>> = (0..spec.q as usize).map(|r| law.marginal(r)).collect();
    match out.format_or(Format::Csv) {
        Format::Json => out.write(&render_json(&json!({
            "spec": spec,
            "N": n,
            "u1": moments.u1,
            "up": moments.up,
            "log_partition": moments.log_partition,
            "marginals": marginals,
        }))),
        Format::Csv => {
            let mut table = Table::new(["quantity", "coordinate", "count", "value"]);
            for (r, m) in marginals.iter().enumerate() {
                for (c, pr) in m.iter().enumerate() {
                    table.push(vec!["marginal".into(), (r + 1).to_string(), c.to_string(), num(*pr)]);
                }
            }
            for (name, v) in [("u1", moments.u1), ("up", moments.up), ("log_partition", moments.log_partition)] {
                table.push(vec![name.into(), String::new(), String::new(), num(v)]);
            }
            out.write(&table.render())
        }
    }
}

/// Limit law of the statistic that [`observed`] extracts.
fn reference_law(class: &PointClass, direction: &[f64]) -> Result<ScalarLaw, Error> {
    match class.tag {
        PhaseTag::Regular => gaussian_limit_regular(class, 0.0, 0.0)?.projection(direction),
        PhaseTag::StronglyCritical | PhaseTag::WeaklyCritical => {
            critical_local_limits(class, 0.0, 0.0)?.projection(direction)
        }
        PhaseTag::SpecialTypeI => quartic_law(class, 0.0, 0.0),
        PhaseTag::SpecialTypeII => sextic_law(0.0),
    }
}

/// `t_n` at special points, `<w, direction>` elsewhere.
fn observed(class: &PointClass, samples: &[ProbVector], n: u32, direction: &[f64]) -> Result<Vec<f64>, Error> {
    let special = class.tag.is_special();
    Ok(rescale(samples, n, class)?.iter().map(|r| if special { r.t_n } else { dot(&r.w, direction) }).collect())
}

fn first_coordinate(q: u32) -> Vec<f64> {
    let mut v = vec![0.0; q as usize];
    v[0] = 1.0;
    v
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    model: ModelArgs,
    n: u32,
    samples: usize,
    seed: u64,
    sampler: SamplerArg,
    burn_in: usize,
    thin: usize,
    snap: Option<f64>,
    density_out: Option<&std::path::Path>,
    out: &OutArgs,
) -> Result<(), Error> {
    let spec = model.spec()?;
    let (class, _) = resolve_class(&spec, snap)?;
    let draws = match sampler {
        SamplerArg::Exact => exact_sample(&magnetization_law(&spec, n)?, samples, seed),
        SamplerArg::Gibbs => {
            let cfg = ChainConfig { n, sweeps: burn_in + samples * thin, burn_in, thin, seed };
            gibbs_chain(&spec, &cfg)?
        }
    };
    let rescaled = rescale(&draws, n, &class)?;
    if let Some(path) = density_out {
        let law = reference_law(&class, &first_coordinate(spec.q))?;
        let mut table = Table::new(["x", "pdf", "cdf"]);
        for [x, pdf, cdf] in law.density_table(401) {
            table.push(vec![num(x), num(pdf), num(cdf)]);
        }
        output::emit(Some(path), &table.render())?;
    }
    match out.format_or(Format::Csv) {
        Format::Json => out.write(&render_json(&json!({
            "class": class.tag.as_str(),
            "samples": rescaled,
        }))),
        Format::Csv => {
            let mut header = vec!["index".to_string(), "center".into(), "t_n".into()];
            header.extend((1..=spec.q).map(|r| format!("w_{r}")));
            let mut table = Table::new(header);
            for (i, r) in rescaled.iter().enumerate() {
                let mut row = vec![i.to_string(), r.center.to_string(), num(r.t_n)];
                row.extend(r.w.iter().map(|x| num(*x)));
                table.push(row);
            }
            out.write(&table.render())
        }
    }
}

fn load_data(spec: &ModelSpec, n: u32, data: &DataArgs) -> Result<ProbVector, Error> {
    if let Some(text) = &data.data {
        return ProbVector::new(parse_list(text)?);
    }
    if let Some(path) = &data.data_file {
        let text = fs::read_to_string(path)?;
        let line = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .ok_or_else(|| Error::InvalidParameter(format!("{} is empty", path.display())))?;
        return ProbVector::new(parse_list(line)?);
    }
    if data.simulate {
        let draws = exact_sample(&magnetization_law(spec, n)?, 1, data.seed);
        return Ok(draws.into_iter().next().expect("one draw"));
    }
    Err(Error::InvalidParameter("give --data, --data-file or --simulate".into()))
}

fn estimate(spec: &ModelSpec, axis: Axis, data: &ProbVector, n: u32) -> Result<EstimationResult, Error> {
    if data.len() != spec.q as usize {
        return Err(Error::Shape(format!("data has {} coordinates, expected {}", data.len(), spec.q)));
    }
    let est = match axis {
        Axis::Field => mle_h(spec, data[0], n)?,
        Axis::Coupling => mle_beta(spec, data.p_norm_pow(spec.p), n)?,
    };
    if !est.converged && !est.boundary {
        return Err(Error::NonConvergence(format!("estimate did not converge (residual {:e})", est.residual)));
    }
    Ok(est)
}

fn plain_ci(spec: &ModelSpec, axis: Axis, est: f64, data: &ProbVector, n: u32, alpha: f64) -> Result<ConfidenceSet, Error> {
    match axis {
        Axis::Field => ci_h_from(spec, est, data, n, alpha),
        Axis::Coupling => ci_beta_from(spec, est, data, n, alpha),
    }
}

fn ci_json(cs: &ConfidenceSet) -> Value {
    json!({
        "lower": cs.interval.0,
        "upper": cs.interval.1,
        "appended": cs.appended_points,
        "method": cs.method.as_str(),
        "level": cs.level,
    })
}

fn estimate_json(est: &EstimationResult, data: &ProbVector, ci: Value) -> Value {
    json!({
        "estimate": est.estimate,
        "observed_statistic": est.observed_statistic,
        "bracket": [est.bracket.0, est.bracket.1],
        "iterations": est.iterations,
        "converged": est.converged,
        "boundary_flag": est.boundary,
        "residual": est.residual,
        "data": data,
        "ci": ci,
    })
}

fn cmd_estimate(model: ModelArgs, axis: AxisArg, n: u32, alpha: f64, data: &DataArgs, out: &OutArgs) -> Result<(), Error> {
    json_format_only(out, "estimate")?;
    let spec = model.spec()?;
    let x = load_data(&spec, n, data)?;
    let est = estimate(&spec, axis.into(), &x, n)?;
    // the interval may be undefined (for example h = 0 on the coupling axis) while the estimate is fine
    let ci = match plain_ci(&spec, axis.into(), est.estimate, &x, n, alpha) {
        Ok(cs) => ci_json(&cs),
        Err(e) => json!({ "error": e.to_string() }),
    };
    out.write(&render_json(&estimate_json(&est, &x, ci)))
}

fn cmd_ci(
    model: ModelArgs,
    axis: AxisArg,
    n: u32,
    alpha: f64,
    method: CiMethodArg,
    data: &DataArgs,
    out: &OutArgs,
) -> Result<(), Error> {
    json_format_only(out, "ci")?;
    let spec = model.spec()?;
    let x = load_data(&spec, n, data)?;
    let axis: Axis = axis.into();
    let est = estimate(&spec, axis, &x, n)?;
    let structure = PhaseStructure::compute(spec.p, spec.q)?;
    let (cs, test) = match method {
        CiMethodArg::Plain => (plain_ci(&spec, axis, est.estimate, &x, n, alpha)?, None),
        CiMethodArg::Augmented => {
            let plain = plain_ci(&spec, axis, est.estimate, &x, n, alpha)?;
            (augment_ci(&plain, &structure, &spec, axis)?, None)
        }
        CiMethodArg::TwoStep => two_step_ci(&spec, &structure, &x, n, alpha, axis)?,
    };
    let mut value = estimate_json(&est, &x, ci_json(&cs));
    value["slice_test"] = serde_json::to_value(test).expect("serializes");
    out.write(&render_json(&value))
}

#[allow(clippy::too_many_arguments)]
fn cmd_limit_check(
    model: ModelArgs,
    n: u32,
    samples: usize,
    seed: u64,
    snap: Option<f64>,
    direction: Option<&str>,
    ks_tol: f64,
    out: &OutArgs,
) -> Result<(), Error> {
    json_format_only(out, "limit-check")?;
    let spec = model.spec()?;
    let (class, snapped) = resolve_class(&spec, snap)?;
    let v = match direction {
        Some(text) => parse_list(text)?,
        None => first_coordinate(spec.q),
    };
    let law = reference_law(&class, &v)?;
    let draws = exact_sample(&magnetization_law(&spec, n)?, samples, seed);
    let stat = observed(&class, &draws, n, &v)?;
    let d = ks_distance(&stat, &law)?;
    let statistic = if class.tag.is_special() { "t_n" } else { "projected w" };
    out.write(&render_json(&json!({
        "class": class.tag.as_str(),
        "snapped": snapped,
        "statistic": statistic,
        "direction": if class.tag.is_special() { Value::Null } else { json!(v) },
        "N": n,
        "samples": samples,
        "seed": seed,
        "ks_distance": d,
        "ks_tol": ks_tol,
        "pass": d <= ks_tol,
        "law": law.describe(),
    })))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Classify { model, snap, out } => cmd_classify(model, snap, &out),
        Command::PhaseDiagram { p, q, beta_range, h_range, resolution, curve_samples, landmarks_out, out } => {
            cmd_phase_diagram(p, q, &beta_range, &h_range, resolution, curve_samples, landmarks_out.as_deref(), &out)
        }
        Command::Landmarks { p, q, out } => cmd_landmarks(p, q, &out),
        Command::Curve { p, q, samples, out } => cmd_curve(p, q, samples, &out),
        Command::Exact { model, n, out } => cmd_exact(model, n, &out),
        Command::Simulate { model, n, samples, seed, sampler, burn_in, thin, snap, density_out, out } => {
            cmd_simulate(model, n, samples, seed, sampler, burn_in, thin, snap, density_out.as_deref(), &out)
        }
        Command::Estimate { model, axis, n, alpha, data, out } => cmd_estimate(model, axis, n, alpha, &data, &out),
        Command::Ci { model, axis, n, alpha, method, data, out } => cmd_ci(model, axis, n, alpha, method, &data, &out),
        Command::LimitCheck { model, n, samples, seed, snap, direction, ks_tol, out } => {
            cmd_limit_check(model, n, samples, seed, snap, direction.as_deref(), ks_tol, &out)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 3);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Classification("x".into())), 2);
        assert_eq!(exit_code(&Error::Degenerate("x".into())), 2);
    }

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_range("0.5, 2").unwrap(), (0.5, 2.0));
        assert!(parse_range("1").is_err());
        assert!(parse_list("1,a").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
