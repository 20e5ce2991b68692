//! Command-line front end: problem files in, JSON reports out.
//!
//! Exit codes: 0 on success, 1 on I/O or parse errors, 2 on
//! mathematical-scope errors (non-generic configurations, non-isolated
//! critical loci, inconclusive multiplicities).

use clap::{Args, Parser, Subcommand};
use edpolar::eddeg::{ed_degree_both, ed_degree_polar, ed_degree_tracking, EDProblem, EdError};
use edpolar::geometry::{candidate_limit_points, polar_curve_ideal, GeomError};
use edpolar::ideals::krull_dimension;
use edpolar::multiplicity::polar_multiplicities;
use edpolar::polycore::sample_generic_linear;
use edpolar::problem::{compile, parse_problem, validate, CompiledProblem, ProblemFile};
use edpolar::report::{
    complex_point_row, InputEcho, PointRow, PolarSummary, Report, SiersmaSummary, StratSummary,
};
use edpolar::stratcalc::{audit_round_trip, morse_count_formula, siersma_identity_check, solve_nv};
use edpolar::tracker::{classify_limits, schedule_with, track_family_with};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "edpolar",
    about = "Critical-point asymptotics and Euclidean distance degrees on affine varieties",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem file (TOML).
    file: std::path::PathBuf,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Magnitude of the head of the perturbation schedule.
    #[arg(long)]
    t0: Option<f64>,
    /// Number of geometric steps in the schedule.
    #[arg(long)]
    schedule_steps: Option<usize>,
    /// Norm beyond which a trajectory counts as escaped.
    #[arg(long)]
    escape_radius: Option<f64>,
    /// Assert the no-escape hypothesis instead of verifying it.
    #[arg(long)]
    no_escape_assert: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the polar curve of the function on the variety.
    Polar(CommonArgs),
    /// Track the perturbed critical points toward zero and classify limits.
    Morsify(CommonArgs),
    /// Local trajectory multiplicities at every candidate limit point.
    Multiplicity(CommonArgs),
    /// Exact coefficient calculus on the stratification block.
    Stratcalc(CommonArgs),
    /// Euclidean distance degree of the variety at the data point.
    Eddeg {
        #[command(flatten)]
        common: CommonArgs,
        /// Which pipeline to run.
        #[arg(long, default_value = "both")]
        method: MethodArg,
    },
    /// Validate a problem file without computing anything.
    Validate { file: std::path::PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum MethodArg {
    Polar,
    Tracking,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Io(std::io::Error),
    Problem(edpolar::problem::ProblemError),
    Scope(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Problem(e) => write!(f, "{e}"),
            CliError::Scope(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Problem(_) => 1,
            CliError::Scope(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<edpolar::problem::ProblemError> for CliError {
    fn from(e: edpolar::problem::ProblemError) -> Self {
        CliError::Problem(e)
    }
}

impl From<EdError> for CliError {
    fn from(e: EdError) -> Self {
        CliError::Scope(e.to_string())
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Scope(e.to_string())
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file)?;
            let parsed: ProblemFile = parse_problem(&text)?;
            let diags = validate(&parsed);
            if diags.is_empty() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &diags {
                    println!("error: {d}");
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::Polar(common) => {
            let (file, prob) = load(&common)?;
            let report = cmd_polar(&file, &prob)?;
            println!("{}", report.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Morsify(common) => {
            let (file, prob) = load(&common)?;
            let report = cmd_morsify(&file, &prob, &common)?;
            println!("{}", report.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Multiplicity(common) => {
            let (file, prob) = load(&common)?;
            let report = cmd_multiplicity(&file, &prob)?;
            println!("{}", report.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Stratcalc(common) => {
            let (file, prob) = load(&common)?;
            let report = cmd_stratcalc(&file, &prob)?;
            println!("{}", report.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eddeg { common, method } => {
            let (file, prob) = load(&common)?;
            let report = cmd_eddeg(&file, &prob, method, &common)?;
            let failed = report.failed;
            println!("{}", report.to_json());
            Ok(if failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

fn load(common: &CommonArgs) -> Result<(ProblemFile, CompiledProblem), CliError> {
    let text = std::fs::read_to_string(&common.file)?;
    let mut parsed: ProblemFile = parse_problem(&text)?;
    if let Some(seed) = common.seed {
        parsed.seed = Some(seed);
    }
    let compiled = compile(&parsed)?;
    Ok((parsed, compiled))
}

fn echo(file: &ProblemFile) -> InputEcho {
    InputEcho {
        variables: file.variables.clone(),
        variety: file.variety.clone(),
        function: file.function.clone(),
        data_point: file.data_point.clone(),
        linear_form: file.linear_form.clone(),
    }
}

fn linear_form_of(prob: &CompiledProblem) -> edpolar::polycore::LinearForm {
    prob.linear_form
        .clone()
        .unwrap_or_else(|| sample_generic_linear(prob.ring.num_vars(), prob.seed))
}

fn polar_summary(
    prob: &CompiledProblem,
) -> Result<(edpolar::geometry::PolarCurve, PolarSummary), CliError> {
    let l = linear_form_of(prob);
    let polar = polar_curve_ideal(&prob.variety, &prob.function, &l)?;
    let dimension = krull_dimension(&polar.ideal).map_err(|e| CliError::Scope(e.to_string()))?;
    let summary = PolarSummary {
        empty: polar.is_empty(),
        generators: polar
            .ideal
            .generators()
            .iter()
            .map(|g| g.to_string())
            .collect(),
        dimension,
        linear_form: polar
            .linear_form
            .coefficients
            .iter()
            .map(|c| c.to_string())
            .collect(),
    };
    Ok((polar, summary))
}

fn cmd_polar(file: &ProblemFile, prob: &CompiledProblem) -> Result<Report, CliError> {
    let (_, summary) = polar_summary(prob)?;
    let mut report = Report::new("polar", echo(file), prob.seed);
    if summary.empty {
        report.warnings.push("polar locus empty".to_string());
    }
    report.polar = Some(summary);
    Ok(report)
}

fn schedule_for(prob: &CompiledProblem, common: &CommonArgs) -> Vec<edpolar::Complex64> {
    let t0 = common.t0.or(prob.tolerances.t0).unwrap_or(0.1);
    let steps = common
        .schedule_steps
        .or(prob.tolerances.schedule_steps)
        .unwrap_or(40);
    schedule_with(prob.seed, t0, 0.5, steps)
}

fn cmd_morsify(
    file: &ProblemFile,
    prob: &CompiledProblem,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let l = linear_form_of(prob);
    let (polar, summary) = polar_summary(prob)?;
    let candidates = candidate_limit_points(&polar, &prob.variety, &prob.function, prob.seed)?;
    let schedule = schedule_for(prob, common);
    let escape_radius = common
        .escape_radius
        .or(prob.tolerances.escape_radius)
        .unwrap_or(edpolar::tracker::numeric::DEFAULT_ESCAPE_RADIUS);
    let bundle = track_family_with(
        &prob.variety,
        &prob.function,
        &l,
        &schedule,
        prob.seed,
        escape_radius,
    )
    .map_err(|e| CliError::Scope(e.to_string()))?;
    let limits =
        classify_limits(&bundle, &candidates).map_err(|e| CliError::Scope(e.to_string()))?;
    let mut report = Report::new("morsify", echo(file), prob.seed).with_limits(&limits);
    report.polar = Some(summary);
    Ok(report)
}

fn cmd_multiplicity(file: &ProblemFile, prob: &CompiledProblem) -> Result<Report, CliError> {
    let l = linear_form_of(prob);
    let (polar, summary) = polar_summary(prob)?;
    let candidates = candidate_limit_points(&polar, &prob.variety, &prob.function, prob.seed)?;
    let mut report = Report::new("multiplicity", echo(file), prob.seed);
    for cand in &candidates.points {
        let (mult_f, mult_l) = if polar.is_empty()
            || edpolar::geometry::point_residual(&polar.ideal, &cand.point) >= 1e-8
        {
            (0, 0)
        } else {
            polar_multiplicities(&polar, &prob.function, &l, &cand.point, prob.seed)
                .map_err(|e| CliError::Scope(e.to_string()))?
        };
        let (location, exact) = complex_point_row(&cand.point, &cand.rational);
        report.points.push(PointRow {
            location,
            exact,
            n_p: mult_f.saturating_sub(mult_l),
            mult_f: Some(mult_f),
            mult_l: Some(mult_l),
        });
    }
    report.polar = Some(summary);
    Ok(report)
}

fn cmd_stratcalc(file: &ProblemFile, prob: &CompiledProblem) -> Result<Report, CliError> {
    let mut report = Report::new("stratcalc", echo(file), prob.seed);
    if let Some(block) = &prob.siersma {
        let audit = siersma_identity_check(block.ambient_dim, block.clk_reduced_chi, block.k);
        report = report.with_siersma(&audit);
        report.siersma = Some(SiersmaSummary {
            phi_one: audit.phi_one,
            alpha: audit.alpha,
            phi_alpha: audit.phi_alpha,
            n_zero: audit.n_zero,
        });
    }
    if let Some(strat) = &prob.stratification {
        let poset = &strat.poset;
        let mut data = strat.data.clone();
        // When nearby-fiber characteristics are supplied, derive the
        // invariants through the defect formula first.
        if !strat.nearby.pairs.is_empty() {
            let derived = edpolar::stratcalc::mu_from_defect(poset, &data, &strat.nearby)
                .map_err(|e| CliError::Scope(e.to_string()))?;
            for (id, value) in derived {
                data.mu.entry(id).or_insert(value);
            }
        }
        let data = &data;
        let solution = solve_nv(poset, data).map_err(|e| CliError::Scope(e.to_string()))?;
        // Exactness audit on the way out.
        let mu_hat = audit_round_trip(poset, &solution, &data.clk_chi)
            .map_err(|e| CliError::Scope(e.to_string()))?;
        for (id, mu) in &data.mu {
            if mu_hat.get(id) != Some(mu) {
                return Err(CliError::Scope(format!(
                    "round-trip audit failed at stratum `{id}`"
                )));
            }
        }
        let morse_count = match &strat.m_infinity {
            Some(m) if !data.chi_minus_hyperplane.is_empty() => Some(
                morse_count_formula(poset, data, *m).map_err(|e| CliError::Scope(e.to_string()))?,
            ),
            _ => None,
        };
        report.stratcalc = Some(StratSummary {
            n: solution.n.clone(),
            identity_coefficients: solution.identity_coefficients.clone(),
            negative_strata: solution.negative.clone(),
            morse_count,
        });
        if !solution.negative.is_empty() {
            report
                .warnings
                .push("negative multiplicities flag inconsistent input data".to_string());
        }
    }
    if report.siersma.is_none() && report.stratcalc.is_none() {
        return Err(CliError::Scope(
            "stratcalc needs a [stratification] or [siersma] block".to_string(),
        ));
    }
    Ok(report)
}

fn cmd_eddeg(
    file: &ProblemFile,
    prob: &CompiledProblem,
    method: MethodArg,
    common: &CommonArgs,
) -> Result<Report, CliError> {
    let assert_no_escape = common.no_escape_assert;
    let Some(u) = prob.data_point.clone() else {
        return Err(CliError::Scope(
            "eddeg needs a `data_point` in the problem file".to_string(),
        ));
    };
    let defaults = edpolar::eddeg::TrackingSettings::default();
    let tracking = edpolar::eddeg::TrackingSettings {
        t0_magnitude: common
            .t0
            .or(prob.tolerances.t0)
            .unwrap_or(defaults.t0_magnitude),
        schedule_steps: common
            .schedule_steps
            .or(prob.tolerances.schedule_steps)
            .unwrap_or(defaults.schedule_steps),
        escape_radius: common
            .escape_radius
            .or(prob.tolerances.escape_radius)
            .unwrap_or(defaults.escape_radius),
    };
    let ed_problem = EDProblem::new(prob.variety.clone(), u, prob.seed).with_tracking(tracking);
    let ed = match method {
        MethodArg::Polar => ed_degree_polar(&ed_problem, assert_no_escape)?,
        MethodArg::Tracking => ed_degree_tracking(&ed_problem)?,
        MethodArg::Both => ed_degree_both(&ed_problem, assert_no_escape)?,
    };
    Ok(Report::new("eddeg", echo(file), prob.seed).with_ed(&ed))
}
