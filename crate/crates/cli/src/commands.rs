use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use convexred::classes::{dual_vc_dimension, vc_dimension_with_budget, ConceptClass, Entry, FiniteConceptClass};
use convexred::learning::LabeledExample;
use convexred::reductions::{
    finite_class_suite, fmt_float, hard_svm_reduction, hinge_reduction, label_suite, nonconvex_reduction, precompose,
    separable_suite, trivial_reduction, verify_reduction, SuiteEntry, VerifyConfig,
};
use convexred::representations::{
    extract_signrank_witness, helly_certify, majority3_identity_check, planted_majority3_instance,
    random_majority3_suite, sign_flip_rate_with, FlipMode, FlipRateConfig, Representation,
};
use convexred::rng;
use convexred::sco::SolverConfig;
use convexred::topology::{borsuk_ulam_demo, AntipodalOptions, Assignment};
use convexred::vecops::dot;
use convexred::Label;

use crate::error::{CliError, CliResult};
use crate::specs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A rendered report and whether it passed.
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

fn json<T: Serialize>(v: &T, pass: bool) -> CliResult<Outcome> {
    let mut body = serde_json::to_string_pretty(v)?;
    body.push('\n');
    Ok(Outcome { body, pass })
}

fn csv_rows(header: &[&str], rows: Vec<Vec<String>>, pass: bool) -> CliResult<Outcome> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8");
    Ok(Outcome { body, pass })
}

fn no_csv(cmd: &'static str) -> CliError {
    CliError::Invalid {
        field: "format",
        message: format!("csv output is not available for {cmd}"),
    }
}

fn seed(s: Option<u64>) -> CliResult<u64> {
    s.ok_or(CliError::Missing("seed"))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcArgs {
    /// Class specifier: proj:d, halflines, or a class JSON file.
    #[arg(long)]
    pub class: String,
    /// Maximum number of subsets examined per search.
    #[arg(long, default_value_t = 50_000_000)]
    pub budget: u64,
}

#[derive(Serialize)]
struct VcReport {
    class: String,
    concepts: usize,
    points: usize,
    vc: usize,
    dual_vc: usize,
}

pub fn vc(args: &VcArgs, format: Format) -> CliResult<Outcome> {
    let class = specs::finite_class(&args.class)?;
    let dual = convexred::classes::dual_class(&class)?;
    let rep = VcReport {
        class: args.class.clone(),
        concepts: class.num_concepts(),
        points: class.num_points(),
        vc: vc_dimension_with_budget(&class, args.budget)?,
        dual_vc: vc_dimension_with_budget(&dual.class, args.budget)?,
    };
    debug_assert_eq!(rep.dual_vc, dual_vc_dimension(&class).unwrap_or(rep.dual_vc));
    match format {
        Format::Json => json(&rep, true),
        Format::Csv => csv_rows(
            &["class", "concepts", "points", "vc", "dual_vc"],
            vec![vec![
                rep.class.clone(),
                rep.concepts.to_string(),
                rep.points.to_string(),
                rep.vc.to_string(),
                rep.dual_vc.to_string(),
            ]],
            true,
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionName {
    Trivial,
    Hinge,
    HardSvm,
    Nonconvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    /// Random label masses on a single point.
    Labels,
    /// Separable point sets in `[-1, 1]^dim`.
    Separable,
    /// Distributions realizable by the concepts of `--class`.
    Class,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceArgs {
    #[arg(long, value_enum)]
    pub reduction: ReductionName,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Defaults to the natural suite of the reduction.
    #[arg(long, value_enum)]
    pub suite: Option<SuiteKind>,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.02)]
    pub slack: f64,
    #[arg(long, default_value_t = 8)]
    pub probes: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub atoms: usize,
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    /// Class for the non-convex reduction and class suites.
    #[arg(long)]
    pub class: Option<String>,
    /// Check against this beta instead of the claimed one.
    #[arg(long)]
    pub beta: Option<f64>,
}

pub fn reduce_verify(args: &ReduceArgs, format: Format) -> CliResult<Outcome> {
    let seed = seed(args.seed)?;
    let class = || -> CliResult<FiniteConceptClass> {
        specs::finite_class(args.class.as_deref().ok_or(CliError::Missing("class"))?)
    };
    let reduction = match args.reduction {
        ReductionName::Trivial => trivial_reduction(args.alpha)?,
        ReductionName::Hinge => hinge_reduction(args.dim, args.alpha)?,
        ReductionName::HardSvm => hard_svm_reduction(args.dim, args.alpha)?,
        ReductionName::Nonconvex => {
            let c = class()?;
            let n = c.num_concepts() as f64;
            let params: Vec<f64> = (0..c.num_concepts()).map(|i| (i as f64 + 0.5) / n).collect();
            nonconvex_reduction(&c, &params, args.alpha)?
        }
    };
    let kind = args.suite.unwrap_or(match args.reduction {
        ReductionName::Trivial => SuiteKind::Labels,
        ReductionName::Hinge | ReductionName::HardSvm => SuiteKind::Separable,
        ReductionName::Nonconvex => SuiteKind::Class,
    });
    let suite: Vec<SuiteEntry> = match kind {
        SuiteKind::Labels => label_suite(args.count, seed)?,
        SuiteKind::Separable => separable_suite(args.dim, args.atoms, true, args.margin, args.count, seed)?,
        SuiteKind::Class => finite_class_suite(&class()?, args.count, seed)?,
    };
    let cfg = VerifyConfig {
        slack: args.slack,
        solver: SolverConfig::with_alpha(args.alpha),
        probes: args.probes,
        seed,
        beta_override: args.beta,
    };
    let rep = verify_reduction(&reduction, &suite, &cfg)?;
    match format {
        Format::Json => Ok(Outcome {
            body: rep.to_json()? + "\n",
            pass: rep.all_pass,
        }),
        Format::Csv => Ok(Outcome {
            body: rep.to_csv()?,
            pass: rep.all_pass,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Reduced,
    Full,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionArgs {
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub gamma: f64,
    /// Target dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [300usize, 500])]
    pub d: Vec<usize>,
    /// Source sphere dimension.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// `margin:n:gamma`; overrides `--n` and `--gamma`.
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, value_enum, default_value_t = Mode::Reduced)]
    pub mode: Mode,
}

#[derive(Serialize)]
struct ProjectionRow {
    n: usize,
    d: usize,
    gamma: f64,
    trials: u64,
    seed: u64,
    flips: u64,
    empirical_rate: f64,
    bound: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ProjectionReport {
    rows: Vec<ProjectionRow>,
    all_pass: bool,
}

pub fn random_projection(args: &ProjectionArgs, format: Format) -> CliResult<Outcome> {
    let first = seed(args.seed)?;
    let (n, gamma) = match &args.class {
        Some(spec) => specs::margin(spec)?,
        None => (args.n, args.gamma),
    };
    let mut rows = Vec::new();
    for &d in &args.d {
        for s in first..first + args.seeds.max(1) {
            let rate = sign_flip_rate_with(&FlipRateConfig {
                n,
                d,
                gamma,
                trials: args.trials,
                seed: s,
                mode: match args.mode {
                    Mode::Reduced => FlipMode::Reduced,
                    Mode::Full => FlipMode::Full,
                },
            })?;
            let threshold = rate.bound + 3.0 * (rate.bound * (1.0 - rate.bound).max(0.0) / rate.trials as f64).sqrt();
            rows.push(ProjectionRow {
                n,
                d,
                gamma,
                trials: rate.trials,
                seed: s,
                flips: rate.flips,
                empirical_rate: rate.empirical_rate,
                bound: rate.bound,
                threshold,
                pass: rate.empirical_rate <= threshold,
            });
        }
    }
    let all_pass = rows.iter().all(|r| r.pass);
    match format {
        Format::Json => json(&ProjectionReport { rows, all_pass }, all_pass),
        Format::Csv => csv_rows(
            &["d", "gamma", "trials", "empirical_rate", "bound", "seed", "n", "flips", "threshold", "pass"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.d.to_string(),
                        fmt_float(r.gamma),
                        r.trials.to_string(),
                        fmt_float(r.empirical_rate),
                        fmt_float(r.bound),
                        r.seed.to_string(),
                        r.n.to_string(),
                        r.flips.to_string(),
                        fmt_float(r.threshold),
                        r.pass.to_string(),
                    ]
                })
                .collect(),
            all_pass,
        ),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HellyArgs {
    /// JSON file with `representation`, `class` and `samples`; without it a
    /// random half-space class under the identity representation is used.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Run the built-in instance with a planted inconsistent triple.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 12)]
    pub points: usize,
    #[arg(long, default_value_t = 6)]
    pub concepts: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HellyInput {
    representation: Representation,
    class: FiniteConceptClass,
    samples: Vec<Vec<LabeledExample>>,
}

/// Random homogeneous half-spaces in `R^d` on random points, and samples
/// labeled by randomly chosen concepts.
pub fn random_helly_instance(
    d: usize,
    points: usize,
    concepts: usize,
    samples: usize,
    seed: u64,
) -> CliResult<(FiniteConceptClass, Vec<Vec<LabeledExample>>)> {
    use rand::Rng as _;
    let mut r = rng::seeded(seed);
    let pts: Vec<Vec<f64>> = (0..points.max(1)).map(|_| rng::gaussian_vec(&mut r, d)).collect();
    let mut table: Vec<Vec<Entry>> = Vec::new();
    for _ in 0..concepts.max(1) {
        let w = rng::gaussian_vec(&mut r, d);
        let row: Vec<Entry> = pts.iter().map(|x| Entry::from_label(Label::from_sign(dot(&w, x)))).collect();
        if !table.contains(&row) {
            table.push(row);
        }
    }
    let class = FiniteConceptClass::new(pts.clone(), table, None)?;
    let samples = (0..samples)
        .map(|_| {
            let c = r.gen_range(0..class.num_concepts());
            let k = r.gen_range(1..=pts.len());
            (0..k)
                .map(|_| {
                    let j = r.gen_range(0..pts.len());
                    LabeledExample::new(pts[j].clone(), class.table()[c][j].label().expect("total"))
                })
                .collect()
        })
        .collect();
    Ok((class, samples))
}

/// Four points whose images `a`, `b`, `a + b` (and one more) cannot be
/// labeled `+, +, -` by a homogeneous half-space.
pub fn planted_helly_instance() -> CliResult<(Representation, FiniteConceptClass, Vec<Vec<LabeledExample>>)> {
    let src: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
    let table: Vec<Vec<Entry>> = (0..16usize)
        .map(|m| (0..4).map(|j| if m >> j & 1 == 1 { Entry::Pos } else { Entry::Neg }).collect())
        .collect();
    let class = FiniteConceptClass::new(src.clone(), table, None)?;
    let images = vec![vec![1.0, 0.2], vec![0.1, 1.0], vec![1.1, 1.2], vec![-1.0, -1.0]];
    let repr = Representation::tabulated(src.clone(), images)?;
    let ex = |j: usize, l: Label| LabeledExample::new(src[j].clone(), l);
    let sample = vec![ex(3, Label::Neg), ex(0, Label::Pos), ex(1, Label::Pos), ex(2, Label::Neg)];
    Ok((repr, class, vec![sample]))
}

pub fn helly_cert(args: &HellyArgs, format: Format) -> CliResult<Outcome> {
    if format == Format::Csv {
        return Err(no_csv("helly-cert"));
    }
    let (repr, class, samples) = if let Some(path) = &args.input {
        let input: HellyInput = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        (input.representation, input.class, input.samples)
    } else if args.planted {
        planted_helly_instance()?
    } else {
        let (class, samples) = random_helly_instance(args.d, args.points, args.concepts, args.samples, seed(args.seed)?)?;
        (Representation::Identity { dim: args.d }, class, samples)
    };
    let rep = helly_certify(&repr, &class, args.d, args.alpha, &samples)?;
    json(&rep, rep.exact_on_samples)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignrankArgs {
    /// Class specifier: proj:d, halflines, or a class JSON file.
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
}

#[derive(Serialize)]
struct SignrankReport {
    class: String,
    checks: usize,
    witness: convexred::representations::SignRankWitness,
}

/// Witness from the exact hard-SVM reduction applied to the class's points.
pub fn signrank_witness(
    class: &FiniteConceptClass,
    alpha: f64,
) -> CliResult<convexred::representations::SignRankWitness> {
    let dim = class.points().first().map_or(0, Vec::len);
    let reduction = precompose(
        &Representation::Identity { dim },
        true,
        &hard_svm_reduction(dim, alpha)?,
        ConceptClass::Finite(class.clone()),
    );
    Ok(extract_signrank_witness(class, &reduction, &SolverConfig::with_alpha(alpha))?)
}

pub fn extract_signrank(args: &SignrankArgs, format: Format) -> CliResult<Outcome> {
    if format == Format::Csv {
        return Err(no_csv("extract-signrank"));
    }
    let class = specs::finite_class(&args.class)?;
    let witness = signrank_witness(&class, args.alpha)?;
    let checks = witness.verify(&class)?;
    json(
        &SignrankReport {
            class: args.class.clone(),
            checks,
            witness,
        },
        true,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentKind {
    Gaussian,
    Identity,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuArgs {
    /// Sphere dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Target dimension of Gaussian assignments; identity uses `d + 1`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = AssignmentKind::Gaussian)]
    pub assignment: AssignmentKind,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
}

pub fn bu_demo(args: &BuArgs, format: Format) -> CliResult<Outcome> {
    if format == Format::Csv {
        return Err(no_csv("bu-demo"));
    }
    let assignment = match args.assignment {
        AssignmentKind::Gaussian => Assignment::Gaussian {
            k: args.k.unwrap_or(args.d),
        },
        AssignmentKind::Identity => Assignment::Identity,
    };
    let opts = AntipodalOptions {
        tol: args.tol,
        restarts: args.restarts,
        seed: seed(args.seed)?,
        ..AntipodalOptions::default()
    };
    let demo = borsuk_ulam_demo(args.d, args.delta, assignment, &opts)?;
    // A collision is guaranteed when k <= d; otherwise none is expected.
    let pass = !demo.collisions.is_empty() == (demo.k <= demo.d);
    json(&demo, pass)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MajorityArgs {
    /// `maj3:seed:d`.
    #[arg(long, default_value = "maj3:1:3")]
    pub class: String,
    #[arg(long, default_value_t = 49)]
    pub count: usize,
    #[arg(long, default_value_t = 8)]
    pub atoms: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the planted instance that attains the one-third bound.
    #[arg(long)]
    pub no_planted: bool,
}

pub fn majority3_check(args: &MajorityArgs, format: Format) -> CliResult<Outcome> {
    let seed = seed(args.seed)?;
    let c = specs::majority3(&args.class)?;
    let mut suite = random_majority3_suite(&c, args.count, args.atoms, seed)?;
    if !args.no_planted {
        suite.push(planted_majority3_instance(&c, seed)?);
    }
    let rep = majority3_identity_check(&c, &suite)?;
    match format {
        Format::Json => json(&rep, rep.all_pass),
        Format::Csv => csv_rows(
            &["id", "loss_1", "loss_2", "loss_3", "winner", "min_loss", "pass"],
            rep.records
                .iter()
                .map(|r| {
                    vec![
                        r.id.to_string(),
                        fmt_float(r.losses[0]),
                        fmt_float(r.losses[1]),
                        fmt_float(r.losses[2]),
                        r.winner.to_string(),
                        fmt_float(r.min_loss),
                        r.pass.to_string(),
                    ]
                })
                .collect(),
            rep.all_pass,
        ),
    }
}
