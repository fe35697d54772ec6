//! `rdm`: estimation, simulation, power studies, screening and timing for
//! rearranged dependence measures.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rearranged_dependence::data::{read_numeric, read_screen, HeaderMode};
use rearranged_dependence::estimation::{classical_estimate, estimate_many, MultiGrid};
use rearranged_dependence::harness::{bench, power, simulate, BenchConfig, ModelFamily, PowerConfig, SimulationConfig};
use rearranged_dependence::{
    knn_fit, multivariate_estimate, pseudo_observations, screen, BandwidthMode, CopulaModel, Error, MeasureKind,
    ScreenOptions, TiePolicy,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "rdm", version, about = "Rearranged dependence measures")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate rearranged measures from a CSV sample.
    Estimate(EstimateArgs),
    /// Monte Carlo mean and sd of the estimators under a model.
    Simulate(SimulateArgs),
    /// Rejection rates of independence tests along a parameter sweep.
    Power(PowerArgs),
    /// Screen many rows against a response with BH selection.
    Screen(ScreenArgs),
    /// Time estimation over sample sizes.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// Input CSV: columns x and y, or d predictors then the response with --multivariate.
    #[arg(long)]
    input: PathBuf,
    /// Measure kind (repeatable): rho, tau, gini, beta, sw1, sw2, zeta1, r.
    #[arg(long = "measure", default_value = "rho")]
    measures: Vec<MeasureKind>,
    /// auto, fixed:s1,s2 or explicit:N1,N2.
    #[arg(long, default_value = "auto")]
    bandwidth: BandwidthMode,
    #[arg(long, default_value = "random")]
    tie_policy: TiePolicy,
    /// Treat all but the last column as predictors.
    #[arg(long)]
    multivariate: bool,
    /// Header row: auto, yes or no.
    #[arg(long, default_value = "auto")]
    header: HeaderMode,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Model spec (repeatable): pi, m, w, ordsum, gauss:p=.., gumbel:theta=.., parabola:sigma=..
    #[arg(long = "model", required = true)]
    models: Vec<CopulaModel>,
    /// Sample sizes (comma separated or repeated).
    #[arg(long, value_delimiter = ',', default_value = "500")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long = "measure", default_value = "rho")]
    measures: Vec<MeasureKind>,
    #[arg(long, default_value = "auto")]
    bandwidth: BandwidthMode,
    #[arg(long, default_value = "random")]
    tie_policy: TiePolicy,
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[command(flatten)]
    common: Common,
    /// Model family: gauss (p), gumbel (theta) or parabola (1/sigma).
    #[arg(long, default_value = "gauss")]
    model: ModelFamily,
    /// Parameter values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8")]
    sweep: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 199)]
    permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "auto")]
    bandwidth: BandwidthMode,
    /// Reuse the observed bandwidth inside permutation replicates (approximate).
    #[arg(long)]
    fast: bool,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset CSV: id column, then one column per response value.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "measure", default_value = "rho")]
    measure: MeasureKind,
    #[arg(long, default_value_t = 999)]
    permutations: usize,
    /// Benjamini-Hochberg false discovery rate.
    #[arg(long, default_value_t = 0.05)]
    fdr: f64,
    #[arg(long, default_value = "auto")]
    bandwidth: BandwidthMode,
    #[arg(long, default_value = "random")]
    tie_policy: TiePolicy,
    #[arg(long)]
    fast: bool,
    #[arg(long, default_value = "auto")]
    header: HeaderMode,
    /// Where to write 3-nearest-neighbour fits of the top selected rows.
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Number of selected rows to fit.
    #[arg(long, default_value_t = 5)]
    top: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000,80000")]
    n: Vec<usize>,
    #[arg(long, default_value = "gauss:p=0.5")]
    model: CopulaModel,
    #[arg(long = "measure", default_value = "rho")]
    measure: MeasureKind,
    #[arg(long, default_value = "fixed:0.4,0.4")]
    bandwidth: BandwidthMode,
    /// Timed runs per size; the median is reported.
    #[arg(long, default_value_t = 5)]
    runs: usize,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::UnsupportedModel(_)
            | Error::UnsupportedPair { .. }
            | Error::UnsupportedDimension(_)
            | Error::BandwidthTooLarge { .. } => Failure::Config(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Power(a) => cmd_power(a),
        Command::Screen(a) => cmd_screen(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Data(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

/// Header comment echoing the configuration. The thread count is left out so
/// that output bytes do not depend on it.
fn header(command: &str, fields: &[(&str, String)]) -> String {
    let mut s = format!("# rdm {VERSION} {command}");
    for (k, v) in fields {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn emit(path: &Option<PathBuf>, body: &str) -> Outcome {
    match path {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(body.as_bytes()))
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            io::stdout().lock().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn open(path: &PathBuf) -> Result<impl Read, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

fn cmd_estimate(a: &EstimateArgs) -> Outcome {
    let table = read_numeric(open(&a.input)?, a.header)?;
    let d = table.columns.len();
    let mut out = header(
        "estimate",
        &[
            ("input", a.input.display().to_string()),
            ("measures", join(&a.measures)),
            ("bandwidth", a.bandwidth.to_string()),
            ("tie_policy", a.tie_policy.to_string()),
            ("multivariate", a.multivariate.to_string()),
            ("seed", a.common.seed.to_string()),
        ],
    );
    if a.multivariate {
        if d < 2 {
            return Err(Failure::Data(format!("need at least 2 columns, found {d}")));
        }
        let (predictors, y) = table.columns.split_at(d - 1);
        let grid = MultiGrid::default_for(y[0].len(), d - 1);
        out.push_str("measure,estimate,cells,levels,n,d\n");
        for &kind in &a.measures {
            let v = multivariate_estimate(predictors, &y[0], kind, Some(grid), a.tie_policy, a.common.seed)?;
            let _ = writeln!(out, "{kind},{v:.6},{},{},{},{}", grid.cells, grid.levels, y[0].len(), d - 1);
        }
        return emit(&a.common.output, &out);
    }
    if d != 2 {
        return Err(Failure::Data(format!("expected 2 columns, found {d} (use --multivariate for more)")));
    }
    let s = pseudo_observations(&table.columns[0], &table.columns[1], a.tie_policy, a.common.seed)?;
    let (values, b) = estimate_many(&s, &a.measures, a.bandwidth)?;
    let (tx, ty) = s.tie_counts();
    out.push_str("measure,estimate,classical,n1,n2,n,ties_x,ties_y\n");
    for (&kind, v) in a.measures.iter().zip(&values) {
        let c = classical_estimate(&s, kind, b)?;
        let _ = writeln!(out, "{kind},{v:.6},{c:.6},{},{},{},{tx},{ty}", b.n1, b.n2, s.n());
    }
    emit(&a.common.output, &out)
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let mut out = header(
        "simulate",
        &[
            ("models", a.models.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")),
            ("n", join(&a.n)),
            ("reps", a.reps.to_string()),
            ("measures", join(&a.measures)),
            ("bandwidth", a.bandwidth.to_string()),
            ("tie_policy", a.tie_policy.to_string()),
            ("seed", a.common.seed.to_string()),
        ],
    );
    out.push_str("model,n,measure,true,mean,sd,classical_mean,classical_sd,mean_n1,mean_n2\n");
    for (i, model) in a.models.iter().enumerate() {
        for (j, &n) in a.n.iter().enumerate() {
            let cfg = SimulationConfig {
                model: *model,
                n,
                reps: a.reps,
                kinds: a.measures.clone(),
                seed: rearranged_dependence::rng::child_seed(a.common.seed, (i * a.n.len() + j) as u64),
                bandwidth: a.bandwidth,
                tie_policy: a.tie_policy,
            };
            for row in simulate(&cfg)? {
                let truth = row.true_value.map_or_else(String::new, |t| format!("{t:.6}"));
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{truth},{:.6},{:.6},{:.6},{:.6},{:.2},{:.2}",
                    row.model,
                    row.n,
                    row.kind,
                    row.mean,
                    row.sd,
                    row.classical_mean,
                    row.classical_sd,
                    row.mean_n1,
                    row.mean_n2
                );
            }
        }
    }
    emit(&a.common.output, &out)
}

fn cmd_power(a: &PowerArgs) -> Outcome {
    let cfg = PowerConfig {
        family: a.model,
        params: a.sweep.clone(),
        n: a.n,
        reps: a.reps,
        permutations: a.permutations,
        alpha: a.alpha,
        seed: a.common.seed,
        bandwidth: a.bandwidth,
        fast: a.fast,
    };
    let report = power(&cfg)?;
    let mut out = header(
        "power",
        &[
            ("model", a.model.to_string()),
            ("sweep", join(&a.sweep)),
            ("n", a.n.to_string()),
            ("reps", a.reps.to_string()),
            ("permutations", a.permutations.to_string()),
            ("alpha", a.alpha.to_string()),
            ("bandwidth", a.bandwidth.to_string()),
            ("fast", a.fast.to_string()),
            ("seed", a.common.seed.to_string()),
        ],
    );
    let tests = report.tests();
    let _ = writeln!(out, "{},{}", a.model.parameter_name(), tests.join(","));
    for &p in &a.sweep {
        let rates: Vec<String> =
            tests.iter().map(|t| format!("{:.4}", report.rate(p, t).unwrap_or(f64::NAN))).collect();
        let _ = writeln!(out, "{p},{}", rates.join(","));
    }
    let flags: Vec<String> = report.monotone.iter().map(|(t, m)| format!("{t}={m}")).collect();
    let _ = writeln!(out, "# nondecreasing: {}", flags.join(","));
    emit(&a.common.output, &out)
}

fn cmd_screen(a: &ScreenArgs) -> Outcome {
    let data = read_screen(open(&a.input)?, a.header)?;
    let opts = ScreenOptions {
        kind: a.measure,
        permutations: a.permutations,
        fdr: a.fdr,
        seed: a.common.seed,
        tie_policy: a.tie_policy,
        bandwidth: a.bandwidth,
        fast: a.fast,
        ..Default::default()
    };
    let report = screen(&data.rows, &data.response, &opts)?;
    let fields = [
        ("input", a.input.display().to_string()),
        ("measure", a.measure.to_string()),
        ("permutations", a.permutations.to_string()),
        ("fdr", a.fdr.to_string()),
        ("bandwidth", a.bandwidth.to_string()),
        ("tie_policy", a.tie_policy.to_string()),
        ("fast", a.fast.to_string()),
        ("seed", a.common.seed.to_string()),
    ];
    let mut out = header("screen", &fields);
    out.push_str("id,statistic,p,selected_rearranged,selected_spearman,spearman,spearman_p,observations,flag\n");
    let num = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.6}"));
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&e.id),
            num(e.statistic),
            num(e.p_value),
            e.selected_rearranged,
            e.selected_spearman,
            num(e.spearman),
            num(e.spearman_p),
            e.observations,
            csv_field(e.flag.as_deref().unwrap_or(""))
        );
    }
    let _ = writeln!(out, "# selected_rearranged: {}", report.selected_rearranged.len());
    let _ = writeln!(out, "# selected_spearman: {}", report.selected_spearman.len());
    let _ = writeln!(out, "# rearranged_only: {}", report.difference.join(";"));
    emit(&a.common.output, &out)?;

    if let Some(path) = &a.fits {
        let mut fits = header("screen-fits", &fields);
        fits.push_str("id,x,fit\n");
        for id in report.selected_rearranged.iter().take(a.top) {
            let row = data.rows.iter().find(|r| &r.id == id).expect("selected row exists");
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                data.response.iter().zip(&row.values).filter_map(|(t, v)| Some(((*t)?, (*v)?))).unzip();
            for (x, f) in knn_fit(&xs, &ys, 3)? {
                let _ = writeln!(fits, "{},{x},{f:.6}", csv_field(id));
            }
        }
        emit(&Some(path.clone()), &fits)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_bench(a: &BenchArgs) -> Outcome {
    let cfg = BenchConfig {
        model: a.model,
        ns: a.n.clone(),
        kind: a.measure,
        bandwidth: a.bandwidth,
        runs: a.runs,
        seed: a.common.seed,
    };
    let report = bench(&cfg)?;
    let mut out = header(
        "bench",
        &[
            ("model", a.model.to_string()),
            ("n", join(&a.n)),
            ("measure", a.measure.to_string()),
            ("bandwidth", a.bandwidth.to_string()),
            ("runs", a.runs.to_string()),
            ("seed", a.common.seed.to_string()),
        ],
    );
    out.push_str("n,seconds,seconds_per_nlogn\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{:.6e},{:.6e}", r.n, r.seconds, r.per_nlogn);
    }
    if let (Some(e), Some(q)) = (report.exponent, report.nlogn_ratio) {
        let _ = writeln!(out, "# fitted_exponent={e:.4} nlogn_ratio={q:.4}");
    }
    emit(&a.common.output, &out)
}
