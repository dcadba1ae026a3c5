//! gtkit: plan, construct, evaluate and simulate group-testing matrices.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Randomized
//! subcommands refuse to run without an explicit --seed unless --entropy
//! is passed; every run prints a provenance header (or carries it in the
//! JSON object) so reports can be reproduced.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gtkit::bounds::{
    self, lower_bound_all, lower_bound_almost, plan_construction, predicted_test_count,
};
use gtkit::codes::{
    derandomized_gv_code, distance_profile, rs_generator, Codebook, ProfileMode,
    DEFAULT_DISTANCE_BUDGET,
};
use gtkit::concat::{ks_concatenate, matrix_read_path, matrix_write_path, Strictness};
use gtkit::disjunct::{
    self, avg_distance_max_t, azuma_tail_bound, column_stats, estimate_threads,
    estimate_z_exceedance, exact_disjunct_check, min_distance_t, AvgDistanceInputs, DisjunctKind,
    TBound, DEFAULT_CHECK_BUDGET,
};
use gtkit::simulate::{simulate_success_exhaustive, simulate_success_opts, DefectiveModel};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "gtkit",
    version,
    about = "Group-testing matrices from constant-weight codes"
)]
struct Cli {
    /// Emit one JSON object per report line instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for estimation and simulation; results are
    /// independent of this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Resolve all construction parameters for (N, t, epsilon, a).
    Plan(PlanArgs),
    /// Build a test matrix and write it as a GTMATRIX v1 file.
    Construct(ConstructArgs),
    /// Check or estimate disjunctness properties of a matrix file.
    Evaluate(EvaluateArgs),
    /// Run decode trials against a matrix file.
    Simulate(SimulateArgs),
    /// Closed-form bounds and diagnostics.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long = "N")]
    items: u64,
    #[arg(long)]
    t: u64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value = "type2", value_parser = parse_kind)]
    kind: DisjunctKind,
}

#[derive(Args)]
struct ConstructArgs {
    /// Planner route: number of items (columns).
    #[arg(long = "N", required_unless_present = "rs", conflicts_with = "rs")]
    items: Option<u64>,
    #[arg(long, requires = "items")]
    t: Option<u64>,
    #[arg(long, requires = "items")]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value = "type2", value_parser = parse_kind)]
    kind: DisjunctKind,

    /// Classic route: Reed-Solomon outer code instead of the planner.
    #[arg(long)]
    rs: bool,
    /// Field order for --rs.
    #[arg(long, requires = "rs")]
    q: Option<u32>,
    /// Outer-code dimension for --rs (N = q^k).
    #[arg(long, requires = "rs")]
    k: Option<usize>,
    /// Outer-code length for --rs; defaults to q - 1.
    #[arg(long, requires = "rs")]
    length: Option<usize>,

    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Allow OS entropy where a seed would be required.
    #[arg(long)]
    entropy: bool,
    /// Budget for exact distance measurement, in symbol comparisons.
    #[arg(long, default_value_t = DEFAULT_DISTANCE_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    matrix: std::path::PathBuf,
    /// Accept duplicate columns in the input file.
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    t: usize,
    /// Exhaustive t-disjunct check instead of estimation.
    #[arg(long)]
    exact: bool,
    /// Estimate the overlap-statistic tail instead of disjunctness.
    #[arg(long)]
    ztail: bool,
    /// Report the largest t certified by the average-distance bound at
    /// --epsilon, from measured column statistics.
    #[arg(long)]
    max_t: bool,
    #[arg(long, default_value = "type2", value_parser = parse_kind)]
    kind: DisjunctKind,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    entropy: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Budget in word operations (exact check) or comparisons (stats).
    #[arg(long, default_value_t = DEFAULT_CHECK_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    matrix: std::path::PathBuf,
    #[arg(long)]
    lenient: bool,
    /// Defective-set size; a comma-separated list sweeps and emits CSV.
    #[arg(long, value_delimiter = ',')]
    t: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    entropy: bool,
    /// Enumerate every defective set instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Draw defective sets of size uniform in 0..=t instead of exactly t.
    #[arg(long)]
    allow_fewer: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long = "N")]
    items: Option<u64>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value = "type2", value_parser = parse_kind)]
    kind: DisjunctKind,
    /// Evaluate the q-ary entropy h_q(x): field order.
    #[arg(long, requires = "hq_x")]
    hq_q: Option<u32>,
    #[arg(long, requires = "hq_q")]
    hq_x: Option<f64>,
    /// Evaluate the small-rate identity residual: field order.
    #[arg(long, requires = "residual_s")]
    residual_q: Option<u32>,
    #[arg(long, requires = "residual_q")]
    residual_s: Option<f64>,
}

fn parse_kind(s: &str) -> Result<DisjunctKind, String> {
    match s {
        "type1" => Ok(DisjunctKind::Type1),
        "type2" => Ok(DisjunctKind::Type2),
        _ => Err(format!("unknown kind `{s}`, expected type1 or type2")),
    }
}

struct Reporter {
    json: bool,
}

impl Reporter {
    fn header(&self, cmd: &str, params: &[(&str, String)]) {
        if self.json {
            return;
        }
        let mut line = format!("# gtkit {VERSION} {cmd}");
        for (k, v) in params {
            let _ = write!(line, " {k}={v}");
        }
        println!("{line}");
    }

    fn json_object(&self, cmd: &str, fields: &[(&str, String)]) {
        let mut obj = format!("{{\"tool\":\"gtkit {VERSION}\",\"cmd\":\"{cmd}\"");
        for (k, v) in fields {
            let quoted = v.parse::<f64>().is_err() && v != "true" && v != "false";
            if quoted {
                let _ = write!(obj, ",\"{k}\":\"{v}\"");
            } else {
                let _ = write!(obj, ",\"{k}\":{v}");
            }
        }
        obj.push('}');
        println!("{obj}");
    }
}

fn resolve_seed(seed: Option<u64>, entropy: bool, what: &str) -> Result<u64, String> {
    match seed {
        Some(s) => Ok(s),
        None if entropy => {
            let s = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0)
                ^ std::process::id() as u64;
            eprintln!("# entropy seed: {s}");
            Ok(s)
        }
        None => Err(format!(
            "{what} is randomized: pass --seed <u64> (or --entropy to opt out of reproducibility)"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let reporter = Reporter { json: cli.json };
    let result = match cli.cmd {
        Cmd::Plan(args) => cmd_plan(&reporter, args),
        Cmd::Construct(args) => cmd_construct(&reporter, args),
        Cmd::Evaluate(args) => cmd_evaluate(&reporter, args, cli.threads),
        Cmd::Simulate(args) => cmd_simulate(&reporter, args, cli.threads),
        Cmd::Bounds(args) => cmd_bounds(&reporter, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
    // Domain errors exit through `fail` below with code 1.
}

struct UsageError(String);

fn fail(msg: impl std::fmt::Display) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(1);
}

fn cmd_plan(rep: &Reporter, args: PlanArgs) -> Result<(), UsageError> {
    rep.header(
        "plan",
        &[
            ("N", args.items.to_string()),
            ("t", args.t.to_string()),
            ("epsilon", args.epsilon.to_string()),
            ("a", args.a.to_string()),
            ("kind", args.kind.to_string()),
        ],
    );
    match plan_construction(args.items, args.t, args.epsilon, args.a, args.kind) {
        Ok(plan) => {
            if rep.json {
                rep.json_object(
                    "plan",
                    &plan
                        .plan_block()
                        .lines()
                        .map(|l| l.split_once('=').unwrap())
                        .map(|(k, v)| (k, v.to_string()))
                        .collect::<Vec<_>>(),
                );
            } else {
                println!("{}", plan.plan_block());
            }
            Ok(())
        }
        Err(e) => fail(e),
    }
}

fn cmd_construct(rep: &Reporter, args: ConstructArgs) -> Result<(), UsageError> {
    if args.rs {
        let (q, k) = match (args.q, args.k) {
            (Some(q), Some(k)) => (q, k),
            _ => return Err(UsageError("--rs requires --q and --k".into())),
        };
        let field = match gtkit::field::FieldSpec::new(q) {
            Ok(f) => f,
            Err(e) => fail(e),
        };
        let length = args.length.unwrap_or((q - 1) as usize);
        rep.header(
            "construct",
            &[
                ("rs", "true".into()),
                ("q", q.to_string()),
                ("k", k.to_string()),
                ("length", length.to_string()),
            ],
        );
        let code = match rs_generator(&field, k, length) {
            Ok(c) => c,
            Err(e) => fail(e),
        };
        let book = match Codebook::from_full_linear(&code) {
            Ok(b) => b,
            Err(e) => fail(e),
        };
        let provenance = format!("source=rs\nq={q}\nk={k}\nMq={length}\nN={}", book.size());
        return finish_construct(rep, &book, &field, provenance, args);
    }

    let (items, t, epsilon) = match (args.items, args.t, args.epsilon) {
        (Some(n), Some(t), Some(e)) => (n, t, e),
        _ => {
            return Err(UsageError(
                "construct requires --N, --t and --epsilon (or the --rs route)".into(),
            ))
        }
    };
    rep.header(
        "construct",
        &[
            ("N", items.to_string()),
            ("t", t.to_string()),
            ("epsilon", epsilon.to_string()),
            ("a", args.a.to_string()),
            ("kind", args.kind.to_string()),
        ],
    );
    let plan = match plan_construction(items, t, epsilon, args.a, args.kind) {
        Ok(p) => p,
        Err(e) => fail(e),
    };
    let field = match gtkit::field::FieldSpec::new(plan.q as u32) {
        Ok(f) => f,
        Err(e) => fail(e),
    };
    let code = match derandomized_gv_code(&field, plan.k as usize, plan.m_q, plan.d_q) {
        Ok(c) => c,
        Err(e) => fail(e),
    };
    let book = match Codebook::from_linear_prefix(&code, plan.items) {
        Ok(b) => b,
        Err(e) => fail(e),
    };
    let provenance = format!("source=plan\n{}", plan.plan_block());
    finish_construct(rep, &book, &field, provenance, args)
}

fn finish_construct(
    rep: &Reporter,
    book: &Codebook,
    field: &gtkit::field::FieldSpec,
    mut provenance: String,
    args: ConstructArgs,
) -> Result<(), UsageError> {
    // Measured q-ary distance statistics; the binary ones are exactly
    // twice these under the indicator map.
    let n = book.size() as u128;
    let needs_sampling = n * n * book.length() as u128 > args.budget as u128;
    let seed = if needs_sampling {
        match resolve_seed(
            args.seed,
            args.entropy,
            "distance measurement (sampled mode)",
        ) {
            Ok(s) => Some(s),
            Err(msg) => return Err(UsageError(msg)),
        }
    } else {
        args.seed
    };
    let profile = match distance_profile(book, args.budget, seed) {
        Ok(p) => p,
        Err(e) => fail(e),
    };
    let matrix = match ks_concatenate(book, field) {
        Ok(m) => m,
        Err(e) => fail(e),
    };
    let w = book.length();
    let d = 2 * profile.min_distance;
    let avg = 2.0 * profile.avg_as_f64();
    let mode = match profile.mode {
        ProfileMode::Exhaustive => "exhaustive".to_string(),
        ProfileMode::Sampled { samples, seed } => format!("sampled:{samples}:{seed}"),
    };
    let _ = write!(provenance, "\nw={w}\nd={d}\nD={avg}\nD_mode={mode}");
    let mut matrix = matrix;
    matrix.set_provenance(provenance);
    if let Err(e) = matrix_write_path(&matrix, &args.out) {
        fail(e);
    }

    let fields = [
        ("M", matrix.tests().to_string()),
        ("N", matrix.items().to_string()),
        ("w", w.to_string()),
        ("d", d.to_string()),
        ("D", avg.to_string()),
        ("D_mode", mode),
        ("out", args.out.display().to_string()),
    ];
    if rep.json {
        rep.json_object("construct", &fields);
    } else {
        for (k, v) in &fields {
            println!("{k}={v}");
        }
    }
    Ok(())
}

fn cmd_evaluate(rep: &Reporter, args: EvaluateArgs, threads: usize) -> Result<(), UsageError> {
    let strict = if args.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let matrix = match matrix_read_path(&args.matrix, strict) {
        Ok(m) => m,
        Err(e) => fail(e),
    };
    let mut params = vec![
        ("matrix", args.matrix.display().to_string()),
        ("t", args.t.to_string()),
    ];
    if args.exact {
        params.push(("mode", "exact".into()));
        params.push(("budget", args.budget.to_string()));
    } else if args.max_t {
        params.push(("mode", "max-t".into()));
    } else {
        params.push((
            "mode",
            if args.ztail {
                "ztail".into()
            } else {
                args.kind.to_string()
            },
        ));
        params.push(("samples", args.samples.to_string()));
        if let Some(s) = args.seed {
            params.push(("seed", s.to_string()));
        }
    }
    rep.header("evaluate", &params);

    if args.exact {
        let out = match exact_disjunct_check(&matrix, args.t, args.budget) {
            Ok(o) => o,
            Err(e) => fail(e),
        };
        match (&out.witness, rep.json) {
            (None, false) => println!("disjunct t={} result=true", args.t),
            (Some(w), false) => println!(
                "disjunct t={} result=false witness_covering={:?} witness_victim={}",
                args.t, w.covering, w.victim
            ),
            (witness, true) => {
                let mut fields = vec![
                    ("t", args.t.to_string()),
                    ("disjunct", out.disjunct.to_string()),
                ];
                if let Some(w) = witness {
                    fields.push(("witness_victim", w.victim.to_string()));
                    fields.push((
                        "witness_covering",
                        format!(
                            "[{}]",
                            w.covering
                                .iter()
                                .map(|c| c.to_string())
                                .collect::<Vec<_>>()
                                .join(",")
                        ),
                    ));
                }
                rep.json_object("evaluate", &fields);
            }
        }
        return Ok(());
    }

    if args.max_t {
        let epsilon = args
            .epsilon
            .ok_or(UsageError("--max-t requires --epsilon".into()))?;
        let stats = match column_stats(&matrix, args.budget, args.seed) {
            Ok(s) => s,
            Err(e) => fail(e),
        };
        let inputs = match AvgDistanceInputs::new(
            stats.weight,
            stats.min_distance,
            stats.avg_as_f64(),
            matrix.items() as u64,
            epsilon,
        ) {
            Ok(i) => i,
            Err(e) => fail(e),
        };
        let t_star = match avg_distance_max_t(&inputs, args.kind) {
            Ok(t) => t.to_string(),
            Err(disjunct::DisjunctError::DegenerateGeometry(_)) => "unbounded".to_string(),
            Err(e) => fail(e),
        };
        let p2 = match min_distance_t(stats.weight as u64, stats.min_distance as u64) {
            TBound::Bounded(t) => t.to_string(),
            TBound::Unbounded => "unbounded".to_string(),
        };
        let bound = azuma_tail_bound(
            stats.weight,
            stats.min_distance,
            stats.avg_as_f64(),
            matrix.items() as u64,
            args.t as u64,
        )
        .map(|b| b.to_string())
        .unwrap_or_else(|_| "n/a".to_string());
        let fields = [
            ("w", stats.weight.to_string()),
            ("d", stats.min_distance.to_string()),
            ("D", stats.avg_as_f64().to_string()),
            ("epsilon", epsilon.to_string()),
            ("kind", args.kind.to_string()),
            ("avg_distance_max_t", t_star),
            ("min_distance_t", p2),
            ("azuma_bound_at_t", format!("{}:{bound}", args.t)),
        ];
        if rep.json {
            rep.json_object("evaluate", &fields);
        } else {
            for (k, v) in &fields {
                println!("{k}={v}");
            }
        }
        return Ok(());
    }

    let seed = resolve_seed(args.seed, args.entropy, "estimation").map_err(UsageError)?;
    if args.ztail {
        let z = match estimate_z_exceedance(&matrix, args.t, args.samples, seed) {
            Ok(z) => z,
            Err(e) => fail(e),
        };
        if rep.json {
            rep.json_object(
                "ztail",
                &[
                    ("t", z.t.to_string()),
                    ("samples", z.samples.to_string()),
                    ("exceedances", z.exceedances.to_string()),
                    ("fraction", z.fraction.to_string()),
                    ("seed", z.seed.to_string()),
                    ("exhaustive", z.exhaustive.to_string()),
                ],
            );
        } else {
            println!(
                "ztail {} {} {} {} {} exhaustive={}",
                z.t, z.samples, z.exceedances, z.fraction, z.seed, z.exhaustive
            );
        }
        return Ok(());
    }

    let est = match estimate_threads(&matrix, args.kind, args.t, args.samples, seed, threads) {
        Ok(e) => e,
        Err(e) => fail(e),
    };
    if rep.json {
        rep.json_object(
            "estimate",
            &[
                ("kind", est.kind.to_string()),
                ("t", est.t.to_string()),
                ("samples", est.samples.to_string()),
                ("failures", est.failures.to_string()),
                ("epsilon_hat", est.epsilon_hat.to_string()),
                ("ci_low", est.ci_low.to_string()),
                ("ci_high", est.ci_high.to_string()),
                ("seed", est.seed.to_string()),
                ("exhaustive", est.exhaustive.to_string()),
            ],
        );
    } else {
        println!("{}", est.report_line());
        println!("# {}", est.summary());
    }
    Ok(())
}

fn cmd_simulate(rep: &Reporter, args: SimulateArgs, threads: usize) -> Result<(), UsageError> {
    let strict = if args.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let matrix = match matrix_read_path(&args.matrix, strict) {
        Ok(m) => m,
        Err(e) => fail(e),
    };
    if args.t.is_empty() {
        return Err(UsageError("--t requires at least one value".into()));
    }
    let seed = if args.exhaustive {
        args.seed.unwrap_or(0)
    } else {
        resolve_seed(args.seed, args.entropy, "simulation").map_err(UsageError)?
    };
    rep.header(
        "simulate",
        &[
            ("matrix", args.matrix.display().to_string()),
            ("trials", args.trials.to_string()),
            ("seed", seed.to_string()),
        ],
    );

    let sweep = args.t.len() > 1;
    if sweep && !rep.json {
        println!("t,trials,successes,rate,ci_low,ci_high,superset_misses,seed");
    }
    for &t in &args.t {
        let report = if args.exhaustive {
            match simulate_success_exhaustive(&matrix, t) {
                Ok(r) => r,
                Err(e) => fail(e),
            }
        } else {
            let model = if args.allow_fewer {
                DefectiveModel::UpToT
            } else {
                DefectiveModel::ExactlyT
            };
            match simulate_success_opts(&matrix, t, args.trials, seed, model, threads) {
                Ok(r) => r,
                Err(e) => fail(e),
            }
        };
        if rep.json {
            rep.json_object(
                "simulate",
                &[
                    ("t", t.to_string()),
                    ("trials", report.trials.to_string()),
                    ("successes", report.successes.to_string()),
                    ("rate", report.rate.to_string()),
                    ("ci_low", report.ci_low.to_string()),
                    ("ci_high", report.ci_high.to_string()),
                    ("superset_misses", report.superset_misses.to_string()),
                    (
                        "soundness_violations",
                        report.soundness_violations.to_string(),
                    ),
                    ("seed", report.seed.to_string()),
                    ("exhaustive", report.exhaustive.to_string()),
                ],
            );
        } else if sweep {
            println!(
                "{t},{},{},{},{},{},{},{}",
                report.trials,
                report.successes,
                report.rate,
                report.ci_low,
                report.ci_high,
                report.superset_misses,
                report.seed
            );
        } else {
            println!("t={t} {}", report.report_line());
            println!("# {}", report.summary());
            if report.soundness_violations > 0 {
                fail(format!(
                    "decoder soundness violated in {} trials",
                    report.soundness_violations
                ));
            }
        }
    }
    Ok(())
}

fn cmd_bounds(rep: &Reporter, args: BoundsArgs) -> Result<(), UsageError> {
    let mut fields: Vec<(&str, String)> = Vec::new();
    if let (Some(q), Some(x)) = (args.hq_q, args.hq_x) {
        match bounds::entropy_q(q, x) {
            Ok(h) => fields.push(("h_q", h.to_string())),
            Err(e) => fail(e),
        }
    }
    if let (Some(q), Some(s)) = (args.residual_q, args.residual_s) {
        match bounds::gv_rate_residual(q, s) {
            Ok(r) => {
                fields.push(("rate_lhs", r.lhs.to_string()));
                fields.push(("rate_main", r.main_term.to_string()));
                fields.push(("gv_rate_residual", r.residual.to_string()));
            }
            Err(e) => fail(e),
        }
    }
    if let (Some(n), Some(t)) = (args.items, args.t) {
        match lower_bound_all(n, t) {
            Ok(b) => fields.push(("lower_bound_all_log2", b.to_string())),
            Err(e) => fail(e),
        }
        if let Some(eps) = args.epsilon {
            match lower_bound_almost(n, t, eps) {
                Ok(b) => fields.push(("lower_bound_almost_log2", b.to_string())),
                Err(e) => fail(e),
            }
            if let Some(a) = args.a {
                match predicted_test_count(n, t, eps, a, args.kind) {
                    Ok(m) => fields.push(("predicted_test_count", m.to_string())),
                    Err(e) => fail(e),
                }
            }
        }
    }
    if fields.is_empty() {
        return Err(UsageError(
            "bounds needs --N/--t (optionally --epsilon, --a), --hq-q/--hq-x, or --residual-q/--residual-s"
                .into(),
        ));
    }
    if rep.json {
        rep.json_object("bounds", &fields);
    } else {
        rep.header("bounds", &[]);
        for (k, v) in &fields {
            println!("{k}={v}");
        }
    }
    Ok(())
}
