//! `octagon`: verification suites and experiment drivers.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use octagon_core::experiments::{
    avoidance_scan, equidistribution_test, horocycle_orbit, matching_demo, norm_scan, recurrence_profile,
    tremor_distance_polynomial, TestFunction, SIGMA_BAL,
};
use octagon_core::report::{to_stable_json, Format};
use octagon_core::surface::{
    eval_quadratic, horocycle_act, horocycle_period, omega1_surface, tremor_path, TremorVector,
};
use octagon_core::verify::run_suite;
use octagon_core::QSqrt2;
use serde::Serialize;

use config::{resolve, usage, RunConfig, UsageError};

const OUT_DIR_ENV: &str = "OCTAGON_OUT_DIR";

#[derive(Parser)]
#[command(name = "octagon", version, about = "Octagon-locus cocycle and horocycle experiments")]
struct Cli {
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file. Defaults to $OCTAGON_OUT_DIR/<command>-<seed>.<ext>, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        _ => Err(format!("unknown format {s}; expected json or csv")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact-algebra suite: traces, Schottky power, symplectic pairing, cocycle and tremor laws.
    Verify,
    /// Norm distribution of the pushed balanced vector.
    Scan(ScanArgs),
    /// Horocycle-push average of a bump against its Haar average.
    Equi(EquiArgs),
    /// Cusp-excursion fractions over a list of times.
    Recur(RecurArgs),
    /// Bowen-ball visits and matched cocycle ratios for a pseudo-Anosov pair.
    Match(MatchArgs),
    /// Exact tremor of ω₁ along σ, and optionally its pushed distance to the locus.
    Tremor(TremorArgs),
    /// Near-locus occupancy of pushed tremor segments.
    Avoid(AvoidArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ScanArgs {
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EquiArgs {
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    haar_n: Option<usize>,
    #[arg(long)]
    height_center: Option<f64>,
    #[arg(long)]
    height_width: Option<f64>,
    #[arg(long)]
    angle_center: Option<f64>,
    #[arg(long)]
    angle_width: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RecurArgs {
    #[arg(long, value_delimiter = ',')]
    t_list: Option<Vec<f64>>,
    #[arg(long)]
    height_cut: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    haar_n: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct MatchArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct TremorArgs {
    /// Tremor time in ℚ(√2), e.g. `1/3` or `1/2 + 1/4*sqrt2`.
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct AvoidArgs {
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    n_s: Option<usize>,
    #[arg(long)]
    n_ell: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Scan(_) => "scan",
            Command::Equi(_) => "equi",
            Command::Recur(_) => "recur",
            Command::Match(_) => "match",
            Command::Tremor(_) => "tremor",
            Command::Avoid(_) => "avoid",
        }
    }

    fn flags(&self) -> RunConfig {
        let d = RunConfig::default();
        match self {
            Command::Verify => d,
            Command::Scan(a) => RunConfig { t: a.t, n: a.n, kappa: a.kappa, rho: a.rho, ..d },
            Command::Equi(a) => RunConfig {
                t: a.t,
                n: a.n,
                haar_n: a.haar_n,
                height_center: a.height_center,
                height_width: a.height_width,
                angle_center: a.angle_center,
                angle_width: a.angle_width,
                ..d
            },
            Command::Recur(a) => RunConfig {
                t_list: a.t_list.clone(),
                height_cut: a.height_cut,
                n: a.n,
                haar_n: a.haar_n,
                ..d
            },
            Command::Match(a) => RunConfig { eps: a.eps, eps2: a.eps2, t: a.t, n: a.n, ..d },
            Command::Tremor(a) => RunConfig { ell: a.ell.clone(), t: a.t, s: a.s, ..d },
            Command::Avoid(a) => RunConfig {
                t: a.t,
                rho: a.rho,
                n_s: a.n_s,
                n_ell: a.n_ell,
                deltas: a.deltas.clone(),
                ..d
            },
        }
    }
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    config: &'a RunConfig,
    report: &'a R,
}

/// What a command produced: a JSON document, optional CSV, and whether its
/// checks held.
struct Output {
    json: String,
    csv: Option<String>,
    ok: bool,
    table: Option<String>,
}

fn document<R: Serialize>(cfg: &RunConfig, report: &R) -> Result<String> {
    Ok(to_stable_json(&Document { config: cfg, report })?)
}

fn csv_rows<T>(header: &str, rows: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&f(r));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct TremorReport {
    ell: QSqrt2,
    surface: octagon_core::surface::TwoCylinderSurface<QSqrt2>,
    period_vector: octagon_core::surface::PeriodVector<QSqrt2>,
    horocycle_period: Option<QSqrt2>,
    commutes_with_horocycle: bool,
    pushed_distance: Option<PushedDistance>,
}

#[derive(Serialize)]
struct PushedDistance {
    t: f64,
    s: f64,
    ell: f64,
    distance: f64,
}

fn run(cli: &Cli) -> Result<Output> {
    let name = cli.command.name();
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let globals = RunConfig {
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out.clone(),
        format: cli.format,
        ..Default::default()
    };
    let cfg = resolve(name, cli.command.flags().over(globals).over(file))?;
    if let Some(k) = cfg.threads {
        // Ignored if the global pool already exists, e.g. in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let seed = cfg.seed();
    let out = match name {
        "verify" => {
            let r = run_suite(seed);
            Output { json: document(&cfg, &r)?, csv: None, ok: r.all_passed(), table: Some(r.table()) }
        }
        "scan" => {
            let r = norm_scan(cfg.t.unwrap(), SIGMA_BAL, cfg.n.unwrap(), cfg.kappa.unwrap(), cfg.rho.unwrap(), seed)?;
            Output { json: document(&cfg, &r)?, csv: Some(r.histogram.csv()), ok: true, table: None }
        }
        "equi" => {
            let f = TestFunction::Bump {
                height_center: cfg.height_center.unwrap(),
                height_width: cfg.height_width.unwrap(),
                angle_center: cfg.angle_center.unwrap(),
                angle_width: cfg.angle_width.unwrap(),
            };
            let r = equidistribution_test(cfg.t.unwrap(), f, cfg.n.unwrap(), cfg.haar_n.unwrap(), seed)?;
            let csv = csv_rows("t,orbit_avg,reference,deviation,std_error", [&r], |r| {
                format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.orbit_avg, r.reference, r.deviation, r.std_error)
            });
            Output { json: document(&cfg, &r)?, csv: Some(csv), ok: true, table: None }
        }
        "recur" => {
            let r = recurrence_profile(
                cfg.t_list.as_ref().unwrap(),
                cfg.height_cut.unwrap(),
                cfg.n.unwrap(),
                cfg.haar_n.unwrap(),
                seed,
            )?;
            let csv = csv_rows("t,fraction", &r.rows, |row| format!("{:.16e},{:.16e}", row.t, row.fraction));
            Output { json: document(&cfg, &r)?, csv: Some(csv), ok: true, table: None }
        }
        "match" => {
            let r = matching_demo(cfg.eps.unwrap(), cfg.eps2.unwrap(), cfg.t.unwrap(), cfg.n.unwrap(), seed)?;
            if r.inconclusive {
                eprintln!("match: no matched visits found; result inconclusive");
            }
            Output { json: document(&cfg, &r)?, csv: None, ok: true, table: None }
        }
        "tremor" => {
            let ell: QSqrt2 = cfg.ell.as_ref().unwrap().parse()?;
            let w = omega1_surface()?;
            let sigma = TremorVector::sigma(&w);
            let y = tremor_path(&w, &sigma, &ell);
            let s = QSqrt2::from_parts(1, 3, 0, 1);
            let commutes = tremor_path(&horocycle_act(&w, &s), &sigma, &ell) == horocycle_act(&y, &s);
            let pushed = match cfg.t {
                Some(t) => {
                    let s = cfg.s.unwrap_or(0.0);
                    let tr = horocycle_orbit(s, t)?;
                    let scale = tr.log_scale().exp();
                    let mv = tr.normalized().apply(SIGMA_BAL);
                    let p = tremor_distance_polynomial(&tr.frame, [mv[0] * scale, mv[1] * scale], t)?;
                    let l = ell.embed(octagon_core::Embedding::Phi1);
                    Some(PushedDistance { t, s, ell: l, distance: eval_quadratic(p, l).max(0.0).sqrt() })
                }
                None => None,
            };
            let r = TremorReport {
                period_vector: y.period_vector(),
                horocycle_period: horocycle_period(&y).ok(),
                commutes_with_horocycle: commutes,
                surface: y,
                ell,
                pushed_distance: pushed,
            };
            let ok = r.commutes_with_horocycle && r.horocycle_period == Some(QSqrt2::int(1, 0));
            Output { json: document(&cfg, &r)?, csv: None, ok, table: None }
        }
        "avoid" => {
            let r = avoidance_scan(
                cfg.t.unwrap(),
                cfg.rho.unwrap(),
                cfg.n_s.unwrap(),
                cfg.n_ell.unwrap(),
                cfg.deltas.as_ref().unwrap(),
                seed,
            )?;
            let csv = csv_rows("delta,exact,grid", &r.occupancy, |o| {
                format!("{:.16e},{:.16e},{:.16e}", o.delta, o.exact, o.grid)
            });
            Output { json: document(&cfg, &r)?, csv: Some(csv), ok: true, table: None }
        }
        _ => unreachable!("resolve rejects unknown commands"),
    };
    let format = cfg.format.unwrap_or(Format::Json);
    let body = match format {
        Format::Json => out.json.clone(),
        Format::Csv => match &out.csv {
            Some(c) => c.clone(),
            None => return usage(format!("--format: csv is not available for {name}")),
        },
    };
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let dest = cfg
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(format!("{name}-{seed}.{ext}"))));
    match dest {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(&path, &body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
            if let Some(t) = &out.table {
                print!("{t}");
            }
        }
        None => match &out.table {
            Some(t) => print!("{t}"),
            None => print!("{body}"),
        },
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) if out.ok => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
