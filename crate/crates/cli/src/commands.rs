use manhattan_core::exact_engine::{
    exact_mean, exact_msd, exact_series, origin_probability, srw_coupling_check, support_bound, Limits,
};
use manhattan_core::formulas::{diffusive_limit, mean_coefficient, msd};
use manhattan_core::lattice::manhattan_census_count;
use manhattan_core::walk_engine::{simulate, SampleMoments, SimConfig};
use manhattan_core::{Dimension, Error as CoreError, ExactRational, OrientationRule};
use serde::Serialize;
use thiserror::Error;

use crate::args::{CommonArgs, Command, Format, RuleArg};
use crate::output::{fmt_f64, ser_f64, ser_f64_vec, ser_opt_f64, to_json, Csv, SCHEMA_VERSION};
use crate::svg::{Layer, Plot};

/// Standardized-error bound for Monte Carlo verdicts.
pub const MC_Z_BOUND: f64 = 5.0;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                CoreError::BudgetExceeded { .. } | CoreError::EnumerationCap { .. } => EXIT_BUDGET,
                CoreError::InvariantViolation { .. } => EXIT_VERIFY,
                CoreError::CoordinateOverflow { .. } | CoreError::OutsideTable { .. } => EXIT_VERIFY,
                _ => EXIT_USAGE,
            },
            CliError::Io(_) => EXIT_VERIFY,
        }
    }
}

/// Rendered artifact plus whether every exact check in it passed.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

struct Ctx<'a> {
    command: &'static str,
    args: &'a CommonArgs,
    d: Dimension,
    rule: OrientationRule,
    format: Format,
}

impl Ctx<'_> {
    fn limits(&self) -> Limits {
        Limits { max_sites: self.args.max_sites, ..Limits::default() }
    }

    fn chains(&self, default: u64) -> u64 {
        self.args.chains.unwrap_or(default)
    }

    /// Echoed in output headers. Worker count and output path are left out so
    /// files do not depend on them.
    fn config_line(&self, chains: u64) -> String {
        format!(
            "d={} n_max={} rule={} seed={} chains={} record_stride={} max_sites={} radius={}",
            self.d,
            self.args.n_max,
            self.rule.label(),
            self.args.seed,
            chains,
            self.args.record_stride,
            self.args.max_sites,
            self.args.radius
        )
    }

    fn require_manhattan(&self, why: &str) -> Result<(), CliError> {
        if self.args.rule != RuleArg::Manhattan {
            return Err(CliError::Usage(format!(
                "`{}` needs --rule manhattan: {why}",
                self.command
            )));
        }
        Ok(())
    }

    fn sim_config(&self, n_steps: u64, chains: u64, stride: u64) -> SimConfig {
        let mut cfg = SimConfig::new(self.rule.clone(), n_steps, chains, self.args.seed);
        cfg.record_stride = stride;
        if self.args.check_invariants {
            cfg.check_invariants = true;
        }
        cfg.workers = self.args.workers;
        cfg
    }
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let args = command.args();
    let d = Dimension::new(args.d)?;
    let name = command.name();
    let format = match (command, args.format) {
        (Command::Report(_), None | Some(Format::Svg)) => Format::Svg,
        (Command::Report(_), Some(f)) => {
            return Err(CliError::Usage(format!("report always writes svg, got --format {f:?}")))
        }
        (Command::Census(_) | Command::Coupling(_), Some(Format::Svg)) => {
            return Err(CliError::Usage(format!("svg output needs a per-n series; `{name}` does not produce one")))
        }
        (_, f) => f.unwrap_or(Format::Csv),
    };
    let ctx = Ctx { command: name, args, d, rule: args.rule.build(d), format };
    match command {
        Command::Formula(_) => formula(&ctx),
        Command::Exact(_) => exact(&ctx),
        Command::Simulate(_) => simulate_cmd(&ctx),
        Command::Census(_) => census(&ctx),
        Command::Coupling(_) => coupling(&ctx),
        Command::Compare(_) => compare(&ctx),
        Command::Report(_) => report(&ctx),
    }
}

const CLOSED_FORM_REASON: &str = "the closed forms describe the Manhattan lattice only";

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn formula_points(d: Dimension, n_max: u64) -> Vec<(f64, f64)> {
    (0..=n_max).map(|n| (n as f64, msd(d, n).to_f64())).collect()
}

fn asymptote_points(d: Dimension, n_max: u64) -> Vec<(f64, f64)> {
    let slope = diffusive_limit(d).to_f64();
    vec![(0.0, 0.0), (n_max as f64, slope * n_max as f64)]
}

fn msd_plot(d: Dimension, title: String, layers: Vec<Layer>) -> String {
    Plot {
        title,
        x_label: "n (steps)".into(),
        y_label: format!("E|X_n|^2, d = {d}"),
        layers,
    }
    .render()
}

// ---------------------------------------------------------------- formula

#[derive(Serialize)]
struct FormulaRow {
    n: u64,
    mean_coefficient: ExactRational,
    #[serde(serialize_with = "ser_f64")]
    mean_coefficient_f64: f64,
    msd: ExactRational,
    #[serde(serialize_with = "ser_f64")]
    msd_f64: f64,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: String,
    config: String,
    passed: bool,
    #[serde(flatten)]
    body: &'a T,
}

fn json_report<T: Serialize>(ctx: &Ctx, chains: u64, passed: bool, body: &T) -> String {
    to_json(&Report {
        schema: format!("manhattan-walk/{}/v{SCHEMA_VERSION}", ctx.command),
        config: ctx.config_line(chains),
        passed,
        body,
    })
}

#[derive(Serialize)]
struct Rows<T> {
    rows: Vec<T>,
}

fn formula(ctx: &Ctx) -> Result<Outcome, CliError> {
    ctx.require_manhattan(CLOSED_FORM_REASON)?;
    let d = ctx.d;
    let rows: Vec<FormulaRow> = (0..=ctx.args.n_max)
        .map(|n| {
            let c = mean_coefficient(d, n);
            let v = msd(d, n);
            FormulaRow { n, mean_coefficient_f64: c.to_f64(), mean_coefficient: c, msd_f64: v.to_f64(), msd: v }
        })
        .collect();
    let text = match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new(
                "formula",
                &ctx.config_line(0),
                &["n", "mean_coefficient", "mean_coefficient_f64", "msd", "msd_f64"],
            );
            for r in &rows {
                csv.row([
                    r.n.to_string(),
                    r.mean_coefficient.to_string(),
                    fmt_f64(r.mean_coefficient_f64),
                    r.msd.to_string(),
                    fmt_f64(r.msd_f64),
                ]);
            }
            csv.finish()
        }
        Format::Json => json_report(ctx, 0, true, &Rows { rows }),
        Format::Svg => msd_plot(
            d,
            format!("Mean square displacement, d = {d}"),
            vec![
                Layer::Line { label: "closed form".into(), color: "black", dashed: false, points: formula_points(d, ctx.args.n_max) },
                Layer::Line { label: "n d/(d-1)".into(), color: "gray", dashed: true, points: asymptote_points(d, ctx.args.n_max) },
            ],
        ),
    };
    Ok(Outcome { text, passed: true })
}

// ---------------------------------------------------------------- exact

#[derive(Serialize)]
struct ExactRow {
    n: u64,
    sites: usize,
    mean: Vec<ExactRational>,
    mean_coords_equal: bool,
    msd: ExactRational,
    #[serde(serialize_with = "ser_f64")]
    msd_f64: f64,
    return_probability: Option<ExactRational>,
    /// `None` for rules without a closed form.
    formula_match: Option<bool>,
    invariants_hold: bool,
}

fn exact_rows(ctx: &Ctx, n_max: u64) -> Result<Vec<ExactRow>, CliError> {
    let d = ctx.d;
    let manhattan = ctx.rule.is_manhattan();
    let mut rows = Vec::new();
    exact_series(d, n_max, &ctx.rule, &ctx.limits(), |dist| {
        let n = dist.steps();
        let mean = exact_mean(dist);
        let v = exact_msd(dist);
        let formula_match =
            manhattan.then(|| v == msd(d, n) && mean.iter().all(|m| *m == mean_coefficient(d, n)));
        rows.push(ExactRow {
            n,
            sites: dist.support_len(),
            mean_coords_equal: mean.windows(2).all(|w| w[0] == w[1]),
            mean,
            msd_f64: v.to_f64(),
            msd: v,
            return_probability: (n % 2 == 0).then(|| origin_probability(dist)),
            formula_match,
            invariants_hold: dist.check_invariants(),
        });
        Ok(())
    })?;
    Ok(rows)
}

fn exact(ctx: &Ctx) -> Result<Outcome, CliError> {
    let rows = exact_rows(ctx, ctx.args.n_max)?;
    let passed = rows.iter().all(|r| r.invariants_hold && r.formula_match != Some(false));
    let d = ctx.d;
    let text = match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new(
                "exact",
                &ctx.config_line(0),
                &[
                    "n",
                    "sites",
                    "mean",
                    "mean_coords_equal",
                    "msd",
                    "msd_f64",
                    "return_probability",
                    "return_probability_f64",
                    "formula_match",
                ],
            );
            for r in &rows {
                let mean = if r.mean_coords_equal {
                    r.mean[0].to_string()
                } else {
                    r.mean.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
                };
                let (rp, rpf) = match &r.return_probability {
                    Some(p) => (p.to_string(), fmt_f64(p.to_f64())),
                    None => (String::new(), String::new()),
                };
                let fm = match r.formula_match {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "n/a",
                };
                csv.row([
                    r.n.to_string(),
                    r.sites.to_string(),
                    mean,
                    r.mean_coords_equal.to_string(),
                    r.msd.to_string(),
                    fmt_f64(r.msd_f64),
                    rp,
                    rpf,
                    fm.to_string(),
                ]);
            }
            csv.comment(&format!("verdict: {}", verdict(passed)));
            csv.finish()
        }
        Format::Json => json_report(ctx, 0, passed, &Rows { rows }),
        Format::Svg => {
            let mut layers = vec![Layer::Points {
                label: "exact DP".into(),
                color: "blue",
                points: rows.iter().map(|r| (r.n as f64, r.msd_f64)).collect(),
            }];
            if ctx.rule.is_manhattan() {
                layers.insert(
                    0,
                    Layer::Line { label: "closed form".into(), color: "black", dashed: false, points: formula_points(d, ctx.args.n_max) },
                );
            }
            msd_plot(d, format!("Exact mean square displacement, d = {d}, rule {}", ctx.rule.label()), layers)
        }
    };
    Ok(Outcome { text, passed })
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimRow {
    n: u64,
    #[serde(serialize_with = "ser_f64_vec")]
    mean: Vec<f64>,
    #[serde(serialize_with = "ser_f64_vec")]
    mean_stderr: Vec<f64>,
    msd_estimate: ExactRational,
    #[serde(serialize_with = "ser_f64")]
    msd_estimate_f64: f64,
    #[serde(serialize_with = "ser_f64")]
    stderr: f64,
    n_chains: u64,
}

fn sim_rows(m: &SampleMoments) -> Vec<SimRow> {
    m.records
        .iter()
        .map(|rec| {
            let est = m.msd_estimate_exact(rec);
            SimRow {
                n: rec.n,
                mean: m.mean_estimate(rec),
                mean_stderr: m.mean_stderr(rec),
                msd_estimate_f64: est.to_f64(),
                msd_estimate: est,
                stderr: m.msd_stderr(rec),
                n_chains: m.n_chains,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SimBody {
    steps_checked: u64,
    rows: Vec<SimRow>,
}

fn simulate_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chains = ctx.chains(10_000);
    if ctx.args.n_max == 0 {
        return Err(CliError::Usage("simulate needs --n-max of at least 1".into()));
    }
    let cfg = ctx.sim_config(ctx.args.n_max, chains, ctx.args.record_stride);
    let m = simulate(&cfg)?;
    let rows = sim_rows(&m);
    let d = ctx.d;
    let text = match ctx.format {
        Format::Csv => {
            let mut cols = vec!["n".to_string()];
            cols.extend((1..=d.get()).map(|i| format!("mean_{i}")));
            cols.extend(["msd_estimate", "stderr", "n_chains"].map(String::from));
            let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut csv = Csv::new("simulate", &ctx.config_line(chains), &col_refs);
            csv.comment(&format!(
                "check_invariants={} steps_checked={}",
                cfg.check_invariants, m.steps_checked
            ));
            for r in &rows {
                let mut cells = vec![r.n.to_string()];
                cells.extend(r.mean.iter().map(|&v| fmt_f64(v)));
                cells.extend([fmt_f64(r.msd_estimate_f64), fmt_f64(r.stderr), r.n_chains.to_string()]);
                csv.row(cells);
            }
            csv.finish()
        }
        Format::Json => json_report(ctx, chains, true, &SimBody { steps_checked: m.steps_checked, rows }),
        Format::Svg => {
            let mut layers = Vec::new();
            if ctx.rule.is_manhattan() {
                layers.push(Layer::Line { label: "closed form".into(), color: "black", dashed: false, points: formula_points(d, ctx.args.n_max) });
            }
            layers.push(Layer::ErrorBars {
                label: format!("Monte Carlo ({chains} chains, ±1 s.e.)"),
                color: "red",
                points: rows.iter().map(|r| (r.n as f64, r.msd_estimate_f64, r.stderr)).collect(),
            });
            msd_plot(d, format!("Monte Carlo mean square displacement, d = {d}"), layers)
        }
    };
    Ok(Outcome { text, passed: true })
}

// ---------------------------------------------------------------- census

#[derive(Serialize)]
struct CensusBody {
    radius: u32,
    count: usize,
    expected: Option<u128>,
    verdict: &'static str,
    environments: Vec<Vec<i8>>,
}

fn census(ctx: &Ctx) -> Result<Outcome, CliError> {
    let envs = ctx.rule.env_census(ctx.args.radius)?;
    let expected = ctx.rule.is_manhattan().then(|| manhattan_census_count(ctx.d));
    let passed = expected.is_none_or(|e| e == envs.len() as u128);
    let verdict_str = if expected.is_some() { verdict(passed) } else { "n/a" };
    let body = CensusBody {
        radius: ctx.args.radius,
        count: envs.len(),
        expected,
        verdict: verdict_str,
        environments: envs.iter().map(|e| e.signs().to_vec()).collect(),
    };
    let text = match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new("census", &ctx.config_line(0), &["index", "environment"]);
            csv.comment(&format!(
                "count={} expected={} verdict={}",
                body.count,
                expected.map_or("n/a".to_string(), |e| e.to_string()),
                verdict_str
            ));
            for (i, e) in envs.iter().enumerate() {
                let signs: Vec<&str> = e.signs().iter().map(|&s| if s > 0 { "+1" } else { "-1" }).collect();
                csv.row([i.to_string(), signs.join(" ")]);
            }
            csv.finish()
        }
        Format::Json => json_report(ctx, 0, passed, &body),
        Format::Svg => unreachable!("rejected in run"),
    };
    Ok(Outcome { text, passed })
}

// ---------------------------------------------------------------- coupling

#[derive(Serialize)]
struct CouplingRow {
    n: u64,
    manhattan_steps: u64,
    paths: String,
    laws_equal: bool,
}

fn coupling(ctx: &Ctx) -> Result<Outcome, CliError> {
    if ctx.d.get() != 2 {
        return Err(CliError::Core(CoreError::CouplingDimension(ctx.d.get())));
    }
    ctx.require_manhattan("the coupling is a property of the Manhattan lattice")?;
    let limits = ctx.limits();
    let mut rows = Vec::new();
    for n in 0..=ctx.args.n_max {
        let ok = srw_coupling_check(ctx.d, n, &limits)?;
        rows.push(CouplingRow {
            n,
            manhattan_steps: 2 * n,
            paths: num_bigint::BigUint::from(4u32).pow(n as u32).to_string(),
            laws_equal: ok,
        });
    }
    let passed = rows.iter().all(|r| r.laws_equal);
    let text = match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new("coupling", &ctx.config_line(0), &["n", "manhattan_steps", "paths", "laws_equal"]);
            for r in &rows {
                csv.row([r.n.to_string(), r.manhattan_steps.to_string(), r.paths.clone(), verdict(r.laws_equal).to_string()]);
            }
            csv.comment(&format!("verdict: {}", verdict(passed)));
            csv.finish()
        }
        Format::Json => json_report(ctx, 0, passed, &Rows { rows }),
        Format::Svg => unreachable!("rejected in run"),
    };
    Ok(Outcome { text, passed })
}

// ---------------------------------------------------------------- compare / report

#[derive(Serialize)]
struct CompareRow {
    n: u64,
    formula_msd: ExactRational,
    formula_mean: ExactRational,
    oracle_msd: Option<ExactRational>,
    oracle_mean: Option<Vec<ExactRational>>,
    exact_verdict: &'static str,
    #[serde(serialize_with = "ser_opt_f64")]
    mc_msd: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    mc_stderr: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    mc_msd_z: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    mc_mean_z_max: Option<f64>,
    mc_verdict: &'static str,
}

struct CompareData {
    rows: Vec<CompareRow>,
    chains: u64,
}

impl CompareData {
    fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.exact_verdict != "FAIL")
    }
}

/// `oracle_n_max` bounds the DP; rows past it carry no oracle values.
fn compare_data(ctx: &Ctx, oracle_n_max: Option<u64>, default_chains: u64) -> Result<CompareData, CliError> {
    ctx.require_manhattan(CLOSED_FORM_REASON)?;
    let d = ctx.d;
    let n_max = ctx.args.n_max;
    let chains = ctx.chains(default_chains);

    let oracle = match oracle_n_max {
        Some(m) => exact_rows(ctx, m)?,
        None => Vec::new(),
    };
    let moments = if chains > 0 && n_max > 0 {
        Some(simulate(&ctx.sim_config(n_max, chains, 1))?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for n in 0..=n_max {
        let f_msd = msd(d, n);
        let f_mean = mean_coefficient(d, n);
        let o = oracle.get(n as usize);
        let exact_verdict = match o {
            Some(o) => verdict(o.msd == f_msd && o.mean.iter().all(|m| *m == f_mean)),
            None => "n/a",
        };
        let mc = moments.as_ref().and_then(|m| m.record(n).map(|rec| (m, rec)));
        let (mc_msd, mc_stderr, mc_msd_z, mc_mean_z_max, mc_verdict) = match mc {
            Some((m, rec)) => {
                let z = m.msd_z(rec, &f_msd);
                let zm = m.mean_z(rec, &f_mean).into_iter().fold(0.0f64, |a, b| a.max(b.abs()));
                (
                    Some(m.msd_estimate(rec)),
                    Some(m.msd_stderr(rec)),
                    Some(z),
                    Some(zm),
                    verdict(z.abs() <= MC_Z_BOUND && zm <= MC_Z_BOUND),
                )
            }
            None => (None, None, None, None, "n/a"),
        };
        rows.push(CompareRow {
            n,
            formula_msd: f_msd,
            formula_mean: f_mean,
            oracle_msd: o.map(|o| o.msd.clone()),
            oracle_mean: o.map(|o| o.mean.clone()),
            exact_verdict,
            mc_msd,
            mc_stderr,
            mc_msd_z,
            mc_mean_z_max,
            mc_verdict,
        });
    }
    Ok(CompareData { rows, chains })
}

fn compare_plot(ctx: &Ctx, data: &CompareData) -> String {
    let d = ctx.d;
    let n_max = ctx.args.n_max;
    let mut layers = vec![
        Layer::Line { label: "closed form".into(), color: "black", dashed: false, points: formula_points(d, n_max) },
        Layer::Line { label: "asymptote n d/(d-1)".into(), color: "gray", dashed: true, points: asymptote_points(d, n_max) },
    ];
    let oracle: Vec<(f64, f64)> = data
        .rows
        .iter()
        .filter_map(|r| r.oracle_msd.as_ref().map(|v| (r.n as f64, v.to_f64())))
        .collect();
    if !oracle.is_empty() {
        layers.push(Layer::Points { label: "exact DP".into(), color: "blue", points: oracle });
    }
    let mc: Vec<(f64, f64, f64)> = data
        .rows
        .iter()
        .filter_map(|r| Some((r.n as f64, r.mc_msd?, r.mc_stderr?)))
        .collect();
    if !mc.is_empty() {
        layers.push(Layer::ErrorBars {
            label: format!("Monte Carlo ({} chains, ±1 s.e.)", data.chains),
            color: "red",
            points: mc,
        });
    }
    msd_plot(d, format!("Mean square displacement on the Manhattan lattice, d = {d}"), layers)
}

fn compare(ctx: &Ctx) -> Result<Outcome, CliError> {
    let data = compare_data(ctx, Some(ctx.args.n_max), 0)?;
    let passed = data.passed();
    let text = match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new(
                "compare",
                &ctx.config_line(data.chains),
                &[
                    "n",
                    "formula_msd",
                    "oracle_msd",
                    "formula_mean",
                    "oracle_mean",
                    "exact_verdict",
                    "mc_msd",
                    "mc_stderr",
                    "mc_msd_z",
                    "mc_mean_z_max",
                    "mc_verdict",
                ],
            );
            let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
            for r in &data.rows {
                let oracle_mean = r.oracle_mean.as_ref().map_or(String::new(), |m| {
                    if m.windows(2).all(|w| w[0] == w[1]) {
                        m[0].to_string()
                    } else {
                        m.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
                    }
                });
                csv.row([
                    r.n.to_string(),
                    r.formula_msd.to_string(),
                    r.oracle_msd.as_ref().map(ToString::to_string).unwrap_or_default(),
                    r.formula_mean.to_string(),
                    oracle_mean,
                    r.exact_verdict.to_string(),
                    opt(r.mc_msd),
                    opt(r.mc_stderr),
                    opt(r.mc_msd_z),
                    opt(r.mc_mean_z_max),
                    r.mc_verdict.to_string(),
                ]);
            }
            csv.comment(&format!("verdict: {}", verdict(passed)));
            csv.finish()
        }
        Format::Json => json_report(ctx, data.chains, passed, &Rows { rows: data.rows }),
        Format::Svg => compare_plot(ctx, &data),
    };
    Ok(Outcome { text, passed })
}

fn report(ctx: &Ctx) -> Result<Outcome, CliError> {
    // oracle points only as far as the site budget allows
    let budget = ctx.args.max_sites as u128;
    let oracle_n_max = (0..=ctx.args.n_max).take_while(|&n| support_bound(ctx.d, n) <= budget).last();
    let data = compare_data(ctx, oracle_n_max, 0)?;
    Ok(Outcome { text: compare_plot(ctx, &data), passed: data.passed() })
}
