//! Subcommand implementations. Each command builds all of its outputs in
//! memory and writes them only once everything succeeded.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use drss_core::config::{AnonymizerPolicy, ConfigTemplate};
use drss_core::leakage::{leakage_eq1, leakage_exact, leakage_monte_carlo, CollusionScenario};
use drss_core::simkernel::{execute_batch, sweep_parameter, BatchSummary, SweepParam, SweepPoint, SweepSpec};
use drss_core::{CostModel, ProtocolConfig};

use crate::config_file::{ConfigFile, Settings};
use crate::error::CliError;
use crate::svg::{LineChart, Series};
use crate::table::{fmt_f64, Outputs, Table};

pub const RUNS_CSV: &str = "runs.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const LEAKAGE_CSV: &str = "leakage.csv";
pub const LEAKAGE_SVG: &str = "leakage.svg";
pub const REPORT_MD: &str = "report.md";

/// Options shared by all subcommands. Flags override the parameter file.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub trials: Option<u64>,
    pub batch: Option<usize>,
}

impl Common {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Common {
            out: out.into(),
            ..Common::default()
        }
    }

    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if let Some(seed) = self.seed {
            file.seed = seed;
        }
        if let Some(batch) = self.batch {
            file.batch_size = batch;
        }
        if let Some(trials) = self.trials {
            file.trials = trials;
        }
        file.resolve()
    }
}

/// Result of a command: human-readable summary and the files written.
#[derive(Debug)]
pub struct Outcome {
    pub message: String,
    pub written: Vec<PathBuf>,
}

fn config_cells(c: &ProtocolConfig) -> Vec<String> {
    vec![
        c.n().to_string(),
        c.m().to_string(),
        c.t_pk().to_string(),
        c.m_x().to_string(),
    ]
}

fn describe(summary: &BatchSummary) -> String {
    let c = &summary.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "config: n={} m={} t_pk={} m_x={} seed={}",
        c.n(),
        c.m(),
        c.t_pk(),
        c.m_x(),
        c.seed()
    );
    let _ = writeln!(s, "runs: {} (all sums exact: {})", summary.runs, summary.all_correct);
    let _ = writeln!(
        s,
        "makespan: mean {:.3} min {:.3} max {:.3} cost units",
        summary.mean_makespan, summary.makespan.min, summary.makespan.max
    );
    let _ = writeln!(s, "max anonymizer load: mean {:.3}", summary.max_load.mean);
    let _ = writeln!(s, "messages per run: {}", summary.messages_total.mean);
    let _ = writeln!(s, "ttp operations per run: {}", summary.ttp_ops.mean);
    let _ = writeln!(s, "mean wall time: {:.3} ms", summary.mean_wall_time * 1e3);
    s
}

/// One batch; writes `runs.csv` with a row per run.
pub fn cmd_run(common: &Common) -> Result<Outcome, CliError> {
    let settings = common.settings()?;
    let config = &settings.config;
    let batch = execute_batch(config, settings.file.batch_size, &CostModel::default())?;

    let mut table = Table::new([
        "protocol",
        "n",
        "m",
        "t_pk",
        "m_x",
        "root_seed",
        "batch_size",
        "run",
        "run_seed",
        "messages_total",
        "max_load",
        "party_phase",
        "anonymizer_phase",
        "ttp_cost",
        "makespan",
        "ttp_ops",
        "wall_time_s_nondet",
    ]);
    for (i, r) in batch.records.iter().enumerate() {
        let mut row = vec![settings.file.protocol.to_string()];
        row.extend(config_cells(config));
        row.extend([
            config.seed().to_string(),
            settings.file.batch_size.to_string(),
            i.to_string(),
            r.seed.to_string(),
            r.messages_total.to_string(),
            r.max_load.to_string(),
            fmt_f64(r.party_phase),
            fmt_f64(r.anonymizer_phase),
            fmt_f64(r.ttp_cost),
            fmt_f64(r.makespan),
            r.ttp_ops.to_string(),
            fmt_f64(r.wall_time),
        ]);
        table.push(row);
    }
    let mut out = Outputs::new(&common.out);
    out.add_table(RUNS_CSV, &table)?;
    let message = format!("protocol: {}\n{}", settings.file.protocol, describe(&batch.summary));
    Ok(Outcome {
        message,
        written: out.commit()?,
    })
}

/// Which sweeps to run.
#[derive(Clone, Debug, Default)]
pub struct SweepArgs {
    pub case1: bool,
    pub case2: bool,
    pub case3: bool,
    pub param: Option<String>,
    pub values: Vec<usize>,
}

/// Parties 2..=8 at t_pk = 3, m = 5 requested, m_x = 12.
pub fn case1(seed: u64, batch_size: usize) -> SweepSpec {
    SweepSpec {
        base: ConfigTemplate::new(2, 3, seed).with_m(5).with_m_x(12),
        param: SweepParam::Parties,
        values: (2..=8).collect(),
        policy: AnonymizerPolicy::RaiseToFeasible,
        batch_size,
    }
}

/// t_pk in {3, 4, 5} for a fixed n, m = 5 requested and raised as needed.
pub fn case2(n: usize, seed: u64, batch_size: usize) -> SweepSpec {
    SweepSpec {
        base: ConfigTemplate::new(n, 3, seed).with_m(5),
        param: SweepParam::PacketsPerParty,
        values: vec![3, 4, 5],
        policy: AnonymizerPolicy::RaiseToFeasible,
        batch_size,
    }
}

/// m in {5, 6, 7, 8} at n = 3, t_pk = 3.
pub fn case3(seed: u64, batch_size: usize) -> SweepSpec {
    SweepSpec {
        base: ConfigTemplate::new(3, 3, seed).with_m(5),
        param: SweepParam::Anonymizers,
        values: vec![5, 6, 7, 8],
        policy: AnonymizerPolicy::RaiseToFeasible,
        batch_size,
    }
}

pub const CASE2_PARTIES: [usize; 4] = [2, 3, 4, 5];

fn sweep_specs(args: &SweepArgs, settings: &Settings) -> Result<Vec<(String, SweepSpec)>, CliError> {
    let seed = settings.config.seed();
    let batch = settings.file.batch_size;
    let mut specs = Vec::new();
    if args.case1 {
        specs.push(("case1".to_string(), case1(seed, batch)));
    }
    if args.case2 {
        for n in CASE2_PARTIES {
            specs.push((format!("case2-n{n}"), case2(n, seed, batch)));
        }
    }
    if args.case3 {
        specs.push(("case3".to_string(), case3(seed, batch)));
    }
    match (&args.param, args.values.is_empty()) {
        (Some(p), false) => {
            let param = SweepParam::parse(p)
                .ok_or_else(|| CliError::Config(format!("unknown sweep parameter {p:?} (expected n, t_pk or m)")))?;
            let file = &settings.file;
            let base = ConfigTemplate {
                n: file.n,
                t_pk: settings.config.t_pk(),
                m: file.m,
                m_x: file.m_x,
                seed,
                relaxed: false,
            };
            specs.push((
                "custom".to_string(),
                SweepSpec {
                    base,
                    param,
                    values: args.values.clone(),
                    policy: AnonymizerPolicy::Strict,
                    batch_size: batch,
                },
            ));
        }
        (None, true) => {}
        _ => return Err(CliError::Config("--param and --values must be given together".into())),
    }
    if specs.is_empty() {
        return Err(CliError::Config(
            "choose --case1, --case2, --case3 or --param with --values".into(),
        ));
    }
    Ok(specs)
}

fn sweep_row(id: &str, param: SweepParam, point: &SweepPoint) -> Vec<String> {
    let s = &point.summary;
    let mut row = vec![id.to_string(), param.name().to_string(), point.value.to_string()];
    row.extend(config_cells(&s.config));
    row.extend([
        point.requested_m.map(|m| m.to_string()).unwrap_or_default(),
        point.m_adjusted().to_string(),
        s.config.seed().to_string(),
        s.runs.to_string(),
        fmt_f64(s.mean_makespan),
        fmt_f64(s.makespan.min),
        fmt_f64(s.makespan.max),
        fmt_f64(s.max_load.mean),
        fmt_f64(s.messages_total.mean),
        fmt_f64(s.ttp_ops.mean),
        s.all_correct.to_string(),
        fmt_f64(s.mean_wall_time),
    ]);
    row
}

pub const SWEEP_COLUMNS: [&str; 19] = [
    "sweep",
    "param",
    "value",
    "n",
    "m",
    "t_pk",
    "m_x",
    "requested_m",
    "m_adjusted",
    "seed",
    "batch_size",
    "mean_makespan",
    "min_makespan",
    "max_makespan",
    "mean_max_load",
    "messages_total",
    "ttp_ops",
    "all_correct",
    "mean_wall_time_s_nondet",
];

fn group_of(sweep_id: &str) -> &str {
    sweep_id.split('-').next().unwrap_or(sweep_id)
}

/// Line charts of mean makespan, one per sweep group, from `sweep.csv` rows.
pub fn sweep_charts(table: &Table) -> Vec<(String, String)> {
    let mut groups: BTreeMap<String, BTreeMap<String, Vec<(f64, f64)>>> = BTreeMap::new();
    let mut params: BTreeMap<String, String> = BTreeMap::new();
    for row in &table.rows {
        let (Some(id), Some(x), Some(y)) = (
            table.get(row, "sweep"),
            table.get_f64(row, "value"),
            table.get_f64(row, "mean_makespan"),
        ) else {
            continue;
        };
        let group = group_of(id).to_string();
        params
            .entry(group.clone())
            .or_insert_with(|| table.get(row, "param").unwrap_or("").to_string());
        groups
            .entry(group)
            .or_default()
            .entry(id.to_string())
            .or_default()
            .push((x, y));
    }
    groups
        .into_iter()
        .map(|(group, series)| {
            let param = params[&group].clone();
            let x_label = match param.as_str() {
                "n" => "number of parties (n)".to_string(),
                "t_pk" => "packets per party (t_pk)".to_string(),
                "m" => "number of anonymizers (m)".to_string(),
                other => other.to_string(),
            };
            let chart = LineChart {
                title: format!("Mean makespan, {group}: varying {param}"),
                x_label,
                y_label: "mean makespan (cost units)".into(),
                series: series.into_iter().map(|(id, pts)| Series::new(id, pts)).collect(),
                y_from_zero: false,
            };
            (format!("sweep_{group}.svg"), chart.render())
        })
        .collect()
}

/// Runs the selected sweeps; writes `sweep.csv` and one chart per sweep.
pub fn cmd_sweep(common: &Common, args: &SweepArgs) -> Result<Outcome, CliError> {
    let settings = common.settings()?;
    let specs = sweep_specs(args, &settings)?;
    let model = CostModel::default();
    let mut table = Table::new(SWEEP_COLUMNS);
    let mut message = String::new();
    for (id, spec) in &specs {
        let points = sweep_parameter(spec, &model)?;
        for p in &points {
            if let Some(req) = p.requested_m {
                let _ = writeln!(
                    message,
                    "{id}: {}={}: requested m={req} is infeasible, using m={}",
                    spec.param.name(),
                    p.value,
                    p.summary.config.m()
                );
            }
            table.push(sweep_row(id, spec.param, p));
        }
        let trend: Vec<String> = points
            .iter()
            .map(|p| format!("{:.3}", p.summary.mean_makespan))
            .collect();
        let _ = writeln!(
            message,
            "{id}: {} -> mean makespan [{}]",
            spec.param.name(),
            trend.join(", ")
        );
    }
    let mut out = Outputs::new(&common.out);
    out.add_table(SWEEP_CSV, &table)?;
    let csv_text = out.contents(SWEEP_CSV).expect("just added").to_string();
    let parsed = Table::from_csv(&csv_text).map_err(|source| CliError::Csv {
        path: common.out.join(SWEEP_CSV),
        source,
    })?;
    for (name, svg) in sweep_charts(&parsed) {
        out.add(name, svg);
    }
    Ok(Outcome {
        message,
        written: out.commit()?,
    })
}

#[derive(Clone, Debug, Default)]
pub struct LeakageArgs {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub m_x: Option<usize>,
    pub l_values: Vec<usize>,
    pub k_values: Vec<usize>,
}

pub const LEAKAGE_COLUMNS: [&str; 12] = [
    "n",
    "m",
    "m_x",
    "k",
    "l",
    "trials",
    "seed",
    "p_eq1",
    "p_exact",
    "p_empirical",
    "std_error",
    "compromised",
];

/// Compromise probability against the randomization factor, from
/// `leakage.csv` rows. Exact values are solid, the independence formula dashed.
pub fn leakage_chart(table: &Table) -> String {
    let mut by_l: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
    let mut m_seen = 0;
    for row in &table.rows {
        let (Some(l), Some(k), Some(eq1), Some(exact)) = (
            table.get(row, "l").and_then(|s| s.parse::<usize>().ok()),
            table.get_f64(row, "k"),
            table.get_f64(row, "p_eq1"),
            table.get_f64(row, "p_exact"),
        ) else {
            continue;
        };
        m_seen = table.get(row, "m").and_then(|s| s.parse().ok()).unwrap_or(m_seen);
        by_l.entry(l).or_default().push((k, eq1, exact));
    }
    let interior: Vec<usize> = by_l.keys().copied().filter(|&l| l > 0 && l < m_seen).collect();
    let shown: Vec<usize> = if interior.len() <= 4 {
        interior
    } else {
        let last = interior.len() - 1;
        let mut picks: Vec<usize> = (0..4).map(|i| interior[last - i * last / 3]).collect();
        picks.sort_unstable();
        picks.dedup();
        picks
    };
    let mut series = Vec::new();
    for l in shown {
        let pts = &by_l[&l];
        series.push(Series::new(
            format!("exact l={l}"),
            pts.iter().map(|p| (p.0, p.2)).collect(),
        ));
        series.push(Series::new(format!("(l/m)^2k l={l}"), pts.iter().map(|p| (p.0, p.1)).collect()).dashed());
    }
    LineChart {
        title: format!("Compromise probability vs randomization factor (m={m_seen})"),
        x_label: "randomization factor k (packets per party)".into(),
        y_label: "probability".into(),
        series,
        y_from_zero: true,
    }
    .render()
}

/// Leakage over an `(l, k)` grid; writes `leakage.csv` and `leakage.svg`.
pub fn cmd_leakage(common: &Common, args: &LeakageArgs) -> Result<Outcome, CliError> {
    let settings = common.settings()?;
    let m = args.m.unwrap_or(settings.config.m());
    let n = args.n.unwrap_or(1);
    let seed = settings.config.seed();
    let trials = settings.file.trials;
    let l_values: Vec<usize> = if !args.l_values.is_empty() {
        args.l_values.clone()
    } else if let Some(l) = settings.file.colluders {
        vec![l]
    } else {
        (0..=m).collect()
    };
    let k_values: Vec<usize> = if args.k_values.is_empty() {
        (1..=6).collect()
    } else {
        args.k_values.clone()
    };

    let mut table = Table::new(LEAKAGE_COLUMNS);
    for &k in &k_values {
        // A coalition can only be simulated when one party's packets fit on
        // distinct anonymizers.
        let config = if m >= 2 * k {
            let m_x = args.m_x.unwrap_or_else(|| (2 * k).max((2 * n * k).div_ceil(m)));
            Some(ProtocolConfig::relaxed(n, m, k, m_x, seed)?)
        } else {
            None
        };
        for &l in &l_values {
            let p_eq1 = leakage_eq1(l, m, k)?;
            let p_exact = leakage_exact(l, m, k)?;
            let mut row = vec![n.to_string(), m.to_string()];
            match &config {
                Some(config) => {
                    let est = leakage_monte_carlo(&CollusionScenario::first(config.clone(), l)?, trials, seed)?;
                    row.extend([
                        config.m_x().to_string(),
                        k.to_string(),
                        l.to_string(),
                        trials.to_string(),
                        seed.to_string(),
                        fmt_f64(p_eq1),
                        fmt_f64(p_exact),
                        fmt_f64(est.p_empirical),
                        fmt_f64(est.std_error),
                        est.compromised.to_string(),
                    ]);
                }
                None => row.extend([
                    String::new(),
                    k.to_string(),
                    l.to_string(),
                    "0".into(),
                    seed.to_string(),
                    fmt_f64(p_eq1),
                    fmt_f64(p_exact),
                    String::new(),
                    String::new(),
                    String::new(),
                ]),
            }
            table.push(row);
        }
    }
    let mut out = Outputs::new(&common.out);
    out.add_table(LEAKAGE_CSV, &table)?;
    let csv_text = out.contents(LEAKAGE_CSV).expect("just added").to_string();
    let parsed = Table::from_csv(&csv_text).map_err(|source| CliError::Csv {
        path: common.out.join(LEAKAGE_CSV),
        source,
    })?;
    out.add(LEAKAGE_SVG, leakage_chart(&parsed));
    let message = format!("leakage grid: m={m} n={n} k in {k_values:?} l in {l_values:?}, {trials} trials per point\n");
    Ok(Outcome {
        message,
        written: out.commit()?,
    })
}

fn markdown(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!(
        "| {} |\n|{}|\n",
        headers.join(" | "),
        vec!["---"; headers.len()].join("|")
    );
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn pick(table: &Table, row: &[String], cols: &[&str]) -> Vec<String> {
    cols.iter()
        .map(|c| table.get(row, c).unwrap_or("").to_string())
        .collect()
}

fn read_optional(dir: &Path, name: &str) -> Result<Option<Table>, CliError> {
    let path = dir.join(name);
    if path.exists() {
        Table::read(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// Rebuilds every chart and a `report.md` from the CSVs in the output directory.
pub fn cmd_report(common: &Common) -> Result<Outcome, CliError> {
    let dir = &common.out;
    let runs = read_optional(dir, RUNS_CSV)?;
    let sweep = read_optional(dir, SWEEP_CSV)?;
    let leakage = read_optional(dir, LEAKAGE_CSV)?;
    if runs.is_none() && sweep.is_none() && leakage.is_none() {
        return Err(CliError::Config(format!(
            "{}: no {RUNS_CSV}, {SWEEP_CSV} or {LEAKAGE_CSV} to report on",
            dir.display()
        )));
    }
    let mut out = Outputs::new(dir);
    let mut doc = String::from("# DRSS simulation report\n\n");

    if let Some(t) = &runs {
        let makespans: Vec<f64> = t.rows.iter().filter_map(|r| t.get_f64(r, "makespan")).collect();
        let mean = makespans.iter().sum::<f64>() / makespans.len().max(1) as f64;
        doc.push_str("## Batch run\n\n");
        if let Some(first) = t.rows.first() {
            let cols = ["protocol", "n", "m", "t_pk", "m_x", "root_seed"];
            doc.push_str(&markdown(&cols, &[pick(t, first, &cols)]));
            doc.push('\n');
        }
        let _ = writeln!(doc, "Runs: {}. Mean makespan: {:.3} cost units.\n", t.rows.len(), mean);
    }

    if let Some(t) = &sweep {
        doc.push_str("## Parameter sweeps\n\n");
        let cols = [
            "sweep",
            "n",
            "t_pk",
            "m",
            "m_x",
            "requested_m",
            "batch_size",
            "mean_makespan",
            "mean_max_load",
        ];
        let rows: Vec<Vec<String>> = t.rows.iter().map(|r| pick(t, r, &cols)).collect();
        doc.push_str(&markdown(&cols, &rows));
        doc.push('\n');

        // Packets-and-parties sweeps as a matrix: parties down, packets across.
        let case2: Vec<&Vec<String>> = t
            .rows
            .iter()
            .filter(|r| t.get(r, "sweep").is_some_and(|s| s.starts_with("case2")))
            .collect();
        if !case2.is_empty() {
            let mut grid: BTreeMap<usize, BTreeMap<usize, String>> = BTreeMap::new();
            for r in case2 {
                let n = t.get(r, "n").and_then(|s| s.parse().ok()).unwrap_or(0);
                let k = t.get(r, "t_pk").and_then(|s| s.parse().ok()).unwrap_or(0);
                grid.entry(n)
                    .or_default()
                    .insert(k, t.get(r, "mean_makespan").unwrap_or("").to_string());
            }
            let ks: Vec<usize> = grid
                .values()
                .flat_map(|m| m.keys().copied())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut headers = vec!["parties \\ packets".to_string()];
            headers.extend(ks.iter().map(|k| k.to_string()));
            let rows: Vec<Vec<String>> = grid
                .iter()
                .map(|(n, m)| {
                    let mut row = vec![n.to_string()];
                    row.extend(ks.iter().map(|k| m.get(k).cloned().unwrap_or_default()));
                    row
                })
                .collect();
            let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
            doc.push_str("Mean makespan, parties and packets varied together:\n\n");
            doc.push_str(&markdown(&header_refs, &rows));
            doc.push('\n');
        }
        let adjusted = t.rows.iter().filter(|r| t.get(r, "m_adjusted") == Some("true")).count();
        if adjusted > 0 {
            let _ = writeln!(
                doc,
                "{adjusted} point(s) requested an infeasible m and were run with the smallest feasible m (see `requested_m`).\n"
            );
        }
        for (name, svg) in sweep_charts(t) {
            let _ = writeln!(doc, "![{name}]({name})\n");
            out.add(name, svg);
        }
    }

    if let Some(t) = &leakage {
        doc.push_str("## Collusion leakage\n\n");
        let cols = [
            "m",
            "k",
            "l",
            "n",
            "trials",
            "p_eq1",
            "p_exact",
            "p_empirical",
            "std_error",
        ];
        let rows: Vec<Vec<String>> = t.rows.iter().map(|r| pick(t, r, &cols)).collect();
        doc.push_str(&markdown(&cols, &rows));
        let _ = writeln!(doc, "\n![{LEAKAGE_SVG}]({LEAKAGE_SVG})\n");
        out.add(LEAKAGE_SVG, leakage_chart(t));
    }

    out.add(REPORT_MD, doc);
    let written = out.commit()?;
    Ok(Outcome {
        message: format!("report written to {}\n", dir.join(REPORT_MD).display()),
        written,
    })
}
