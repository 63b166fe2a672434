//! Argument parsing and command dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use jsda_core::cases::{counterexample1, counterexample2, CaseReport};
use jsda_core::labelshift::{bbsl_weights, confusion_matrix, WeightVector};
use jsda_core::suites::{run_suite, Suite};
use jsda_core::synth::{discretize, make_scenario, sample_seeded, Domain, ScenarioKind, ScenarioParams, ShiftScenario};
use jsda_core::trainer::{ablation_subsets, run_ablation, run_training, TraceRow, TrainConfig};
use jsda_core::{divergence, DivergenceKind, JointPmf, LogBase, Pmf};

use crate::report::{emit, sig6, write_report, Cell, Format, Table};

/// Exact Jensen-Shannon domain-adaptation toolkit.
#[derive(Debug, Parser)]
#[command(name = "jsda", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of randomized trials.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,
    /// Logarithm base for reported divergences: e or 2.
    #[arg(long, global = true, default_value = "2")]
    pub base: LogBase,
    /// Verdict tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create, sample and discretize shift scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Run randomized bound or divergence suites, one CSV row per instance.
    VerifyBounds {
        /// `all`, `bounds`, `divergences` or a single suite name.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Recompute both counterexamples against their pinned numbers.
    Counterexamples {
        /// Lattice spacing of the interleaved uniforms.
        #[arg(long, default_value_t = 1.0 / 12.0)]
        xi: f64,
    },
    /// Estimate label-shift weights with the scenario's linear rule.
    LabelShift {
        #[arg(long)]
        scenario: PathBuf,
        /// Samples per domain.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Train once and write the per-epoch trace.
    Train {
        #[arg(long)]
        scenario: PathBuf,
        /// Training configuration (JSON); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train every principle subset over several seeds.
    Ablate {
        /// One or more scenario files; each becomes a column.
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of seeds, counted up from --seed.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
    },
    /// Divergence between two distributions stored as JSON.
    Divergence {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// KL, JS, TV or Renyi2.
        #[arg(long, default_value = "js")]
        kind: DivergenceKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCmd {
    /// Build a scenario file.
    Make {
        /// cofeature, label-shift, conditional-shift or open-set.
        #[arg(long)]
        kind: ScenarioKind,
        /// Generator parameters (JSON); defaults otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Draw labelled samples from one domain.
    Sample {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "source")]
        domain: Domain,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Independent stream index for the same seed.
        #[arg(long, default_value_t = 0)]
        split: u64,
    },
    /// Integrate one domain onto a grid and write the joint pmf.
    Discretize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "source")]
        domain: Domain,
        #[arg(long, default_value_t = 32)]
        grid: usize,
    },
}

/// Whether every verdict of the command held.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn write_json<T: serde::Serialize>(v: &T, path: Option<&Path>) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    emit(&bytes, path)
}

fn train_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = match path {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<Verdict> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Scenario(cmd) => scenario(cmd, g),
        Command::VerifyBounds { suite } => verify_bounds(&suite, g),
        Command::Counterexamples { xi } => counterexamples(xi, g),
        Command::LabelShift { scenario, n } => label_shift(&scenario, n, g),
        Command::Train { scenario, config } => {
            let sc: ShiftScenario = read_json(&scenario)?;
            let cfg = train_config(config.as_deref(), g.seed)?;
            let trace = run_training(&sc, &cfg)?;
            let mut t = trace_table();
            trace_row(&mut t, &trace.initial);
            trace.rows.iter().for_each(|r| trace_row(&mut t, r));
            write_report(&t, g.format, out)?;
            Ok(Verdict::Pass)
        }
        Command::Ablate { scenario, config, seeds } => {
            let base = train_config(config.as_deref(), None)?;
            let first = g.seed.unwrap_or(0);
            let seeds: Vec<u64> = (first..first + seeds).collect();
            let subsets = ablation_subsets();
            let mut columns = vec!["principles".to_string()];
            let mut cells: Vec<Vec<Cell>> = subsets.iter().map(|p| vec![Cell::from(p.to_string())]).collect();
            for path in &scenario {
                let sc: ShiftScenario = read_json(path)?;
                columns.push(path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()));
                let rows = run_ablation(&sc, &base, &subsets, &seeds)?;
                for (c, r) in cells.iter_mut().zip(&rows) {
                    c.push(Cell::from(format!("{}±{}", sig6(r.mean()), sig6(r.std()))));
                }
            }
            let mut t = Table::new(columns);
            cells.into_iter().for_each(|c| t.push(c));
            write_report(&t, g.format, out)?;
            Ok(Verdict::Pass)
        }
        Command::Divergence { p, q, kind } => {
            let v = match (read_json::<JointPmf>(&p), read_json::<JointPmf>(&q)) {
                (Ok(a), Ok(b)) => divergence(kind, &a, &b, g.base)?,
                _ => {
                    let a: Pmf = read_json(&p)?;
                    let b: Pmf = read_json(&q)?;
                    divergence(kind, &a, &b, g.base)?
                }
            };
            match g.format {
                Format::Json => write_json(&v, out)?,
                Format::Csv => {
                    let mut t = Table::new(["kind", "base", "value"]);
                    t.push(vec![v.kind.to_string().into(), v.base.to_string().into(), v.value.into()]);
                    write_report(&t, g.format, out)?;
                }
            }
            Ok(Verdict::Pass)
        }
    }
}

fn scenario(cmd: ScenarioCmd, g: &Global) -> Result<Verdict> {
    let out = g.out.as_deref();
    match cmd {
        ScenarioCmd::Make { kind, params } => {
            let mut p: ScenarioParams = match params {
                Some(path) => read_json(&path)?,
                None => ScenarioParams::default(),
            };
            if let Some(s) = g.seed {
                p.seed = s;
            }
            write_json(&make_scenario(kind, &p)?, out)?;
        }
        ScenarioCmd::Sample { scenario, domain, n, split } => {
            let sc: ShiftScenario = read_json(&scenario)?;
            let b = sample_seeded(&sc, domain, n, g.seed.unwrap_or(sc.seed), split)?;
            let mut t = Table::new(["x0", "x1", "y"]);
            for (x, y) in b.xs.iter().zip(&b.ys) {
                t.push(vec![x[0].into(), x[1].into(), (*y).into()]);
            }
            write_report(&t, g.format, out)?;
        }
        ScenarioCmd::Discretize { scenario, domain, grid } => {
            let sc: ShiftScenario = read_json(&scenario)?;
            write_json(&discretize(&sc, domain, grid)?, out)?;
        }
    }
    Ok(Verdict::Pass)
}

fn suites_named(name: &str) -> Result<Vec<Suite>> {
    Ok(match name {
        "all" => Suite::BOUNDS.iter().chain(&Suite::DIVERGENCES).copied().collect(),
        "bounds" => Suite::BOUNDS.to_vec(),
        "divergences" => Suite::DIVERGENCES.to_vec(),
        one => vec![one.parse()?],
    })
}

fn verify_bounds(name: &str, g: &Global) -> Result<Verdict> {
    if g.tol.is_some_and(|t| t.is_nan() || t < 0.0) {
        bail!("--tol must be nonnegative");
    }
    let trials = g.trials.unwrap_or(1000) as usize;
    let seed = g.seed.unwrap_or(0);
    let mut t = Table::new(["suite", "trial", "name", "lhs", "bound_lo", "bound_hi", "holds"]);
    let mut failed = 0usize;
    for s in suites_named(name)? {
        let o = run_suite(s, trials, seed)?;
        let mut bad = 0usize;
        for (i, r) in o.reports.iter().enumerate() {
            let holds = match g.tol {
                Some(tol) => r.bound_lo - tol <= r.lhs && r.lhs <= r.bound_hi + tol,
                None => r.holds,
            } && r.checks.values().all(|&c| c);
            bad += usize::from(!holds);
            t.push(vec![
                s.name().into(),
                i.into(),
                r.name.clone().into(),
                r.lhs.into(),
                r.bound_lo.into(),
                r.bound_hi.into(),
                holds.into(),
            ]);
        }
        eprintln!("{}: {} of {} hold", s.name(), o.reports.len() - bad, o.reports.len());
        failed += bad;
    }
    write_report(&t, g.format, g.out.as_deref())?;
    Ok(if failed == 0 { Verdict::Pass } else { Verdict::Fail })
}

fn case_rows(t: &mut Table, r: &CaseReport) {
    for (k, v) in &r.computed {
        let e = r.expected.get(k);
        let ok = e.map(|e| (v - e.value).abs() <= e.tol);
        t.push(vec![
            r.case_id.clone().into(),
            k.clone().into(),
            (*v).into(),
            e.map_or(Cell::Null, |e| e.value.into()),
            e.map_or(Cell::Null, |e| e.tol.into()),
            ok.map_or(Cell::Null, Cell::from),
        ]);
    }
    for (k, ok) in &r.claims {
        t.push(vec![r.case_id.clone().into(), k.clone().into(), Cell::Null, Cell::Null, Cell::Null, (*ok).into()]);
    }
}

fn counterexamples(xi: f64, g: &Global) -> Result<Verdict> {
    let reports = [counterexample1(xi)?, counterexample2()?];
    let mut t = Table::new(["case", "quantity", "computed", "expected", "tol", "ok"]);
    reports.iter().for_each(|r| case_rows(&mut t, r));
    write_report(&t, g.format, g.out.as_deref())?;
    let mut verdict = Verdict::Pass;
    for r in &reports {
        if !r.verdict {
            eprintln!("{}: failed {}", r.case_id, r.failures().join(", "));
            verdict = Verdict::Fail;
        }
    }
    Ok(verdict)
}

fn label_shift(path: &Path, n: usize, g: &Global) -> Result<Verdict> {
    let sc: ShiftScenario = read_json(path)?;
    let k = sc.n_classes;
    let rule = sc.linear_rule(Domain::Source)?;
    let seed = g.seed.unwrap_or(sc.seed);
    let src = sample_seeded(&sc, Domain::Source, n, seed, 1)?;
    let tgt = sample_seeded(&sc, Domain::Target, n, seed, 1)?;
    let preds: Vec<usize> = src.xs.iter().map(|x| rule.predict(x)).collect();
    let cm = confusion_matrix(&preds, &src.ys, k)?;
    let mut freq = vec![0.0; k];
    for x in &tgt.xs {
        freq[rule.predict(x)] += 1.0 / n as f64;
    }
    let est = bbsl_weights(&cm, &Pmf::from_probs(freq)?)?;
    let truth = WeightVector::ratio(&sc.label_marginal(Domain::Source)?, &sc.label_marginal(Domain::Target)?)?;
    let mut t = Table::new(["class", "alpha_true", "alpha_hat", "abs_error"]);
    for (y, (a, b)) in truth.alpha.iter().zip(&est.weights.alpha).enumerate() {
        t.push(vec![y.into(), (*a).into(), (*b).into(), (a - b).abs().into()]);
    }
    write_report(&t, g.format, g.out.as_deref())?;
    eprintln!(
        "linf_error {} status {:?} condition {}",
        sig6(est.weights.linf_distance(&truth)),
        est.status,
        sig6(est.condition_number)
    );
    Ok(Verdict::Pass)
}

fn trace_table() -> Table {
    Table::new([
        "epoch",
        "lambda0",
        "lambda1",
        "loss_i",
        "loss_ii",
        "loss_iii",
        "target_accuracy",
        "alpha_hat",
        "t_pred",
        "bbsl_status",
        "within_kappa",
        "constraint_active",
        "feature_js",
        "label_js",
        "condshift_lo",
        "condshift",
    ])
}

fn joined(v: &[f64]) -> Cell {
    Cell::Text(v.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join(";"))
}

fn trace_row(t: &mut Table, r: &TraceRow) {
    let d = r.diagnostics;
    let diag = |f: fn(&jsda_core::trainer::FeatureDiagnostics) -> f64| d.as_ref().map_or(Cell::Null, |d| f(d).into());
    t.push(vec![
        r.epoch.into(),
        r.lambda0.into(),
        r.lambda1.into(),
        r.loss_i.into(),
        r.loss_ii.into(),
        r.loss_iii.into(),
        r.target_accuracy.into(),
        joined(&r.alpha_hat),
        joined(&r.t_pred),
        format!("{:?}", r.bbsl_status).to_lowercase().into(),
        r.within_kappa.into(),
        r.constraint_active.into(),
        diag(|d| d.feature_js),
        diag(|d| d.label_js),
        diag(|d| d.condshift_lo),
        diag(|d| d.condshift),
    ]);
}
