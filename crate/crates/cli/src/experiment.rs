use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rial_core::{
    build_nonlinear_instance, build_sparse_cca, build_sparse_pca, generate_cca_data,
    generate_pca_data, rial_solve_from, sparsity, CcaInstance, CompositeProblem, IterationRecord,
    PcaInstance, RunStatus, SPARSITY_TOL,
};

use crate::config::{Arm, Dims, ExperimentConfig, Family};
use crate::output::{emit_csv, format_sig, Table};
use crate::{CliError, Result};

/// Counting rule for the `total` column, written as the aggregate CSV's
/// leading comment.
pub const TOTAL_RULE: &str = "total = sum over outer iterations of the RGD steps t_k, plus one \
Riemannian gradient per outer iteration for the stationarity check";

const TRACE_HEADER: [&str; 15] = [
    "k",
    "phi",
    "r_grad",
    "r_feas",
    "sigma",
    "eps_k",
    "z_norm",
    "t_k",
    "inner_status",
    "total",
    "oracle_f",
    "oracle_grad_f",
    "oracle_a",
    "oracle_grad_a",
    "oracle_prox",
];

/// One `(dims, μ, r)` grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceKey {
    pub dims: Dims,
    pub mu: f64,
    pub r: usize,
}

impl InstanceKey {
    fn label(&self) -> String {
        format!(
            "{}_mu{}_r{}",
            self.dims.label(),
            format_sig(self.mu),
            self.r
        )
    }
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub neg_phi: f64,
    /// One entry for PCA and the nonlinear problem, `[U, V]` for CCA.
    pub sparsity: Vec<f64>,
    pub outer: usize,
    pub total: usize,
    pub converged: bool,
    pub violations: usize,
    pub cpu_secs: f64,
    pub trace: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub instance: usize,
    pub key: InstanceKey,
    pub seed: u64,
    pub arm: Arm,
    pub result: std::result::Result<CellResult, String>,
}

/// Seed averages for one `(instance, arm)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub key: InstanceKey,
    pub arm: Arm,
    pub runs: usize,
    pub failed: usize,
    pub converged: usize,
    pub neg_phi: f64,
    pub sparsity: Vec<f64>,
    pub outer: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub output_dir: PathBuf,
    pub cells: Vec<CellOutcome>,
    pub rows: Vec<AggregateRow>,
}

impl Summary {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    pub fn row(&self, instance: usize, arm: Arm) -> Option<&AggregateRow> {
        let key = self.cells.iter().find(|c| c.instance == instance)?.key;
        self.rows.iter().find(|r| r.key == key && r.arm == arm)
    }
}

fn build_problem(
    cfg: &ExperimentConfig,
    key: &InstanceKey,
    seed: u64,
) -> rial_core::Result<CompositeProblem> {
    let d = key.dims;
    match cfg.family {
        Family::Pca => {
            let data = generate_pca_data(d.d.unwrap_or(0), d.n.unwrap_or(0), seed);
            build_sparse_pca(&PcaInstance::new(data, key.mu, key.r)?)
        }
        Family::Cca => {
            let (a, b) =
                generate_cca_data(d.d.unwrap_or(0), d.p.unwrap_or(0), d.q.unwrap_or(0), seed);
            let mut inst = CcaInstance::new(a, b, key.mu, key.mu, key.r)?;
            inst.metric = cfg.cca_metric.into();
            build_sparse_cca(&inst)
        }
        Family::Nonlinear => build_nonlinear_instance(d.p.unwrap_or(0), key.r, key.mu, seed),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    key: &InstanceKey,
    seed: u64,
    arm: Arm,
) -> rial_core::Result<CellResult> {
    let problem = build_problem(cfg, key, seed)?;
    let outer = cfg.outer_config(arm, seed);
    let x1 = problem.manifold().random_point(seed);
    let start = Instant::now();
    let run = rial_solve_from(&problem, &x1, &outer, |_| {})?;
    let cpu_secs = start.elapsed().as_secs_f64();
    let x = &run.state.x;
    let sparsity = match cfg.family {
        Family::Cca => {
            let p = key.dims.p.unwrap_or(0);
            vec![
                sparsity(&x.rows(0, p).into_owned(), SPARSITY_TOL),
                sparsity(&x.rows(p, x.nrows() - p).into_owned(), SPARSITY_TOL),
            ]
        }
        _ => vec![sparsity(x, SPARSITY_TOL)],
    };
    let last = run.records.last().expect("at least one outer iteration");
    Ok(CellResult {
        neg_phi: -last.phi,
        sparsity,
        outer: run.outer_iterations(),
        total: run.total_inner_iterations() + run.outer_iterations(),
        converged: run.status == RunStatus::Converged,
        violations: run.violations.len(),
        cpu_secs,
        trace: run.records,
    })
}

fn instance_keys(cfg: &ExperimentConfig) -> Vec<InstanceKey> {
    let mut keys = Vec::new();
    for &dims in &cfg.dims {
        for &mu in &cfg.mu {
            for &r in &cfg.r {
                keys.push(InstanceKey { dims, mu, r });
            }
        }
    }
    keys
}

fn aggregate(cfg: &ExperimentConfig, cells: &[CellOutcome]) -> Vec<AggregateRow> {
    let nspar = if cfg.family == Family::Cca { 2 } else { 1 };
    let mut rows = Vec::new();
    for (i, key) in instance_keys(cfg).into_iter().enumerate() {
        for arm in cfg.arms.arms() {
            let group: Vec<&CellOutcome> = cells
                .iter()
                .filter(|c| c.instance == i && c.arm == arm)
                .collect();
            let ok: Vec<&CellResult> = group
                .iter()
                .filter_map(|c| c.result.as_ref().ok())
                .collect();
            let n = ok.len() as f64;
            let mean = |f: &dyn Fn(&CellResult) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|c| f(c)).sum::<f64>() / n
                }
            };
            rows.push(AggregateRow {
                key,
                arm,
                runs: group.len(),
                failed: group.len() - ok.len(),
                converged: ok.iter().filter(|c| c.converged).count(),
                neg_phi: mean(&|c| c.neg_phi),
                sparsity: (0..nspar).map(|j| mean(&|c| c.sparsity[j])).collect(),
                outer: mean(&|c| c.outer as f64),
                total: mean(&|c| c.total as f64),
            });
        }
    }
    rows
}

fn key_columns() -> Vec<&'static str> {
    vec!["family", "dims", "mu", "r"]
}

fn key_fields(cfg: &ExperimentConfig, key: &InstanceKey) -> Vec<String> {
    vec![
        cfg.family.name().into(),
        key.dims.label(),
        format_sig(key.mu),
        key.r.to_string(),
    ]
}

fn aggregate_table(cfg: &ExperimentConfig, rows: &[AggregateRow]) -> Table {
    let mut header = key_columns();
    header.extend(["arm", "runs", "failed", "converged", "neg_phi"]);
    match cfg.family {
        Family::Cca => header.extend(["sparu", "sparv"]),
        _ => header.push("spar"),
    }
    header.extend(["outer", "total"]);
    let mut t = Table::new(header).with_comment(format!(
        "seed averages over successful runs; {TOTAL_RULE}; wall-clock times are in timing.csv"
    ));
    for row in rows {
        let mut f = key_fields(cfg, &row.key);
        f.extend([
            row.arm.name().into(),
            row.runs.to_string(),
            row.failed.to_string(),
            row.converged.to_string(),
            format_sig(row.neg_phi),
        ]);
        f.extend(row.sparsity.iter().map(|&s| format_sig(s)));
        f.extend([format_sig(row.outer), format_sig(row.total)]);
        t.push(f);
    }
    t
}

fn timing_table(cfg: &ExperimentConfig, cells: &[CellOutcome]) -> Table {
    let mut header = key_columns();
    header.extend([
        "seed",
        "arm",
        "status",
        "cpu",
        "outer",
        "total",
        "violations",
        "error",
    ]);
    let mut t = Table::new(header).with_comment("cpu = wall-clock seconds of the solve loop");
    for c in cells {
        let mut f = key_fields(cfg, &c.key);
        f.extend([c.seed.to_string(), c.arm.name().into()]);
        match &c.result {
            Ok(r) => f.extend([
                if r.converged {
                    "converged"
                } else {
                    "max_outer"
                }
                .into(),
                format_sig(r.cpu_secs),
                r.outer.to_string(),
                r.total.to_string(),
                r.violations.to_string(),
                String::new(),
            ]),
            Err(e) => f.extend([
                "error".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ]),
        }
        t.push(f);
    }
    t
}

fn trace_table(trace: &[IterationRecord]) -> Table {
    let mut t = Table::new(TRACE_HEADER)
        .with_comment("total = cumulative RGD steps; oracle_* = cumulative oracle calls");
    for r in trace {
        t.push(vec![
            r.k.to_string(),
            format_sig(r.phi),
            format_sig(r.r_grad),
            format_sig(r.r_feas),
            format_sig(r.sigma),
            format_sig(r.eps_k),
            format_sig(r.z_norm),
            r.inner_iterations.to_string(),
            format!("{:?}", r.inner_status),
            r.cumulative_inner_iterations.to_string(),
            r.oracle.f.to_string(),
            r.oracle.grad_f.to_string(),
            r.oracle.a.to_string(),
            r.oracle.grad_a.to_string(),
            r.oracle.prox.to_string(),
        ]);
    }
    t
}

/// Solves every `(instance, seed, arm)` cell, in parallel when `workers`
/// allows, then writes `aggregate.csv`, `timing.csv` and `traces/*.csv`
/// under `output_dir`. Cell failures are recorded, not returned.
pub fn run_experiment(cfg: &ExperimentConfig, output_dir: &Path) -> Result<Summary> {
    cfg.validate()?;
    let traces = output_dir.join("traces");
    std::fs::create_dir_all(&traces).map_err(|e| CliError::io(&traces, e))?;

    let keys = instance_keys(cfg);
    let mut jobs = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        for &seed in &cfg.seeds {
            for arm in cfg.arms.arms() {
                jobs.push((i, *key, seed, arm));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let cells: Vec<CellOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(instance, key, seed, arm)| CellOutcome {
                instance,
                key,
                seed,
                arm,
                result: run_cell(cfg, &key, seed, arm).map_err(|e| e.to_string()),
            })
            .collect()
    });

    for c in &cells {
        if let Ok(r) = &c.result {
            let name = format!(
                "{}_{}_s{}_{}.csv",
                cfg.family.name(),
                c.key.label(),
                c.seed,
                c.arm.name()
            );
            emit_csv(&trace_table(&r.trace), &traces.join(name))?;
        }
    }
    let rows = aggregate(cfg, &cells);
    emit_csv(
        &aggregate_table(cfg, &rows),
        &output_dir.join("aggregate.csv"),
    )?;
    emit_csv(&timing_table(cfg, &cells), &output_dir.join("timing.csv"))?;
    Ok(Summary {
        output_dir: output_dir.to_path_buf(),
        cells,
        rows,
    })
}
