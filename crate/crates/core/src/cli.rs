//! Command-line driver: one TOML document per run, selected task, report on
//! stdout or in a file.
//!
//! Exit codes: 0 success, 1 validation or configuration failure, 2 numerical
//! failure (error above `eps` or a failed verification), 3 capacity.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::divided_difference::{dd_exp, dd_perturbation_check, simplex_integral_mc, simplex_nodes, NodeSet};
use crate::error::Error;
use crate::estimator::{
    pmr_td_cost, pmr_ti_approx_cost, pmr_ti_cost, qhop_cost, qubitization_cost, sweep, verify_norm_bounds,
    write_csv, write_json, CostOptions, CostReport, SweepGrid,
};
use crate::models::{build_rydberg_terms, build_tfim, rydberg_alpha, rydberg_alpha_bound, FloquetTFIMParams, RydbergParams};
use crate::pmr::{pmr_decompose, PMRForm};
use crate::propagator_td::{build_td_form, td_evolve, SegmentPolicy, TDPMRForm};
use crate::propagator_ti::{beta, evolve, PropagatorOptions};
use crate::spin::{BasisState, DenseLimits, DenseOperator};
use crate::truncation::{cutoff_d0, evolve_truncated, interaction_truncation_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Decompose,
    EvolveTi,
    EvolveTd,
    Estimate,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "pmrsim", version, about = "PMR Hamiltonian simulation and resource estimates")]
pub struct Args {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `task` in the configuration.
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the long-range interaction cutoffs in `evolve-ti`.
    #[arg(long)]
    pub truncate_diagonal: bool,
    /// Size `evolve-td` segments from the instantaneous off-diagonal norm.
    #[arg(long)]
    pub adaptive_segments: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                Error::Capacity { .. } => 3,
                Error::Range(_) | Error::Oracle(_) => 2,
                Error::Dimension { .. } | Error::Validation(_) | Error::InvalidArgument(_) => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rydberg,
    Tfim,
}

/// `[model]` section. Rydberg chains take `n` and `omega` or an explicit
/// `omegas` list plus `delta`, `c6` and `r`; the TFIM takes `n_per_axis`,
/// `dim`, `j`, `zeta` and `omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: Option<usize>,
    pub omega: Option<f64>,
    pub omegas: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub c6: Option<f64>,
    pub r: Option<f64>,
    pub n_per_axis: Option<usize>,
    pub dim: Option<usize>,
    pub j: Option<f64>,
    pub zeta: Option<f64>,
}

fn field<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("model: missing field `{name}`")))
}

fn reject(present: bool, name: &str, kind: &str) -> CliResult<()> {
    if present {
        return Err(CliError::Config(format!("model: field `{name}` does not apply to {kind}")));
    }
    Ok(())
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<Model> {
        match self.kind {
            ModelKind::Rydberg => {
                for (present, name) in [
                    (self.n_per_axis.is_some(), "n_per_axis"),
                    (self.dim.is_some(), "dim"),
                    (self.j.is_some(), "j"),
                    (self.zeta.is_some(), "zeta"),
                ] {
                    reject(present, name, "rydberg")?;
                }
                let omegas = match (&self.omegas, self.n, self.omega) {
                    (Some(list), None, None) => list.clone(),
                    (Some(list), Some(n), None) if n == list.len() => list.clone(),
                    (None, Some(n), Some(w)) => vec![w; n],
                    _ => {
                        return Err(CliError::Config(
                            "model: give either `n` and `omega` or an `omegas` list".to_string(),
                        ))
                    }
                };
                let p = RydbergParams {
                    omegas,
                    delta: self.delta.unwrap_or(0.0),
                    c6: field(self.c6, "c6")?,
                    r: self.r.unwrap_or(1.0),
                };
                p.validate()?;
                Ok(Model::Rydberg(p))
            }
            ModelKind::Tfim => {
                for (present, name) in [
                    (self.n.is_some(), "n"),
                    (self.omegas.is_some(), "omegas"),
                    (self.delta.is_some(), "delta"),
                    (self.c6.is_some(), "c6"),
                    (self.r.is_some(), "r"),
                ] {
                    reject(present, name, "tfim")?;
                }
                let p = FloquetTFIMParams {
                    n_per_axis: field(self.n_per_axis, "n_per_axis")?,
                    dim: field(self.dim, "dim")?,
                    j: field(self.j, "j")?,
                    zeta: field(self.zeta, "zeta")?,
                    omega: field(self.omega, "omega")?,
                };
                p.validate()?;
                Ok(Model::Tfim(p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Rydberg(RydbergParams),
    Tfim(FloquetTFIMParams),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t: Option<f64>,
    pub eps: Option<f64>,
    #[serde(default)]
    pub truncate_diagonal: bool,
    #[serde(default)]
    pub adaptive_segments: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// The configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<Task>,
    pub seed: Option<u64>,
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub run: RunSection,
    pub estimate: Option<SweepGrid>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub model: Option<Model>,
    pub t: Option<f64>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub truncate_diagonal: bool,
    pub adaptive_segments: bool,
    pub seed: u64,
    pub estimate: Option<SweepGrid>,
}

pub fn parse_config(text: &str) -> CliResult<FileConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Merges the file with command-line overrides and validates the model.
pub fn resolve(file: FileConfig, args: &Args) -> CliResult<RunConfig> {
    let task = args
        .task
        .or(file.task)
        .ok_or_else(|| CliError::Config("no task given (`task` or --task)".to_string()))?;
    let model = file.model.as_ref().map(ModelSpec::build).transpose()?;
    Ok(RunConfig {
        task,
        model,
        t: file.run.t,
        eps: file.run.eps,
        out: args.out.clone().or(file.output.path),
        format: args.format.or(file.output.format).unwrap_or_default(),
        truncate_diagonal: args.truncate_diagonal || file.run.truncate_diagonal,
        adaptive_segments: args.adaptive_segments || file.run.adaptive_segments,
        seed: args.seed.or(file.seed).unwrap_or(0),
        estimate: file.estimate,
    })
}

pub fn load(args: &Args) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    resolve(parse_config(&text)?, args)
}

/// Rendered report plus whether the numerical checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

fn need<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("missing `{what}`")))
}

fn rydberg(cfg: &RunConfig) -> CliResult<&RydbergParams> {
    match &cfg.model {
        Some(Model::Rydberg(p)) => Ok(p),
        _ => Err(CliError::Config(format!("{:?} needs a rydberg model", cfg.task))),
    }
}

fn tfim(cfg: &RunConfig) -> CliResult<&FloquetTFIMParams> {
    match &cfg.model {
        Some(Model::Tfim(p)) => Ok(p),
        _ => Err(CliError::Config(format!("{:?} needs a tfim model", cfg.task))),
    }
}

fn time_and_eps(cfg: &RunConfig) -> CliResult<(f64, f64)> {
    let t = need(cfg.t, "run.t")?;
    let eps = need(cfg.eps, "run.eps")?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Validation(format!("run.t must be finite and >= 0, got {t}")).into());
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Validation(format!("run.eps must be finite and > 0, got {eps}")).into());
    }
    Ok((t, eps))
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.task {
        Task::Decompose => decompose(cfg),
        Task::EvolveTi => evolve_ti(cfg),
        Task::EvolveTd => evolve_td(cfg),
        Task::Estimate => estimate(cfg),
        Task::Verify => verify(cfg),
    }
}

/// Writes the report to `cfg.out`, or returns it for stdout.
pub fn emit(cfg: &RunConfig, outcome: &Outcome) -> CliResult<Option<String>> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &outcome.text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(None)
        }
        None => Ok(Some(outcome.text.clone())),
    }
}

/// Parses, runs and emits; returns the process exit code.
pub fn main_with(args: &Args) -> i32 {
    let result = load(args).and_then(|cfg| {
        let outcome = run(&cfg)?;
        if let Some(text) = emit(&cfg, &outcome)? {
            print!("{text}");
        }
        Ok(outcome)
    });
    match result {
        Ok(o) => {
            if !o.passed {
                eprintln!("error: numerical check failed");
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn csv_line(fields: &[String]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields).map_err(|e| CliError::Config(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut out = csv_line(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for r in rows {
        out.push_str(&csv_line(r)?);
    }
    Ok(out)
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct DecompositionRow {
    kind: &'static str,
    label: String,
    perm_mask: u64,
    z_mask: u64,
    re: f64,
    im: f64,
}

fn diagonal_rows(kind: &'static str, label: &str, perm_mask: u64, d: &crate::spin::ComplexDiagonal) -> Vec<DecompositionRow> {
    let mut rows = vec![DecompositionRow {
        kind,
        label: label.to_string(),
        perm_mask,
        z_mask: 0,
        re: d.constant.re,
        im: d.constant.im,
    }];
    rows.extend(d.terms.iter().map(|&(m, c)| DecompositionRow {
        kind,
        label: label.to_string(),
        perm_mask,
        z_mask: m,
        re: c.re,
        im: c.im,
    }));
    rows
}

fn ti_rows(identity: f64, terms: &[crate::spin::PauliTerm], form: &PMRForm) -> Vec<DecompositionRow> {
    let mut rows = vec![DecompositionRow {
        kind: "pauli",
        label: "I".to_string(),
        perm_mask: 0,
        z_mask: 0,
        re: identity,
        im: 0.0,
    }];
    for t in terms {
        let c = t.coefficient();
        rows.push(DecompositionRow {
            kind: "pauli",
            label: t.to_string(),
            perm_mask: t.x_mask,
            z_mask: t.z_mask,
            re: c.re,
            im: c.im,
        });
    }
    rows.extend(diagonal_rows("d0", "D0", 0, &form.d0.map(|c| Complex64::new(c, 0.0))));
    for (i, t) in form.terms.iter().enumerate() {
        rows.extend(diagonal_rows("offdiag", &format!("D{}", i + 1), t.perm_mask, &t.diag));
    }
    rows
}

fn td_rows(form: &TDPMRForm) -> Vec<DecompositionRow> {
    let mut rows = diagonal_rows("d0", "D0", 0, &form.d0.map(|c| Complex64::new(c, 0.0)));
    for (i, t) in form.terms.iter().enumerate() {
        for (k, c) in t.components.iter().enumerate() {
            let label = format!("D{}_{}", i + 1, k + 1);
            rows.push(DecompositionRow {
                kind: "rate",
                label: label.clone(),
                perm_mask: t.perm_mask,
                z_mask: 0,
                re: c.rate.re,
                im: c.rate.im,
            });
            rows.extend(diagonal_rows("amplitude", &label, t.perm_mask, &c.amp));
        }
    }
    rows
}

fn decompose(cfg: &RunConfig) -> CliResult<Outcome> {
    let (rows, gamma) = match need(cfg.model.as_ref(), "model")? {
        Model::Rydberg(p) => {
            let dec = build_rydberg_terms(p)?;
            let form = pmr_decompose(dec.n, &dec.terms)?;
            (ti_rows(dec.identity, &dec.terms, &form), form.gamma())
        }
        Model::Tfim(p) => {
            let form = build_td_form(p)?;
            (td_rows(&form), form.gamma_bound(0.0))
        }
    };
    let text = match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                gamma: f64,
                rows: &'a [DecompositionRow],
            }
            json(&Doc { gamma, rows: &rows })?
        }
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.kind.to_string(),
                        r.label.clone(),
                        r.perm_mask.to_string(),
                        r.z_mask.to_string(),
                        r.re.to_string(),
                        r.im.to_string(),
                    ]
                })
                .collect();
            csv_table(&["kind", "label", "perm_mask", "z_mask", "re", "im"], &body)?
        }
    };
    Ok(Outcome { text, passed: true })
}

/// Summary of one evolution run. `wall_time_s` is the only
/// non-deterministic field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionReport {
    pub task: Task,
    pub n: usize,
    pub t: f64,
    pub eps: f64,
    pub r: usize,
    /// Largest truncation order over the segments.
    pub q: u32,
    pub gamma: f64,
    pub error: f64,
    pub passed: bool,
    pub notes: String,
    pub wall_time_s: f64,
}

fn render_evolution(rep: &EvolutionReport, format: Format) -> CliResult<String> {
    match format {
        Format::Json => json(rep),
        Format::Csv => csv_table(
            &["task", "N", "t", "eps", "r", "Q", "gamma", "error", "passed", "notes", "wall_time_s"],
            &[vec![
                serde_json::to_value(rep.task)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                rep.n.to_string(),
                rep.t.to_string(),
                rep.eps.to_string(),
                rep.r.to_string(),
                rep.q.to_string(),
                rep.gamma.to_string(),
                format!("{:e}", rep.error),
                rep.passed.to_string(),
                rep.notes.clone(),
                format!("{:.3}", rep.wall_time_s),
            ]],
        ),
    }
}

fn evolve_ti(cfg: &RunConfig) -> CliResult<Outcome> {
    let p = rydberg(cfg)?;
    let (t, eps) = time_and_eps(cfg)?;
    let opts = PropagatorOptions::default();
    opts.limits.check(p.n())?;
    let dec = build_rydberg_terms(p)?;
    let start = Instant::now();
    let (ev, notes) = if cfg.truncate_diagonal {
        let tr = evolve_truncated(p, t, eps, &opts)?;
        let notes = format!("n_C={} n_D={}", tr.n_c, tr.n_d);
        (tr.evolution, notes)
    } else {
        let form = pmr_decompose(dec.n, &dec.terms)?;
        (evolve(&form, t, eps, &opts)?, String::new())
    };
    let wall = start.elapsed().as_secs_f64();
    let h = DenseOperator::from_terms(dec.n, &dec.terms, &opts.limits)?;
    let exact = pmrsim_oracles::exact_expm(h.matrix(), t).map_err(Error::from)?;
    let error = pmrsim_oracles::spectral_norm(&(ev.operator.matrix() - &exact));
    let rep = EvolutionReport {
        task: Task::EvolveTi,
        n: dec.n,
        t,
        eps,
        r: ev.plan.r as usize,
        q: ev.order.q,
        gamma: ev.gamma,
        error,
        passed: error <= eps,
        notes,
        wall_time_s: wall,
    };
    Ok(Outcome {
        text: render_evolution(&rep, cfg.format)?,
        passed: rep.passed,
    })
}

fn evolve_td(cfg: &RunConfig) -> CliResult<Outcome> {
    let p = tfim(cfg)?;
    let (t, eps) = time_and_eps(cfg)?;
    let opts = PropagatorOptions::default();
    opts.limits.check(p.sites())?;
    let form = build_td_form(p)?;
    let policy = if cfg.adaptive_segments {
        SegmentPolicy::Adaptive
    } else {
        SegmentPolicy::Uniform
    };
    let start = Instant::now();
    let ev = td_evolve(&form, t, eps, policy, &opts)?;
    let wall = start.elapsed().as_secs_f64();
    let model = build_tfim(p)?;
    let n = model.n();
    let oracle_cfg = pmrsim_oracles::OracleConfig::with_tol((eps / 100.0).clamp(1e-10, 1e-6));
    let h_of_t = |s: f64| {
        DenseOperator::from_terms(n, &model.terms_at(s), &opts.limits)
            .expect("spin count checked above")
            .into_matrix()
    };
    let reference = pmrsim_oracles::time_ordered_propagator(h_of_t, 0.0, t, &oracle_cfg).map_err(Error::from)?;
    let error = pmrsim_oracles::spectral_norm(&(ev.operator.matrix() - &reference.operator));
    let rep = EvolutionReport {
        task: Task::EvolveTd,
        n,
        t,
        eps,
        r: ev.schedule.r(),
        q: ev.orders.iter().copied().max().unwrap_or(0),
        gamma: ev.schedule.gamma_max,
        error,
        passed: error <= eps,
        notes: format!("{policy:?} segments, oracle steps {}", reference.steps).to_lowercase(),
        wall_time_s: wall,
    };
    Ok(Outcome {
        text: render_evolution(&rep, cfg.format)?,
        passed: rep.passed,
    })
}

/// Every applicable algorithm at the configured model point.
fn point_reports(cfg: &RunConfig) -> CliResult<Vec<CostReport>> {
    let (t, eps) = time_and_eps(cfg)?;
    let opts = CostOptions::default();
    Ok(match need(cfg.model.as_ref(), "model or [estimate] grid")? {
        Model::Rydberg(p) => vec![
            qubitization_cost(p, t, eps)?,
            pmr_ti_cost(p, t, eps, &opts)?,
            pmr_ti_approx_cost(p, t, eps, &opts)?,
        ],
        Model::Tfim(p) => vec![qhop_cost(p, t, eps)?, pmr_td_cost(p, t, eps, &opts)?],
    })
}

fn estimate(cfg: &RunConfig) -> CliResult<Outcome> {
    let reports = match &cfg.estimate {
        Some(grid) => sweep(grid)?,
        None => point_reports(cfg)?,
    };
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => write_csv(&reports, &mut buf)?,
        Format::Json => {
            write_json(&reports, &mut buf)?;
            buf.push(b'\n');
        }
    }
    Ok(Outcome {
        text: String::from_utf8(buf).expect("reports are utf-8"),
        passed: true,
    })
}

/// One verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
}

fn check(name: &str, measured: f64, threshold: f64) -> CheckRow {
    CheckRow {
        check: name.to_string(),
        passed: measured <= threshold,
        measured,
        threshold,
    }
}

fn random_nodes(rng: &mut StdRng, q: usize) -> Vec<Complex64> {
    let mut nodes: Vec<Complex64> = (0..=q)
        .map(|_| Complex64::new(rng.random_range(-20.0..20.0), 0.0))
        .collect();
    if q >= 1 && rng.random::<bool>() {
        nodes[1] = nodes[0] + 1e-8;
    }
    nodes
}

/// Divided differences against the extended-precision reference.
fn verify_divided_differences(rng: &mut StdRng, sets: usize) -> CliResult<Vec<CheckRow>> {
    let ref_cfg = pmrsim_oracles::OracleConfig::default();
    let (mut worst, mut drift) = (0.0f64, 0.0f64);
    for _ in 0..sets {
        let q = rng.random_range(0..=12usize);
        let nodes = random_nodes(rng, q);
        let scale = if rng.random::<bool>() {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::new(0.3, 0.0)
        };
        let value = dd_exp(&NodeSet::new(nodes.clone(), scale)?)?.value;
        let reference = pmrsim_oracles::dd_reference(&nodes, scale, &ref_cfg);
        worst = worst.max((value - reference).norm() / reference.norm().max(f64::MIN_POSITIVE));
        let mut reversed = nodes.clone();
        reversed.reverse();
        let other = dd_exp(&NodeSet::new(reversed, scale)?)?.value;
        drift = drift.max((value - other).norm() / value.norm().max(f64::MIN_POSITIVE));
    }
    let mut rows = vec![
        check("dd_exp relative error", worst, 1e-8),
        check("dd_exp permutation drift", drift, 1e-12),
    ];
    // first-order perturbation bound over an eps sweep
    let mut excess = 0.0f64;
    for k in 4..=10 {
        let eps = 10f64.powi(-k);
        let nodes: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ns = NodeSet::real(&nodes, Complex64::new(0.0, -1.0))?;
        let rep = dd_perturbation_check(&ns, eps, 16, rng)?;
        excess = excess.max(rep.excess() / rep.first_order_bound);
    }
    rows.push(check("dd perturbation relative excess", excess, 1e-3));
    Ok(rows)
}

fn verify_simplex(rng: &mut StdRng, samples: usize) -> CliResult<Vec<CheckRow>> {
    let mut worst = 0.0f64;
    for q in 1..=4 {
        let rates: Vec<Complex64> = (0..q)
            .map(|_| Complex64::new(0.0, rng.random_range(-3.0..3.0)))
            .collect();
        let (mc, stderr) = simplex_integral_mc(&rates, samples, rng)?;
        let dd = dd_exp(&NodeSet::new(simplex_nodes(&rates), Complex64::new(1.0, 0.0))?)?.value;
        worst = worst.max((mc - dd).norm() / stderr);
    }
    Ok(vec![check("simplex integral within standard errors", worst, 3.0)])
}

fn verify_rydberg(p: &RydbergParams) -> CliResult<Vec<CheckRow>> {
    let limits = DenseLimits::default();
    let dec = build_rydberg_terms(p)?;
    let form = pmr_decompose(dec.n, &dec.terms)?;
    let pauli = DenseOperator::from_terms(dec.n, &dec.terms, &limits)?;
    let rebuilt = form.to_dense(&limits)?;
    let mut rows = vec![
        check(
            "pmr reconstruction",
            pauli.sub(&rebuilt)?.max_abs_entry(),
            1e-12,
        ),
        check(
            "alpha below termwise bound",
            rydberg_alpha(p)? - rydberg_alpha_bound(p),
            0.0,
        ),
    ];
    let unitary = pmrsim_oracles::exact_expm(pauli.matrix(), 1.0).map_err(Error::from)?;
    let defect = &unitary.adjoint() * &unitary - nalgebra::DMatrix::<Complex64>::identity(pauli.dim(), pauli.dim());
    rows.push(check("oracle unitarity", pmrsim_oracles::spectral_norm(&defect), 1e-10));

    // |beta| <= 1 over every path up to order 3 (4 for N <= 3)
    let gamma = form.gamma();
    if gamma > 0.0 && dec.n <= 4 {
        let dt = std::f64::consts::LN_2 / gamma;
        let max_q = if dec.n <= 3 { 4 } else { 3 };
        let mut worst = 0.0f64;
        let m = form.m();
        for z in 0..1u64 << dec.n {
            let state = BasisState::new(z, dec.n)?;
            let mut path = Vec::new();
            beta_walk(&form, state, dt, max_q, m, &mut path, &mut worst)?;
        }
        rows.push(check("beta modulus", worst, 1.0 + 1e-12));
    }

    let c6p = p.c6_prime();
    if c6p > 0.0 {
        let (t, eps) = (1.0, 1e-3);
        let cut = cutoff_d0(t, c6p, eps)?;
        rows.push(check(
            "interaction cutoff error",
            interaction_truncation_error(&form.d0, cut.n),
            eps / t,
        ));
    }
    Ok(rows)
}

fn beta_walk(
    form: &PMRForm,
    z: BasisState,
    dt: f64,
    max_q: usize,
    m: usize,
    path: &mut Vec<usize>,
    worst: &mut f64,
) -> CliResult<()> {
    if !path.is_empty() {
        *worst = worst.max(beta(form, z, path, dt)?.value.norm());
    }
    if path.len() == max_q {
        return Ok(());
    }
    for i in 0..m {
        path.push(i);
        beta_walk(form, z, dt, max_q, m, path, worst)?;
        path.pop();
    }
    Ok(())
}

fn verify_tfim(p: &FloquetTFIMParams, rng: &mut StdRng) -> CliResult<Vec<CheckRow>> {
    let period = if p.omega != 0.0 {
        std::f64::consts::TAU / p.omega.abs()
    } else {
        1.0
    };
    let times: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..period)).collect();
    let nb = match verify_norm_bounds(p, &times, &DenseLimits::default()) {
        Ok(nb) => nb,
        Err(Error::Validation(msg)) => {
            return Ok(vec![CheckRow {
                check: format!("norm bounds: {msg}"),
                passed: false,
                measured: f64::NAN,
                threshold: 0.0,
            }])
        }
        Err(e) => return Err(e.into()),
    };
    let n = p.sites() as f64;
    let equality = nb
        .samples
        .iter()
        .map(|s| (s.b - n * p.zeta.abs() * (p.omega * s.t).cos().abs()).abs())
        .fold(0.0, f64::max);
    let ratio = |f: fn(&crate::estimator::NormSample) -> f64, bound: f64| {
        nb.samples.iter().map(f).fold(0.0, f64::max) - bound
    };
    Ok(vec![
        check("sum X norm", (nb.sum_x_norm - n).abs(), 1e-10),
        check("B norm equals N zeta |cos|", equality, 1e-10),
        check("B' norm bound", ratio(|s| s.b_prime, nb.beta_b), 1e-10),
        check("commutator norm bound", ratio(|s| s.commutator, nb.alpha_ab_bound), 1e-10),
    ])
}

fn verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut rows = verify_divided_differences(&mut rng, 300)?;
    rows.extend(verify_simplex(&mut rng, 200_000)?);
    match &cfg.model {
        Some(Model::Rydberg(p)) => {
            DenseLimits::default().check(p.n())?;
            rows.extend(verify_rydberg(p)?);
        }
        Some(Model::Tfim(p)) => {
            DenseLimits::default().check(p.sites())?;
            rows.extend(verify_tfim(p, &mut rng)?);
        }
        None => {}
    }
    let passed = rows.iter().all(|r| r.passed);
    let text = match cfg.format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.check.clone(),
                        r.passed.to_string(),
                        format!("{:e}", r.measured),
                        format!("{:e}", r.threshold),
                    ]
                })
                .collect();
            csv_table(&["check", "passed", "measured", "threshold"], &body)?
        }
    };
    Ok(Outcome { text, passed })
}
