//! One runner per experiment kind. Each writes its CSVs and `meta.json` into
//! the output directory and returns the traces it produced.

use std::path::Path;
use std::time::Instant;

use dibom::datagen::{
    corrupt, gen_dataset, gen_dataset_with_inputs, split, CorruptionConfig, Dataset, InputKind,
    IntrinsicSpec,
};
use dibom::expressivity::{fbe_upper_bound, frontier_points, Architecture, PointSource};
use dibom::network::{build_conditional_dibom, build_dibom, build_model, count_parameters, ModelKind, Network};
use dibom::training::{loss, train, train_conditional, LossKind, Method, TrainTrace, TrainingConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    BarrenSettings, CompareSettings, CorruptionSettings, DataSettings, Experiment,
    ExperimentConfig, FbeSettings, LandscapeSettings, ParamsSettings, RunSeeds, TeleportSettings,
    TrainSettings,
};
use crate::error::CliError;
use crate::output::{num, opt_int, opt_num, write_meta, Csv};

pub fn method_label(method: Method) -> &'static str {
    match method {
        Method::Simultaneous => "simultaneous",
        Method::LayerByLayer => "layer_by_layer",
        Method::Nesterov => "nesterov",
    }
}

pub fn loss_label(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Global => "global",
        LossKind::Local => "local",
    }
}

/// Train and test halves of the dataset for one run seed.
pub fn prepare_data(data: &DataSettings, seeds: &RunSeeds) -> Result<(Dataset, Dataset), CliError> {
    let full = gen_dataset_with_inputs(data.intrinsic, data.n, data.count, data.input_kind, seeds.data)?;
    Ok(split(&full, data.train_fraction, seeds.split)?)
}

fn seeded(training: &TrainingConfig, seeds: &RunSeeds) -> TrainingConfig {
    TrainingConfig {
        seed: seeds.training,
        ..training.clone()
    }
}

/// Qubit-count scaled family for parameter tables.
fn kind_at(kind: ModelKind, n: usize) -> ModelKind {
    match kind {
        ModelKind::Dissipative { hidden, .. } => ModelKind::Dissipative {
            input: n,
            hidden,
            output: n,
        },
        other => other,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub label: String,
    pub seeds: RunSeeds,
    pub iterations: usize,
    pub final_train_loss: f64,
    pub final_test_loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TraceRun {
    pub seed: u64,
    pub label: String,
    pub trace: TrainTrace,
}

impl TraceRun {
    fn summary(&self) -> RunSummary {
        RunSummary {
            seed: self.seed,
            label: self.label.clone(),
            seeds: RunSeeds::new(self.seed),
            iterations: self.trace.records.len().saturating_sub(1),
            final_train_loss: self.trace.final_train_loss().unwrap_or(f64::NAN),
            final_test_loss: self.trace.final_test_loss(),
        }
    }
}

fn write_traces(out: &Path, prefix: &str, runs: &[TraceRun]) -> Result<(), CliError> {
    for run in runs {
        let name = format!("{prefix}_{}_seed{}.csv", run.label, run.seed);
        crate::output::write_atomic(&out.join(name), run.trace.to_csv().as_bytes())?;
    }
    Ok(())
}

fn summaries(runs: &[TraceRun]) -> Vec<RunSummary> {
    runs.iter().map(TraceRun::summary).collect()
}

pub fn run_train(
    config: &ExperimentConfig,
    s: &TrainSettings,
    out: &Path,
) -> Result<Vec<TraceRun>, CliError> {
    let methods = s.methods();
    let runs: Vec<Vec<TraceRun>> = s
        .seeds
        .par_iter()
        .map(|&seed| {
            let seeds = RunSeeds::new(seed);
            let (train_set, test_set) = prepare_data(&s.data, &seeds)?;
            let initial = build_model(s.model.kind, s.data.n, s.model.depth, seeds.model)?;
            methods
                .iter()
                .map(|&method| {
                    let mut network = initial.network.clone();
                    let cfg = TrainingConfig {
                        method,
                        ..seeded(&s.training, &seeds)
                    };
                    let trace = train(&mut network, &train_set, Some(&test_set), &cfg)?;
                    Ok(TraceRun {
                        seed,
                        label: method_label(method).into(),
                        trace,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    let runs: Vec<TraceRun> = runs.into_iter().flatten().collect();
    write_traces(out, "train", &runs)?;
    write_meta(out, "train", config, summaries(&runs))?;
    Ok(runs)
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamRow {
    pub model: String,
    pub n: usize,
    pub depth: usize,
    pub params: u64,
}

fn params_csv(rows: &[ParamRow]) -> Csv {
    let mut csv = Csv::new(&["model", "n", "depth", "params"]);
    for r in rows {
        csv.row(&[
            r.model.clone(),
            r.n.to_string(),
            r.depth.to_string(),
            r.params.to_string(),
        ]);
    }
    csv
}

#[derive(Clone, Debug)]
pub struct CompareOutcome {
    pub runs: Vec<TraceRun>,
    pub params: Vec<ParamRow>,
}

pub fn run_compare(
    config: &ExperimentConfig,
    s: &CompareSettings,
    out: &Path,
) -> Result<CompareOutcome, CliError> {
    let per_seed: Vec<Vec<TraceRun>> = s
        .seeds
        .par_iter()
        .map(|&seed| {
            let seeds = RunSeeds::new(seed);
            let (train_set, test_set) = prepare_data(&s.data, &seeds)?;
            crate::output::write_atomic(
                &out.join(format!("dataset_train_seed{seed}.json")),
                train_set.to_json()?.as_bytes(),
            )?;
            s.models
                .par_iter()
                .map(|m| {
                    let mut model = build_model(m.kind, s.data.n, m.depth, seeds.model)?;
                    let trace = train(
                        &mut model.network,
                        &train_set,
                        Some(&test_set),
                        &seeded(&s.training, &seeds),
                    )?;
                    Ok(TraceRun {
                        seed,
                        label: m.kind.label().into(),
                        trace,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    let runs: Vec<TraceRun> = per_seed.into_iter().flatten().collect();
    let mut params = Vec::new();
    for m in &s.models {
        for &n in &s.table_n {
            params.push(ParamRow {
                model: m.kind.label().into(),
                n,
                depth: m.depth,
                params: count_parameters(kind_at(m.kind, n), n, m.depth),
            });
        }
    }
    write_traces(out, "compare", &runs)?;
    params_csv(&params).write(&out.join("params.csv"))?;
    write_meta(out, "compare", config, summaries(&runs))?;
    Ok(CompareOutcome { runs, params })
}

pub fn run_params(
    config: &ExperimentConfig,
    s: &ParamsSettings,
    out: &Path,
) -> Result<Vec<ParamRow>, CliError> {
    let mut rows = Vec::new();
    for kind in &s.kinds {
        for &n in &s.ns {
            for &depth in &s.depths {
                rows.push(ParamRow {
                    model: kind.label().into(),
                    n,
                    depth,
                    params: count_parameters(kind_at(*kind, n), n, depth),
                });
            }
        }
    }
    params_csv(&rows).write(&out.join("params.csv"))?;
    write_meta(out, "params-table", config, &rows)?;
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct FbeRow {
    pub architecture: Architecture,
    pub layers: usize,
    pub params: u64,
    pub fbe: f64,
    pub seconds: f64,
}

/// Depth actually used by architectures whose shape ignores the grid.
fn fixed_depth(arch: Architecture) -> Option<usize> {
    match arch {
        Architecture::IsingBornMachine => Some(3),
        Architecture::GeneralUnitary | Architecture::Fixed => Some(1),
        Architecture::Dibom | Architecture::HardwareEfficient => None,
    }
}

fn arch_label(arch: Architecture) -> &'static str {
    match arch {
        Architecture::Dibom => "dibom",
        Architecture::HardwareEfficient => "hardware_efficient",
        Architecture::IsingBornMachine => "ising_born_machine",
        Architecture::GeneralUnitary => "general_unitary",
        Architecture::Fixed => "fixed",
    }
}

#[derive(Serialize)]
struct FbeMeta<'a> {
    profile: &'static str,
    k: usize,
    m: usize,
    restarts: usize,
    inner_iters: usize,
    seed: u64,
    bound: &'static str,
    rows: &'a [FbeRow],
}

pub fn run_fbe(
    config: &ExperimentConfig,
    s: &FbeSettings,
    out: &Path,
) -> Result<Vec<FbeRow>, CliError> {
    let fbe = s.effective();
    let mut rows = Vec::new();
    for &arch in &s.architectures {
        let depths = match fixed_depth(arch) {
            Some(d) => vec![d],
            None => s.depths.clone(),
        };
        let mut csv = Csv::new(&["L", "params", "fbe", "seconds"]);
        for depth in depths {
            let start = Instant::now();
            let result = fbe_upper_bound(arch, s.n, depth, &fbe)?;
            let seconds = if s.record_timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            let row = FbeRow {
                architecture: arch,
                layers: depth,
                params: arch.param_count(s.n, depth),
                fbe: result.estimate,
                seconds,
            };
            csv.row(&[
                row.layers.to_string(),
                row.params.to_string(),
                num(row.fbe),
                num(row.seconds),
            ]);
            rows.push(row);
        }
        csv.write(&out.join(format!("fbe_{}.csv", arch_label(arch))))?;
    }
    let dibom_points: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter(|r| r.architecture == Architecture::Dibom)
        .map(|r| (r.layers, r.fbe, r.seconds))
        .collect();
    if !dibom_points.is_empty() {
        let mut csv = Csv::new(&["L", "params", "log10_params", "fbe", "seconds", "source"]);
        for p in frontier_points(s.n, &dibom_points) {
            let source = match p.source {
                PointSource::Estimated => "estimated",
                PointSource::Analytic => "analytic",
            };
            csv.row(&[
                p.layers.to_string(),
                p.params.to_string(),
                num(p.log10_params),
                num(p.fbe),
                num(p.seconds),
                source.into(),
            ]);
        }
        csv.write(&out.join("frontier.csv"))?;
    }
    let meta = FbeMeta {
        profile: if s.fast { "fast" } else { "full" },
        k: fbe.k,
        m: fbe.m,
        restarts: fbe.restarts,
        inner_iters: fbe.inner_iters,
        seed: fbe.seed.0,
        bound: "min over sampled unitaries of the maximized overlap score (upper bound)",
        rows: &rows,
    };
    write_meta(out, "fbe", config, meta)?;
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Landscape {
    /// Parameter values at the centre of a relative scan, or the trained values.
    pub center: [f64; 2],
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// `losses[i][j]` at `(p1[i], p2[j])`.
    pub losses: Vec<Vec<f64>>,
}

pub fn run_landscape(
    config: &ExperimentConfig,
    s: &LandscapeSettings,
    out: &Path,
) -> Result<Landscape, CliError> {
    let seeds = RunSeeds::new(s.seed);
    let (train_set, _) = prepare_data(&s.data, &seeds)?;
    let mut model = build_model(s.model.kind, s.data.n, s.model.depth, seeds.model)?;
    if s.training.max_iters > 0 {
        train(&mut model.network, &train_set, None, &seeded(&s.training, &seeds))?;
    }
    let base = model.network.params();
    let [c1, c2] = s.coordinates;
    let center = [base[c1], base[c2]];
    let axis = |k: usize| -> Vec<f64> {
        let [lo, hi] = s.ranges[k];
        let offset = if s.relative { center[k] } else { 0.0 };
        (0..s.steps)
            .map(|i| offset + lo + (hi - lo) * i as f64 / (s.steps - 1) as f64)
            .collect()
    };
    let (p1, p2) = (axis(0), axis(1));
    let losses = p1
        .par_iter()
        .map(|&a| {
            p2.iter()
                .map(|&b| {
                    let mut params = base.clone();
                    params[c1] = a;
                    params[c2] = b;
                    let mut net: Network = model.network.clone();
                    net.set_params(&params)?;
                    Ok(loss(&net, &train_set.samples, s.training.loss)?)
                })
                .collect::<Result<Vec<f64>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(&["p1", "p2", "loss"]);
    for (i, &a) in p1.iter().enumerate() {
        for (j, &b) in p2.iter().enumerate() {
            csv.row(&[num(a), num(b), num(losses[i][j])]);
        }
    }
    csv.write(&out.join("landscape.csv"))?;
    let landscape = Landscape {
        center,
        p1,
        p2,
        losses,
    };
    write_meta(out, "landscape", config, &landscape.center)?;
    Ok(landscape)
}

#[derive(Clone, Debug, Serialize)]
pub struct TeleportRun {
    pub seed: u64,
    pub branch_params_with: usize,
    pub branch_params_without: usize,
    pub final_with: f64,
    pub final_without: f64,
}

#[derive(Clone, Debug)]
pub struct TeleportOutcome {
    pub runs: Vec<TeleportRun>,
    pub traces: Vec<TraceRun>,
}

pub fn run_teleport(
    config: &ExperimentConfig,
    s: &TeleportSettings,
    out: &Path,
) -> Result<TeleportOutcome, CliError> {
    let per_seed: Vec<(TeleportRun, Vec<TraceRun>)> = s
        .seeds
        .par_iter()
        .map(|&seed| {
            let seeds = RunSeeds::new(seed);
            let full = gen_dataset(IntrinsicSpec::TeleportationTask, 3, s.count, seeds.data)?;
            let (train_set, test_set) = split(&full, s.train_fraction, seeds.split)?;
            let cfg = seeded(&s.training, &seeds);
            let mut with =
                build_conditional_dibom(3, 0, 2, s.pre_depth, s.branch_depth, seeds.model)?;
            let mut without = build_conditional_dibom(3, 0, 2, s.pre_depth, 0, seeds.model)?;
            let with_trace = train_conditional(&mut with, &train_set, Some(&test_set), &cfg)?;
            let without_trace =
                train_conditional(&mut without, &train_set, Some(&test_set), &cfg)?;
            let run = TeleportRun {
                seed,
                branch_params_with: with.branch_params(),
                branch_params_without: without.branch_params(),
                final_with: with_trace.final_train_loss().unwrap_or(f64::NAN),
                final_without: without_trace.final_train_loss().unwrap_or(f64::NAN),
            };
            let traces = vec![
                TraceRun {
                    seed,
                    label: "with_control".into(),
                    trace: with_trace,
                },
                TraceRun {
                    seed,
                    label: "without_control".into(),
                    trace: without_trace,
                },
            ];
            Ok((run, traces))
        })
        .collect::<Result<_, CliError>>()?;
    let (runs, traces): (Vec<_>, Vec<_>) = per_seed.into_iter().unzip();
    let traces: Vec<TraceRun> = traces.into_iter().flatten().collect();
    write_traces(out, "teleport", &traces)?;
    write_meta(out, "teleport", config, &runs)?;
    Ok(TeleportOutcome { runs, traces })
}

#[derive(Clone, Debug, Serialize)]
pub struct CorruptionRow {
    pub ratio: f64,
    pub depth: usize,
    pub seed: u64,
    pub final_train_loss: f64,
    pub final_test_loss: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorruptionOutcome {
    pub rows: Vec<CorruptionRow>,
    /// `(ratio, mean clean-test loss)` over seeds.
    pub means: Vec<(f64, f64)>,
    pub layer_rows: Vec<CorruptionRow>,
}

fn corruption_run(
    s: &CorruptionSettings,
    seed: u64,
    ratio: f64,
    depth: usize,
) -> Result<(CorruptionRow, TrainTrace), CliError> {
    let seeds = RunSeeds::new(seed);
    let (train_set, test_set) = prepare_data(&s.data, &seeds)?;
    let train_set = corrupt(
        &train_set,
        &CorruptionConfig {
            ratio,
            seed: seeds.corruption,
        },
    )?;
    let mut model = build_model(s.model.kind, s.data.n, depth, seeds.model)?;
    let trace = train(
        &mut model.network,
        &train_set,
        Some(&test_set),
        &seeded(&s.training, &seeds),
    )?;
    let row = CorruptionRow {
        ratio,
        depth,
        seed,
        final_train_loss: trace.final_train_loss().unwrap_or(f64::NAN),
        final_test_loss: trace.final_test_loss().unwrap_or(f64::NAN),
    };
    Ok((row, trace))
}

pub fn run_corruption(
    config: &ExperimentConfig,
    s: &CorruptionSettings,
    out: &Path,
) -> Result<CorruptionOutcome, CliError> {
    let jobs: Vec<(f64, u64)> = s
        .ratios
        .iter()
        .flat_map(|&r| s.seeds.iter().map(move |&seed| (r, seed)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(ratio, seed)| corruption_run(s, seed, ratio, s.model.depth))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(&["ratio", "seed", "final_train_loss", "final_test_loss"]);
    let mut rows = Vec::with_capacity(results.len());
    for (ratio_index, chunk) in results.chunks(s.seeds.len()).enumerate() {
        for (row, trace) in chunk {
            csv.row(&[
                num(row.ratio),
                row.seed.to_string(),
                num(row.final_train_loss),
                num(row.final_test_loss),
            ]);
            let name = format!("corruption_ratio{ratio_index}_seed{}.csv", row.seed);
            crate::output::write_atomic(&out.join(name), trace.to_csv().as_bytes())?;
            rows.push(row.clone());
        }
    }
    csv.write(&out.join("corruption.csv"))?;
    let means: Vec<(f64, f64)> = s
        .ratios
        .iter()
        .map(|&r| {
            let losses: Vec<f64> = rows
                .iter()
                .filter(|row| row.ratio == r)
                .map(|row| row.final_test_loss)
                .collect();
            (r, losses.iter().sum::<f64>() / losses.len() as f64)
        })
        .collect();
    let mut summary = Csv::new(&["ratio", "mean_test_loss"]);
    for (r, m) in &means {
        summary.row(&[num(*r), num(*m)]);
    }
    summary.write(&out.join("corruption_summary.csv"))?;
    let mut layer_rows = Vec::new();
    if let Some(sweep) = &s.layer_sweep {
        let jobs: Vec<(usize, u64)> = sweep
            .depths
            .iter()
            .flat_map(|&d| s.seeds.iter().map(move |&seed| (d, seed)))
            .collect();
        layer_rows = jobs
            .par_iter()
            .map(|&(depth, seed)| corruption_run(s, seed, sweep.ratio, depth).map(|r| r.0))
            .collect::<Result<Vec<_>, _>>()?;
        let mut csv = Csv::new(&["depth", "seed", "final_test_loss"]);
        for row in &layer_rows {
            csv.row(&[row.depth.to_string(), row.seed.to_string(), num(row.final_test_loss)]);
        }
        csv.write(&out.join("corruption_layers.csv"))?;
    }
    let outcome = CorruptionOutcome {
        rows,
        means,
        layer_rows,
    };
    write_meta(out, "corruption-sweep", config, &outcome)?;
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrenRow {
    pub n: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub final_loss: f64,
    /// Global loss of the trained model on the training set.
    pub final_global_loss: f64,
    pub iterations_to_threshold: Option<usize>,
    pub plateau_length: usize,
}

/// Flat-run detection: `|Δloss|` below this while the loss exceeds
/// [`PLATEAU_FLOOR`].
pub const PLATEAU_DELTA: f64 = 1e-5;
pub const PLATEAU_FLOOR: f64 = 0.1;

pub fn run_barren(
    config: &ExperimentConfig,
    s: &BarrenSettings,
    out: &Path,
) -> Result<Vec<BarrenRow>, CliError> {
    let jobs: Vec<(usize, u64, LossKind)> = s
        .ns
        .iter()
        .flat_map(|&n| {
            s.seeds
                .iter()
                .flat_map(move |&seed| s.losses.iter().map(move |&kind| (n, seed, kind)))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(n, seed, kind)| {
            let seeds = RunSeeds::new(seed);
            let full = gen_dataset_with_inputs(
                s.intrinsic,
                n,
                s.count,
                InputKind::ProductForm,
                seeds.data,
            )?;
            let (train_set, _) = split(&full, s.train_fraction, seeds.split)?;
            let mut network = Network::Circuit(build_dibom(n, s.depth, seeds.model)?);
            let cfg = TrainingConfig {
                loss: kind,
                ..seeded(&s.training, &seeds)
            };
            let trace = train(&mut network, &train_set, None, &cfg)?;
            let row = BarrenRow {
                n,
                loss: kind,
                seed,
                final_loss: trace.final_train_loss().unwrap_or(f64::NAN),
                final_global_loss: loss(&network, &train_set.samples, LossKind::Global)?,
                iterations_to_threshold: trace.iterations_to(s.threshold),
                plateau_length: trace.plateau_length(PLATEAU_DELTA, PLATEAU_FLOOR),
            };
            Ok((row, trace))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = Csv::new(&[
        "n",
        "loss",
        "seed",
        "final_loss",
        "final_global_loss",
        "iterations_to_threshold",
        "plateau_length",
    ]);
    let mut rows = Vec::with_capacity(results.len());
    for (row, trace) in results {
        csv.row(&[
            row.n.to_string(),
            loss_label(row.loss).into(),
            row.seed.to_string(),
            num(row.final_loss),
            num(row.final_global_loss),
            opt_int(row.iterations_to_threshold),
            row.plateau_length.to_string(),
        ]);
        let name = format!("barren_n{}_{}_seed{}.csv", row.n, loss_label(row.loss), row.seed);
        crate::output::write_atomic(&out.join(name), trace.to_csv().as_bytes())?;
        rows.push(row);
    }
    csv.write(&out.join("barren_summary.csv"))?;
    write_meta(out, "barren", config, &rows)?;
    Ok(rows)
}

/// Results of any experiment.
#[derive(Clone, Debug)]
pub enum Outcome {
    Train(Vec<TraceRun>),
    Compare(CompareOutcome),
    Fbe(Vec<FbeRow>),
    Landscape(Landscape),
    Teleport(TeleportOutcome),
    Corruption(CorruptionOutcome),
    Params(Vec<ParamRow>),
    Barren(Vec<BarrenRow>),
}

/// Runs the configured experiment into `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    Ok(match &config.experiment {
        Experiment::Train(s) => Outcome::Train(run_train(config, s, out)?),
        Experiment::Compare(s) => Outcome::Compare(run_compare(config, s, out)?),
        Experiment::Fbe(s) => Outcome::Fbe(run_fbe(config, s, out)?),
        Experiment::Landscape(s) => Outcome::Landscape(run_landscape(config, s, out)?),
        Experiment::Teleport(s) => Outcome::Teleport(run_teleport(config, s, out)?),
        Experiment::CorruptionSweep(s) => Outcome::Corruption(run_corruption(config, s, out)?),
        Experiment::ParamsTable(s) => Outcome::Params(run_params(config, s, out)?),
        Experiment::Barren(s) => Outcome::Barren(run_barren(config, s, out)?),
    })
}

/// Text of the CSV summarizing final losses of trace runs.
pub fn final_losses_csv(runs: &[TraceRun]) -> String {
    let mut csv = Csv::new(&["label", "seed", "final_train_loss", "final_test_loss"]);
    for r in runs {
        csv.row(&[
            r.label.clone(),
            r.seed.to_string(),
            num(r.trace.final_train_loss().unwrap_or(f64::NAN)),
            opt_num(r.trace.final_test_loss()),
        ]);
    }
    csv.as_str().to_string()
}
