use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gradient::layer_gradients;
use super::kupdate::{k_update, GradientUpdate};
use super::loss::{loss, LossKind};
use crate::datagen::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::linalg::RngSeed;
use crate::network::{ConditionalModel, LayerId, Network};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Every trainable layer updated in each step.
    #[default]
    Simultaneous,
    /// One layer per step.
    LayerByLayer,
    /// Momentum iteration on the flat parameter vector with finite-difference
    /// gradients.
    Nesterov,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Layers 1..L in order, repeating.
    #[default]
    RoundRobin,
    /// A uniformly drawn layer each step.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub method: Method,
    pub loss: LossKind,
    pub seed: RngSeed,
    pub convergence_tol: f64,
    /// Step size η of the Nesterov iteration.
    pub learning_rate: f64,
    /// Finite-difference step of the Nesterov gradients.
    pub fd_step: f64,
    pub schedule: Schedule,
    pub max_halvings: usize,
    /// Record wall-clock time per iteration; off keeps traces byte-identical.
    pub record_timing: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            lambda: 0.5,
            epsilon: 0.1,
            max_iters: 1000,
            method: Method::Simultaneous,
            loss: LossKind::Global,
            seed: RngSeed(0),
            convergence_tol: 1e-6,
            learning_rate: 0.1,
            fd_step: 1e-6,
            schedule: Schedule::RoundRobin,
            max_halvings: 20,
            record_timing: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("convergence_tol", self.convergence_tol),
            ("learning_rate", self.learning_rate),
            ("fd_step", self.fd_step),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.train_loss)
    }

    pub fn final_test_loss(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.test_loss)
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.train_loss).collect()
    }

    /// First iteration whose train loss is below `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.train_loss < threshold)
            .map(|r| r.iter)
    }

    /// Longest run of consecutive iterations with `|Δloss| < delta` while the
    /// loss stays above `floor`.
    pub fn plateau_length(&self, delta: f64, floor: f64) -> usize {
        let mut best = 0;
        let mut run = 0;
        for w in self.records.windows(2) {
            if (w[1].train_loss - w[0].train_loss).abs() < delta && w[1].train_loss > floor {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best
    }

    /// CSV with header `iter,train_loss,test_loss,wall_ms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,train_loss,test_loss,wall_ms\n");
        for r in &self.records {
            let test = r.test_loss.map(|t| format!("{t:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:e},{},{:.3}\n",
                r.iter, r.train_loss, test, r.wall_ms
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub loss: f64,
    pub accepted: bool,
    /// Step scale that was accepted, or the last one tried.
    pub step: f64,
    pub halvings: usize,
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Generators for the listed layers at the current parameters.
pub fn compute_updates(
    network: &Network,
    samples: &[Sample],
    config: &TrainingConfig,
    layers: &[LayerId],
) -> Result<Vec<(LayerId, GradientUpdate)>> {
    let gradients = layer_gradients(network, samples, config.loss)?;
    let segments = network.segments();
    let mut out = Vec::with_capacity(layers.len());
    for &id in layers {
        let circuit = segments[id.segment];
        let g = &gradients[id.segment][id.layer];
        if let Some(update) = k_update(&circuit.layers[id.layer], g, circuit.n, config.lambda)? {
            out.push((id, update));
        }
    }
    Ok(out)
}

fn apply_updates(
    network: &Network,
    updates: &[(LayerId, GradientUpdate)],
    eps: f64,
) -> Result<Network> {
    let mut next = network.clone();
    for (id, update) in updates {
        let layer = update.apply(network.layer(*id), eps)?;
        *next.layer_mut(*id) = layer;
    }
    Ok(next)
}

/// One ascent step on the listed layers: `U ← exp(iεK)U`, accepted only if
/// the objective increases, with up to `max_halvings` halvings of `ε`.
pub fn train_step_layers(
    network: &mut Network,
    samples: &[Sample],
    config: &TrainingConfig,
    layers: &[LayerId],
) -> Result<StepReport> {
    let current = finite(loss(network, samples, config.loss)?, "loss")?;
    let updates = compute_updates(network, samples, config, layers)?;
    for (_, update) in &updates {
        if update.generator.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("layer generator".into()));
        }
    }
    let mut eps = config.epsilon;
    if !updates.is_empty() {
        for halvings in 0..=config.max_halvings {
            let candidate = apply_updates(network, &updates, eps)?;
            let trial = finite(loss(&candidate, samples, config.loss)?, "loss")?;
            if trial < current {
                *network = candidate;
                return Ok(StepReport {
                    loss: trial,
                    accepted: true,
                    step: eps,
                    halvings,
                });
            }
            eps /= 2.0;
        }
    }
    Ok(StepReport {
        loss: current,
        accepted: false,
        step: eps,
        halvings: config.max_halvings,
    })
}

/// Simultaneous update of every trainable layer.
pub fn train_step(
    network: &mut Network,
    samples: &[Sample],
    config: &TrainingConfig,
) -> Result<StepReport> {
    let layers = network.trainable_layers();
    train_step_layers(network, samples, config, &layers)
}

/// Nesterov iteration state over the trainable coordinates.
struct Nesterov {
    coords: Vec<usize>,
    previous: Vec<f64>,
    k: usize,
}

impl Nesterov {
    fn new(network: &Network) -> Self {
        let coords = network.trainable_param_indices();
        let params = network.params();
        Nesterov {
            previous: coords.iter().map(|&c| params[c]).collect(),
            coords,
            k: 1,
        }
    }

    fn gradient(
        &self,
        network: &Network,
        point: &[f64],
        samples: &[Sample],
        config: &TrainingConfig,
    ) -> Result<Vec<f64>> {
        let eval = |values: &[f64]| -> Result<f64> {
            let mut net = network.clone();
            let mut params = net.params();
            for (&c, &v) in self.coords.iter().zip(values) {
                params[c] = v;
            }
            net.set_params(&params)?;
            finite(loss(&net, samples, config.loss)?, "loss")
        };
        let here = eval(point)?;
        (0..point.len())
            .map(|i| {
                let mut shifted = point.to_vec();
                shifted[i] -= config.fd_step;
                Ok((here - eval(&shifted)?) / config.fd_step)
            })
            .collect()
    }

    fn step(
        &mut self,
        network: &mut Network,
        samples: &[Sample],
        config: &TrainingConfig,
    ) -> Result<StepReport> {
        let params = network.params();
        let current_y: Vec<f64> = self.coords.iter().map(|&c| params[c]).collect();
        let current = finite(loss(network, samples, config.loss)?, "loss")?;
        let with = |values: &[f64]| -> Result<Network> {
            let mut net = network.clone();
            let mut p = params.clone();
            for (&c, &v) in self.coords.iter().zip(values) {
                p[c] = v;
            }
            net.set_params(&p)?;
            Ok(net)
        };
        let momentum = (self.k as f64 - 1.0) / (self.k as f64 + 2.0);
        let x: Vec<f64> = current_y
            .iter()
            .zip(&self.previous)
            .map(|(y, prev)| y + momentum * (y - prev))
            .collect();
        let grad = self.gradient(network, &x, samples, config)?;
        let y_next: Vec<f64> = x
            .iter()
            .zip(&grad)
            .map(|(x, g)| x - config.learning_rate * g)
            .collect();
        let candidate = with(&y_next)?;
        let trial = finite(loss(&candidate, samples, config.loss)?, "loss")?;
        if trial < current {
            self.previous = current_y;
            self.k += 1;
            *network = candidate;
            return Ok(StepReport {
                loss: trial,
                accepted: true,
                step: config.learning_rate,
                halvings: 0,
            });
        }
        // Momentum restart: plain gradient steps from y with halving η.
        self.k = 1;
        self.previous = current_y.clone();
        let grad = self.gradient(network, &current_y, samples, config)?;
        let mut eta = config.learning_rate;
        for halvings in 0..=config.max_halvings {
            let y_next: Vec<f64> = current_y
                .iter()
                .zip(&grad)
                .map(|(y, g)| y - eta * g)
                .collect();
            let candidate = with(&y_next)?;
            let trial = finite(loss(&candidate, samples, config.loss)?, "loss")?;
            if trial < current {
                *network = candidate;
                return Ok(StepReport {
                    loss: trial,
                    accepted: true,
                    step: eta,
                    halvings,
                });
            }
            eta /= 2.0;
        }
        Ok(StepReport {
            loss: current,
            accepted: false,
            step: eta,
            halvings: config.max_halvings,
        })
    }
}

fn pick_layer(
    trainable: &[LayerId],
    step: usize,
    schedule: Schedule,
    rng: &mut ChaCha8Rng,
) -> Vec<LayerId> {
    if trainable.is_empty() {
        return Vec::new();
    }
    let index = match schedule {
        Schedule::RoundRobin => step % trainable.len(),
        Schedule::Random => rng.random_range(0..trainable.len()),
    };
    vec![trainable[index]]
}

/// Trains until `max_iters` steps or train loss below `convergence_tol`.
/// Record 0 holds the initial losses.
pub fn train(
    network: &mut Network,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainingConfig,
) -> Result<TrainTrace> {
    config.validate()?;
    network.validate()?;
    let samples = &train_set.samples;
    let test_loss = |net: &Network| -> Result<Option<f64>> {
        test_set
            .map(|t| loss(net, &t.samples, config.loss).and_then(|v| finite(v, "test loss")))
            .transpose()
    };
    let start = Instant::now();
    let wall = |start: &Instant| {
        if config.record_timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };
    let mut trace = TrainTrace::default();
    let mut current = finite(loss(network, samples, config.loss)?, "loss")?;
    trace.records.push(TraceRecord {
        iter: 0,
        train_loss: current,
        test_loss: test_loss(network)?,
        wall_ms: wall(&start),
    });
    let trainable = network.trainable_layers();
    let mut rng = config.seed.rng();
    let mut nesterov = Nesterov::new(network);
    for iter in 1..=config.max_iters {
        if current < config.convergence_tol {
            break;
        }
        let report = match config.method {
            Method::Simultaneous => train_step_layers(network, samples, config, &trainable)?,
            Method::LayerByLayer => {
                let layers = pick_layer(&trainable, iter - 1, config.schedule, &mut rng);
                train_step_layers(network, samples, config, &layers)?
            }
            Method::Nesterov => nesterov.step(network, samples, config)?,
        };
        current = report.loss;
        trace.records.push(TraceRecord {
            iter,
            train_loss: current,
            test_loss: test_loss(network)?,
            wall_ms: wall(&start),
        });
    }
    Ok(trace)
}

/// Training of a measure-and-correct model; pre-measurement and branch layers
/// are updated through the measurement channel.
pub fn train_conditional(
    model: &mut ConditionalModel,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainingConfig,
) -> Result<TrainTrace> {
    let mut network = Network::Conditional(model.clone());
    let trace = train(&mut network, train_set, test_set, config)?;
    if let Network::Conditional(trained) = network {
        *model = trained;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_dataset, split, IntrinsicSpec};
    use crate::gates::{GeneralizedCzLayer, Layer};
    use crate::network::{build_dibom, teleport_model, Circuit};
    use crate::training::gradient::finite_diff_grad_central;

    fn dataset(seed: u64) -> (Dataset, Dataset) {
        let data = gen_dataset(IntrinsicSpec::SingleQubitTimesGcz, 2, 20, RngSeed(seed)).unwrap();
        split(&data, 0.5, RngSeed(seed + 1)).unwrap()
    }

    fn config(iters: usize) -> TrainingConfig {
        TrainingConfig {
            max_iters: iters,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn loss_never_increases() {
        let (train_set, test_set) = dataset(1);
        for method in [Method::Simultaneous, Method::LayerByLayer, Method::Nesterov] {
            let mut net = Network::Circuit(build_dibom(2, 4, RngSeed(3)).unwrap());
            let cfg = TrainingConfig { method, ..config(25) };
            let trace = train(&mut net, &train_set, Some(&test_set), &cfg).unwrap();
            let losses = trace.train_losses();
            assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{method:?}");
            assert!(losses.last().unwrap() < &losses[0], "{method:?}");
            assert!(losses.iter().all(|l| (0.0..=1.0 + 1e-9).contains(l)));
        }
    }

    #[test]
    fn zero_layer_model_gives_constant_trace() {
        let (train_set, _) = dataset(2);
        let mut net = Network::Circuit(Circuit::empty(2));
        let trace = train(&mut net, &train_set, None, &config(5)).unwrap();
        assert_eq!(trace.records.len(), 6);
        let first = trace.records[0].train_loss;
        assert!(trace.records.iter().all(|r| r.train_loss == first));
    }

    #[test]
    fn optimum_is_stationary() {
        let data = gen_dataset(IntrinsicSpec::GczLayer, 2, 6, RngSeed(4)).unwrap();
        let v = data.provenance.intrinsic.clone().unwrap();
        let beta = -(v[(3, 3)].arg()) / std::f64::consts::PI;
        let layer = Layer::GeneralizedCz(GeneralizedCzLayer { betas: vec![beta] });
        let mut net = Network::Circuit(Circuit::new(2, vec![layer]).unwrap());
        let before = net.clone();
        let report = train_step(&mut net, &data.samples, &TrainingConfig::default()).unwrap();
        assert!(report.loss < 1e-12);
        assert!(!report.accepted);
        assert_eq!(net, before);
    }

    #[test]
    fn single_parameter_step_follows_gradient_sign() {
        let data = gen_dataset(IntrinsicSpec::GczLayer, 2, 6, RngSeed(5)).unwrap();
        for beta in [0.1, 0.4, 0.8, 1.3] {
            let layer = Layer::GeneralizedCz(GeneralizedCzLayer { betas: vec![beta] });
            let mut net = Network::Circuit(Circuit::new(2, vec![layer]).unwrap());
            let slope =
                finite_diff_grad_central(&net, &data.samples, LossKind::Global, 0, 1e-6).unwrap();
            let report = train_step(&mut net, &data.samples, &TrainingConfig::default()).unwrap();
            if report.accepted && slope.abs() > 1e-8 {
                let delta = net.params()[0] - beta;
                assert!(delta * slope < 0.0, "beta {beta}: delta {delta}, slope {slope}");
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_traces() {
        let (train_set, test_set) = dataset(6);
        let run = |method| {
            let mut net = Network::Circuit(build_dibom(2, 4, RngSeed(7)).unwrap());
            let cfg = TrainingConfig {
                method,
                schedule: Schedule::Random,
                ..config(10)
            };
            train(&mut net, &train_set, Some(&test_set), &cfg).unwrap().to_csv()
        };
        for method in [Method::Simultaneous, Method::LayerByLayer, Method::Nesterov] {
            assert_eq!(run(method), run(method));
        }
    }

    #[test]
    fn csv_layout() {
        let (train_set, _) = dataset(8);
        let mut net = Network::Circuit(build_dibom(2, 2, RngSeed(9)).unwrap());
        let csv = train(&mut net, &train_set, None, &config(2)).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iter,train_loss,test_loss,wall_ms");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[1].contains(",,"));
    }

    #[test]
    fn plateau_metrics() {
        let records = [0.9, 0.9, 0.9, 0.5, 0.5, 0.05, 0.05, 0.05, 0.05]
            .iter()
            .enumerate()
            .map(|(iter, &train_loss)| TraceRecord {
                iter,
                train_loss,
                test_loss: None,
                wall_ms: 0.0,
            })
            .collect();
        let trace = TrainTrace { records };
        assert_eq!(trace.plateau_length(1e-5, 0.1), 2);
        assert_eq!(trace.iterations_to(0.1), Some(5));
        assert_eq!(trace.iterations_to(0.01), None);
    }

    #[test]
    fn frozen_teleport_pre_circuit_stays_optimal() {
        let data = crate::datagen::gen_dataset(IntrinsicSpec::TeleportationTask, 3, 8, RngSeed(10))
            .unwrap();
        let mut model = teleport_model();
        for b in 0..model.branches.len() {
            for l in 0..model.branches[b].depth() {
                model.branches[b].freeze(l);
            }
        }
        let trace = train_conditional(&mut model, &data, None, &config(5)).unwrap();
        assert!(trace.records.iter().all(|r| r.train_loss < 1e-6));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (train_set, _) = dataset(11);
        let mut net = Network::Circuit(build_dibom(2, 2, RngSeed(1)).unwrap());
        let cfg = TrainingConfig {
            lambda: 0.0,
            ..TrainingConfig::default()
        };
        assert!(train(&mut net, &train_set, None, &cfg).is_err());
        let parsed: std::result::Result<TrainingConfig, _> =
            serde_json::from_str(r#"{"lambda": 0.5, "bogus": 1}"#);
        assert!(parsed.is_err());
    }
}
