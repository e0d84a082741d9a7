use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{Executor, PairSource, StackSource};
use crate::error::{invalid, numeric_fault, Error, Result};
use crate::metrics::{compute_eer, ScoreRecord};
use crate::model::{
    forward, init_params, loss, loss_and_grad, ClassWeights, Label, LossBreakdown, ModelParams, ModelTopology,
};
use crate::numerics::{adam_step, AdamConfig, AdamState};
use crate::rng;

const SHUFFLE_STREAM: u64 = 0x7368_7566;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeightMode {
    /// `w_c = N / (2·N_c)` from the training labels.
    Balanced,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_iterations: u64,
    pub seed: u64,
    pub class_weights: ClassWeightMode,
    /// Dev evaluation (and best-checkpoint selection) period, in iterations.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lambda: 0.25,
            learning_rate: adam.learning_rate,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            batch_size: 24,
            max_iterations: 100_000,
            seed: 0,
            class_weights: ClassWeightMode::Balanced,
            checkpoint_every: 1_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid!("{name} must be positive, got {v}"))
            }
        };
        positive("learning rate", self.learning_rate)?;
        positive("epsilon", self.epsilon)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(invalid!("weight decay must be non-negative"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(invalid!("Adam betas must lie in [0, 1)"));
        }
        if self.batch_size == 0 || self.checkpoint_every == 0 || self.max_iterations == 0 {
            return Err(invalid!("batch size, checkpoint period and iteration budget must be positive"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }
}

/// Position in the seeded epoch permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShuffleState {
    pub epoch: u64,
    pub cursor: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub adam: AdamState,
    pub iteration: u64,
    pub shuffle: ShuffleState,
    pub fingerprint: String,
    /// Dev EER at save time, if the dev set was evaluated.
    pub dev_eer: Option<f64>,
}

/// Batch-mean losses of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLoss {
    /// Iterations completed, counting this one.
    pub iteration: u64,
    pub cls: f64,
    pub cons: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub iteration: u64,
    pub cls: f64,
    pub cons: f64,
    pub total: f64,
    pub dev_eer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub log: Vec<LogEntry>,
    pub history: Vec<IterationLoss>,
}

fn epoch_order(seed: u64, epoch: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(&[seed, SHUFFLE_STREAM, epoch]));
    order
}

/// Mean loss and gradient over the utterances at `indices`.
///
/// Per-utterance results are summed in ascending index order whatever the
/// order of `indices`.
pub fn batch_loss_and_grad<S, E>(
    params: &ModelParams,
    source: &S,
    indices: &[usize],
    lambda: f64,
    weights: ClassWeights,
    exec: &E,
) -> Result<(LossBreakdown, Vec<f64>)>
where
    S: PairSource + ?Sized,
    E: Executor,
{
    if indices.is_empty() {
        return Err(invalid!("empty batch"));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    let results = exec.map(sorted.len(), |i| {
        let idx = sorted[i];
        let (clean, aug) = source.pair(idx)?;
        loss_and_grad(&clean, &aug, source.label(idx), params, lambda, weights)
    });
    let mut grad = vec![0.0; params.len()];
    let (mut cls, mut cons, mut total) = (0.0, 0.0, 0.0);
    for r in results {
        let (l, g) = r?;
        cls += l.cls;
        cons += l.cons;
        total += l.total;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let n = sorted.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    Ok((LossBreakdown { total: total / n, cls: cls / n, cons: cons / n, lambda }, grad))
}

/// Scores every stack of `source`, in source order.
pub fn evaluate<S, E>(params: &ModelParams, source: &S, exec: &E) -> Result<Vec<ScoreRecord>>
where
    S: StackSource + ?Sized,
    E: Executor,
{
    exec.map(source.len(), |i| {
        let stack = source.stack(i)?;
        let trace = forward(&stack, params, false)?;
        ScoreRecord::new(stack.utt_id, stack.dataset_id, stack.label, stack.view_id, trace.posterior)
    })
    .into_iter()
    .collect()
}

/// Mean (over utterances) of the gate consistency term between each pair's
/// clean and augmented views.
pub fn mean_gate_divergence<S, E>(params: &ModelParams, source: &S, exec: &E) -> Result<f64>
where
    S: PairSource + ?Sized,
    E: Executor,
{
    if source.is_empty() {
        return Err(invalid!("no utterances"));
    }
    let per_utt: Vec<Result<f64>> = exec.map(source.len(), |i| {
        let (clean, aug) = source.pair(i)?;
        let tc = forward(&clean, params, false)?;
        let ta = forward(&aug, params, false)?;
        let label = match source.label(i) {
            Label::Unlabeled => Label::BonaFide,
            l => l,
        };
        Ok(loss(&tc, &ta, label, 0.0, ClassWeights::default())?.cons)
    });
    let mut sum = 0.0;
    for v in per_utt {
        sum += v?;
    }
    Ok(sum / source.len() as f64)
}

fn dev_eer<S, E>(params: &ModelParams, dev: &S, exec: &E) -> Result<f64>
where
    S: StackSource + ?Sized,
    E: Executor,
{
    Ok(compute_eer(&evaluate(params, dev, exec)?)?.eer)
}

pub struct Trainer {
    config: TrainConfig,
    params: ModelParams,
    adam: AdamState,
    iteration: u64,
    shuffle: ShuffleState,
    fingerprint: String,
    best: Option<Checkpoint>,
}

impl Trainer {
    pub fn new(
        config: TrainConfig,
        topology: &ModelTopology,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        config.validate()?;
        let params = init_params(topology, config.seed);
        let adam = AdamState::new(config.adam(), params.len());
        Ok(Self {
            config,
            params,
            adam,
            iteration: 0,
            shuffle: ShuffleState::default(),
            fingerprint: fingerprint.into(),
            best: None,
        })
    }

    /// Continues from `last`; `best` is the best checkpoint seen so far.
    pub fn resume(config: TrainConfig, last: Checkpoint, best: Option<Checkpoint>) -> Result<Self> {
        config.validate()?;
        if last.adam.first_moment.len() != last.params.len() {
            return Err(invalid!("checkpoint optimizer state does not match its parameters"));
        }
        let mut adam = last.adam;
        adam.config = config.adam();
        Ok(Self {
            config,
            params: last.params,
            adam,
            iteration: last.iteration,
            shuffle: last.shuffle,
            fingerprint: last.fingerprint,
            best,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn snapshot(&self, dev_eer: Option<f64>) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            iteration: self.iteration,
            shuffle: self.shuffle,
            fingerprint: self.fingerprint.clone(),
            dev_eer,
        }
    }

    fn class_weights<S: PairSource + ?Sized>(&self, train: &S) -> Result<ClassWeights> {
        match self.config.class_weights {
            ClassWeightMode::Uniform => Ok(ClassWeights::default()),
            ClassWeightMode::Balanced => {
                let spoof = (0..train.len()).filter(|&i| train.label(i) == Label::Spoof).count();
                let bona = (0..train.len()).filter(|&i| train.label(i) == Label::BonaFide).count();
                ClassWeights::balanced(bona, spoof)
            }
        }
    }

    /// Indices of the next mini-batch. Batches never straddle epochs; the
    /// last batch of an epoch may be short.
    fn next_batch(&mut self, n: usize) -> Vec<usize> {
        let order = epoch_order(self.config.seed, self.shuffle.epoch, n);
        let start = self.shuffle.cursor as usize;
        let end = (start + self.config.batch_size).min(n);
        let batch = order[start..end].to_vec();
        if end == n {
            self.shuffle = ShuffleState { epoch: self.shuffle.epoch + 1, cursor: 0 };
        } else {
            self.shuffle.cursor = end as u64;
        }
        batch
    }

    /// One optimizer update.
    pub fn step<S, E>(&mut self, train: &S, weights: ClassWeights, exec: &E) -> Result<IterationLoss>
    where
        S: PairSource + ?Sized,
        E: Executor,
    {
        if train.is_empty() {
            return Err(invalid!("empty training set"));
        }
        let saved = self.shuffle;
        let batch = self.next_batch(train.len());
        let result = batch_loss_and_grad(&self.params, train, &batch, self.config.lambda, weights, exec)
            .and_then(|(l, g)| {
                if !l.total.is_finite() {
                    return Err(Error::NumericFault(String::new()));
                }
                adam_step(self.params.values_mut(), &g, &mut self.adam)?;
                Ok(l)
            });
        let loss = match result {
            Ok(l) => l,
            Err(e) => {
                self.shuffle = saved;
                let mut ids = Vec::with_capacity(batch.len());
                for &i in &batch {
                    if let Ok((c, _)) = train.pair(i) {
                        ids.push(c.utt_id);
                    }
                }
                return Err(match e {
                    Error::NumericFault(_) => numeric_fault!(
                        "non-finite loss or gradient at iteration {} (utterances {})",
                        self.iteration + 1,
                        ids.join(", ")
                    ),
                    other => other,
                });
            }
        };
        self.iteration += 1;
        Ok(IterationLoss { iteration: self.iteration, cls: loss.cls, cons: loss.cons, total: loss.total })
    }

    /// Trains until `config.max_iterations`, evaluating the dev set every
    /// `checkpoint_every` iterations and keeping the checkpoint with the
    /// lowest dev EER (ties keep the earlier one).
    pub fn run<S, D, E>(&mut self, train: &S, dev: &D, exec: &E) -> Result<TrainOutcome>
    where
        S: PairSource + ?Sized,
        D: StackSource + ?Sized,
        E: Executor,
    {
        let weights = self.class_weights(train)?;
        let mut log = Vec::new();
        let mut history = Vec::new();
        while self.iteration < self.config.max_iterations {
            let it = self.step(train, weights, exec)?;
            history.push(it);
            if it.iteration % self.config.checkpoint_every == 0 || it.iteration == self.config.max_iterations
            {
                let eer = dev_eer(&self.params, dev, exec)?;
                log.push(LogEntry {
                    iteration: it.iteration,
                    cls: it.cls,
                    cons: it.cons,
                    total: it.total,
                    dev_eer: eer,
                });
                let improves = match &self.best {
                    Some(b) => b.dev_eer.is_none_or(|best| eer < best),
                    None => true,
                };
                if improves {
                    self.best = Some(self.snapshot(Some(eer)));
                }
            }
        }
        let last_eer = log.last().filter(|e| e.iteration == self.iteration).map(|e| e.dev_eer);
        let last = self.snapshot(last_eer);
        let best = self.best.clone().unwrap_or_else(|| last.clone());
        Ok(TrainOutcome { best, last, log, history })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_topology;
    use crate::synth::{synth_utterance, SynthSpec};
    use crate::train::{CleanViews, PairVec, Serial};

    fn spec() -> SynthSpec {
        SynthSpec {
            layers: 4,
            frames: 6,
            dim: 4,
            artifact_layers: alloc::vec![2],
            artifact_gain: 1.0,
            ..SynthSpec::default()
        }
    }

    fn data(n: u64, offset: u64) -> PairVec {
        let s = spec();
        PairVec(
            (0..n)
                .map(|i| {
                    let label = if i % 2 == 0 { Label::BonaFide } else { Label::Spoof };
                    synth_utterance(&s, offset + i, label).unwrap()
                })
                .collect(),
        )
    }

    fn config() -> TrainConfig {
        TrainConfig {
            learning_rate: 1e-2,
            batch_size: 5,
            max_iterations: 12,
            checkpoint_every: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn epochs_cover_every_utterance_once() {
        let topo = build_topology(4, 4).unwrap();
        let mut t = Trainer::new(config(), &topo, "fp").unwrap();
        let mut seen = Vec::new();
        for _ in 0..3 {
            seen.extend(t.next_batch(13));
        }
        assert_eq!(t.shuffle, ShuffleState { epoch: 1, cursor: 0 });
        seen.sort_unstable();
        assert_eq!(seen, (0..13).collect::<Vec<_>>());
        assert_ne!(epoch_order(0, 0, 13), epoch_order(0, 1, 13));
    }

    #[test]
    fn reducer_ignores_batch_order() {
        let train = data(6, 0);
        let params = init_params(&build_topology(4, 4).unwrap(), 3);
        let w = ClassWeights::default();
        let a = batch_loss_and_grad(&params, &train, &[4, 1, 3], 0.25, w, &Serial).unwrap();
        let b = batch_loss_and_grad(&params, &train, &[1, 3, 4], 0.25, w, &Serial).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn run_logs_every_period_and_keeps_the_best() {
        let train = data(20, 0);
        let dev = data(10, 100);
        let topo = build_topology(4, 4).unwrap();
        let mut t = Trainer::new(config(), &topo, "fp").unwrap();
        let out = t.run(&train, &CleanViews(&dev), &Serial).unwrap();
        let its: Vec<u64> = out.log.iter().map(|e| e.iteration).collect();
        assert_eq!(its, alloc::vec![4, 8, 12]);
        assert_eq!(out.history.len(), 12);
        assert_eq!(out.last.iteration, 12);
        let min = out.log.iter().map(|e| e.dev_eer).fold(f64::INFINITY, f64::min);
        let first_min = out.log.iter().find(|e| e.dev_eer == min).unwrap();
        assert_eq!(out.best.dev_eer, Some(min));
        assert_eq!(out.best.iteration, first_min.iteration);
    }

    #[test]
    fn lambda_only_enters_through_consistency() {
        let train = data(10, 0);
        let dev = data(6, 50);
        let topo = build_topology(4, 4).unwrap();
        let cfg0 = TrainConfig { lambda: 0.0, max_iterations: 2, ..config() };
        let cfg1 = TrainConfig { lambda: 0.25, max_iterations: 2, ..config() };
        let a = Trainer::new(cfg0, &topo, "fp").unwrap().run(&train, &CleanViews(&dev), &Serial).unwrap();
        let b = Trainer::new(cfg1, &topo, "fp").unwrap().run(&train, &CleanViews(&dev), &Serial).unwrap();
        assert_eq!(a.history[0].cls, b.history[0].cls);
        assert_ne!(a.last.params, b.last.params);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let train = data(14, 0);
        let dev = data(6, 50);
        let topo = build_topology(4, 4).unwrap();
        let full =
            Trainer::new(config(), &topo, "fp").unwrap().run(&train, &CleanViews(&dev), &Serial).unwrap();

        let mut first = Trainer::new(TrainConfig { max_iterations: 5, ..config() }, &topo, "fp").unwrap();
        let part = first.run(&train, &CleanViews(&dev), &Serial).unwrap();
        let mut second = Trainer::resume(config(), part.last.clone(), Some(part.best.clone())).unwrap();
        let rest = second.run(&train, &CleanViews(&dev), &Serial).unwrap();

        assert_eq!(rest.last.params, full.last.params);
        assert_eq!(rest.last.adam, full.last.adam);
        assert_eq!(rest.best, full.best);
        assert_eq!(&full.history[5..], &rest.history[..]);
    }

    #[test]
    fn rejects_bad_config() {
        let topo = build_topology(4, 4).unwrap();
        for cfg in [
            TrainConfig { learning_rate: 0.0, ..config() },
            TrainConfig { lambda: -1.0, ..config() },
            TrainConfig { batch_size: 0, ..config() },
            TrainConfig { beta1: 1.0, ..config() },
        ] {
            assert!(Trainer::new(cfg, &topo, "fp").is_err());
        }
    }

    #[test]
    fn unlabeled_pairs_abort_with_ids() {
        let mut train = data(4, 0);
        for p in &mut train.0 {
            p.0.label = Label::Unlabeled;
            p.1.label = Label::Unlabeled;
        }
        let topo = build_topology(4, 4).unwrap();
        let mut t = Trainer::new(config(), &topo, "fp").unwrap();
        assert!(t.step(&train, ClassWeights::default(), &Serial).is_err());
        assert_eq!(t.iteration(), 0);
    }
}
