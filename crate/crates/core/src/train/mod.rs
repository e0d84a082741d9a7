//! Mini-batch training over paired clean/augmented views.
//!
//! Per-utterance work goes through an [`Executor`], which may run in
//! parallel; results are always reduced in ascending manifest order, so the
//! outcome does not depend on the executor.

mod trainer;

pub use trainer::{
    batch_loss_and_grad, evaluate, mean_gate_divergence, Checkpoint, ClassWeightMode, IterationLoss,
    LogEntry, ShuffleState, TrainConfig, TrainOutcome, Trainer,
};

use alloc::vec::Vec;

use crate::error::Result;
use crate::model::{Label, LayerStack};

/// Labeled clean/augmented pairs addressed by manifest position.
pub trait PairSource: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn label(&self, index: usize) -> Label;
    fn pair(&self, index: usize) -> Result<(LayerStack, LayerStack)>;
}

/// Single views addressed by manifest position.
pub trait StackSource: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn stack(&self, index: usize) -> Result<LayerStack>;
}

/// Maps a function over `0..n`, returning results in index order.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// In-memory pair source.
#[derive(Debug, Clone, Default)]
pub struct PairVec(pub Vec<(LayerStack, LayerStack)>);

impl PairSource for PairVec {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn label(&self, index: usize) -> Label {
        self.0[index].0.label
    }

    fn pair(&self, index: usize) -> Result<(LayerStack, LayerStack)> {
        Ok(self.0[index].clone())
    }
}

impl StackSource for Vec<LayerStack> {
    fn len(&self) -> usize {
        <[LayerStack]>::len(self)
    }

    fn stack(&self, index: usize) -> Result<LayerStack> {
        Ok(self[index].clone())
    }
}

/// Clean views of a pair source.
pub struct CleanViews<'a, P: ?Sized>(pub &'a P);

impl<P: PairSource + ?Sized> StackSource for CleanViews<'_, P> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn stack(&self, index: usize) -> Result<LayerStack> {
        Ok(self.0.pair(index)?.0)
    }
}
