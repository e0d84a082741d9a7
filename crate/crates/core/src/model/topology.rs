use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// One level of binary fusion. Gate `i` fuses input slots `gates[i]`; an odd
/// leftover slot is carried to the next level unchanged, after the gate
/// outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionLevel {
    pub gates: Vec<[usize; 2]>,
    pub pass_through: Option<usize>,
}

impl FusionLevel {
    pub fn input_slots(&self) -> usize {
        2 * self.gates.len() + usize::from(self.pass_through.is_some())
    }

    pub fn output_slots(&self) -> usize {
        self.gates.len() + usize::from(self.pass_through.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelTopology {
    layers: usize,
    dim: usize,
    levels: Vec<FusionLevel>,
}

/// Position of a gate in the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateRef {
    pub level: usize,
    /// Index within its level.
    pub index: usize,
    /// Index across all levels, level-major.
    pub global: usize,
    pub inputs: [usize; 2],
}

/// Pairs adjacent slots left to right until one slot remains.
pub fn build_topology(layers: usize, dim: usize) -> Result<ModelTopology> {
    if layers < 2 {
        return Err(invalid!("need at least 2 layers to fuse, got {layers}"));
    }
    if dim < 1 {
        return Err(invalid!("feature dim must be positive"));
    }
    let mut levels = Vec::new();
    let mut slots = layers;
    while slots > 1 {
        let gates = (0..slots / 2).map(|p| [2 * p, 2 * p + 1]).collect();
        let pass_through = (slots % 2 == 1).then_some(slots - 1);
        let level = FusionLevel { gates, pass_through };
        slots = level.output_slots();
        levels.push(level);
    }
    Ok(ModelTopology { layers, dim, levels })
}

impl ModelTopology {
    #[inline]
    pub fn layers(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn levels(&self) -> &[FusionLevel] {
        &self.levels
    }

    /// Total number of gates `M`.
    pub fn gate_count(&self) -> usize {
        self.levels.iter().map(|l| l.gates.len()).sum()
    }

    pub fn gates(&self) -> impl Iterator<Item = GateRef> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(level, l)| {
                l.gates.iter().enumerate().map(move |(index, &inputs)| (level, index, inputs))
            })
            .enumerate()
            .map(|(global, (level, index, inputs))| GateRef { level, index, global, inputs })
    }
}
