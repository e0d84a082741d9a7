use alloc::vec;
use alloc::vec::Vec;

use super::forward::FusionTrace;
use super::topology::ModelTopology;
use crate::error::{invalid, Result};

/// First routing weight of one gate at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMapRow {
    pub level: usize,
    pub gate: usize,
    pub frame: usize,
    pub alpha1: f64,
}

/// Flattens a trace into `M·T` rows, gate-major then frame.
pub fn export_gate_maps(trace: &FusionTrace) -> Vec<GateMapRow> {
    trace
        .gates
        .iter()
        .flat_map(|g| {
            g.alphas.iter().enumerate().map(move |(frame, a)| GateMapRow {
                level: g.level,
                gate: g.index,
                frame,
                alpha1: a.p1,
            })
        })
        .collect()
}

/// Share of the final per-frame vector contributed by each input layer:
/// the product of routing weights along the layer's path to the root.
///
/// Returned as `layers × frames`; each frame's column sums to one.
pub fn routing_mass(trace: &FusionTrace, topology: &ModelTopology) -> Result<Vec<Vec<f64>>> {
    if trace.gates.len() != topology.gate_count() {
        return Err(invalid!(
            "trace has {} gates, topology has {}",
            trace.gates.len(),
            topology.gate_count()
        ));
    }
    let frames = trace.frames();
    let mut offsets = Vec::with_capacity(topology.levels().len());
    let mut next = 0;
    for level in topology.levels() {
        offsets.push(next);
        next += level.gates.len();
    }
    let mut mass_out = vec![vec![1.0; frames]];
    for (level_idx, level) in topology.levels().iter().enumerate().rev() {
        let mut mass_in = vec![vec![0.0; frames]; level.input_slots()];
        for (index, &[a, b]) in level.gates.iter().enumerate() {
            let alphas = &trace.gates[offsets[level_idx] + index].alphas;
            for (t, alpha) in alphas.iter().enumerate() {
                mass_in[a][t] += mass_out[index][t] * alpha.p1;
                mass_in[b][t] += mass_out[index][t] * alpha.p2;
            }
        }
        if let Some(p) = level.pass_through {
            mass_in[p].clone_from(&mass_out[level.gates.len()]);
        }
        mass_out = mass_in;
    }
    Ok(mass_out)
}
