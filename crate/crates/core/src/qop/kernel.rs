//! In-place application of few-slot gates to full-layout matrices.
//!
//! For a gate on slots of total dimension `g` inside a layout of dimension
//! `D`, each application costs `O(D² g)` instead of the `O(D³)` of forming
//! the embedded gate.

use super::{Gate, Matrix, SlotLayout, C64, ZERO};
use crate::error::{Error, Result};

/// A gate resolved against a concrete layout.
#[derive(Clone, Debug)]
pub struct GateAction {
    /// Full-index offsets of the gate's basis states.
    offsets: Vec<usize>,
    /// Full indices with zero digits on the gate's slots.
    bases: Vec<usize>,
    /// Row-major gate entries.
    entries: Vec<C64>,
    dim: usize,
}

impl GateAction {
    pub fn new(layout: &SlotLayout, gate: &Gate) -> Result<Self> {
        let pos = layout.positions_of(gate.slots())?;
        let expected: usize = pos.iter().map(|&p| layout.slots()[p].dim).product();
        let g = gate.matrix().nrows();
        if expected != g {
            return Err(Error::DimensionMismatch(format!(
                "gate on {:?} has dimension {g}, layout slots give {expected}",
                gate.slots()
            )));
        }
        let offsets = layout.offsets(&pos);
        let bases = layout.offsets(&layout.complement_positions(&pos));
        let m = gate.matrix();
        let entries = (0..g).flat_map(|r| (0..g).map(move |c| m[(r, c)])).collect();
        Ok(Self {
            offsets,
            bases,
            entries,
            dim: g,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `m ← Ĝ m`.
pub fn apply_left(m: &mut Matrix, action: &GateAction) {
    let n = m.nrows();
    let g = action.dim;
    let mut v = vec![ZERO; g];
    for col in m.as_mut_slice().chunks_mut(n) {
        for &b in &action.bases {
            for (k, &o) in action.offsets.iter().enumerate() {
                v[k] = col[b + o];
            }
            for (r, &o) in action.offsets.iter().enumerate() {
                let row = &action.entries[r * g..(r + 1) * g];
                let mut acc = ZERO;
                for k in 0..g {
                    acc += row[k] * v[k];
                }
                col[b + o] = acc;
            }
        }
    }
}

/// `m ← m Ĝ`.
pub fn apply_right(m: &mut Matrix, action: &GateAction) {
    let n = m.nrows();
    let g = action.dim;
    let data = m.as_mut_slice();
    let mut buf = vec![ZERO; g * n];
    for &b in &action.bases {
        buf.iter_mut().for_each(|z| *z = ZERO);
        for (l, &ol) in action.offsets.iter().enumerate() {
            let src = &data[(b + ol) * n..(b + ol + 1) * n];
            for k in 0..g {
                let w = action.entries[l * g + k];
                if w == ZERO {
                    continue;
                }
                let dst = &mut buf[k * n..(k + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
        }
        for (k, &ok) in action.offsets.iter().enumerate() {
            data[(b + ok) * n..(b + ok + 1) * n].copy_from_slice(&buf[k * n..(k + 1) * n]);
        }
    }
}
