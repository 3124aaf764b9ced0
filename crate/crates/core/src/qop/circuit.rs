use std::sync::Arc;

use super::{apply_left, apply_right, GateAction, Matrix, Operator, SlotLayout};
use crate::error::Result;

/// A unitary on named slots. Matrix factor order follows `slots`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    slots: Vec<String>,
    matrix: Arc<Matrix>,
}

impl Gate {
    pub fn new<S: AsRef<str>>(slots: &[S], matrix: Matrix) -> Self {
        Self {
            slots: slots.iter().map(|s| s.as_ref().to_string()).collect(),
            matrix: Arc::new(matrix),
        }
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Gate {
        Gate {
            slots: self.slots.clone(),
            matrix: Arc::new(self.matrix.adjoint()),
        }
    }

    fn cancels(&self, next: &Gate) -> bool {
        self.slots == next.slots && *self.matrix == next.matrix.adjoint()
    }
}

/// An ordered gate list; the first gate acts first, so the circuit's unitary
/// is `g_n ⋯ g_1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_gates(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    /// `U†`: reversed order, adjoint gates.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Runs `self` then `next`. Adjacent `g, g†` pairs at the seam are
    /// cancelled exactly.
    pub fn then(&self, next: &Circuit) -> Circuit {
        let mut gates = self.gates.clone();
        for g in &next.gates {
            match gates.last() {
                Some(last) if last.cancels(g) => {
                    gates.pop();
                }
                _ => gates.push(g.clone()),
            }
        }
        Circuit { gates }
    }

    /// Dense unitary on `layout`; slots absent from every gate act trivially.
    pub fn unitary(&self, layout: &SlotLayout) -> Result<Operator> {
        let mut u = Operator::identity(layout.clone());
        self.apply_left(&mut u)?;
        Ok(u)
    }

    /// `x ← U x`.
    pub fn apply_left(&self, x: &mut Operator) -> Result<()> {
        for g in &self.gates {
            x.apply_gate_left(g)?;
        }
        Ok(())
    }

    /// `U X U†`.
    pub fn conjugate(&self, x: &Operator) -> Result<Operator> {
        let mut out = x.clone();
        for g in &self.gates {
            let left = GateAction::new(x.layout(), g)?;
            let right = GateAction::new(x.layout(), &g.adjoint())?;
            apply_left(out.matrix_mut(), &left);
            apply_right(out.matrix_mut(), &right);
        }
        Ok(out)
    }

    /// `U† X U`.
    pub fn conjugate_adjoint(&self, x: &Operator) -> Result<Operator> {
        self.adjoint().conjugate(x)
    }
}
