//! Dense complex operators on labelled tensor-product layouts.
//!
//! The first slot of a [`SlotLayout`] is the most significant tensor factor,
//! matching Kronecker-product ordering.

mod circuit;
pub mod gates;
mod kernel;
mod random;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circuit::{Circuit, Gate};
pub use kernel::{apply_left, apply_right, GateAction};
pub use random::{
    random_density, random_density_matrix, random_effect, random_effect_matrix, random_hermitian_matrix,
    random_unitary, random_unitary_matrix,
};

pub type C64 = Complex<f64>;
pub type Matrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerance for pure linear-algebra identities.
pub const LINALG_TOL: f64 = 1e-12;
/// Default tolerance for physics assertions.
pub const PHYSICS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub id: String,
    pub dim: usize,
}

/// Ordered, uniquely labelled tensor factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotLayout {
    slots: Vec<Slot>,
}

impl SlotLayout {
    pub fn new<S: Into<String>>(slots: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut layout = SlotLayout::default();
        for (id, dim) in slots {
            layout.push(id.into(), dim)?;
        }
        Ok(layout)
    }

    pub fn single(id: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(id.into(), dim)])
    }

    /// The trivial layout of total dimension 1.
    pub fn scalar() -> Self {
        Self::default()
    }

    fn push(&mut self, id: String, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(format!("slot `{id}` has dimension 0")));
        }
        if self.contains(&id) {
            return Err(Error::SlotCollision(id));
        }
        self.slots.push(Slot { id, dim });
        Ok(())
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.slots.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.position(id).is_some()
    }

    pub fn slot_dim(&self, id: &str) -> Option<usize> {
        self.position(id).map(|p| self.slots[p].dim)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.id.as_str())
    }

    /// Index stride of each slot.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.slots.len()];
        for i in (0..self.slots.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.slots[i + 1].dim;
        }
        strides
    }

    pub fn concat(&self, other: &SlotLayout) -> Result<SlotLayout> {
        let mut out = self.clone();
        for s in &other.slots {
            out.push(s.id.clone(), s.dim)?;
        }
        Ok(out)
    }

    /// Appends the slots of `other` not already present, checking dimensions.
    pub fn union(&self, other: &SlotLayout) -> Result<SlotLayout> {
        let mut out = self.clone();
        for s in &other.slots {
            match out.slot_dim(&s.id) {
                Some(d) if d == s.dim => {}
                Some(d) => {
                    return Err(Error::DimensionMismatch(format!(
                        "slot `{}` has dimension {d} and {}",
                        s.id, s.dim
                    )))
                }
                None => out.push(s.id.clone(), s.dim)?,
            }
        }
        Ok(out)
    }

    pub fn without<S: AsRef<str>>(&self, drop: &[S]) -> Result<SlotLayout> {
        for d in drop {
            if !self.contains(d.as_ref()) {
                return Err(Error::UnknownSlot(d.as_ref().to_string()));
            }
        }
        Ok(SlotLayout {
            slots: self
                .slots
                .iter()
                .filter(|s| !drop.iter().any(|d| d.as_ref() == s.id))
                .cloned()
                .collect(),
        })
    }

    /// Same slot ids and dimensions, in any order.
    pub fn is_subset_of(&self, other: &SlotLayout) -> bool {
        self.slots
            .iter()
            .all(|s| other.slot_dim(&s.id) == Some(s.dim))
    }

    /// Full-index offsets of every basis index of the sub-layout formed by
    /// `positions` (in the given order, first most significant).
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offs = vec![0usize];
        for &p in positions {
            let (d, st) = (self.slots[p].dim, strides[p]);
            offs = offs
                .iter()
                .flat_map(|&o| (0..d).map(move |k| o + k * st))
                .collect();
        }
        offs
    }

    pub(crate) fn positions_of<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.position(id.as_ref())
                    .ok_or_else(|| Error::UnknownSlot(id.as_ref().to_string()))
            })
            .collect()
    }

    pub(crate) fn complement_positions(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|p| !positions.contains(p))
            .collect()
    }
}

impl fmt::Display for SlotLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .slots
            .iter()
            .map(|s| format!("{}:{}", s.id, s.dim))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A square complex matrix acting on a [`SlotLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: Matrix,
    layout: SlotLayout,
}

impl Operator {
    pub fn new(matrix: Matrix, layout: SlotLayout) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but layout {layout} has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, layout })
    }

    /// Operator on a single freshly named slot.
    pub fn on_slot(id: impl Into<String>, matrix: Matrix) -> Result<Self> {
        let layout = SlotLayout::single(id, matrix.nrows())?;
        Self::new(matrix, layout)
    }

    pub fn identity(layout: SlotLayout) -> Self {
        let d = layout.dim();
        Self {
            matrix: Matrix::identity(d, d),
            layout,
        }
    }

    pub fn zeros(layout: SlotLayout) -> Self {
        let d = layout.dim();
        Self {
            matrix: Matrix::zeros(d, d),
            layout,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            layout: self.layout.clone(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            matrix: &self.matrix * s,
            layout: self.layout.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.matrix)
    }

    /// Frobenius distance; panics on layout mismatch.
    pub fn distance(&self, other: &Operator) -> f64 {
        assert_eq!(self.layout, other.layout, "layout mismatch");
        frobenius(&(&self.matrix - &other.matrix))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        self * other - other * self
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_gap(&self.matrix) <= tol
    }

    /// `(X + X†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            matrix: (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0),
            layout: self.layout.clone(),
        }
    }

    /// `Tr(ρ X)` with `ρ` given as an operator on the same layout.
    pub fn expectation(&self, rho: &Operator) -> C64 {
        assert_eq!(self.layout, rho.layout, "layout mismatch");
        trace_of_product(&rho.matrix, &self.matrix)
    }

    /// Applies `Ĝ X` in place for a gate on some of this operator's slots.
    pub fn apply_gate_left(&mut self, gate: &Gate) -> Result<()> {
        let action = GateAction::new(&self.layout, gate)?;
        apply_left(&mut self.matrix, &action);
        Ok(())
    }

    /// Applies `X Ĝ` in place.
    pub fn apply_gate_right(&mut self, gate: &Gate) -> Result<()> {
        let action = GateAction::new(&self.layout, gate)?;
        apply_right(&mut self.matrix, &action);
        Ok(())
    }
}

impl Mul for &Operator {
    type Output = Operator;

    /// # Panics
    /// On layout mismatch.
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        Operator {
            matrix: &self.matrix * &rhs.matrix,
            layout: self.layout.clone(),
        }
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        Operator {
            matrix: &self.matrix + &rhs.matrix,
            layout: self.layout.clone(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        Operator {
            matrix: &self.matrix - &rhs.matrix,
            layout: self.layout.clone(),
        }
    }
}

impl Sub for Operator {
    type Output = Operator;

    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Add for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    layout: SlotLayout,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorRepr {
            layout: self.layout.clone(),
            matrix: matrix_to_rows(&self.matrix),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = OperatorRepr::deserialize(d)?;
        let m = matrix_from_rows(&repr.matrix).map_err(serde::de::Error::custom)?;
        Operator::new(m, repr.layout).map_err(serde::de::Error::custom)
    }
}

/// Row-major `[re, im]` pairs.
pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected a non-empty square matrix, got {n} rows"
        )));
    }
    Ok(Matrix::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermiticity_gap(m: &Matrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &Matrix, b: &Matrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `‖U†U − 1‖_F`.
pub fn unitarity_gap(m: &Matrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    frobenius(&(m.adjoint() * m - Matrix::identity(n, n)))
}

pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let layout = a.layout.concat(&b.layout)?;
    Ok(Operator {
        matrix: a.matrix.kronecker(&b.matrix),
        layout,
    })
}

/// Tensor product of several operators in order.
pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> Result<Operator> {
    let mut acc = Operator::identity(SlotLayout::scalar());
    for op in ops {
        acc = tensor(&acc, op)?;
    }
    Ok(acc)
}

/// Tensors `a` with identities on the slots of `target` it lacks, and permutes
/// the factors into `target` order.
pub fn embed(a: &Operator, target: &SlotLayout) -> Result<Operator> {
    if &a.layout == target {
        return Ok(a.clone());
    }
    for s in a.layout.slots() {
        match target.slot_dim(&s.id) {
            Some(d) if d == s.dim => {}
            Some(d) => {
                return Err(Error::DimensionMismatch(format!(
                    "slot `{}` has dimension {} but target has {d}",
                    s.id, s.dim
                )))
            }
            None => return Err(Error::UnknownSlot(s.id.clone())),
        }
    }
    let ids: Vec<&str> = a.layout.ids().collect();
    let pos = target.positions_of(&ids)?;
    let sub = target.offsets(&pos);
    let rest = target.offsets(&target.complement_positions(&pos));
    let d = target.dim();
    let mut m = Matrix::zeros(d, d);
    for &r in &rest {
        for (j, &oj) in sub.iter().enumerate() {
            for (i, &oi) in sub.iter().enumerate() {
                m[(r + oi, r + oj)] = a.matrix[(i, j)];
            }
        }
    }
    Ok(Operator {
        matrix: m,
        layout: target.clone(),
    })
}

/// Traces out the named slots.
pub fn partial_trace<S: AsRef<str>>(a: &Operator, drop: &[S]) -> Result<Operator> {
    let keep_layout = a.layout.without(drop)?;
    let drop_pos = a.layout.positions_of(drop)?;
    let keep_pos = a.layout.complement_positions(&drop_pos);
    let keep = a.layout.offsets(&keep_pos);
    let dropped = a.layout.offsets(&drop_pos);
    let k = keep.len();
    let mut m = Matrix::zeros(k, k);
    for (j, &oj) in keep.iter().enumerate() {
        for (i, &oi) in keep.iter().enumerate() {
            let mut acc = ZERO;
            for &od in &dropped {
                acc += a.matrix[(oi + od, oj + od)];
            }
            m[(i, j)] = acc;
        }
    }
    Ok(Operator {
        matrix: m,
        layout: keep_layout,
    })
}

/// `Tr_W[(1 ⊗ w) a]` where `w` acts on a subset `W` of `a`'s slots.
pub fn partial_trace_with(a: &Operator, w: &Operator) -> Result<Operator> {
    let drop: Vec<&str> = w.layout.ids().collect();
    for s in w.layout.slots() {
        if a.layout.slot_dim(&s.id) != Some(s.dim) {
            return Err(Error::UnknownSlot(s.id.clone()));
        }
    }
    let keep_layout = a.layout.without(&drop)?;
    let drop_pos = a.layout.positions_of(&drop)?;
    let keep_pos = a.layout.complement_positions(&drop_pos);
    let keep = a.layout.offsets(&keep_pos);
    let dropped = a.layout.offsets(&drop_pos);
    let weights: Vec<(usize, usize, C64)> = (0..dropped.len())
        .flat_map(|p| (0..dropped.len()).map(move |q| (p, q)))
        .map(|(p, q)| (dropped[p], dropped[q], w.matrix[(p, q)]))
        .filter(|&(_, _, z)| z != ZERO)
        .collect();
    let k = keep.len();
    let mut m = Matrix::zeros(k, k);
    for (j, &oj) in keep.iter().enumerate() {
        for (i, &oi) in keep.iter().enumerate() {
            let mut acc = ZERO;
            for &(op, oq, z) in &weights {
                acc += z * a.matrix[(oi + oq, oj + op)];
            }
            m[(i, j)] = acc;
        }
    }
    Ok(Operator {
        matrix: m,
        layout: keep_layout,
    })
}

/// Traces out everything except the named slots, returned in `keep` order.
pub fn reduce_to<S: AsRef<str>>(a: &Operator, keep: &[S]) -> Result<Operator> {
    let keep_pos = a.layout.positions_of(keep)?;
    let drop: Vec<String> = a
        .layout
        .complement_positions(&keep_pos)
        .into_iter()
        .map(|p| a.layout.slots()[p].id.clone())
        .collect();
    let reduced = partial_trace(a, &drop)?;
    let order = SlotLayout::new(
        keep.iter()
            .map(|id| (id.as_ref().to_string(), reduced.layout.slot_dim(id.as_ref()).unwrap())),
    )?;
    embed(&reduced, &order)
}

/// Why a spectrum test failed.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumFailure {
    NotSquare,
    NotHermitian { gap: f64 },
    NegativeEigenvalue { min: f64 },
    AboveOne { max: f64 },
    TraceNotOne { trace: f64 },
}

impl fmt::Display for SpectrumFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare => write!(f, "matrix is not square"),
            Self::NotHermitian { gap } => write!(f, "not Hermitian (gap {gap:e})"),
            Self::NegativeEigenvalue { min } => write!(f, "eigenvalue {min:e} below zero"),
            Self::AboveOne { max } => write!(f, "eigenvalue {max} above one"),
            Self::TraceNotOne { trace } => write!(f, "trace {trace} differs from one"),
        }
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn hermitian_spectrum(m: &Matrix, tol: f64) -> std::result::Result<Vec<f64>, SpectrumFailure> {
    if m.nrows() != m.ncols() {
        return Err(SpectrumFailure::NotSquare);
    }
    let gap = hermiticity_gap(m);
    if gap > tol {
        return Err(SpectrumFailure::NotHermitian { gap });
    }
    Ok(hermitian_eigenvalues(m))
}

pub fn effect_check(m: &Matrix, tol: f64) -> std::result::Result<(), SpectrumFailure> {
    let ev = hermitian_spectrum(m, tol)?;
    let (min, max) = (ev[0], ev[ev.len() - 1]);
    if min < -tol {
        return Err(SpectrumFailure::NegativeEigenvalue { min });
    }
    if max > 1.0 + tol {
        return Err(SpectrumFailure::AboveOne { max });
    }
    Ok(())
}

pub fn density_check(m: &Matrix, tol: f64) -> std::result::Result<(), SpectrumFailure> {
    let ev = hermitian_spectrum(m, tol)?;
    if ev[0] < -tol {
        return Err(SpectrumFailure::NegativeEigenvalue { min: ev[0] });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(SpectrumFailure::TraceNotOne { trace });
    }
    Ok(())
}

pub fn is_effect(a: &Operator, tol: f64) -> bool {
    effect_check(&a.matrix, tol).is_ok()
}

pub fn is_density(a: &Operator, tol: f64) -> bool {
    density_check(&a.matrix, tol).is_ok()
}

/// A positive unit-trace operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityState(Operator);

impl DensityState {
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        density_check(&op.matrix, tol).map_err(|e| Error::InvalidState(e.to_string()))?;
        Ok(Self(op))
    }

    /// Wraps without checking; the caller guarantees validity.
    pub fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    /// `|ψ⟩⟨ψ|` after normalising `psi`.
    pub fn pure(layout: SlotLayout, psi: &[C64]) -> Result<Self> {
        if psi.len() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state vector has length {} but layout {layout} has dimension {}",
                psi.len(),
                layout.dim()
            )));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Ok(Self(Operator::new(&v * v.adjoint(), layout)?))
    }

    /// Computational basis state `|k⟩⟨k|`.
    pub fn basis(layout: SlotLayout, k: usize) -> Result<Self> {
        let mut psi = vec![ZERO; layout.dim()];
        *psi.get_mut(k)
            .ok_or_else(|| Error::InvalidState(format!("basis index {k} out of range")))? = ONE;
        Self::pure(layout, &psi)
    }

    pub fn maximally_mixed(layout: SlotLayout) -> Self {
        let d = layout.dim() as f64;
        Self(Operator::identity(layout).scale(C64::new(1.0 / d, 0.0)))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0.matrix
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.0.layout
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    /// `Tr(ρ X)`; `x` is embedded into the state's layout first.
    pub fn expect(&self, x: &Operator) -> Result<C64> {
        let x = embed(x, self.layout())?;
        Ok(trace_of_product(&self.0.matrix, &x.matrix))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.0.matrix)[0]
    }
}

impl<'de> Deserialize<'de> for DensityState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let op = Operator::deserialize(d)?;
        DensityState::new(op, PHYSICS_TOL).map_err(serde::de::Error::custom)
    }
}

/// A Hermitian operator with spectrum in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Effect(Operator);

impl Effect {
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        effect_check(&op.matrix, tol).map_err(|e| Error::NotAnEffect(e.to_string()))?;
        Ok(Self(op))
    }

    pub fn identity(layout: SlotLayout) -> Self {
        Self(Operator::identity(layout))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.0.layout
    }

    pub fn complement(&self) -> Effect {
        Effect(&Operator::identity(self.0.layout.clone()) - &self.0)
    }
}

impl<'de> Deserialize<'de> for Effect {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let op = Operator::deserialize(d)?;
        Effect::new(op, PHYSICS_TOL).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn op(id: &str, m: Matrix) -> Operator {
        Operator::on_slot(id, m).unwrap()
    }

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    #[test]
    fn layout_rejects_duplicates() {
        assert_eq!(
            SlotLayout::new([("a", 2), ("a", 3)]),
            Err(Error::SlotCollision("a".into()))
        );
        let l = SlotLayout::new([("a", 2), ("b", 3), ("c", 4)]).unwrap();
        assert_eq!(l.dim(), 24);
        assert_eq!(l.strides(), vec![12, 4, 1]);
    }

    #[test]
    fn tensor_identities() {
        let a = Operator::identity(SlotLayout::single("a", 2).unwrap());
        let b = Operator::identity(SlotLayout::single("b", 3).unwrap());
        let t = tensor(&a, &b).unwrap();
        assert_eq!(t.dim(), 6);
        assert_eq!(t.matrix(), &Matrix::identity(6, 6));
        assert!(matches!(tensor(&a, &a), Err(Error::SlotCollision(_))));
    }

    #[test]
    fn tensor_trace_multiplicative() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = op("a", random_hermitian_matrix(2, &mut rng));
        let b = op("b", random_hermitian_matrix(2, &mut rng));
        let t = tensor(&a, &b).unwrap();
        assert_abs_diff_eq!((t.trace() - a.trace() * b.trace()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn embed_places_factor() {
        let z = gates::pauli_z();
        let target = SlotLayout::new([("s", 2), ("pa", 2), ("pb", 2)]).unwrap();
        let e = embed(&op("pb", z.clone()), &target).unwrap();
        let id2 = Matrix::identity(2, 2);
        assert_eq!(e.matrix(), &id2.kronecker(&id2).kronecker(&z));
        let id = Operator::identity(SlotLayout::single("pa", 2).unwrap());
        assert_eq!(embed(&id, &target).unwrap(), Operator::identity(target.clone()));
        assert!(matches!(
            embed(&op("q", z.clone()), &target),
            Err(Error::UnknownSlot(_))
        ));
        assert!(matches!(
            embed(&op("s", Matrix::identity(3, 3)), &target),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn embed_permutes() {
        let x = gates::pauli_x();
        let z = gates::pauli_z();
        let ab = tensor(&op("a", x.clone()), &op("b", z.clone())).unwrap();
        let ba = SlotLayout::new([("b", 2), ("a", 2)]).unwrap();
        assert_eq!(embed(&ab, &ba).unwrap().matrix(), &z.kronecker(&x));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let rho = op("s", random_density_matrix(3, &mut rng));
        let sigma = op("p", random_density_matrix(2, &mut rng));
        let joint = tensor(&rho, &sigma).unwrap();
        assert!(partial_trace(&joint, &["p"]).unwrap().distance(&rho) < 1e-12);
        let all = partial_trace(&joint, &["s", "p"]).unwrap();
        assert_eq!(all.dim(), 1);
        assert_abs_diff_eq!((all.matrix()[(0, 0)] - joint.trace()).norm(), 0.0, epsilon = 1e-12);
        assert_eq!(partial_trace(&joint, &["q"]), Err(Error::UnknownSlot("q".into())));
    }

    #[test]
    fn weighted_partial_trace() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let x = op("s", random_hermitian_matrix(3, &mut rng));
        let y = op("p", random_hermitian_matrix(2, &mut rng));
        let sigma = op("p", random_density_matrix(2, &mut rng));
        let xy = tensor(&x, &y).unwrap();
        let got = partial_trace_with(&xy, &sigma).unwrap();
        let factor = (sigma.matrix() * y.matrix()).trace();
        assert!(got.distance(&x.scale(factor)) < 1e-12);
        let dense = embed(&sigma, xy.layout()).unwrap();
        let via_full = partial_trace(&(&dense * &xy), &["p"]).unwrap();
        assert!(got.distance(&via_full) < 1e-12);
    }

    #[test]
    fn reduce_orders_output() {
        let x = op("a", gates::pauli_x());
        let z = op("b", gates::pauli_z());
        let y = Operator::identity(SlotLayout::single("c", 2).unwrap());
        let all = tensor_all([&x, &z, &y]).unwrap();
        let r = reduce_to(&all, &["b", "a"]).unwrap();
        assert_eq!(r.layout().ids().collect::<Vec<_>>(), vec!["b", "a"]);
        let expected = gates::pauli_z().kronecker(&gates::pauli_x()) * C64::new(2.0, 0.0);
        assert!(frobenius(&(r.matrix() - expected)) < 1e-12);
    }

    #[test]
    fn spectrum_tests() {
        assert!(effect_check(&diag(&[0.3, 0.7]), 1e-12).is_ok());
        assert_eq!(
            effect_check(&diag(&[1.2, 0.0]), 1e-12),
            Err(SpectrumFailure::AboveOne { max: 1.2 })
        );
        assert!(density_check(&diag(&[0.25; 4]), 1e-12).is_ok());
        assert!(matches!(
            density_check(&diag(&[1.5, -0.5]), 1e-12),
            Err(SpectrumFailure::NegativeEigenvalue { .. })
        ));
        let mut nh = diag(&[0.5, 0.5]);
        nh[(0, 1)] = ONE;
        assert!(matches!(density_check(&nh, 1e-12), Err(SpectrumFailure::NotHermitian { .. })));
        assert!(matches!(
            density_check(&diag(&[0.5, 0.6]), 1e-12),
            Err(SpectrumFailure::TraceNotOne { .. })
        ));
    }

    #[test]
    fn serde_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = op("a", random_unitary_matrix(2, &mut rng));
        let s = serde_json::to_string(&a).unwrap();
        let b: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pure_states() {
        let l = SlotLayout::single("s", 2).unwrap();
        let plus = DensityState::pure(l.clone(), &[ONE, ONE]).unwrap();
        assert_abs_diff_eq!(plus.matrix()[(0, 1)].re, 0.5, epsilon = 1e-15);
        assert!(DensityState::pure(l, &[ZERO, ZERO]).is_err());
    }
}
