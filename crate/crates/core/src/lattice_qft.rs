//! The system theory: a qudit chain under brickwork dynamics.
//!
//! Layer `t` applies one two-site gate to each bond `(2i + p, 2i + p + 1)`
//! with `p = t mod 2`, so an operator's support grows by at most one site in
//! each direction per layer, matching the unit light speed of [`causal`].
//!
//! An observable at cell `(x, t)` is represented at time zero by its
//! Heisenberg pullback through layers `0..t`.
//!
//! [`causal`]: crate::causal

use std::collections::BTreeSet;

use rand::Rng;

use crate::causal::{Cell, Lattice, Region};
use crate::error::{Error, Result};
use crate::qop::{
    embed, gates, partial_trace, random_unitary_matrix, unitarity_gap, Circuit, Gate, Matrix, Operator,
    SlotLayout, C64,
};

/// Unitarity tolerance for supplied gates.
pub const UNITARY_TOL: f64 = 1e-12;

pub fn site_slot(x: usize) -> String {
    format!("s{x}")
}

/// Bonds acted on in layer `t`.
pub fn bonds(width: usize, t: usize) -> Vec<(usize, usize)> {
    let p = t % 2;
    (0..)
        .map(|i| (2 * i + p, 2 * i + p + 1))
        .take_while(|&(_, b)| b < width)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    lattice: Lattice,
    site_dim: usize,
    layers: Vec<Vec<Matrix>>,
}

impl SystemSpec {
    /// `layers[t][i]` acts on `bonds(width, t)[i]`.
    pub fn new(lattice: Lattice, site_dim: usize, layers: Vec<Vec<Matrix>>) -> Result<Self> {
        if site_dim == 0 {
            return Err(Error::DimensionMismatch("site dimension must be positive".into()));
        }
        if layers.len() != lattice.depth() {
            return Err(Error::DimensionMismatch(format!(
                "{} layers supplied for depth {}",
                layers.len(),
                lattice.depth()
            )));
        }
        let g = site_dim * site_dim;
        for (t, layer) in layers.iter().enumerate() {
            let expected = bonds(lattice.width(), t).len();
            if layer.len() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "layer {t} has {} gates, expected {expected}",
                    layer.len()
                )));
            }
            for m in layer {
                if m.nrows() != g || m.ncols() != g {
                    return Err(Error::DimensionMismatch(format!(
                        "layer {t} gate is {}x{}, expected {g}x{g}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let deviation = unitarity_gap(m);
                if deviation > UNITARY_TOL {
                    return Err(Error::NotUnitary { deviation });
                }
            }
        }
        Ok(Self {
            lattice,
            site_dim,
            layers,
        })
    }

    /// The same gate on every bond of every layer.
    pub fn uniform(lattice: Lattice, site_dim: usize, gate: Matrix) -> Result<Self> {
        let layers = (0..lattice.depth())
            .map(|t| vec![gate.clone(); bonds(lattice.width(), t).len()])
            .collect();
        Self::new(lattice, site_dim, layers)
    }

    pub fn trivial(lattice: Lattice, site_dim: usize) -> Self {
        Self::uniform(lattice, site_dim, gates::identity(site_dim * site_dim))
            .expect("identity gates are valid")
    }

    /// Independent Haar gates on every bond.
    pub fn random<R: Rng + ?Sized>(lattice: Lattice, site_dim: usize, rng: &mut R) -> Self {
        let g = site_dim * site_dim;
        let layers = (0..lattice.depth())
            .map(|t| {
                (0..bonds(lattice.width(), t).len())
                    .map(|_| random_unitary_matrix(g, rng))
                    .collect()
            })
            .collect();
        Self {
            lattice,
            site_dim,
            layers,
        }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn layers(&self) -> &[Vec<Matrix>] {
        &self.layers
    }

    pub fn layout(&self) -> SlotLayout {
        SlotLayout::new((0..self.lattice.width()).map(|x| (site_slot(x), self.site_dim)))
            .expect("site slots are distinct")
    }

    fn check_window(&self, t_from: usize, t_to: usize) -> Result<()> {
        if t_from > t_to || t_to > self.lattice.depth() {
            return Err(Error::BadWindow {
                from: t_from,
                to: t_to,
                depth: self.lattice.depth(),
            });
        }
        Ok(())
    }

    fn check_region(&self, r: &Region) -> Result<()> {
        if r.lattice() != self.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }

    /// The two-site gates of layer `t` as circuit gates.
    pub fn layer_gates(&self, t: usize) -> Vec<Gate> {
        bonds(self.lattice.width(), t)
            .into_iter()
            .zip(&self.layers[t])
            .map(|((a, b), m)| Gate::new(&[site_slot(a), site_slot(b)], m.clone()))
            .collect()
    }

    /// Layers `t_from..t_to` in order.
    pub fn free_circuit(&self, t_from: usize, t_to: usize) -> Result<Circuit> {
        self.check_window(t_from, t_to)?;
        let mut c = Circuit::new();
        for t in t_from..t_to {
            for g in self.layer_gates(t) {
                c.push(g);
            }
        }
        Ok(c)
    }

    pub fn free_unitary(&self, t_from: usize, t_to: usize) -> Result<Operator> {
        self.free_circuit(t_from, t_to)?.unitary(&self.layout())
    }

    /// A single-site matrix placed at site `x` of the system layout.
    pub fn site_operator(&self, x: usize, b: &Matrix) -> Result<Operator> {
        if x >= self.lattice.width() {
            return Err(Error::UnknownSlot(site_slot(x)));
        }
        embed(&Operator::on_slot(site_slot(x), b.clone())?, &self.layout())
    }

    /// `U(0→t)† a U(0→t)` for `a` on any layout containing the system slots.
    pub fn pullback_operator(&self, a: &Operator, t: usize) -> Result<Operator> {
        self.free_circuit(0, t)?.conjugate_adjoint(a)
    }

    /// Time-zero representative of the single-site observable `b` at `(x, t)`.
    pub fn heisenberg_pullback(&self, b: &Matrix, x: usize, t: usize) -> Result<Operator> {
        self.check_window(0, t)?;
        self.pullback_operator(&self.site_operator(x, b)?, t)
    }

    /// Pullbacks of the Gell-Mann basis (identity included) at one cell.
    pub fn cell_generators(&self, cell: Cell) -> Result<Vec<Operator>> {
        self.lattice.check_cell(cell)?;
        gates::gell_mann(self.site_dim)
            .iter()
            .map(|b| self.heisenberg_pullback(b, cell.x, cell.t))
            .collect()
    }

    /// Generators of the local algebra of `n`.
    pub fn algebra_generators(&self, n: &Region) -> Result<Vec<Operator>> {
        self.check_region(n)?;
        let mut out = Vec::with_capacity(n.len() * self.site_dim * self.site_dim);
        for c in n.iter() {
            out.extend(self.cell_generators(*c)?);
        }
        Ok(out)
    }

    /// Sites on which `a` acts non-trivially.
    pub fn support_of(&self, a: &Operator, tol: f64) -> Result<BTreeSet<usize>> {
        support_of(a, self.lattice.width(), tol)
    }

    /// Largest `‖[c, g]‖_F / ‖c‖_F` over generators `g` of the causal
    /// complement of `n` and over `extra`.
    pub fn commutant_deviation(&self, c: &Operator, n: &Region, extra: &[Operator]) -> Result<f64> {
        self.check_region(n)?;
        let norm = c.frobenius();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let complement = self.lattice.causal_complement(n);
        let mut worst = 0.0f64;
        for cell in complement.iter() {
            for g in self.cell_generators(*cell)?.iter().skip(1) {
                let g = embed(g, c.layout())?;
                worst = worst.max(c.commutator(&g).frobenius() / norm);
            }
        }
        for g in extra {
            let g = embed(g, c.layout())?;
            worst = worst.max(c.commutator(&g).frobenius() / norm);
        }
        Ok(worst)
    }

    /// Localisability test: `c` commutes with the algebra of the causal
    /// complement of `n`.
    pub fn commutant_membership(&self, c: &Operator, n: &Region, tol: f64) -> Result<bool> {
        Ok(self.commutant_deviation(c, n, &[])? <= tol)
    }

    /// Sites reachable from the declared cells' pullback footprints.
    pub fn footprint(&self, n: &Region) -> BTreeSet<usize> {
        let w = self.lattice.width();
        n.iter()
            .flat_map(|c| c.x.saturating_sub(c.t)..=(c.x + c.t).min(w - 1))
            .collect()
    }
}

/// Site support of an operator whose layout contains slots `s0..s{width-1}`.
/// Non-site slots are ignored.
pub fn support_of(a: &Operator, width: usize, tol: f64) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for x in 0..width {
        let slot = site_slot(x);
        let Some(d) = a.layout().slot_dim(&slot) else {
            continue;
        };
        let reduced = partial_trace(a, &[slot.as_str()])?.scale(C64::new(1.0 / d as f64, 0.0));
        let rebuilt = embed(&reduced, a.layout())?;
        if a.distance(&rebuilt) > tol {
            out.insert(x);
        }
    }
    Ok(out)
}

/// A system observable with its intended localisation region.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalObservable {
    op: Operator,
    region: Region,
}

impl LocalObservable {
    /// Checks that the time-zero support lies inside the pullback footprint of
    /// `region`.
    pub fn new(spec: &SystemSpec, op: Operator, region: Region, tol: f64) -> Result<Self> {
        if op.layout() != &spec.layout() {
            return Err(Error::DimensionMismatch(format!(
                "observable layout {} is not the system layout",
                op.layout()
            )));
        }
        spec.check_region(&region)?;
        let support = spec.support_of(&op, tol)?;
        let footprint = spec.footprint(&region);
        if !support.is_subset(&footprint) {
            return Err(Error::LocalizationViolation {
                deviation: support.difference(&footprint).count() as f64,
            });
        }
        Ok(Self { op, region })
    }

    /// `b` placed at `cell` and pulled back.
    pub fn at_cell(spec: &SystemSpec, b: &Matrix, cell: Cell) -> Result<Self> {
        let op = spec.heisenberg_pullback(b, cell.x, cell.t)?;
        let region = Region::new(spec.lattice(), [cell])?;
        Ok(Self { op, region })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn region(&self) -> &Region {
        &self.region
    }
}
