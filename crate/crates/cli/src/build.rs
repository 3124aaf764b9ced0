//! Turns a parsed config into model objects, collecting every physics
//! violation with its JSON pointer.

use probe_causality::causal::{Cell, Lattice, Region};
use probe_causality::lattice_qft::{LocalObservable, SystemSpec};
use probe_causality::probes::{Coupling, ProbeSpec};
use probe_causality::protocols::Charlie;
use probe_causality::qop::{
    density_check, effect_check, gates, hermiticity_gap, matrix_from_rows, random_density_matrix,
    random_effect_matrix, random_hermitian_matrix, random_unitary_matrix, unitarity_gap, DensityState, Matrix,
    Operator, C64,
};
use probe_causality::rng::substream;
use probe_causality::updates::ObserverSpec;

use crate::config::{CharlieConfig, Dynamics, MatrixSpec, NamedMatrix, ObserverConfig, SystemConfig};
use crate::error::{CliError, Violation};

/// Validation tolerance for declared unitaries, states and effects.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Unitary,
    Density,
    Effect,
    Hermitian,
}

/// Factor dimensions for named two-body gates: `(first, second)`.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub dim: usize,
    pub factors: Option<(usize, usize)>,
}

impl Shape {
    pub fn square(dim: usize) -> Self {
        Self { dim, factors: None }
    }

    pub fn pair(a: usize, b: usize) -> Self {
        Self {
            dim: a * b,
            factors: Some((a, b)),
        }
    }
}

pub struct Builder {
    seed: u64,
    violations: Vec<Violation>,
}

impl Builder {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            violations: Vec::new(),
        }
    }

    pub fn violate(&mut self, pointer: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            pointer: pointer.to_string(),
            message: message.into(),
        });
    }

    /// `Err(PhysicsValidation)` if anything was recorded.
    pub fn finish(self) -> Result<(), CliError> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::PhysicsValidation(self.violations))
        }
    }

    fn draw(&self, label: &str) -> probe_causality::rng::StreamRng {
        substream(self.seed, label, 0)
    }

    pub fn matrix(&mut self, spec: &MatrixSpec, shape: Shape, role: Role, pointer: &str) -> Option<Matrix> {
        let d = shape.dim;
        let m = match spec {
            MatrixSpec::Named(n) => self.named(*n, shape, pointer)?,
            MatrixSpec::Projector(k) => {
                if *k >= d {
                    self.violate(pointer, format!("projector index {k} out of range for dimension {d}"));
                    return None;
                }
                gates::projector(d, *k)
            }
            MatrixSpec::PartialSwap(theta) => {
                let f = self.swap_factor(shape, pointer)?;
                gates::partial_swap(f, *theta)
            }
            MatrixSpec::RandomUnitary(l) => random_unitary_matrix(d, &mut self.draw(l)),
            MatrixSpec::RandomDensity(l) => random_density_matrix(d, &mut self.draw(l)),
            MatrixSpec::RandomEffect(l) => random_effect_matrix(d, &mut self.draw(l)),
            MatrixSpec::RandomHermitian(l) => random_hermitian_matrix(d, &mut self.draw(l)),
            MatrixSpec::Rows(rows) => match matrix_from_rows(rows) {
                Ok(m) => m,
                Err(e) => {
                    self.violate(pointer, e.to_string());
                    return None;
                }
            },
        };
        if m.nrows() != d || m.ncols() != d {
            self.violate(pointer, format!("matrix is {}x{}, expected {d}x{d}", m.nrows(), m.ncols()));
            return None;
        }
        let failure = match role {
            Role::Unitary => {
                let gap = unitarity_gap(&m);
                (gap > VALIDATION_TOL).then(|| format!("not unitary (deviation {gap:.3e})"))
            }
            Role::Density => density_check(&m, VALIDATION_TOL).err().map(|e| format!("not a density matrix: {e}")),
            Role::Effect => effect_check(&m, VALIDATION_TOL).err().map(|e| format!("not an effect: {e}")),
            Role::Hermitian => {
                let gap = hermiticity_gap(&m);
                (gap > VALIDATION_TOL).then(|| format!("not Hermitian (deviation {gap:.3e})"))
            }
        };
        if let Some(msg) = failure {
            self.violate(pointer, msg);
            return None;
        }
        Some(m)
    }

    fn swap_factor(&mut self, shape: Shape, pointer: &str) -> Option<usize> {
        match shape.factors {
            Some((a, b)) if a == b => Some(a),
            _ => {
                let f = (shape.dim as f64).sqrt().round() as usize;
                if f * f == shape.dim {
                    Some(f)
                } else {
                    self.violate(pointer, format!("swap needs equal factors, got dimension {}", shape.dim));
                    None
                }
            }
        }
    }

    fn named(&mut self, n: NamedMatrix, shape: Shape, pointer: &str) -> Option<Matrix> {
        let d = shape.dim;
        let qubit = |b: &mut Self, m: Matrix| {
            if d == 2 {
                Some(m)
            } else {
                b.violate(pointer, format!("{n:?} is a qubit matrix, expected dimension {d}"));
                None
            }
        };
        match n {
            NamedMatrix::Identity => Some(gates::identity(d)),
            NamedMatrix::PauliX => qubit(self, gates::pauli_x()),
            NamedMatrix::PauliY => qubit(self, gates::pauli_y()),
            NamedMatrix::PauliZ => qubit(self, gates::pauli_z()),
            NamedMatrix::Hadamard => qubit(self, gates::hadamard()),
            NamedMatrix::Swap => {
                let f = self.swap_factor(shape, pointer)?;
                Some(gates::swap(f))
            }
            NamedMatrix::ProbeControlledShift | NamedMatrix::SiteControlledShift => {
                let Some((s, p)) = shape.factors else {
                    self.violate(pointer, format!("{n:?} is only valid as a coupling gate"));
                    return None;
                };
                Some(if n == NamedMatrix::ProbeControlledShift {
                    gates::probe_controlled_shift(s, p)
                } else {
                    gates::site_controlled_shift(s, p)
                })
            }
            NamedMatrix::Plus => Some(Matrix::from_element(d, d, C64::new(1.0 / d as f64, 0.0))),
            NamedMatrix::MaximallyMixed => Some(gates::identity(d) * C64::new(1.0 / d as f64, 0.0)),
        }
    }

    pub fn cell(&mut self, lattice: Lattice, c: [usize; 2], pointer: &str) -> Option<Cell> {
        let cell = Cell::new(c[0], c[1]);
        if lattice.contains(cell) {
            Some(cell)
        } else {
            self.violate(pointer, format!("cell {c:?} outside the {}x{} lattice", lattice.width(), lattice.depth()));
            None
        }
    }

    pub fn lattice(&mut self, width: usize, depth: usize, pointer: &str) -> Option<Lattice> {
        match Lattice::new(width, depth) {
            Ok(l) => Some(l),
            Err(e) => {
                self.violate(pointer, e.to_string());
                None
            }
        }
    }

    pub fn system(&mut self, cfg: &SystemConfig, pointer: &str) -> Option<SystemSpec> {
        let lattice = self.lattice(cfg.width, cfg.depth, pointer)?;
        let d = cfg.site_dim;
        if d < 2 {
            self.violate(&format!("{pointer}/site_dim"), "site dimension must be at least 2");
            return None;
        }
        let ptr = format!("{pointer}/dynamics");
        match &cfg.dynamics {
            Dynamics::Trivial => Some(SystemSpec::trivial(lattice, d)),
            Dynamics::Random(label) => Some(SystemSpec::random(lattice, d, &mut self.draw(label))),
            Dynamics::Uniform(g) => {
                let g = self.matrix(g, Shape::pair(d, d), Role::Unitary, &format!("{ptr}/uniform"))?;
                self.model(SystemSpec::uniform(lattice, d, g), &ptr)
            }
            Dynamics::Layers(layers) => {
                let mut out = Vec::new();
                let mut ok = true;
                for (t, layer) in layers.iter().enumerate() {
                    let mut row = Vec::new();
                    for (i, g) in layer.iter().enumerate() {
                        let p = format!("{ptr}/layers/{t}/{i}");
                        match self.matrix(g, Shape::pair(d, d), Role::Unitary, &p) {
                            Some(m) => row.push(m),
                            None => ok = false,
                        }
                    }
                    out.push(row);
                }
                if !ok {
                    return None;
                }
                self.model(SystemSpec::new(lattice, d, out), &ptr)
            }
        }
    }

    fn model<T>(&mut self, r: probe_causality::Result<T>, pointer: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.violate(pointer, e.to_string());
                None
            }
        }
    }

    pub fn state(&mut self, spec: &SystemSpec, m: &MatrixSpec, pointer: &str) -> Option<DensityState> {
        let layout = spec.layout();
        let m = self.matrix(m, Shape::square(layout.dim()), Role::Density, pointer)?;
        let op = self.model(Operator::new(m, layout), pointer)?;
        self.model(DensityState::new(op, VALIDATION_TOL), pointer)
    }

    pub fn observer(&mut self, spec: &SystemSpec, cfg: &ObserverConfig, pointer: &str) -> Option<ObserverSpec> {
        let pd = cfg.probe_dim;
        if pd < 2 {
            self.violate(&format!("{pointer}/probe_dim"), "probe dimension must be at least 2");
            return None;
        }
        let sigma = self.matrix(&cfg.probe_state, Shape::square(pd), Role::Density, &format!("{pointer}/probe_state"));
        let observable = self.matrix(&cfg.observable, Shape::square(pd), Role::Hermitian, &format!("{pointer}/observable"));
        let mut couplings = Vec::new();
        let mut ok = true;
        for (i, c) in cfg.couplings.iter().enumerate() {
            let p = format!("{pointer}/couplings/{i}");
            let cell = self.cell(spec.lattice(), c.cell, &format!("{p}/cell"));
            let gate = self.matrix(&c.gate, Shape::pair(spec.site_dim(), pd), Role::Unitary, &format!("{p}/gate"));
            match (cell, gate) {
                (Some(cell), Some(gate)) => couplings.push(Coupling::new(cell, gate)),
                _ => ok = false,
            }
        }
        let (sigma, observable) = (sigma?, observable?);
        if !ok {
            return None;
        }
        let probe = self.model(ProbeSpec::new(&cfg.name, sigma, couplings, cfg.nonlocal), pointer)?;
        self.model(ObserverSpec::new(&cfg.name, probe, observable), pointer)
    }

    pub fn observers(&mut self, spec: &SystemSpec, cfgs: &[ObserverConfig], pointer: &str) -> Option<Vec<ObserverSpec>> {
        let built: Vec<Option<ObserverSpec>> = cfgs
            .iter()
            .enumerate()
            .map(|(i, c)| self.observer(spec, c, &format!("{pointer}/{i}")))
            .collect();
        let mut names = std::collections::BTreeSet::new();
        for (i, c) in cfgs.iter().enumerate() {
            if !names.insert(c.name.as_str()) {
                self.violate(&format!("{pointer}/{i}/name"), format!("duplicate observer name `{}`", c.name));
            }
        }
        built.into_iter().collect()
    }

    pub fn charlie(&mut self, spec: &SystemSpec, cfg: &CharlieConfig, pointer: &str) -> Option<Charlie> {
        match cfg {
            CharlieConfig::Probe(o) => Some(Charlie::Probe(self.observer(spec, o, &format!("{pointer}/probe"))?)),
            CharlieConfig::Local { cells, observable } => {
                let p = format!("{pointer}/local");
                let d = spec.site_dim();
                let b = self.matrix(observable, Shape::square(d), Role::Hermitian, &format!("{p}/observable"))?;
                if cells.is_empty() {
                    self.violate(&format!("{p}/cells"), "Charlie needs at least one cell");
                    return None;
                }
                let mut op = Operator::zeros(spec.layout());
                let mut region = Vec::new();
                for (i, c) in cells.iter().enumerate() {
                    let cell = self.cell(spec.lattice(), *c, &format!("{p}/cells/{i}"))?;
                    op = op + self.model(spec.heisenberg_pullback(&b, cell.x, cell.t), &p)?;
                    region.push(cell);
                }
                let region = self.model(Region::new(spec.lattice(), region), &p)?;
                let local = self.model(LocalObservable::new(spec, op, region, VALIDATION_TOL), &p)?;
                Some(Charlie::Local(local))
            }
        }
    }
}
