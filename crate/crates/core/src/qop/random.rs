//! Seeded random unitaries, states and effects. The RNG is always supplied by
//! the caller.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensityState, Effect, Matrix, Operator, SlotLayout, C64};

fn gaussian_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar unitary: QR of a complex Ginibre matrix with the phases of `R`'s
/// diagonal folded back into `Q`.
pub fn random_unitary_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let qr = gaussian_matrix(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `G G† / Tr(G G†)` for complex Gaussian `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = gaussian_matrix(d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `U diag(λ) U†` with `λ` uniform in `[0, 1]`.
pub fn random_effect_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let u = random_unitary_matrix(d, rng);
    let diag = Matrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
        C64::new(rng.random::<f64>(), 0.0)
    }));
    let m = &u * diag * u.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Hermitian matrix with Gaussian entries.
pub fn random_hermitian_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = gaussian_matrix(d, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_unitary<R: Rng + ?Sized>(layout: SlotLayout, rng: &mut R) -> Operator {
    let m = random_unitary_matrix(layout.dim(), rng);
    Operator::new(m, layout).expect("dimension follows layout")
}

pub fn random_density<R: Rng + ?Sized>(layout: SlotLayout, rng: &mut R) -> DensityState {
    let m = random_density_matrix(layout.dim(), rng);
    DensityState::new_unchecked(Operator::new(m, layout).expect("dimension follows layout"))
}

pub fn random_effect<R: Rng + ?Sized>(layout: SlotLayout, rng: &mut R) -> Effect {
    let m = random_effect_matrix(layout.dim(), rng);
    Effect::new(Operator::new(m, layout).expect("dimension follows layout"), 1e-9)
        .expect("spectrum lies in [0, 1]")
}
