//! Standard gate and single-site basis matrices.

use super::{Matrix, C64, I, ONE, ZERO};

fn from_rows(rows: &[&[C64]]) -> Matrix {
    let n = rows.len();
    Matrix::from_fn(n, n, |r, c| rows[r][c])
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> Matrix {
    Matrix::identity(d, d)
}

pub fn pauli_x() -> Matrix {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> Matrix {
    from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> Matrix {
    from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

pub fn hadamard() -> Matrix {
    let h = re(std::f64::consts::FRAC_1_SQRT_2);
    from_rows(&[&[h, h], &[h, -h]])
}

/// `|k⟩⟨k|` in dimension `d`.
pub fn projector(d: usize, k: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    m[(k, k)] = ONE;
    m
}

/// Generalised shift `|k⟩ ↦ |k+1 mod d⟩`; the Pauli X for `d = 2`.
pub fn shift(d: usize) -> Matrix {
    Matrix::from_fn(d, d, |r, c| if r == (c + 1) % d { ONE } else { ZERO })
}

/// Two-qudit swap on `a ⊗ b`.
pub fn swap(d: usize) -> Matrix {
    let n = d * d;
    Matrix::from_fn(n, n, |r, c| {
        let (a, b) = (c / d, c % d);
        if r == b * d + a {
            ONE
        } else {
            ZERO
        }
    })
}

/// `cos θ · 1 + i sin θ · SWAP`.
pub fn partial_swap(d: usize, theta: f64) -> Matrix {
    identity(d * d) * re(theta.cos()) + swap(d) * (I * theta.sin())
}

/// `partial_swap(θ)` followed by the phase `e^{iφ}` on `|d−1, d−1⟩`.
pub fn partial_swap_phase(d: usize, theta: f64, phi: f64) -> Matrix {
    controlled_phase(d, phi) * partial_swap(d, theta)
}

/// Phase `e^{iφ}` on `|d−1, d−1⟩`.
pub fn controlled_phase(d: usize, phi: f64) -> Matrix {
    let n = d * d;
    let mut m = identity(n);
    m[(n - 1, n - 1)] = C64::from_polar(1.0, phi);
    m
}

/// On `site ⊗ probe`: applies `shift` to the site when the probe is in its
/// top level `|d_p − 1⟩`.
pub fn probe_controlled_shift(site_dim: usize, probe_dim: usize) -> Matrix {
    let n = site_dim * probe_dim;
    let x = shift(site_dim);
    Matrix::from_fn(n, n, |r, c| {
        let (sr, pr) = (r / probe_dim, r % probe_dim);
        let (sc, pc) = (c / probe_dim, c % probe_dim);
        if pr != pc {
            ZERO
        } else if pr == probe_dim - 1 {
            x[(sr, sc)]
        } else if sr == sc {
            ONE
        } else {
            ZERO
        }
    })
}

/// On `site ⊗ probe`: applies `shift` to the probe when the site is in its
/// top level.
pub fn site_controlled_shift(site_dim: usize, probe_dim: usize) -> Matrix {
    let n = site_dim * probe_dim;
    let x = shift(probe_dim);
    Matrix::from_fn(n, n, |r, c| {
        let (sr, pr) = (r / probe_dim, r % probe_dim);
        let (sc, pc) = (c / probe_dim, c % probe_dim);
        if sr != sc {
            ZERO
        } else if sr == site_dim - 1 {
            x[(pr, pc)]
        } else if pr == pc {
            ONE
        } else {
            ZERO
        }
    })
}

/// Generalised Gell-Mann basis with the identity first: `d²` Hermitian,
/// trace-orthogonal matrices of operator norm at most one. For `d = 2` this is
/// `1, X, Y, Z`.
pub fn gell_mann(d: usize) -> Vec<Matrix> {
    let mut out = vec![identity(d)];
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = Matrix::zeros(d, d);
            sym[(j, k)] = ONE;
            sym[(k, j)] = ONE;
            out.push(sym);
            let mut anti = Matrix::zeros(d, d);
            anti[(j, k)] = -I;
            anti[(k, j)] = I;
            out.push(anti);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = Matrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = re(norm);
        }
        m[(l, l)] = re(-(l as f64) * norm);
        out.push(m);
    }
    out
}
