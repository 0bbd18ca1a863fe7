//! Dense complex linear algebra on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Largest entrywise deviation of `U†U` from the identity.
pub fn unitarity_deviation(u: &Matrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Largest entrywise deviation of `h` from `h†`.
pub fn hermiticity_deviation(h: &Matrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitian_part(h: &Matrix) -> Matrix {
    (h + h.adjoint()).scale(0.5)
}

/// A largest eigenvalue together with a normalized eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vector,
}

/// Largest eigenvalue of a Hermitian matrix and a unit eigenvector for it.
///
/// With a degenerate top eigenvalue any vector of the eigenspace may be returned.
pub fn max_eigenpair(h: &Matrix, tol: f64) -> Result<EigenPair> {
    let dev = hermiticity_deviation(h);
    if dev > tol {
        return Err(Error::NotHermitian(dev));
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let vector = eig.eigenvectors.column(best).into_owned();
    let norm = vector.norm();
    Ok(EigenPair {
        value: eig.eigenvalues[best],
        vector: vector.unscale(norm),
    })
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues(h: &Matrix, tol: f64) -> Result<alloc::vec::Vec<f64>> {
    let dev = hermiticity_deviation(h);
    if dev > tol {
        return Err(Error::NotHermitian(dev));
    }
    let mut values: alloc::vec::Vec<f64> =
        hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Unitary factor of the polar decomposition: the unitary maximizing `Re tr(U† a)`.
pub fn polar_unitary(a: &Matrix) -> Matrix {
    assert!(a.is_square(), "polar_unitary needs a square matrix");
    if a.nrows() == 0 {
        return a.clone();
    }
    let svd = a.clone().svd(true, true);
    let u = orthonormal_columns(svd.u.expect("left singular vectors requested"));
    let v = orthonormal_columns(svd.v_t.expect("right singular vectors requested").adjoint());
    u * v.adjoint()
}

/// Singular vectors of (near) zero singular values can come back slightly
/// off; Gram-Schmidt in order keeps the leading columns and completes the rest.
fn orthonormal_columns(m: Matrix) -> Matrix {
    if unitarity_deviation(&m) < 1e-13 {
        return m;
    }
    phase_fixed_q(m)
}

/// `Q` of a QR factorization with the diagonal of `R` made positive.
fn phase_fixed_q(m: Matrix) -> Matrix {
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &Matrix) -> Matrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = m.nrows();
    let mut out = Matrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        // Rounding noise around a zero eigenvalue would otherwise grow to its square root.
        if lambda <= 1e-14 {
            continue;
        }
        let s = C64::from(lambda.sqrt());
        out += (&col * col.adjoint()) * s;
    }
    out
}

/// `|v⟩⟨v|`.
pub fn projector_onto(v: &Vector) -> Matrix {
    v * v.adjoint()
}

/// Fidelity `‖√ρ √σ‖₁ = tr √(√ρ σ √ρ)` of two density operators.
///
/// Pure inputs are detected from the spectrum and handled through an overlap.
pub fn fidelity(rho: &Matrix, sigma: &Matrix, tol: f64) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: sigma.nrows(),
        });
    }
    let rho_eig = check_density(rho, tol)?;
    let sigma_eig = check_density(sigma, tol)?;
    if let Some(v) = pure_vector(&rho_eig) {
        return Ok(expectation(sigma, &v).max(0.0).sqrt().min(1.0));
    }
    if let Some(v) = pure_vector(&sigma_eig) {
        return Ok(expectation(rho, &v).max(0.0).sqrt().min(1.0));
    }
    // Singular values of √ρ √σ avoid square roots of rounding noise.
    let f: f64 = (sqrt_psd(rho) * sqrt_psd(sigma)).singular_values().iter().sum();
    Ok(f.min(1.0))
}

/// Fidelity of two pure states, `|⟨a|b⟩|`.
pub fn pure_fidelity(a: &Vector, b: &Vector) -> f64 {
    a.dotc(b).norm()
}

fn expectation(m: &Matrix, v: &Vector) -> f64 {
    v.dotc(&(m * v)).re
}

fn check_density(m: &Matrix, tol: f64) -> Result<nalgebra::SymmetricEigen<C64, nalgebra::Dyn>> {
    let dev = hermiticity_deviation(m);
    if dev > tol {
        return Err(Error::NotHermitian(dev));
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-9 {
        return Err(Error::NotNormalized(trace.re));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(Error::NotPositive(min));
    }
    Ok(eig)
}

fn pure_vector(eig: &nalgebra::SymmetricEigen<C64, nalgebra::Dyn>) -> Option<Vector> {
    let (idx, &top) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    (top > 1.0 - 1e-12).then(|| eig.eigenvectors.column(idx).into_owned())
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random unitary via QR of a complex Gaussian matrix with the phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| gaussian(rng));
    phase_fixed_q(g)
}

/// Uniformly random unit vector.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    let v = Vector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Random density operator of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(dim, rank.max(1), |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.unscale(t)
}

/// Small unitary helpers used by fixtures and transforms.
pub mod gates {
    use super::*;

    pub fn ry(theta: f64) -> Matrix {
        let (s, c) = (theta / 2.0).sin_cos();
        Matrix::from_row_slice(
            2,
            2,
            &[C64::from(c), C64::from(-s), C64::from(s), C64::from(c)],
        )
    }

    pub fn rz(phi: f64) -> Matrix {
        let h = phi / 2.0;
        Matrix::from_row_slice(
            2,
            2,
            &[C64::from_polar(1.0, -h), ZERO, ZERO, C64::from_polar(1.0, h)],
        )
    }

    /// `Rz(φ) Ry(θ) Rz(λ)`; covers SU(2) up to a global phase.
    pub fn euler(theta: f64, phi: f64, lambda: f64) -> Matrix {
        rz(phi) * ry(theta) * rz(lambda)
    }

    pub fn hadamard() -> Matrix {
        let h = C64::from(core::f64::consts::FRAC_1_SQRT_2);
        Matrix::from_row_slice(2, 2, &[h, h, h, -h])
    }

    pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        a.kronecker(b)
    }
}

#[cfg(test)]
mod tests {
    use alloc::vec;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_iterator(
            values.len(),
            values.iter().map(|&x| C64::from(x)),
        ))
    }

    fn pure(v: &[C64]) -> Matrix {
        projector_onto(&Vector::from_column_slice(v))
    }

    #[test]
    fn top_eigenpair_of_diagonal() {
        let pair = max_eigenpair(&diag(&[0.2, 0.7]), 1e-10).unwrap();
        assert!((pair.value - 0.7).abs() < 1e-12);
        assert!((pair.vector[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_identity_gives_unit_vector() {
        let pair = max_eigenpair(&Matrix::identity(4, 4), 1e-10).unwrap();
        assert!((pair.value - 1.0).abs() < 1e-12);
        assert!((pair.vector.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenpair_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 5, 16] {
            let g = haar_unitary(dim, &mut rng);
            let h = hermitian_part(&(&g + diag(&vec![0.3; dim])));
            let pair = max_eigenpair(&h, 1e-10).unwrap();
            let residual = (&h * &pair.vector - pair.vector.scale(pair.value)).norm();
            assert!(residual < 1e-9, "residual {residual}");
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(max_eigenpair(&m, 1e-10), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(4, &mut rng);
        assert!((polar_unitary(&u) - &u).norm() < 1e-10);
    }

    #[test]
    fn polar_of_positive_diagonal_is_identity() {
        let p = polar_unitary(&diag(&[3.0, 0.5, 1.0]));
        assert!((p - Matrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn polar_of_signed_diagonal_matches_phase_grid() {
        let a = diag(&[2.0, -1.0]);
        let p = polar_unitary(&a);
        // Oracle: grid over diagonal phase unitaries diag(e^{ia}, e^{ib}).
        let steps = 64;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..steps {
            for j in 0..steps {
                let (x, y) = (
                    core::f64::consts::TAU * i as f64 / steps as f64,
                    core::f64::consts::TAU * j as f64 / steps as f64,
                );
                let value = 2.0 * x.cos() - y.cos();
                if value > best.0 {
                    best = (value, x, y);
                }
            }
        }
        let oracle = Matrix::from_diagonal(&Vector::from_vec(vec![
            C64::from_polar(1.0, best.1),
            C64::from_polar(1.0, best.2),
        ]));
        assert!((&p - &oracle).norm() < 1e-12);
        assert!((&p - diag(&[1.0, -1.0])).norm() < 1e-12);
        let t = (p.adjoint() * &a).trace();
        assert!((t.re - 3.0).abs() < 1e-12 && t.im.abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let zero = pure(&[ONE, ZERO]);
        let one = pure(&[ZERO, ONE]);
        let h = C64::from(core::f64::consts::FRAC_1_SQRT_2);
        let plus = pure(&[h, h]);
        assert!((fidelity(&zero, &zero, 1e-10).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one, 1e-10).unwrap().abs() < 1e-12);
        // Oracle: |⟨0|+⟩| computed from the vectors directly.
        let overlap = pure_fidelity(
            &Vector::from_vec(vec![ONE, ZERO]),
            &Vector::from_vec(vec![h, h]),
        );
        let f = fidelity(&zero, &plus, 1e-10).unwrap();
        assert!((f - overlap).abs() < 1e-12);
        assert!((f - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn mixed_fidelity_matches_commuting_formula() {
        // Commuting diagonal states: F = Σ √(p_i q_i).
        let rho = diag(&[0.5, 0.3, 0.2]);
        let sigma = diag(&[0.1, 0.6, 0.3]);
        let expected: f64 = [0.5_f64 * 0.1, 0.3 * 0.6, 0.2 * 0.3].iter().map(|x| x.sqrt()).sum();
        let f = fidelity(&rho, &sigma, 1e-10).unwrap();
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_bad_input() {
        let rho = diag(&[0.5, 0.5]);
        assert!(matches!(
            fidelity(&rho, &diag(&[1.0, 0.0, 0.0]), 1e-10),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            fidelity(&rho, &diag(&[1.5, -0.5]), 1e-10),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in 1..9 {
            assert!(unitarity_deviation(&haar_unitary(dim, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn euler_angles_are_unitary() {
        let u = gates::euler(0.3, 1.2, -0.7);
        assert!(unitarity_deviation(&u) < 1e-14);
    }
}
