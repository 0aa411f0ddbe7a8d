//! Density matrices, possibly subnormalized, and the state-level quantities
//! built on them: fidelity, ray product, purification and conditioning.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{
    ginibre, hermitian_eig, inner, kron_vec, matrix_sqrt_psd, phase_fix_vector, seeded_rng,
    singular_values, vector_norm, ComplexMatrix, C64, ZERO,
};
use crate::tolerance::Tolerances;

/// A positive semidefinite operator with trace at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        mat.require_square()?;
        let defect = mat.hermiticity_defect();
        if defect > tol.hermiticity_tol {
            return Err(Error::NotHermitian(defect));
        }
        let min = hermitian_eig(&mat)?.min();
        if min < -tol.psd_tol {
            return Err(Error::NotPSD(min));
        }
        let tr = mat.trace().re;
        if tr > 1.0 + tol.equality_tol {
            return Err(Error::TraceAboveOne(tr));
        }
        Ok(DensityMatrix {
            mat: mat.hermitian_part(),
        })
    }

    /// Wraps a matrix produced by a construction that guarantees the
    /// invariants up to rounding. Only the Hermitian part is kept.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        DensityMatrix {
            mat: mat.hermitian_part(),
        }
    }

    /// Pure state `|psi><psi|`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = vector_norm(psi);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitVector(n));
        }
        Ok(DensityMatrix {
            mat: ComplexMatrix::outer(psi),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized(Tolerances::DEFAULT.equality_tol) {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.trace()))
        }
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, evaluated as the
/// squared sum of singular values of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dims(format!(
            "fidelity of states with dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    rho.require_normalized()?;
    sigma.require_normalized()?;
    let a = matrix_sqrt_psd(rho.matrix())?;
    let b = matrix_sqrt_psd(sigma.matrix())?;
    let s: f64 = singular_values(&a.matmul(&b)).iter().sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// `|<psi|phi>|`, the overlap of the rays through two unit vectors.
pub fn ray_product(psi: &[C64], phi: &[C64]) -> Result<f64> {
    for v in [psi, phi] {
        let n = vector_norm(v);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitVector(n));
        }
    }
    if psi.len() != phi.len() {
        return Err(Error::dims("ray product of vectors of different length"));
    }
    Ok(inner(psi, phi).norm().min(1.0))
}

/// `I/d`.
pub fn maximally_mixed(d: usize) -> DensityMatrix {
    DensityMatrix {
        mat: ComplexMatrix::identity(d).scale(1.0 / d as f64),
    }
}

/// `rho / Tr[rho]`.
pub fn condition(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let tr = rho.trace();
    if tr <= Tolerances::DEFAULT.support_cutoff {
        return Err(Error::ZeroTrace(tr));
    }
    Ok(DensityMatrix {
        mat: rho.mat.scale(1.0 / tr),
    })
}

/// A purification `Σ_i sqrt(λ_i) v_i ⊗ e_i` on `H ⊗ H_ancilla`, with each
/// eigenvector phase-fixed so its first significant entry is real positive.
pub fn purify(rho: &DensityMatrix) -> Result<Vec<C64>> {
    rho.require_normalized()?;
    let d = rho.dim();
    let eig = hermitian_eig(rho.matrix())?;
    let mut out = vec![ZERO; d * d];
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let v = phase_fix_vector(&eig.vectors.col(k));
        let mut e = vec![ZERO; d];
        e[k] = C64::new(lam.sqrt(), 0.0);
        for (o, x) in out.iter_mut().zip(kron_vec(&v, &e)) {
            *o += x;
        }
    }
    let n = vector_norm(&out);
    Ok(out.into_iter().map(|z| z / n).collect())
}

/// Random full-rank state `G G^dag / Tr` from a Ginibre matrix.
pub fn random_density_rng<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let p = g.matmul(&g.dagger());
    let tr = p.trace().re;
    DensityMatrix::from_trusted(p.scale(1.0 / tr))
}

pub fn random_density(d: usize, seed: u64) -> DensityMatrix {
    random_density_rng(d, &mut seeded_rng(seed))
}

/// Random pure state drawn uniformly from the unit sphere.
pub fn random_pure_rng<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::outer(&crate::matrix::random_vector(d, rng)))
}
