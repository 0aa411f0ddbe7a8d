//! Time-reversal transforms of quantum operations.
//!
//! The state-independent transforms are the double transpose (conjugate
//! Kraus operators) and the scaled adjoint/transpose pair
//! `Θ(Q) = (d_out/d_in) Q^dag`, `Θ'(Q) = (d_out/d_in) Q^T`, which are only
//! defined on time-symmetric operations. The state-dependent ones are
//! Petz-style recovery maps built around reference states.

use crate::error::{Error, Result};
use crate::matrix::{matrix_sqrt_psd, support_pinv_sqrt, support_projector, ComplexMatrix};
use crate::operations::{
    adjoint_map, choi_from_fn, transpose_map, CpMap, Provenance, QuantumOperation,
};
use crate::states::DensityMatrix;
use crate::tolerance::Tolerances;
use crate::tsqt::require_ts;

/// `τ_out ∘ Q ∘ τ_in`; its Choi matrix is the transpose of `Choi(Q)`.
pub fn double_transpose(q: &QuantumOperation) -> QuantumOperation {
    QuantumOperation::trusted(q.d_in(), q.d_out(), q.choi().transpose())
        .with_provenance(Provenance::new("double-transpose"))
}

/// Double transpose of an arbitrary CP map.
pub fn double_transpose_map(q: &CpMap) -> CpMap {
    CpMap::trusted(q.d_in(), q.d_out(), q.choi().transpose()).with_provenance(Provenance::new("double-transpose"))
}

fn scaled(map: CpMap, q: &QuantumOperation, name: &str, tol: &Tolerances) -> Result<QuantumOperation> {
    let s = q.d_out() as f64 / q.d_in() as f64;
    let out = CpMap::trusted(map.d_in(), map.d_out(), map.choi().scale(s));
    Ok(QuantumOperation::from_cp_map(out, tol)?.with_provenance(Provenance::new(name)))
}

/// `Θ(Q) = (d_out/d_in) Q^dag`, defined on time-symmetric operations.
pub fn theta_scaled(q: &QuantumOperation) -> Result<QuantumOperation> {
    theta_scaled_with(q, &Tolerances::DEFAULT)
}

pub fn theta_scaled_with(q: &QuantumOperation, tol: &Tolerances) -> Result<QuantumOperation> {
    require_ts(q, tol)?;
    scaled(adjoint_map(q)?, q, "theta", tol)
}

/// `Θ'(Q) = (d_out/d_in) Q^T`, defined on time-symmetric operations.
pub fn theta_prime_scaled(q: &QuantumOperation) -> Result<QuantumOperation> {
    theta_prime_scaled_with(q, &Tolerances::DEFAULT)
}

pub fn theta_prime_scaled_with(q: &QuantumOperation, tol: &Tolerances) -> Result<QuantumOperation> {
    require_ts(q, tol)?;
    scaled(transpose_map(q)?, q, "theta-prime", tol)
}

/// `Q ↦ Q^dag / d_in`. Always a quantum operation, since `Q(I) <= d_in I`
/// for any trace-non-increasing `Q`.
pub fn weak_adjoint(q: &QuantumOperation) -> Result<QuantumOperation> {
    let adj = adjoint_map(q)?;
    let out = CpMap::trusted(adj.d_in(), adj.d_out(), adj.choi().scale(1.0 / q.d_in() as f64));
    Ok(QuantumOperation::from_cp_map(out, &Tolerances::DEFAULT)?.with_provenance(Provenance::new("weak-adjoint")))
}

fn check_state_dims(q: &CpMap, omega_a: &DensityMatrix, omega_b: &DensityMatrix) -> Result<()> {
    if omega_a.dim() != q.d_in() || omega_b.dim() != q.d_out() {
        return Err(Error::dims(format!(
            "reference states have dims ({}, {}), map is {} -> {}",
            omega_a.dim(),
            omega_b.dim(),
            q.d_in(),
            q.d_out()
        )));
    }
    omega_a.require_normalized()?;
    omega_b.require_normalized()?;
    Ok(())
}

/// Weight of `m` outside the support of `omega`, `Tr[(I - Π) m (I - Π)]`.
fn leakage(m: &ComplexMatrix, omega: &ComplexMatrix, cutoff: f64) -> Result<f64> {
    let pi = support_projector(omega, cutoff)?;
    let off = &ComplexMatrix::identity(omega.rows()) - &pi;
    Ok(off.conjugate(m).trace().re.abs())
}

/// `rho ↦ A R(B rho B) A` with `A`, `B` Hermitian, as a CP map.
fn sandwich(reverse: &CpMap, a: &ComplexMatrix, b: &ComplexMatrix) -> CpMap {
    let choi = choi_from_fn(reverse.d_in(), reverse.d_out(), |e| {
        a.conjugate(&reverse.apply_matrix(&b.conjugate(e)))
    });
    CpMap::trusted(reverse.d_in(), reverse.d_out(), choi)
}

fn petz_core(
    q: &CpMap,
    reverse: &CpMap,
    omega_a: &ComplexMatrix,
    omega_b: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<CpMap> {
    let image = q.apply_matrix(omega_a);
    let leak = leakage(&image, omega_b, tol.support_cutoff)?;
    if leak > tol.equality_tol {
        return Err(Error::SupportMismatch(leak));
    }
    let a = matrix_sqrt_psd(omega_a)?;
    let b = support_pinv_sqrt(omega_b, tol.support_cutoff)?;
    Ok(sandwich(reverse, &a, &b))
}

/// `rho ↦ ω_A^{1/2} Q^dag(ω_B^{-1/2} rho ω_B^{-1/2}) ω_A^{1/2}`, with the
/// inverse taken on the support of `ω_B`. Components of `rho` outside that
/// support are annihilated.
pub fn petz_reversal(q: &CpMap, omega_a: &DensityMatrix, omega_b: &DensityMatrix) -> Result<CpMap> {
    petz_reversal_with(q, omega_a, omega_b, &Tolerances::DEFAULT)
}

pub fn petz_reversal_with(
    q: &CpMap,
    omega_a: &DensityMatrix,
    omega_b: &DensityMatrix,
    tol: &Tolerances,
) -> Result<CpMap> {
    check_state_dims(q, omega_a, omega_b)?;
    let out = petz_core(q, &adjoint_map(q)?, omega_a.matrix(), omega_b.matrix(), tol)?;
    Ok(out.with_provenance(
        Provenance::new("petz")
            .with_state("omega_a", omega_a.matrix())
            .with_state("omega_b", omega_b.matrix()),
    ))
}

/// `rho ↦ ω_A*^{1/2} Q^T(ω_B*^{-1/2} rho ω_B*^{-1/2}) ω_A*^{1/2}`, the
/// transpose analogue of [`petz_reversal`] with complex-conjugated reference
/// states. The support condition is on `Q^*`, the double transpose.
pub fn petz_reversal_transpose(q: &CpMap, omega_a: &DensityMatrix, omega_b: &DensityMatrix) -> Result<CpMap> {
    petz_reversal_transpose_with(q, omega_a, omega_b, &Tolerances::DEFAULT)
}

pub fn petz_reversal_transpose_with(
    q: &CpMap,
    omega_a: &DensityMatrix,
    omega_b: &DensityMatrix,
    tol: &Tolerances,
) -> Result<CpMap> {
    check_state_dims(q, omega_a, omega_b)?;
    let conj_q = double_transpose_map(q);
    let out = petz_core(
        &conj_q,
        &transpose_map(q)?,
        &omega_a.matrix().conj(),
        &omega_b.matrix().conj(),
        tol,
    )?;
    Ok(out.with_provenance(
        Provenance::new("petz-transpose")
            .with_state("omega_a", omega_a.matrix())
            .with_state("omega_b", omega_b.matrix()),
    ))
}

fn require_channel(c: &CpMap, tol: &Tolerances) -> Result<()> {
    let defect = c.tp_defect();
    if defect > tol.equality_tol {
        return Err(Error::NotChannel(defect));
    }
    Ok(())
}

/// Petz reversal of a channel around `rho0`, with `ω_B = C(rho0)`. Maps
/// `C(rho0)` back to `rho0`.
pub fn crooks_reversal(c: &QuantumOperation, rho0: &DensityMatrix) -> Result<CpMap> {
    crooks_reversal_with(c, rho0, &Tolerances::DEFAULT)
}

pub fn crooks_reversal_with(c: &QuantumOperation, rho0: &DensityMatrix, tol: &Tolerances) -> Result<CpMap> {
    require_channel(c, tol)?;
    if rho0.dim() != c.d_in() {
        return Err(Error::dims(format!("rho0 has dim {}, channel expects {}", rho0.dim(), c.d_in())));
    }
    rho0.require_normalized()?;
    let sigma = c.apply_matrix(rho0.matrix()).hermitian_part();
    let out = petz_core(c, &adjoint_map(c)?, rho0.matrix(), &sigma, tol)?;
    Ok(out.with_provenance(Provenance::new("crooks").with_state("rho0", rho0.matrix())))
}

/// `rho ↦ rho0^{1/2} Q^dag(σ^{-1/2} rho σ^{-1/2}) rho0^{1/2}` with
/// `σ = C0(rho0)`, where `C0 = Q + Q'` is a channel completing `Q`.
/// The result is checked to be a quantum operation.
pub fn crooks_reversal_operation(
    q: &QuantumOperation,
    c0: &QuantumOperation,
    rho0: &DensityMatrix,
) -> Result<QuantumOperation> {
    crooks_reversal_operation_with(q, c0, rho0, &Tolerances::DEFAULT)
}

pub fn crooks_reversal_operation_with(
    q: &QuantumOperation,
    c0: &QuantumOperation,
    rho0: &DensityMatrix,
    tol: &Tolerances,
) -> Result<QuantumOperation> {
    if (q.d_in(), q.d_out()) != (c0.d_in(), c0.d_out()) {
        return Err(Error::dims("q and c0 have different dimensions"));
    }
    require_channel(c0, tol)?;
    let rest = c0.choi() - q.choi();
    let min = crate::matrix::hermitian_eig(&rest)?.min();
    if min < -tol.psd_tol {
        return Err(Error::NotComplementary(min));
    }
    if rho0.dim() != q.d_in() {
        return Err(Error::dims(format!("rho0 has dim {}, operation expects {}", rho0.dim(), q.d_in())));
    }
    rho0.require_normalized()?;
    let sigma = c0.apply_matrix(rho0.matrix()).hermitian_part();
    let a = matrix_sqrt_psd(rho0.matrix())?;
    let b = support_pinv_sqrt(&sigma, tol.support_cutoff)?;
    let out = sandwich(&adjoint_map(q)?, &a, &b);
    let op = QuantumOperation::from_cp_map(out, tol).map_err(|e| {
        Error::InvariantViolation(format!("Crooks reversal of an operation left the operation set: {e}"))
    })?;
    Ok(op.with_provenance(
        Provenance::new("crooks-operation")
            .with_state("rho0", rho0.matrix())
            .with_state("c0_image", &sigma),
    ))
}
