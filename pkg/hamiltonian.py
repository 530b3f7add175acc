"""Hamiltonian density, boundary terms and full-chain assembly.

Two construction paths are kept side by side: the explicit nearest-neighbour
density plus boundary terms, and the anticommutator Q Q^dag + Q^dag Q of the
global supercharge.  ``assemble`` builds the first and checks it against the
second.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from config import TOLERANCES
from operators import (
    LinearMap,
    SuperchargeSpec,
    embed_local,
    global_supercharge,
    identity,
    local_supercharge_deformed,
)
from qcore import ParameterError, SpinParams, SusyChainError, c_coefficients, qnum, _check_label

logger = logging.getLogger("susy_chain")

PAULI = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


class HamiltonianError(SusyChainError):
    """Assembly failure or disagreement between construction paths."""
    pass


@dataclass(frozen=True)
class DensityCoeffs:
    ell: int
    beta: Dict[Tuple[int, int, int], float]
    c: np.ndarray


@dataclass(frozen=True)
class HamiltonianSpec:
    spec: SuperchargeSpec
    H: LinearMap
    cross_residual: Optional[float]
    hermitian_residual: float


@lru_cache(maxsize=None)
def density_coeffs(ell: int) -> DensityCoeffs:
    p = SpinParams(ell)
    c = c_coefficients(p)
    beta: Dict[Tuple[int, int, int], float] = {}
    for m1 in range(ell + 1):
        for m2 in range(ell + 1):
            M1, M2 = min(m1, ell - m2), min(m2, ell - m1)
            beta[(m1, m2, 0)] = c[M1 + 1] + c[M2 + 1]
            for n in range(1, M2 + 1):
                beta[(m1, m2, n)] = -math.sqrt(
                    qnum(p, M1 + 1) * qnum(p, M2 - n + 1)
                    / (qnum(p, M2 + 1) * qnum(p, M1 + n + 1))
                ) / qnum(p, n)
    # beta^n_{m1,m2} = beta^{-n}_{m2,m1}
    for (m1, m2, n), value in list(beta.items()):
        if n > 0:
            beta[(m2, m1, -n)] = value
    return DensityCoeffs(ell=ell, beta=beta, c=c)


def density_explicit(p: SpinParams) -> LinearMap:
    d = p.d
    h = np.zeros((d * d, d * d))
    for (m1, m2, n), value in density_coeffs(p.ell).beta.items():
        h[(m1 + n) * d + (m2 - n), m1 * d + m2] += value
    return LinearMap(p.ell, 2, 2, h)


def density_from_supercharge(p: SpinParams, y: complex = 0j) -> LinearMap:
    q = local_supercharge_deformed(p, y)
    qd = q.adjoint()
    one = identity(p, 1)
    qdq = qd @ q
    return (
        -(one.kron(qd) @ q.kron(one))
        - (qd.kron(one) @ one.kron(q))
        + q @ qd
        + 0.5 * (qdq.kron(one) + one.kron(qdq))
    )


def boundary_term(p: SpinParams, y: complex, label: Optional[int] = None) -> LinearMap:
    """h_B^(label)(y) = h_B(q^(2(label+1)) y), h_B(y) = q(y)^dag q(y) / 2."""
    label = p.ell + 1 if label is None else label
    _check_label(p, label, "label")
    shifted = p.root_power(2 * (label + 1)) * complex(y)
    q = local_supercharge_deformed(p, shifted)
    return 0.5 * (q.adjoint() @ q)


def boundary_pauli_coefficients(h_boundary: LinearMap) -> Tuple[float, float, float, float]:
    """Identity and Pauli coefficients (a0, l1, l2, l3) of an ell=1 boundary term."""
    if h_boundary.ell != 1 or h_boundary.L_in != 1 or h_boundary.L_out != 1:
        raise ParameterError("Pauli decomposition needs a single-site ell=1 operator")
    m = h_boundary.toarray()
    return tuple(float(np.real(np.trace(PAULI[a] @ m)) / 2.0) for a in range(4))


def boundary_pauli_closed_form(y: complex) -> Tuple[float, float, float, float]:
    rho, theta = abs(y), float(np.angle(y))
    r2 = rho * rho
    a0 = (1 + 5 * r2 + r2 * r2) / (4 * (1 - r2 + r2 * r2))
    return (
        a0,
        -rho * math.cos(theta) / (1 + r2),
        -rho * math.sin(theta) / (1 + r2),
        -0.25 * (1 - r2) / (1 + r2),
    )


def supercharge_hamiltonian(spec: SuperchargeSpec) -> LinearMap:
    """Q Q^dag + Q^dag Q on V^L; at L=1 only Q^dag Q exists."""
    Q = global_supercharge(spec)
    H = Q.adjoint() @ Q
    if spec.L >= 2:
        Q_prev = global_supercharge(spec.with_length(spec.L - 1))
        H = H + Q_prev @ Q_prev.adjoint()
    return H


def assemble(spec: SuperchargeSpec, cross_check: bool = True,
             tolerance: Optional[float] = None) -> HamiltonianSpec:
    if spec.L < 2:
        raise HamiltonianError(f"the chain Hamiltonian needs L >= 2, got {spec.L}")
    p, L, d = spec.params, spec.L, spec.params.d
    h = density_explicit(p).matrix
    total = sp.csr_matrix((d ** L, d ** L), dtype=complex)
    for i in range(L - 1):
        total = total + embed_local(h, d, L, i, 2, 2)
    total = total + embed_local(boundary_term(p, spec.y, spec.j).matrix, d, L, 0, 1, 1)
    total = total + embed_local(boundary_term(p, spec.y, spec.k).matrix, d, L, L - 1, 1, 1)
    H = LinearMap(p.ell, L, L, total)

    cross = None
    if cross_check:
        tolerance = TOLERANCES["identity"] if tolerance is None else tolerance
        cross = (H - supercharge_hamiltonian(spec)).max_abs() / max(1.0, H.norm_estimate())
        if cross > tolerance:
            logger.error(f"Hamiltonian paths disagree for {spec.describe()}: {cross:.3e}")
            raise HamiltonianError(
                f"density path and anticommutator path differ by {cross:.3e} (tolerance {tolerance:.1e})"
            )
    hermitian = (H - H.adjoint()).max_abs()
    return HamiltonianSpec(spec=spec, H=H, cross_residual=cross, hermitian_residual=hermitian)


def pauli_reference(L: int) -> LinearMap:
    """-1/2 sum (s1 s1 + s2 s2 - s3 s3 / 2) - (s3_1 + s3_L)/4 + (3L - 1)/4, ell = 1."""
    if L < 2:
        raise HamiltonianError(f"the Pauli reference needs L >= 2, got {L}")

    def site_op(ops: Dict[int, np.ndarray]) -> sp.csr_matrix:
        out = sp.identity(1, dtype=complex, format="csr")
        for i in range(L):
            out = sp.kron(out, sp.csr_matrix(ops.get(i, PAULI[0])), format="csr")
        return out

    H = sp.csr_matrix((2 ** L, 2 ** L), dtype=complex)
    for i in range(L - 1):
        bond = (
            site_op({i: PAULI[1], i + 1: PAULI[1]})
            + site_op({i: PAULI[2], i + 1: PAULI[2]})
            - 0.5 * site_op({i: PAULI[3], i + 1: PAULI[3]})
        )
        H = H - 0.5 * bond
    H = H - 0.25 * (site_op({0: PAULI[3]}) + site_op({L - 1: PAULI[3]}))
    H = H + (3 * L - 1) / 4.0 * sp.identity(2 ** L, dtype=complex, format="csr")
    return LinearMap(1, L, L, H)


def canonical_parameters(spec: SuperchargeSpec) -> SuperchargeSpec:
    """Spectrally equivalent spec with real y >= 0, k = ell+1, j >= floor((ell+1)/2).

    H_{j,k}(y) equals H_{j-k-1, ell+1}(q^(2(k+1)) y) as an operator; a
    magnetisation rotation then makes y real and complex conjugation maps
    j to ell - j (mod ell+2).
    """
    p = spec.params
    y = p.root_power(2 * (spec.k + 1)) * spec.y
    j = (spec.j - spec.k - 1) % p.period
    if j < (p.ell + 1) // 2:
        j = (p.ell - j) % p.period
    return SuperchargeSpec(p, spec.L, abs(y), j, p.ell + 1)
