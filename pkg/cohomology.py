"""Numerical (co)homology of the supercharge complex.

Ranks come from singular values with a relative cutoff; a rank is flagged
indeterminate when a singular value falls inside the ambiguity band.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from config import DENSE_DIM_CAP, THREADS, TOLERANCES
from hamiltonian import supercharge_hamiltonian
from operators import (
    LinearMap,
    StateVector,
    SuperchargeSpec,
    global_supercharge,
    s_map,
    special_state,
    spin_reversal,
)
from qcore import SpinParams, SusyChainError, chi_vector, qnum
from spectra import GroundState, distinguished_digits, zero_threshold

logger = logging.getLogger("susy_chain")


class CohomologyError(SusyChainError):
    """Input outside the kernel, or a rank that cannot be computed."""
    pass


@dataclass(frozen=True)
class RankResult:
    rank: int
    indeterminate: bool
    sigma_max: float


@dataclass(frozen=True)
class BettiRow:
    L: int
    dim_kernel: int
    incoming_rank: int
    betti: int
    indeterminate: bool
    hodge: Optional[int] = None


@dataclass(frozen=True)
class CohomologyReport:
    ell: int
    y: complex
    j: int
    k: int
    rows: List[BettiRow]
    rank_tolerance: float

    @property
    def bettis(self) -> List[int]:
        return [row.betti for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ell": self.ell,
            "y": [self.y.real, self.y.imag],
            "j": self.j,
            "k": self.k,
            "rank_tolerance": self.rank_tolerance,
            "euler_characteristic": euler_characteristic(self),
            "rows": [row.__dict__ for row in self.rows],
        }


@dataclass(frozen=True)
class Representative:
    L: int
    vector: StateVector


@dataclass(frozen=True)
class Certificate:
    phi: Optional[StateVector]
    residual: float


def numerical_rank(A: LinearMap, cutoff: Optional[float] = None) -> RankResult:
    cutoff = TOLERANCES["rank_cutoff"] if cutoff is None else cutoff
    low, high = TOLERANCES["rank_band_low"], TOLERANCES["rank_band_high"]
    if min(A.matrix.shape) > DENSE_DIM_CAP:
        raise CohomologyError(f"rank of a {A.matrix.shape} map exceeds the dense cap {DENSE_DIM_CAP}")
    sv = sla.svdvals(A.toarray())
    if sv.size == 0 or sv[0] == 0:
        return RankResult(rank=0, indeterminate=False, sigma_max=0.0)
    smax = float(sv[0])
    rank = int(np.sum(sv > cutoff * smax))
    indeterminate = bool(np.any((sv >= low * smax) & (sv <= high * smax)))
    if indeterminate:
        logger.warning(f"Indeterminate rank for map V^{A.L_in} -> V^{A.L_out}")
    return RankResult(rank=rank, indeterminate=indeterminate, sigma_max=smax)


def hodge_betti(spec: SuperchargeSpec) -> int:
    """Zero modes of Q Q^dag + Q^dag Q (Q^dag Q at L=1)."""
    H = supercharge_hamiltonian(spec)
    vals = sla.eigvalsh(H.toarray())
    return int(np.sum(np.abs(vals) < zero_threshold(H)))


def betti_numbers(spec: SuperchargeSpec, L_max: int, hodge: bool = False,
                  threads: Optional[int] = None) -> CohomologyReport:
    lengths = list(range(1, L_max + 1))
    with ThreadPoolExecutor(max_workers=threads or THREADS) as pool:
        ranks = list(pool.map(lambda L: numerical_rank(global_supercharge(spec.with_length(L))), lengths))

    rows = []
    for L, out in zip(lengths, ranks):
        incoming = ranks[L - 2] if L >= 2 else None
        dim_kernel = spec.params.d ** L - out.rank
        betti = dim_kernel - (incoming.rank if incoming else 0)
        rows.append(
            BettiRow(
                L=L,
                dim_kernel=dim_kernel,
                incoming_rank=incoming.rank if incoming else 0,
                betti=betti,
                indeterminate=out.indeterminate or bool(incoming and incoming.indeterminate),
                hodge=hodge_betti(spec.with_length(L)) if hodge else None,
            )
        )
    return CohomologyReport(
        ell=spec.ell, y=spec.y, j=spec.j, k=spec.k, rows=rows,
        rank_tolerance=TOLERANCES["rank_cutoff"],
    )


def euler_characteristic(report: CohomologyReport) -> int:
    return sum((-1) ** row.L * row.betti for row in report.rows)


def representative(p: SpinParams, L: int) -> Representative:
    """chi^(x)n for L = 2n, |0> (x) chi^(x)(n-1) for L = 2n - 1."""
    chi = special_state(p.ell, chi_vector(p).amplitudes)
    state = StateVector.basis(p.ell, (0,)) if L % 2 else StateVector.empty(p.ell)
    for _ in range(L // 2):
        state = state.tensor(chi)
    return Representative(L=L, vector=state)


def reversed_representative(p: SpinParams, L: int) -> Representative:
    return Representative(L=L, vector=spin_reversal(p, L) @ representative(p, L).vector)


def _least_squares(A: LinearMap, target: StateVector) -> Certificate:
    b = target.amplitudes
    if max(A.matrix.shape) <= DENSE_DIM_CAP:
        x, *_ = sla.lstsq(A.toarray(), b)
    else:
        x = spla.lsqr(A.matrix, b, atol=1e-14, btol=1e-14, iter_lim=20 * A.matrix.shape[1])[0]
    phi = StateVector(A.ell, A.L_in, x)
    return Certificate(phi=phi, residual=float(np.linalg.norm(A.matrix @ x - b)))


def _check_state(psi: StateVector, p: SpinParams, L: int) -> None:
    if psi.ell != p.ell or psi.length != L:
        raise CohomologyError(f"state of (ell, L) = ({psi.ell}, {psi.length}), expected ({p.ell}, {L})")


def class_decomposition(psi: StateVector, p: SpinParams, L: int) -> Tuple[complex, Certificate]:
    """psi = lambda * rep + Q phi for a cocycle psi of the y=0 charge."""
    _check_state(psi, p, L)
    spec = SuperchargeSpec(p, L)
    scale = max(1.0, psi.norm())
    if (global_supercharge(spec) @ psi).norm() > TOLERANCES["certificate"] * scale:
        raise CohomologyError("state is not annihilated by Q")
    lam = psi.component(distinguished_digits(p.ell, L))
    target = psi - representative(p, L).vector * lam
    if L == 1:
        cert = Certificate(phi=None, residual=target.norm())
    else:
        cert = _least_squares(global_supercharge(spec.with_length(L - 1)), target)
    if cert.residual > TOLERANCES["certificate"] * scale:
        raise CohomologyError(f"no coboundary certificate (residual {cert.residual:.2e})")
    return lam, cert


def homology_decomposition(psi: StateVector, p: SpinParams, L: int) -> Tuple[complex, Certificate]:
    """psi = mu |0 ell 0 ell ...> + Q^dag phi for a cycle psi of the y=0 charge."""
    _check_state(psi, p, L)
    spec = SuperchargeSpec(p, L)
    scale = max(1.0, psi.norm())
    if L >= 2:
        qdag_prev = global_supercharge(spec.with_length(L - 1)).adjoint()
        if (qdag_prev @ psi).norm() > TOLERANCES["certificate"] * scale:
            raise CohomologyError("state is not annihilated by Q^dag")
    mu = representative(p, L).vector.vdot(psi)
    target = psi - StateVector.basis(p.ell, distinguished_digits(p.ell, L)) * mu
    cert = _least_squares(global_supercharge(spec).adjoint(), target)
    if cert.residual > TOLERANCES["certificate"] * scale:
        raise CohomologyError(f"no boundary certificate (residual {cert.residual:.2e})")
    return mu, cert


def square_norm_residual(gs: GroundState) -> float:
    """Relative deviation of |psi|^2 from psi_dist * <psi|rep>."""
    psi = gs.vector
    p = gs.spec.params
    rhs = gs.distinguished_component * psi.vdot(representative(p, psi.length).vector)
    norm2 = psi.norm() ** 2
    return abs(norm2 - rhs) / norm2


def special_component_residual(gs: GroundState) -> float:
    """Max relative deviation of (psi)_{p1, ell-p1, ...} prod {p_i+1} from psi_dist over
    weakly increasing p; even lengths only."""
    psi, p = gs.vector, gs.spec.params
    if psi.length % 2:
        raise CohomologyError("the special-component identity concerns even lengths")
    n = psi.length // 2
    reference = gs.distinguished_component
    worst = 0.0
    for seq in itertools.combinations_with_replacement(range(p.d), n):
        digits = [v for m in seq for v in (m, p.ell - m)]
        weight = np.prod([qnum(p, m + 1) for m in seq])
        worst = max(worst, abs(psi.component(digits) * weight - reference) / abs(reference))
    return worst


def s_map_commutator(p: SpinParams, L: int) -> float:
    """max |Q S - S Q| on V^L at y = 0."""
    spec = SuperchargeSpec(p, L)
    left = global_supercharge(spec.with_length(L + 2)) @ s_map(p, L)
    right = s_map(p, L + 1) @ global_supercharge(spec)
    return (left - right).max_abs()
