"""Eigensolvers, zero-energy states, doublet matching and conformal fits."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import psutil
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from config import (
    DENSE_DIM_CAP,
    DENSE_GROUND_CAP,
    SOLVER_FALLBACK_ORDER,
    THREADS,
    TOLERANCES,
)
from ground_state_cache import GroundStateCache
from hamiltonian import HamiltonianSpec, assemble, supercharge_hamiltonian
from operators import (
    LinearMap,
    StateVector,
    SuperchargeSpec,
    digits_to_index,
    global_supercharge,
    magnetisation,
)
from qcore import ParameterError, SpinParams, SusyChainError

logger = logging.getLogger("susy_chain")

FERMI_VELOCITY = 3.0 * math.sqrt(3.0) / 2.0
SHIFT = 0.05


class SpectrumError(SusyChainError):
    """Infeasible or failed eigensolve, or an unexpected zero-mode count."""
    pass


class FitError(SusyChainError):
    """Finite-size fit with too few points, mixed parity or a singular design."""
    pass


@dataclass(frozen=True)
class SpectrumReport:
    spec: SuperchargeSpec
    eigenvalues: np.ndarray
    zero_multiplicity: int
    threshold: float
    solver: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.describe(),
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "zero_multiplicity": self.zero_multiplicity,
            "threshold": self.threshold,
            "solver": self.solver,
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class GroundState:
    spec: SuperchargeSpec
    vector: StateVector
    energy: float
    residual_q: float
    residual_qdag: float
    phase_fixed: bool = True

    @property
    def distinguished_component(self) -> complex:
        return self.vector.component(distinguished_digits(self.spec.ell, self.spec.L))


@dataclass(frozen=True)
class DoubletTable:
    matched: List[Tuple[float, float]]
    unmatched: List[float]
    tolerance: float


@dataclass(frozen=True)
class ScalingFit:
    lengths: Tuple[int, ...]
    estimates: Dict[str, float]
    uncertainties: Dict[str, float]
    residual_norm: float
    v_F: float
    c: float
    pinned: bool
    correction_order: int


def distinguished_digits(ell: int, L: int) -> Tuple[int, ...]:
    """0 ell 0 ell ... (ending in 0 for odd L)."""
    return tuple(0 if i % 2 == 0 else ell for i in range(L))


def zero_threshold(H: LinearMap) -> float:
    return TOLERANCES["zero"] * max(1.0, H.norm_estimate())


def _solver_matrix(H: LinearMap):
    m = H.matrix
    if m.nnz == 0 or not np.any(m.data.imag):
        return m.real.tocsr()
    return m


def _dense_feasible(dim: int, cap: int) -> bool:
    if dim > cap:
        return False
    needed = 16 * dim * dim * 4
    return psutil.virtual_memory().available > needed


def _solve_dense(H: LinearMap, k: int, cap: int = DENSE_DIM_CAP):
    dim = H.matrix.shape[0]
    if not _dense_feasible(dim, cap):
        raise SpectrumError(f"dimension {dim} exceeds the dense cap {cap}")
    vals, vecs = sla.eigh(_solver_matrix(H).toarray())
    return vals[:k], vecs[:, :k]


def _solve_shift_invert(H: LinearMap, k: int, cap: int = DENSE_DIM_CAP):
    vals, vecs = spla.eigsh(_solver_matrix(H), k=k, sigma=-SHIFT, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _solve_lanczos(H: LinearMap, k: int, cap: int = DENSE_DIM_CAP):
    dim = H.matrix.shape[0]
    vals, vecs = spla.eigsh(_solver_matrix(H), k=k, which="SA", tol=1e-13, maxiter=50 * dim)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _solve_lobpcg(H: LinearMap, k: int, cap: int = DENSE_DIM_CAP):
    A = _solver_matrix(H)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((A.shape[0], k))
    if np.iscomplexobj(A.data):
        X = X + 1j * rng.standard_normal((A.shape[0], k))
    vals, vecs = spla.lobpcg(A, X, largest=False, tol=1e-11, maxiter=5000)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


SOLVERS: Dict[str, Callable] = {
    "dense": _solve_dense,
    "shift_invert": _solve_shift_invert,
    "lanczos": _solve_lanczos,
    "lobpcg": _solve_lobpcg,
}


def retry_with_fallback(solver: str, *args: Any, max_retries: int = 1, **kwargs: Any):
    """Run ``solver``, then its configured fallbacks; returns (solver_used, result)."""
    if solver not in SOLVERS:
        raise ValueError(f"Unknown solver: {solver}")
    last_error = None

    for _ in range(max_retries):
        try:
            return solver, SOLVERS[solver](*args, **kwargs)
        except Exception as e:
            last_error = e
            logger.warning(f"Error with solver {solver}: {e}")

    for fallback in SOLVER_FALLBACK_ORDER.get(solver, []):
        try:
            logger.info(f"Trying fallback solver: {fallback}")
            return fallback, SOLVERS[fallback](*args, **kwargs)
        except Exception as e:
            last_error = e
            logger.warning(f"Error with fallback solver {fallback}: {e}")

    raise SpectrumError(f"All eigensolvers failed: {last_error}")


def _metadata(solver: str, dim: int, **extra: Any) -> Dict[str, Any]:
    meta = {
        "solver": solver,
        "dimension": dim,
        "rss_mb": round(psutil.Process().memory_info().rss / 2 ** 20, 1),
    }
    meta.update(extra)
    return meta


def full_spectrum(hs: HamiltonianSpec, dense_cap: Optional[int] = None) -> SpectrumReport:
    cap = DENSE_DIM_CAP if dense_cap is None else dense_cap
    H = hs.H
    dim = H.matrix.shape[0]
    if not _dense_feasible(dim, cap):
        raise SpectrumError(
            f"dimension {dim} exceeds the dense cap {cap}; use bottom_spectrum for targeted eigenvalues"
        )
    vals = sla.eigvalsh(_solver_matrix(H).toarray())
    threshold = zero_threshold(H)
    return SpectrumReport(
        spec=hs.spec,
        eigenvalues=vals,
        zero_multiplicity=int(np.sum(np.abs(vals) < threshold)),
        threshold=threshold,
        solver="dense",
        metadata=_metadata("dense", dim, tolerance=TOLERANCES["zero"]),
    )


def _bottom(H: LinearMap, k: int, dense_cap: int, dense_below: int):
    dim = H.matrix.shape[0]
    if dim <= max(dense_below, k + 2):
        return retry_with_fallback("dense", H, min(k, dim), cap=max(dense_cap, dim))
    return retry_with_fallback("shift_invert", H, k, cap=dense_cap)


def bottom_spectrum(hs: HamiltonianSpec, k: int = 6,
                    dense_cap: Optional[int] = None) -> Tuple[SpectrumReport, np.ndarray]:
    """Lowest k eigenpairs; dense below the cap, sparse above it."""
    cap = DENSE_DIM_CAP if dense_cap is None else dense_cap
    H = hs.H
    dim = H.matrix.shape[0]
    solver, (vals, vecs) = _bottom(H, k, cap, cap if _dense_feasible(dim, cap) else 0)
    residual = float(np.max(np.linalg.norm(H.matrix @ vecs - vecs * vals, axis=0)))
    scale = max(1.0, H.norm_estimate())
    if residual > TOLERANCES["eigen_residual"] * scale:
        logger.warning(f"Eigenpair residual {residual:.2e} above tolerance for {hs.spec.describe()}")
    threshold = zero_threshold(H)
    report = SpectrumReport(
        spec=hs.spec,
        eigenvalues=vals,
        zero_multiplicity=int(np.sum(np.abs(vals) < threshold)),
        threshold=threshold,
        solver=solver,
        metadata=_metadata(solver, dim, max_residual=residual, k=len(vals)),
    )
    return report, vecs


def zero_energy_state(p: SpinParams, L: int) -> GroundState:
    """Unique zero-energy state of the y=0 chain, phase-fixed and normalised."""
    spec = SuperchargeSpec(p, L)
    if L == 1:
        H = supercharge_hamiltonian(spec)
    else:
        H = assemble(spec, cross_check=False).H
    dim = H.matrix.shape[0]
    solver, (vals, vecs) = _bottom(H, 3, DENSE_DIM_CAP, DENSE_GROUND_CAP)
    threshold = zero_threshold(H)
    zeros = int(np.sum(np.abs(vals) < threshold))
    if zeros != 1:
        logger.error(f"Found {zeros} zero modes for ell={p.ell}, L={L} with {solver}: {vals}")
        raise SpectrumError(f"expected one zero-energy state at ell={p.ell}, L={L}, found {zeros}")

    amps = vecs[:, 0].astype(complex)
    pivot = amps[digits_to_index(distinguished_digits(p.ell, L), p.d)]
    if abs(pivot) < 1e-12:
        raise SpectrumError(f"distinguished component vanishes at ell={p.ell}, L={L}")
    amps = amps * (np.conj(pivot) / abs(pivot))
    vector = StateVector(p.ell, L, amps / np.linalg.norm(amps))

    residual_q = (global_supercharge(spec) @ vector).norm()
    residual_qdag = 0.0
    if L >= 2:
        residual_qdag = (global_supercharge(spec.with_length(L - 1)).adjoint() @ vector).norm()
    logger.debug(f"Zero-energy state ell={p.ell}, L={L} via {solver} (dim {dim})")
    return GroundState(
        spec=spec,
        vector=vector,
        energy=float(vals[0]),
        residual_q=residual_q,
        residual_qdag=residual_qdag,
    )


GROUND_STATES = GroundStateCache()


def cached_zero_energy_state(ell: int, L: int) -> GroundState:
    return GROUND_STATES.get_or_compute((ell, L), lambda: zero_energy_state(SpinParams(ell), L))


def doublet_match(rep_L: SpectrumReport, rep_L1: SpectrumReport, tol: Optional[float] = None,
                  max_energy: float = 10.0) -> DoubletTable:
    """Multiset matching of positive eigenvalues at L against those at L+1."""
    a, b = rep_L.spec, rep_L1.spec
    if (a.ell, a.y, a.j, a.k) != (b.ell, b.y, b.j, b.k) or b.L != a.L + 1:
        raise SpectrumError("doublet matching needs the same (ell, y, j, k) at lengths L and L+1")
    tol = TOLERANCES["doublet"] if tol is None else tol
    lower = [e for e in rep_L.eigenvalues if rep_L.threshold < e <= max_energy]
    pool = sorted(e for e in rep_L1.eigenvalues if e > rep_L1.threshold)
    used = [False] * len(pool)
    matched, unmatched = [], []
    for e in sorted(lower):
        best, best_gap = None, math.inf
        for i, cand in enumerate(pool):
            if not used[i] and abs(cand - e) < best_gap:
                best, best_gap = i, abs(cand - e)
        if best is not None and best_gap <= tol:
            used[best] = True
            matched.append((float(e), float(pool[best])))
        else:
            unmatched.append(float(e))
    return DoubletTable(matched=matched, unmatched=unmatched, tolerance=tol)


def doublet_energies(spec: SuperchargeSpec, cutoff: Optional[float] = None) -> np.ndarray:
    """Nonzero squared singular values of Q: V^L -> V^(L+1), ascending."""
    cutoff = TOLERANCES["rank_cutoff"] if cutoff is None else cutoff
    sv = sla.svdvals(global_supercharge(spec).toarray())
    if sv.size == 0 or sv[0] == 0:
        return np.zeros(0)
    return np.sort(sv[sv > cutoff * sv[0]] ** 2)


def contains_all(energies: np.ndarray, spectrum: np.ndarray, tol: float) -> bool:
    """Every value of ``energies`` (with multiplicity) occurs in ``spectrum``."""
    pool = list(np.sort(spectrum))
    for e in np.sort(energies):
        gaps = [abs(v - e) for v in pool]
        if not gaps or min(gaps) > tol:
            return False
        pool.pop(int(np.argmin(gaps)))
    return True


def _scan_row(ell: int, L: int, j: int, k: int, rho: float, theta: float) -> Dict[str, Any]:
    y = rho * np.exp(1j * theta)
    spec = SuperchargeSpec.create(ell, L, y, j, k)
    rep_L = full_spectrum(assemble(spec))
    rep_L1 = full_spectrum(assemble(spec.with_length(L + 1)))
    doublets = doublet_energies(spec)
    tol = TOLERANCES["doublet"]
    return {
        "rho": rho,
        "energies_L": rep_L.eigenvalues,
        "energies_L1": rep_L1.eigenvalues,
        "zero_L": rep_L.zero_multiplicity,
        "zero_L1": rep_L1.zero_multiplicity,
        "doublets": len(doublets),
        "doublets_common": contains_all(doublets, rep_L.eigenvalues, tol)
        and contains_all(doublets, rep_L1.eigenvalues, tol),
    }


def scan_rho(ell: int, L: int, j: int, k: int, rho_from: float, rho_to: float, steps: int,
             theta: float = 0.0, threads: Optional[int] = None) -> List[Dict[str, Any]]:
    """Spectra at L and L+1 over a grid of |y|, in grid order."""
    if steps < 1:
        raise ParameterError(f"steps must be positive, got {steps}")
    grid = np.linspace(rho_from, rho_to, steps)
    with ThreadPoolExecutor(max_workers=threads or THREADS) as pool:
        return list(pool.map(lambda r: _scan_row(ell, L, j, k, float(r), theta), grid))


def u1_charge_of(vector: StateVector) -> float:
    """<J_0> = (1 - 4<M>) / (2 sqrt 3) for an ell=1 state."""
    M = magnetisation(SpinParams(vector.ell), vector.length)
    m = vector.vdot(M @ vector).real / vector.norm() ** 2
    return (1.0 - 4.0 * m) / (2.0 * math.sqrt(3.0))


def first_excited_check(L: int) -> Dict[str, float]:
    """Reported check of the odd-length first excited state phi at ell=1.

    Q^dag phi should vanish and Q phi should lie in the eigenspace of the
    same energy at L+1.
    """
    if L < 3 or L % 2 == 0:
        raise ParameterError(f"first excited check needs odd L >= 3, got {L}")
    spec = SuperchargeSpec.create(1, L)
    rep, vecs = bottom_spectrum(assemble(spec, cross_check=False), k=2)
    energy = float(rep.eigenvalues[1])
    phi = StateVector(1, L, vecs[:, 1])
    qdag = (global_supercharge(spec.with_length(L - 1)).adjoint() @ phi).norm()
    image = global_supercharge(spec) @ phi
    overlap = 0.0
    if image.norm() > 0:
        image = image.normalized()
        rep1, vecs1 = bottom_spectrum(assemble(spec.with_length(L + 1), cross_check=False), k=6)
        block = vecs1[:, np.abs(rep1.eigenvalues - energy) < 1e-7]
        overlap = float(np.linalg.norm(block.conj().T @ image.amplitudes)) if block.size else 0.0
    return {
        "L": L,
        "energy": energy,
        "qdag_residual": qdag,
        "q_image_overlap": overlap,
        "u1_charge": u1_charge_of(phi),
    }


def conformal_fit(series: Sequence[Tuple[int, float]], v_F: float = FERMI_VELOCITY, c: float = 1.0,
                  pin_nonuniversal: bool = False, correction_order: int = 0) -> ScalingFit:
    """Least-squares fit of E(L) = L E_bulk + E_bdr + pi v_F / L (h - c/24) [+ a_r / L^(1+r)].

    With ``pin_nonuniversal`` the bulk and boundary energies are fixed to 0.
    """
    if len(series) < 4:
        raise FitError(f"need at least 4 lengths, got {len(series)}")
    lengths = np.array([s[0] for s in series], dtype=float)
    energies = np.array([s[1] for s in series], dtype=float)
    if len({int(L) % 2 for L in lengths}) != 1:
        raise FitError("all lengths in a scaling series must share one parity")

    columns, names = [], []
    if not pin_nonuniversal:
        columns += [lengths, np.ones_like(lengths)]
        names += ["E_bulk", "E_bdr"]
    columns.append(math.pi * v_F / lengths)
    names.append("h_shifted")
    for r in range(1, correction_order + 1):
        columns.append(lengths ** -(1.0 + r))
        names.append(f"a_{r}")
    X = np.column_stack(columns)
    if X.shape[1] >= X.shape[0]:
        raise FitError(f"{X.shape[1]} parameters cannot be fitted from {X.shape[0]} points")
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > 1e12:
        raise FitError(f"ill-conditioned design matrix (condition number {cond:.2e})")

    coef, *_ = np.linalg.lstsq(X, energies, rcond=None)
    resid = energies - X @ coef
    dof = X.shape[0] - X.shape[1]
    sigma2 = float(resid @ resid) / dof
    std = np.sqrt(np.diag(sigma2 * np.linalg.inv(X.T @ X)))

    estimates = dict(zip(names, (float(v) for v in coef)))
    uncertainties = dict(zip(names, (float(v) for v in std)))
    if pin_nonuniversal:
        estimates.update(E_bulk=0.0, E_bdr=0.0)
    estimates["h"] = estimates.pop("h_shifted") + c / 24.0
    uncertainties["h"] = uncertainties.pop("h_shifted")
    return ScalingFit(
        lengths=tuple(int(L) for L in lengths),
        estimates=estimates,
        uncertainties=uncertainties,
        residual_norm=float(np.linalg.norm(resid)),
        v_F=v_F,
        c=c,
        pinned=pin_nonuniversal,
        correction_order=correction_order,
    )
