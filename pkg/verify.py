"""Identity battery for the supercharges and Hamiltonians.

Each identity is a named check returning a relative residual (or None when it
does not apply to the sampled case).  Local identities run once per sampled
y, chain identities once per sampled y and length.  Sampling is seeded, so a
run is reproducible.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from config import DEFAULT_SEED, TOLERANCES
from hamiltonian import (
    assemble,
    boundary_pauli_closed_form,
    boundary_pauli_coefficients,
    boundary_term,
    density_explicit,
    density_from_supercharge,
    pauli_reference,
    supercharge_hamiltonian,
)
from operators import (
    LinearMap,
    StateVector,
    SuperchargeSpec,
    charge_rotation,
    embed_local,
    gauge_supercharge,
    global_supercharge,
    homotopy_s,
    identity,
    local_supercharge,
    local_supercharge_bar,
    local_supercharge_deformed,
    parity,
    spin_reversal,
)
from qcore import SpinParams, c_coefficients, chi_vector, phi_vector, xi_matrix, xi_vector

logger = logging.getLogger("susy_chain")


@dataclass(frozen=True)
class Case:
    params: SpinParams
    y: complex
    j: int
    k: int
    theta: float
    L: Optional[int] = None


@dataclass(frozen=True)
class IdentityResult:
    name: str
    ell: int
    y: complex
    L: Optional[int]
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "label": identity_label(self.name),
            "ell": self.ell,
            "y": [self.y.real, self.y.imag],
            "L": self.L,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class VerifyReport:
    ell: int
    seed: int
    samples: List[complex]
    results: List[IdentityResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[str]:
        seen = []
        for r in self.results:
            if not r.passed and r.name not in seen:
                seen.append(r.name)
        return seen

    def worst(self) -> Dict[str, IdentityResult]:
        """The largest residual per identity, in battery order."""
        out: Dict[str, IdentityResult] = {}
        for r in self.results:
            if r.name not in out or r.residual > out[r.name].residual:
                out[r.name] = r
        return out

    def to_dict(self) -> Dict:
        return {
            "ell": self.ell,
            "seed": self.seed,
            "samples": [[y.real, y.imag] for y in self.samples],
            "passed": self.passed,
            "failures": self.failures,
            "identities": [r.to_dict() for r in self.worst().values()],
        }


def _relative(diff: LinearMap, *terms: LinearMap) -> float:
    scale = max([1.0] + [t.max_abs() for t in terms])
    return diff.max_abs() / scale


def _relative_states(diff: StateVector, *terms: StateVector) -> float:
    scale = max([1.0] + [float(np.abs(t.amplitudes).max()) for t in terms])
    return float(np.abs(diff.amplitudes).max()) / scale


def _insert(p: SpinParams, vector: np.ndarray, site: int) -> LinearMap:
    """psi -> v (x) psi (site 0) or psi (x) v (site 1) for a two-site vector v."""
    column = np.asarray(vector, dtype=complex).reshape(-1, 1)
    return LinearMap(p.ell, 1, 3, embed_local(column, p.d, 1, site, 0, 2))


def coassociativity(case: Case) -> float:
    p = case.params
    q, one = local_supercharge(p), identity(p, 1)
    lhs = (q.kron(one) - one.kron(q)) @ q
    return _relative(lhs, q)


def gauge_quasi_coassociativity(case: Case) -> float:
    p = case.params
    phi = phi_vector(p, case.y).amplitudes
    qphi, one = gauge_supercharge(p, phi), identity(p, 1)
    lhs = (qphi.kron(one) - one.kron(qphi)) @ qphi
    phiphi = np.kron(phi, phi)
    rhs = _insert(p, phiphi, 0) - _insert(p, phiphi, 1)
    return _relative(lhs - rhs, lhs, rhs)


def phi_quadratic_equation(case: Case) -> float:
    p, y = case.params, case.y
    phi = StateVector(p.ell, 1, phi_vector(p, y).amplitudes)
    lead = local_supercharge(p) + y ** p.period * local_supercharge_bar(p)
    lhs = lead @ phi + phi.tensor(phi)
    rhs = StateVector(p.ell, 2, y ** p.period * chi_vector(p).amplitudes)
    return _relative_states(lhs - rhs, lhs, rhs)


def anticommutation_with_chi(case: Case) -> float:
    p = case.params
    q, qb, one = local_supercharge(p), local_supercharge_bar(p), identity(p, 1)
    lhs = (one.kron(q) - q.kron(one)) @ qb + (one.kron(qb) - qb.kron(one)) @ q
    chi = chi_vector(p).amplitudes
    rhs = _insert(p, chi, 0) - _insert(p, chi, 1)
    return _relative(lhs - rhs, lhs, rhs)


def mixed_q_qbar_relations(case: Case) -> float:
    p = case.params
    q, qb, one = local_supercharge(p), local_supercharge_bar(p), identity(p, 1)
    qd, qbd = q.adjoint(), qb.adjoint()
    first = qb @ qd - (one.kron(qd) @ qb.kron(one) + qd.kron(one) @ one.kron(qb))
    second = q @ qbd - (one.kron(qbd) @ q.kron(one) + qbd.kron(one) @ one.kron(q))
    return max(
        _relative(first, qb @ qd),
        _relative(second, q @ qbd),
        _relative(qbd @ q, q),
        _relative(qd @ qb, qb),
    )


def qbar_is_reversed_q(case: Case) -> float:
    p = case.params
    qb = local_supercharge_bar(p)
    rqr = spin_reversal(p, 2) @ local_supercharge(p) @ spin_reversal(p, 1)
    return _relative(rqr - qb, qb)


def parity_invariance_of_q(case: Case) -> float:
    q = local_supercharge_deformed(case.params, case.y)
    return _relative(parity(case.params, 2) @ q - q, q)


def spin_reversal_covariance(case: Case) -> Optional[float]:
    """R q(y) R = (y/|y|)^(ell+2) q(1/y)."""
    p, y = case.params, case.y
    if y == 0:
        return None
    lhs = spin_reversal(p, 2) @ local_supercharge_deformed(p, y) @ spin_reversal(p, 1)
    rhs = (y / abs(y)) ** p.period * local_supercharge_deformed(p, 1.0 / y)
    return _relative(lhs - rhs, lhs, rhs)


def charge_covariance(case: Case) -> float:
    """e^(i theta M) q(y) e^(-i theta M) = e^(i theta (ell+2)/2) q(e^(-i theta) y)."""
    p, y, theta = case.params, case.y, case.theta
    lhs = charge_rotation(p, 2, theta) @ local_supercharge_deformed(p, y) @ charge_rotation(p, 1, -theta)
    rhs = np.exp(0.5j * theta * p.period) * local_supercharge_deformed(p, np.exp(-1j * theta) * y)
    return _relative(lhs - rhs, lhs, rhs)


def xi_fixed_point(case: Case) -> float:
    p, y = case.params, case.y
    q = local_supercharge_deformed(p, y)
    worst = 0.0
    for k in range(p.d):
        xi = StateVector(p.ell, 1, xi_vector(p, y, k).amplitudes)
        lhs, rhs = q @ xi, xi.tensor(xi)
        worst = max(worst, _relative_states(lhs - rhs, lhs, rhs))
    return worst


def xi_basis_inverse(case: Case) -> Optional[float]:
    if case.y == 0:
        return None
    xi, inverse = xi_matrix(case.params, case.y)
    return float(np.abs(xi @ inverse - np.eye(case.params.d)).max())


def _spec(case: Case, L: int) -> SuperchargeSpec:
    return SuperchargeSpec(case.params, L, case.y, case.j, case.k)


def nilpotency(case: Case) -> float:
    Q = global_supercharge(_spec(case, case.L))
    Q_next = global_supercharge(_spec(case, case.L + 1))
    return _relative(Q_next @ Q, Q, Q_next)


def adjoint_nilpotency(case: Case) -> float:
    Qd = global_supercharge(_spec(case, case.L)).adjoint()
    Qd_next = global_supercharge(_spec(case, case.L + 1)).adjoint()
    return _relative(Qd @ Qd_next, Qd, Qd_next)


def contracting_homotopy(case: Case) -> Optional[float]:
    """s_j Q + Q s_j = 1 on V^L for y != 0."""
    p, L = case.params, case.L
    if case.y == 0 or L < 2:
        return None
    s_here = homotopy_s(p, case.y, case.j, L)
    s_next = homotopy_s(p, case.y, case.j, L + 1)
    total = s_next @ global_supercharge(_spec(case, L)) + global_supercharge(_spec(case, L - 1)) @ s_here
    return _relative(total - identity(p, L), s_here)


def density_y_independence(case: Case) -> float:
    h_y = density_from_supercharge(case.params, case.y)
    h_0 = density_from_supercharge(case.params)
    return _relative(h_y - h_0, h_0)


def density_explicit_path(case: Case) -> float:
    h = density_explicit(case.params)
    return _relative(h - density_from_supercharge(case.params), h)


def density_reversal_symmetry(case: Case) -> float:
    p = case.params
    h = density_explicit(p)
    P, R = parity(p, 2), spin_reversal(p, 2)
    return max(_relative(P @ h @ P - h, h), _relative(R @ h @ R - h, h))


def boundary_term_diagonal(case: Case) -> float:
    """h_B(0) = diag(c_0, ..., c_ell)."""
    p = case.params
    h = boundary_term(p, 0j)
    diag = LinearMap(p.ell, 1, 1, sp.diags(c_coefficients(p)[: p.d].astype(complex)))
    return _relative(h - diag, diag)


def hamiltonian_cross_path(case: Case) -> Optional[float]:
    if case.L < 2:
        return None
    spec = _spec(case, case.L)
    H = assemble(spec, cross_check=False).H
    return (H - supercharge_hamiltonian(spec)).max_abs() / max(1.0, H.norm_estimate())


def hamiltonian_hermitian(case: Case) -> Optional[float]:
    if case.L < 2:
        return None
    return assemble(_spec(case, case.L), cross_check=False).hermitian_residual


def boundary_charge_covariance(case: Case) -> float:
    """e^(i theta M) h_B^(k)(y) e^(-i theta M) = h_B^(k)(e^(-i theta) y)."""
    p, theta = case.params, case.theta
    h = boundary_term(p, case.y, case.k)
    lhs = charge_rotation(p, 1, theta) @ h @ charge_rotation(p, 1, -theta)
    rhs = boundary_term(p, np.exp(-1j * theta) * case.y, case.k)
    return _relative(lhs - rhs, lhs, rhs)


def hamiltonian_parity(case: Case) -> Optional[float]:
    """P H_{j,k}(y) P = H_{k,j}(y)."""
    p, L = case.params, case.L
    if L < 2:
        return None
    H = assemble(_spec(case, L), cross_check=False).H
    swapped = assemble(SuperchargeSpec(p, L, case.y, case.k, case.j), cross_check=False).H
    P = parity(p, L)
    return _relative(P @ H @ P - swapped, swapped)


def hamiltonian_spin_reversal(case: Case) -> Optional[float]:
    """R H_{j,k}(y) R = H_{ell-j, ell-k}(1/y), labels mod ell+2."""
    p, L, y = case.params, case.L, case.y
    if L < 2 or y == 0:
        return None
    H = assemble(_spec(case, L), cross_check=False).H
    mirrored = SuperchargeSpec(p, L, 1.0 / y, (p.ell - case.j) % p.period, (p.ell - case.k) % p.period)
    expected = assemble(mirrored, cross_check=False).H
    R = spin_reversal(p, L)
    return _relative(R @ H @ R - expected, expected)


def hamiltonian_charge_covariance(case: Case) -> Optional[float]:
    """e^(i theta M) H(y) e^(-i theta M) = H(e^(-i theta) y); at y=0, [H, M] = 0."""
    p, L, theta = case.params, case.L, case.theta
    if L < 2:
        return None
    H = assemble(_spec(case, L), cross_check=False).H
    rotated = SuperchargeSpec(p, L, np.exp(-1j * theta) * case.y, case.j, case.k)
    expected = assemble(rotated, cross_check=False).H
    lhs = charge_rotation(p, L, theta) @ H @ charge_rotation(p, L, -theta)
    return _relative(lhs - expected, expected)


def pauli_reference_match(case: Case) -> Optional[float]:
    p = case.params
    if p.ell != 1 or case.L < 2 or case.y != 0:
        return None
    H = assemble(SuperchargeSpec(p, case.L), cross_check=False).H
    return _relative(H - pauli_reference(case.L), H)


def boundary_pauli_form(case: Case) -> Optional[float]:
    if case.params.ell != 1:
        return None
    measured = boundary_pauli_coefficients(boundary_term(case.params, case.y))
    expected = boundary_pauli_closed_form(case.y)
    return max(abs(a - b) for a, b in zip(measured, expected))


# (name, check, scope, tolerance class); scope "local" runs once per y,
# "chain" once per y and length.
IDENTITIES: List = [
    ("coassociativity", coassociativity, "local", "identity"),
    ("gauge_quasi_coassociativity", gauge_quasi_coassociativity, "local", "identity"),
    ("phi_quadratic_equation", phi_quadratic_equation, "local", "identity"),
    ("anticommutation_with_chi", anticommutation_with_chi, "local", "identity"),
    ("mixed_q_qbar_relations", mixed_q_qbar_relations, "local", "identity"),
    ("qbar_is_reversed_q", qbar_is_reversed_q, "local", "identity"),
    ("parity_invariance_of_q", parity_invariance_of_q, "local", "identity"),
    ("spin_reversal_covariance", spin_reversal_covariance, "local", "identity"),
    ("charge_covariance", charge_covariance, "local", "identity"),
    ("xi_fixed_point", xi_fixed_point, "local", "identity"),
    ("xi_basis_inverse", xi_basis_inverse, "local", "identity"),
    ("nilpotency", nilpotency, "chain", "identity"),
    ("adjoint_nilpotency", adjoint_nilpotency, "chain", "identity"),
    ("contracting_homotopy", contracting_homotopy, "chain", "identity"),
    ("density_y_independence", density_y_independence, "local", "identity"),
    ("density_explicit_path", density_explicit_path, "local", "identity"),
    ("density_reversal_symmetry", density_reversal_symmetry, "local", "identity"),
    ("boundary_term_diagonal", boundary_term_diagonal, "local", "identity"),
    ("boundary_charge_covariance", boundary_charge_covariance, "local", "identity"),
    ("hamiltonian_cross_path", hamiltonian_cross_path, "chain", "identity"),
    ("hamiltonian_hermitian", hamiltonian_hermitian, "chain", "hermitian"),
    ("hamiltonian_parity", hamiltonian_parity, "chain", "identity"),
    ("hamiltonian_spin_reversal", hamiltonian_spin_reversal, "chain", "identity"),
    ("hamiltonian_charge_covariance", hamiltonian_charge_covariance, "chain", "identity"),
    ("pauli_reference", pauli_reference_match, "chain", "identity"),
    ("boundary_pauli_form", boundary_pauli_form, "local", "identity"),
]

IDENTITY_NAMES = [entry[0] for entry in IDENTITIES]

# Display labels for the equations each identity checks.
IDENTITY_LABELS: Dict[str, str] = {
    "coassociativity": "Eq. Coassociativity",
    "gauge_quasi_coassociativity": "Eq. Gauge quasi-coassociativity",
    "phi_quadratic_equation": "Eq. Quadratic relation for phi",
    "anticommutation_with_chi": "Eq. Anticommutation with chi",
    "mixed_q_qbar_relations": "Eq. Mixed q / q-bar relations",
    "qbar_is_reversed_q": "Eq. q-bar as reversed q",
    "parity_invariance_of_q": "Eq. Parity invariance of q(y)",
    "spin_reversal_covariance": "Eq. Spin-reversal covariance of q(y)",
    "charge_covariance": "Eq. U(1) covariance of q(y)",
    "xi_fixed_point": "Eq. Fixed point of xi",
    "xi_basis_inverse": "Eq. Inverse of the xi basis",
    "nilpotency": "Eq. Nilpotency Q^2 = 0",
    "adjoint_nilpotency": "Eq. Nilpotency of Q-dagger",
    "contracting_homotopy": "Eq. Contracting homotopy",
    "density_y_independence": "Eq. y-independence of the density",
    "density_explicit_path": "Eq. Explicit density",
    "density_reversal_symmetry": "Eq. Reversal symmetry of the density",
    "boundary_term_diagonal": "Eq. Diagonal boundary term",
    "boundary_charge_covariance": "Eq. U(1) covariance of the boundary term",
    "hamiltonian_cross_path": "Eq. Hamiltonian from Q and Q-dagger",
    "hamiltonian_hermitian": "Eq. Hermiticity of H",
    "hamiltonian_parity": "Eq. Parity symmetry of H",
    "hamiltonian_spin_reversal": "Eq. Spin-reversal symmetry of H",
    "hamiltonian_charge_covariance": "Eq. U(1) covariance of H",
    "pauli_reference": "Eq. Spin-1/2 XXZ form",
    "boundary_pauli_form": "Eq. Spin-1/2 boundary fields",
}


def identity_label(name: str) -> str:
    return IDENTITY_LABELS.get(name, name)


def sample_points(y: complex, samples: int, rng: np.random.Generator) -> List[complex]:
    """The configured y, then 0 and a unit-modulus point, then random points."""
    points = [complex(y)]
    for extra in (0j, complex(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))):
        if extra not in points:
            points.append(extra)
    while len(points) < samples:
        rho = rng.uniform(0.3, 2.0)
        points.append(complex(rho * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))))
    return points[:max(1, samples)]


def run_identity_suite(ell: int, y: complex = 0j, L_max: int = 6, samples: int = 20,
                       seed: int = DEFAULT_SEED, j: Optional[int] = None, k: Optional[int] = None,
                       tolerances: Optional[Dict[str, float]] = None, amk_scale: float = 1.0,
                       names: Optional[Sequence[str]] = None,
                       progress_cb: Optional[Callable] = None) -> VerifyReport:
    """Run the battery for one spin; ``j``/``k`` default to ell+1 on the first sample
    and are drawn at random for the others."""
    tol = dict(TOLERANCES)
    tol.update(tolerances or {})
    unknown = set(names or []) - set(IDENTITY_NAMES)
    if unknown:
        raise ValueError(f"Unknown identities: {sorted(unknown)}")
    selected = [entry for entry in IDENTITIES if names is None or entry[0] in names]

    p = SpinParams(ell, amk_scale)
    rng = np.random.default_rng(seed)
    points = sample_points(y, samples, rng)
    report = VerifyReport(ell=ell, seed=seed, samples=points)

    for index, point in enumerate(points):
        if index == 0:
            labels = (p.ell + 1 if j is None else j, p.ell + 1 if k is None else k)
        else:
            labels = tuple(int(v) for v in rng.integers(0, p.period, size=2))
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        base = Case(p, point, labels[0], labels[1], theta)
        for name, check, scope, tol_class in selected:
            lengths = [None] if scope == "local" else range(1, L_max + 1)
            for L in lengths:
                case = base if L is None else Case(p, point, base.j, base.k, theta, L)
                residual = check(case)
                if residual is None:
                    continue
                result = IdentityResult(name, ell, point, L, float(residual), tol[tol_class])
                if not result.passed:
                    logger.error(
                        f"Identity {identity_label(name)} failed at ell={ell}, y={point:.4g}, L={L}: "
                        f"residual {residual:.3e} > {tol[tol_class]:.1e}"
                    )
                report.results.append(result)
        if progress_cb:
            progress_cb("sample", f"Sample {index + 1}/{len(points)} done\n", None)

    logger.info(f"Identity suite ell={ell}: {len(report.results)} checks, {len(report.failures)} failing")
    return report
