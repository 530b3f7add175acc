"""Scalar products of zero-energy states, their sum rules, and the
logarithmic bipartite fidelity with its finite-size predictions.

Two evaluation routes exist for every scalar product: direct contraction of
the computed ground states, and the sum rules that reduce it to normalised
distinguished components.  At ell=1 the components also have closed forms
in terms of A_V and N_8 ("conjectured" mode), which reach arbitrary sizes.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from operators import StateVector
from qcore import (
    ParameterError,
    SusyChainError,
    asymptotic_constants,
    log_normalised_component,
    log_seq_AV,
    log_seq_N8,
    normalised_component_conjecture,
)
from spectra import cached_zero_energy_state, u1_charge_of

logger = logging.getLogger("susy_chain")

KINDS = ("Z", "Ztilde")
MODES = ("measured", "conjectured")
GROUND_CHARGE = 1.0 / (2.0 * math.sqrt(3.0))
GROWTH = 3.0 ** 0.75 / 2.0


class ObservableError(SusyChainError):
    """Inconsistent partition, unsupported spin or undefined quantity."""
    pass


@dataclass(frozen=True)
class OverlapReport:
    kind: str
    partition: Tuple[int, ...]
    direct: complex
    sum_rule: complex
    residual: float
    parity_case: str

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "partition": list(self.partition),
            "direct": [self.direct.real, self.direct.imag],
            "sum_rule": [self.sum_rule.real, self.sum_rule.imag],
            "residual": self.residual,
            "parity_case": self.parity_case,
        }


@dataclass(frozen=True)
class CftCharges:
    alpha1: float
    alpha2: float
    alpha3: float
    c: float = 1.0

    @property
    def alpha_c(self) -> float:
        return self.alpha3 - self.alpha1 - self.alpha2

    @property
    def h_c(self) -> float:
        return self.alpha_c ** 2 / 2.0


@dataclass(frozen=True)
class LbfResult:
    L1: int
    L2: int
    x: float
    mode: str
    defined: bool
    Z: float
    F: float
    leading_coefficient: float
    f: float
    g: float
    constant: float

    @property
    def prediction(self) -> float:
        L = self.L1 + self.L2
        return self.leading_coefficient * math.log(L) + self.f + self.g * math.log(L) / L

    @property
    def deviation(self) -> float:
        return self.F - self.prediction if self.defined else math.nan


@dataclass(frozen=True)
class ConjectureCheck:
    L: int
    predicted: float
    measured: float

    @property
    def residual(self) -> float:
        return abs(self.predicted - self.measured)


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ObservableError(f"kind must be one of {KINDS}, got {kind!r}")


def _check_partition(kind: str, parts: Sequence[int]) -> Tuple[int, ...]:
    _check_kind(kind)
    parts = tuple(int(n) for n in parts)
    if not parts:
        raise ObservableError("empty partition")
    minimum = 1 if kind == "Z" else 0
    if any(n < minimum for n in parts):
        raise ObservableError(f"{kind} parts must be >= {minimum}: {parts}")
    if total_length(kind, parts) < 1:
        raise ObservableError(f"partition {parts} describes an empty chain")
    return parts


def total_length(kind: str, parts: Sequence[int]) -> int:
    _check_kind(kind)
    return sum(parts) + (len(parts) - 1 if kind == "Ztilde" else 0)


def parity_case(kind: str, parts: Sequence[int]) -> str:
    if kind == "Z":
        odd = sum(n % 2 for n in parts)
        return {0: "all-even", 1: "one-odd"}.get(odd, "vanishing")
    even = sum(1 - n % 2 for n in parts)
    return {0: "all-odd", 1: "one-even"}.get(even, "vanishing")


def product_state(kind: str, parts: Sequence[int], states: Mapping[int, StateVector],
                  ell: int) -> StateVector:
    """psi_L1 (x) psi_L2 (x) ...; for Ztilde an |ell> sits between consecutive parts."""
    parts = _check_partition(kind, parts)
    spacer = StateVector.basis(ell, (ell,))
    out = StateVector.empty(ell)
    for i, n in enumerate(parts):
        if kind == "Ztilde" and i > 0:
            out = out.tensor(spacer)
        if n > 0:
            out = out.tensor(states[n])
    return out


def _ground_vectors(ell: int, lengths: Sequence[int]) -> Dict[int, StateVector]:
    return {n: cached_zero_energy_state(ell, n).vector for n in set(lengths) if n > 0}


def overlap_direct(kind: str, parts: Sequence[int], ell: int = 1,
                   ground_states: Optional[Mapping[int, StateVector]] = None) -> complex:
    parts = _check_partition(kind, parts)
    L = total_length(kind, parts)
    states = dict(ground_states) if ground_states else _ground_vectors(ell, list(parts) + [L])
    if L not in states or any(n > 0 and n not in states for n in parts):
        raise ObservableError(f"missing ground states for partition {parts} of L={L}")
    psi = states[L]
    if psi.length != L:
        raise ObservableError(f"ground state for L={L} has length {psi.length}")
    prod = product_state(kind, parts, states, ell)
    return psi.vdot(prod) / (psi.norm() * prod.norm())


def overlap_sum_rule(kind: str, parts: Sequence[int], components: Mapping[int, complex]) -> complex:
    """Ratio of normalised distinguished components; exactly 0 when parity forbids."""
    parts = _check_partition(kind, parts)
    if parity_case(kind, parts) == "vanishing":
        return 0j
    comps = dict(components)
    comps[0] = 1.0
    L = total_length(kind, parts)
    product = complex(np.prod([comps[n] for n in parts]))
    if kind == "Z":
        return product / comps[L]
    return comps[L] / product


def normalised_components(ell: int, lengths: Sequence[int]) -> Dict[int, complex]:
    out = {}
    for n in set(lengths):
        if n > 0:
            gs = cached_zero_energy_state(ell, n)
            out[n] = gs.distinguished_component / gs.vector.norm()
    return out


def overlap(kind: str, parts: Sequence[int], ell: int = 1) -> OverlapReport:
    parts = _check_partition(kind, parts)
    L = total_length(kind, parts)
    lengths = list(parts) + [L]
    direct = overlap_direct(kind, parts, ell, _ground_vectors(ell, lengths))
    rule = overlap_sum_rule(kind, parts, normalised_components(ell, lengths))
    return OverlapReport(
        kind=kind,
        partition=parts,
        direct=direct,
        sum_rule=rule,
        residual=abs(direct - rule),
        parity_case=parity_case(kind, parts),
    )


def _compositions(total: int, m: int, minimum: int) -> Iterator[Tuple[int, ...]]:
    if m == 1:
        if total >= minimum:
            yield (total,)
        return
    for first in range(minimum, total - minimum * (m - 1) + 1):
        for rest in _compositions(total - first, m - 1, minimum):
            yield (first,) + rest


def admissible_partitions(L_max: int, m_max: int, kind: str) -> List[Tuple[int, ...]]:
    """Ordered partitions with total length <= L_max and 2..m_max parts.

    Ztilde partitions may contain a single empty part.
    """
    _check_kind(kind)
    out = []
    for L in range(1, L_max + 1):
        for m in range(2, m_max + 1):
            if kind == "Z":
                out.extend(_compositions(L, m, 1))
            else:
                total = L - (m - 1)
                if total >= 0:
                    out.extend(c for c in _compositions(total, m, 0) if c.count(0) <= 1)
    return out


def _require_ell1(ell: int) -> None:
    if ell != 1:
        raise ObservableError(f"this quantity is only available for ell=1, got ell={ell}")


def component_conjecture(n: int, parity: str) -> ConjectureCheck:
    """Closed form vs computed normalised component at L = 2n-1 (odd) or 2n (even)."""
    if parity not in ("odd", "even"):
        raise ParameterError(f"parity must be 'odd' or 'even', got {parity!r}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    L = 2 * n - 1 if parity == "odd" else 2 * n
    measured = normalised_components(1, [L])[L]
    return ConjectureCheck(L=L, predicted=normalised_component_conjecture(L), measured=measured.real)


def log_component_asymptotics(n: int, parity: str) -> float:
    c1, c2 = asymptotic_constants()
    geometric = -2 * n * math.log(GROWTH)
    if parity == "odd":
        return math.log(c1) + math.log(2 * n) / 12.0 + geometric
    if parity == "even":
        return math.log(c2) - math.log(2 * n) / 12.0 + geometric
    raise ParameterError(f"parity must be 'odd' or 'even', got {parity!r}")


def component_asymptotics(n: int, parity: str) -> float:
    return math.exp(log_component_asymptotics(n, parity))


def asymptotic_ratio(n: int, parity: str) -> float:
    """Closed-form component divided by its leading asymptotic form."""
    L = 2 * n - 1 if parity == "odd" else 2 * n
    return math.exp(log_normalised_component(L) - log_component_asymptotics(n, parity))


def u1_charge(L: int) -> float:
    return u1_charge_of(cached_zero_energy_state(1, L).vector)


def charges_for_cut(L1: int, L2: int) -> CftCharges:
    def alpha(n: int) -> float:
        return GROUND_CHARGE if n % 2 == 0 else -GROUND_CHARGE

    return CftCharges(alpha1=alpha(L1), alpha2=alpha(L2), alpha3=alpha(L1 + L2))


def _f_half(x: float, a1: float, a2: float, a3: float, ac: float) -> float:
    return (
        (2 * x - 1 + 2 / x) / 24.0
        + (1 - 1 / x) * a1 ** 2
        + (1 - x) * a3 ** 2
        - ac ** 2 / 2
        - a2 ** 2
        - 2 * ac * a2
    ) * math.log(1 - x)


def cft_prediction(charges: CftCharges, x: float, L: float, C: float,
                   xi: float = 1.0) -> Tuple[float, float, float]:
    """(leading term, f(x), g(x)) of F = (c/8 + h_c) ln L + f(x) + g(x) ln(L)/L."""
    if not 0 < x < 1:
        raise ParameterError(f"x must lie in (0, 1), got {x}")
    a1, a2, a3, ac = charges.alpha1, charges.alpha2, charges.alpha3, charges.alpha_c
    leading = (charges.c / 8.0 + charges.h_c) * math.log(L)
    f = _f_half(x, a1, a2, a3, ac) + _f_half(1 - x, a2, a1, a3, ac) + C
    g = xi * 0.5 * (a3 ** 2 - 1 / 12.0 + (1 / 12.0 - a1 ** 2) / x + (1 / 12.0 - a2 ** 2) / (1 - x))
    return leading, f, g


def g_from_weights(x: float, c: float, h1: float, h2: float, h3: float, xi: float = 1.0) -> float:
    """Subleading function in terms of conformal weights, valid for any c."""
    return xi * (h3 - c / 24.0 + (c / 24.0 - h1) / x + (c / 24.0 - h2) / (1 - x))


def z_scaling_prediction(parts: Sequence[int]) -> float:
    """Leading large-L form of Z for all-even or one-odd partitions."""
    parts = _check_partition("Z", parts)
    case = parity_case("Z", parts)
    if case == "vanishing":
        return 0.0
    _, c2 = asymptotic_constants()
    L = sum(parts)
    m = len(parts)
    value = L ** (-(m - 1) / 12.0) * c2 ** (m - 1)
    for n in parts:
        value *= (n / L) ** (1 / 12.0 if n % 2 else -1 / 12.0)
    return value


def log_z_conjectured(kind: str, parts: Sequence[int]) -> float:
    """ln Z from the closed-form components; parity must be admissible."""
    parts = _check_partition(kind, parts)
    if parity_case(kind, parts) == "vanishing":
        raise ObservableError(f"{kind}{parts} vanishes identically")
    L = total_length(kind, parts)
    inner = sum(log_normalised_component(n) for n in parts if n > 0)
    outer = log_normalised_component(L)
    return inner - outer if kind == "Z" else outer - inner


def lbf(L1: int, L2: int, mode: str = "conjectured", xi: float = 1.0) -> LbfResult:
    """F = -ln |Z(L1, L2)|^2 at ell=1 with its finite-size prediction."""
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if L1 < 1 or L2 < 1:
        raise ParameterError(f"both parts must be positive, got ({L1}, {L2})")
    L = L1 + L2
    x = L1 / L
    _, c2 = asymptotic_constants()
    constant = -2.0 * math.log(c2)
    leading, f, g = cft_prediction(charges_for_cut(L1, L2), x, L, constant, xi)
    if parity_case("Z", (L1, L2)) == "vanishing":
        logger.info(f"LBF undefined for ({L1}, {L2}): the scalar product vanishes")
        return LbfResult(L1, L2, x, mode, False, 0.0, math.inf, leading / math.log(L), f, g, constant)

    if mode == "measured":
        z = abs(overlap_direct("Z", (L1, L2), 1))
        F = -2.0 * math.log(z)
    else:
        log_z = log_z_conjectured("Z", (L1, L2))
        z = math.exp(log_z)
        F = -2.0 * log_z
    return LbfResult(L1, L2, x, mode, True, z, F, leading / math.log(L), f, g, constant)


def fidelity_scan(L: int, x_steps: int, mode: str = "conjectured") -> List[Dict[str, float]]:
    if L < 2 or x_steps < 1:
        raise ParameterError(f"fidelity scan needs L >= 2 and x_steps >= 1, got L={L}, x_steps={x_steps}")
    rows = []
    seen = set()
    for i in range(1, x_steps + 1):
        L1 = int(round(i * L / (x_steps + 1)))
        if L1 <= 0 or L1 >= L or L1 in seen:
            continue
        seen.add(L1)
        result = lbf(L1, L - L1, mode)
        if not result.defined:
            continue
        rows.append({
            "x": result.x,
            "L1": L1,
            "L2": L - L1,
            "F": result.F,
            "prediction": result.prediction,
            "deviation": result.deviation,
        })
    return rows


def lbf_correction_fit(lengths: Sequence[int], x: float = 0.5) -> Dict[str, float]:
    """Fit F - prediction = a + b ln(L)/L + c/L over even/even cuts."""
    if len(lengths) < 4:
        raise ObservableError("need at least 4 lengths for the correction fit")
    rows = []
    for L in lengths:
        L1 = 2 * int(round(x * L / 2))
        result = lbf(L1, L - L1, "conjectured")
        if not result.defined:
            raise ObservableError(f"cut ({L1}, {L - L1}) is not admissible")
        rows.append((L, result.deviation))
    Ls = np.array([r[0] for r in rows], dtype=float)
    dev = np.array([r[1] for r in rows])
    X = np.column_stack([np.ones_like(Ls), np.log(Ls) / Ls, 1 / Ls])
    coef, *_ = np.linalg.lstsq(X, dev, rcond=None)
    return {"constant": float(coef[0]), "log_coefficient": float(coef[1]), "inverse_coefficient": float(coef[2])}
