"""Scalar layer of the supersymmetric spin chains.

q-numbers at the root of unity q = exp(i*pi/(ell+2)), the supercharge
coefficients a_{m,k}, the special vectors chi, phi(y) and xi_k(y), and the
enumeration sequences A_V / N_8 that describe the ell=1 ground states.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.special import gamma, gammaln

logger = logging.getLogger("susy_chain")


class SusyChainError(Exception):
    """Base exception for the supersymmetric chain library."""
    pass


class ParameterError(SusyChainError):
    """Invalid spin, index or deformation parameter."""
    pass


@dataclass(frozen=True)
class SpinParams:
    """Spin ell/2 and the root of unity it fixes.

    ``amk_scale`` is a scale applied to a_{ell,0}.
    """
    ell: int
    amk_scale: float = 1.0

    def __post_init__(self):
        if isinstance(self.ell, bool) or not isinstance(self.ell, (int, np.integer)):
            raise ParameterError(f"ell must be an integer, got {self.ell!r}")
        if self.ell < 1:
            raise ParameterError(f"ell must be positive, got {self.ell}")

    @property
    def d(self) -> int:
        return self.ell + 1

    @property
    def period(self) -> int:
        return self.ell + 2

    @property
    def q(self) -> complex:
        return complex(np.exp(1j * np.pi / self.period))

    def root_power(self, n: int) -> complex:
        """q**n, reduced modulo 2(ell+2) so large exponents stay exact."""
        n = n % (2 * self.period)
        return complex(np.exp(1j * np.pi * n / self.period))


@dataclass(frozen=True)
class SpecialVector:
    kind: str
    amplitudes: np.ndarray
    y: Optional[complex] = None
    k: Optional[int] = None

    @property
    def sites(self) -> int:
        return 2 if self.kind == "chi" else 1


@dataclass(frozen=True)
class SequenceValue:
    name: str
    argument: int
    value: Optional[int]
    log_value: float

    def as_decimal(self) -> str:
        return str(self.value) if self.value is not None else f"exp({self.log_value!r})"


def qnum(p: SpinParams, m: int) -> float:
    """{m} = sin(m pi/(ell+2)) / sin(pi/(ell+2))."""
    if m % p.period == 0:
        return 0.0
    return float(np.sin(m * np.pi / p.period) / np.sin(np.pi / p.period))


def amk(p: SpinParams, m: int, k: int) -> float:
    if not (0 <= k < m <= p.ell):
        raise ParameterError(f"a_(m,k) requires 0 <= k < m <= {p.ell}, got m={m}, k={k}")
    scale = p.amk_scale if (m, k) == (p.ell, 0) else 1.0
    return scale * math.sqrt(qnum(p, m + 1) / (qnum(p, m - k) * qnum(p, k + 1)))


@lru_cache(maxsize=None)
def c_coefficients(p: SpinParams) -> np.ndarray:
    """c_0..c_{ell+1}, with c_m = sum_{k<=m} ({k+1} - {k-1}) / (2{k})."""
    c = np.zeros(p.ell + 2)
    for m in range(1, p.ell + 2):
        c[m] = c[m - 1] + (qnum(p, m + 1) - qnum(p, m - 1)) / (2.0 * qnum(p, m))
    return c


def normaliser(p: SpinParams, y: complex) -> float:
    return 1.0 / math.sqrt(1.0 + abs(y) ** (2 * p.period))


def chi_vector(p: SpinParams) -> SpecialVector:
    d = p.d
    amps = np.zeros(d * d, dtype=complex)
    for m in range(d):
        amps[m * d + (p.ell - m)] = 1.0 / qnum(p, m + 1)
    return SpecialVector(kind="chi", amplitudes=amps)


def phi_vector(p: SpinParams, y: complex) -> SpecialVector:
    y = complex(y)
    amps = np.array(
        [-(y ** (m + 1)) / math.sqrt(qnum(p, m + 1)) for m in range(p.d)], dtype=complex
    )
    return SpecialVector(kind="phi", amplitudes=amps, y=y)


def _check_label(p: SpinParams, k: int, name: str = "k") -> None:
    if not (0 <= k <= p.ell + 1):
        raise ParameterError(f"{name} must lie in 0..{p.ell + 1}, got {k}")


def xi_vector(p: SpinParams, y: complex, k: int) -> SpecialVector:
    _check_label(p, k)
    y = complex(y)
    if k == p.ell + 1:
        return SpecialVector(kind="xi", amplitudes=np.zeros(p.d, dtype=complex), y=y, k=k)
    shifted = p.root_power(2 * (k + 1)) * y
    amps = normaliser(p, y) * (phi_vector(p, y).amplitudes - phi_vector(p, shifted).amplitudes)
    return SpecialVector(kind="xi", amplitudes=amps, y=y, k=k)


def xi_matrix(p: SpinParams, y: complex) -> Tuple[np.ndarray, np.ndarray]:
    """The basis matrix Xi_{mn} = <m|xi_n(y)> and its closed-form inverse."""
    y = complex(y)
    if y == 0:
        raise ParameterError("the xi vectors are degenerate at y = 0")
    xi = np.column_stack([xi_vector(p, y, n).amplitudes for n in range(p.d)])
    x = normaliser(p, y)
    inverse = np.empty((p.d, p.d), dtype=complex)
    for m in range(p.d):
        for n in range(p.d):
            inverse[m, n] = (
                math.sqrt(qnum(p, n + 1))
                * p.root_power(-2 * (m + 1) * (n + 1))
                / (p.period * x * y ** (n + 1))
            )
    return xi, inverse


def _check_positive(n: int) -> None:
    if n < 1:
        raise ParameterError(f"sequence index must be >= 1, got {n}")


def seq_AV(n: int, exact: bool = True) -> SequenceValue:
    """A_V(2n+1), vertically symmetric alternating sign matrices."""
    _check_positive(n)
    log_value = log_seq_AV(n)
    if not exact:
        return SequenceValue("A_V", 2 * n + 1, None, log_value)
    f = math.factorial
    value = Fraction(1, 2 ** n)
    for k in range(1, n + 1):
        value *= Fraction(f(6 * k - 2) * f(2 * k - 1), f(4 * k - 1) * f(4 * k - 2))
    if value.denominator != 1:
        raise SusyChainError(f"A_V({2 * n + 1}) is not an integer: {value}")
    return SequenceValue("A_V", 2 * n + 1, value.numerator, math.log(value.numerator))


def seq_N8(n: int, exact: bool = True) -> SequenceValue:
    """N_8(2n), cyclically symmetric self-complementary plane partitions."""
    _check_positive(n)
    log_value = log_seq_N8(n)
    if not exact:
        return SequenceValue("N_8", 2 * n, None, log_value)
    f = math.factorial
    value = Fraction(1)
    for k in range(n):
        value *= Fraction((3 * k + 1) * f(6 * k) * f(2 * k), f(4 * k) * f(4 * k + 1))
    if value.denominator != 1:
        raise SusyChainError(f"N_8({2 * n}) is not an integer: {value}")
    return SequenceValue("N_8", 2 * n, value.numerator, math.log(value.numerator))


def log_seq_AV(n: int) -> float:
    k = np.arange(1, n + 1, dtype=float)
    terms = gammaln(6 * k - 1) + gammaln(2 * k) - gammaln(4 * k) - gammaln(4 * k - 1)
    return math.fsum(terms) - n * math.log(2.0)


def log_seq_N8(n: int) -> float:
    k = np.arange(0, n, dtype=float)
    terms = (
        np.log(3 * k + 1)
        + gammaln(6 * k + 1)
        + gammaln(2 * k + 1)
        - gammaln(4 * k + 1)
        - gammaln(4 * k + 2)
    )
    return math.fsum(terms)


def log_normalised_component(L: int) -> float:
    """Log of the conjectured ell=1 normalised distinguished component."""
    if L < 1:
        raise ParameterError(f"length must be >= 1, got {L}")
    if L % 2:
        n = (L + 1) // 2
        return 0.5 * (log_seq_N8(n) - log_seq_AV(n))
    n = L // 2
    return 0.5 * (log_seq_AV(n) - log_seq_N8(n + 1))


def normalised_component_conjecture(L: int) -> float:
    if L < 1:
        raise ParameterError(f"length must be >= 1, got {L}")
    if L > 120:
        return math.exp(log_normalised_component(L))
    if L % 2:
        n = (L + 1) // 2
        ratio = Fraction(seq_N8(n).value, seq_AV(n).value)
    else:
        n = L // 2
        ratio = Fraction(seq_AV(n).value, seq_N8(n + 1).value)
    return math.sqrt(ratio)


def asymptotic_constants() -> Tuple[float, float]:
    g = float(gamma(1.0 / 3.0))
    c1 = math.sqrt(g) / math.pi ** 0.25
    c2 = (2.0 / math.sqrt(3.0)) ** 1.5 * math.pi ** 0.25 / math.sqrt(g)
    return c1, c2
