"""Product-basis indexing and the sparse, length-changing operator algebra.

Basis convention: |m_1, ..., m_L> has flat index sum_i m_i (ell+1)^(L-i),
so site 1 is the most significant digit.  Every operator is a ``LinearMap``
between V^L_in and V^L_out backed by a CSR matrix.
"""
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from qcore import (
    ParameterError,
    SpinParams,
    SusyChainError,
    amk,
    chi_vector,
    normaliser,
    phi_vector,
    xi_matrix,
    xi_vector,
    _check_label,
)

logger = logging.getLogger("susy_chain")


class OperatorError(SusyChainError):
    """Length mismatch or malformed operator data."""
    pass


def digits_to_index(digits: Sequence[int], d: int) -> int:
    index = 0
    for m in digits:
        index = index * d + int(m)
    return index


def index_to_digits(index: int, d: int, L: int) -> Tuple[int, ...]:
    digits = []
    for _ in range(L):
        index, m = divmod(index, d)
        digits.append(m)
    return tuple(reversed(digits))


@lru_cache(maxsize=32)
def all_digits(d: int, L: int) -> np.ndarray:
    """Digit table of shape (d**L, L), row n holding the digits of index n."""
    if L == 0:
        return np.zeros((1, 0), dtype=np.int64)
    table = np.stack(np.unravel_index(np.arange(d ** L), (d,) * L), axis=1)
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class BasisIndex:
    ell: int
    digits: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(m) for m in self.digits))
        if not self.digits:
            raise ParameterError("a basis state needs at least one site")
        if any(m < 0 or m > self.ell for m in self.digits):
            raise ParameterError(f"digits must lie in 0..{self.ell}: {self.digits}")

    @property
    def length(self) -> int:
        return len(self.digits)

    @property
    def flat(self) -> int:
        return digits_to_index(self.digits, self.ell + 1)

    @classmethod
    def from_flat(cls, ell: int, L: int, index: int) -> "BasisIndex":
        if not (0 <= index < (ell + 1) ** L):
            raise ParameterError(f"flat index {index} out of range for L={L}")
        return cls(ell, index_to_digits(index, ell + 1, L))


@dataclass(frozen=True, eq=False)
class StateVector:
    ell: int
    length: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != (self.ell + 1) ** self.length:
            raise OperatorError(
                f"state of length {self.length} needs {(self.ell + 1) ** self.length} "
                f"amplitudes, got {amps.size}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def d(self) -> int:
        return self.ell + 1

    @classmethod
    def basis(cls, ell: int, digits: Sequence[int]) -> "StateVector":
        idx = BasisIndex(ell, tuple(digits))
        amps = np.zeros((ell + 1) ** idx.length, dtype=complex)
        amps[idx.flat] = 1.0
        return cls(ell, idx.length, amps)

    @classmethod
    def empty(cls, ell: int) -> "StateVector":
        """The length-0 state, the unit of the tensor product."""
        return cls(ell, 0, np.ones(1, dtype=complex))

    def component(self, digits: Sequence[int]) -> complex:
        if len(digits) != self.length:
            raise OperatorError(f"expected {self.length} digits, got {len(digits)}")
        return complex(self.amplitudes[digits_to_index(digits, self.d)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def vdot(self, other: "StateVector") -> complex:
        self._check_compatible(other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise OperatorError("cannot normalise the zero vector")
        return StateVector(self.ell, self.length, self.amplitudes / n)

    def tensor(self, other: "StateVector") -> "StateVector":
        if other.ell != self.ell:
            raise OperatorError("tensor product of states with different spin")
        return StateVector(self.ell, self.length + other.length, np.kron(self.amplitudes, other.amplitudes))

    def _check_compatible(self, other: "StateVector") -> None:
        if other.ell != self.ell or other.length != self.length:
            raise OperatorError(
                f"states of (ell, L) = ({self.ell}, {self.length}) and "
                f"({other.ell}, {other.length}) are incompatible"
            )

    def __add__(self, other: "StateVector") -> "StateVector":
        self._check_compatible(other)
        return StateVector(self.ell, self.length, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        self._check_compatible(other)
        return StateVector(self.ell, self.length, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.ell, self.length, self.amplitudes * scalar)

    __rmul__ = __mul__


def special_state(ell: int, amplitudes: np.ndarray) -> StateVector:
    amplitudes = np.asarray(amplitudes)
    L = int(round(np.log(amplitudes.size) / np.log(ell + 1)))
    return StateVector(ell, L, amplitudes)


@dataclass(frozen=True, eq=False)
class LinearMap:
    ell: int
    L_in: int
    L_out: int
    matrix: sp.csr_matrix

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        m.sum_duplicates()
        m.eliminate_zeros()
        expected = ((self.ell + 1) ** self.L_out, (self.ell + 1) ** self.L_in)
        if m.shape != expected:
            raise OperatorError(f"matrix shape {m.shape} does not match V^{self.L_in} -> V^{self.L_out}")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.ell + 1

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def __matmul__(self, other: Union["LinearMap", StateVector]):
        if isinstance(other, LinearMap):
            if other.ell != self.ell or other.L_out != self.L_in:
                raise OperatorError(
                    f"cannot compose V^{self.L_in}->V^{self.L_out} after "
                    f"V^{other.L_in}->V^{other.L_out}"
                )
            return LinearMap(self.ell, other.L_in, self.L_out, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            if other.ell != self.ell or other.length != self.L_in:
                raise OperatorError(
                    f"operator on V^{self.L_in} applied to a state of length {other.length}"
                )
            return StateVector(self.ell, self.L_out, self.matrix @ other.amplitudes)
        return NotImplemented

    def _check_same(self, other: "LinearMap") -> None:
        if (other.ell, other.L_in, other.L_out) != (self.ell, self.L_in, self.L_out):
            raise OperatorError("operators act between different spaces")

    def __add__(self, other: "LinearMap") -> "LinearMap":
        self._check_same(other)
        return LinearMap(self.ell, self.L_in, self.L_out, self.matrix + other.matrix)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        self._check_same(other)
        return LinearMap(self.ell, self.L_in, self.L_out, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "LinearMap":
        return LinearMap(self.ell, self.L_in, self.L_out, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "LinearMap":
        return self * -1.0

    def adjoint(self) -> "LinearMap":
        return LinearMap(self.ell, self.L_out, self.L_in, self.matrix.conj().T)

    def kron(self, other: "LinearMap") -> "LinearMap":
        """Tensor product; meant for local operators only."""
        return LinearMap(
            self.ell,
            self.L_in + other.L_in,
            self.L_out + other.L_out,
            sp.kron(self.matrix, other.matrix, format="csr"),
        )

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def max_abs(self) -> float:
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    def norm_estimate(self) -> float:
        """Max absolute row sum, an upper bound for the spectral norm."""
        if not self.matrix.nnz:
            return 0.0
        return float(np.abs(self.matrix).sum(axis=1).max())


def adjoint(A: LinearMap) -> LinearMap:
    return A.adjoint()


def identity(p: SpinParams, L: int) -> LinearMap:
    return LinearMap(p.ell, L, L, sp.identity(p.d ** L, dtype=complex, format="csr"))


def embed_local(local, d: int, L: int, site: int, k_in: int, k_out: int) -> sp.csr_matrix:
    """Scatter a k_in -> k_out site operator acting from ``site`` (0-based) into V^L.

    Only the nonzero local entries are enumerated, so the result is built in
    O(nnz) without Kronecker products of identities.
    """
    tail = L - site - k_in
    if site < 0 or tail < 0:
        raise OperatorError(f"local operator on sites {site}..{site + k_in} does not fit in L={L}")
    coo = sp.coo_matrix(local)
    pre = np.arange(d ** site, dtype=np.int64)[:, None, None]
    suf = np.arange(d ** tail, dtype=np.int64)[None, None, :]
    r = coo.row.astype(np.int64)[None, :, None]
    c = coo.col.astype(np.int64)[None, :, None]
    rows = pre * d ** (k_out + tail) + r * d ** tail + suf
    cols = pre * d ** (k_in + tail) + c * d ** tail + suf
    data = np.broadcast_to(coo.data[None, :, None], rows.shape)
    shape = (d ** (L - k_in + k_out), d ** L)
    return sp.csr_matrix((data.ravel(), (rows.ravel(), cols.ravel())), shape=shape)


@lru_cache(maxsize=None)
def _supercharge_array(p: SpinParams) -> np.ndarray:
    d = p.d
    q = np.zeros((d * d, d), dtype=complex)
    for m in range(1, d):
        for k in range(m):
            q[k * d + (m - k - 1), m] = amk(p, m, k)
    q.setflags(write=False)
    return q


@lru_cache(maxsize=None)
def _supercharge_bar_array(p: SpinParams) -> np.ndarray:
    d, ell = p.d, p.ell
    qbar = np.zeros((d * d, d), dtype=complex)
    for m in range(ell):
        for k in range(m + 1, ell + 1):
            qbar[k * d + (ell + 1 + m - k), m] = amk(p, ell - m, ell - k)
    qbar.setflags(write=False)
    return qbar


def _gauge_array(d: int, phi: np.ndarray) -> np.ndarray:
    eye = np.eye(d)
    return np.column_stack([np.kron(phi, eye[c]) + np.kron(eye[c], phi) for c in range(d)])


def _deformed_array(p: SpinParams, y: complex) -> np.ndarray:
    y = complex(y)
    if y == 0:
        return _supercharge_array(p)
    gauge = _gauge_array(p.d, phi_vector(p, y).amplitudes)
    return normaliser(p, y) * (
        _supercharge_array(p) + y ** p.period * _supercharge_bar_array(p) + gauge
    )


def local_supercharge(p: SpinParams) -> LinearMap:
    return LinearMap(p.ell, 1, 2, _supercharge_array(p))


def local_supercharge_bar(p: SpinParams) -> LinearMap:
    return LinearMap(p.ell, 1, 2, _supercharge_bar_array(p))


def gauge_supercharge(p: SpinParams, phi: np.ndarray) -> LinearMap:
    """q_phi|psi> = |phi>|psi> + |psi>|phi>."""
    return LinearMap(p.ell, 1, 2, _gauge_array(p.d, np.asarray(phi, dtype=complex)))


def local_supercharge_deformed(p: SpinParams, y: complex) -> LinearMap:
    return LinearMap(p.ell, 1, 2, _deformed_array(p, y))


@dataclass(frozen=True)
class SuperchargeSpec:
    """One member Q_{j,k}(y) of the supercharge family on V^L."""
    params: SpinParams
    L: int
    y: complex = 0j
    j: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.L < 1:
            raise ParameterError(f"chain length must be >= 1, got {self.L}")
        object.__setattr__(self, "y", complex(self.y))
        for name in ("j", "k"):
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, self.params.ell + 1)
            else:
                _check_label(self.params, value, name)

    @classmethod
    def create(cls, ell: int, L: int, y: complex = 0j, j: Optional[int] = None,
               k: Optional[int] = None) -> "SuperchargeSpec":
        return cls(SpinParams(ell), L, y, j, k)

    @property
    def ell(self) -> int:
        return self.params.ell

    @property
    def dim(self) -> int:
        return self.params.d ** self.L

    def with_length(self, L: int) -> "SuperchargeSpec":
        return replace(self, L=L)

    def describe(self) -> dict:
        return {
            "ell": self.ell,
            "L": self.L,
            "y": [self.y.real, self.y.imag],
            "j": self.j,
            "k": self.k,
        }


def global_supercharge(spec: SuperchargeSpec) -> LinearMap:
    """Q_{j,k}(y) = xi_j (x) . + (-1)^(L-1) . (x) xi_k + sum_i (-1)^i q(y)_i."""
    p, L, d = spec.params, spec.L, spec.params.d
    local = sp.csr_matrix(_deformed_array(p, spec.y))
    total = sp.csr_matrix((d ** (L + 1), d ** L), dtype=complex)
    for i in range(L):
        total = total + (-1) ** (i + 1) * embed_local(local, d, L, i, 1, 2)
    if spec.j <= p.ell:
        xi_left = xi_vector(p, spec.y, spec.j).amplitudes.reshape(d, 1)
        total = total + embed_local(xi_left, d, L, 0, 0, 1)
    if spec.k <= p.ell:
        xi_right = xi_vector(p, spec.y, spec.k).amplitudes.reshape(d, 1)
        total = total + (-1) ** (L - 1) * embed_local(xi_right, d, L, L, 0, 1)
    return LinearMap(p.ell, L, L + 1, total)


def magnetisation(p: SpinParams, L: int) -> LinearMap:
    values = p.ell * L / 2.0 - all_digits(p.d, L).sum(axis=1)
    return LinearMap(p.ell, L, L, sp.diags(values.astype(complex), format="csr"))


def _permutation(p: SpinParams, L: int, new_digits: np.ndarray) -> LinearMap:
    n = p.d ** L
    powers = p.d ** np.arange(L - 1, -1, -1, dtype=np.int64)
    targets = new_digits @ powers
    matrix = sp.csr_matrix((np.ones(n, dtype=complex), (targets, np.arange(n))), shape=(n, n))
    return LinearMap(p.ell, L, L, matrix)


def parity(p: SpinParams, L: int) -> LinearMap:
    return _permutation(p, L, all_digits(p.d, L)[:, ::-1])


def spin_reversal(p: SpinParams, L: int) -> LinearMap:
    return _permutation(p, L, p.ell - all_digits(p.d, L))


def charge_rotation(p: SpinParams, L: int, theta: float) -> LinearMap:
    """exp(i theta M) on V^L."""
    values = np.exp(1j * theta * (p.ell * L / 2.0 - all_digits(p.d, L).sum(axis=1)))
    return LinearMap(p.ell, L, L, sp.diags(values, format="csr"))


def reversed_supercharge(spec: SuperchargeSpec) -> LinearMap:
    """R Q R; at y=0 this is the undeformed charge of the y -> infinity end."""
    p = spec.params
    return spin_reversal(p, spec.L + 1) @ global_supercharge(spec) @ spin_reversal(p, spec.L)


def homotopy_s(p: SpinParams, y: complex, j: int, L: int) -> LinearMap:
    """s_j: the xi_j coefficient of site 1, as a map V^L -> V^(L-1)."""
    _check_label(p, j, "j")
    if L < 2:
        raise ParameterError(f"the homotopy needs L >= 2, got {L}")
    if complex(y) == 0:
        raise ParameterError("the homotopy is undefined at y = 0")
    _, inverse = xi_matrix(p, y)
    row = -inverse.sum(axis=0) if j == p.ell + 1 else inverse[j]
    local = row.reshape(1, p.d)
    return LinearMap(p.ell, L, L - 1, embed_local(local, p.d, L, 0, 1, 0))


def s_map(p: SpinParams, L: int) -> LinearMap:
    """psi -> psi (x) chi, V^L -> V^(L+2)."""
    chi = chi_vector(p).amplitudes.reshape(p.d ** 2, 1)
    return LinearMap(p.ell, L, L + 2, embed_local(chi, p.d, L, L, 0, 2))


def to_triplet_text(A: LinearMap) -> str:
    coo = A.matrix.tocoo()
    lines = [f"# ell={A.ell} L_in={A.L_in} L_out={A.L_out} nnz={coo.nnz}"]
    for r, c, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}")
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict:
    if not line.startswith("#"):
        raise OperatorError("triplet text must start with a '#' header line")
    try:
        fields = dict(item.split("=") for item in line[1:].split())
        return {key: int(fields[key]) for key in ("ell", "L_in", "L_out", "nnz")}
    except (KeyError, ValueError) as e:
        raise OperatorError(f"malformed header {line!r}: {e}")


def from_triplet_text(text: str) -> LinearMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise OperatorError("empty triplet text")
    header = _parse_header(lines[0])
    body = lines[1:]
    if len(body) != header["nnz"]:
        raise OperatorError(f"header announces {header['nnz']} entries, found {len(body)}")
    d = header["ell"] + 1
    shape = (d ** header["L_out"], d ** header["L_in"])
    if body:
        table = np.array([ln.split() for ln in body], dtype=float)
        rows, cols = table[:, 0].astype(np.int64), table[:, 1].astype(np.int64)
        data = table[:, 2] + 1j * table[:, 3]
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        data = np.zeros(0, dtype=complex)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=shape)
    return LinearMap(header["ell"], header["L_in"], header["L_out"], matrix)


def save_binary(A: LinearMap, path: str) -> None:
    coo = A.matrix.tocoo()
    np.savez_compressed(
        path,
        header=np.array([A.ell, A.L_in, A.L_out, coo.nnz], dtype=np.int64),
        row=coo.row,
        col=coo.col,
        data=coo.data,
    )


def load_binary(path: str) -> LinearMap:
    with np.load(path) as archive:
        ell, L_in, L_out, nnz = (int(v) for v in archive["header"])
        if archive["data"].size != nnz:
            raise OperatorError(f"header announces {nnz} entries, found {archive['data'].size}")
        d = ell + 1
        matrix = sp.csr_matrix(
            (archive["data"], (archive["row"], archive["col"])), shape=(d ** L_out, d ** L_in)
        )
    return LinearMap(ell, L_in, L_out, matrix)
