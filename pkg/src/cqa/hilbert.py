"""Constraint-satisfying subspace and the Hamiltonians acting on it.

Every node carries exactly one up spin among its ``q`` color spins, so a basis
state is a color assignment and the subspace has dimension ``q**N``. States are
indexed little-endian: node ``i`` has color ``(b // q**i) % q``.

The problem Hamiltonian is diagonal with integer entries (``J = 1``). The
driver moves one node's up spin between two colors; ``sigma^x sigma^x +
sigma^y sigma^y`` connects the two single-excitation states of a pair with
matrix element 2, so each allowed hop has amplitude ``-2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BudgetError, ColorRangeError, DimensionError
from .graph import Graph

HOP_AMPLITUDE = -2.0
MAX_DIMENSION = 1 << 24

DRIVER_KINDS = ("nn", "fc")


def encode(colors, q: int) -> int:
    b = 0
    for i, c in enumerate(colors):
        if not 0 <= c < q:
            raise ColorRangeError(f"color {c} of node {i} outside [0, {q})")
        b += int(c) * q**i
    return b


def decode(b: int, q: int, n: int) -> tuple[int, ...]:
    if not 0 <= b < q**n:
        raise ColorRangeError(f"basis index {b} outside [0, {q}^{n})")
    colors = []
    for _ in range(n):
        b, c = divmod(b, q)
        colors.append(c)
    return tuple(colors)


def color_table(q: int, n: int) -> np.ndarray:
    """Array of shape (q**n, n) with the color of every node in every basis state."""
    idx = np.arange(q**n, dtype=np.int64)
    return np.stack([(idx // q**i) % q for i in range(n)], axis=1)


@dataclass(frozen=True)
class ProblemDiagonal:
    energies: np.ndarray
    q: int
    n_nodes: int
    ground_energy: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ground_energy", int(self.energies.min()))

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def ground_mask(self) -> np.ndarray:
        return self.energies == self.ground_energy

    @property
    def degeneracy(self) -> int:
        return int(np.count_nonzero(self.ground_mask()))

    def as_float(self) -> np.ndarray:
        return self.energies.astype(np.float64)


@dataclass(frozen=True)
class DriverSpec:
    kind: str
    q: int
    pairs: tuple[tuple[int, int], ...]
    hop_amplitude: float = HOP_AMPLITUDE

    @classmethod
    def make(cls, kind: str, q: int) -> DriverSpec:
        kind = kind.lower()
        if q < 2:
            raise ValueError(f"need q >= 2, got {q}")
        if kind == "nn":
            # open chain: no (q-1, 0) wraparound term
            pairs = tuple((a, a + 1) for a in range(q - 1))
        elif kind == "fc":
            pairs = tuple((a, b) for a in range(q) for b in range(a + 1, q))
        else:
            raise ValueError(f"driver kind must be one of {DRIVER_KINDS}, got {kind!r}")
        return cls(kind, q, pairs)

    def hop_matrix(self) -> np.ndarray:
        h = np.zeros((self.q, self.q))
        for a, b in self.pairs:
            h[a, b] = h[b, a] = self.hop_amplitude
        return h


def _check_budget(q: int, n: int):
    if q**n > MAX_DIMENSION:
        raise BudgetError(f"subspace dimension {q}^{n} exceeds {MAX_DIMENSION}")


def build_problem_diagonal(g: Graph, q: int) -> ProblemDiagonal:
    """Diagonal of the problem Hamiltonian: ``q`` per monochromatic edge, ``q - 4`` otherwise."""
    _check_budget(q, g.n_nodes)
    colors = color_table(q, g.n_nodes)
    energies = np.zeros(q**g.n_nodes, dtype=np.int64)
    for i, j in g.edges:
        energies += np.where(colors[:, i] == colors[:, j], q, q - 4)
    return ProblemDiagonal(energies, q, g.n_nodes)


def _check_vector(psi, dim: int) -> np.ndarray:
    psi = np.ascontiguousarray(psi)
    if psi.ndim != 1 or psi.shape[0] != dim:
        raise DimensionError(f"state has shape {psi.shape}, expected ({dim},)")
    return psi.astype(np.complex128 if np.iscomplexobj(psi) else np.float64, copy=False)


def apply_driver(d: DriverSpec, psi, n: int | None = None) -> np.ndarray:
    """Matrix-free ``H_d @ psi``; ``n`` defaults to the node count implied by ``len(psi)``."""
    psi = np.asarray(psi)
    if n is None:
        n = _infer_nodes(psi.shape[-1], d.q)
    psi = _check_vector(psi, d.q**n)
    out = np.zeros_like(psi)
    _kernels.add_hops(_flat(psi), _flat(out), d.hop_matrix(), d.q, n, 1.0, _width(psi))
    return out


def apply_problem(diag: ProblemDiagonal, psi) -> np.ndarray:
    psi = _check_vector(psi, diag.dim)
    return diag.as_float() * psi


def apply_total(s: float, diag: ProblemDiagonal, d: DriverSpec, psi) -> np.ndarray:
    """``H(s) psi = s H_p psi + (1 - s) H_d psi``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"schedule parameter s={s} outside [0, 1]")
    if d.q != diag.q:
        raise DimensionError(f"driver has q={d.q}, problem has q={diag.q}")
    psi = _check_vector(psi, diag.dim)
    out = np.empty_like(psi)
    _kernels.apply_total(
        _flat(psi), _flat(out), diag.as_float(), float(s), 1.0 - float(s), 0.0,
        d.hop_matrix(), d.q, diag.n_nodes, _width(psi),
    )
    return out


def single_node_spectrum(d: DriverSpec) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(d.hop_matrix())


def driver_ground_state(d: DriverSpec, n: int) -> np.ndarray:
    """Lowest eigenvector of ``H_d`` in the subspace, as a complex state vector.

    It is the ``n``-fold tensor power of the single-node ground vector, whose
    sign is fixed so that all entries are non-negative.
    """
    _check_budget(d.q, n)
    vals, vecs = single_node_spectrum(d)
    if vals[1] - vals[0] < 1e-12:
        raise ValueError("single-node driver ground state is degenerate")
    v = vecs[:, 0]
    v = v * np.sign(v[np.argmax(np.abs(v))])
    state = np.ones(1)
    for _ in range(n):
        # node 0 is the fastest-varying digit, so it must be the last kron factor
        state = np.kron(v, state)
    state = state / np.linalg.norm(state)
    return state.astype(np.complex128)


def driver_ground_energy(d: DriverSpec, n: int) -> float:
    return n * float(single_node_spectrum(d)[0][0])


def dense_driver(d: DriverSpec, n: int) -> np.ndarray:
    """Explicit ``H_d`` built by enumerating basis states and recoloring one node at a time."""
    dim = d.q**n
    if dim > 4096:
        raise BudgetError(f"dense driver of dimension {dim} is too large")
    h = np.zeros((dim, dim))
    for b in range(dim):
        colors = decode(b, d.q, n)
        for i in range(n):
            for a, c in d.pairs:
                for src, dst in ((a, c), (c, a)):
                    if colors[i] == src:
                        target = list(colors)
                        target[i] = dst
                        h[encode(target, d.q), b] += d.hop_amplitude
    return h


def dense_total(s: float, diag: ProblemDiagonal, d: DriverSpec) -> np.ndarray:
    return s * np.diag(diag.as_float()) + (1.0 - s) * dense_driver(d, diag.n_nodes)


def _flat(v: np.ndarray) -> np.ndarray:
    return v.view(np.float64)


def _width(v: np.ndarray) -> int:
    return 2 if np.iscomplexobj(v) else 1


def _infer_nodes(dim: int, q: int) -> int:
    n = 0
    size = 1
    while size < dim:
        size *= q
        n += 1
    if size != dim:
        raise DimensionError(f"length {dim} is not a power of q={q}")
    return n
