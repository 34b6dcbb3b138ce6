"""Coloring instances: construction, edge-list I/O and brute-force classical oracles.

The oracle here is deliberately written without reference to the Hilbert-space
code so that quantum results can be checked against it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetError,
    EdgeListParseError,
    GenerationError,
    GraphValidationError,
    InvalidDegreeError,
)

MAX_RESTARTS = 10_000
ENUMERATION_BITS = 24


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0 .. n_nodes-1``.

    Edges are normalized on construction: each pair is stored as ``(i, j)``
    with ``i < j`` and the edge tuple is sorted.
    """

    n_nodes: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_nodes < 1:
            raise GraphValidationError(f"node count must be positive, got {self.n_nodes}")
        normalized = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphValidationError(f"self-loop at node {i}")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise GraphValidationError(
                    f"edge ({i}, {j}) out of range for {self.n_nodes} nodes"
                )
            normalized.append((min(i, j), max(i, j)))
        normalized.sort()
        for a, b in zip(normalized, normalized[1:]):
            if a == b:
                raise GraphValidationError(f"duplicate edge {a}")
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.n_nodes
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def relabeled(self, perm) -> Graph:
        """Return the graph with node ``v`` renamed to ``perm[v]``."""
        return Graph(self.n_nodes, tuple((perm[i], perm[j]) for i, j in self.edges))


@dataclass(frozen=True)
class ColoringOracleResult:
    proper_coloring_count: int
    min_classical_energy: int
    ground_degeneracy: int

    @property
    def colorable(self) -> bool:
        return self.proper_coloring_count > 0


def random_regular(n: int, c: int, seed) -> Graph:
    """Sample a simple ``c``-regular graph on ``n`` nodes with the pairing model.

    Stubs are shuffled and paired consecutively; any self-loop or repeated
    edge discards the whole pairing and the draw starts over.
    """
    if c < 1 or c >= n:
        raise InvalidDegreeError(f"need 1 <= c < n, got n={n}, c={c}")
    if (n * c) % 2:
        raise InvalidDegreeError(f"n*c must be even, got n={n}, c={c}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), c)
    for _ in range(MAX_RESTARTS):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        edges = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        if len(edges) == len(pairs):
            return Graph(n, tuple(edges))
    raise GenerationError(f"no simple {c}-regular graph on {n} nodes after {MAX_RESTARTS} restarts")


def coloring_oracle(g: Graph, q: int) -> ColoringOracleResult:
    """Enumerate all ``q**N`` color assignments of ``g``.

    The classical energy of an assignment is the sum over edges of ``q`` for a
    monochromatic edge and ``q - 4`` otherwise, i.e. the problem Hamiltonian
    with the constant offset and 1/4 factor dropped.
    """
    if q < 2:
        raise ValueError(f"need q >= 2, got {q}")
    n = g.n_nodes
    if n * math.log2(q) > ENUMERATION_BITS:
        raise BudgetError(f"q^N = {q}^{n} exceeds the enumeration budget of 2^{ENUMERATION_BITS}")

    # Split nodes into an outer prefix walked with itertools and an inner
    # suffix held as one array, so memory stays bounded.
    n_inner = min(n, max(1, int(16 // max(1.0, math.log2(q)))))
    n_outer = n - n_inner
    inner = np.array(list(itertools.product(range(q), repeat=n_inner)), dtype=np.int64)
    inner = inner.reshape(-1, n_inner)

    count = 0
    best = None
    best_mult = 0
    for prefix in itertools.product(range(q), repeat=n_outer):
        colors = np.empty((inner.shape[0], n), dtype=np.int64)
        colors[:, :n_outer] = prefix
        colors[:, n_outer:] = inner
        clashes = np.zeros(inner.shape[0], dtype=np.int64)
        for i, j in g.edges:
            clashes += colors[:, i] == colors[:, j]
        count += int(np.count_nonzero(clashes == 0))
        energy = g.n_edges * (q - 4) + 4 * clashes
        lo = int(energy.min())
        mult = int(np.count_nonzero(energy == lo))
        if best is None or lo < best:
            best, best_mult = lo, mult
        elif lo == best:
            best_mult += mult
    return ColoringOracleResult(count, int(best), best_mult)


def parse_edge_list(text: str) -> Graph:
    """Parse the edge-list text format.

    The first non-blank, non-comment line holds N; every following line holds
    one edge ``i j``. Lines starting with ``#`` are comments.
    """
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 1:
                raise EdgeListParseError(lineno, f"expected node count, got {line!r}")
            try:
                n = int(fields[0])
            except ValueError:
                raise EdgeListParseError(lineno, f"node count is not an integer: {line!r}") from None
            if n < 1:
                raise EdgeListParseError(lineno, f"node count must be positive, got {n}")
            continue
        if len(fields) != 2:
            raise EdgeListParseError(lineno, f"expected 'i j', got {line!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise EdgeListParseError(lineno, f"edge endpoints must be integers: {line!r}") from None
        edges.append((i, j))
    if n is None:
        raise EdgeListParseError(0, "empty edge list: missing node count")
    return Graph(n, tuple(edges))


def write_edge_list(g: Graph) -> str:
    lines = [str(g.n_nodes)]
    lines += [f"{i} {j}" for i, j in g.edges]
    return "\n".join(lines) + "\n"


def fig5b_style_graph() -> Graph:
    """Six-node graph with exactly 4! proper 4-colorings.

    K4 on nodes 0-3, node 4 joined to {0, 1, 2} and node 5 joined to {0, 1, 3}:
    nodes 4 and 5 are forced to copy the colors of nodes 3 and 2.
    """
    k4 = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    return Graph(6, tuple(k4 + [(0, 4), (1, 4), (2, 4), (0, 5), (1, 5), (3, 5)]))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))
