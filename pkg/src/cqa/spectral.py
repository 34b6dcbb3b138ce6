"""Instantaneous eigenstructure of H(s): gaps, populations and the adiabatic-time bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import _kernels
from .errors import ConvergenceError, DegenerateGridError
from .graph import Graph
from .hilbert import DriverSpec, ProblemDiagonal, apply_driver, build_problem_diagonal

DENSE_LIMIT = 1024
ARPACK_NCV = 64
SOLVER_METHODS = ("block", "arpack")
DEFAULT_TOL = 1e-10
DEGENERACY_TOL = 1e-6
DEFAULT_GRID_POINTS = 51


@dataclass(frozen=True)
class SpectrumSample:
    s: float
    eigenvalues: tuple[float, ...]
    populations: tuple[float, ...] | None = None

    @property
    def gap(self) -> float:
        return max(0.0, self.eigenvalues[1] - self.eigenvalues[0])


@dataclass(frozen=True)
class LevelPopulation:
    level: int
    energy: float
    population: float
    cluster_id: int


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def _hamiltonian_block(s, diag, d):
    energies = diag.as_float()
    hop = d.hop_matrix()
    coef_p, coef_d = float(s), 1.0 - float(s)

    def apply(block):
        block = np.ascontiguousarray(block, dtype=np.float64)
        out = np.empty_like(block)
        _kernels.apply_total_block(block, out, energies, coef_p, coef_d, hop, d.q, diag.n_nodes)
        return out

    return apply


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component of every column made positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _orthonormal_fill(basis: np.ndarray, block: np.ndarray, rng) -> np.ndarray:
    """Orthonormalize the rows of ``block`` against ``basis`` rows, refilling lost directions randomly."""
    block = np.array(block, dtype=np.float64)
    for _ in range(2):
        # rows are rescaled first so a small but genuine direction is not mistaken for noise
        norms = np.linalg.norm(block, axis=1)
        dead = norms < 1e-300
        block[dead] = rng.standard_normal((int(dead.sum()), block.shape[1]))
        block /= np.linalg.norm(block, axis=1)[:, None]
        if basis.shape[0]:
            block = block - (block @ basis.T) @ basis
    q, r = np.linalg.qr(block.T)
    weak = np.abs(np.diag(r)) <= 1e-8
    q = q.T.copy()
    for row in np.flatnonzero(weak):
        q[row] = rng.standard_normal(q.shape[1])
    if weak.any():
        # refilled rows still need projecting out of the basis
        if basis.shape[0]:
            q = q - (q @ basis.T) @ basis
        q = np.linalg.qr(q.T)[0].T
    return np.ascontiguousarray(q)


def _block_lanczos(apply, dim, k, tol, v0, max_matvecs, rng):
    """Thick-restart block Krylov iteration for the ``k`` lowest eigenpairs.

    Each cycle expands the basis block by block with ``H`` applied to the
    newest block, fully reorthogonalized, then does Rayleigh-Ritz. A restart
    keeps the lowest half of the Ritz vectors and continues from the residual
    block of the wanted ones. Block size exceeds ``k``, so degenerate
    eigenvalues of multiplicity up to the block size are found in full.
    """
    p = min(dim, k + max(8, k // 2))
    max_basis = min(dim, max(12 * p, 120))
    keep = min(max(k + p, max_basis // 2), max_basis - p)

    basis = np.empty((max_basis, dim))
    images = np.empty((max_basis, dim))
    start = rng.standard_normal((p, dim))
    if v0 is not None:
        v0 = np.atleast_2d(np.asarray(v0, dtype=np.float64))
        m = min(p, v0.shape[0])
        start[:m] = v0[:m]
    basis[:p] = _orthonormal_fill(basis[:0], start, rng)
    images[:p] = apply(basis[:p])
    size = p
    newest = 0
    matvecs = p
    while True:
        while size + p <= max_basis:
            basis[size : size + p] = _orthonormal_fill(basis[:size], images[newest : newest + p], rng)
            images[size : size + p] = apply(basis[size : size + p])
            newest = size
            size += p
            matvecs += p
        t = basis[:size] @ images[:size].T
        theta, svec = np.linalg.eigh(0.5 * (t + t.T))
        n_keep = min(keep, size)
        rot = np.ascontiguousarray(svec[:, :n_keep].T)
        ritz = rot @ basis[:size]
        # re-orthonormalize so roundoff does not accumulate over restarts;
        # R is close to the identity, so order and signs are preserved
        qm, rm = np.linalg.qr(ritz.T)
        ritz = np.ascontiguousarray((qm * np.sign(np.diag(rm))).T)
        # fresh images keep rotation roundoff from setting a residual floor
        ritz_img = apply(ritz)
        matvecs += n_keep
        theta[:n_keep] = np.einsum("ij,ij->i", ritz, ritz_img)
        resid = ritz_img[:p] - theta[:p, None] * ritz[:p]
        norms = np.linalg.norm(resid[:k], axis=1)
        if np.all(norms <= tol) or size >= dim:
            if np.any(norms > tol) and size < dim:
                raise ConvergenceError("Krylov basis exhausted before convergence")
            return theta[:k], ritz[:k].T, int(matvecs)
        if matvecs >= max_matvecs:
            raise ConvergenceError(
                f"{k} eigenpairs not converged after {matvecs} matvecs "
                f"(worst residual {norms.max():.2e})"
            )
        basis[:n_keep] = ritz
        images[:n_keep] = ritz_img
        size = n_keep
        # continue from the residual directions of the wanted Ritz vectors
        basis[size : size + p] = _orthonormal_fill(basis[:size], resid, rng)
        images[size : size + p] = apply(basis[size : size + p])
        newest = size
        size += p
        matvecs += p


def dense_matrix(s: float, diag: ProblemDiagonal, d: DriverSpec) -> np.ndarray:
    apply = _hamiltonian_block(s, diag, d)
    return apply(np.eye(diag.dim))


def lowest_eigenpairs(
    s: float,
    diag: ProblemDiagonal,
    d: DriverSpec,
    k: int = 2,
    tol: float = DEFAULT_TOL,
    *,
    v0=None,
    max_matvecs: int | None = None,
    seed: int = 0,
    method: str = "block",
) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` algebraically smallest eigenpairs of ``H(s)``.

    Returns ascending eigenvalues and a ``(dim, k)`` array of real orthonormal
    eigenvectors. ``s = 1`` is solved exactly (the matrix is diagonal),
    dimensions up to ``DENSE_LIMIT`` use a dense solver, everything else a
    restarted block Lanczos iteration with full reorthogonalization. ``v0``
    optionally seeds the Krylov start block with previous eigenvectors
    (columns).

    ``method="arpack"`` swaps the block iteration for implicitly restarted
    Lanczos (single start vector). It is much faster near ``s = 1`` but may
    return fewer copies of a degenerate level than exist, so use it only
    where distinct eigenvalues matter, not full multiplets.
    """
    if method not in SOLVER_METHODS:
        raise ValueError(f"method must be one of {SOLVER_METHODS}, got {method!r}")
    dim = diag.dim
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= {dim}, got {k}")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    if s == 1.0:
        order = np.argsort(diag.energies, kind="stable")[:k]
        vecs = np.zeros((dim, k))
        vecs[order, np.arange(k)] = 1.0
        return diag.as_float()[order], vecs
    if dim <= DENSE_LIMIT:
        vals, vecs = np.linalg.eigh(dense_matrix(s, diag, d))
        return vals[:k], _fix_signs(vecs[:, :k])
    rng = np.random.default_rng(seed)
    if max_matvecs is None:
        max_matvecs = 10 * dim
    if method == "arpack" and k < dim - 1:
        try:
            return _arpack(s, diag, d, k, tol, v0, max_matvecs, rng)
        except (ArpackNoConvergence, ConvergenceError):
            pass
    start = None if v0 is None else np.asarray(v0).T
    vals, vecs, _ = _block_lanczos(_hamiltonian_block(s, diag, d), dim, k, tol, start, max_matvecs, rng)
    return vals, _fix_signs(vecs)


def _arpack(s, diag, d, k, tol, v0, max_matvecs, rng):
    apply = _hamiltonian_block(s, diag, d)
    dim = diag.dim
    op = LinearOperator(
        (dim, dim),
        matvec=lambda v: apply(v.reshape(1, -1))[0],
        matmat=lambda v: apply(v.T).T,
        dtype=np.float64,
    )
    # a random admixture keeps every symmetry sector in the Krylov space
    start = rng.standard_normal(dim)
    if v0 is not None:
        warm = np.asarray(v0, dtype=np.float64).reshape(dim, -1)[:, 0]
        start = warm + 1e-3 * start / np.linalg.norm(start)
    ncv = min(dim - 1, max(ARPACK_NCV, 2 * k + 1))
    vals, vecs = eigsh(op, k=k, which="SA", tol=0.01 * tol, v0=start, ncv=ncv, maxiter=max(1, max_matvecs // ncv))
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    resid = np.linalg.norm(apply(np.ascontiguousarray(vecs.T)) - vals[:, None] * vecs.T, axis=1)
    if np.any(resid > tol):
        raise ConvergenceError(f"ARPACK residual {resid.max():.2e} above {tol:.0e}")
    return vals, _fix_signs(vecs)


def _clusters(values, tol) -> list[int]:
    ids = []
    start = None
    cid = -1
    for v in values:
        if start is None or v - start > tol:
            cid += 1
            start = v
        ids.append(cid)
    return ids


def _solve_until(s, diag, d, m, tol, complete, cache=None):
    """Grow the number of eigenpairs until ``complete(cluster_ids)`` holds.

    ``cache`` (a dict) remembers the last size and eigenvectors so a sweep
    over nearby ``s`` values starts warm.
    """
    dim = diag.dim
    v0 = None
    if cache is not None:
        m = max(m, cache.get("m", m))
        v0 = cache.get("vecs")
    while True:
        m = min(m, dim)
        vals, vecs = lowest_eigenpairs(s, diag, d, m, v0=v0)
        if m == dim or complete(_clusters(vals, tol)):
            break
        v0 = vecs
        m *= 2
    if cache is not None and s < 1.0:
        cache["m"] = m
        cache["vecs"] = vecs
    return vals, vecs


def ground_population(
    psi, s: float, diag: ProblemDiagonal, d: DriverSpec, degeneracy_tol: float = DEGENERACY_TOL, *, cache=None
) -> float:
    """Weight of ``psi`` on the instantaneous ground manifold of ``H(s)``.

    The manifold is every eigenstate within ``degeneracy_tol`` of the lowest
    eigenvalue. At ``s = 1`` this is the full set of optimal colorings.
    ``cache`` (a dict) carries eigenvectors between nearby ``s`` values to
    warm-start the eigensolver.
    """
    psi = np.asarray(psi)
    if s == 1.0:
        return float(np.sum(np.abs(psi[diag.ground_mask()]) ** 2))
    # the ground state is unique for s < 1 (a connected driver with
    # non-positive hops), so two distinct levels usually settle it cheaply
    warm = None if cache is None else cache.get("vecs")
    vals, vecs = lowest_eigenpairs(s, diag, d, 2, v0=warm, method="arpack")
    if vals[1] - vals[0] > degeneracy_tol:
        if cache is not None:
            cache["vecs"] = vecs
        return float(abs(vecs[:, 0] @ psi) ** 2)
    vals, vecs = _solve_until(s, diag, d, 2, degeneracy_tol, lambda ids: ids[-1] > 0, cache)
    members = vals - vals[0] <= degeneracy_tol
    overlaps = vecs[:, members].T @ psi
    return float(np.sum(np.abs(overlaps) ** 2))


def population_distribution(
    psi, s: float, diag: ProblemDiagonal, d: DriverSpec, k: int = 10, cluster_tol: float = DEGENERACY_TOL
) -> list[LevelPopulation]:
    """Squared overlaps of ``psi`` with the lowest instantaneous eigenstates.

    Levels whose energies lie within ``cluster_tol`` of a cluster's first
    level share a ``cluster_id``; only cluster totals are basis independent.
    If level ``k-1`` sits inside a cluster, the list is extended to the end of
    that cluster.
    """
    psi = np.asarray(psi)
    if s == 1.0:
        order = np.argsort(diag.energies, kind="stable")
        energies = diag.energies[order]
        cut = min(k, diag.dim)
        while cut < diag.dim and energies[cut] == energies[cut - 1]:
            cut += 1
        pops = np.abs(psi[order[:cut]]) ** 2
        vals = energies[:cut].astype(np.float64)
    else:
        k = min(k, diag.dim)
        vals, vecs = _solve_until(s, diag, d, k + 1, cluster_tol, lambda ids: ids[-1] > ids[k - 1])
        ids = _clusters(vals, cluster_tol)
        cut = max(i for i, c in enumerate(ids) if c == ids[k - 1]) + 1
        vals = vals[:cut]
        pops = np.abs(vecs[:, :cut].T @ psi) ** 2
    ids = _clusters(vals, cluster_tol)
    return [LevelPopulation(i, float(e), float(p), c) for i, (e, p, c) in enumerate(zip(vals, pops, ids))]


def cluster_populations(levels: list[LevelPopulation]) -> list[tuple[float, float]]:
    """(energy of first member, summed population) per cluster, in ascending order."""
    out: dict[int, list[float]] = {}
    for lv in levels:
        entry = out.setdefault(lv.cluster_id, [lv.energy, 0.0])
        entry[1] += lv.population
    return [tuple(out[c]) for c in sorted(out)]


def gap_curve(g: Graph | ProblemDiagonal, q: int, d: DriverSpec, s_grid=None) -> list[SpectrumSample]:
    """Two lowest eigenvalues of ``H(s)`` on every grid point."""
    diag = g if isinstance(g, ProblemDiagonal) else build_problem_diagonal(g, q)
    if s_grid is None:
        s_grid = default_grid()
    out = []
    for s in s_grid:
        s = float(s)
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"grid point s={s} outside [0, 1]")
        # cold start every point: a warm vector can hide symmetry sectors
        vals, _ = lowest_eigenpairs(s, diag, d, 2, method="arpack")
        out.append(SpectrumSample(s, (float(vals[0]), float(vals[1]))))
    return out


def adiabatic_time_bound(
    g: Graph | ProblemDiagonal, q: int, d: DriverSpec, s_grid=None, degeneracy_tol: float = DEGENERACY_TOL
) -> float:
    """``max_s |<phi_1|dH/ds|phi_0>| / min_s gap(s)^2`` with ``dH/ds = H_p - H_d``.

    When the first excited level is degenerate the matrix element is the norm
    of ``dH/ds |phi_0>`` projected onto that whole level, which does not
    depend on how the level's basis is chosen.
    """
    diag = g if isinstance(g, ProblemDiagonal) else build_problem_diagonal(g, q)
    if s_grid is None:
        s_grid = default_grid()[:-1]
    numerators = []
    gaps = []
    cache: dict = {}
    for s in s_grid:
        s = float(s)
        vals, vecs = _solve_until(s, diag, d, 3, degeneracy_tol, lambda ids: ids[-1] > 1, cache)
        ids = _clusters(vals, degeneracy_tol)
        if ids[1] == 0 or vals[ids.index(1)] - vals[0] < 1e-9:
            raise DegenerateGridError(f"gap vanishes at s={s}; exclude it from the grid")
        ground = vecs[:, 0]
        deriv = diag.as_float() * ground - apply_driver(d, ground, diag.n_nodes)
        level = [i for i, c in enumerate(ids) if c == 1]
        numerators.append(float(np.linalg.norm(vecs[:, level].T @ deriv)))
        gaps.append(float(vals[level[0]] - vals[0]))
    return max(numerators) / min(gaps) ** 2
