"""Compiled inner loops: matrix-free Hamiltonian action and fixed-step RK4.

Basis convention: the color of node ``i`` in basis index ``b`` is
``(b // q**i) % q`` (little-endian mixed radix).

Every Hamiltonian here is real, so a complex vector is processed as its
interleaved float64 view ``(re_0, im_0, re_1, im_1, ...)``: ``width = 2`` for
complex data and ``width = 1`` for real data.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _is_complete(hop, q):
    amp = hop[0, 1]
    for a in range(q):
        if hop[a, a] != 0.0:
            return False
        for b in range(q):
            if a != b and hop[a, b] != amp:
                return False
    return True


@njit(cache=True)
def add_hops(x, out, hop, q, n, scale, width):
    """out += scale * sum_i h_i x, with h_i the q x q hop matrix acting on node i."""
    size = x.shape[0]
    complete = _is_complete(hop, q)
    stride = width
    for _node in range(n):
        outer = size // (stride * q)
        p3 = x.reshape((outer, q, stride))
        o3 = out.reshape((outer, q, stride))
        if complete:
            # uniform hops: h v = amp * (sum(v) - v)
            amp = scale * hop[0, 1]
            tot = np.empty(stride)
            for o in range(outer):
                for j in range(stride):
                    tot[j] = p3[o, 0, j]
                for b in range(1, q):
                    for j in range(stride):
                        tot[j] += p3[o, b, j]
                for a in range(q):
                    for j in range(stride):
                        o3[o, a, j] += amp * (tot[j] - p3[o, a, j])
        else:
            for a in range(q):
                for b in range(q):
                    amp = scale * hop[a, b]
                    if amp == 0.0:
                        continue
                    for o in range(outer):
                        for j in range(stride):
                            o3[o, a, j] += amp * p3[o, b, j]
        stride *= q


@njit(cache=True)
def apply_total(x, out, diag, coef_p, coef_d, shift, hop, q, n, width):
    """out = (coef_p * diag - shift) * x + coef_d * H_d x."""
    dim = diag.shape[0]
    for b in range(dim):
        w = coef_p * diag[b] - shift
        for j in range(width):
            out[b * width + j] = w * x[b * width + j]
    if coef_d != 0.0:
        add_hops(x, out, hop, q, n, coef_d, width)


@njit(cache=True)
def apply_total_block(block, out, diag, coef_p, coef_d, hop, q, n):
    """apply_total on every row of a real C-contiguous (k, dim) block."""
    rows, dim = block.shape
    for r in range(rows):
        for b in range(dim):
            out[r, b] = coef_p * diag[b] * block[r, b]
    if coef_d != 0.0:
        # rows act as one more outer axis of the mixed-radix layout
        add_hops(block.reshape(rows * dim), out.reshape(rows * dim), hop, q, n, coef_d, 1)


@njit(cache=True)
def schedule_value(kind, tau, t):
    # kind 0: linear t/tau, kind 1: exponential 1 - exp(-t/tau)
    if kind == 0:
        s = t / tau
    else:
        s = 1.0 - np.exp(-t / tau)
    if s < 0.0:
        return 0.0
    if s > 1.0:
        return 1.0
    return s


@njit(cache=True)
def _shifted_h(t, y, out, kind, tau, diag, hop, q, n, e_start, e_end):
    # (H(s) - c(s)) y with the reference energy c(s) linear in s
    s = schedule_value(kind, tau, t)
    shift = (1.0 - s) * e_start + s * e_end
    apply_total(y, out, diag, s, 1.0 - s, shift, hop, q, n, 2)


@njit(cache=True)
def _axpy_minus_i(y, a, k, out):
    # out = y - i a k on interleaved complex data
    for b in range(0, y.shape[0], 2):
        out[b] = y[b] + a * k[b + 1]
        out[b + 1] = y[b + 1] - a * k[b]


@njit(cache=True)
def rk4_segment(psi, t0, h, nsteps, kind, tau, diag, hop, q, n, e_start, e_end):
    """Advance the interleaved complex state ``psi`` in place by ``nsteps`` RK4 steps.

    Stages hold ``(H - c) y``; the factor ``-i`` of the Schrödinger equation
    is applied when the stages are combined.
    """
    size = psi.shape[0]
    k1 = np.empty(size)
    k2 = np.empty(size)
    k3 = np.empty(size)
    k4 = np.empty(size)
    tmp = np.empty(size)
    half = 0.5 * h
    sixth = h / 6.0
    for step in range(nsteps):
        t = t0 + step * h
        _shifted_h(t, psi, k1, kind, tau, diag, hop, q, n, e_start, e_end)
        _axpy_minus_i(psi, half, k1, tmp)
        _shifted_h(t + half, tmp, k2, kind, tau, diag, hop, q, n, e_start, e_end)
        _axpy_minus_i(psi, half, k2, tmp)
        _shifted_h(t + half, tmp, k3, kind, tau, diag, hop, q, n, e_start, e_end)
        _axpy_minus_i(psi, h, k3, tmp)
        _shifted_h(t + h, tmp, k4, kind, tau, diag, hop, q, n, e_start, e_end)
        for b in range(0, size, 2):
            kr = k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + k4[b]
            ki = k1[b + 1] + 2.0 * k2[b + 1] + 2.0 * k3[b + 1] + k4[b + 1]
            psi[b] += sixth * ki
            psi[b + 1] -= sixth * kr
