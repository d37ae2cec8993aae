"""Independent reference computations.

These rebuild results the slow, literal way (explicit received vectors,
dense grids) using ``numpy.linalg`` directly, so they share no arithmetic
with the closed forms they are used to check.
"""
from __future__ import annotations

import numpy as np

from .channel import Drop


def assemble_steering(drop: Drop, rho_matrix, budgets=None) -> dict:
    """Received-signal assembly for steering with factors ``rho[m, n]``.

    Builds, for every MBS symbol, the total coefficient vector at the PUE
    (interference plus every steering copy), and for every PBS symbol its
    desired vector; then applies the filters ``u_m``.
    """
    h0, h10 = drop.h0, drop.h10
    U, s, Vh = np.linalg.svd(h0)
    V = Vh.conj().T
    h0_pinv = np.linalg.pinv(h0)
    M, N = drop.n_streams_pbs, drop.n_interferences
    R = np.broadcast_to(np.asarray(rho_matrix, dtype=float), (M, N))
    b = np.full(M, drop.budget.p0e / M) if budgets is None else np.asarray(budgets, dtype=float)

    coeff = []
    overhead = np.zeros((M, N))
    for n in range(N):
        q = drop.mbs_stream_powers[n]
        y = h10 @ drop.mbs_precoders[n]
        c = np.sqrt(q) * y
        for m in range(M):
            d = h0 @ V[:, m]
            d = d / np.linalg.norm(d)
            P = np.outer(d, d.conj())
            g = h0_pinv @ (P @ y)
            gn = np.linalg.norm(g)
            if gn == 0.0 or R[m, n] == 0.0:
                continue
            p_dis = -g / gn
            overhead[m, n] = R[m, n] ** 2 * q * gn ** 2
            c = c + np.sqrt(overhead[m, n]) * (h0 @ p_dis)
        coeff.append(c)

    desired_vecs = [np.sqrt(max(b[m] - overhead[m].sum(), 0.0)) * (h0 @ V[:, m]) for m in range(M)]
    sigma2 = drop.budget.sigma2
    desired, interference = [], []
    for m in range(M):
        f = U[:, m]
        desired.append(abs(np.vdot(f, desired_vecs[m])) ** 2)
        i_pow = sum(abs(np.vdot(f, c)) ** 2 for c in coeff)
        i_pow += sum(abs(np.vdot(f, desired_vecs[k])) ** 2 for k in range(M) if k != m)
        interference.append(i_pow)
    se = float(sum(np.log2(1.0 + d_ / (sigma2 + i_)) for d_, i_ in zip(desired, interference)))
    return {
        "se": se,
        "desired": np.array(desired),
        "interference": np.array(interference),
        "overhead": overhead,
        "coefficients": coeff,
        "filters": U[:, :M],
    }


def assemble_neutralization(drop: Drop) -> dict:
    """Received interference after full neutralization, before and after filtering."""
    h0 = drop.h0
    U, _, _ = np.linalg.svd(h0)
    h0_pinv = np.linalg.pinv(h0)
    residual_vecs, overhead = [], 0.0
    for q, p1 in zip(drop.mbs_stream_powers, drop.mbs_precoders):
        y = drop.h10 @ p1
        s_vec = -np.sqrt(q) * (h0_pinv @ y)
        overhead += float(np.vdot(s_vec, s_vec).real)
        residual_vecs.append(np.sqrt(q) * y + h0 @ s_vec)
    M = drop.n_streams_pbs
    post = [sum(abs(np.vdot(U[:, m], r)) ** 2 for r in residual_vecs) for m in range(M)]
    return {"overhead": overhead, "residual_vectors": residual_vecs, "post_filter": np.array(post)}


def sinr_from_geometry(p0e, p1e, sigma2, lam, g, chi, rho):
    """SINR written directly in terms of the steering geometry (``g``, ``chi``)."""
    num = (p0e - rho ** 2 * p1e * np.linalg.norm(g) ** 2) * lam ** 2
    den = (1 - rho) ** 2 * p1e * abs(chi) ** 2 + sigma2
    return num / den


def grid_argmax_rho(sinr_fn, rho_max: float, step: float = 1e-4) -> float:
    """Brute-force maximizer of ``sinr_fn`` over ``{0, step, 2 step, ...} ∩ [0, rho_max]``."""
    grid = np.arange(0.0, rho_max + 0.5 * step, step)
    grid = grid[grid <= rho_max]
    return float(grid[int(np.argmax(sinr_fn(grid)))])


def grid_argmax_2d(a, b, e, s2, step: float = 1e-3) -> tuple[float, float]:
    """Brute-force maximizer of the two-interference SINR over a square grid.

    ``phi = (a - b1 r1^2 - b2 r2^2) / (s2 + e1 (1-r1)^2 + e2 (1-r2)^2)``;
    points where the PBS power would be exceeded are excluded.
    """
    r = np.arange(0.0, 1.0 + 0.5 * step, step)
    r1, r2 = np.meshgrid(r, r, indexing="ij")
    num = a - b[0] * r1 ** 2 - b[1] * r2 ** 2
    den = s2 + e[0] * (1 - r1) ** 2 + e[1] * (1 - r2) ** 2
    phi = np.where(num >= 0, num / den, -np.inf)
    i, j = np.unravel_index(int(np.argmax(phi)), phi.shape)
    return float(r[i]), float(r[j])
