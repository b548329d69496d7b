"""Brute-force reference implementations used for cross-path verification.

Everything here trades speed for transparency: plain loops, explicit
truncation radii, and crude but rigorous remainder envelopes.  The
production modules never call into this file; tests and the acceptance
suites compare against it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .kernel import ModelParams, TailBound, box_tail_upper


def torus_direct_images(i, j, N: int, p: ModelParams,
                        image_radius: int = 64) -> TailBound:
    """Periodized coupling by literal image summation plus a remainder bound."""
    delta = np.asarray(i, dtype=np.int64) - np.asarray(j, dtype=np.int64)
    total = 0.0
    for image in itertools.product(range(-image_radius, image_radius + 1),
                                   repeat=p.d):
        v = delta + N * np.asarray(image, dtype=np.int64)
        r2 = int((v ** 2).sum())
        if r2 > 0:
            total += r2 ** (-0.5 * p.s)
    # |delta + N n| >= N(|n| - sqrt(d)/2) for |delta|_inf <= N/2, so the
    # omitted images are dominated by the open-lattice box tail at radius
    # image_radius in units of N
    rem = N ** (-p.s) * box_tail_upper(p.d, p.s, image_radius + 1)
    return TailBound(p.kappa * total, p.kappa * rem)


def smeared_brute(i, j, p: ModelParams, order: int = 64) -> float:
    """Double-cell smeared kernel by 2d-dimensional tensor Gauss quadrature."""
    delta = (np.asarray(j, dtype=np.float64) - np.asarray(i, dtype=np.float64))
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * x  # cells have unit side
    w = 0.5 * w
    grids = np.meshgrid(*([x] * (2 * p.d)), indexing="ij")
    wgrids = np.meshgrid(*([w] * (2 * p.d)), indexing="ij")
    r2 = sum((grids[p.d + a] - grids[a] + delta[a]) ** 2 for a in range(p.d))
    wtot = wgrids[0]
    for g in wgrids[1:]:
        wtot = wtot * g
    return p.kappa * float((wtot * r2 ** (-0.5 * p.s)).sum())


def _box_sites(d: int, L: int) -> np.ndarray:
    axes = [np.arange(-L, L + 1)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def t_sum_pairs(d: int, L: int, p: ModelParams, margin: int) -> TailBound:
    """T_L by literal pair loops, exterior truncated at |j|_inf <= L + margin.

    Lower bound plus remainder: every site of the box sees at most the
    open-lattice tail beyond displacement radius margin.
    """
    inner = _box_sites(d, L)
    outer_full = _box_sites(d, L + margin)
    mask = (np.abs(outer_full).max(axis=1) > L)
    outer = outer_full[mask]
    total = 0.0
    for site in inner:
        r2 = ((outer - site) ** 2).sum(axis=1).astype(np.float64)
        total += float(np.sum(r2 ** (-0.5 * p.s)))
    rem = len(inner) * box_tail_upper(d, p.s, margin + 1)
    return TailBound(p.kappa * total, p.kappa * rem)


def t_sum_displacement(d: int, L: int, p: ModelParams,
                       margin: int) -> TailBound:
    """Same truncated exterior sum as t_sum_pairs via displacement counting.

    The number of (i, j) pairs at displacement v with i in the box and j
    in the truncated exterior is a product of per-axis overlap counts;
    this is an independent route to the identical truncated quantity.
    """
    Q = L + margin
    axes = [np.arange(-(L + Q), L + Q + 1)] * d
    vgrids = np.meshgrid(*axes, indexing="ij")

    def overlap(v, ell1, ell2):
        lo = np.maximum(-ell1, -ell2 - v)
        hi = np.minimum(ell1, ell2 - v)
        return np.maximum(hi - lo + 1, 0)

    # pairs with j anywhere in the big box B_Q minus pairs with j inside
    big = overlap(vgrids[0], L, Q)
    small = overlap(vgrids[0], L, L)
    for a in range(1, d):
        big = big * overlap(vgrids[a], L, Q)
        small = small * overlap(vgrids[a], L, L)
    cnt = (big - small).astype(np.float64)
    r2 = sum(g.astype(np.float64) ** 2 for g in vgrids)
    vals = np.zeros_like(r2)
    nz = r2 > 0
    vals[nz] = r2[nz] ** (-0.5 * p.s)
    total = float((cnt * vals).sum())
    rem = (2 * L + 1) ** d * box_tail_upper(d, p.s, margin + 1)
    return TailBound(p.kappa * total, p.kappa * rem)


def single_site_partial(d: int, s: float, R: int) -> float:
    """Plain partial sum of |v|^(-s) over 0 < |v|_inf <= R (loops, no tricks)."""
    total = 0.0
    for v in itertools.product(range(-R, R + 1), repeat=d):
        r2 = sum(c * c for c in v)
        if r2 > 0:
            total += r2 ** (-0.5 * s)
    return total


def enumerate_torus_states(N: int, p: ModelParams, kernel_row: np.ndarray):
    """All 2^(N^d) spin patterns of a tiny torus with their energies.

    Returns (signs, energies); energies include the constant self-image
    term carried by kernel_row's origin element.  Intended for n <= 20
    spins.
    """
    n = N ** p.d
    if n > 22:
        raise ValueError("enumeration limited to 22 spins")
    # pairwise coupling matrix from the kernel row by displacement lookup
    idx = np.arange(n)
    coords = np.stack(np.unravel_index(idx, (N,) * p.d), axis=1)
    disp = (coords[:, None, :] - coords[None, :, :]) % N
    Wmat = kernel_row[tuple(disp[..., a] for a in range(p.d))]
    np.fill_diagonal(Wmat, 0.0)
    # nearest-neighbor adjacency on the torus
    Amat = np.zeros((n, n))
    for axis in range(p.d):
        shifted = coords.copy()
        shifted[:, axis] = (shifted[:, axis] + 1) % N
        jdx = np.ravel_multi_index(tuple(shifted.T), (N,) * p.d)
        Amat[idx, jdx] += 1.0
        Amat[jdx, idx] += 1.0
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    inter = 0.5 * np.einsum("ki,ij,kj->k", signs, Wmat - p.J * Amat, signs)
    const = 0.5 * n * kernel_row[(0,) * p.d]
    field = -p.h * signs.sum(axis=1)
    return signs, inter + const + field
