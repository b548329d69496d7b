"""Deterministic interaction sums and their continuum asymptotics.

T_L is the total coupling between the box Lambda_L = [-L, L]^d and its
complement.  It is computed through the complement identity

    T_L = |Lambda_L| eps_s - sum_{i,j in Lambda_L} K_ij

with the interior double sum collapsed onto displacement classes, whose
pair counts factor per axis.  That turns an O(L^{2d}) sum with a slowly
convergent tail into an O(L^d) pass with the tail inherited from eps_s.

Lattice tails are rigorous majorants; quadrature tails are conservative
error estimates propagated from the adaptive integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate
from scipy import special

from .kernel import (
    DomainError,
    ModelParams,
    TailBound,
    ToleranceError,
    power_from_r2,
    single_site_floor,
    single_site_sum,
)

_OMEGA = {0: 2.0, 1: 2.0 * math.pi}  # surface measure of S^(d-2), d = 2, 3


@dataclass(frozen=True)
class BoxSpec:
    """The centered box Lambda_L = [-L, L]^d, optionally with a cutoff a."""

    d: int
    L: int
    a: int | None = None

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.L < 0:
            raise DomainError("box half-side must be nonnegative")
        if self.a is not None and not 0 <= self.a < max(self.L, 1):
            raise DomainError("cutoff must satisfy 0 <= a < L")

    @property
    def volume(self) -> int:
        return (2 * self.L + 1) ** self.d

    @property
    def boundary_bonds(self) -> int:
        return 2 * self.d * (2 * self.L + 1) ** (self.d - 1)


@dataclass(frozen=True)
class FitResult:
    model: str
    amplitude: float
    subleading: float
    exponent: float
    residual: float


def _k_of_r2(r2, s: float):
    """Kernel magnitude from integer squared displacement (kappa = 1)."""
    return power_from_r2(r2, s)


def _axis_overlap(v: np.ndarray, ell1: int, ell2: int) -> np.ndarray:
    """#{t in [-ell1, ell1] : t + v in [-ell2, ell2]} per displacement."""
    lo = np.maximum(-ell1, -ell2 - v)
    hi = np.minimum(ell1, ell2 - v)
    return np.maximum(hi - lo + 1, 0)


def cross_pair_sum(d: int, ell1: int, ell2: int, s: float) -> float:
    """sum over i in Lambda_ell1, j in Lambda_ell2 of |i-j|^(-s).

    Displacement-class evaluation: pair counts are products of per-axis
    interval overlaps, so the cost is O((ell1+ell2)^d) instead of the
    O((ell1 ell2)^d) double sum.
    """
    span = ell1 + ell2
    ax = np.arange(0, span + 1, dtype=np.int64)
    sym = np.where(ax > 0, 2.0, 1.0)  # counts and kernel are even per axis

    def axis_counts(v):
        return _axis_overlap(v, ell1, ell2).astype(np.float64)

    if d == 1:
        cnt = axis_counts(ax) * sym
        vals = _k_of_r2((ax ** 2).astype(np.float64), s)
        return float(np.dot(cnt, vals))
    c1 = axis_counts(ax) * sym
    if d == 2:
        chunks = []
        step = max(1, (1 << 22) // (span + 1))
        y2 = (ax ** 2).astype(np.float64)
        for x0 in range(0, span + 1, step):
            x = ax[x0:x0 + step]
            r2 = x[:, None].astype(np.float64) ** 2 + y2[None, :]
            vals = _k_of_r2(r2, s)
            cnt = c1[x0:x0 + step, None] * c1[None, :]
            chunks.append(float((cnt * vals).sum()))
        return math.fsum(chunks)
    plane_r2 = (ax[:, None] ** 2 + ax[None, :] ** 2).astype(np.float64)
    plane_cnt = c1[:, None] * c1[None, :]
    chunks = []
    for x0 in range(0, span + 1):
        r2 = ax[x0] ** 2 + plane_r2
        vals = _k_of_r2(r2, s)
        chunks.append(float((plane_cnt * vals).sum()) * c1[x0])
    return math.fsum(chunks)


def interior_pair_sum(box: BoxSpec, p: ModelParams) -> float:
    """sum over ordered pairs i, j in the box of K_ij."""
    return p.kappa * cross_pair_sum(box.d, box.L, box.L, p.s)


def _eps_tol_for(d: int, s: float, volume: int, tol: float) -> float:
    """Per-site tolerance so the box total stays below tol.

    Quantized to powers of 4 so the cached single-site sums are shared
    across nearby requests, and clamped to the certifiable floor of the
    box-truncated summation (the returned T_L tail stays honest either
    way, it just may exceed the request for extreme volumes).
    """
    floor_t = 1.10 * single_site_floor(d, s)
    raw = max(tol / max(volume, 1), floor_t, 1e-14)
    quantized = 4.0 ** math.floor(math.log(raw, 4.0))
    return quantized if quantized >= floor_t else raw


def t_sum(box: BoxSpec, p: ModelParams, tol: float = 1e-6) -> TailBound:
    """T_L: total coupling between Lambda_L and its complement."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    if p.kappa == 0.0:
        return TailBound(0.0, 0.0)
    eps = single_site_sum(p, tol=_eps_tol_for(box.d, p.s, box.volume, tol) * p.kappa)
    interior = interior_pair_sum(box, p)
    value = box.volume * eps.value - interior
    roundoff = 64.0 * np.finfo(float).eps * (box.volume * eps.value + interior)
    return TailBound(value - roundoff, box.volume * eps.tail + 2 * roundoff)


def t_sum_cutoff(box: BoxSpec, p: ModelParams, tol: float = 1e-6) -> TailBound:
    """T_{L,a}: as t_sum but with the inner sum restricted to Lambda_{L-a}."""
    if box.a is None:
        raise DomainError("t_sum_cutoff needs a BoxSpec with a cutoff a")
    if p.kappa == 0.0:
        return TailBound(0.0, 0.0)
    inner = BoxSpec(box.d, box.L - box.a)
    eps = single_site_sum(p, tol=_eps_tol_for(box.d, p.s, inner.volume, tol) * p.kappa)
    cross = p.kappa * cross_pair_sum(box.d, inner.L, box.L, p.s)
    value = inner.volume * eps.value - cross
    roundoff = 64.0 * np.finfo(float).eps * (inner.volume * eps.value + cross)
    return TailBound(value - roundoff, inner.volume * eps.tail + 2 * roundoff)


# ---------------------------------------------------------------------------
# continuum integrals


def _g_profile(s: float, w) -> np.ndarray:
    """g_s(w) = int_w^inf (1+t^2)^(-s/2) dt, stable on both branches."""
    w = np.asarray(w, dtype=np.float64)
    out = np.empty_like(w)
    g0 = 0.5 * math.sqrt(math.pi) * special.gamma(0.5 * (s - 1.0)) \
        / special.gamma(0.5 * s)
    small = w <= 1.0
    ws = w[small]
    out[small] = g0 - ws * special.hyp2f1(0.5, 0.5 * s, 1.5, -ws * ws)
    wl = w[~small]
    out[~small] = wl ** (1.0 - s) / (s - 1.0) * special.hyp2f1(
        0.5 * s, 0.5 * (s - 1.0), 0.5 * (s + 1.0), -1.0 / (wl * wl))
    return out if out.ndim else float(out)


def _geometric_singular_quad(f, span: float, gamma: float,
                             tol: float, order: int = 16,
                             max_levels: int = 900):
    """Integrate f(u) on (0, span] with f ~ u^(-gamma) near 0, gamma < 1.

    f takes the distance u to the singular point, so the panels can
    shrink geometrically toward 0 without floating-point cancellation.
    Each dyadic panel uses Gauss-Legendre with an order-doubling error
    estimate; the uncovered stub at 0 is bounded by the power envelope.
    Returns (value, error_estimate).
    """
    if not 0 <= gamma < 1:
        raise DomainError("geometric panel quadrature needs 0 <= gamma < 1")
    xg, wg = np.polynomial.legendre.leggauss(order)
    xg2, wg2 = np.polynomial.legendre.leggauss(2 * order)

    def panel(lo, hi):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        v1 = half * float(np.dot(wg, f(mid + half * xg)))
        v2 = half * float(np.dot(wg2, f(mid + half * xg2)))
        return v2, abs(v2 - v1)

    total, err = 0.0, 0.0
    width = span
    stub = math.inf
    for _ in range(max_levels):
        width *= 0.5
        v, e = panel(width, 2.0 * width if width < 0.5 * span else span)
        total += v
        err += e
        edge = 1.5 * width
        c_est = abs(float(f(edge))) * edge ** gamma
        stub = c_est * width ** (1.0 - gamma) / (1.0 - gamma)
        if stub <= 0.25 * tol and err <= 0.5 * tol:
            break
        if width < 1e-280:
            break
    return total, err + stub


@lru_cache(maxsize=None)
def _radial_profile_constant(d: int, s: float):
    """int_{R^(d-1)} (1+|z|^2)^(-s/2) dz by quadrature, with error."""
    if d == 1:
        return 1.0, 0.0
    if d == 2:
        val, err = integrate.quad(
            lambda w: (1.0 + w * w) ** (-0.5 * s), 0.0, np.inf,
            epsabs=1e-13, epsrel=1e-13)
        return 2.0 * val, 2.0 * err
    val, err = integrate.quad(
        lambda rho: 2.0 * math.pi * rho * (1.0 + rho * rho) ** (-0.5 * s),
        0.0, np.inf, epsabs=1e-13, epsrel=1e-13)
    return val, err


def _corner_profile(s: float, c: float, sigma: float) -> float:
    """F_sigma(1, c) = int_1^inf u^(1-sigma) g_sigma(c/u) du."""
    val, _ = integrate.quad(
        lambda u: u ** (1.0 - sigma) * _g_profile(sigma, c / u),
        1.0, np.inf, epsabs=1e-11, epsrel=1e-11)
    return val


def q_integral(d: int, s: float, tol: float = 1e-8,
               region: str = "cube") -> TailBound:
    """Q: coupling integral between the unit box S_1 and its complement.

    S_1 is the cube [-1, 1]^d.  The complement is decomposed into 2d
    half-spaces minus corner overlaps; the half-space profile has an
    integrable boundary singularity handled by geometric subdivision
    toward the face.  Diverges at s = d + 1, hence the open domain.
    """
    if not d < s < d + 1:
        raise DomainError(f"q_integral needs d < s < d+1, got d={d}, s={s}")
    if region == "cross_polytope":
        if d == 1:
            return q_integral(1, s, tol=tol)
        if d == 2:
            # the l1 ball in the plane is the cube rotated by 45 degrees
            # and scaled by 1/sqrt(2); the integral scales by lam^(2d-s)
            base = q_integral(2, s, tol=tol)
            return base.scaled((0.5 ** 0.5) ** (4.0 - s))
        raise DomainError("cross-polytope region implemented for d <= 2 only")
    if region != "cube":
        raise DomainError(f"unknown region {region!r}")

    ctil, cerr = _radial_profile_constant(d, s)
    gamma = s - d
    # face profile int_{-1}^{1} (1-x)^(d-s) dx in distance-to-face form
    jx, jerr = _geometric_singular_quad(
        lambda u: u ** (d - s), 2.0, gamma, tol=tol * 0.02)
    half = 2.0 ** (d - 1) * ctil / (s - d) * jx
    err = 2.0 ** (d - 1) / (s - d) * (cerr * abs(jx) + ctil * jerr)
    value = 2.0 * d * half
    err *= 2.0 * d

    if d >= 2:
        # pairwise corner overcount: scaling reduces each corner to a 1D
        # profile integral of F(1, c)
        ic, icerr = integrate.quad(lambda c: _corner_profile(s, c, s),
                                   0.0, 1.0, epsabs=1e-10, epsrel=1e-10)
        pair = 2.0 ** (5.0 - s) / (4.0 - s) * ic if d == 2 else None
        if d == 2:
            value -= 4.0 * pair
            err += 4.0 * 2.0 ** (5.0 - s) / (4.0 - s) * icerr
        else:
            sig = s - 1.0
            icp, icperr = integrate.quad(
                lambda c: _corner_profile(s, c, sig), 0.0, 1.0,
                epsabs=1e-9, epsrel=1e-9)
            cz = 2.0 * float(_g_profile(s, 0.0))
            p3 = 2.0 * cz * 2.0 * 2.0 ** (4.0 - sig) / (4.0 - sig) * icp
            value -= 12.0 * p3
            err += 12.0 * 2.0 * cz * 2.0 * 2.0 ** (4.0 - sig) / (4.0 - sig) \
                * icperr
            t3, t3err = _triple_corner(s)
            value += 8.0 * t3
            err += 8.0 * t3err

    err = 2.0 * err + 1e-14 * abs(value)
    out = TailBound(value - err, 2.0 * err)
    if out.tail > tol:
        raise ToleranceError(
            f"q_integral tail {out.tail:.2e} exceeds tol {tol:.2e}", best=out)
    return out


def _triple_corner(s: float):
    """Triple-corner correction of the d = 3 face decomposition."""
    def f3(c1, c2):
        def inner(u):
            def innermost(v):
                rho = math.hypot(u, v)
                return rho ** (1.0 - s) * float(_g_profile(s, c2 / rho))
            val, _ = integrate.quad(innermost, c1, np.inf,
                                    epsabs=1e-9, epsrel=1e-9)
            return val
        val, _ = integrate.quad(inner, 1.0, np.inf,
                                epsabs=1e-8, epsrel=1e-8)
        return val

    def outer():
        x, w = np.polynomial.legendre.leggauss(12)
        c1 = 0.5 * (x + 1.0)
        w1 = 0.5 * w
        total = 0.0
        for ci, wi in zip(c1, w1):
            inner_nodes = 0.5 * ci * (x + 1.0)
            inner_w = 0.5 * ci * w
            total += wi * sum(wj * f3(ci, cj)
                              for cj, wj in zip(inner_nodes, inner_w))
        return total

    val = outer()
    scale = 6.0 * 2.0 ** (6.0 - s) / (6.0 - s)
    return scale * val, scale * abs(val) * 1e-3


def i1_closed_form(L: float, a: float, d: int, s: float) -> float:
    """Half-space interaction integral I_1(L, a) in closed form.

    The transverse directions integrate to the constant
    C1t = pi^((d-1)/2) Gamma((s-d+1)/2) / Gamma(s/2); the remaining
    profile integrates to (L^(d+1-s) - a^(d+1-s))/((s-d)(d+1-s)), with
    the logarithm taking over at the marginal decay s = d + 1.
    """
    if not (1 <= a <= L):
        raise DomainError("i1 needs 1 <= a <= L")
    if s <= d:
        raise DomainError("i1 needs s > d")
    if a == L:
        return 0.0
    c1t = math.pi ** (0.5 * (d - 1)) * special.gamma(0.5 * (s - d + 1.0)) \
        / special.gamma(0.5 * s)
    if s == d + 1:
        return c1t * math.log(L / a)
    return c1t * (L ** (d + 1.0 - s) - a ** (d + 1.0 - s)) \
        / ((s - d) * (d + 1.0 - s))


def i1_numeric(L: float, a: float, d: int, s: float,
               tol: float = 1e-8) -> TailBound:
    """I_1(L, a) by adaptive quadrature, independent of the closed form.

    The transverse (d-1)-dimensional integral is reduced radially and
    evaluated numerically per profile point; the (x, y) integration is
    carried out exactly in one variable (the integrand depends only on
    x + y), leaving adaptive 1D integrals.
    """
    if not (1 <= a <= L):
        raise DomainError("i1 needs 1 <= a <= L")
    if s <= d:
        raise DomainError("i1 needs s > d")
    if a == L:
        return TailBound(0.0, 0.0)

    if d == 1:
        def h(t):
            return t ** (-s)
        herr_scale = 0.0
    else:
        om = _OMEGA[d - 2]

        def h(t):
            val, _ = integrate.quad(
                lambda rho: om * rho ** (d - 2) * (t * t + rho * rho)
                ** (-0.5 * s),
                0.0, np.inf, epsabs=1e-12, epsrel=1e-12)
            return val
        herr_scale = 1e-11

    v1, e1 = integrate.quad(lambda u: (u - a) * h(u), a, L,
                            epsabs=tol * 0.2, epsrel=1e-10, limit=200)
    v2, e2 = integrate.quad(h, L, np.inf,
                            epsabs=tol * 0.2 / max(L - a, 1.0),
                            epsrel=1e-10, limit=200)
    value = v1 + (L - a) * v2
    err = 4.0 * (e1 + (L - a) * e2) + herr_scale * abs(value)
    out = TailBound(value - err, 2.0 * err)
    if out.tail > tol:
        raise ToleranceError(
            f"i1_numeric tail {out.tail:.2e} exceeds tol {tol:.2e}", best=out)
    return out


def i2_numeric(L: float, a: float, s: float, tol: float = 1e-6) -> TailBound:
    """Corner interaction integral I_2(L, a) for d = 2.

    The quarter-space inner variables integrate to the corner function
    F(x, y) = int_x^inf u^(1-s) g_s(y/u) du, which is then integrated
    over the square [a, L]^2 by Gauss product rules at two orders.
    """
    if not (1 <= a <= L):
        raise DomainError("i2 needs 1 <= a <= L")
    if not 2 < s <= 3:
        raise DomainError("i2 is the d = 2 corner integral, needs 2 < s <= 3")
    if a == L:
        return TailBound(0.0, 0.0)

    def corner(x, y):
        val, _ = integrate.quad(
            lambda u: u ** (1.0 - s) * float(_g_profile(s, y / u)),
            x, np.inf, epsabs=1e-11, epsrel=1e-10)
        return val

    def gauss_value(order):
        xg, wg = np.polynomial.legendre.leggauss(order)
        nodes = 0.5 * (L - a) * (xg + 1.0) + a
        weights = 0.5 * (L - a) * wg
        total = 0.0
        for xi, wi in zip(nodes, weights):
            row = sum(wj * corner(xi, yj)
                      for yj, wj in zip(nodes, weights))
            total += wi * row
        return total

    lo = gauss_value(24)
    hi = gauss_value(36)
    err = 4.0 * abs(hi - lo) + 1e-10 * abs(hi)
    out = TailBound(hi - err, 2.0 * err)
    if out.tail > tol:
        raise ToleranceError(
            f"i2_numeric tail {out.tail:.2e} exceeds tol {tol:.2e}", best=out)
    return out


# ---------------------------------------------------------------------------
# fits and derived bounds


def asymptotic_fit(points: Sequence[tuple[float, float]], model: str,
                   exponent: float | None = None) -> FitResult:
    """Least-squares fit of T_L-style data to its predicted growth law.

    pure_power fits value = amplitude * L^exponent (exponent fitted in
    log-log form when not supplied); power_times_log fits
    value = amplitude * L^exponent ln L + subleading * L^exponent.
    The residual is the maximum relative deviation over the points.
    """
    pts = sorted(points)
    if len(pts) < 4:
        raise DomainError("need at least 4 points to fit")
    L = np.array([q[0] for q in pts], dtype=np.float64)
    v = np.array([q[1] for q in pts], dtype=np.float64)
    if np.any(np.diff(L) <= 0):
        raise DomainError("fit points need strictly increasing L")
    if np.any(v <= 0):
        raise DomainError("fit expects positive values")

    if model == "pure_power":
        if exponent is None:
            A = np.stack([np.log(L), np.ones_like(L)], axis=1)
            sol, *_ = np.linalg.lstsq(A, np.log(v), rcond=None)
            exponent = float(sol[0])
            amplitude = float(math.exp(sol[1]))
        else:
            basis = L ** exponent
            amplitude = float(np.dot(v, basis) / np.dot(basis, basis))
        fit = amplitude * L ** exponent
        sub = 0.0
    elif model == "power_times_log":
        if exponent is None:
            raise DomainError("power_times_log fit needs the power exponent")
        b1 = L ** exponent * np.log(L)
        b2 = L ** exponent
        A = np.stack([b1, b2], axis=1)
        gram = A.T @ A
        if np.linalg.cond(gram) > 1e14:
            raise DomainError("degenerate design matrix")
        sol = np.linalg.solve(gram, A.T @ v)
        amplitude, sub = float(sol[0]), float(sol[1])
        fit = A @ sol
    else:
        raise DomainError(f"unknown fit model {model!r}")

    residual = float(np.max(np.abs(fit - v) / np.abs(v)))
    return FitResult(model=model, amplitude=amplitude, subleading=sub,
                     exponent=float(exponent), residual=residual)


def _region_sites(region) -> np.ndarray:
    sites = np.asarray(region, dtype=np.int64)
    if sites.ndim == 1:
        sites = sites[:, None]
    if sites.ndim != 2 or len(sites) == 0:
        raise DomainError("region must be a nonempty (n, d) site array")
    if len(np.unique(sites, axis=0)) != len(sites):
        raise DomainError("region has duplicate sites")
    return sites


def region_is_connected(sites: np.ndarray) -> bool:
    """Nearest-neighbor connectivity of an explicit site set."""
    site_set = {tuple(v) for v in sites}
    start = next(iter(site_set))
    stack = [start]
    seen = {start}
    d = sites.shape[1]
    while stack:
        cur = stack.pop()
        for axis in range(d):
            for step in (-1, 1):
                nxt = list(cur)
                nxt[axis] += step
                nxt = tuple(nxt)
                if nxt in site_set and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return len(seen) == len(site_set)


def region_boundary_bonds(sites: np.ndarray) -> int:
    """Number of nearest-neighbor bonds leaving the region."""
    site_set = {tuple(v) for v in sites}
    d = sites.shape[1]
    count = 0
    for v in site_set:
        for axis in range(d):
            for step in (-1, 1):
                w = list(v)
                w[axis] += step
                if tuple(w) not in site_set:
                    count += 1
    return count


def region_cross_sum(sites: np.ndarray, p: ModelParams,
                     tol: float = 1e-8) -> TailBound:
    """sum_{i in region, j outside} K_ij via the complement identity."""
    n = len(sites)
    if n > 40000:
        raise DomainError("explicit-region cross sum capped at 40000 sites")
    eps = single_site_sum(p, tol=_eps_tol_for(p.d, p.s, n, tol) * max(p.kappa, 1e-30))
    interior = 0.0
    if p.kappa > 0:
        chunks = []
        step = max(1, (1 << 21) // max(n, 1))
        f = sites.astype(np.float64)
        for k0 in range(0, n, step):
            blk = f[k0:k0 + step]
            r2 = ((blk[:, None, :] - f[None, :, :]) ** 2).sum(axis=-1)
            chunks.append(float(power_from_r2(r2, p.s).sum()))
        interior = p.kappa * math.fsum(chunks)
    value = n * eps.value - interior
    return TailBound(value, n * eps.tail)


def surface_ratio(region, p: ModelParams, tol: float = 1e-8) -> TailBound:
    """Cross-boundary coupling per boundary bond for a connected region.

    Accepts a BoxSpec (fast displacement path) or an explicit (n, d)
    array of sites (pairwise path, connectivity checked).
    """
    if isinstance(region, BoxSpec):
        num = t_sum(region, p, tol=tol * region.boundary_bonds)
        return num.scaled(1.0 / region.boundary_bonds)
    sites = _region_sites(region)
    if not region_is_connected(sites):
        raise DomainError("region is not connected")
    num = region_cross_sum(sites, p, tol=tol)
    return num.scaled(1.0 / region_boundary_bonds(sites))


def epsilon_l_bound(L: int, p: ModelParams, tol: float = 1e-8) -> float:
    """Boundary-sensitivity bound for the finite-volume log-partition ratio.

    2 beta (|J| * boundary bond count + T_L) dominates twice the maximal
    cross-boundary energy, which controls how much any two boundary
    conditions can tilt log Z_Lambda.
    """
    if L < 0:
        raise DomainError("L must be nonnegative")
    box = BoxSpec(p.d, L)
    cross = t_sum(box, p, tol=tol).upper if p.kappa > 0 else 0.0
    return 2.0 * p.beta * (abs(p.J) * box.boundary_bonds + cross)
