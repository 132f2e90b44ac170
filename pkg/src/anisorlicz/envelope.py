"""
Greatest convex minorants of sampled Φ-functions, Minkowski gauges of
level sets, and the gauge-based minorants N_s and M_s = min{φ(β·), N_s}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .phi_core import INF, PhiFunction, ProbeSpec, format_ext, sphere_directions


class EnvelopeError(ValueError):
    """No finite value to build an envelope from, or an unusable grid."""


class GaugeSetError(ValueError):
    """The level set does not contain the origin in its interior."""


class EnvelopeWindowError(EnvelopeError):
    """A query lies outside the window the envelope was built on."""


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass
class GridFunction:
    """Values of a function on a finite point set.

    ``axes`` is set for product grids and enables the one-cell slack
    estimate. ``hull`` is attached by :func:`convex_minorant_grid`.
    """

    points: np.ndarray
    values: np.ndarray
    axes: tuple | None = None
    hull: "LowerHull | None" = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.points = np.asarray(self.points, dtype=float).reshape(len(self.values), -1)
        if len(self.points) != len(self.values):
            raise EnvelopeError("points and values differ in length")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def sample(cls, phi: PhiFunction, radius: float, count: int = 33) -> "GridFunction":
        """Sample ``phi`` on the product grid [-radius, radius]^m."""
        pts, axes = product_grid(radius, count, phi.dim)
        return cls(pts, phi.values(pts), axes)

    @classmethod
    def sample_box(cls, phi: PhiFunction, lower, upper, count: int = 33) -> "GridFunction":
        pts, axes = box_grid(lower, upper, count)
        return cls(pts, phi.values(pts), axes)

    @classmethod
    def from_points(cls, phi: PhiFunction, points) -> "GridFunction":
        pts = np.asarray(points, dtype=float)
        return cls(pts, phi.values(pts))


def box_grid(lower, upper, count: int):
    """Product grid with ``count`` nodes per axis on the box [lower, upper]."""
    axes = tuple(np.linspace(a, b, count) for a, b in zip(lower, upper))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1), axes


def product_grid(radius: float, count: int, m: int, center=None):
    """Points of the product grid with ``count`` nodes per axis on [-R, R]^m.

    Returns ``(points, axes)`` with points in C order.
    """
    c = np.zeros(m) if center is None else np.asarray(center, dtype=float)
    axes = tuple(np.linspace(-radius, radius, count) + c[k] for k in range(m))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    return pts, axes


# ---------------------------------------------------------------------------
# lower hull
# ---------------------------------------------------------------------------

class LowerHull:
    """Piecewise-affine greatest convex minorant of finite epigraph samples.

    For m = 1 the lower hull comes from a monotone-chain scan and is
    evaluated by linear interpolation between hull vertices. For m ≥ 2 the
    lower facets of the qhull triangulation of the lifted points give affine
    pieces whose maximum is the envelope over the hull of the effective
    domain; outside that hull the envelope is ∞.
    """

    def __init__(self, points, values):
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        finite = np.isfinite(values)
        if not np.any(finite):
            raise EnvelopeError("all values are infinite")
        self.dim = points.shape[1]
        self.perturbation = 0.0
        pts, vals = points[finite], values[finite]
        if self.dim == 1:
            self._build_1d(pts[:, 0], vals)
        else:
            self._build_nd(pts, vals)

    # m = 1 ---------------------------------------------------------------
    def _build_1d(self, t, v):
        order = np.lexsort((v, t))
        t, v = t[order], v[order]
        keep = np.concatenate([[True], np.diff(t) > 0])  # lowest value per abscissa
        t, v = t[keep], v[keep]
        hull: list[int] = []
        for k in range(len(t)):
            while len(hull) >= 2:
                i, j = hull[-2], hull[-1]
                cross = (t[j] - t[i]) * (v[k] - v[i]) - (v[j] - v[i]) * (t[k] - t[i])
                if cross <= 0:
                    hull.pop()
                else:
                    break
            hull.append(k)
        self.vertices_t = t[hull]
        self.vertices_v = v[hull]
        self.lo, self.hi = t[0], t[-1]

    # m ≥ 2 ---------------------------------------------------------------
    def _build_nd(self, pts, vals):
        m = self.dim
        try:
            self.domain_hull = ConvexHull(pts)
        except QhullError as exc:
            raise EnvelopeError(f"effective domain is not full-dimensional: {exc}") from None
        scale_x = float(np.max(np.abs(pts))) or 1.0
        lifted_vals = vals
        try:
            hull = self._lift(pts, lifted_vals, scale_x)
        except QhullError:
            # affinely flat epigraph samples: lift with a deterministic paraboloid
            spread = float(np.ptp(vals)) or 1.0
            self.perturbation = 1e-12 * spread
            lifted_vals = vals + self.perturbation * np.sum((pts / scale_x) ** 2, axis=1)
            hull = self._lift(pts, lifted_vals, scale_x)
        lower = hull.simplices[hull.equations[:, m] < -1e-12]
        A = np.concatenate([pts[lower], np.ones((len(lower), m + 1, 1))], axis=2)
        keep = np.abs(np.linalg.det(A)) >= 1e-12 * scale_x ** m  # drop vertical facets
        if not np.any(keep):
            raise EnvelopeError("no non-vertical lower facet")
        planes = np.linalg.solve(A[keep], lifted_vals[lower[keep]][..., None])[..., 0]
        self.planes = np.unique(planes, axis=0)
        self._hull_eq = self.domain_hull.equations
        self._hull_tol = 1e-9 * scale_x

    @staticmethod
    def _lift(pts, vals, scale_x):
        spread = float(np.ptp(vals)) or 1.0
        lifted = np.column_stack([pts / scale_x, (vals - vals.min()) / spread])
        return ConvexHull(lifted, qhull_options="Qt")

    # evaluation ------------------------------------------------------------
    def in_hull(self, xi) -> np.ndarray:
        xi = np.atleast_2d(xi)
        if self.dim == 1:
            span = max(abs(self.lo), abs(self.hi), 1.0) * 1e-12
            return (xi[:, 0] >= self.lo - span) & (xi[:, 0] <= self.hi + span)
        return np.all(xi @ self._hull_eq[:, :-1].T + self._hull_eq[:, -1] <= self._hull_tol, axis=1)

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        shape = xi.shape[:-1]
        flat = xi.reshape(-1, self.dim)
        inside = self.in_hull(flat)
        out = np.full(len(flat), INF)
        if self.dim == 1:
            out[inside] = np.interp(flat[inside, 0], self.vertices_t, self.vertices_v)
        else:
            a, b = self.planes[:, :-1], self.planes[:, -1]
            idx = np.flatnonzero(inside)
            for s in range(0, len(idx), 4096):
                block = idx[s:s + 4096]
                out[block] = np.max(flat[block] @ a.T + b, axis=1)
        return out.reshape(shape)


def convex_minorant_grid(g: GridFunction) -> GridFunction:
    """Greatest convex minorant of the sampled function, at the same points.

    Output values never exceed the input values; points outside the hull of
    the finite-valued samples get ∞.
    """
    hull = LowerHull(g.points, g.values)
    env = hull(g.points)
    env = np.where(np.isfinite(g.values), np.minimum(env, g.values), env)
    return GridFunction(g.points, env, g.axes, hull)


def convex_minorant_eval(env: GridFunction, xi):
    """Evaluate a grid envelope anywhere; ∞ outside the hull of its domain."""
    if env.hull is None:
        raise EnvelopeError("grid function carries no envelope; call convex_minorant_grid first")
    out = env.hull(np.asarray(xi, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def cell_slack(env: GridFunction, xi) -> np.ndarray:
    """Spread of envelope values over the grid cell containing each ξ.

    Used as the one-cell Lipschitz slack when a lower bound on the true
    minorant is needed. Requires a product grid; ∞ where a corner is ∞ or ξ
    lies outside the grid box.
    """
    if env.axes is None:
        raise EnvelopeError("cell slack needs a product grid")
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    m = env.dim
    shape = tuple(len(a) for a in env.axes)
    vals = env.values.reshape(shape)
    idx, outside = [], np.zeros(len(xi), dtype=bool)
    for k, ax in enumerate(env.axes):
        j = np.searchsorted(ax, xi[:, k], side="right") - 1
        outside |= (xi[:, k] < ax[0] - 1e-12) | (xi[:, k] > ax[-1] + 1e-12)
        idx.append(np.clip(j, 0, len(ax) - 2))
    corners = []
    for bits in np.ndindex(*(2,) * m):
        corners.append(vals[tuple(idx[k] + bits[k] for k in range(m))])
    corners = np.array(corners)
    with np.errstate(invalid="ignore"):
        spread = np.max(corners, axis=0) - np.min(corners, axis=0)
    spread = np.where(np.isnan(spread) | outside, INF, spread)
    return spread


def tangent_lower_bound(env: GridFunction, xi) -> np.ndarray:
    """Lower bound on a convex function from its product-grid values.

    At each corner c of the cell holding ξ, every subgradient s satisfies
    D⁻_k(c) ≤ s_k ≤ D⁺_k(c) (one-sided difference quotients along the
    axes), so g(ξ) ≥ g(c) + Σ_k min(D⁻_k d_k, D⁺_k d_k) with d = ξ − c.
    The bound is the maximum over the corners; −∞ where no corner gives
    one (cells on the grid edge, infinite values).
    """
    if env.axes is None:
        raise EnvelopeError("tangent bound needs a product grid")
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    m = env.dim
    shape = tuple(len(a) for a in env.axes)
    vals = env.values.reshape(shape)
    pad = np.pad(vals, 1, constant_values=np.nan)
    idx, outside = [], np.zeros(len(xi), dtype=bool)
    for k, ax in enumerate(env.axes):
        j = np.searchsorted(ax, xi[:, k], side="right") - 1
        outside |= (xi[:, k] < ax[0]) | (xi[:, k] > ax[-1])
        idx.append(np.clip(j, 0, len(ax) - 2))
    best = np.full(len(xi), -INF)
    with np.errstate(invalid="ignore", divide="ignore"):
        for bits in np.ndindex(*(2,) * m):
            c = [idx[k] + bits[k] for k in range(m)]
            pc = tuple(ci + 1 for ci in c)
            g = pad[pc]
            bound = g.copy()
            for k, ax in enumerate(env.axes):
                d = xi[:, k] - ax[c[k]]
                prev = list(pc); prev[k] = pc[k] - 1
                nxt = list(pc); nxt[k] = pc[k] + 1
                hm = ax[c[k]] - ax[np.maximum(c[k] - 1, 0)]
                hp = ax[np.minimum(c[k] + 1, len(ax) - 1)] - ax[c[k]]
                dm = (g - pad[tuple(prev)]) / hm
                dp = (pad[tuple(nxt)] - g) / hp
                # missing neighbours: no information on that side
                dm = np.where(np.isnan(dm), -INF, dm)
                dp = np.where(np.isnan(dp), INF, dp)
                term = np.minimum(dm * d, dp * d)
                bound = bound + np.where(d == 0, 0.0, term)
            bound = np.where(np.isfinite(g) & ~np.isnan(bound), bound, -INF)
            best = np.maximum(best, bound)
    return np.where(outside, -INF, best)


class MultiscaleEnvelope:
    """Grid envelopes of one Φ-function on nested windows.

    Windows are [-R_j, R_j]^m with R_j = R·2^{-j}; a query ξ is served by
    the smallest window with |ξ|_∞ ≤ R_j / margin, so it sits in the
    central part of a grid whose spacing is proportional to |ξ|.
    ``upper`` is the interpolated envelope, ``lower`` the tangent bound
    (clipped below by 0), and ``slack`` their difference.
    """

    def __init__(self, phi: PhiFunction, radius: float, count: int = 33,
                 min_radius: float | None = None, margin: float | None = None):
        if not radius > 0:
            raise EnvelopeWindowError("window radius must be positive")
        self.phi, self.count = phi, count
        self.margin = float(max(2, phi.dim)) if margin is None else float(margin)
        floor = radius if min_radius is None else max(min(min_radius, radius), radius * 2.0 ** -40)
        self.radii = []
        r = float(radius)
        while True:
            self.radii.append(r)
            if r / 2 < floor:
                break
            r /= 2
        self.envs = [convex_minorant_grid(GridFunction.sample(phi, R, count)) for R in self.radii]

    def window(self, xi) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        size = np.max(np.abs(xi), axis=1)
        if np.any(size > self.radii[0] * (1 + 1e-12)):
            raise EnvelopeWindowError(
                f"query of sup-norm {float(np.max(size))!r} outside the window radius {self.radii[0]!r}")
        j = np.zeros(len(xi), dtype=int)
        for k, R in enumerate(self.radii):
            j = np.where(size <= R / self.margin, k, j)
        return j

    def _apply(self, xi, fn):
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        j = self.window(xi)
        out = np.empty(len(xi))
        for k in np.unique(j):
            sel = j == k
            out[sel] = fn(self.envs[k], xi[sel])
        return out

    def upper(self, xi) -> np.ndarray:
        return self._apply(xi, lambda e, q: e.hull(q))

    def lower(self, xi) -> np.ndarray:
        def lo(e, q):
            b = tangent_lower_bound(e, q)
            return np.clip(np.minimum(b, e.hull(q)), 0.0, None)
        return self._apply(xi, lo)

    def slack(self, xi) -> np.ndarray:
        up, lo = self.upper(xi), self.lower(xi)
        with np.errstate(invalid="ignore"):
            return np.where(np.isinf(up), 0.0, up - lo)


def write_envelope_csv(path, g: GridFunction, env: GridFunction) -> None:
    """Rows of (coordinates, value, envelope); ∞ is written ``inf``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"xi{k + 1}" for k in range(g.dim)] + ["value", "envelope"])
        for p, v, e in zip(g.points, g.values, env.values):
            writer.writerow([format_ext(c) for c in p] + [format_ext(v), format_ext(e)])


# ---------------------------------------------------------------------------
# Minkowski gauge and the N_s / M_s construction
# ---------------------------------------------------------------------------

def radial_boundary(member, u: np.ndarray, tol: float, cap: float = 2.0 ** 64):
    """sup{t > 0 : t·u ∈ K} for each row of ``u``, by geometric bisection.

    Membership must be monotone along rays (K star-shaped about 0).
    Returns 0 where even t = 1/cap is outside and ∞ where t = cap is inside.
    """
    k = len(u)
    lo = np.zeros(k)
    hi = np.full(k, INF)
    t = np.ones(k)
    for _ in range(140):
        todo = (lo == 0) | np.isinf(hi)
        if not np.any(todo):
            break
        inside = member(t[:, None] * u)
        lo = np.where(todo & inside, t, lo)
        hi = np.where(todo & ~inside, t, hi)
        t = np.where(np.isinf(hi), t * 2.0, np.where(lo == 0, t / 2.0, t))
        if np.any(todo & ((t > cap) | (t < 1.0 / cap))):
            break
    never, always = lo == 0, np.isinf(hi)
    bad = never | always
    lo = np.where(bad, 1.0, lo)
    hi = np.where(bad, 2.0, hi)
    for _ in range(200):
        if np.all(hi <= lo * (1.0 + tol)):
            break
        mid = np.sqrt(lo * hi)
        inside = member(mid[:, None] * u)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    out = lo.copy()
    out[never] = 0.0
    out[always] = INF
    return out


class GaugeSet:
    """Level set K = {ξ : φ(βξ) ≤ s} of a Φ-function.

    Construction checks that K contains a ball about 0 and records
    ``inradius`` and ``bounding_radius`` estimates from the probe
    directions.
    """

    def __init__(self, phi: PhiFunction, s: float, beta: float = 1.0,
                 probe: ProbeSpec | None = None, tol: float = 1e-12):
        if not (0 < beta <= 1):
            raise ValueError("beta must lie in (0, 1]")
        self.phi, self.s, self.beta, self.tol = phi, float(s), float(beta), tol
        self.dim = phi.dim
        u = sphere_directions(self.dim, None if probe is None else probe.directions)
        if not self.contains(np.zeros(self.dim)):
            raise GaugeSetError("level set misses the origin")
        radii = radial_boundary(self.contains, u, 1e-6)
        if not np.all(np.isfinite(radii) & (radii > 0)):
            raise GaugeSetError("level set is unbounded or degenerate along a probe direction")
        self.inradius = float(np.min(radii))
        self.bounding_radius = float(np.max(radii))

    def contains(self, xi) -> np.ndarray:
        return self.phi.values(self.beta * np.asarray(xi, dtype=float)) <= self.s

    def boundary_radius(self, u) -> np.ndarray:
        return radial_boundary(self.contains, np.atleast_2d(u), self.tol)


def unit_ball_gauge_set(m: int, radius: float = 1.0) -> GaugeSet:
    """Closed Euclidean ball as a gauge set."""
    from .phi_core import PowerNorm
    return GaugeSet(PowerNorm(m, p=2.0), radius ** 2)


def minkowski_gauge(K: GaugeSet, xi, tol: float | None = None):
    """inf{λ > 0 : ξ/λ ∈ K}, with relative error at most ``tol``."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    flat = xi.reshape(-1, K.dim)
    norm = np.linalg.norm(flat, axis=1)
    out = np.zeros(len(flat))
    nz = norm > 0
    if np.any(nz):
        u = flat[nz] / norm[nz, None]
        r = radial_boundary(K.contains, u, K.tol if tol is None else tol)
        with np.errstate(divide="ignore"):
            out[nz] = norm[nz] / r
    out = out.reshape(xi.shape[:-1])
    return float(out) if single else out


class GaugeFunction(PhiFunction):
    """N_s(ξ) = s·max{1, ‖ξ‖_K}; convex with linear growth."""

    convex = True

    def __init__(self, K: GaugeSet):
        self.K = K
        self.dim = K.dim

    def __repr__(self):
        return f"GaugeFunction(s={self.K.s}, beta={self.K.beta})"

    def _values(self, xi):
        return self.K.s * np.maximum(1.0, minkowski_gauge(self.K, xi))


class TruncatedMinorant(PhiFunction):
    """M_s(ξ) = min{φ(βξ), N_s(ξ)}."""

    convex = False

    def __init__(self, K: GaugeSet, Ns: GaugeFunction):
        self.K, self.Ns = K, Ns
        self.dim = K.dim

    def __repr__(self):
        return f"TruncatedMinorant(s={self.K.s}, beta={self.K.beta})"

    def _values(self, xi):
        inner = self.K.phi.values(self.K.beta * xi)
        return np.minimum(inner, self.Ns.values(xi))


@dataclass(frozen=True)
class MinorantPair:
    Ns: GaugeFunction
    Ms: TruncatedMinorant
    s: float
    K: GaugeSet


def build_minorant_pair(phi: PhiFunction, s: float, beta: float = 1.0,
                        probe: ProbeSpec | None = None) -> MinorantPair:
    """N_s and M_s for K_s = {ξ : φ(βξ) ≤ s}; ``phi`` must be convex."""
    if not math.isfinite(s) or s < 1:
        raise ValueError("s must be finite and at least 1")
    if not getattr(phi, "convex", False):
        raise ValueError("the minorant construction needs a convex Φ-function")
    K = GaugeSet(phi, s, beta, probe)
    Ns = GaugeFunction(K)
    return MinorantPair(Ns, TruncatedMinorant(K, Ns), float(s), K)
