"""
Φ-functions on ℝ^m and their spatial families on a box Ω ⊂ ℝ^n.

Values live in the extended half-line [0, ∞]. They are stored as ordinary
floats with ``math.inf`` standing for ∞; the helpers ``ext_mul`` and
``ext_sum`` apply the convex-analysis conventions (0·∞ = 0, a + ∞ = ∞).

All Φ-function objects are immutable and evaluate vectorised over the last
axis: an array of shape ``(..., m)`` maps to values of shape ``(...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma
from scipy.stats import qmc

INF = math.inf


class DimensionError(ValueError):
    """Vector dimension does not match the Φ-function."""


class EmptyIntersectionError(ValueError):
    """A ball misses the domain, or meets it in a null set."""


class OutsideDomainError(ValueError):
    """A quadrature sample lies outside the domain."""


class BracketError(RuntimeError):
    """The Luxemburg bracket search ran out of room below."""


# ---------------------------------------------------------------------------
# extended reals
# ---------------------------------------------------------------------------

def ext_mul(a, b):
    """Product on [0, ∞] with the convention 0·∞ = 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a * b
    out = np.where((a == 0) | (b == 0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def ext_sum(values) -> float:
    """Correctly rounded sum on [0, ∞]; any ∞ term gives ∞."""
    vals = np.asarray(values, dtype=float).ravel()
    if np.any(np.isinf(vals)):
        return INF
    return math.fsum(vals.tolist())


ATOL = 1e-14


def exceeds(lhs, rhs, tol: float = 1e-9, atol: float = ATOL):
    """Elementwise violation test for ``lhs ≤ rhs`` on [0, ∞].

    A violation means lhs > rhs + tol·|rhs| + atol; an infinite right-hand
    side is never violated. The absolute floor is tiny on purpose so that
    a positive left side against an exact zero still counts.
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(invalid="ignore"):
        bound = rhs + tol * np.abs(rhs) + atol
        out = np.where(np.isinf(rhs), False, lhs > bound)
    return out[()] if out.ndim == 0 else out


def format_ext(value: float) -> str:
    """Text form used in every report; ∞ is written ``inf``."""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def parse_ext(text: str) -> float:
    text = text.strip()
    if text == "inf":
        return INF
    return float(text)


# ---------------------------------------------------------------------------
# Φ-functions independent of x
# ---------------------------------------------------------------------------

def _as_vectors(xi, dim: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if xi.shape[-1] != dim:
        raise DimensionError(f"expected vectors of dimension {dim}, got shape {xi.shape}")
    return xi


class PhiFunction:
    """Base class for x-independent Φ-functions ℝ^m → [0, ∞].

    Subclasses implement ``_values`` on arrays of shape ``(..., m)``.
    ``convex`` tells whether the family is convex by construction.
    """

    dim: int
    convex: bool = True

    def _values(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values(self, xi) -> np.ndarray:
        xi = _as_vectors(xi, self.dim)
        return np.asarray(self._values(xi), dtype=float)

    def __call__(self, xi):
        out = self.values(xi)
        return float(out) if out.ndim == 0 else out


def evaluate(phi: PhiFunction, xi):
    """Evaluate ``phi`` at one vector (returns a float) or a batch."""
    return phi(xi)


@dataclass(frozen=True)
class PowerNorm(PhiFunction):
    """c·|ξ|^p."""

    dim: int
    p: float = 2.0
    c: float = 1.0

    def _values(self, xi):
        return self.c * np.linalg.norm(xi, axis=-1) ** self.p


@dataclass(frozen=True)
class QuadraticForm(PhiFunction):
    """Σ w_k ξ_k² with nonnegative weights (anisotropic quadratic)."""

    weights: tuple

    @property
    def dim(self):
        return len(self.weights)

    def _values(self, xi):
        return np.sum(np.asarray(self.weights) * xi ** 2, axis=-1)


@dataclass(frozen=True)
class DoublePhase(PhiFunction):
    """|ξ|^p + a·|ξ|^q."""

    dim: int
    p: float
    q: float
    a: float = 1.0

    def _values(self, xi):
        t = np.linalg.norm(xi, axis=-1)
        return t ** self.p + self.a * t ** self.q


@dataclass(frozen=True)
class DirectionalDoublePhase(PhiFunction):
    """|ξ|^p + a·|ξ_k|^q, the q-phase acting on one coordinate only."""

    dim: int
    p: float
    q: float
    a: float = 1.0
    direction: int = 0

    def _values(self, xi):
        t = np.linalg.norm(xi, axis=-1)
        return t ** self.p + self.a * np.abs(xi[..., self.direction]) ** self.q


def quasinorm(xi, r: float) -> np.ndarray:
    """(Σ |ξ_k|^r)^{1/r}; a norm for r = 1, a quasinorm for r < 1."""
    return np.sum(np.abs(xi) ** r, axis=-1) ** (1.0 / r)


@dataclass(frozen=True)
class LinftyIndicator(PhiFunction):
    """φ_∞(‖ξ‖_r): 0 on the closed unit quasinorm ball, ∞ outside.

    Convex only for r = 1. A relative slack of 1e-12 on the boundary keeps
    points that are on the sphere in exact arithmetic inside it.
    """

    dim: int
    r: float = 1.0
    boundary_slack: float = 1e-12

    @property
    def convex(self):
        return self.r >= 1.0

    def _values(self, xi):
        inside = quasinorm(xi, self.r) <= 1.0 + self.boundary_slack
        return np.where(inside, 0.0, INF)


@dataclass(frozen=True)
class MinOf(PhiFunction):
    """Pointwise minimum of a list of Φ-functions."""

    parts: tuple
    convex: bool = False

    def __post_init__(self):
        dims = {p.dim for p in self.parts}
        if len(dims) != 1:
            raise DimensionError(f"components have mixed dimensions {sorted(dims)}")

    @property
    def dim(self):
        return self.parts[0].dim

    def _values(self, xi):
        return np.min([p.values(xi) for p in self.parts], axis=0)


@dataclass(frozen=True)
class FunctionPhi(PhiFunction):
    """Wrap a vectorised callable ``f(xi) -> values``."""

    dim: int
    func: Callable = field(compare=False)
    convex: bool = False

    def _values(self, xi):
        return np.broadcast_to(self.func(xi), xi.shape[:-1])


class Tabulated(PhiFunction):
    """Φ-function given by values on a product grid containing 0.

    Inside the table box the function is the multilinear interpolant; a cell
    with an ∞ vertex evaluates to ∞ wherever that vertex has positive weight.
    Outside the box the value is extended radially, Φ(ξ) = Φ(tξ)/t with tξ
    on the box boundary, which keeps t ↦ Φ(tξ)/t nondecreasing.
    """

    convex = False

    def __init__(self, axes: Sequence[Sequence[float]], values):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.table = np.asarray(values, dtype=float)
        self.dim = len(self.axes)
        if self.table.shape != tuple(len(a) for a in self.axes):
            raise ValueError("table shape does not match the axes")
        for a in self.axes:
            if np.any(np.diff(a) <= 0):
                raise ValueError("table axes must be strictly increasing")
            if not a[0] <= 0.0 <= a[-1]:
                raise ValueError("table box must contain the origin")
        self.lower = np.array([a[0] for a in self.axes])
        self.upper = np.array([a[-1] for a in self.axes])
        finite = np.where(np.isinf(self.table), 0.0, self.table)
        self._finite = RegularGridInterpolator(self.axes, finite)
        self._poison = RegularGridInterpolator(self.axes, np.isinf(self.table).astype(float))

    def __repr__(self):
        return f"Tabulated(shape={self.table.shape})"

    def _inside(self, pts):
        vals = self._finite(pts)
        return np.where(self._poison(pts) > 0.0, INF, vals)

    def _values(self, xi):
        flat = xi.reshape(-1, self.dim)
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(flat > self.upper, self.upper / flat, 1.0)
            lo = np.where(flat < self.lower, self.lower / flat, 1.0)
        t = np.minimum(np.min(up, axis=1), np.min(lo, axis=1))
        t = np.clip(t, 0.0, 1.0)
        pts = np.clip(flat * t[:, None], self.lower, self.upper)
        vals = self._inside(pts)
        out = np.where(t < 1.0, vals / np.where(t > 0, t, 1.0), vals)
        return out.reshape(xi.shape[:-1])


# ---------------------------------------------------------------------------
# domain, balls, sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower, upper] ⊂ ℝ^n."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("box corners differ in dimension")
        if any(a >= b for a, b in zip(self.lower, self.upper)):
            raise ValueError("box must have positive side lengths")

    @classmethod
    def cube(cls, n: int, lo: float = 0.0, hi: float = 1.0) -> "Box":
        return cls((lo,) * n, (hi,) * n)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower) - tol
        hi = np.asarray(self.upper) + tol
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def project(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return d <= self.radius * (1 + 1e-12)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


@lru_cache(maxsize=8)
def _halton_ball(n: int, size: int = 8192) -> np.ndarray:
    # unscrambled Halton is deterministic; index 0 is the centre, dropped
    pts = qmc.Halton(d=n, scramble=False).random(size + 1)[1:]
    pts = 2.0 * pts - 1.0
    pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=8)
def _sobol_cube(n: int, log2size: int = 14) -> np.ndarray:
    pts = qmc.Sobol(d=n, scramble=False).random_base2(log2size)
    pts = (pts + 0.5 / 2 ** log2size) * 2.0 - 1.0
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True)
class Sampler:
    """Deterministic low-discrepancy sample of B ∩ Ω.

    ``points_per_dim * n`` Halton points of the ball that fall in Ω, plus the
    centre (or its projection onto Ω when that stays in the ball).
    """

    points_per_dim: int = 64
    include_center: bool = True
    pattern: str = "halton"

    def sample(self, ball: Ball, domain: Box) -> np.ndarray:
        n = ball.dim
        if n != domain.dim:
            raise DimensionError("ball and domain dimensions differ")
        count = self.points_per_dim * n
        center = np.asarray(ball.center, dtype=float)
        pts = center + ball.radius * _halton_ball(n)
        pts = pts[domain.contains(pts)][:count]
        extra = []
        if self.include_center:
            c = domain.project(center)
            if ball.contains(c):
                extra.append(c)
        if extra:
            pts = np.vstack([np.array(extra), pts])
        if len(pts) == 0:
            raise EmptyIntersectionError(f"no sample of {ball} lies in the domain")
        return pts

    def record(self) -> dict:
        return {"pattern": self.pattern, "points_per_dim": self.points_per_dim,
                "include_center": self.include_center, "seed": "none (unscrambled)"}


# ---------------------------------------------------------------------------
# spatial families
# ---------------------------------------------------------------------------

class ScalarField:
    """A continuous real function on ℝ^n, vectorised over the last axis."""

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def bounds(self, domain: Box) -> tuple:
        """Range of the field over the domain, estimated on a dense sample."""
        pts = np.asarray(domain.lower) + (_sobol_cube(domain.dim, 10) + 1) / 2 * (
            np.subtract(domain.upper, domain.lower))
        v = self(pts)
        return float(np.min(v)), float(np.max(v))


@dataclass(frozen=True)
class Constant(ScalarField):
    value: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(self.value))


@dataclass(frozen=True)
class HolderBump(ScalarField):
    """scale·|x − center|^alpha: vanishes at ``center``, C^{0,alpha}."""

    scale: float
    alpha: float
    center: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * np.linalg.norm(x - np.asarray(self.center), axis=-1) ** self.alpha


@dataclass(frozen=True)
class Affine(ScalarField):
    """offset + ⟨gradient, x⟩."""

    offset: float
    gradient: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.offset + x @ np.asarray(self.gradient, dtype=float)


class SpatialPhiFunction:
    """Base class for Φ: Ω × ℝ^m → [0, ∞] on a box Ω.

    ``values(x, xi)`` broadcasts the leading axes of ``x`` (shape ``(..., n)``)
    against those of ``xi`` (shape ``(..., m)``).
    """

    domain: Box
    dim: int
    weight: ScalarField | None = None
    x_independent: bool = False

    @property
    def space_dim(self) -> int:
        return self.domain.dim

    def _values(self, x, xi):
        raise NotImplementedError

    def values(self, x, xi) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xi = _as_vectors(xi, self.dim)
        if x.shape[-1] != self.space_dim:
            raise DimensionError(f"expected points of dimension {self.space_dim}")
        return np.asarray(self._values(x, xi), dtype=float)

    def at(self, x) -> PhiFunction:
        """The Φ-function ξ ↦ Φ(x, ξ) at a fixed point."""
        x = np.asarray(x, dtype=float)
        return FunctionPhi(self.dim, lambda xi: self.values(x, xi))

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.weight is None:
            return np.ones(x.shape[:-1])
        return self.weight(x)


@dataclass(frozen=True)
class FrozenSpatial(SpatialPhiFunction):
    """An x-independent Φ-function viewed as a spatial family."""

    phi: PhiFunction
    domain: Box
    weight: ScalarField | None = None
    x_independent = True

    @property
    def dim(self):
        return self.phi.dim

    def _values(self, x, xi):
        v = self.phi.values(xi)
        return np.broadcast_to(v, np.broadcast_shapes(x.shape[:-1], v.shape))

    def at(self, x):
        return self.phi


@dataclass(frozen=True)
class VariableDoublePhase(SpatialPhiFunction):
    """|ξ|^{p(x)} + a(x)·|η|^{q(x)}.

    η = ξ in the isotropic case; with ``direction = k`` the q-phase only sees
    the coordinate ξ_k.
    """

    domain: Box
    dim: int
    p: ScalarField
    q: ScalarField
    a: ScalarField
    direction: int | None = None
    weight: ScalarField | None = None

    def _values(self, x, xi):
        t = np.linalg.norm(xi, axis=-1)
        tq = t if self.direction is None else np.abs(xi[..., self.direction])
        p, q, a = self.p(x), self.q(x), self.a(x)
        return t ** p + a * tq ** q

    def at(self, x):
        x = np.asarray(x, dtype=float)
        p, q, a = float(self.p(x)), float(self.q(x)), float(self.a(x))
        if self.direction is None:
            return DoublePhase(self.dim, p, q, a)
        return DirectionalDoublePhase(self.dim, p, q, a, self.direction)

    def exponent_ratio_max(self) -> float:
        """sup q/p over a dense sample of Ω."""
        pts = np.asarray(self.domain.lower) + (_sobol_cube(self.space_dim, 12) + 1) / 2 * (
            np.subtract(self.domain.upper, self.domain.lower))
        return float(np.max(self.q(pts) / self.p(pts)))


# ---------------------------------------------------------------------------
# Φ_B^± and measures
# ---------------------------------------------------------------------------

def ball_measure(Phi: SpatialPhiFunction, ball: Ball) -> float:
    """μ(B ∩ Ω).

    Exact Lebesgue volume when the ball sits inside Ω and μ is unweighted,
    otherwise a 2^14-point Sobol quadrature over the bounding cube.
    """
    n = ball.dim
    center = np.asarray(ball.center, dtype=float)
    dom = Phi.domain
    inside = (np.all(center - ball.radius >= np.asarray(dom.lower))
              and np.all(center + ball.radius <= np.asarray(dom.upper)))
    if inside and Phi.weight is None:
        return unit_ball_volume(n) * ball.radius ** n
    pts = center + ball.radius * _sobol_cube(n)
    keep = ball.contains(pts) & dom.contains(pts, tol=0.0)
    if not np.any(keep):
        return 0.0
    dens = np.zeros(len(pts))
    dens[keep] = Phi.density(pts[keep])
    return float((2 * ball.radius) ** n * np.mean(dens))


class SampledExtreme(PhiFunction):
    """ξ ↦ min (or max) over a finite point set of Φ(x, ξ).

    The max variant is convex whenever each Φ(x, ·) is.
    """

    _chunk = 16384

    def __init__(self, Phi: SpatialPhiFunction, points, kind: str):
        if kind not in ("inf", "sup"):
            raise ValueError("kind must be 'inf' or 'sup'")
        self.Phi = Phi
        self.points = np.asarray(points, dtype=float)
        self.kind = kind
        self.dim = Phi.dim
        self.convex = kind == "sup"
        if Phi.x_independent:
            self.points = self.points[:1]
            self.convex = self.convex or bool(getattr(Phi.at(self.points[0]), "convex", False))

    def __repr__(self):
        return f"SampledExtreme({self.kind}, {len(self.points)} points)"

    def _values(self, xi):
        flat = xi.reshape(-1, self.dim)
        reduce = np.min if self.kind == "inf" else np.max
        out = np.empty(len(flat))
        for s in range(0, len(flat), self._chunk):
            block = flat[s:s + self._chunk]
            v = self.Phi.values(self.points[:, None, :], block[None, :, :])
            out[s:s + self._chunk] = reduce(v, axis=0)
        return out.reshape(xi.shape[:-1])


def _check_ball(Phi: SpatialPhiFunction, ball: Ball):
    if ball_measure(Phi, ball) <= 0.0:
        raise EmptyIntersectionError(f"{ball} meets the domain in a null set")


def ball_extremes(Phi: SpatialPhiFunction, ball: Ball, sampler: Sampler | None = None):
    """Return (Φ_B^-, Φ_B^+) as x-independent Φ-functions on the ball sample."""
    sampler = sampler or Sampler()
    _check_ball(Phi, ball)
    pts = sampler.sample(ball, Phi.domain)
    return SampledExtreme(Phi, pts, "inf"), SampledExtreme(Phi, pts, "sup")


def phi_minus(Phi: SpatialPhiFunction, ball: Ball, xi, sampler: Sampler | None = None):
    """Sampled essential infimum of Φ(x, ξ) over x ∈ B ∩ Ω."""
    return ball_extremes(Phi, ball, sampler)[0](xi)


def phi_plus(Phi: SpatialPhiFunction, ball: Ball, xi, sampler: Sampler | None = None):
    """Sampled essential supremum of Φ(x, ξ) over x ∈ B ∩ Ω."""
    return ball_extremes(Phi, ball, sampler)[1](xi)


# ---------------------------------------------------------------------------
# probing and the strong Φ-function axioms
# ---------------------------------------------------------------------------

def sphere_directions(m: int, count: int | None = None) -> np.ndarray:
    """Unit vectors, coordinate directions first (+e_k, then −e_k).

    m = 2 uses equally spaced angles, m ≥ 3 a Fibonacci lattice. Defaults:
    2 for m = 1, 16 for m = 2, 64 for m = 3.
    """
    basis = np.vstack([np.eye(m), -np.eye(m)])
    if m == 1:
        return basis
    if count is None:
        count = 16 if m == 2 else 64
    if m == 2:
        ang = 2 * np.pi * np.arange(count) / count
        extra = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        rho = np.sqrt(1 - z ** 2)
        theta = np.pi * (1 + 5 ** 0.5) * k
        extra = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
        if m > 3:
            extra = np.hstack([extra, np.zeros((count, m - 3))])
    extra = np.round(extra, 15) + 0.0
    keep = [v for v in extra if not np.any(np.all(np.isclose(basis, v, atol=1e-12), axis=1))]
    return np.vstack([basis] + ([np.array(keep)] if keep else []))


@dataclass(frozen=True)
class ProbeSpec:
    """Directions × radial levels, with α-grid for convex-combination tests."""

    directions: int | None = None
    radii: tuple = (1.0, 0.5, 2.0, 0.25, 4.0)
    alphas: tuple = (0.5, 0.25, 0.75, 0.125, 0.875)
    tol: float = 1e-9

    def unit_vectors(self, m: int) -> np.ndarray:
        return sphere_directions(m, self.directions)

    def vectors(self, m: int) -> np.ndarray:
        u = self.unit_vectors(m)
        return np.vstack([r * u for r in self.radii])


@dataclass
class AxiomResult:
    passed: bool
    witness: dict | None = None
    detail: str = ""


@dataclass
class StrongPhiReport:
    axioms: dict

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms.values())

    def __str__(self):
        lines = []
        for name, res in self.axioms.items():
            tag = "pass" if res.passed else "FAIL"
            lines.append(f"{name}: {tag}" + (f" witness={res.witness}" if res.witness else ""))
        return "\n".join(lines)


def check_strong_phi(phi: PhiFunction, probe: ProbeSpec | None = None) -> StrongPhiReport:
    """Sampled check of the strong Φ-function axioms.

    Measurability is automatic for x-independent functions and is not
    probed. Continuity into [0, ∞] accepts a monotone escape to ∞ along a
    ray and flags only a return from ∞ to a finite value.
    """
    probe = probe or ProbeSpec()
    tol = probe.tol
    u = probe.unit_vectors(phi.dim)
    ts = 2.0 ** np.arange(-40, 41, 0.5)
    rays = phi.values(ts[None, :, None] * u[:, None, :])
    axioms = {}

    zero = float(phi.values(np.zeros(phi.dim)))
    small = rays[:, ts <= 2.0 ** -30]
    if zero != 0.0:
        axioms["limit_at_zero"] = AxiomResult(False, {"xi": [0.0] * phi.dim, "value": zero},
                                              "value at the origin is not 0")
    elif np.any(small > tol):
        k = int(np.argmax(np.max(small, axis=1)))
        axioms["limit_at_zero"] = AxiomResult(
            False, {"xi": (2.0 ** -30 * u[k]).tolist(), "value": float(small[k, -1])})
    else:
        axioms["limit_at_zero"] = AxiomResult(True)

    last = rays[:, -1]
    if np.any(last < 1.0 / tol):
        k = int(np.argmin(last))
        axioms["limit_at_infinity"] = AxiomResult(
            False, {"xi": (ts[-1] * u[k]).tolist(), "value": float(last[k])})
    else:
        axioms["limit_at_infinity"] = AxiomResult(True)

    inf = np.isinf(rays)
    back = inf[:, :-1] & ~inf[:, 1:]
    if np.any(back):
        k, j = np.argwhere(back)[0]
        axioms["continuity"] = AxiomResult(
            False, {"xi": (ts[j] * u[k]).tolist(), "next": (ts[j + 1] * u[k]).tolist()},
            "value returns from inf to a finite number along a ray")
    else:
        axioms["continuity"] = AxiomResult(True)

    pts = probe.vectors(phi.dim)
    vals = phi.values(pts)
    i, j = np.triu_indices(len(pts), k=1)
    mid = phi.values(0.5 * (pts[i] + pts[j]))
    rhs = 0.5 * vals[i] + 0.5 * vals[j]
    with np.errstate(invalid="ignore"):
        bad = mid > rhs + tol * np.maximum(1.0, np.where(np.isinf(rhs), 1.0, rhs))
    if np.any(bad):
        k = int(np.argmax(bad))
        axioms["convexity"] = AxiomResult(False, {
            "xi": pts[i[k]].tolist(), "xi2": pts[j[k]].tolist(), "alpha": 0.5,
            "lhs": float(mid[k]), "rhs": float(rhs[k])})
    else:
        axioms["convexity"] = AxiomResult(True)
    return StrongPhiReport(axioms)


# ---------------------------------------------------------------------------
# modular and Luxemburg norm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VectorField:
    """Quadrature representation of a vector field f: Ω → ℝ^m."""

    points: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if not (len(pts) == len(vals) == len(w)):
            raise ValueError("points, values and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def scaled(self, c: float) -> "VectorField":
        return VectorField(self.points, self.values * c, self.weights)

    def restrict(self, ball: Ball) -> "VectorField":
        keep = ball.contains(self.points)
        return VectorField(self.points[keep], self.values[keep], self.weights[keep])

    @classmethod
    def piecewise_constant(cls, domain: Box, cell_values) -> "VectorField":
        """Midpoint quadrature for a field constant on each cell of a product grid.

        ``cell_values`` has shape (k_1, ..., k_n, m).
        """
        cell_values = np.asarray(cell_values, dtype=float)
        n = domain.dim
        shape = cell_values.shape[:n]
        lo, hi = np.asarray(domain.lower), np.asarray(domain.upper)
        h = (hi - lo) / np.asarray(shape)
        idx = np.stack(np.meshgrid(*[np.arange(k) for k in shape], indexing="ij"), axis=-1)
        mids = lo + (idx.reshape(-1, n) + 0.5) * h
        w = np.full(len(mids), float(np.prod(h)))
        return cls(mids, cell_values.reshape(len(mids), -1), w)

    @classmethod
    def constant(cls, domain: Box, value, cells: int = 4) -> "VectorField":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        grid = np.broadcast_to(value, (cells,) * domain.dim + value.shape)
        return cls.piecewise_constant(domain, grid)

    def refine(self, domain: Box, cell_shape) -> "VectorField":
        """Split every cell of a piecewise-constant field into 2^n subcells."""
        n = domain.dim
        h = (np.subtract(domain.upper, domain.lower)) / np.asarray(cell_shape)
        offs = np.stack(np.meshgrid(*[[-0.25, 0.25]] * n, indexing="ij"), -1).reshape(-1, n)
        pts = (self.points[:, None, :] + offs[None] * h).reshape(-1, n)
        vals = np.repeat(self.values, len(offs), axis=0)
        w = np.repeat(self.weights / len(offs), len(offs))
        return VectorField(pts, vals, w)


def modular(Phi: SpatialPhiFunction, f: VectorField) -> float:
    """ϱ_Φ(f) = Σ_j w_j Φ(x_j, f(x_j))."""
    if not np.all(Phi.domain.contains(f.points)):
        raise OutsideDomainError("field sample outside the domain")
    vals = Phi.values(f.points, f.values) * Phi.density(f.points)
    return ext_sum(ext_mul(f.weights, vals))


def luxemburg_norm(Phi: SpatialPhiFunction, f: VectorField, tol: float = 1e-9,
                   cap: float = 2.0 ** 64) -> float:
    """inf{λ > 0 : ϱ_Φ(f/λ) ≤ 1} by geometric bracketing and bisection.

    The result λ* satisfies ϱ(f/(λ*(1+tol))) ≤ 1 < ϱ(f/(λ*(1−tol))).
    Returns ∞ when ϱ(f/cap) > 1; raises BracketError when ϱ(f/λ) ≤ 1 even
    at λ = 1/cap for a nonzero field.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not np.any(f.values):
        return 0.0

    def ok(lam):
        return modular(Phi, f.scaled(1.0 / lam)) <= 1.0

    lo = hi = 1.0
    if ok(1.0):
        while ok(lo):
            if lo <= 1.0 / cap:
                raise BracketError("modular stays below 1 down to the bracket cap")
            hi, lo = lo, lo / 2
    else:
        while not ok(hi):
            if hi >= cap:
                return INF
            lo, hi = hi, hi * 2
    while hi * (1 - tol) > lo:
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
