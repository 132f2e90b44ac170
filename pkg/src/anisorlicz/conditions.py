"""
Certified checks of the structural conditions on Φ-functions.

Every check scans a finite decreasing grid of contraction constants β and
reports the largest one that passes on the probe set, together with a
witness when nothing passes. Accepted β follow a suffix rule: β is accepted
only if every smaller grid value passes as well, so certificates are
monotone in β by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .envelope import (EnvelopeWindowError, GridFunction, MultiscaleEnvelope,
                       build_minorant_pair, convex_minorant_grid, product_grid,
                       radial_boundary)
from .oracle import largest_bruteforce_beta
from .phi_core import (Ball, Box, FrozenSpatial, PhiFunction, ProbeSpec, Sampler,
                       SampledExtreme, SpatialPhiFunction, VectorField, _sobol_cube,
                       ball_measure, exceeds, ext_mul, ext_sum, format_ext, modular)

DEFAULT_BETAS = tuple(0.5 ** k for k in range(20))
PROOF_BETA_AC = 1.0 / 8.0     # 1/(2C) with C = 4 for the truncated minorant
PROOF_C = 4.0

A0, INC1, AINC1, W4 = "A0", "Inc1", "aInc1", "W4"
A1, M, CHAIN, JENSEN = "A1-Psi", "M-Psi", "A1=>M-chain", "Jensen"
CONV_EQ, REDUCTION = "conv-equivalence", "A0-reduction"
INHERIT = "A0-inheritance"


class ConfigError(ValueError):
    """Invalid condition configuration."""


class PreconditionError(ValueError):
    """A check was called outside its hypotheses."""


# ---------------------------------------------------------------------------
# configuration, witnesses, certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionConfig:
    """Parameters shared by the spatial checks.

    ``psi`` is the gauge function in the eligibility constraint; ``None``
    means Ψ = Φ. ``levels`` radial levels per direction cover
    [β₀/4, 4/β₀], β₀ being the (A0) constant. ``envelope_points`` is the
    per-axis grid size of each envelope window (33 for m ≤ 2, 17 above).
    """

    K: float = 1.0
    beta_grid: tuple = DEFAULT_BETAS
    psi: SpatialPhiFunction | None = None
    balls: tuple = ()
    probe: ProbeSpec = ProbeSpec()
    tol: float = 1e-9
    sampler: Sampler = Sampler()
    levels: int = 9
    envelope_points: int | None = None
    envelope_window: float | None = None
    domain_points_log2: int = 10
    chain_grid: int = 5
    chain_beta_ac: str = "proof"
    seed: int = 0

    def __post_init__(self):
        if not (self.K > 0 and math.isfinite(self.K)):
            raise ConfigError("K must be a positive real")
        grid = tuple(float(b) for b in self.beta_grid)
        if not grid:
            raise ConfigError("beta grid is empty")
        if any(not (0 < b <= 1) for b in grid):
            raise ConfigError("beta grid must lie in (0, 1]")
        if any(b <= c for b, c in zip(grid, grid[1:])):
            raise ConfigError("beta grid must be strictly decreasing")
        if not self.tol >= 0:
            raise ConfigError("tol must be nonnegative")
        if self.levels < 1:
            raise ConfigError("levels must be at least 1")
        if self.chain_beta_ac not in ("proof", "empirical"):
            raise ConfigError("chain_beta_ac must be 'proof' or 'empirical'")
        object.__setattr__(self, "beta_grid", grid)
        object.__setattr__(self, "balls", tuple(self.balls))

    def validate_balls(self, Phi: SpatialPhiFunction) -> list:
        """Return μ(B ∩ Ω) per ball; reject balls of measure above 1."""
        out = []
        for B in self.balls:
            if B.dim != Phi.space_dim:
                raise ConfigError(f"{B} does not live in dimension {Phi.space_dim}")
            mu = ball_measure(Phi, B)
            if mu > 1.0 + 1e-12:
                raise ConfigError(f"{B} has measure {mu!r} > 1")
            if mu <= 0:
                raise ConfigError(f"{B} misses the domain")
            out.append(mu)
        return out

    def grid_points(self, m: int) -> int:
        if self.envelope_points is not None:
            return self.envelope_points
        return 33 if m <= 2 else 17


def _tup(v):
    if v is None:
        return None
    return tuple(float(t) for t in np.ravel(v))


def _fmt(v) -> str:
    if v is None:
        return "None"
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(t) for t in v) + ("," if len(v) == 1 else "") + ")"
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_ext(v)
    return str(v)


@dataclass(frozen=True)
class Witness:
    """Inputs at which a checked inequality fails, with both sides."""

    condition: str
    beta: float
    xi: tuple
    lhs: float
    rhs: float
    xi2: tuple | None = None
    alpha: float | None = None
    ball: tuple | None = None          # (center, radius)
    x_plus: tuple | None = None        # sample where the left side is attained
    x_minus: tuple | None = None       # sample where the right side is attained
    extra: tuple = ()                  # further (key, value) pairs

    def as_tuple(self) -> str:
        parts = [("B", None if self.ball is None else (self.ball[0], self.ball[1])),
                 ("xi", self.xi), ("xi2", self.xi2), ("alpha", self.alpha),
                 ("beta", self.beta), ("x_plus", self.x_plus), ("x_minus", self.x_minus),
                 ("lhs", self.lhs), ("rhs", self.rhs)] + list(self.extra)
        return "(" + ", ".join(f"{k}={_fmt(v)}" for k, v in parts) + ")"


@dataclass
class ConditionCertificate:
    """Outcome of a condition check."""

    condition: str
    passed: bool
    beta: float | None = None
    derived: dict = field(default_factory=dict)
    witness: Witness | None = None
    sampler: dict = field(default_factory=dict)
    probes: int = 0
    eligible: int | None = None
    balls: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    status: str = ""

    def __post_init__(self):
        if not self.status:
            if not self.passed:
                self.status = "fail"
            elif self.eligible == 0:
                self.status = "vacuous"
            else:
                self.status = "pass"

    @property
    def vacuous(self) -> bool:
        return self.status == "vacuous"

    def verdict_line(self) -> str:
        if self.passed:
            line = f"PASS beta={format_ext(self.beta)}"
            return line + " vacuous" if self.vacuous else line
        if self.status == "out-of-scope":
            return "OUT-OF-SCOPE"
        return f"FAIL witness={self.witness.as_tuple() if self.witness else '()'}"

    def report(self, header: dict | None = None) -> str:
        lines = [f"{k}: {_fmt(v)}" for k, v in (header or {}).items()]
        lines += [f"condition: {self.condition}",
                  f"verdict: {'PASS' if self.passed else 'FAIL'}",
                  f"status: {self.status}",
                  f"beta: {_fmt(self.beta)}",
                  f"probes: {self.probes}"]
        if self.eligible is not None:
            lines.append(f"eligible: {self.eligible}")
        if self.derived:
            lines.append("derived:")
            lines += [f"  {k}: {_fmt(v)}" for k, v in self.derived.items()]
        if self.trace:
            lines.append("trace:")
            lines += [f"  beta={format_ext(b)}: {'PASS' if ok else 'FAIL'}" for b, ok in self.trace]
        if self.balls:
            lines.append("balls:")
            for k, info in enumerate(self.balls):
                lines.append(f"  ball[{k}]:")
                lines += [f"    {key}: {_fmt(v)}" for key, v in info.items()]
        if self.witness is not None:
            lines.append("witness:")
            w = self.witness
            for key in ("condition", "ball", "xi", "xi2", "alpha", "beta", "x_plus",
                        "x_minus", "lhs", "rhs"):
                v = getattr(w, key)
                if key == "ball" and v is not None:
                    v = (v[0], v[1])
                lines.append(f"  {key}: {_fmt(v)}")
            lines += [f"  {k}: {_fmt(v)}" for k, v in w.extra]
        if self.sampler:
            lines.append("sampler:")
            lines += [f"  {k}: {_fmt(v)}" for k, v in self.sampler.items()]
        lines.append(f"machine: {self.verdict_line()}")
        return "\n".join(lines) + "\n"


def merge_certificates(certs) -> ConditionCertificate:
    """Combine per-task certificates: fail dominates, passing β is the minimum."""
    certs = list(certs)
    if not certs:
        raise ValueError("nothing to merge")
    passed = all(c.passed for c in certs)
    betas = [c.beta for c in certs if c.beta is not None]
    witness = next((c.witness for c in certs if not c.passed), None)
    eligible = None
    if any(c.eligible is not None for c in certs):
        eligible = sum(c.eligible or 0 for c in certs)
    return ConditionCertificate(
        condition=certs[0].condition, passed=passed,
        beta=min(betas) if passed and betas else None,
        derived=dict(certs[0].derived), witness=witness, sampler=dict(certs[0].sampler),
        probes=sum(c.probes for c in certs), eligible=eligible,
        balls=[b for c in certs for b in c.balls])


def _accept(passes, grid):
    """Largest β whose whole suffix of the grid passes (index or None)."""
    passes = np.asarray(passes, dtype=bool)
    bad = np.flatnonzero(~passes)
    first = 0 if len(bad) == 0 else int(bad[-1]) + 1
    return first if first < len(grid) else None


def _as_spatial(Phi) -> SpatialPhiFunction:
    if isinstance(Phi, SpatialPhiFunction):
        return Phi
    if isinstance(Phi, PhiFunction):
        return FrozenSpatial(Phi, Box.cube(1))
    raise TypeError("expected a PhiFunction or SpatialPhiFunction")


def inc_exponent(m: int) -> int:
    """Smallest i with 2^i ≥ m + 1."""
    i = 0
    while 2 ** i < m + 1:
        i += 1
    return i


# ---------------------------------------------------------------------------
# (A0)
# ---------------------------------------------------------------------------

def domain_samples(Phi: SpatialPhiFunction, cfg: ConditionConfig) -> np.ndarray:
    """Sobol points of Ω, its corners and centre, and every configured ball sample."""
    dom = Phi.domain
    lo, hi = np.asarray(dom.lower, float), np.asarray(dom.upper, float)
    n = dom.dim
    if Phi.x_independent:
        return ((lo + hi) / 2)[None]
    parts = [lo + (_sobol_cube(n, cfg.domain_points_log2) + 1) / 2 * (hi - lo),
             ((lo + hi) / 2)[None]]
    if n <= 8:
        bits = np.array(list(np.ndindex(*(2,) * n)), dtype=float)
        parts.append(lo + bits * (hi - lo))
    for B in cfg.balls:
        parts.append(cfg.sampler.sample(B, dom))
    return np.vstack(parts)


def check_A0(Phi, cfg: ConditionConfig | None = None) -> ConditionCertificate:
    """Largest grid β with Φ(x, βξ) ≤ 1 ≤ Φ(x, ξ/β) on probed unit ξ and sampled x."""
    cfg = cfg or ConditionConfig()
    Phi = _as_spatial(Phi)
    u = cfg.probe.unit_vectors(Phi.dim)
    if len(u) == 0:
        raise PreconditionError("no probe directions")
    X = domain_samples(Phi, cfg)
    grid = cfg.beta_grid
    passes, first = [], {}
    for b in grid:
        low = Phi.values(X[:, None, :], (b * u)[None])
        high = Phi.values(X[:, None, :], (u / b)[None])
        v_low = exceeds(low, 1.0, cfg.tol)
        v_high = exceeds(1.0, high, cfg.tol)
        passes.append(not (np.any(v_low) or np.any(v_high)))
        if not passes[-1]:
            if np.any(v_low):
                i, j = np.argwhere(v_low)[0]
                first[b] = Witness(A0, b, _tup(u[j]), float(low[i, j]), 1.0,
                                   x_plus=_tup(X[i]), extra=(("side", "lower"),))
            else:
                i, j = np.argwhere(v_high)[0]
                first[b] = Witness(A0, b, _tup(u[j]), 1.0, float(high[i, j]),
                                   x_minus=_tup(X[i]), extra=(("side", "upper"),))
    k = _accept(passes, grid)
    witness = None if k is not None else first[grid[-1]]
    return ConditionCertificate(
        A0, k is not None, None if k is None else grid[k], witness=witness,
        probes=len(u) * len(X), trace=list(zip(grid, passes)),
        derived={"directions": len(u), "x_samples": len(X)},
        sampler=cfg.sampler.record())


def check_A0_inheritance(Phi: SpatialPhiFunction, cfg: ConditionConfig,
                         cert_A0: ConditionCertificate | None = None) -> ConditionCertificate:
    """Re-check (A0) per ball: Φ_B^± at the constant β₀ of Φ, (Φ_B^-)^conv at β₀/2.

    The minorant enters through its upper estimate on the "≤ 1" side and
    its tangent lower bound on the "≥ 1" side, so both sides are checked
    conservatively.
    """
    cert_A0 = cert_A0 or check_A0(Phi, cfg)
    if not cert_A0.passed:
        raise PreconditionError("needs a passing (A0) certificate")
    cfg.validate_balls(Phi)
    b0, h = cert_A0.beta, cert_A0.beta / 2
    u = cfg.probe.unit_vectors(Phi.dim)
    at_b0 = replace(cfg, beta_grid=(b0,), balls=())
    margin = float(max(2, Phi.dim))
    infos, witness = [], None
    for bi, B in enumerate(cfg.balls):
        pts = cfg.sampler.sample(B, Phi.domain)
        minus, plus = SampledExtreme(Phi, pts, "inf"), SampledExtreme(Phi, pts, "sup")
        sides = {name: check_A0(f, at_b0) for name, f in (("minus", minus), ("plus", plus))}
        if minus.convex:
            low, high = minus.values(h * u), minus.values(u / h)
        else:
            env = MultiscaleEnvelope(minus, margin / h, cfg.grid_points(Phi.dim),
                                     min_radius=margin * h, margin=margin)
            low, high = env.upper(h * u), env.lower(u / h)
        v_low, v_high = exceeds(low, 1.0, cfg.tol), exceeds(1.0, high, cfg.tol)
        conv_ok = not (np.any(v_low) or np.any(v_high))
        infos.append({"center": tuple(float(t) for t in B.center), "radius": float(B.radius),
                      "minus": sides["minus"].passed, "plus": sides["plus"].passed,
                      "conv_half": conv_ok})
        if witness is None:
            for name, c in sides.items():
                if not c.passed:
                    w = c.witness
                    witness = replace(w, condition=INHERIT, ball=(infos[-1]["center"], B.radius),
                                      extra=w.extra + (("function", f"Phi_B^{name}"),))
                    break
        if witness is None and not conv_ok:
            bad = v_low if np.any(v_low) else v_high
            j = int(np.argmax(bad))
            xi, lhs, rhs = (h * u[j], low[j], 1.0) if np.any(v_low) else (u[j] / h, 1.0, high[j])
            witness = Witness(INHERIT, h, _tup(u[j]), float(lhs), float(rhs),
                              ball=(infos[-1]["center"], B.radius),
                              extra=(("function", "conv Phi_B^-"), ("evaluated_at", _tup(xi))))
    passed = witness is None
    return ConditionCertificate(
        INHERIT, passed, b0 if passed else None, witness=witness,
        probes=len(u) * len(cfg.balls), balls=infos,
        derived={"beta0": b0, "beta_envelope": h, "directions": len(u)},
        sampler=cfg.sampler.record())


# ---------------------------------------------------------------------------
# x-independent conditions
# ---------------------------------------------------------------------------

def check_inc1(phi: PhiFunction, beta: float = 1.0, probe: ProbeSpec | None = None,
               tol: float | None = None) -> ConditionCertificate:
    """Φ(βαξ) ≤ αΦ(ξ) over sampled α ∈ (0, 1] and ξ; β = 1 is (Inc)₁."""
    if not (0 < beta <= 1):
        raise PreconditionError("beta must lie in (0, 1]")
    probe = probe or ProbeSpec()
    tol = probe.tol if tol is None else tol
    zero = float(phi.values(np.zeros(phi.dim)))
    if zero != 0.0:
        raise PreconditionError(f"value at the origin is {zero!r}, not 0")
    xi = probe.vectors(phi.dim)
    vals = phi.values(xi)
    tag = INC1 if beta == 1 else AINC1
    alphas = tuple(probe.alphas) + (1.0,)
    for a in alphas:
        lhs = phi.values(beta * a * xi)
        rhs = ext_mul(a, vals)
        bad = exceeds(lhs, rhs, tol)
        if np.any(bad):
            j = int(np.argmax(bad))
            w = Witness(tag, beta, _tup(xi[j]), float(lhs[j]), float(rhs[j]), alpha=a)
            return ConditionCertificate(tag, False, witness=w, probes=len(xi) * len(alphas))
    return ConditionCertificate(tag, True, beta, probes=len(xi) * len(alphas))


def check_almost_convex(phi: PhiFunction, cfg: ConditionConfig | None = None) -> ConditionCertificate:
    """Largest grid β with Φ(β(αξ + (1−α)ξ′)) ≤ αΦ(ξ) + (1−α)Φ(ξ′) on probe pairs.

    Probe vectors are the probe radii times the sphere directions
    (coordinate directions first); pairs are scanned α first, then (ξ, ξ′)
    lexicographically, and the first violation at each β is kept.
    """
    cfg = cfg or ConditionConfig()
    xi = cfg.probe.vectors(phi.dim)
    alphas = tuple(cfg.probe.alphas)
    if len(xi) == 0 or not alphas:
        raise PreconditionError("empty probe set")
    vals = phi.values(xi)
    n = len(xi)
    i, j = np.divmod(np.arange(n * n), n)
    mixes = [a * xi[i] + (1 - a) * xi[j] for a in alphas]
    rhss = [ext_mul(a, vals[i]) + ext_mul(1 - a, vals[j]) for a in alphas]
    passes, first = [], {}
    for b in cfg.beta_grid:
        found = None
        for a, mix, rhs in zip(alphas, mixes, rhss):
            lhs = phi.values(b * mix)
            bad = exceeds(lhs, rhs, cfg.tol)
            if np.any(bad):
                k = int(np.argmax(bad))
                found = Witness(W4, b, _tup(xi[i[k]]), float(lhs[k]), float(rhs[k]),
                                xi2=_tup(xi[j[k]]), alpha=a)
                break
        passes.append(found is None)
        if found is not None:
            first[b] = found
    k = _accept(passes, cfg.beta_grid)
    cert = ConditionCertificate(
        W4, k is not None, None if k is None else cfg.beta_grid[k],
        witness=None if k is not None else first[cfg.beta_grid[-1]],
        probes=n * n * len(alphas), trace=list(zip(cfg.beta_grid, passes)))
    cert.per_beta_witness = first
    return cert


def certify_equivalence_conv(phi: PhiFunction, cert_W4: ConditionCertificate,
                             grid: GridFunction, tol: float = 1e-9) -> ConditionCertificate:
    """Φ(β′ξ) ≤ env(ξ) and env ≤ Φ on the grid, with β′ = β_ac^i and 2^i ≥ m + 1.

    The grid envelope bounds the true minorant from above, so the forward
    inequality needs no interpolation slack at grid points; only ``tol``
    is allowed.
    """
    if not cert_W4.passed or cert_W4.beta is None:
        raise PreconditionError("needs a passing almost-convexity certificate")
    m = phi.dim
    i = inc_exponent(m)
    b_ac = cert_W4.beta
    b_prime = b_ac ** i
    env = convex_minorant_grid(grid)
    lhs = phi.values(b_prime * grid.points)
    fwd = exceeds(lhs, env.values, tol)
    below = exceeds(env.values, grid.values, tol)
    derived = {"m": m, "i": i, "beta_ac": b_ac, "beta_prime": b_prime,
               "slack": 0.0, "grid_points": len(grid.values)}
    witness = None
    if np.any(fwd):
        k = int(np.argmax(fwd))
        witness = Witness(CONV_EQ, b_prime, _tup(grid.points[k]), float(lhs[k]),
                          float(env.values[k]), extra=(("direction", "forward"),))
    elif np.any(below):
        k = int(np.argmax(below))
        witness = Witness(CONV_EQ, 1.0, _tup(grid.points[k]), float(env.values[k]),
                          float(grid.values[k]), extra=(("direction", "minorant"),))
    return ConditionCertificate(CONV_EQ, witness is None, b_prime if witness is None else None,
                                derived=derived, witness=witness, probes=len(grid.values))


def equivalence_constant(phi: PhiFunction, grid: GridFunction, betas=DEFAULT_BETAS,
                         tol: float = 1e-9):
    """Largest β in ``betas`` with Φ(βξ) ≤ env(ξ) at every grid point (None if none)."""
    env = convex_minorant_grid(grid)
    for b in sorted(betas, reverse=True):
        if not np.any(exceeds(phi.values(b * grid.points), env.values, tol)):
            return b
    return None


# ---------------------------------------------------------------------------
# per-ball probing for (A1), (M), the chain and the (A0) reduction
# ---------------------------------------------------------------------------

class BallAnalysis:
    """Sampled Φ_B^±, Ψ_B^- and the probe vectors for one ball.

    Probes are the sphere directions times ``levels`` geometric radii in
    [β₀/4, 4/β₀], plus, per direction, the radius t* where Ψ_B^-(t u)
    reaches K/μ(B) and the fractions 1/4, 1/2, 3/4 of it. The (M) probes
    add 5/4 and 3/2 of t*, since the minorant constraint admits more ξ.
    """

    def __init__(self, Phi: SpatialPhiFunction, ball: Ball, cfg: ConditionConfig,
                 beta0: float = 1.0):
        self.Phi, self.ball, self.cfg = Phi, ball, cfg
        self.mu = ball_measure(Phi, ball)
        self.bound = cfg.K / self.mu
        self.points = cfg.sampler.sample(ball, Phi.domain)
        self.minus = SampledExtreme(Phi, self.points, "inf")
        self.plus = SampledExtreme(Phi, self.points, "sup")
        psi = cfg.psi
        self.same_psi = psi is None or psi is Phi
        self.psi_minus = self.minus if self.same_psi else SampledExtreme(psi, self.points, "inf")
        u = cfg.probe.unit_vectors(Phi.dim)
        self.directions = u
        levels = np.geomspace(beta0 / 4, 4 / beta0, cfg.levels)
        sat = radial_boundary(lambda q: self.psi_minus.values(q) <= self.bound, u, 1e-9)
        self.saturation = sat
        ok = np.isfinite(sat) & (sat > 0)
        a1 = [t * u for t in levels]
        a1 += [(f * sat[ok])[:, None] * u[ok] for f in (0.25, 0.5, 0.75, 1.0)]
        extra = [(f * sat[ok])[:, None] * u[ok] for f in (1.25, 1.5)]
        self.a1_probes = np.vstack(a1)
        self.m_probes = np.vstack(a1 + extra)
        self._env = {}

    # Φ_B^- and Ψ_B^- and their minorants --------------------------------
    def _envelope(self, which: str) -> MultiscaleEnvelope | None:
        if which == "psi" and self.same_psi:
            which = "phi"
        if which not in self._env:
            f = self.minus if which == "phi" else self.psi_minus
            if getattr(f, "convex", False):
                self._env[which] = None
            else:
                sizes = np.max(np.abs(self.m_probes), axis=1)
                count = self.cfg.grid_points(self.Phi.dim)
                margin = float(max(2, self.Phi.dim))
                R = self.cfg.envelope_window
                if R is None:
                    R = margin * float(np.max(sizes))
                elif float(np.max(sizes)) > R / margin * (1 + 1e-12):
                    raise EnvelopeWindowError(
                        f"envelope window {R!r} does not cover probes of sup-norm "
                        f"{float(np.max(sizes))!r} (need at least {margin!r} times that)")
                floor = margin * float(np.min(sizes[sizes > 0]))
                self._env[which] = MultiscaleEnvelope(f, R, count, min_radius=floor, margin=margin)
        return self._env[which]

    def conv_lower(self, xi, which: str = "phi") -> np.ndarray:
        """Lower estimate of (Φ_B^-)^conv (or of Ψ_B^-) at ξ, never above Φ_B^-."""
        f = self.minus if which == "phi" else self.psi_minus
        env = self._envelope(which)
        exact = f.values(xi)
        if env is None:
            return exact
        return np.minimum(env.lower(xi), exact)

    def conv_slack(self, xi, which: str = "phi") -> np.ndarray:
        env = self._envelope(which)
        if env is None:
            return np.zeros(len(np.atleast_2d(xi)))
        return env.slack(xi)

    def plus_table(self, betas, xi) -> np.ndarray:
        betas = np.asarray(betas, dtype=float)
        return self.plus.values(betas[:, None, None] * xi[None])

    def attainers(self, beta: float, xi) -> tuple:
        """Sample points where Φ_B^+(βξ) and Φ_B^-(ξ) are attained."""
        vp = self.Phi.values(self.points, beta * np.asarray(xi))
        vm = self.Phi.values(self.points, np.asarray(xi))
        return _tup(self.points[int(np.argmax(vp))]), _tup(self.points[int(np.argmin(vm))])

    def info(self) -> dict:
        c = self.ball.center
        return {"center": tuple(float(t) for t in c), "radius": float(self.ball.radius),
                "measure": self.mu, "bound": self.bound, "samples": len(self.points)}

    def ball_tuple(self):
        return (tuple(float(t) for t in self.ball.center), float(self.ball.radius))


def _beta0(Phi, cfg: ConditionConfig, beta0):
    if beta0 is not None:
        return float(beta0), "given"
    cert = check_A0(Phi, cfg)
    return (cert.beta, "A0") if cert.passed else (1.0, "A0 failed; unit scale")


def _analyses(Phi, cfg, beta0):
    cfg.validate_balls(Phi)
    if not cfg.balls:
        raise PreconditionError("ball family is empty")
    return [BallAnalysis(Phi, B, cfg, beta0) for B in cfg.balls]


def condition_instances(Phi: SpatialPhiFunction, cfg: ConditionConfig, beta0=None,
                        analyses=None) -> list:
    """Per-ball truth tables of the (A1) and (M) inequalities on the (M) probes.

    Each entry holds boolean arrays of shape (len(beta_grid), probes):
    ``a1_holds`` (ineligible or satisfied) and ``m_holds`` likewise.
    """
    if analyses is None:
        b0, _ = _beta0(Phi, cfg, beta0)
        analyses = _analyses(Phi, cfg, b0)
    out = []
    for ba in analyses:
        xi = ba.m_probes
        L = ba.plus_table(cfg.beta_grid, xi)
        a1_elig = ba.psi_minus.values(xi) <= ba.bound
        a1_ok = ~exceeds(L, ba.minus.values(xi) + 1.0, cfg.tol)
        m_elig = ba.conv_lower(xi, "psi") <= ba.bound
        m_ok = ~exceeds(L, ba.conv_lower(xi, "phi") + 1.0, cfg.tol)
        out.append({"ball": ba.ball, "probes": xi,
                    "a1_eligible": a1_elig, "m_eligible": m_elig,
                    "a1_holds": a1_ok | ~a1_elig[None], "m_holds": m_ok | ~m_elig[None]})
    return out


def _spatial_scan(tag, Phi, cfg, analyses, probes_of, eligible_of, rhs_of, sampler_note):
    grid = cfg.beta_grid
    passes = np.ones(len(grid), dtype=bool)
    first = {}
    ball_infos, total, eligible = [], 0, 0
    for bi, ba in enumerate(analyses):
        xi = probes_of(ba)
        elig = eligible_of(ba, xi)
        rhs = rhs_of(ba, xi)
        L = ba.plus_table(grid, xi)
        bad = exceeds(L, rhs[None], cfg.tol) & elig[None]
        ball_pass = ~np.any(bad, axis=1)
        k = _accept(ball_pass, grid)
        info = ba.info()
        info.update({"probes": len(xi), "eligible": int(np.sum(elig)),
                     "beta": None if k is None else grid[k]})
        ball_infos.append(info)
        total += len(xi)
        eligible += int(np.sum(elig))
        for b_idx in np.flatnonzero(~ball_pass):
            b = grid[b_idx]
            if b in first:
                continue
            p = int(np.argmax(bad[b_idx]))
            xp, xm = ba.attainers(b, xi[p])
            first[b] = Witness(tag, b, _tup(xi[p]), float(L[b_idx, p]), float(rhs[p]),
                               ball=ba.ball_tuple(), x_plus=xp, x_minus=xm,
                               extra=(("ball_index", bi), ("bound", ba.bound),
                                      ("beta0", sampler_note["beta0"])))
        passes &= ball_pass
    k = _accept(passes, grid)
    cert = ConditionCertificate(
        tag, k is not None, None if k is None else grid[k],
        witness=None if k is not None else first[grid[-1]],
        probes=total, eligible=eligible, balls=ball_infos,
        trace=list(zip(grid, passes.tolist())),
        sampler=dict(cfg.sampler.record(), **sampler_note))
    cert.per_beta_witness = first
    return cert


def check_A1(Phi: SpatialPhiFunction, cfg: ConditionConfig, beta0=None,
             analyses=None) -> ConditionCertificate:
    """Largest grid β with Φ_B^+(βξ) ≤ Φ_B^-(ξ) + 1 whenever Ψ_B^-(ξ) ≤ K/μ(B)."""
    b0, src = _beta0(Phi, cfg, beta0)
    analyses = analyses or _analyses(Phi, cfg, b0)
    cert = _spatial_scan(
        A1, Phi, cfg, analyses,
        probes_of=lambda ba: ba.a1_probes,
        eligible_of=lambda ba, xi: ba.psi_minus.values(xi) <= ba.bound,
        rhs_of=lambda ba, xi: ba.minus.values(xi) + 1.0,
        sampler_note={"beta0": b0, "beta0_source": src})
    cert.derived = {"K": cfg.K, "psi": "Phi" if cfg.psi is None else "separate"}
    return cert


def check_M(Phi: SpatialPhiFunction, cfg: ConditionConfig, beta0=None,
            analyses=None) -> ConditionCertificate:
    """Largest grid β with Φ_B^+(βξ) ≤ (Φ_B^-)^conv(ξ) + 1 whenever (Ψ_B^-)^conv(ξ) ≤ K/μ(B).

    Both minorants enter through their lower estimates (tangent bound of
    the grid envelope, capped by the function itself), so the envelope
    slack is subtracted on the right and the eligible set only grows.
    """
    b0, src = _beta0(Phi, cfg, beta0)
    analyses = analyses or _analyses(Phi, cfg, b0)
    cert = _spatial_scan(
        M, Phi, cfg, analyses,
        probes_of=lambda ba: ba.m_probes,
        eligible_of=lambda ba, xi: ba.conv_lower(xi, "psi") <= ba.bound,
        rhs_of=lambda ba, xi: ba.conv_lower(xi, "phi") + 1.0,
        sampler_note={"beta0": b0, "beta0_source": src})
    slack = max(float(np.max(ba.conv_slack(ba.m_probes))) for ba in analyses)
    cert.derived = {"K": cfg.K, "psi": "Phi" if cfg.psi is None else "separate",
                    "max_envelope_slack": slack,
                    "envelope_points": cfg.grid_points(Phi.dim)}
    if cert.eligible is not None and cert.probes:
        cert.derived["eligible_fraction"] = cert.eligible / cert.probes
    return cert


# ---------------------------------------------------------------------------
# the (A1) ⇒ (M) constant chain
# ---------------------------------------------------------------------------

def a1_implies_m_chain(Phi: SpatialPhiFunction, cert_A1: ConditionCertificate,
                       cfg: ConditionConfig, beta0=None, analyses=None) -> ConditionCertificate:
    """Turn an (A1) constant β into a certified (M) constant (K/(K+1))·β·β′.

    Per ball: s = K/μ(B) + 1, K_s = {Φ_B^+(β·) ≤ s}, N_s its gauge
    function and M_s = min{Φ_B^+(β·), N_s}; β′ = β_ac^i with 2^i ≥ m + 1.
    β_ac is the construction's 1/8 unless ``cfg.chain_beta_ac`` asks for
    the brute-force value; both are recorded. The final inequality is
    re-verified at every (M) probe.
    """
    if not (cfg.psi is None or cfg.psi is Phi):
        return ConditionCertificate(CHAIN, False, status="out-of-scope",
                                    derived={"reason": "gauge differs from Phi; open problem"})
    if not cert_A1.passed or cert_A1.beta is None:
        raise PreconditionError("needs a passing (A1) certificate")
    b0, src = _beta0(Phi, cfg, beta0)
    analyses = analyses or _analyses(Phi, cfg, b0)
    beta = cert_A1.beta
    m = Phi.dim
    i = inc_exponent(m)
    K = cfg.K
    empirical = []
    ball_infos, first, total, eligible = [], None, 0, 0
    chains = []
    for bi, ba in enumerate(analyses):
        s = K / ba.mu + 1.0
        pair = build_minorant_pair(ba.plus, s, beta, cfg.probe)
        pts, _ = product_grid(2.0 * pair.K.bounding_radius, cfg.chain_grid, m)
        b_emp = largest_bruteforce_beta(pair.Ms, pts, cfg.probe.alphas, cfg.beta_grid, cfg.tol)
        empirical.append(b_emp)
        chains.append((ba, s, pair, b_emp))
    b_emp_all = None if any(b is None for b in empirical) else min(empirical)
    if cfg.chain_beta_ac == "empirical":
        if b_emp_all is None:
            raise PreconditionError("brute force found no almost-convexity constant for M_s")
        b_ac = b_emp_all
    else:
        b_ac = PROOF_BETA_AC
    b_prime = b_ac ** i
    final = K / (K + 1) * beta * b_prime
    checks = {"s_defined": True, "final_le_beta": final <= beta,
              "beta_prime_power": b_prime == b_ac ** i,
              "i_minimal": 2 ** i >= m + 1 and 2 ** (i - 1) < m + 1}
    inter_bad = 0
    for bi, (ba, s, pair, b_emp) in enumerate(chains):
        checks["s_defined"] &= s == K / ba.mu + 1.0
        xi = ba.m_probes
        elig = ba.conv_lower(xi, "psi") <= ba.bound
        low = ba.conv_lower(xi, "phi")
        lhs = ba.plus.values(final * xi)
        rhs = low + 1.0
        bad = exceeds(lhs, rhs, cfg.tol) & elig
        # intermediate bound M_s(β′ξ) ≤ (1 + 1/K)·(Φ_B^-)^conv(ξ) + 1, informational
        inter = exceeds(pair.Ms.values(b_prime * xi), (1 + 1 / K) * low + 1.0, cfg.tol)
        inter_bad += int(np.sum(inter))
        total += len(xi)
        eligible += int(np.sum(elig))
        info = ba.info()
        info.update({"s": s, "gauge_inradius": pair.K.inradius,
                     "gauge_bounding_radius": pair.K.bounding_radius,
                     "beta_ac_empirical": b_emp, "probes": len(xi),
                     "eligible": int(np.sum(elig)), "violations": int(np.sum(bad))})
        ball_infos.append(info)
        if first is None and np.any(bad):
            p = int(np.argmax(bad))
            xp, xm = ba.attainers(final, xi[p])
            first = Witness(CHAIN, final, _tup(xi[p]), float(lhs[p]), float(rhs[p]),
                            ball=ba.ball_tuple(), x_plus=xp, x_minus=xm,
                            extra=(("ball_index", bi), ("bound", ba.bound), ("beta0", b0)))
    derived = {"K": K, "beta_A1": beta, "m": m, "i": i, "C": PROOF_C,
               "beta_ac_proof": PROOF_BETA_AC, "beta_ac_empirical": b_emp_all,
               "beta_ac_used": b_ac, "beta_prime": b_prime,
               "K_over_K_plus_1": K / (K + 1), "final": final,
               "intermediate_violations": inter_bad}
    derived.update({f"check_{k}": v for k, v in checks.items()})
    passed = first is None and all(checks.values())
    return ConditionCertificate(
        CHAIN, passed, final if passed else None, derived=derived, witness=first,
        probes=total, eligible=eligible, balls=ball_infos,
        sampler=dict(cfg.sampler.record(), beta0=b0, beta0_source=src))


# ---------------------------------------------------------------------------
# Jensen-type inequalities
# ---------------------------------------------------------------------------

def jensen_check(Phi: SpatialPhiFunction, f: VectorField, B: Ball, beta: float,
                 tol: float = 1e-9, plus_one: bool = True,
                 sampler: Sampler | None = None) -> ConditionCertificate:
    """Φ_B^+(β·avg_B f) ≤ avg_B Φ(x, f) + 1 (the +1 is dropped with ``plus_one=False``).

    Averages use the quadrature of ``f`` restricted to B, weighted by μ.
    The supremum runs over the ball sample and the quadrature nodes in B.
    """
    sampler = sampler or Sampler()
    mu = ball_measure(Phi, B)
    if mu > 1.0 + 1e-12:
        raise PreconditionError(f"ball measure {mu!r} exceeds 1")
    rho = modular(Phi, f)
    if rho > 1.0 + tol:
        raise PreconditionError(f"modular {rho!r} exceeds 1")
    fB = f.restrict(B)
    if len(fB.weights) == 0:
        raise PreconditionError("no quadrature node of the field lies in the ball")
    w = fB.weights * Phi.density(fB.points)
    total = math.fsum(w.tolist())
    avg = (w @ fB.values) / total
    rhs_avg = ext_sum(ext_mul(w, Phi.values(fB.points, fB.values))) / total
    X = np.vstack([sampler.sample(B, Phi.domain), fB.points])
    vals = Phi.values(X, beta * avg)
    lhs = float(np.max(vals))
    rhs = rhs_avg + (1.0 if plus_one else 0.0)
    ok = not bool(exceeds(lhs, rhs, tol))
    w_out = None
    if not ok:
        w_out = Witness(JENSEN, beta, _tup(avg), lhs, rhs,
                        ball=(tuple(float(t) for t in B.center), float(B.radius)),
                        x_plus=_tup(X[int(np.argmax(vals))]),
                        extra=(("plus_one", plus_one),))
    return ConditionCertificate(
        JENSEN, ok, beta if ok else None, witness=w_out, probes=1,
        derived={"average": _tup(avg), "lhs": lhs, "rhs": rhs, "modular": rho,
                 "measure": mu, "plus_one": plus_one, "nodes_in_ball": len(fB.weights)},
        sampler=sampler.record())


@dataclass(frozen=True)
class DiscreteMeasure:
    """Positive weights on finitely many atoms."""

    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(w) == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "weights", tuple(w.tolist()))


def jensen_almost_convex(phi: PhiFunction, measure: DiscreteMeasure, f, beta: float,
                         tol: float = 1e-9) -> ConditionCertificate:
    """Φ(β·avg f) ≤ avg Φ(f) for a discrete measure; ``f`` holds one vector per atom."""
    vals = f.values if isinstance(f, VectorField) else np.asarray(f, dtype=float)
    vals = vals.reshape(len(measure.weights), phi.dim)
    w = np.asarray(measure.weights)
    total = math.fsum(w.tolist())
    avg = (w @ vals) / total
    lhs = float(phi.values(beta * avg))
    rhs = ext_sum(ext_mul(w, phi.values(vals))) / total
    ok = not bool(exceeds(lhs, rhs, tol))
    w_out = None if ok else Witness(JENSEN, beta, _tup(avg), lhs, rhs)
    return ConditionCertificate(JENSEN, ok, beta if ok else None, witness=w_out, probes=1,
                                derived={"average": _tup(avg), "lhs": lhs, "rhs": rhs})


# ---------------------------------------------------------------------------
# "+1" form versus range-restricted form under (A0)
# ---------------------------------------------------------------------------

def check_azero_reduction(Phi: SpatialPhiFunction, cfg: ConditionConfig,
                          cert_A0: ConditionCertificate | None = None,
                          analyses=None) -> ConditionCertificate:
    """Check both implications between the two formulations of (M) on probes.

    With c(ξ) the lower minorant estimate, floored by (β₀|ξ| − 1)_+:
    range form R(β): Φ_B^+(βξ) ≤ c(ξ) when c(ξ) ∈ [1, K/μ(B)];
    "+1" form P(β): Φ_B^+(βξ) ≤ c(ξ) + 1 when c(ξ) ≤ K/μ(B).
    Verified: R(β) ⇒ P(min{β, β₀²/2}); P(β) ⇒ R(β/2); and wherever R(β)
    fails at ξ, P(2β) fails at the same ξ.
    """
    cert_A0 = cert_A0 or check_A0(Phi, cfg)
    if not cert_A0.passed:
        raise PreconditionError("needs a passing (A0) certificate")
    b0 = cert_A0.beta
    analyses = analyses or _analyses(Phi, cfg, b0)
    grid = np.asarray(cfg.beta_grid)
    nb = len(grid)
    R_pass = np.ones(nb, bool)
    P_pass = np.ones(nb, bool)
    rows = []
    for ba in analyses:
        xi = ba.m_probes
        floor = np.clip(b0 * np.linalg.norm(xi, axis=1) - 1.0, 0.0, None)
        c = np.maximum(ba.conv_lower(xi, "phi"), floor)
        in_range = (c >= 1.0) & (c <= ba.bound)
        below = c <= ba.bound
        scales = np.concatenate([grid, np.minimum(grid, b0 ** 2 / 2), grid / 2, np.minimum(2 * grid, 1.0)])
        L = ba.plus_table(scales, xi)
        Lg, Lp, Lh, Ld = L[:nb], L[nb:2 * nb], L[2 * nb:3 * nb], L[3 * nb:]
        r_bad = exceeds(Lg, c[None], cfg.tol) & in_range[None]
        p_bad = exceeds(Lg, c[None] + 1.0, cfg.tol) & below[None]
        p_at_adj = exceeds(Lp, c[None] + 1.0, cfg.tol) & below[None]
        r_at_half = exceeds(Lh, c[None], cfg.tol) & in_range[None]
        p_at_double = exceeds(Ld, c[None] + 1.0, cfg.tol) & below[None]
        R_pass &= ~np.any(r_bad, axis=1)
        P_pass &= ~np.any(p_bad, axis=1)
        rows.append((ba, xi, c, r_bad, p_at_adj, r_at_half, p_at_double))
    failures = []
    for k, b in enumerate(grid):
        R_ok = R_pass[k]
        P_adj_ok = not any(np.any(r[4][k]) for r in rows)
        R_half_ok = not any(np.any(r[5][k]) for r in rows)
        if R_ok and not P_adj_ok:
            failures.append(("range=>plus_one", k, 4))
        if P_pass[k] and not R_half_ok:
            failures.append(("plus_one=>range", k, 5))
        if 2 * b <= 1.0:
            for r in rows:
                lost = r[3][k] & ~r[6][k]
                if np.any(lost):
                    failures.append(("witness_propagation", k, 3))
                    break
    witness = None
    if failures:
        kind, k, col = failures[0]
        for r in rows:
            ba, xi, c = r[0], r[1], r[2]
            mask = r[col][k] if kind != "witness_propagation" else (r[3][k] & ~r[6][k])
            if np.any(mask):
                p = int(np.argmax(mask))
                b = float(grid[k])
                scale = {"range=>plus_one": min(b, b0 ** 2 / 2), "plus_one=>range": b / 2,
                         "witness_propagation": min(2 * b, 1.0)}[kind]
                lhs = float(ba.plus.values(scale * xi[p]))
                rhs = float(c[p]) + (0.0 if kind == "plus_one=>range" else 1.0)
                xp, xm = ba.attainers(scale, xi[p])
                witness = Witness(REDUCTION, scale, _tup(xi[p]), lhs, rhs,
                                  ball=ba.ball_tuple(), x_plus=xp, x_minus=xm,
                                  extra=(("implication", kind), ("from_beta", b),
                                         ("beta0", b0)))
                break
    kP = _accept(P_pass, cfg.beta_grid)
    kR = _accept(R_pass, cfg.beta_grid)
    derived = {"beta0": b0, "adjusted_constant": "min(beta, beta0^2/2)",
               "halved_constant": "beta/2",
               "beta_plus_one_form": None if kP is None else cfg.beta_grid[kP],
               "beta_range_form": None if kR is None else cfg.beta_grid[kR],
               "implication_failures": len(failures)}
    derived.update({f"range_pass[{format_ext(b)}]": bool(R_pass[k]) for k, b in enumerate(grid)})
    derived.update({f"plus_one_pass[{format_ext(b)}]": bool(P_pass[k]) for k, b in enumerate(grid)})
    return ConditionCertificate(
        REDUCTION, not failures, None if kP is None else cfg.beta_grid[kP],
        derived=derived, witness=witness,
        probes=sum(len(r[1]) for r in rows), balls=[r[0].info() for r in rows],
        trace=list(zip(cfg.beta_grid, P_pass.tolist())), sampler=cfg.sampler.record())


# ---------------------------------------------------------------------------
# witness replay
# ---------------------------------------------------------------------------

def reproduce_witness(target, witness: Witness, cfg: ConditionConfig | None = None,
                      field: VectorField | None = None) -> tuple:
    """Re-evaluate both sides of the inequality recorded in ``witness``."""
    tag, b = witness.condition, witness.beta
    xi = np.asarray(witness.xi)
    extra = dict(witness.extra)
    if tag == A0:
        Phi = _as_spatial(target)
        if extra.get("side") == "lower":
            return float(Phi.values(np.asarray(witness.x_plus), b * xi)), 1.0
        return 1.0, float(Phi.values(np.asarray(witness.x_minus), xi / b))
    if tag in (INC1, AINC1):
        return float(target.values(b * witness.alpha * xi)), float(ext_mul(witness.alpha, target.values(xi)))
    if tag == W4:
        a, xi2 = witness.alpha, np.asarray(witness.xi2)
        lhs = float(target.values(b * (a * xi + (1 - a) * xi2)))
        rhs = float(ext_mul(a, target.values(xi)) + ext_mul(1 - a, target.values(xi2)))
        return lhs, rhs
    if tag == CONV_EQ:
        raise ValueError("replay the grid check instead")
    if tag == INHERIT:
        if cfg is None:
            raise ValueError(f"{tag} witnesses need the configuration")
        Phi = _as_spatial(target)
        center, radius = witness.ball
        minus = SampledExtreme(Phi, cfg.sampler.sample(Ball(center, radius), Phi.domain), "inf")
        fn = extra["function"]
        if fn == "conv Phi_B^-":
            if minus.convex:
                low = high = minus
            else:
                margin = float(max(2, Phi.dim))
                env = MultiscaleEnvelope(minus, margin / b, cfg.grid_points(Phi.dim),
                                         min_radius=margin * b, margin=margin)
                low, high = env.upper, env.lower
            if witness.lhs == 1.0 and witness.rhs != 1.0:
                return 1.0, float(np.ravel(high((xi / b)[None]))[0])
            return float(np.ravel(low((b * xi)[None]))[0]), 1.0
        f = minus if fn == "Phi_B^minus" else SampledExtreme(
            Phi, cfg.sampler.sample(Ball(center, radius), Phi.domain), "sup")
        if extra.get("side") == "lower":
            return float(f.values(b * xi)), 1.0
        return 1.0, float(f.values(xi / b))
    Phi = _as_spatial(target)
    lhs = float(Phi.values(np.asarray(witness.x_plus), b * xi))
    if tag == A1:
        return lhs, float(Phi.values(np.asarray(witness.x_minus), xi)) + 1.0
    if tag == JENSEN:
        if field is None:
            raise ValueError("Jensen witnesses need the field")
        center, radius = witness.ball
        B = Ball(center, radius)
        cert = jensen_check(Phi, field, B, b, plus_one=extra.get("plus_one", True),
                            sampler=(cfg or ConditionConfig()).sampler)
        return cert.derived["lhs"], cert.derived["rhs"]
    if cfg is None:
        raise ValueError(f"{tag} witnesses need the configuration")
    center, radius = witness.ball
    b0 = extra["beta0"] if "beta0" in extra else _beta0(Phi, cfg, None)[0]
    ba = BallAnalysis(Phi, Ball(center, radius), cfg, b0)
    low = float(ba.conv_lower(xi[None], "phi")[0])
    if tag == REDUCTION:
        floor = max(b0 * float(np.linalg.norm(xi)) - 1.0, 0.0)
        c = max(low, floor)
        return lhs, c + (0.0 if extra.get("implication") == "plus_one=>range" else 1.0)
    return lhs, low + 1.0
