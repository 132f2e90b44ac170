"""
Command-line front end.

    anisorlicz check <condition> --config analysis.ini [--out DIR] [--seed N] [--tol X]
    anisorlicz envelope --config analysis.ini
    anisorlicz chain --config analysis.ini
    anisorlicz jensen --config analysis.ini
    anisorlicz norm --config analysis.ini

Exit codes: 0 pass, 1 fail (witness written), 2 configuration or runtime
error. Every run writes ``report.txt`` and ``verdict.txt`` to the output
directory; ``envelope`` also writes ``envelope.csv``.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import conditions as C
from .envelope import (EnvelopeError, GaugeSetError, GridFunction, convex_minorant_grid,
                       write_envelope_csv)
from .oracle import norm_dense_scan
from .phi_core import (Affine, Ball, BracketError, Box, Constant, DimensionError,
                       DirectionalDoublePhase, DoublePhase, EmptyIntersectionError,
                       FrozenSpatial, HolderBump, LinftyIndicator, MinOf, PowerNorm,
                       ProbeSpec, QuadraticForm, Sampler, VariableDoublePhase, VectorField,
                       ball_measure, format_ext, luxemburg_norm, modular)

DEFAULT_SEED = 20240101


class ConfigParseError(ValueError):
    """Configuration error with a source position."""

    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.line, self.col = line, col

    def render(self, path) -> str:
        where = str(path)
        if self.line is not None:
            where += f":{self.line}"
            if self.col is not None:
                where += f":{self.col}"
        return f"{where}: error: {self}"


# ---------------------------------------------------------------------------
# value syntax
# ---------------------------------------------------------------------------

def _floats(text: str) -> tuple:
    items = [t for t in text.replace(",", " ").split()]
    if not items:
        raise ValueError("expected a list of numbers")
    return tuple(float(t) for t in items)


def _rows(text: str) -> tuple:
    return tuple(_floats(r) for r in text.split(";") if r.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("yes", "true", "on", "1"):
        return True
    if t in ("no", "false", "off", "0"):
        return False
    raise ValueError("expected yes or no")


def _fmt_floats(v) -> str:
    return ", ".join(repr(float(t)) for t in v)


FIELD_KINDS = ("constant", "holder", "affine")


def _field(text: str) -> tuple:
    """``constant c`` | ``holder scale alpha c1,c2,..`` | ``affine offset g1,g2,..``."""
    parts = text.split()
    if not parts or parts[0] not in FIELD_KINDS:
        raise ValueError(f"field must start with one of {', '.join(FIELD_KINDS)}")
    kind = parts[0]
    if kind == "constant" and len(parts) == 2:
        return (kind, float(parts[1]))
    if kind == "holder" and len(parts) == 4:
        return (kind, float(parts[1]), float(parts[2]), _floats(parts[3]))
    if kind == "affine" and len(parts) == 3:
        return (kind, float(parts[1]), _floats(parts[2]))
    raise ValueError(f"malformed {kind} field")


def _fmt_field(spec) -> str:
    kind = spec[0]
    if kind == "constant":
        return f"constant {spec[1]!r}"
    if kind == "holder":
        return f"holder {spec[1]!r} {spec[2]!r} " + ",".join(repr(t) for t in spec[3])
    return f"affine {spec[1]!r} " + ",".join(repr(t) for t in spec[2])


def _build_field(spec):
    kind = spec[0]
    if kind == "constant":
        return Constant(spec[1])
    if kind == "holder":
        return HolderBump(spec[1], spec[2], spec[3])
    return Affine(spec[1], spec[2])


def _beta_grid(text: str) -> tuple:
    parts = text.split()
    if parts and parts[0] == "geometric":
        if len(parts) != 3:
            raise ValueError("use: geometric <ratio> <count>")
        ratio, count = float(parts[1]), int(parts[2])
        return tuple(ratio ** k for k in range(count))
    return _floats(text)


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

FAMILIES = ("power", "quadratic", "double_phase", "directional_double_phase",
            "linfty_indicator", "min_of_quadratics", "min_of_powers", "variable_double_phase")

# key -> (parser, formatter)
_F = (float, repr)
_I = (int, str)
_S = (str.strip, str)
_L = (_floats, _fmt_floats)
_R = (_rows, lambda v: "; ".join(_fmt_floats(r) for r in v))
_B = (_bool, lambda v: "yes" if v else "no")
_FIELD = (_field, _fmt_field)

PHI_KEYS = {"family": _S, "dim": _I, "p": _F, "q": _F, "a": _F, "c": _F, "r": _F,
            "direction": _I, "weights": _L, "components": _R, "exponents": _L,
            "p_field": _FIELD, "q_field": _FIELD, "a_field": _FIELD, "weight": _FIELD}

SCHEMA = {
    "run": {"seed": _I},
    "phi": PHI_KEYS,
    "psi": PHI_KEYS,
    "domain": {"lower": _L, "upper": _L},
    "conditions": {"K": _F, "beta_grid": (_beta_grid, _fmt_floats), "tol": _F,
                   "levels": _I, "directions": _I, "radii": _L, "alphas": _L,
                   "chain_grid": _I, "chain_beta_ac": _S, "envelope_points": _I,
                   "envelope_window": _F, "sample_points_per_dim": _I, "inc_beta": _F},
    "balls": {"centers": _R, "radii": _L, "generator": _S, "count": _I,
              "radius_min": _F, "radius_max": _F, "center": _L, "jmin": _I, "jmax": _I},
    "envelope": {"radius": _F, "lower": _L, "upper": _L, "points": _I, "x": _L},
    "jensen": {"fields": _I, "cells": _I, "beta": _S, "plus_one": _B},
    "norm": {"value": _L, "cells": _I, "random": _B, "tol": _F, "scan_step": _F},
}

REQUIRED = {"phi": ("family", "dim")}


@dataclass
class AnalysisConfig:
    """Typed view of an analysis file; ``sections`` maps section -> key -> value."""

    sections: dict = field(default_factory=dict)

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def to_ini(self) -> str:
        out = []
        for sec, keys in SCHEMA.items():
            if sec not in self.sections:
                continue
            out.append(f"[{sec}]")
            for key, (_, fmt) in keys.items():
                if key in self.sections[sec]:
                    out.append(f"{key} = {fmt(self.sections[sec][key])}")
            out.append("")
        return "\n".join(out)


def _locate(text: str) -> dict:
    """Map (section, key) to the (line, column) of its value."""
    where, sec = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            sec = s[1:-1].strip()
        elif sec and ("=" in raw) and not s.startswith(("#", ";")):
            key, _, rest = raw.partition("=")
            col = len(key) + 2 + (len(rest) - len(rest.lstrip()))
            where[(sec, key.strip())] = (n, col)
            where.setdefault((sec, None), (n, 1))
        if sec and (sec, None) not in where:
            where[(sec, None)] = (n, 1)
    return where


def parse_config(text: str) -> AnalysisConfig:
    """Parse and validate an analysis file; raises ConfigParseError."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError(f"expected a [section] header, got: {exc.line.strip()}",
                               exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ConfigParseError(f"cannot parse line: {exc.errors[0][1].strip()}"
                               if line else str(exc), line, 1) from None
    except configparser.Error as exc:
        raise ConfigParseError(exc.message.splitlines()[0] if hasattr(exc, "message") else str(exc),
                               getattr(exc, "lineno", None), 1) from None
    where = _locate(text)
    sections = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigParseError(f"unknown section [{sec}]", *where.get((sec, None), (None, None)))
        vals = {}
        for key, raw in cp.items(sec):
            pos = where.get((sec, key), (None, None))
            if key not in SCHEMA[sec]:
                raise ConfigParseError(f"unknown key '{key}' in [{sec}]", *pos)
            try:
                vals[key] = SCHEMA[sec][key][0](raw)
            except (ValueError, IndexError) as exc:
                raise ConfigParseError(f"bad value for '{key}': {exc}", *pos) from None
        sections[sec] = vals
    for sec, keys in REQUIRED.items():
        for key in keys:
            if key not in sections.get(sec, {}):
                raise ConfigParseError(f"missing required key '{key}' in [{sec}]",
                                       *where.get((sec, None), (None, None)))
    cfg = AnalysisConfig(sections)
    _validate(cfg, where)
    return cfg


def _validate(cfg: AnalysisConfig, where):
    for sec in ("phi", "psi"):
        if sec in cfg.sections:
            fam = cfg.get(sec, "family")
            if fam not in FAMILIES:
                raise ConfigParseError(f"unknown family '{fam}' (choose from {', '.join(FAMILIES)})",
                                       *where.get((sec, "family"), (None, None)))
    if "domain" in cfg.sections:
        lo, hi = cfg.get("domain", "lower"), cfg.get("domain", "upper")
        if lo is None or hi is None or len(lo) != len(hi):
            raise ConfigParseError("domain needs lower and upper of equal length",
                                   *where.get(("domain", None), (None, None)))
    b = cfg.sections.get("balls", {})
    if "centers" in b and len(b["centers"]) != len(b.get("radii", ())):
        raise ConfigParseError("balls: centers and radii differ in number",
                               *where.get(("balls", "radii"), (None, None)))
    if b.get("generator") not in (None, "random", "dyadic"):
        raise ConfigParseError("balls: generator must be 'random' or 'dyadic'",
                               *where.get(("balls", "generator"), (None, None)))


def load_config(path) -> AnalysisConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc.strerror}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# building objects
# ---------------------------------------------------------------------------

def _domain(cfg: AnalysisConfig) -> Box:
    if "domain" in cfg.sections:
        return Box(cfg.get("domain", "lower"), cfg.get("domain", "upper"))
    return Box.cube(1)


def build_phi(cfg: AnalysisConfig, section: str = "phi"):
    """Return (spatial Φ, x-independent φ or None)."""
    g = lambda k, d=None: cfg.get(section, k, d)
    fam, m = g("family"), g("dim")
    dom = _domain(cfg)
    weight = _build_field(g("weight")) if g("weight") else None
    if fam == "variable_double_phase":
        p = _build_field(g("p_field", ("constant", g("p", 2.0))))
        q = _build_field(g("q_field", ("constant", g("q", 3.0))))
        a = _build_field(g("a_field", ("constant", g("a", 1.0))))
        Phi = VariableDoublePhase(dom, m, p, q, a, g("direction"), weight)
        return Phi, None
    if fam == "power":
        phi = PowerNorm(m, g("p", 2.0), g("c", 1.0))
    elif fam == "quadratic":
        phi = QuadraticForm(tuple(g("weights", (1.0,) * m)))
    elif fam == "double_phase":
        phi = DoublePhase(m, g("p", 2.0), g("q", 3.0), g("a", 1.0))
    elif fam == "directional_double_phase":
        phi = DirectionalDoublePhase(m, g("p", 2.0), g("q", 3.0), g("a", 1.0), g("direction", 0))
    elif fam == "linfty_indicator":
        phi = LinftyIndicator(m, g("r", 1.0))
    elif fam == "min_of_powers":
        phi = MinOf(tuple(PowerNorm(m, e) for e in g("exponents", (1.0, 2.0))))
    else:
        comps = g("components") or tuple(tuple(1.0 if j == k else 0.0 for j in range(m))
                                         for k in range(m))
        phi = MinOf(tuple(QuadraticForm(c) for c in comps))
    if phi.dim != m:
        raise DimensionError(f"family has dimension {phi.dim}, config says {m}")
    return FrozenSpatial(phi, dom, weight), phi


def build_balls(cfg: AnalysisConfig, Phi, seed: int) -> tuple:
    b = cfg.sections.get("balls", {})
    n = Phi.space_dim
    balls = [Ball(tuple(c), r) for c, r in zip(b.get("centers", ()), b.get("radii", ()))]
    gen = b.get("generator")
    if gen == "dyadic":
        center = tuple(b.get("center", (0.0,) * n))
        balls += [Ball(center, 2.0 ** -j) for j in range(b.get("jmin", 1), b.get("jmax", 12) + 1)]
    elif gen == "random":
        rng = np.random.default_rng(seed)
        lo, hi = np.asarray(Phi.domain.lower), np.asarray(Phi.domain.upper)
        rmin, rmax = b.get("radius_min", 0.05), b.get("radius_max", 0.5)
        for _ in range(b.get("count", 10)):
            c = lo + rng.random(n) * (hi - lo)
            balls.append(Ball(tuple(float(t) for t in c), float(rmin + rng.random() * (rmax - rmin))))
    out = []
    for B in balls:
        if len(B.center) != n:
            raise ConfigParseError(f"ball {B} does not live in dimension {n}")
        while ball_measure(Phi, B) > 1.0:
            B = Ball(B.center, B.radius / 2)
        out.append(B)
    return tuple(out)


def build_condition_config(cfg: AnalysisConfig, Phi, seed: int, tol=None) -> C.ConditionConfig:
    g = lambda k, d=None: cfg.get("conditions", k, d)
    probe = ProbeSpec(directions=g("directions"),
                      radii=tuple(g("radii", ProbeSpec.radii)),
                      alphas=tuple(g("alphas", ProbeSpec.alphas)),
                      tol=tol if tol is not None else g("tol", 1e-9))
    psi = None
    if "psi" in cfg.sections:
        psi, _ = build_phi(cfg, "psi")
    try:
        return C.ConditionConfig(
            K=g("K", 1.0), beta_grid=g("beta_grid", C.DEFAULT_BETAS), psi=psi,
            balls=build_balls(cfg, Phi, seed), probe=probe,
            tol=tol if tol is not None else g("tol", 1e-9),
            sampler=Sampler(points_per_dim=g("sample_points_per_dim", 64)),
            levels=g("levels", 9), envelope_points=g("envelope_points"),
            envelope_window=g("envelope_window"), chain_grid=g("chain_grid", 5),
            chain_beta_ac=g("chain_beta_ac", "proof"), seed=seed)
    except C.ConfigError as exc:
        raise ConfigParseError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

CONDITIONS = ("A0", "inc1", "almost-convex", "equivalence", "A1", "M", "reduction",
              "inheritance")


@dataclass
class Outcome:
    code: int
    report: str
    verdict: str
    files: dict = field(default_factory=dict)


def _header(args, seed, cfg: AnalysisConfig, tol) -> dict:
    return {"command": args.command + (f" {args.condition}" if args.command == "check" else ""),
            "config": Path(args.config).name, "seed": seed,
            "family": cfg.get("phi", "family"), "dim": cfg.get("phi", "dim"),
            "tol": tol}


def _from_cert(cert, header) -> Outcome:
    return Outcome(0 if cert.passed else 1, cert.report(header), cert.verdict_line())


def _need_plain(phi, what):
    if phi is None:
        raise ConfigParseError(f"{what} needs an x-independent family")
    return phi


def cmd_check(args, cfg, seed, tol) -> Outcome:
    Phi, phi = build_phi(cfg)
    ccfg = build_condition_config(cfg, Phi, seed, tol)
    header = _header(args, seed, cfg, ccfg.tol)
    cond = args.condition
    if cond == "A0":
        return _from_cert(C.check_A0(Phi, ccfg), header)
    if cond == "inc1":
        phi = _need_plain(phi, "inc1")
        return _from_cert(C.check_inc1(phi, cfg.get("conditions", "inc_beta", 1.0),
                                       ccfg.probe, ccfg.tol), header)
    if cond == "almost-convex":
        return _from_cert(C.check_almost_convex(_need_plain(phi, "almost-convex"), ccfg), header)
    if cond == "equivalence":
        phi = _need_plain(phi, "equivalence")
        w4 = C.check_almost_convex(phi, ccfg)
        if not w4.passed:
            return _from_cert(w4, header)
        grid = GridFunction.sample(phi, cfg.get("envelope", "radius", 2.0),
                                   cfg.get("envelope", "points", 33))
        return _from_cert(C.certify_equivalence_conv(phi, w4, grid, ccfg.tol), header)
    if cond == "A1":
        return _from_cert(C.check_A1(Phi, ccfg), header)
    if cond == "M":
        return _from_cert(C.check_M(Phi, ccfg), header)
    if cond == "inheritance":
        return _from_cert(C.check_A0_inheritance(Phi, ccfg), header)
    return _from_cert(C.check_azero_reduction(Phi, ccfg), header)


def cmd_envelope(args, cfg, seed, tol) -> Outcome:
    Phi, phi = build_phi(cfg)
    if phi is None:
        x = cfg.get("envelope", "x")
        if x is None:
            raise ConfigParseError("envelope of a spatial family needs [envelope] x")
        phi = Phi.at(np.asarray(x))
    points = cfg.get("envelope", "points", 33)
    lower, upper = cfg.get("envelope", "lower"), cfg.get("envelope", "upper")
    if lower is not None and upper is not None:
        if len(lower) != phi.dim or len(upper) != phi.dim:
            raise ConfigParseError(f"[envelope] lower and upper need {phi.dim} numbers")
        g = GridFunction.sample_box(phi, lower, upper, points)
        window = f"[{_fmt_floats(lower)}] x [{_fmt_floats(upper)}]"
    elif cfg.get("envelope", "radius") is not None:
        g = GridFunction.sample(phi, cfg.get("envelope", "radius"), points)
        window = f"radius {format_ext(cfg.get('envelope', 'radius'))}"
    else:
        raise ConfigParseError("envelope needs [envelope] radius, or lower and upper")
    env = convex_minorant_grid(g)
    finite = np.isfinite(env.values)
    with np.errstate(invalid="ignore"):
        gap = np.where(finite, g.values - env.values, 0.0)
    header = _header(args, seed, cfg, tol if tol is not None else cfg.get("conditions", "tol", 1e-9))
    lines = [f"{k}: {C._fmt(v)}" for k, v in header.items()]
    lines += [f"grid_points: {len(g.values)}", f"window: {window}",
              f"finite_envelope_points: {int(np.sum(finite))}",
              f"max_envelope: {format_ext(float(np.max(env.values[finite])))}",
              f"max_gap: {format_ext(float(np.max(gap)))}",
              f"perturbation: {format_ext(env.hull.perturbation)}",
              "csv: envelope.csv"]
    verdict = f"PASS points={len(g.values)}"
    lines.append(f"machine: {verdict}")
    return Outcome(0, "\n".join(lines) + "\n", verdict, {"envelope.csv": (g, env)})


def cmd_chain(args, cfg, seed, tol) -> Outcome:
    Phi, _ = build_phi(cfg)
    if "psi" in cfg.sections:
        raise ConfigParseError("chain needs Psi = Phi; a separate gauge is out of scope")
    ccfg = build_condition_config(cfg, Phi, seed, tol)
    header = _header(args, seed, cfg, ccfg.tol)
    a0 = C.check_A0(Phi, ccfg)
    b0 = a0.beta if a0.passed else 1.0
    analyses = C._analyses(Phi, ccfg, b0)
    a1 = C.check_A1(Phi, ccfg, b0, analyses)
    if not a1.passed:
        return Outcome(1, a1.report(dict(header, stage="A1")), a1.verdict_line())
    chain = C.a1_implies_m_chain(Phi, a1, ccfg, b0, analyses)
    direct = C.check_M(Phi, ccfg, b0, analyses)
    cmp_ok = direct.passed and chain.passed and chain.beta <= direct.beta
    text = (a1.report(dict(header, stage="A1")) + "\n" + chain.report({"stage": "chain"})
            + "\n" + direct.report({"stage": "M-direct"}) + "\n"
            + "comparison:\n"
            + f"  chain_beta: {C._fmt(chain.beta)}\n"
            + f"  direct_beta: {C._fmt(direct.beta)}\n"
            + f"  chain_le_direct: {cmp_ok}\n")
    verdict = chain.verdict_line()
    text += f"machine: {verdict}\n"
    return Outcome(0 if chain.passed else 1, text, verdict)


def _random_field(Phi, ball, cells, rng):
    """Random piecewise-constant field with ϱ ≤ 1 and nodes inside ``ball``.

    When the global grid misses the ball the field is supported on the box
    around the ball (zero elsewhere, which adds nothing to the modular).
    """
    dom = Phi.domain
    n, m = dom.dim, Phi.dim
    vals = rng.normal(size=(cells,) * n + (m,)) * rng.uniform(0.1, 3.0)
    f = VectorField.piecewise_constant(dom, vals)
    if not np.any(ball.contains(f.points)):
        c = np.asarray(ball.center)
        lo = np.maximum(c - ball.radius / math.sqrt(n), dom.lower)
        hi = np.minimum(c + ball.radius / math.sqrt(n), dom.upper)
        f = VectorField.piecewise_constant(Box(tuple(lo), tuple(hi)), vals)
    return _unit_modular(Phi, f)


def _unit_modular(Phi, f):
    # shrink f until ϱ(f) ≤ 1
    if modular(Phi, f) > 1:
        lam = luxemburg_norm(Phi, f, tol=1e-6)
        f = f.scaled(1.0 / (lam * (1 + 1e-5)))
    return f


def cmd_jensen(args, cfg, seed, tol) -> Outcome:
    Phi, _ = build_phi(cfg)
    ccfg = build_condition_config(cfg, Phi, seed, tol)
    if not ccfg.balls:
        raise ConfigParseError("jensen needs at least one ball in [balls]")
    header = _header(args, seed, cfg, ccfg.tol)
    beta_spec = cfg.get("jensen", "beta", "chain")
    lines = []
    if beta_spec == "chain":
        a1 = C.check_A1(Phi, ccfg)
        if not a1.passed:
            return Outcome(1, a1.report(dict(header, stage="A1")), a1.verdict_line())
        chain = C.a1_implies_m_chain(Phi, a1, ccfg)
        if not chain.passed:
            return Outcome(1, chain.report(dict(header, stage="chain")), chain.verdict_line())
        beta = chain.beta
        lines.append(f"beta_source: chain (A1 beta {format_ext(a1.beta)})")
    else:
        try:
            beta = float(beta_spec)
        except ValueError:
            raise ConfigParseError("[jensen] beta must be 'chain' or a number") from None
        lines.append("beta_source: given")
    plus_one = cfg.get("jensen", "plus_one", True)
    rng = np.random.default_rng(seed)
    count, cells = cfg.get("jensen", "fields", 100), cfg.get("jensen", "cells", 8)
    worst, witness, checked = -math.inf, None, 0
    for k in range(count):
        B = ccfg.balls[k % len(ccfg.balls)]
        f = _random_field(Phi, B, cells, rng)
        cert = C.jensen_check(Phi, f, B, beta, ccfg.tol, plus_one, ccfg.sampler)
        checked += 1
        gap = cert.derived["lhs"] - cert.derived["rhs"]
        worst = max(worst, gap)
        if not cert.passed and witness is None:
            witness = cert
    head = [f"{k}: {C._fmt(v)}" for k, v in header.items()]
    body = head + lines + [f"condition: {C.JENSEN}", f"beta: {format_ext(beta)}",
                           f"plus_one: {plus_one}", f"fields: {checked}",
                           f"max_lhs_minus_rhs: {format_ext(worst)}",
                           f"violations: {0 if witness is None else 'yes'}"]
    if witness is None:
        verdict = f"PASS beta={format_ext(beta)}"
        code = 0
    else:
        verdict = witness.verdict_line()
        body.append(witness.report().rstrip("\n"))
        code = 1
    body.append(f"machine: {verdict}")
    return Outcome(code, "\n".join(body) + "\n", verdict)


def cmd_norm(args, cfg, seed, tol) -> Outcome:
    Phi, _ = build_phi(cfg)
    g = lambda k, d=None: cfg.get("norm", k, d)
    cells = g("cells", 4)
    if g("random", False):
        rng = np.random.default_rng(seed)
        vals = rng.normal(size=(cells,) * Phi.space_dim + (Phi.dim,))
        f = VectorField.piecewise_constant(Phi.domain, vals)
    else:
        value = g("value")
        if value is None or len(value) != Phi.dim:
            raise ConfigParseError(f"[norm] value needs {Phi.dim} numbers")
        f = VectorField.constant(Phi.domain, value, cells)
    ntol = tol if tol is not None else g("tol", 1e-9)
    lam = luxemburg_norm(Phi, f, tol=ntol)
    step = g("scan_step", 1e-3)
    if math.isfinite(lam) and lam > 0:
        grid = lam * np.exp(np.arange(-50, 51) * step)
        scan = norm_dense_scan(Phi, f, grid)
    else:
        scan = lam
    header = _header(args, seed, cfg, ntol)
    lines = [f"{k}: {C._fmt(v)}" for k, v in header.items()]
    lines += [f"modular_at_1: {format_ext(modular(Phi, f))}", f"norm: {format_ext(lam)}",
              f"dense_scan: {format_ext(scan)}", f"scan_relative_step: {format_ext(step)}"]
    verdict = f"PASS norm={format_ext(lam)}"
    lines.append(f"machine: {verdict}")
    return Outcome(0, "\n".join(lines) + "\n", verdict)


COMMANDS = {"check": cmd_check, "envelope": cmd_envelope, "chain": cmd_chain,
            "jensen": cmd_jensen, "norm": cmd_norm}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anisorlicz",
                                     description="Convex minorants and condition certificates "
                                                 "for anisotropic Phi-functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="analysis file (INI)")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="seed for random balls and fields")
        p.add_argument("--tol", type=float, default=None, help="override the check tolerance")

    pc = sub.add_parser("check", help="run one condition checker")
    pc.add_argument("condition", choices=CONDITIONS)
    common(pc)
    for name, text in (("envelope", "write the grid envelope as CSV"),
                       ("chain", "A1, the constant chain, and a direct M check"),
                       ("jensen", "Jensen-type inequality on random fields"),
                       ("norm", "Luxemburg norm of a field")):
        common(sub.add_parser(name, help=text))
    return parser


def run(argv=None) -> tuple:
    """Run the CLI; returns (exit code, stdout text, stderr text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), "", ""
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get("run", "seed", DEFAULT_SEED)
        outcome = COMMANDS[args.command](args, cfg, seed, args.tol)
    except ConfigParseError as exc:
        return 2, "", exc.render(args.config) + "\n"
    except (C.ConfigError, C.PreconditionError, EnvelopeError, GaugeSetError, BracketError,
            DimensionError, EmptyIntersectionError, ValueError) as exc:
        return 2, "", f"{args.config}: error: {type(exc).__name__}: {exc}\n"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (g, env) in outcome.files.items():
        write_envelope_csv(out / name, g, env)
    (out / "report.txt").write_text(outcome.report)
    (out / "verdict.txt").write_text(outcome.verdict + "\n")
    return outcome.code, outcome.report, ""


def main(argv=None) -> int:
    code, out, err = run(argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
