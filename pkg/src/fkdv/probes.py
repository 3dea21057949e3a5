"""Numerical probes of the auxiliary harmonic-analysis inequalities.

Each probe evaluates both sides of an inequality ``LHS <= c * RHS`` on an
ensemble of random smooth fields and reports the largest observed ratio.
No constant is asserted: the ratios are measured constants.

The random fields are continuous objects (sums of Gaussians or of smooth
bumps with random centres, widths and amplitudes) sampled on the grid, so
the same ensemble can be re-evaluated at another resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedParameterError
from .spectral import Field, Grid, apply_multiplier, combined_symbol, make_grid
from .weights import bump

KINDS = ("calderon", "leibniz", "kato_ponce", "gagliardo_nirenberg", "disjoint_support")

DEFAULT_PARAMS = {
    "calderon": {"l": 1, "m": 1, "p": 2},
    "leibniz": {"s": 0.7, "p": 2},
    "kato_ponce": {"s": 0.7, "p": 2},
    "gagliardo_nirenberg": {"alpha": 0.5, "beta": 1.5, "p": 2},
    "disjoint_support": {"m": 2, "s": 0.7, "delta": 4.0, "p": 2},
}

# (n_points, half_length); compact bumps need a finer grid than Gaussians
DEFAULT_GRID = {kind: (512, 16.0) for kind in KINDS}
DEFAULT_GRID["disjoint_support"] = (2048, 8.0)


def _norm(v: np.ndarray, grid: Grid, p) -> float:
    if p == 2:
        return float(np.sqrt(np.sum(v * v) * grid.spacing))
    if p in (np.inf, "inf"):
        return float(np.max(np.abs(v)))
    raise UnsupportedParameterError(f"probes support p in {{2, inf}}, got {p!r}")


def _op(v: np.ndarray, grid: Grid, *, order=0, s=0.0, hilb=False) -> np.ndarray:
    return apply_multiplier(Field(grid, v), combined_symbol(grid, order=order, s=s, hilbert=hilb)).values


@dataclass(frozen=True)
class SmoothSample:
    """A random smooth function given by its generating parameters."""

    kind: str  # "gauss" or "bump"
    centers: tuple
    widths: tuple
    amps: tuple

    def __call__(self, x):
        out = np.zeros_like(x, dtype=float)
        for c, w, a in zip(self.centers, self.widths, self.amps):
            if self.kind == "gauss":
                out += a * np.exp(-(((x - c) / w) ** 2))
            else:
                out += a * bump((x - c) / w)
        return out


def random_smooth(rng, *, kind="gauss", lo=-4.0, hi=4.0, terms=4, width=(0.6, 1.5)) -> SmoothSample:
    if kind == "bump":
        widths = rng.uniform(*width, size=terms)
        # keep every bump inside [lo, hi]
        centers = [rng.uniform(lo + w, hi - w) if hi - lo > 2 * w else 0.5 * (lo + hi) for w in widths]
        widths = [min(w, 0.5 * (hi - lo)) for w in widths]
    else:
        widths = rng.uniform(*width, size=terms)
        centers = rng.uniform(lo, hi, size=terms)
    amps = rng.normal(size=terms)
    return SmoothSample(kind, tuple(map(float, centers)), tuple(map(float, widths)), tuple(map(float, amps)))


@dataclass
class ProbeReport:
    kind: str
    params: dict
    measured_best_constant: float
    samples: list = field(default_factory=list)
    n_points: int = 0

    def as_record(self):
        return dict(kind="probe", inequality=self.kind, params=self.params, n_points=self.n_points,
                    measured_best_constant=self.measured_best_constant, samples=len(self.samples))


def _ratio(lhs, rhs):
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


def _sides(kind, params, grid, fs, gs):
    x = grid.x
    p = params.get("p", 2)
    if kind == "calderon":
        l, m = int(params["l"]), int(params["m"])
        f, psi = fs(x), gs(x)
        dmf = _op(f, grid, order=m)
        comm = _op(psi * dmf, grid, hilb=True) - psi * _op(dmf, grid, hilb=True)
        lhs = _norm(_op(comm, grid, order=l), grid, p)
        rhs = _norm(_op(psi, grid, order=m + l), grid, np.inf) * _norm(f, grid, p)
    elif kind == "leibniz":
        s = params["s"]
        f = fs(x)
        g = f if params.get("same", False) else gs(x)
        lhs = _norm(_op(f * g, grid, s=s), grid, p)
        rhs = (_norm(f, grid, np.inf) * _norm(_op(g, grid, s=s), grid, p)
               + _norm(g, grid, np.inf) * _norm(_op(f, grid, s=s), grid, p))
    elif kind == "kato_ponce":
        s = params["s"]
        f, g = fs(x), gs(x)
        lhs = _norm(_op(f * g, grid, s=s) - f * _op(g, grid, s=s), grid, p)
        rhs = _norm(_op(f, grid, order=1, s=s - 1), grid, np.inf) * _norm(g, grid, p)
        if s > 1:
            rhs += _norm(_op(f, grid, order=1), grid, np.inf) * _norm(_op(g, grid, s=s - 1), grid, p)
    elif kind == "gagliardo_nirenberg":
        a, b = params["alpha"], params["beta"]
        if not 0 < a < b:
            raise UnsupportedParameterError("need 0 < alpha < beta")
        theta = a / b
        f = fs(x)
        lhs = _norm(_op(f, grid, s=a), grid, p)
        rhs = _norm(f, grid, 2) ** (1 - theta) * _norm(_op(f, grid, s=b), grid, 2) ** theta
    elif kind == "disjoint_support":
        m, s = int(params["m"]), params["s"]
        f, g = fs(x), gs(x)
        lhs = _norm(g * _op(f, grid, order=m, s=s), grid, p)
        rhs = _norm(g, grid, p) * _norm(f, grid, 2)
    else:
        raise UnsupportedParameterError(f"unknown inequality {kind!r}; choose from {KINDS}")
    return lhs, rhs


def make_ensemble(kind, params, size, seed=0):
    """Pairs ``(f, g)`` of random smooth functions for the probe ``kind``."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(size):
        if kind == "disjoint_support":
            delta = params.get("delta", 4.0)
            # f left of -delta/2, g right of +delta/2, each on a unit interval
            f = random_smooth(rng, kind="bump", lo=-delta / 2 - 1, hi=-delta / 2, terms=2, width=(0.45, 0.5))
            g = random_smooth(rng, kind="bump", lo=delta / 2, hi=delta / 2 + 1, terms=2, width=(0.45, 0.5))
        else:
            f = random_smooth(rng)
            g = random_smooth(rng)
        pairs.append((f, g))
    return pairs


def inequality_probe(kind: str, params: dict | None = None, ensemble=None, *, grid: Grid | None = None,
                     size: int = 50, seed: int = 0) -> ProbeReport:
    params = dict(DEFAULT_PARAMS.get(kind, {}), **(params or {}))
    if kind not in KINDS:
        raise UnsupportedParameterError(f"unknown inequality {kind!r}; choose from {KINDS}")
    if params.get("p", 2) not in (2, np.inf, "inf"):
        raise UnsupportedParameterError(f"probes support p in {{2, inf}}, got {params['p']!r}")
    grid = grid or make_grid(*DEFAULT_GRID[kind])
    ensemble = ensemble if ensemble is not None else make_ensemble(kind, params, size, seed)
    ratios = []
    for f, g in ensemble:
        lhs, rhs = _sides(kind, params, grid, f, g)
        ratios.append(_ratio(lhs, rhs))
    best = max(ratios) if ratios else 0.0
    return ProbeReport(kind, params, float(best), ratios, grid.n_points)


def resolution_stability(kind, params=None, *, n_points=None, half_length=None, size=30, seed=0):
    """Measured constants at ``n`` and ``2n`` points on the same ensemble."""
    n_default, l_default = DEFAULT_GRID[kind]
    n_points = n_points or n_default
    half_length = half_length or l_default
    params = dict(DEFAULT_PARAMS.get(kind, {}), **(params or {}))
    ens = make_ensemble(kind, params, size, seed)
    coarse = inequality_probe(kind, params, ens, grid=make_grid(n_points, half_length))
    fine = inequality_probe(kind, params, ens, grid=make_grid(2 * n_points, half_length))
    return coarse, fine
