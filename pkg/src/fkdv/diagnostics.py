"""Moving-window energies, local smoothing accumulators and the alpha-ladder.

A window is anchored at ``x0`` and travels left with speed ``v``: its
weight at time ``t`` is ``chi_{eps,b}(x - x0 + v t)``, supported in
``x >= x0 + eps - v t``.  Energies are ``int (d^j D^s u)^2 w^2`` and the
smoothing accumulators integrate ``int (D^sigma u)^2 (chi^2)'`` in time.

Propagation experiments start from data that is smooth on the right of
``x0`` and carries an ``|x - x_s|^gamma`` corner at ``x_s < x0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    BlowUpError,
    ConfigurationError,
    ExperimentFailedError,
    IncompatibleGridError,
    SequencingError,
)
from .solver import SolverConfig, SolverState, run
from .spectral import Field, Grid, apply_multiplier, combined_symbol
from .weights import Chi, WeightParams, bump_cdf, mollify, psi_function

log = logging.getLogger(__name__)


def s_alpha(alpha: float) -> float:
    """Regularity threshold for the propagation statement, ``2 - alpha/2``."""
    return 2.0 - alpha / 2.0


def s_wellposed(alpha: float) -> float:
    """Local well-posedness threshold ``3/2 - 3 alpha / 8``."""
    return 1.5 - 3.0 * alpha / 8.0


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class DiagnosticWindow:
    x0: float
    epsilon: float
    b: float
    tau: float
    v: float = 0.0

    def __post_init__(self):
        rules = window_violations(self.epsilon, self.b, self.tau, self.v)
        if rules:
            raise ConfigurationError("invalid diagnostic window: " + "; ".join(rules), rules)

    @property
    def params(self) -> WeightParams:
        return WeightParams(self.epsilon, self.b)

    def shift(self, x, t):
        """Weight argument ``x - x0 + v t``."""
        return np.asarray(x, dtype=float) - self.x0 + self.v * t

    def strip(self, t):
        """Sharp strip ``[x0 + eps - v t, x0 + tau - v t]``."""
        return self.x0 + self.epsilon - self.v * t, self.x0 + self.tau - self.v * t


def window_violations(epsilon, b, tau, v):
    rules = []
    if not epsilon > 0:
        rules.append("ε > 0")
    if not tau > 4 * epsilon:
        rules.append("τ > 4ε")
    if not b >= 5 * epsilon:
        rules.append("b ≥ 5ε")
    if not v >= 0:
        rules.append("v ≥ 0")
    return rules


def chi_weight(window: DiagnosticWindow) -> Callable:
    """``w(x, t) = chi(x - x0 + v t)``."""
    c = Chi(window.params)
    return lambda x, t: c(window.shift(x, t))


def chi_squared_prime_weight(window: DiagnosticWindow) -> Callable:
    c = Chi(window.params)

    def w(x, t):
        y = window.shift(x, t)
        return 2.0 * c(y) * c(y, 1)

    return w


# ---------------------------------------------------------------------------
# ladder


@dataclass(frozen=True)
class LadderPlan:
    m: int
    alpha: float
    k: int
    case_tag: str
    step_exponents: tuple
    final_exponent: float

    @property
    def n_fractional(self) -> int:
        return len(self.step_exponents)

    @property
    def all_exponents(self) -> tuple:
        return self.step_exponents + (self.final_exponent,)

    @property
    def eq_consistent(self) -> bool:
        """Case (a) needs ``2 + alpha k >= 3 - alpha/2``; case (b) has no such check."""
        if self.case_tag == "a":
            return 2 + self.alpha * self.k >= 3 - self.alpha / 2 - 1e-14
        return True

    def energy_exponents(self):
        """``(j, s)`` of the right-window energies: ``d^m D^{alpha n/2}``, then ``d^m D^{1-alpha/2}``."""
        out = [(self.m, self.alpha * n / 2) for n in range(self.n_fractional)]
        out.append((self.m, 1.0 - self.alpha / 2))
        return out

    def smoothing_exponents(self):
        """Paired strip exponents: ``D^{m + alpha(n+1)/2}``, then ``d^{m+1}``."""
        out = [(0, self.m + self.alpha * (n + 1) / 2) for n in range(self.n_fractional)]
        out.append((self.m + 1, 0.0))
        return out

    def rows(self):
        rows = [("rung", n, e) for n, e in enumerate(self.step_exponents)]
        rows.append(("final", self.n_fractional, self.final_exponent))
        return rows


def _frac(alpha) -> Fraction:
    return Fraction(alpha).limit_denominator(10**9)


def ladder_plan(alpha: float, m: int) -> LadderPlan:
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}", ["0 < α < 1"])
    if int(m) != m or m < 2:
        raise ConfigurationError(f"m must be an integer >= 2, got {m}", ["m ≥ 2"])
    m = int(m)
    a = _frac(alpha)
    steps = math.ceil(Fraction(2) / a)
    case_tag, k = None, None
    # case (a): 2/(2k+1) <= alpha < 1/k ; case (b): 1/(k+1) <= alpha < 2/(2k+1)
    for kk in range(1, steps + 2):
        if Fraction(2, 2 * kk + 1) <= a < Fraction(1, kk):
            case_tag, k = "a", kk
            break
        if Fraction(1, kk + 1) <= a < Fraction(2, 2 * kk + 1):
            case_tag, k = "b", kk
            break
    if case_tag is None:  # pragma: no cover - the cases tile (0, 1)
        raise ConfigurationError(f"no ladder case for alpha = {alpha}")
    expected = 2 * k + 1 if case_tag == "a" else 2 * k + 2
    assert expected == steps, (alpha, k, case_tag, steps)
    rungs = tuple(float(m + a * j / 2) for j in range(steps))
    final = float(m + 1 - a / 2)
    return LadderPlan(m, float(alpha), k, case_tag, rungs, final)


# ---------------------------------------------------------------------------
# functionals


def exponential_filter(grid: Grid, edge: float, order: int = 36, strength: float = 36.0) -> np.ndarray:
    """``exp(-strength (|k| / edge)^order)``: one well inside ``edge``, ``e^-strength`` at it."""
    return np.exp(-strength * (np.abs(grid.index) / edge) ** order)


def resolved_band(grid: Grid) -> np.ndarray:
    """Smooth cutoff at the dealiasing edge ``n/3``.

    The two-thirds rule truncates the nonlinear term sharply, and the jump
    rings through high-order multipliers as slowly decaying tails far from
    any rough feature.  Diagnostics of rough runs read the field through
    this filter.
    """
    return exponential_filter(grid, grid.n_points / 3)


def band_limit(u: Field, edge: float | None = None) -> Field:
    """Smoothly remove content near ``edge`` (default: Nyquist) from a field."""
    g = u.grid
    mask = exponential_filter(g, g.n_points / 2 if edge is None else edge)
    return Field(g, np.fft.ifft(u.spectrum * mask).real)


def _derivative(u: Field, j: int, s: float, hilbert: bool = False, band=None) -> np.ndarray:
    sym = combined_symbol(u.grid, order=j, s=s, hilbert=hilbert)
    if band is None:
        return apply_multiplier(u, sym).values
    return np.fft.ifft(sym.samples * band * u.spectrum).real


def weighted_energy(u: Field, j: int, s: float, w: Callable | None = None,
                    window: DiagnosticWindow | None = None, t: float = 0.0, band=None) -> float:
    """``int (d^j D^s u)^2 w^2 dx`` by the (periodic) trapezoid rule.

    ``w`` is called as ``w(x, t)`` or is a sampled :class:`Field` on the
    same grid; ``None`` means ``w = 1``.  When only a
    window is given the weight defaults to its moving ``chi``.  ``band`` is
    an optional spectral mask applied together with the multiplier.
    """
    if j < 0 or s < 0:
        raise ConfigurationError("need j >= 0 and s >= 0")
    if w is None and window is not None:
        w = chi_weight(window)
    d = _derivative(u, j, s, band=band)
    dens = d * d
    if isinstance(w, Field):
        if w.grid != u.grid:
            raise IncompatibleGridError(f"weight grid {w.grid} differs from field grid {u.grid}")
        dens = dens * w.values * w.values
    elif w is not None:
        wv = np.asarray(w(u.grid.x, t), dtype=float)
        dens = dens * wv * wv
    return float(np.sum(dens) * u.grid.spacing)


@dataclass
class DiagnosticRecord:
    window: DiagnosticWindow
    exponent: tuple
    smoothing_exponent: tuple
    label: str = ""
    filtered: bool = False
    series: list = field(default_factory=list)
    smoothing_accum: float = 0.0
    hilbert_twin: float = 0.0
    strip_samples: list = field(default_factory=list)  # (t, strip, strip_hilbert, sharp)
    accum_series: list = field(default_factory=list)
    sharp_accum: float = 0.0

    @property
    def sup_energy(self) -> float:
        return max((e for _, e in self.series), default=0.0)

    @property
    def initial_energy(self) -> float:
        return self.series[0][1] if self.series else 0.0

    def refined_accum(self, stride: int = 2):
        """Smoothing accumulators recomputed from every ``stride``-th sample."""
        if len(self.strip_samples) < 2:
            return 0.0, 0.0
        pts = self.strip_samples[::stride]
        if pts[-1] is not self.strip_samples[-1]:
            pts = pts + [self.strip_samples[-1]]
        t = np.array([p[0] for p in pts])
        a = np.array([p[1] for p in pts])
        h = np.array([p[2] for p in pts])
        return float(np.trapezoid(a, t)), float(np.trapezoid(h, t))

    def as_record(self):
        return dict(kind="diagnostic", label=self.label, window=vars(self.window),
                    exponent=list(self.exponent), smoothing_exponent=list(self.smoothing_exponent),
                    sup_energy=self.sup_energy, initial_energy=self.initial_energy,
                    smoothing_accum=self.smoothing_accum, hilbert_twin=self.hilbert_twin,
                    sharp_strip_accum=self.sharp_accum)


def strip_integrals(u: Field, exponent, window: DiagnosticWindow, t: float, band=None):
    """``int (op u)^2 (chi^2)'``, its Hilbert twin, and the sharp-strip value."""
    j, s = exponent
    x = u.grid.x
    wp = chi_squared_prime_weight(window)(x, t)
    d = _derivative(u, j, s, band=band)
    dh = _derivative(u, j, s, hilbert=True, band=band)
    dx = u.grid.spacing
    lo, hi = window.strip(t)
    sharp = (x >= lo) & (x <= hi)
    return (float(np.sum(d * d * wp) * dx), float(np.sum(dh * dh * wp) * dx),
            float(np.sum(d[sharp] ** 2) * dx))


def smoothing_integral(record: DiagnosticRecord, u: Field, j_s_exponent=None,
                       window: DiagnosticWindow | None = None, t: float = 0.0,
                       dt_sample: float | None = None) -> DiagnosticRecord:
    """Add the sample at time ``t`` and advance the trapezoid accumulators.

    ``dt_sample`` is only used as a consistency check against the gap to
    the previous sample.
    """
    exponent = j_s_exponent if j_s_exponent is not None else record.smoothing_exponent
    window = window or record.window
    if record.strip_samples:
        t_prev = record.strip_samples[-1][0]
        if not t > t_prev:
            raise SequencingError(f"sample time {t} does not follow {t_prev}")
        if dt_sample is not None and not math.isclose(t - t_prev, dt_sample, rel_tol=1e-9, abs_tol=1e-12):
            raise SequencingError(f"sample gap {t - t_prev} differs from dt_sample = {dt_sample}")
    band = resolved_band(u.grid) if record.filtered else None
    a, h, sharp = strip_integrals(u, exponent, window, t, band)
    if record.strip_samples:
        t_prev, a_prev, h_prev, s_prev = record.strip_samples[-1]
        gap = t - t_prev
        record.smoothing_accum += 0.5 * gap * (a + a_prev)
        record.hilbert_twin += 0.5 * gap * (h + h_prev)
        record.sharp_accum += 0.5 * gap * (sharp + s_prev)
    record.strip_samples.append((t, a, h, sharp))
    record.accum_series.append((t, record.smoothing_accum, record.hilbert_twin))
    return record


def observe(record: DiagnosticRecord, u: Field, t: float):
    """Energy sample plus smoothing update for one output time."""
    j, s = record.exponent
    band = resolved_band(u.grid) if record.filtered else None
    record.series.append((t, weighted_energy(u, j, s, window=record.window, t=t, band=band)))
    smoothing_integral(record, u, record.smoothing_exponent, record.window, t)


def ladder_records(plan: LadderPlan, window: DiagnosticWindow, tag: str = "", filtered: bool = True):
    recs = []
    pairs = zip(plan.energy_exponents(), plan.smoothing_exponents())
    for n, (e, se) in enumerate(pairs):
        name = f"n={n}" if n < plan.n_fractional else "final"
        label = f"{tag}{name}:d^{e[0]}D^{e[1]:g}"
        recs.append(DiagnosticRecord(window, e, se, label, filtered))
    return recs


# ---------------------------------------------------------------------------
# one-sided data


@dataclass(frozen=True)
class OneSidedProfile:
    """``u0 = background + A beta(x) |x - x_s|^gamma``.

    ``beta`` equals one on ``|x - x_s| <= cutoff_half`` and vanishes beyond
    ``cutoff_half + cutoff_taper``; the gentle taper keeps its own spectral
    tail below the corner's algebraic one.

    The sampled corner has O(1) relative content at Nyquist, where the
    discrete dispersion symbol jumps sign; ``band_limited`` rolls it off
    smoothly before the run.
    """

    gamma: float
    x_s: float = -10.0
    amplitude: float = 0.3
    background_amplitude: float = 0.5
    background_width: float = 3.0
    background_center: float = 0.0
    cutoff_half: float = 1.0
    cutoff_taper: float = 6.0
    band_limited: bool = True

    @property
    def support(self):
        r = self.cutoff_half + self.cutoff_taper
        return self.x_s - r, self.x_s + r

    def cutoff(self, x):
        r = np.abs(np.asarray(x, dtype=float) - self.x_s)
        half_taper = self.cutoff_taper / 2
        return 1.0 - bump_cdf(((r - self.cutoff_half - half_taper) / half_taper).ravel()).reshape(r.shape)

    def background(self, x):
        x = np.asarray(x, dtype=float)
        return self.background_amplitude * np.exp(-(((x - self.background_center) / self.background_width) ** 2))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.background(x)
        if self.amplitude:
            out = out + self.amplitude * self.cutoff(x) * np.abs(x - self.x_s) ** self.gamma
        return out


@dataclass(frozen=True)
class GaussianProfile:
    """Globally smooth control data ``A exp(-((x - c)/w)^2)``."""

    amplitude: float = 0.5
    center: float = 0.0
    width: float = 3.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))


def gamma_range(target_m: int, alpha: float):
    """Open-closed interval ``(s_alpha - 1/2, m - 1/2]`` of admissible corner powers."""
    return s_alpha(alpha) - 0.5, target_m - 0.5


def one_sided_data(profile: OneSidedProfile, target_m: int, alpha: float, grid: Grid) -> Field:
    lo, hi = gamma_range(target_m, alpha)
    if not lo < hi:
        raise ConfigurationError(f"empty corner-power range for m={target_m}, alpha={alpha}",
                                 ["γ + 1/2 > 2 - α/2", "γ ≤ m - 1/2"])
    if profile.amplitude:
        rules = []
        if not profile.gamma + 0.5 > s_alpha(alpha):
            rules.append(f"γ + 1/2 > s_α = 2 - α/2 = {s_alpha(alpha):g}")
        if not profile.gamma <= target_m - 0.5:
            rules.append(f"γ ≤ m - 1/2 = {target_m - 0.5:g}")
        if rules:
            raise ConfigurationError(f"corner power gamma = {profile.gamma} not admissible: " + "; ".join(rules),
                                     rules)
    a, b = profile.support
    if a <= -grid.half_length or b >= grid.half_length:
        raise ConfigurationError(f"corner cutoff support [{a:g}, {b:g}] leaves the box")
    u = Field.from_function(grid, profile)
    return band_limit(u) if profile.band_limited else u


def estimate_regularity(u: Field, lo_frac: float = 1 / 16, hi_frac: float = 1 / 2, bins: int = 20) -> float:
    """Sobolev index from the algebraic decay ``|u^(xi)| ~ xi^-p`` of the spectrum.

    The fit uses RMS amplitudes in log-spaced bins and models the first
    aliased images of the tail, which bend it upward near Nyquist.  The
    returned index is ``p - 1/2``.
    """
    g = u.grid
    amp = np.abs(np.fft.rfft(u.values))
    xi = np.pi * np.arange(amp.size) / g.half_length
    top = xi[-1]
    edges = np.geomspace(top * lo_frac, top * hi_frac, bins + 1)
    centers, levels = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (xi >= a) & (xi < b)
        if np.any(sel):
            centers.append(math.sqrt(a * b))
            levels.append(math.sqrt(float(np.mean(amp[sel] ** 2))))
    c = np.array(centers)
    lv = np.log(np.maximum(levels, 1e-300))

    def misfit(p):
        model = np.log(c**-p + (2 * top - c) ** -p + (2 * top + c) ** -p)
        return float(np.var(lv - model))

    p = minimize_scalar(misfit, bounds=(0.5, 12.0), method="bounded").x
    return float(p - 0.5)


# ---------------------------------------------------------------------------
# experiments


def top_octave(u: Field) -> Field:
    """Top octave ``n/6 < |k| <= n/3`` of the dealiased band."""
    k = np.abs(u.grid.index)
    n = u.grid.n_points
    mask = (6 * k > n) & (3 * k <= n)
    return Field(u.grid, np.fft.ifft(u.spectrum * mask).real)


def left_window_energy(u: Field, x_right: float, params: WeightParams) -> float:
    """Top-octave energy weighted by ``1 - chi(x - x_right)`` (one on the left)."""
    w = 1.0 - Chi(params)(u.grid.x - x_right)
    hp = top_octave(u).values
    return float(np.sum(hp * hp * w * w) * u.grid.spacing)


@dataclass
class CheckResult:
    name: str
    passed: bool | None  # None: not applicable
    detail: str = ""


@dataclass
class Verdict:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def as_record(self):
        return dict(kind="verdict", passed=self.passed,
                    checks=[dict(name=c.name, passed=c.passed, detail=c.detail) for c in self.checks])


@dataclass
class ExperimentResult:
    records: list
    verdict: Verdict
    control_records: list | None = None
    left_series: list = field(default_factory=list)
    final_state: SolverState | None = None
    regularity_estimate: float | None = None


@dataclass(frozen=True)
class VerdictThresholds:
    kappa: float = 50.0
    refinement_tol: float = 0.10
    left_retention: float = 0.5
    control_tol: float = 0.10
    control: bool = True


def _simulate(u0: Field, solver_config: SolverConfig, plan: LadderPlan, windows, left=None):
    records = []
    for i, w in enumerate(windows):
        records.extend(ladder_records(plan, w, tag=f"w{i}:" if len(windows) > 1 else ""))
    left_series = []

    def obs(state: SolverState):
        for r in records:
            observe(r, state.u, state.t)
        if left is not None:
            left_series.append((state.t, left_window_energy(state.u, *left)))

    try:
        final = run(u0, solver_config, [obs])
    except BlowUpError as exc:
        raise ExperimentFailedError(f"solver blow-up at t = {exc.t}", records=records) from exc
    return records, left_series, final


def _rel_close(a, b, tol, floor=1e-14):
    return abs(a - b) <= tol * max(abs(a), abs(b)) + floor


def run_propagation_experiment(config) -> ExperimentResult:
    """Run the one-sided experiment described by ``config`` and judge it.

    ``config`` needs ``grid``, ``alpha``, ``solver_config()``, ``initial_profile``,
    ``windows``, ``ladder_m``, ``mollifier_mu`` and ``thresholds`` attributes
    (an :class:`fkdv.experiment_io.ExperimentConfig` provides them).
    """
    grid: Grid = config.grid
    alpha = config.alpha
    plan = ladder_plan(alpha, config.ladder_m)
    profile = config.initial_profile
    windows = list(config.windows)
    th: VerdictThresholds = config.thresholds
    if not windows:
        raise ConfigurationError("at least one diagnostic window is required")
    for w in windows:
        if w.v < 0:
            raise ConfigurationError("window speed must be nonnegative", ["v ≥ 0"])
    solver_config = config.solver_config()
    u0 = initial_field(config)
    rough = isinstance(profile, OneSidedProfile) and profile.amplitude != 0
    left = None
    if rough:
        left = (profile.x_s + profile.cutoff_half, windows[0].params)
    records, left_series, final = _simulate(u0, solver_config, plan, windows, left)

    checks = []
    worst = max((r.sup_energy / (r.initial_energy + 1.0) for r in records), default=0.0)
    checks.append(CheckResult("bounded_energy", worst <= th.kappa,
                              f"max sup_t E / (E(0) + 1) = {worst:.4g} (kappa = {th.kappa:g})"))

    ok, worst_ref = True, 0.0
    for r in records:
        coarse, coarse_h = r.refined_accum(2)
        finite = math.isfinite(r.smoothing_accum) and math.isfinite(r.hilbert_twin)
        for fine, c in ((r.smoothing_accum, coarse), (r.hilbert_twin, coarse_h)):
            rel = abs(fine - c) / max(abs(fine), 1e-300) if fine else 0.0
            worst_ref = max(worst_ref, rel)
            ok = ok and finite and _rel_close(fine, c, th.refinement_tol)
    checks.append(CheckResult("smoothing_refinement", ok, f"max relative change {worst_ref:.3g}"))

    if rough and left_series:
        e0, e1 = left_series[0][1], left_series[-1][1]
        frac = e1 / e0 if e0 > 0 else float("nan")
        checks.append(CheckResult("left_roughness", bool(frac >= th.left_retention),
                                  f"top-octave left-window energy retained {frac:.3g}"))
    else:
        checks.append(CheckResult("left_roughness", None, "not applicable: globally smooth data"))

    control = None
    if th.control:
        mu = config.mollifier_mu or windows[0].epsilon / 2
        u0_mu = mollify(u0, mu)
        control, _, _ = _simulate(u0_mu, solver_config, plan, windows)
        worst_c = 0.0
        okc = True
        for r, rc in zip(records, control):
            rel = abs(r.sup_energy - rc.sup_energy) / max(r.sup_energy, 1e-300)
            worst_c = max(worst_c, rel)
            okc = okc and _rel_close(r.sup_energy, rc.sup_energy, th.control_tol)
        checks.append(CheckResult("mollified_control", okc,
                                  f"mu = {mu:g}; max relative change of sup energies {worst_c:.3g}"))

    est = estimate_regularity(u0) if rough else None
    return ExperimentResult(records, Verdict(checks), control, left_series, final, est)


def initial_field(config) -> Field:
    profile = config.initial_profile
    if isinstance(profile, OneSidedProfile):
        return one_sided_data(profile, config.ladder_m, config.alpha, config.grid)
    return Field.from_function(config.grid, profile)


def partition_energies(u: Field, j: int, s: float, window: DiagnosticWindow, t: float = 0.0):
    """Right, middle and left energies for the weights ``chi``, ``phi_tilde`` and ``sqrt(psi)``.

    Their squares sum to one, so the three energies add up to the
    unweighted one.
    """
    c = Chi(window.params)
    psi = psi_function(window.epsilon)

    def right(x, tt):
        return c(window.shift(x, tt))

    def mid(x, tt):
        y = window.shift(x, tt)
        return np.sqrt(np.clip(1.0 - c(y) ** 2 - psi(y), 0.0, None))

    def left(x, tt):
        return np.sqrt(np.clip(psi(window.shift(x, tt)), 0.0, None))

    return tuple(weighted_energy(u, j, s, w, t=t) for w in (right, mid, left))


def accumulate_series(records: Sequence[DiagnosticRecord]):
    """Rows ``(t, E_1, ..., E_r)`` aligned on the common sample times."""
    if not records:
        return []
    times = [t for t, _ in records[0].series]
    return [(t,) + tuple(r.series[i][1] for r in records) for i, t in enumerate(times)]
