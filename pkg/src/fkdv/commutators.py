"""Commutator expansion of ``[H D^a; f]`` into symmetric sandwiches plus a remainder.

With ``a = 2 mu + 1`` the expansion reads::

    [H D^a; f] = -R_n(a) - (P_n(a) - H P_n(a) H) / 2
    P_n(a)     = a sum_{j<=n} c_{2j+1} (-1)^j 4^-j  D^{mu-j} f^{(2j+1)} D^{mu-j}

Everything here acts on periodic grid fields.  Operators optionally carry an
outer smoothing exponent ``sigma`` (``D^sigma . D^sigma``), which is folded
into the inner Riesz powers so that only the combined exponents
``sigma + mu - j`` need to be nonnegative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConfigurationError, IncompatibleGridError, UnsupportedExponentError
from .spectral import Field, Grid, apply_multiplier, combined_symbol, hilbert, riesz
from .weights import Chi, WeightParams


def c_coeff(a: float, j: int) -> float:
    """``c_{2j+1} = prod_{k<j} (a^2 - (2k+1)^2) / (2j+1)!``, with ``c_1 = 1``."""
    if j < 0:
        raise ConfigurationError(f"j must be >= 0, got {j}")
    prod = 1.0
    for k in range(j):
        # a^2 - (2k+1)^2 factored to keep exact zeros at odd integers
        prod *= (a - (2 * k + 1)) * (a + (2 * k + 1))
    return prod / math.factorial(2 * j + 1)


def c_coeff_exact(a, j: int, dps: int = 50):
    """Extended-precision reference value of ``c_{2j+1}`` (mpmath)."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(a)
        prod = mpmath.mpf(1)
        for k in range(j):
            prod *= a**2 - (2 * k + 1) ** 2
        return prod / mpmath.factorial(2 * j + 1)


def admissible_n(a: float, sigma: float):
    """The ``n`` with ``2n+1 <= a+2 sigma <= 2n+3``; ties go to the smaller ``n``."""
    total = Fraction(a).limit_denominator(10**12) + 2 * Fraction(sigma).limit_denominator(10**12)
    if total < 1:
        return None
    # smallest n with total <= 2n+3
    n = max(0, math.ceil((total - 3) / 2))
    assert 2 * n + 1 <= total <= 2 * n + 3
    return int(n)


# ---------------------------------------------------------------------------
# weights on the periodic box


@dataclass(frozen=True)
class SampledWeight:
    """A smooth multiplier ``f`` and its derivatives ``f^(k)`` sampled on a grid."""

    grid: Grid
    derivs: tuple = field(repr=False)
    label: str = "f"

    @property
    def values(self):
        return self.derivs[0]

    def derivative(self, k: int) -> np.ndarray:
        if k >= len(self.derivs):
            raise ConfigurationError(
                f"weight {self.label} has derivatives up to {len(self.derivs) - 1}, need {k}"
            )
        return self.derivs[k]

    @property
    def max_order(self):
        return len(self.derivs) - 1


def periodic_weight(params: WeightParams, grid: Grid, *, rise_at=None, fall_at=None,
                    squared: bool = False, max_order: int = 7) -> SampledWeight:
    """``chi(x - rise_at) - chi(x - fall_at)`` (optionally squared) on the box.

    A single ``chi`` cannot be periodic; the descending copy sits far from
    the rise so ``f'`` stays compactly supported inside the box.
    """
    L = grid.half_length
    b = params.b
    if rise_at is None:
        rise_at = -L / 2 - b / 2
    if fall_at is None:
        fall_at = L / 2 - b / 2
    if rise_at + params.epsilon <= -L or fall_at + b >= L or fall_at <= rise_at + b:
        raise ConfigurationError("weight transitions do not fit inside the periodic box")
    c = Chi(params)
    x = grid.x
    base = [c(x - rise_at, k) - c(x - fall_at, k) for k in range(max_order + 1)]
    if squared:
        derivs = []
        for k in range(max_order + 1):
            derivs.append(sum(math.comb(k, i) * base[i] * base[k - i] for i in range(k + 1)))
        base = derivs
    label = f"{'chi^2' if squared else 'chi'}_{{{params.epsilon:g},{params.b:g}}}"
    return SampledWeight(grid, tuple(base), label)


def spectral_weight(f: Field, max_order: int = 7, label: str = "f") -> SampledWeight:
    derivs = [f.values]
    for k in range(1, max_order + 1):
        derivs.append(apply_multiplier(f, combined_symbol(f.grid, order=k)).values)
    return SampledWeight(f.grid, tuple(derivs), label)


def constant_weight(grid: Grid, value: float = 1.0, max_order: int = 7) -> SampledWeight:
    z = np.zeros(grid.n_points)
    return SampledWeight(grid, (np.full(grid.n_points, float(value)),) + (z,) * max_order, "const")


# ---------------------------------------------------------------------------
# the expansion


@dataclass(frozen=True)
class CommutatorExpansion:
    a: float
    order_n: int
    weight: SampledWeight

    def __post_init__(self):
        if self.a < 1:
            raise ConfigurationError(f"a must be >= 1, got {self.a}", ["a >= 1"])
        if self.order_n < 0:
            raise ConfigurationError("order_n must be nonnegative")
        if self.weight.max_order < 2 * self.order_n + 1:
            raise ConfigurationError(
                f"order {self.order_n} needs weight derivatives up to {2 * self.order_n + 1}"
            )

    @property
    def mu(self) -> float:
        return 0.5 * (self.a - 1.0)

    @property
    def coeffs(self):
        return tuple(c_coeff(self.a, j) for j in range(self.order_n + 1))

    @property
    def grid(self):
        return self.weight.grid


def _check(u: Field, grid: Grid):
    if u.grid != grid:
        raise IncompatibleGridError(f"field grid {u.grid} does not match weight grid {grid}")


def apply_P(exp: CommutatorExpansion, u: Field, sigma: float = 0.0) -> Field:
    """``D^sigma P_n(a) D^sigma u``."""
    _check(u, exp.grid)
    g = u.grid
    out = np.zeros(g.n_points)
    for j, c in enumerate(exp.coeffs):
        s = sigma + exp.mu - j
        if s < 0:
            raise UnsupportedExponentError(
                f"Riesz exponent sigma+mu-j = {s:.4g} < 0 at j={j} (a={exp.a}, n={exp.order_n})"
            )
        if c == 0.0:
            continue
        d = riesz(g, s)
        inner = apply_multiplier(u, d).values * exp.weight.derivative(2 * j + 1)
        term = apply_multiplier(Field(g, inner), d).values
        out += exp.a * c * (-1) ** j * 4.0 ** (-j) * term
    return Field(g, out)


def apply_bracket_HDa(f: SampledWeight, a: float, u: Field, sigma: float = 0.0) -> Field:
    """``D^sigma [H D^a; f] D^sigma u = H D^{a+sigma}(f D^sigma u) - D^sigma(f H D^{a+sigma} u)``."""
    _check(u, f.grid)
    g = u.grid
    hd = combined_symbol(g, s=a + sigma, hilbert=True)
    if sigma == 0:
        first = apply_multiplier(Field(g, f.values * u.values), hd)
        second = f.values * apply_multiplier(u, hd).values
        return Field(g, first.values - second)
    ds = riesz(g, sigma)
    first = apply_multiplier(Field(g, f.values * apply_multiplier(u, ds).values), hd)
    second = apply_multiplier(Field(g, f.values * apply_multiplier(u, hd).values), ds)
    return Field(g, first.values - second.values)


def apply_R(exp: CommutatorExpansion, u: Field, sigma: float = 0.0) -> Field:
    """``D^sigma R_n(a) D^sigma u``."""
    br = apply_bracket_HDa(exp.weight, exp.a, u, sigma)
    p = apply_P(exp, u, sigma)
    hph = hilbert(apply_P(exp, hilbert(u), sigma))
    return Field(u.grid, -br.values - 0.5 * (p.values - hph.values))


def remainder_closed_form_a1(f: SampledWeight, u: Field) -> Field:
    """``R_0(1) u = (f'u + H(f' H u)) / 2``."""
    fp = f.derivative(1)
    return Field(u.grid, 0.5 * (fp * u.values + hilbert(Field(u.grid, fp * hilbert(u).values)).values))


# ---------------------------------------------------------------------------
# numerical check of the L2 bound on the remainder


def random_band_limited(grid: Grid, rng: np.random.Generator, band_limit: int, size: int = 1):
    """Real fields with Gaussian spectra on ``0 < |k| <= band_limit``, unit L2 norm."""
    n = grid.n_points
    k = grid.index
    active = (np.abs(k) <= band_limit) & (k != 0) & (np.arange(n) != grid.nyquist)
    out = []
    for _ in range(size):
        spec = np.zeros(n, complex)
        spec[active] = rng.normal(size=active.sum()) + 1j * rng.normal(size=active.sum())
        v = np.fft.ifft(spec).real
        v /= np.sqrt(np.sum(v * v) * grid.spacing)
        out.append(Field(grid, v))
    return out


def spectral_l1_mass(f: SampledWeight, exponent: float) -> float:
    """Discrete ``(2 pi)^{-1/2} || (D^exponent f)^ ||_1``, unitary Fourier convention.

    With ``f^(xi_k) ~ (2 pi)^{-1/2} dx F_k`` and spacing ``pi/L`` this is
    ``sum_k |xi_k|^exponent |F_k| / N``.
    """
    g = f.grid
    F = np.fft.fft(f.values)
    sym = np.abs(riesz(g, exponent).samples)
    return float(np.sum(sym * np.abs(F)) / g.n_points)


@dataclass(frozen=True)
class BoundCheckSpec:
    sigma: float = 0.0
    ensemble_size: int = 100
    band_limit: int | None = None
    seed: int = 0
    power_iterations: int = 30


@dataclass
class BoundReport:
    n: int
    a: float
    sigma: float
    max_ratio: float
    norm_ratio: float
    rhs_constant: float
    unit_constant_applies: bool
    passed: bool | None
    samples: int

    def as_record(self):
        return dict(kind="remainder_bound", n=self.n, a=self.a, sigma=self.sigma,
                    max_ratio=self.max_ratio, norm_ratio=self.norm_ratio,
                    rhs_constant=self.rhs_constant, unit_constant=self.unit_constant_applies,
                    passed=self.passed, samples=self.samples)


def check_remainder_bound(exp: CommutatorExpansion, spec: BoundCheckSpec, slack: float = 1.05) -> BoundReport:
    """Compare ``||D^s R_n D^s u||`` with ``(2pi)^{-1/2} ||(D^{a+2s} f)^||_1 ||u||``.

    ``max_ratio`` is the worst ratio over the random ensemble; ``norm_ratio``
    refines it with power iteration on the (self-adjoint) operator started at
    the worst sample.  ``passed`` is ``None`` when ``a < 2n+1`` because no
    explicit constant is available then.
    """
    n, a, sigma = exp.order_n, exp.a, spec.sigma
    total = a + 2 * sigma
    if not (2 * n + 1 - 1e-12 <= total <= 2 * n + 3 + 1e-12):
        raise ConfigurationError(
            f"inadmissible triple: need 2n+1 <= a+2sigma <= 2n+3, got n={n}, a+2sigma={total}",
            ["2n+1 <= a+2sigma <= 2n+3"],
        )
    g = exp.grid
    band = spec.band_limit or g.n_points // 4
    rng = np.random.default_rng(spec.seed)
    rhs = spectral_l1_mass(exp.weight, total)
    worst, worst_u = 0.0, None
    fields = random_band_limited(g, rng, band, spec.ensemble_size)
    for u in fields:
        lhs = np.sqrt(np.sum(apply_R(exp, u, sigma).values ** 2) * g.spacing)
        if lhs > worst:
            worst, worst_u = lhs, u
    norm = worst
    if worst_u is not None and spec.power_iterations:
        # iterate P_B R P_B with P_B the projector onto the test band
        in_band = (np.abs(g.index) <= band) & (np.arange(g.n_points) != g.nyquist)
        v = worst_u
        for _ in range(spec.power_iterations):
            w = apply_R(exp, v, sigma)
            w = Field(g, np.fft.ifft(np.where(in_band, np.fft.fft(w.values), 0)).real)
            nrm = np.sqrt(np.sum(w.values**2) * g.spacing)
            if nrm == 0:
                break
            norm = max(norm, nrm)
            v = Field(g, w.values / nrm)
    if rhs == 0.0:
        max_ratio = 0.0 if worst == 0 else math.inf
        norm_ratio = 0.0 if norm == 0 else math.inf
    else:
        max_ratio, norm_ratio = worst / rhs, norm / rhs
    unit = a >= 2 * n + 1
    passed = bool(max(max_ratio, norm_ratio) <= slack) if unit else None
    return BoundReport(n, a, sigma, max_ratio, norm_ratio, rhs, unit, passed, len(fields))


def energy_step_triples(alphas=(0.3, 0.5, 0.75), ms=(2, 3)):
    """``(n, a, sigma)`` triples used by the weighted energy steps, deduplicated."""
    out = []
    for al in alphas:
        a = al + 1
        cand = [(2, a, 2.0), (2, a, 2 + al / 2)]
        for m in ms:
            cand += [(m, a, m + al / 2), (m, a, m + 1 - al / 2)]
        for t in cand:
            if t not in out:
                out.append(t)
    return out


def unit_constant_triples(alphas=(0.3, 0.5, 0.75)):
    """Admissible triples with ``a >= 2n+1``, where the bound holds with C = 1."""
    out = [(0, 1.0, 0.0), (0, 1.0, 0.5), (0, 1.0, 1.0), (1, 3.0, 0.0), (1, 3.0, 0.5)]
    for al in alphas:
        out += [(0, 1 + al, 0.0), (0, 1 + al, (1 - al) / 2), (0, 1 + al, 1 - al / 2)]
    return out
