"""Cutoff weights built by mollifying a piecewise-linear ramp.

``chi_{eps,b} = rho_eps * nu_{eps,b}`` where ``nu`` rises linearly from 0 at
``2 eps`` to 1 at ``b - eps``.  Because ``nu'`` is a scaled indicator, every
derivative of ``chi`` is a difference of two shifted copies of the bump's
antiderivative (order 1) or of the bump's own derivatives (order >= 2), and
``chi`` itself is a difference of two shifted second antiderivatives.  Those
antiderivatives are evaluated with composite Gauss-Legendre quadrature, so
the weights can be sampled at arbitrary points without interpolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigurationError, ConstructionError, ResolutionError
from .spectral import Field

_GL_NODES = 24
_GL_PANELS = 8
RADICAND_CLAMP = 1e-14
RADICAND_FAIL = 1e-10
DEFAULT_MAX_ORDER = 7


# ---------------------------------------------------------------------------
# the bump profile rho(x) = exp(-1/(1-x^2)) / Z on (-1, 1)


def _bump_unnormalized(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    q = 1.0 - x[inside] ** 2
    out[inside] = np.exp(-1.0 / q)
    return out


@lru_cache(maxsize=None)
def _gl_rule():
    nodes, weights = np.polynomial.legendre.leggauss(_GL_NODES)
    # composite rule on [0, 1]: panel p covers [p/P, (p+1)/P]
    P = _GL_PANELS
    offsets = np.arange(P)[:, None] / P
    t = (offsets + (nodes[None, :] + 1.0) / (2 * P)).ravel()
    w = np.tile(weights / (2 * P), P)
    return t, w


@lru_cache(maxsize=None)
def _normalization():
    t, w = _gl_rule()
    # integrate over [-1, 1] as two copies of [-1, 0]
    x = -1.0 + t
    return 2.0 * float(np.sum(w * _bump_unnormalized(x)))


def bump(x):
    """Normalized smooth bump ``rho`` supported in ``(-1, 1)``."""
    return _bump_unnormalized(x) / _normalization()


@lru_cache(maxsize=None)
def _derivative_polys(order):
    """Polynomials ``P_k`` with ``rho^(k) = P_k / q^(2k) * rho``, ``q = 1 - x^2``."""
    q = Polynomial([1.0, 0.0, -1.0])
    x = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for k in range(order):
        p = polys[-1]
        polys.append(p.deriv() * q * q + (4 * k * x * q - 2 * x) * p)
    return tuple(polys)


def bump_derivative(x, k):
    """``k``-th derivative of the normalized bump."""
    if k == 0:
        return bump(x)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    q = 1.0 - xi**2
    p = _derivative_polys(k)[k](xi)
    # exp(-1/q) / q^(2k) in log form: both factors under/overflow near |x| = 1
    out[inside] = p * np.exp(-1.0 / q - 2 * k * np.log(q)) / _normalization()
    return out


def _left_integral(s, integrand):
    """``int_{-1}^{s} integrand(t, s) dt`` for an array ``s`` with ``-1 <= s <= 0``."""
    t, w = _gl_rule()
    s = np.asarray(s, dtype=float)
    length = s + 1.0
    pts = -1.0 + length[:, None] * t[None, :]
    vals = integrand(pts, s[:, None])
    return length * (vals @ w)


def bump_cdf(s):
    """``C(s) = int_{-inf}^{s} rho``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.where(s >= 1, 1.0, 0.0)
    mid = np.abs(s) < 1
    if np.any(mid):
        sm = s[mid]
        neg = -np.abs(sm)
        left = _left_integral(neg, lambda t, _s: bump(t))
        out[mid] = np.where(sm <= 0, left, 1.0 - left)
    return out


def bump_cdf2(s):
    """``G(s) = int_{-inf}^{s} C``; equals ``s`` for ``s >= 1``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.where(s >= 1, s, 0.0)
    mid = np.abs(s) < 1
    if np.any(mid):
        sm = s[mid]
        neg = -np.abs(sm)
        left = _left_integral(neg, lambda t, sv: (sv - t) * bump(t))
        # G(s) = s + G(-s) by evenness of rho
        out[mid] = np.where(sm <= 0, left, sm + left)
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """``rho_mu(x) = rho(x / mu) / mu`` with the standard bump profile."""

    scale: float = 1.0
    profile: str = "bump"

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigurationError("mollifier scale must be positive", ["mu > 0"])
        if self.profile != "bump":
            raise ConfigurationError(f"unknown mollifier profile {self.profile!r}")

    def __call__(self, x):
        return bump(np.asarray(x) / self.scale) / self.scale

    def derivative(self, x, k):
        return bump_derivative(np.asarray(x) / self.scale, k) / self.scale ** (k + 1)


def mollify(u, mu: float):
    """Periodic convolution ``rho_mu * u`` of a grid field (Bona-Smith data smoothing)."""
    grid = u.grid
    n = grid.n_points
    dx = grid.spacing
    if mu < 2 * dx:
        raise ResolutionError(f"mollifier scale {mu} under-resolved; need mu >= {2 * dx:.3g}")
    # kernel sampled at signed offsets in FFT order
    offsets = dx * np.fft.fftfreq(n, d=1.0 / n)
    kernel = MollifierSpec(mu)(offsets)
    kernel /= kernel.sum()
    out = np.fft.ifft(np.fft.fft(u.values) * np.fft.fft(kernel)).real
    return Field(grid, out)


# ---------------------------------------------------------------------------
# chi_{eps,b}


@dataclass(frozen=True)
class WeightParams:
    epsilon: float
    b: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}", ["eps > 0"])
        if self.b < 5 * self.epsilon:
            raise ConfigurationError(
                f"b = {self.b} < 5*eps = {5 * self.epsilon}", ["b >= 5 eps"]
            )


class Chi:
    """Evaluator for ``chi_{eps,b}`` and its derivatives at arbitrary points."""

    def __init__(self, params: WeightParams):
        self.params = params
        eps, b = params.epsilon, params.b
        self.slope = 1.0 / (b - 3 * eps)
        self._left = 2 * eps
        self._right = b - eps

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.ravel()
        eps = self.params.epsilon
        sl = (x - self._left) / eps
        sr = (x - self._right) / eps
        if order == 0:
            out = eps * self.slope * (bump_cdf2(sl) - bump_cdf2(sr))
            # exact plateaus; the difference above loses digits for large x
            out[sr >= 1] = 1.0
            out[sl <= -1] = 0.0
        elif order == 1:
            out = self.slope * (bump_cdf(sl) - bump_cdf(sr))
        else:
            k = order - 2
            out = self.slope * eps ** (-(order - 1)) * (bump_derivative(sl, k) - bump_derivative(sr, k))
        return out.reshape(shape)


def chi(epsilon, b):
    return Chi(WeightParams(epsilon, b))


def psi_function(epsilon: float, shift: float = 0.0):
    """``psi_eps = 1 - rho_{eps/8} * 1_[3eps/8, inf)`` (optionally shifted right)."""
    scale = epsilon / 8.0
    center = 3 * epsilon / 8.0 + shift

    def _psi(x, order=0):
        s = (np.asarray(x, dtype=float) - center) / scale
        if order == 0:
            return 1.0 - bump_cdf(s.ravel()).reshape(s.shape)
        return -bump_derivative(s, order - 1) / scale**order

    return _psi


def _check_resolution(x, epsilon):
    x = np.asarray(x, dtype=float)
    if x.size > 1:
        spacing = np.max(np.diff(np.sort(x)))
        need = epsilon / 16
        if spacing > need * (1 + 1e-12):
            raise ResolutionError(
                f"evaluation points too coarse: spacing {spacing:.4g} > eps/16 = {need:.4g}"
            )


def build_chi(params: WeightParams, mollifier: MollifierSpec | None = None, eval_points=None,
              max_order: int = DEFAULT_MAX_ORDER):
    """Sample ``chi`` and its derivatives ``0..max_order`` at ``eval_points``.

    Returns ``(values, derivs)`` where ``derivs[j]`` is ``chi^(j)``.
    """
    _validate_mollifier(params, mollifier)
    _check_resolution(eval_points, params.epsilon)
    c = Chi(params)
    derivs = [c(eval_points, j) for j in range(max_order + 1)]
    return derivs[0], derivs


def _validate_mollifier(params, mollifier):
    if mollifier is not None and not math.isclose(mollifier.scale, params.epsilon):
        raise ConfigurationError(
            "chi uses rho_eps; mollifier scale must equal epsilon", ["mollifier scale = eps"]
        )


def _safe_sqrt(radicand, what, x):
    bad = radicand < -RADICAND_FAIL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConstructionError(f"{what} radicand {radicand[i]:.3e} < 0 at x = {x[i]:.6g}")
    # small negatives (rounding) are clamped to zero
    return np.sqrt(np.clip(radicand, 0.0, None))


NAMES = ("chi", "phi", "phi_tilde", "psi", "eta", "sqrt_chi_prime")


@dataclass
class WeightFamily:
    params: WeightParams
    x: np.ndarray
    chi: np.ndarray
    phi: np.ndarray
    phi_tilde: np.ndarray
    psi: np.ndarray
    eta: np.ndarray
    sqrt_chi_prime: np.ndarray
    chi_derivs: list = field(repr=False)
    psi_shift: float = 0.0
    mollifier: MollifierSpec | None = None

    @property
    def max_order(self):
        return len(self.chi_derivs) - 1

    def evaluate(self, name: str, x, order: int = 0):
        """Evaluate a member of the family at arbitrary points."""
        x = np.asarray(x, dtype=float)
        c = Chi(self.params)
        psi = psi_function(self.params.epsilon, self.psi_shift)
        if name == "chi":
            return c(x, order)
        if order:
            raise ConfigurationError(f"derivatives are only available for chi, not {name!r}")
        if name == "psi":
            return psi(x)
        if name == "phi":
            return 1.0 - c(x) - psi(x)
        if name == "phi_tilde":
            return np.sqrt(np.clip(1.0 - c(x) ** 2 - psi(x), 0.0, None))
        if name == "eta":
            return np.sqrt(np.clip(c(x) * c(x, 1), 0.0, None))
        if name == "sqrt_chi_prime":
            return np.sqrt(np.clip(c(x, 1), 0.0, None))
        if name == "chi_squared":
            return c(x) ** 2
        if name == "chi_squared_prime":
            return 2.0 * c(x) * c(x, 1)
        raise KeyError(f"unknown weight {name!r}; expected one of {NAMES}")


def build_partition(params: WeightParams, mollifier: MollifierSpec | None = None, eval_points=None,
                    max_order: int = DEFAULT_MAX_ORDER, psi_shift: float = 0.0) -> WeightFamily:
    """Sample the whole family on ``eval_points``.

    ``psi_shift`` moves ``psi`` to the right; it exists to exercise the
    verifier and must be zero for a valid family.
    """
    x = np.asarray(eval_points, dtype=float)
    chi_vals, derivs = build_chi(params, mollifier, x, max_order)
    psi_vals = psi_function(params.epsilon, psi_shift)(x)
    phi = 1.0 - chi_vals - psi_vals
    phi_tilde = _safe_sqrt(1.0 - chi_vals**2 - psi_vals, "phi_tilde", x)
    eta = _safe_sqrt(chi_vals * derivs[1], "eta", x)
    sqrt_cp = _safe_sqrt(derivs[1], "sqrt(chi')", x)
    eps, b = params.epsilon, params.b
    if psi_shift == 0.0:
        outside = (x < eps / 4) | (x > b)
        if np.any(np.abs(phi[outside]) > 1e-10):
            i = int(np.argmax(np.abs(np.where(outside, phi, 0.0))))
            raise ConstructionError(f"phi support violated at x = {x[i]:.6g}")
    return WeightFamily(params, x, chi_vals, phi, phi_tilde, psi_vals, eta, sqrt_cp, derivs,
                        psi_shift, mollifier)


def shifted_eval(w: WeightFamily, name: str, x, v: float, t: float):
    """Evaluate ``name`` at ``x + v t`` (moving windows)."""
    if name not in NAMES and name not in ("chi_squared", "chi_squared_prime"):
        raise KeyError(f"unknown weight {name!r}; expected one of {NAMES}")
    return w.evaluate(name, np.asarray(x, dtype=float) + v * t)


def default_points(params: WeightParams, per_eps: int = 64):
    """Uniform points covering the whole transition with spacing ``eps/per_eps``."""
    eps, b = params.epsilon, params.b
    lo, hi = -2 * eps, b + 3 * eps
    n = int(math.ceil((hi - lo) / (eps / per_eps))) + 1
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# property verification


@dataclass
class PropertyResult:
    name: str
    passed: bool
    tolerance: float
    residual: float
    detail: str = ""


@dataclass
class WeightReport:
    params: WeightParams
    results: list
    constants: dict

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def failures(self):
        return [r for r in self.results if not r.passed]

    def as_records(self):
        base = {"epsilon": self.params.epsilon, "b": self.params.b}
        return [dict(base, property=r.name, passed=r.passed, tolerance=r.tolerance,
                     residual=r.residual, detail=r.detail) for r in self.results]


def _max_abs(a, mask):
    return float(np.max(np.abs(a[mask]))) if np.any(mask) else 0.0


def _ratio_constant(num, den, tiny=1e-300):
    """Smallest ``c`` with ``|num| <= c den``; inf if num is nonzero where den vanishes."""
    num = np.abs(num)
    pos = den > tiny
    if np.any(num[~pos] > 1e-13):
        return math.inf
    if not np.any(pos):
        return 0.0
    return float(np.max(num[pos] / den[pos]))


def verify_weight_properties(w: WeightFamily, tol: float = 1e-12) -> WeightReport:
    """Check the listed cutoff properties on the family's sample points."""
    p = w.params
    eps, b = p.epsilon, p.b
    x = w.x
    chi_v, d1 = w.chi, w.chi_derivs[1]
    wide = Chi(WeightParams(eps / 3, b + eps))
    wide_d1 = wide(x, 1)
    res = []

    def add(name, ok, tolerance, residual, detail=""):
        res.append(PropertyResult(name, bool(ok), float(tolerance), float(residual), detail))

    r = float(-min(0.0, d1.min()))
    add("1: chi' >= 0", r <= tol, tol, r)

    left, right = x <= eps, x >= b
    r = max(_max_abs(chi_v, left), _max_abs(chi_v - 1.0, right))
    add("2: chi = 0 on x<=eps, 1 on x>=b", r <= tol, tol, r)

    r = _max_abs(chi_v, x < eps)
    add("3: supp chi in [eps, inf)", r <= tol, tol, r)

    band = (x >= 2 * eps) & (x <= b - 2 * eps)
    bound4 = 1.0 / (10 * (b - eps))
    r = float(np.min(d1[band]) - bound4) if np.any(band) else 0.0
    add("4: chi' >= 1/(10(b-eps)) on [2eps, b-2eps]", r >= -tol, tol, r,
        f"min chi' = {r + bound4:.6g}, bound {bound4:.6g}")

    r = _max_abs(d1, (x < eps) | (x > b))
    add("5: supp chi' in [eps, b]", r <= tol, tol, r)

    cj = {}
    for j in range(1, w.max_order + 1):
        cj[j] = _ratio_constant(w.chi_derivs[j], wide_d1)
    finite = all(math.isfinite(c) for c in cj.values())
    add("6: |chi^(j)| <= c_j chi'_{eps/3,b+eps}", finite, 0.0, max(cj.values()),
        "c_j = " + ", ".join(f"{j}:{c:.4g}" for j, c in cj.items()))

    bound7 = eps / (2 * (b - 3 * eps))
    mask7 = x > 3 * eps
    r = float(np.min(chi_v[mask7]) - bound7)
    add("7: chi >= eps/(2(b-3eps)) on x>3eps", r >= -tol, tol, r)

    bound8 = eps / (b - 3 * eps)
    r = float(np.max(wide_d1) - bound8)
    add("8: chi'_{eps/3,b+eps} <= eps/(b-3eps)", r <= tol, tol, r,
        f"max = {np.max(wide_d1):.6g}, bound {bound8:.6g}")

    c1 = _ratio_constant(d1, wide_d1 * wide(x))
    c2 = _ratio_constant(d1, Chi(WeightParams(eps / 5, eps))(x))
    add("9: chi' <= c1 chi'_w chi_w and chi' <= c2 chi_{eps/5,eps}",
        math.isfinite(c1) and math.isfinite(c2), 0.0, max(c1, c2), f"c1 = {c1:.4g}, c2 = {c2:.4g}")

    rad = np.minimum(chi_v * d1, d1)
    r = float(min(0.0, rad.min()))
    eta_err = float(np.max(np.abs(w.eta**2 - np.clip(chi_v * d1, 0, None))))
    add("10: eta = sqrt(chi chi'), sqrt(chi') well defined", r >= -RADICAND_CLAMP and eta_err <= tol,
        RADICAND_CLAMP, max(-r, eta_err))

    outside = (x < eps / 4) | (x > b)
    r = max(_max_abs(w.phi, outside), _max_abs(w.phi_tilde, outside))
    add("11: supp phi, phi~ in [eps/4, b]", r <= 1e-10, 1e-10, r)

    plateau = (x >= eps / 2) & (x <= eps)
    r = max(_max_abs(w.phi - 1.0, plateau), _max_abs(w.phi_tilde - 1.0, plateau))
    add("12: phi = phi~ = 1 on [eps/2, eps]", r <= 1e-10, 1e-10, r)

    r = _max_abs(w.psi, x > eps / 2)
    add("13: supp psi in (-inf, eps/2]", r <= tol, tol, r)

    r = max(float(np.max(np.abs(chi_v + w.phi + w.psi - 1.0))),
            float(np.max(np.abs(chi_v**2 + w.phi_tilde**2 + w.psi - 1.0))))
    add("14: chi+phi+psi = 1, chi^2+phi~^2+psi = 1", r < 1e-10, 1e-10, r)

    r = float(-min(0.0, np.min(np.diff(chi_v))))
    add("monotone: forward differences of chi", r <= tol, tol, r)

    constants = {"c_j": cj, "c1": c1, "c2": c2}
    return WeightReport(p, res, constants)


SWEEP_EPS = (0.05, 0.1, 0.5)


def sweep_params():
    for eps in SWEEP_EPS:
        for b in (5 * eps, 10 * eps, 1 + 5 * eps):
            yield WeightParams(eps, b)
