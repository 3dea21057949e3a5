"""Periodic pseudo-spectral backbone.

The real line is replaced by the box ``[-L, L)`` sampled at ``n`` equispaced
points.  Wavenumbers are ``xi_k = pi k / L`` with ``k`` running over the
symmetric index set ``-n/2+1, ..., n/2`` (the Nyquist mode carries ``+n/2``).
Every operator is a Fourier multiplier applied with a full complex FFT; the
multiplier constant in ``D^s`` is fixed to one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, IncompatibleGridError, InvalidFieldError


@dataclass(frozen=True)
class Grid:
    n_points: int
    half_length: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n % 2:
            raise ConfigurationError(
                f"n_points must be an even integer >= 8, got {n!r}", ["n_points even >= 8"]
            )
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ConfigurationError(
                f"half_length must be positive, got {self.half_length!r}", ["half_length > 0"]
            )
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.n_points)

    @property
    def index(self) -> np.ndarray:
        """Integer wavenumber index in FFT order with Nyquist stored as ``+n/2``."""
        k = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(np.int64)
        k[self.n_points // 2] = self.n_points // 2
        return k

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.pi * self.index / self.half_length

    @property
    def nyquist(self) -> int:
        """Position of the Nyquist mode in FFT order."""
        return self.n_points // 2

    @property
    def dxi(self) -> float:
        return np.pi / self.half_length

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.n_points == other.n_points and self.half_length == other.half_length

    def __hash__(self):
        return hash((self.n_points, self.half_length))


def make_grid(n_points: int, half_length: float) -> Grid:
    return Grid(n_points, half_length)


def _check_finite(values, what="field"):
    if not np.all(np.isfinite(values)):
        raise InvalidFieldError(f"{what} contains NaN or Inf")


class Field:
    """Real samples on a :class:`Grid` with a lazily cached spectrum.

    ``values`` is exposed read-only; derive new fields with
    :meth:`with_values` instead of mutating in place.
    """

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid: Grid, values, *, check=True):
        vals = np.array(values, dtype=np.float64, copy=True)
        if vals.shape != (grid.n_points,):
            raise IncompatibleGridError(
                f"expected {grid.n_points} samples, got shape {vals.shape}"
            )
        if check:
            _check_finite(vals)
        vals.setflags(write=False)
        self.grid = grid
        self._values = vals
        self._spectrum = None

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, func(grid.x))

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum) -> "Field":
        spec = np.asarray(spectrum, dtype=np.complex128)
        out = cls(grid, np.fft.ifft(spec).real)
        return out

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            spec = np.fft.fft(self._values)
            spec.setflags(write=False)
            self._spectrum = spec
        return self._spectrum

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other):
        _same_grid(self, other)
        return Field(self.grid, self._values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return Field(self.grid, self._values - other.values)

    def __mul__(self, other):
        if isinstance(other, Field):
            _same_grid(self, other)
            return Field(self.grid, self._values * other.values)
        return Field(self.grid, self._values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self._values)

    def __repr__(self):
        return f"Field(n={self.grid.n_points}, L={self.grid.half_length:g})"


def _same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise IncompatibleGridError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True)
class MultiplierSymbol:
    """Samples ``m(xi_k)`` of a Fourier multiplier on one grid, in FFT order."""

    kind: str
    grid: Grid
    samples: np.ndarray = field(repr=False)
    params: tuple = ()

    def __mul__(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        if self.grid != other.grid:
            raise IncompatibleGridError("symbols live on different grids")
        return MultiplierSymbol(
            "custom", self.grid, self.samples * other.samples, ((self.kind, self.params), (other.kind, other.params))
        )

    @property
    def is_real_output(self) -> bool:
        """Hermitian symmetry ``m(-xi) = conj m(xi)``, with a real Nyquist entry."""
        s = self.samples
        n = self.grid.n_points
        mirrored = np.conj(s[(-np.arange(n)) % n])
        return bool(np.allclose(s, mirrored, rtol=0, atol=1e-14 * max(1.0, np.abs(s).max())))


def _abs_power(xi, s):
    out = np.abs(xi) ** s
    if s == 0:
        out[:] = 1.0
    return out


def riesz(grid: Grid, s: float) -> MultiplierSymbol:
    """``|xi|^s``; at ``xi = 0`` the value is 1 for ``s = 0`` and 0 otherwise.

    Negative ``s`` is allowed and maps the zero mode to 0 (inverse on
    mean-zero fields).
    """
    xi = grid.wavenumbers
    if s < 0:
        m = np.zeros_like(xi)
        nz = xi != 0
        m[nz] = np.abs(xi[nz]) ** s
    else:
        m = _abs_power(xi, s)
    return MultiplierSymbol("riesz", grid, m.astype(np.complex128), (float(s),))


def hilbert_symbol(grid: Grid) -> MultiplierSymbol:
    m = -1j * np.sign(grid.wavenumbers)
    m[grid.nyquist] = 0.0
    return MultiplierSymbol("hilbert", grid, m)


def derivative_symbol(grid: Grid, order: int = 1) -> MultiplierSymbol:
    if order < 0 or int(order) != order:
        raise ConfigurationError(f"derivative order must be a nonnegative integer, got {order}")
    m = (1j * grid.wavenumbers) ** int(order)
    if order % 2:
        m[grid.nyquist] = 0.0
    return MultiplierSymbol("derivative", grid, m.astype(np.complex128), (int(order),))


def bessel_symbol(grid: Grid, s: float) -> MultiplierSymbol:
    m = (1.0 + grid.wavenumbers**2) ** (0.5 * s)
    return MultiplierSymbol("bessel", grid, m.astype(np.complex128), (float(s),))


def dispersion_symbol(grid: Grid, alpha: float) -> MultiplierSymbol:
    """``i xi |xi|^alpha``, the symbol of ``D^alpha d/dx``."""
    xi = grid.wavenumbers
    m = 1j * xi * np.abs(xi) ** alpha
    m[grid.nyquist] = 0.0
    return MultiplierSymbol("dispersion", grid, m, (float(alpha),))


def combined_symbol(grid: Grid, *, order: int = 0, s: float = 0.0, hilbert: bool = False) -> MultiplierSymbol:
    """Single symbol for ``H^h d^order D^s``."""
    sym = derivative_symbol(grid, order) * riesz(grid, s)
    if hilbert:
        sym = sym * hilbert_symbol(grid)
    return sym


def apply_multiplier(f: Field, m: MultiplierSymbol) -> Field:
    if f.grid != m.grid:
        raise IncompatibleGridError(f"symbol grid {m.grid} does not match field grid {f.grid}")
    out = np.fft.ifft(m.samples * f.spectrum)
    # Real-output symbols leave only rounding noise in the imaginary part.
    return Field(f.grid, out.real)


def frac_deriv(f: Field, s: float) -> Field:
    return apply_multiplier(f, riesz(f.grid, s))


def hilbert(f: Field) -> Field:
    return apply_multiplier(f, hilbert_symbol(f.grid))


def bessel(f: Field, s: float) -> Field:
    return apply_multiplier(f, bessel_symbol(f.grid, s))


def x_derivative(f: Field, order: int = 1) -> Field:
    return apply_multiplier(f, derivative_symbol(f.grid, order))


def sobolev_norm(f: Field, s: float) -> float:
    """``||J^s f||_2`` by Parseval."""
    _check_finite(f.values)
    g = f.grid
    weights = (1.0 + g.wavenumbers**2) ** s
    total = np.sum(weights * np.abs(f.spectrum) ** 2) * g.spacing / g.n_points
    return float(np.sqrt(total))


def lp_norm(f: Field, p=2) -> float:
    _check_finite(f.values)
    v = f.values
    dx = f.grid.spacing
    if p == 1:
        return float(np.sum(np.abs(v)) * dx)
    if p == 2:
        return float(np.sqrt(np.sum(v * v) * dx))
    if p in (np.inf, "inf", float("inf")):
        return float(np.max(np.abs(v)))
    raise ConfigurationError(f"unsupported p={p!r}; use 1, 2 or inf")


def spectral_l2_squared(f: Field) -> float:
    """Squared L2 norm from the spectrum (the Parseval side)."""
    g = f.grid
    return float(np.sum(np.abs(f.spectrum) ** 2) * g.spacing / g.n_points)


def inner(f: Field, g: Field) -> float:
    _same_grid(f, g)
    return float(np.dot(f.values, g.values) * f.grid.spacing)


def boundary_fraction(f: Field, margin: float = 5.0) -> float:
    """Fraction of ``||f||_2^2`` living within ``margin`` of the box edges."""
    x = f.grid.x
    L = f.grid.half_length
    near = np.abs(x) >= L - margin
    total = np.sum(f.values**2)
    if total == 0:
        return 0.0
    return float(np.sum(f.values[near] ** 2) / total)
