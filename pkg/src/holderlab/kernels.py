"""Heat-type convolution kernels evaluated exactly or spectrally.

The kernel family is the transition density p(t, x) of the semigroup
generated by -(-Laplace)^(alpha/2) on R^d, 0 < alpha <= 2, optionally with
a fractional spatial derivative of order epsilon >= 0 applied as the radial
Fourier multiplier |xi|^epsilon.  Evaluation is on a periodic box
[-L, L)^d with an FFT, so the spectral values are the periodization of the
free-space kernel; closed forms (Gaussian for alpha=2, Cauchy for alpha=1
in d=1) are available both free-space and periodized for cross-checks.

All functions are pure: they allocate their own work arrays and never
mutate their inputs, so concurrent evaluation across times is safe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .errors import (
    AliasingViolation,
    NonPositiveTime,
    UnsupportedClosedForm,
    UnsupportedOrder,
)

# exp(-ALIAS_LOG) = 1e-12: decay required of the symbol at the largest
# resolved frequency before truncating the Fourier integral.
ALIAS_LOG = -math.log(1e-12)

# Absolute floor below which spectral values are treated as noise in
# pointwise bound checks.
SPECTRAL_FLOOR = 1e-10

_CLOSED_FORMS = {(2.0, 0.0): "gauss", (1.0, 0.0): "cauchy"}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family parameters.

    alpha   : order of the generator, in (0, 2].
    epsilon : fractional derivative order applied as |xi|^epsilon, >= 0.
    dim     : spatial dimension (1 or 2).
    method  : "spectral" or "closed-form".
    """

    alpha: float
    epsilon: float = 0.0
    dim: int = 1
    method: str = "spectral"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.method not in ("spectral", "closed-form"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "closed-form" and not self.has_closed_form:
            raise UnsupportedClosedForm(
                "closed form only for (alpha=2, epsilon=0) and "
                f"(alpha=1, epsilon=0, dim=1); got {self}"
            )

    @property
    def has_closed_form(self) -> bool:
        key = (self.alpha, self.epsilon)
        if key == (2.0, 0.0):
            return True
        return key == (1.0, 0.0) and self.dim == 1


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic spatial lattice [-L, L)^d with n points per axis.

    The frequency lattice is the standard discrete Fourier dual: angular
    frequencies 2*pi*k/(2L) for k = -n/2, ..., n/2 - 1.
    """

    length: float
    points: int
    dim: int = 1

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError("box half-width must be positive")
        if self.points < 4 or self.points % 2:
            raise ValueError("points per axis must be even and >= 4")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")

    @property
    def spacing(self) -> float:
        return 2.0 * self.length / self.points

    @property
    def nyquist(self) -> float:
        """Largest resolved angular frequency along one axis."""
        return math.pi / self.spacing

    def axis(self) -> np.ndarray:
        """Spatial coordinates of one axis, ascending from -L."""
        return -self.length + self.spacing * np.arange(self.points)

    def meshgrid(self):
        """Spatial coordinate arrays, one per axis, ascending order."""
        axes = [self.axis()] * self.dim
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def radius(self) -> np.ndarray:
        """|x| on the full lattice (ascending order)."""
        if self.dim == 1:
            return np.abs(self.axis())
        x, y = self.meshgrid()
        return np.sqrt(x * x + y * y)

    def alias_ok(self, alpha: float, t: float) -> bool:
        """True when exp(-t |xi_max|^alpha) < 1e-12 on this lattice."""
        return t * self.nyquist**alpha >= ALIAS_LOG

    def require_alias(self, alpha: float, t: float) -> None:
        if not self.alias_ok(alpha, t):
            need = (ALIAS_LOG / t) ** (1.0 / alpha)
            raise AliasingViolation(
                f"grid resolves |xi| <= {self.nyquist:.4g} but t={t:.4g}, "
                f"alpha={alpha:.3g} needs |xi| >= {need:.4g}"
            )

    @classmethod
    def for_times(
        cls,
        alpha: float,
        dim: int,
        t_min: float,
        t_max: float | None = None,
        length: float | None = None,
        min_points: int = 64,
    ) -> "SpectralGrid":
        """Build a grid whose aliasing guard holds for every t >= t_min.

        The default box half-width 8*max(t_max^(1/alpha), 1) keeps the
        periodization wrap-around below the frequency-truncation error for
        the mass and central-region values; pass ``length`` to override
        (e.g. tight boxes proportional to t^(1/alpha) for heavy-tailed
        kernels at small times).
        """
        if t_min <= 0.0:
            raise NonPositiveTime("t_min must be positive")
        if t_max is None:
            t_max = t_min
        if length is None:
            length = 8.0 * max(t_max ** (1.0 / alpha), 1.0)
        xi_need = (ALIAS_LOG / t_min) ** (1.0 / alpha)
        n = max(min_points, math.ceil(2.0 * length * xi_need / math.pi))
        n = next_fast_len(n, real=True)
        if n % 2:
            n = next_fast_len(n + 1, real=True)
        return cls(length=length, points=n, dim=dim)


def _rfft_freqs(grid: SpectralGrid):
    """Angular frequency axes matching rfftn layout (last axis halved)."""
    n, h = grid.points, grid.spacing
    full = 2.0 * math.pi * np.fft.fftfreq(n, d=h)
    half = 2.0 * math.pi * np.fft.rfftfreq(n, d=h)
    if grid.dim == 1:
        return (half,)
    return (full, half)


def _freq_radius(grid: SpectralGrid) -> np.ndarray:
    freqs = _rfft_freqs(grid)
    if grid.dim == 1:
        return np.abs(freqs[0])
    fx, fy = freqs
    return np.sqrt(fx[:, None] ** 2 + fy[None, :] ** 2)


def symbol(spec: KernelSpec, grid: SpectralGrid, t: float) -> np.ndarray:
    """Fourier symbol |xi|^epsilon * exp(-t |xi|^alpha) on the rfft lattice."""
    r = _freq_radius(grid)
    sym = np.exp(-t * r**spec.alpha)
    if spec.epsilon > 0.0:
        sym = sym * r**spec.epsilon
    return sym


def _symmetrize(vals: np.ndarray) -> np.ndarray:
    """Project onto the even subspace: the exact transform of a real even
    symbol is even, but FFT roundoff breaks the reflection bitwise."""
    for ax in range(vals.ndim):
        sl = [slice(None)] * vals.ndim
        sl[ax] = slice(1, None)
        sub = vals[tuple(sl)]
        np.copyto(sub, 0.5 * (sub + np.flip(sub, axis=ax)))
    return vals


def _spectral_eval(spec: KernelSpec, grid: SpectralGrid, t: float) -> np.ndarray:
    sym = symbol(spec, grid, t)
    shape = (grid.points,) * grid.dim
    axes = tuple(range(grid.dim))
    vals = np.fft.irfftn(sym, s=shape, axes=axes) / grid.spacing**grid.dim
    return _symmetrize(np.fft.fftshift(vals))


def gaussian_kernel(t: float, r: np.ndarray, dim: int) -> np.ndarray:
    """Free-space Gaussian density (4 pi t)^(-d/2) exp(-|x|^2 / (4t))."""
    return (4.0 * math.pi * t) ** (-dim / 2.0) * np.exp(-(r * r) / (4.0 * t))


def cauchy_kernel(t: float, x: np.ndarray) -> np.ndarray:
    """Free-space Cauchy density t / (pi (t^2 + x^2)), d=1."""
    return t / (math.pi * (t * t + x * x))


def _closed_eval(spec: KernelSpec, grid: SpectralGrid, t: float) -> np.ndarray:
    kind = _CLOSED_FORMS.get((spec.alpha, spec.epsilon))
    if kind == "gauss":
        return gaussian_kernel(t, grid.radius(), spec.dim)
    if kind == "cauchy" and spec.dim == 1:
        return cauchy_kernel(t, grid.axis())
    raise UnsupportedClosedForm(f"no closed form for {spec}")


def eval_kernel(spec: KernelSpec, grid: SpectralGrid, t: float) -> np.ndarray:
    """Kernel values on the spatial lattice (coordinates ascending from -L).

    Spectral method returns the periodized kernel: the inverse discrete
    Fourier transform of the symbol, normalized so that
    sum(values) * h^d == symbol(0) (= 1 for epsilon = 0).
    """
    if t <= 0.0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    if spec.dim != grid.dim:
        raise ValueError(f"kernel dim {spec.dim} != grid dim {grid.dim}")
    if spec.method == "closed-form":
        if not spec.has_closed_form:
            raise UnsupportedClosedForm(f"no closed form for {spec}")
        return _closed_eval(spec, grid, t)
    grid.require_alias(spec.alpha, t)
    return _spectral_eval(spec, grid, t)


def eval_kernel_periodized(spec: KernelSpec, grid: SpectralGrid, t: float) -> np.ndarray:
    """Periodized closed form: sum of free-space images over the 2L lattice.

    Exact oracle for the spectral evaluation.  Gaussian images converge
    super-exponentially; the periodic Cauchy sum has the exact form
    (1/2L) sinh(pi t / L) / (cosh(pi t / L) - cos(pi x / L)).
    """
    if t <= 0.0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    kind = _CLOSED_FORMS.get((spec.alpha, spec.epsilon))
    period = 2.0 * grid.length
    if kind == "cauchy" and spec.dim == 1:
        x = grid.axis()
        a = 2.0 * math.pi * t / period
        b = 2.0 * math.pi * x / period
        return (1.0 / period) * np.sinh(a) / (np.cosh(a) - np.cos(b))
    if kind == "gauss":
        n_img = max(1, math.ceil(math.sqrt(4.0 * t * 46.0) / period) + 1)
        shifts = period * np.arange(-n_img, n_img + 1)
        if spec.dim == 1:
            x = grid.axis()
            total = np.zeros_like(x)
            for s in shifts:
                total += gaussian_kernel(t, np.abs(x + s), 1)
            return total
        x, y = grid.meshgrid()
        total = np.zeros((grid.points, grid.points))
        for sx in shifts:
            for sy in shifts:
                r = np.sqrt((x + sx) ** 2 + (y + sy) ** 2)
                total += gaussian_kernel(t, r, 2)
        return total
    raise UnsupportedClosedForm(f"no closed form for {spec}")


def eval_gradient_magnitude(spec: KernelSpec, grid: SpectralGrid, t: float) -> np.ndarray:
    """|grad_x p(t, x)| on the lattice, computed with i*xi_j multipliers.

    Requires epsilon = 0 (the gradient of the plain kernel).
    """
    if spec.epsilon != 0.0:
        raise UnsupportedOrder("gradient is defined for the epsilon=0 kernel")
    if t <= 0.0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    grid.require_alias(spec.alpha, t)
    n, h = grid.points, grid.spacing
    full = 2.0 * math.pi * np.fft.fftfreq(n, d=h)
    if grid.dim == 1:
        sym = np.exp(-t * np.abs(full) ** spec.alpha) * (1j * full)
        g = np.fft.ifft(sym).real / h
        return np.abs(np.fft.fftshift(g))
    fx, fy = full[:, None], full[None, :]
    r = np.sqrt(fx * fx + fy * fy)
    base = np.exp(-t * r**spec.alpha)
    gx = np.fft.ifftn(base * 1j * fx).real / h**2
    gy = np.fft.ifftn(base * 1j * fy).real / h**2
    return np.fft.fftshift(np.sqrt(gx * gx + gy * gy))


def stable_tail_bound(t: float, r: np.ndarray, dim: int, alpha: float) -> np.ndarray:
    """min(t / |x|^(d+alpha), t^(-d/alpha)): the two-sided envelope of the
    heavy-tailed kernel (alpha < 2)."""
    with np.errstate(divide="ignore"):
        tail = t / r ** (dim + alpha)
    return np.minimum(tail, t ** (-dim / alpha))


def stable_gradient_bound(t: float, r: np.ndarray, dim: int, alpha: float) -> np.ndarray:
    """|x| * min(t / |x|^(d+2+alpha), t^(-(d+2)/alpha)): envelope of |grad p|."""
    with np.errstate(divide="ignore"):
        tail = t / r ** (dim + 2 + alpha)
    return r * np.minimum(tail, t ** (-(dim + 2) / alpha))


@dataclass
class BoundReport:
    """Result of a pointwise envelope check."""

    min_ratio: float
    max_ratio: float
    c_tolerance: float
    n_points: int
    passed: bool
    region: str = ""


def check_sharp_bounds(
    spec: KernelSpec,
    grid: SpectralGrid,
    t: float,
    c_tolerance: float,
) -> BoundReport:
    """Check kernel values against the two-sided min(.,.) envelope.

    For epsilon = 0 the kernel itself is compared with
    min(t/|x|^(d+alpha), t^(-d/alpha)); for epsilon = 1 the gradient
    magnitude is compared with the first-derivative envelope.  The ratio
    is collected on the sub-lattice 0 < |x| <= L/2 (wrap-around suppressed)
    where the spectral value exceeds the 1e-10 accuracy floor, and the
    check passes when every ratio lies in [1/c, c].
    """
    if c_tolerance <= 1.0:
        raise ValueError("c_tolerance must exceed 1")
    if spec.epsilon not in (0.0, 1.0):
        raise UnsupportedOrder("pointwise envelopes available for epsilon in {0, 1}")
    if spec.alpha >= 2.0:
        raise UnsupportedOrder("the polynomial tail branch needs alpha < 2")
    r = grid.radius()
    if spec.epsilon == 0.0:
        vals = eval_kernel(KernelSpec(spec.alpha, 0.0, spec.dim), grid, t)
        bound = stable_tail_bound(t, r, spec.dim, spec.alpha)
    else:
        vals = eval_gradient_magnitude(KernelSpec(spec.alpha, 0.0, spec.dim), grid, t)
        bound = stable_gradient_bound(t, r, spec.dim, spec.alpha)
    mask = (r > 0) & (r <= grid.length / 2.0) & (np.abs(vals) > SPECTRAL_FLOOR)
    ratios = vals[mask] / bound[mask]
    lo, hi = float(ratios.min()), float(ratios.max())
    ok = (lo >= 1.0 / c_tolerance) and (hi <= c_tolerance)
    return BoundReport(
        min_ratio=lo,
        max_ratio=hi,
        c_tolerance=c_tolerance,
        n_points=int(mask.sum()),
        passed=ok,
        region=f"0 < |x| <= {grid.length / 2.0:g}, |p| > {SPECTRAL_FLOOR:g}",
    )


def lattice_mass(values: np.ndarray, grid: SpectralGrid) -> float:
    """Lattice integral sum(values) * h^d."""
    return float(values.sum() * grid.spacing**grid.dim)


def kernel_table_csv(spec: KernelSpec, grid: SpectralGrid, t: float, path) -> None:
    """Dump kernel values as CSV rows of (x-coordinates..., value)."""
    vals = eval_kernel(spec, grid, t)
    ax = grid.axis()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{i}" for i in range(grid.dim)] + ["value"]
        writer.writerow(header)
        if grid.dim == 1:
            for xi, v in zip(ax, vals):
                writer.writerow([repr(float(xi)), repr(float(v))])
        else:
            for i, xi in enumerate(ax):
                for j, yj in enumerate(ax):
                    writer.writerow([repr(float(xi)), repr(float(yj)), repr(float(vals[i, j]))])
