"""Seeded generation of the driving randomness.

Two kinds of paths: Brownian increments on a uniform time lattice, and
marked compound-Poisson event lists with their compensator description.
Paths are pure functions of (seed, stream_index) through the counter-based
Philox generator, so ensembles can be generated in any order or in
parallel and still reproduce bit-identically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.integrate import quad

from .errors import CompensatorQuadratureFailure


@dataclass(frozen=True)
class MarkLaw:
    """Named jump-size distribution on R with closed-form moments.

    families:
      two-sided-exponential(rate):  density (rate/2) exp(-rate |z|)
      gaussian(scale):              N(0, scale^2)
    Both have finite moments of every order, so any p-moment hypothesis on
    the mark factor holds.
    """

    family: str = "two-sided-exponential"
    parameter: float = 1.0

    def __post_init__(self):
        if self.family not in ("two-sided-exponential", "gaussian"):
            raise ValueError(f"unknown mark family {self.family!r}")
        if self.parameter <= 0.0:
            raise ValueError("mark law parameter must be positive")

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        if self.family == "two-sided-exponential":
            mag = rng.exponential(1.0 / self.parameter, size)
            sign = rng.integers(0, 2, size) * 2 - 1
            return mag * sign
        return rng.normal(0.0, self.parameter, size)

    def pdf(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.family == "two-sided-exponential":
            r = self.parameter
            return 0.5 * r * np.exp(-r * np.abs(z))
        s = self.parameter
        return np.exp(-0.5 * (z / s) ** 2) / (s * math.sqrt(2.0 * math.pi))

    def abs_moment(self, q: float) -> float:
        """E|z|^q."""
        if self.family == "two-sided-exponential":
            return math.gamma(q + 1.0) / self.parameter**q
        return self.parameter**q * 2.0 ** (q / 2.0) * math.gamma((q + 1.0) / 2.0) / math.sqrt(math.pi)

    @property
    def mean(self) -> float:
        return 0.0  # both families are symmetric

    @property
    def second_moment(self) -> float:
        return self.abs_moment(2.0)


@dataclass(frozen=True)
class JumpSpec:
    """Finite-activity jump measure nu = intensity * mark density."""

    intensity: float
    mark: MarkLaw = MarkLaw()

    def __post_init__(self):
        if self.intensity <= 0.0:
            raise ValueError("jump intensity must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    """Driving noise: kind, horizon, time steps, jump structure, seed."""

    kind: str
    horizon: float
    steps: int
    seed: int = 0
    jump: JumpSpec | None = None
    p0: float = 4.0

    def __post_init__(self):
        if self.kind not in ("brownian", "poisson"):
            raise ValueError(f"kind must be 'brownian' or 'poisson', got {self.kind!r}")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.steps < 2:
            raise ValueError("need at least 2 time steps")
        if self.kind == "poisson" and self.jump is None:
            raise ValueError("poisson noise needs a JumpSpec")
        if self.p0 <= 2.0:
            raise ValueError("p0 must exceed 2")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


@dataclass
class NoisePath:
    """One realization of the driving noise.

    Brownian: increments[i] over [t_i, t_{i+1}), variance dt each.
    Poisson: strictly increasing event times in (0, T] with i.i.d. marks,
    plus the compensator description (intensity, mark law) carried along.
    """

    kind: str
    horizon: float
    dt: float
    increments: np.ndarray | None = None
    times: np.ndarray | None = None
    marks: np.ndarray | None = None
    jump: JumpSpec | None = None


def _stream_rng(seed: int, stream_index: int) -> Generator:
    # Philox keys are two 64-bit words: (seed, stream) is the whole contract.
    return Generator(Philox(key=[seed % 2**64, stream_index % 2**64]))


def sample_path(spec: NoiseSpec, stream_index: int = 0) -> NoisePath:
    """Deterministic function of (spec.seed, stream_index).

    Distinct stream indices use distinct Philox keys and give statistically
    independent paths.
    """
    if stream_index < 0:
        raise ValueError("stream_index must be >= 0")
    rng = _stream_rng(spec.seed, stream_index)
    if spec.kind == "brownian":
        inc = rng.normal(0.0, math.sqrt(spec.dt), spec.steps)
        return NoisePath(kind="brownian", horizon=spec.horizon, dt=spec.dt, increments=inc)

    lam, T = spec.jump.intensity, spec.horizon
    block = max(4, int(lam * T + 6.0 * math.sqrt(lam * T) + 10))
    gaps = rng.exponential(1.0 / lam, block)
    times = np.cumsum(gaps)
    while times[-1] <= T:
        gaps = rng.exponential(1.0 / lam, block)
        times = np.concatenate([times, times[-1] + np.cumsum(gaps)])
    times = times[times <= T]
    marks = spec.jump.mark.sample(rng, times.size)
    return NoisePath(
        kind="poisson", horizon=spec.horizon, dt=spec.dt,
        times=times, marks=marks, jump=spec.jump,
    )


def _mark_average(h, t: float, law: MarkLaw) -> float:
    """int h(t, z) * mark density(z) dz by adaptive quadrature."""
    val, err = quad(lambda z: float(h(t, z)) * float(law.pdf(z)),
                    -np.inf, np.inf, limit=200)
    if not math.isfinite(val):
        raise CompensatorQuadratureFailure(f"mark integral not finite at t={t}")
    if err > 1e-6 * max(abs(val), 1.0):
        raise CompensatorQuadratureFailure(
            f"mark integral error {err:.2e} misses the 1e-6 relative target"
        )
    return val


def compensator_integral(h, horizon: float, jump: JumpSpec, n_time: int = 96) -> float:
    """lambda * int_0^T int h(t, z) rho(z) dz dt via Gauss-Legendre in time."""
    nodes, weights = np.polynomial.legendre.leggauss(n_time)
    ts = 0.5 * horizon * (nodes + 1.0)
    total = sum(w * _mark_average(h, t, jump.mark) for t, w in zip(ts, weights))
    value = jump.intensity * 0.5 * horizon * total
    if not math.isfinite(value):
        raise CompensatorQuadratureFailure("compensator quadrature not finite")
    return value


def compensated_integral(path: NoisePath, h) -> float:
    """Compensated Poisson integral of h over [0, T]:

        sum_k h(tau_k, z_k)  -  lambda int_0^T int h(t, z) rho(z) dz dt.

    h must accept scalar (t, z).  The compensator is computed by
    quadrature; a coarse/fine node-count comparison guards its accuracy.
    """
    if path.kind != "poisson":
        raise ValueError("compensated_integral needs a poisson path")
    jump_sum = float(sum(h(t, z) for t, z in zip(path.times, path.marks)))
    comp = compensator_integral(h, path.horizon, path.jump, n_time=96)
    check = compensator_integral(h, path.horizon, path.jump, n_time=64)
    # 1e-6 relative with an absolute floor so exactly-compensated (odd) h
    # does not trip on roundoff around zero
    if abs(comp - check) > 1e-6 * max(abs(comp), 1e-3):
        raise CompensatorQuadratureFailure(
            f"compensator unstable under node refinement: {comp} vs {check}"
        )
    return jump_sum - comp


def compensated_path(path: NoisePath, h, t_grid: np.ndarray) -> np.ndarray:
    """I(t) on a time grid: running jump sum minus running compensator."""
    if path.kind != "poisson":
        raise ValueError("compensated_path needs a poisson path")
    contributions = np.array([h(t, z) for t, z in zip(path.times, path.marks)])
    order = np.searchsorted(path.times, t_grid, side="right")
    csum = np.concatenate([[0.0], np.cumsum(contributions)])
    jump_part = csum[order]
    rate = np.array([_mark_average(h, t, path.jump.mark) for t in t_grid])
    rate *= path.jump.intensity
    comp = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t_grid))])
    return jump_part - comp


def ito_integral(path: NoisePath, h) -> float:
    """Left-endpoint Ito sum of a deterministic integrand h(t) against a
    Brownian path: sum_k h(t_k) dW_k."""
    if path.kind != "brownian":
        raise ValueError("ito_integral needs a brownian path")
    n = path.increments.size
    t = path.dt * np.arange(n)
    hv = np.array([h(tk) for tk in t], dtype=float)
    return float(hv @ path.increments)


def ito_ensemble(spec: NoiseSpec, h, M: int, stream_offset: int = 0) -> np.ndarray:
    """Ito sums of a deterministic integrand over M independent paths."""
    t = spec.dt * np.arange(spec.steps)
    hv = np.asarray(h(t), dtype=float)
    out = np.empty(M)
    for m in range(M):
        out[m] = hv @ sample_path(spec, stream_offset + m).increments
    return out


def compensated_ensemble(spec: NoiseSpec, h, M: int, stream_offset: int = 0) -> np.ndarray:
    """Compensated integrals I(T) over M independent Poisson paths.

    h(t, z) must broadcast over numpy arrays.  The compensator is shared
    across paths, so it is computed (and refinement-checked) once.
    """
    if spec.kind != "poisson":
        raise ValueError("compensated_ensemble needs poisson noise")
    comp = compensator_integral(h, spec.horizon, spec.jump, n_time=96)
    check = compensator_integral(h, spec.horizon, spec.jump, n_time=64)
    if abs(comp - check) > 1e-6 * max(abs(comp), 1e-3):
        raise CompensatorQuadratureFailure(
            f"compensator unstable under node refinement: {comp} vs {check}")
    out = np.empty(M)
    for m in range(M):
        path = sample_path(spec, stream_offset + m)
        vals = np.asarray(h(path.times, path.marks), dtype=float)
        out[m] = vals.sum() - comp
    return out


def dump_path_csv(path: NoisePath, out) -> None:
    """Debug dump: (t, increment) for Brownian, (tau, mark) for Poisson."""
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if path.kind == "brownian":
            writer.writerow(["t", "increment"])
            for i, dw in enumerate(path.increments):
                writer.writerow([repr(i * path.dt), repr(float(dw))])
        else:
            writer.writerow(["tau", "mark"])
            for t, z in zip(path.times, path.marks):
                writer.writerow([repr(float(t)), repr(float(z))])
