"""Monte Carlo p-moment estimates E|u(X) - u(Y)|^p over sampled point pairs.

Pair subsampling replaces the full double integral over a cylinder by
uniform pairs (unbiased for the pairwise average); the dyadic-lag rule
places pairs at controlled parabolic separations for scaling fits.
Everything is read-only over the ensemble, so per-pair estimation is free
to run concurrently; outputs are assembled in pair order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .campanato import ParabolicCylinder, parabolic_distance
from .convolution import FieldEnsemble
from .errors import EmptyCylinder, EmptyRequest, EnsembleTooSmall, PairOffGrid

MIN_ENSEMBLE = 30


@dataclass
class PairSet:
    """Space-time point pairs addressed by ensemble lattice indices.

    time index = position on the full time lattice (units of dt);
    space index = flattened position in the ascending spatial lattice.
    delta is the parabolic distance of each pair, requested_delta the
    target lag for dyadic-lag sampling (NaN for within-cylinder pairs).
    """

    t_idx1: np.ndarray
    s_idx1: np.ndarray
    t_idx2: np.ndarray
    s_idx2: np.ndarray
    t1: np.ndarray
    x1: np.ndarray  # (n, d)
    t2: np.ndarray
    x2: np.ndarray
    delta: np.ndarray
    requested_delta: np.ndarray

    @property
    def size(self) -> int:
        return self.t_idx1.size

    def swapped(self) -> "PairSet":
        return PairSet(self.t_idx2, self.s_idx2, self.t_idx1, self.s_idx1,
                       self.t2, self.x2, self.t1, self.x1,
                       self.delta, self.requested_delta)


@dataclass
class MomentField:
    """Per-pair moment estimates with Monte Carlo standard errors."""

    p: float
    pairs: PairSet
    estimates: np.ndarray
    stderr: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "s", "y", "delta", "estimate", "stderr"])
            for i in range(self.pairs.size):
                writer.writerow([
                    repr(float(self.pairs.t1[i])),
                    ";".join(repr(float(v)) for v in np.atleast_1d(self.pairs.x1[i])),
                    repr(float(self.pairs.t2[i])),
                    ";".join(repr(float(v)) for v in np.atleast_1d(self.pairs.x2[i])),
                    repr(float(self.pairs.delta[i])),
                    repr(float(self.estimates[i])),
                    repr(float(self.stderr[i])),
                ])

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "delta": [float(v) for v in self.pairs.delta],
            "requested_delta": [float(v) for v in self.pairs.requested_delta],
            "estimate": [float(v) for v in self.estimates],
            "stderr": [float(v) for v in self.stderr],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _lattice_coords(ensemble: FieldEnsemble):
    ax = ensemble.grid.axis()
    if ensemble.grid.dim == 1:
        return ax[:, None]
    x, y = np.meshgrid(ax, ax, indexing="ij")
    return np.column_stack([x.ravel(), y.ravel()])


def estimate_pair_moments(ensemble: FieldEnsemble, pairs: PairSet, p: float) -> MomentField:
    """(1/M) sum_m |u_m(X) - u_m(Y)|^p per pair, with standard errors.

    Deterministic given the ensemble; symmetric in the pair order.
    """
    if p < 1.0:
        raise ValueError("moment order p must be >= 1")
    M = ensemble.n_realizations
    if M < MIN_ENSEMBLE:
        raise EnsembleTooSmall(f"need M >= {MIN_ENSEMBLE}, got {M}")
    vals = ensemble.values.reshape(M, ensemble.time_indices.size, -1)
    n_space = vals.shape[2]

    def positions(t_idx, s_idx):
        pos = np.empty(t_idx.size, dtype=int)
        for n, i in enumerate(t_idx):
            pos[n] = ensemble.time_position(int(i))
        if np.any(s_idx < 0) or np.any(s_idx >= n_space):
            raise PairOffGrid("spatial index outside the lattice")
        return pos

    pos1 = positions(pairs.t_idx1, pairs.s_idx1)
    pos2 = positions(pairs.t_idx2, pairs.s_idx2)
    diff = (vals[:, pos1, pairs.s_idx1].astype(np.float64)
            - vals[:, pos2, pairs.s_idx2].astype(np.float64))
    powed = np.abs(diff) ** p
    est = powed.mean(axis=0)
    err = powed.std(axis=0, ddof=1) / np.sqrt(M)
    return MomentField(p=p, pairs=pairs, estimates=est, stderr=err)


def _interior_time_range(ensemble: FieldEnsemble):
    idx = np.sort(ensemble.time_indices)
    return idx[0], idx[-1]


def sample_pairs_within_cylinder(ensemble: FieldEnsemble, cylinder: ParabolicCylinder,
                                 count: int, seed: int = 0) -> PairSet:
    """Uniform independent pairs of lattice points inside a cylinder.

    Both members are drawn uniformly from the saved lattice points lying in
    (t0 - c^2, t0 + c^2) x B_c(x0).
    """
    if count < 1:
        raise EmptyRequest("count must be >= 1")
    t0, x0, c = cylinder.center.t, np.atleast_1d(cylinder.center.x), cylinder.radius
    times = ensemble.times
    ok_t = np.nonzero(np.abs(times - t0) < c * c)[0]
    coords = _lattice_coords(ensemble)
    dist = np.sqrt(((coords - x0[None, :]) ** 2).sum(axis=1))
    ok_x = np.nonzero(dist < c)[0]
    if ok_t.size == 0 or ok_x.size == 0:
        raise EmptyCylinder(f"no saved lattice points inside {cylinder}")
    rng = Generator(Philox(key=[seed, 0xC1]))
    ti = ensemble.time_indices[rng.choice(ok_t, 2 * count)]
    xi = rng.choice(ok_x, 2 * count)
    t_idx1, t_idx2 = ti[:count], ti[count:]
    s_idx1, s_idx2 = xi[:count], xi[count:]
    t1, t2 = t_idx1 * ensemble.dt, t_idx2 * ensemble.dt
    x1, x2 = coords[s_idx1], coords[s_idx2]
    delta = parabolic_distance(t1, x1, t2, x2)
    return PairSet(t_idx1, s_idx1, t_idx2, s_idx2, t1, x1, t2, x2,
                   delta, np.full(count, np.nan))


def sample_pairs_dyadic(ensemble: FieldEnsemble, lags, count: int, seed: int = 0,
                        base_time_index: int | None = None,
                        center_fraction: float = 0.5) -> PairSet:
    """Pairs at controlled parabolic lags.

    For each lag delta, half the pairs are pure-time (same x, t separation
    snapped to round(delta^2/dt) steps) and half pure-space (same t,
    |x - y| snapped to round(delta/h) lattice spacings).  Base points are
    drawn from the central ``center_fraction`` of the box and from saved
    times that keep the partner on the saved lattice.  Achieved deltas are
    recorded next to the requested ones.
    """
    if count < 1:
        raise EmptyRequest("count must be >= 1")
    dt, h = ensemble.dt, ensemble.grid.spacing
    n = ensemble.grid.points
    dim = ensemble.grid.dim
    rng = Generator(Philox(key=[seed, 0xD7]))
    saved = set(int(i) for i in ensemble.time_indices)
    coords = _lattice_coords(ensemble)

    rows = {k: [] for k in ("ti1", "si1", "ti2", "si2", "req")}

    def central_indices():
        lo = int(n * (0.5 - center_fraction / 2.0))
        hi = int(n * (0.5 + center_fraction / 2.0))
        return lo, hi

    lo, hi = central_indices()
    for lag in lags:
        steps = max(1, round(lag * lag / dt))
        spacings = max(1, round(lag / h))
        time_bases = [i for i in sorted(saved) if (i + steps) in saved]
        n_time = count // 2
        n_space = count - n_time
        if time_bases:
            for _ in range(n_time):
                i = int(rng.choice(time_bases))
                if dim == 1:
                    j = int(rng.integers(lo, hi))
                else:
                    j = int(rng.integers(lo, hi)) * n + int(rng.integers(lo, hi))
                rows["ti1"].append(i)
                rows["si1"].append(j)
                rows["ti2"].append(i + steps)
                rows["si2"].append(j)
                rows["req"].append(lag)
        else:
            n_space = count
        for _ in range(n_space):
            i = int(rng.choice(sorted(saved)))
            if dim == 1:
                j = int(rng.integers(lo, hi - spacings))
                j2 = j + spacings
            else:
                jx = int(rng.integers(lo, hi - spacings))
                jy = int(rng.integers(lo, hi))
                j = jx * n + jy
                j2 = (jx + spacings) * n + jy
            rows["ti1"].append(i)
            rows["si1"].append(j)
            rows["ti2"].append(i)
            rows["si2"].append(j2)
            rows["req"].append(lag)

    ti1 = np.array(rows["ti1"], dtype=int)
    si1 = np.array(rows["si1"], dtype=int)
    ti2 = np.array(rows["ti2"], dtype=int)
    si2 = np.array(rows["si2"], dtype=int)
    t1, t2 = ti1 * dt, ti2 * dt
    x1, x2 = coords[si1], coords[si2]
    delta = parabolic_distance(t1, x1, t2, x2)
    return PairSet(ti1, si1, ti2, si2, t1, x1, t2, x2, delta,
                   np.array(rows["req"], dtype=float))


def sample_pairs(ensemble: FieldEnsemble, rule: str, count: int, seed: int = 0,
                 cylinder: ParabolicCylinder | None = None, lags=None, **kw) -> PairSet:
    """Dispatch on the sampling rule: "within-cylinder" or "dyadic-lag"."""
    if rule == "within-cylinder":
        if cylinder is None:
            raise ValueError("within-cylinder rule needs a cylinder")
        return sample_pairs_within_cylinder(ensemble, cylinder, count, seed)
    if rule == "dyadic-lag":
        if lags is None:
            raise ValueError("dyadic-lag rule needs lags")
        return sample_pairs_dyadic(ensemble, lags, count, seed, **kw)
    raise ValueError(f"unknown pair sampling rule {rule!r}")
