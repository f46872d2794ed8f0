"""Parabolic geometry and Campanato/Holder seminorm machinery.

The metric is delta(X, Y) = max(|x - y|, |t - s|^(1/2)); its balls are the
parabolic cylinders Q_c(t0, x0) = (t0 - c^2, t0 + c^2) x B_c(x0).  Domains
are finite disjoint unions of axis-aligned space-time boxes, for which
cylinder intersection measures come out in closed form.  Seminorm suprema
over continua are estimated from finitely many sampled cylinders: reported
values are lower bounds of the true sup, and the fitted scaling exponent
across dyadic radii (not the sup itself) is the quantity experiments
assert on.

Pure computations over immutable inputs; per-cylinder work is independent
and the sup reductions are order-free.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .errors import (
    DimensionMismatch,
    RadiusExceedsDiameter,
    SamplingBudgetTooSmall,
    ThetaOutOfEmbeddingRange,
)


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class SpaceTimePoint:
    """A point X = (t, x) with x a spatial vector of length d."""

    t: float
    x: tuple

    def __init__(self, t: float, x):
        object.__setattr__(self, "t", float(t))
        xs = tuple(float(v) for v in np.atleast_1d(x))
        object.__setattr__(self, "x", xs)
        if not all(math.isfinite(v) for v in (self.t, *self.x)):
            raise ValueError("space-time point must have finite coordinates")

    @property
    def dim(self) -> int:
        return len(self.x)

    def x_array(self) -> np.ndarray:
        return np.array(self.x)


def parabolic_distance(t1, x1, t2, x2) -> np.ndarray | float:
    """max(|x - y|, |t - s|^(1/2)); vectorized over leading axes.

    x1, x2 may be scalars (d=1), 1-d arrays of batched d=1 coordinates when
    t is an array, or (n, d) arrays.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise DimensionMismatch(f"spatial shapes differ: {x1.shape} vs {x2.shape}")
    if x1.ndim >= 2:
        space = np.sqrt(((x1 - x2) ** 2).sum(axis=-1))
    else:
        space = np.abs(x1 - x2)
    out = np.maximum(space, np.sqrt(np.abs(t1 - t2)))
    return float(out) if out.ndim == 0 else out


def point_distance(X: SpaceTimePoint, Y: SpaceTimePoint) -> float:
    if X.dim != Y.dim:
        raise DimensionMismatch(f"dims differ: {X.dim} vs {Y.dim}")
    return float(parabolic_distance(X.t, X.x_array()[None, :], Y.t, Y.x_array()[None, :])[0])


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_c(X): the delta-ball of radius c centered at X."""

    center: SpaceTimePoint
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("cylinder radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.dim

    @property
    def measure(self) -> float:
        """Lebesgue measure 2 c^2 * omega_d * c^d."""
        c = self.radius
        return 2.0 * c * c * unit_ball_volume(self.dim) * c**self.dim

    def contains(self, t, x) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        c = self.radius
        x0 = self.center.x_array()
        if x.ndim == 1:
            x = x[:, None]
        sdist = np.sqrt(((x - x0[None, :]) ** 2).sum(axis=-1))
        return (np.abs(t - self.center.t) < c * c) & (sdist < c)


# --- box domains ---------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned space-time box (t0, t1) x prod_j (lo_j, hi_j)."""

    t0: float
    t1: float
    x_lo: tuple
    x_hi: tuple

    def __init__(self, t0, t1, x_lo, x_hi):
        object.__setattr__(self, "t0", float(t0))
        object.__setattr__(self, "t1", float(t1))
        object.__setattr__(self, "x_lo", tuple(float(v) for v in np.atleast_1d(x_lo)))
        object.__setattr__(self, "x_hi", tuple(float(v) for v in np.atleast_1d(x_hi)))
        if self.t1 <= self.t0:
            raise ValueError("box needs t1 > t0")
        if len(self.x_lo) != len(self.x_hi):
            raise DimensionMismatch("x_lo and x_hi lengths differ")
        if any(h <= l for l, h in zip(self.x_lo, self.x_hi)):
            raise ValueError("box needs x_hi > x_lo componentwise")

    @property
    def dim(self) -> int:
        return len(self.x_lo)

    @property
    def measure(self) -> float:
        vol = self.t1 - self.t0
        for lo, hi in zip(self.x_lo, self.x_hi):
            vol *= hi - lo
        return vol

    def contains(self, t, x) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        ok = (t >= self.t0) & (t <= self.t1)
        for j, (lo, hi) in enumerate(zip(self.x_lo, self.x_hi)):
            ok &= (x[..., j] >= lo) & (x[..., j] <= hi)
        return ok


def _disk_corner_area(r: float, x: float, y: float) -> float:
    """Area of {X^2 + Y^2 <= r^2, X <= x, Y <= y}."""
    if x <= -r or y <= -r:
        return 0.0
    x = min(x, r)
    y = min(y, r)

    def f1(u):
        # int_{-r}^{u} sqrt(r^2 - X^2) dX
        u = max(-r, min(u, r))
        return 0.5 * (u * math.sqrt(max(r * r - u * u, 0.0))
                      + r * r * math.asin(u / r)) + 0.25 * math.pi * r * r

    if y >= r:
        return 2.0 * f1(x)
    b = math.sqrt(max(r * r - y * y, 0.0))
    if y >= 0.0:
        # X <= -b: full chord 2w; -b < X < b: y + w; X >= b: 2w
        if x <= -b:
            return 2.0 * f1(x)
        area = 2.0 * f1(-b)
        xm = min(x, b)
        area += y * (xm + b) + (f1(xm) - f1(-b))
        if x > b:
            area += 2.0 * (f1(x) - f1(b))
        return area
    # y < 0: integrand (y + w) supported on |X| < b
    if x <= -b:
        return 0.0
    xm = min(x, b)
    return y * (xm + b) + (f1(xm) - f1(-b))


def disk_rect_area(cx: float, cy: float, r: float,
                   x0: float, x1: float, y0: float, y1: float) -> float:
    """Area of the disk B_r(cx, cy) intersected with [x0,x1] x [y0,y1]."""
    a = (_disk_corner_area(r, x1 - cx, y1 - cy)
         - _disk_corner_area(r, x0 - cx, y1 - cy)
         - _disk_corner_area(r, x1 - cx, y0 - cy)
         + _disk_corner_area(r, x0 - cx, y0 - cy))
    return max(a, 0.0)


@dataclass(frozen=True)
class DomainSpec:
    """Bounded domain: a finite union of pairwise-disjoint boxes."""

    boxes: tuple

    def __init__(self, boxes):
        boxes = tuple(boxes)
        if not boxes:
            raise ValueError("domain needs at least one box")
        dims = {b.dim for b in boxes}
        if len(dims) != 1:
            raise DimensionMismatch("boxes of mixed spatial dimension")
        for i, a in enumerate(boxes):
            for b in boxes[i + 1:]:
                t_ov = min(a.t1, b.t1) - max(a.t0, b.t0)
                x_ov = all(min(h1, h2) > max(l1, l2)
                           for l1, h1, l2, h2 in zip(a.x_lo, a.x_hi, b.x_lo, b.x_hi))
                if t_ov > 0 and x_ov:
                    raise ValueError("domain boxes must be pairwise disjoint")
        object.__setattr__(self, "boxes", boxes)

    @property
    def dim(self) -> int:
        return self.boxes[0].dim

    @property
    def measure(self) -> float:
        return sum(b.measure for b in self.boxes)

    @property
    def diameter(self) -> float:
        """Diameter in the parabolic metric."""
        t_lo = min(b.t0 for b in self.boxes)
        t_hi = max(b.t1 for b in self.boxes)
        best = math.sqrt(t_hi - t_lo)
        lo = np.array([min(b.x_lo[j] for b in self.boxes) for j in range(self.dim)])
        hi = np.array([max(b.x_hi[j] for b in self.boxes) for j in range(self.dim)])
        return max(best, float(np.linalg.norm(hi - lo)))

    def contains(self, t, x) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        ok = np.zeros(t.shape, dtype=bool)
        for b in self.boxes:
            ok |= b.contains(t, x)
        return ok

    def intersection_measure(self, cyl: ParabolicCylinder) -> float:
        """|D cap Q_c(X)|, closed form for every box."""
        if cyl.dim != self.dim:
            raise DimensionMismatch("cylinder and domain dims differ")
        c = cyl.radius
        t0, x0 = cyl.center.t, cyl.center.x_array()
        total = 0.0
        for b in self.boxes:
            t_ov = min(b.t1, t0 + c * c) - max(b.t0, t0 - c * c)
            if t_ov <= 0.0:
                continue
            if self.dim == 1:
                lo, hi = b.x_lo[0], b.x_hi[0]
                x_ov = min(hi, x0[0] + c) - max(lo, x0[0] - c)
                if x_ov <= 0.0:
                    continue
                total += t_ov * x_ov
            else:
                area = disk_rect_area(x0[0], x0[1], c,
                                      b.x_lo[0], b.x_hi[0], b.x_lo[1], b.x_hi[1])
                total += t_ov * area
        return total

    def intersection_measure_qmc(self, cyl: ParabolicCylinder, n: int = 65536) -> float:
        """Quasi-Monte Carlo fallback (Halton), ~1e-3 relative for smooth cuts."""
        from scipy.stats import qmc

        c = cyl.radius
        t0, x0 = cyl.center.t, cyl.center.x_array()
        sampler = qmc.Halton(d=1 + self.dim, scramble=False)
        u = sampler.random(n)
        ts = t0 - c * c + 2.0 * c * c * u[:, 0]
        xs = x0[None, :] - c + 2.0 * c * u[:, 1:]
        inside = self.contains(ts, xs) & cyl.contains(ts, xs)
        box_vol = 2.0 * c * c * (2.0 * c) ** self.dim
        return box_vol * inside.mean()

    def sample_points(self, rng: Generator, n: int):
        """Uniform points of the domain (boxes weighted by measure)."""
        weights = np.array([b.measure for b in self.boxes])
        weights /= weights.sum()
        counts = rng.multinomial(n, weights)
        ts, xs = [], []
        for b, k in zip(self.boxes, counts):
            if k == 0:
                continue
            ts.append(rng.uniform(b.t0, b.t1, k))
            xs.append(np.column_stack([
                rng.uniform(lo, hi, k) for lo, hi in zip(b.x_lo, b.x_hi)]))
        return np.concatenate(ts), np.vstack(xs)


def a_type_constant(domain: DomainSpec, centers, radii) -> float:
    """min over sampled (X, rho) of |D cap Q_rho(X)| / |Q_rho(X)|.

    A lower estimate of the domain's A-type constant.  Centers must lie in
    the domain and radii must not exceed its parabolic diameter.
    """
    diam = domain.diameter
    worst = 1.0
    for X in centers:
        if not domain.contains(np.array([X.t]), X.x_array()[None, :])[0]:
            raise ValueError(f"center {X} is not inside the domain")
        for rho in radii:
            if rho > diam:
                raise RadiusExceedsDiameter(f"rho={rho} exceeds diameter {diam}")
            cyl = ParabolicCylinder(X, rho)
            worst = min(worst, domain.intersection_measure(cyl) / cyl.measure)
    return worst


# --- seminorm reports -----------------------------------------------------

@dataclass
class SeminormReport:
    """Per-scale seminorm statistics and the fitted scaling exponent.

    per_scale holds the sup over sampled cylinder centers of the
    measure-normalized pairwise average (Campanato) or the max increment
    ratio (Holder).  fitted_theta comes from regressing the raw (not
    normalized) per-scale pairwise average against log |Q_c|; fitted_gamma
    is the Holder exponent implied by it (or fitted directly for Holder
    reports).
    """

    kind: str
    p: float
    parameter: float  # theta for campanato reports, alpha for holder
    scales: list
    per_scale: list
    per_scale_meandev: list | None = None
    raw_per_scale: list | None = None
    fitted_theta: float | None = None
    fitted_theta_stderr: float | None = None
    fitted_gamma: float | None = None
    fitted_gamma_stderr: float | None = None
    seminorm: float | None = None
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind,
            "p": self.p,
            "parameter": self.parameter,
            "scales": [float(s) for s in self.scales],
            "per_scale": [float(v) for v in self.per_scale],
            "per_scale_meandev": None if self.per_scale_meandev is None
            else [float(v) for v in self.per_scale_meandev],
            "raw_per_scale": None if self.raw_per_scale is None
            else [float(v) for v in self.raw_per_scale],
            "fitted_theta": self.fitted_theta,
            "fitted_theta_stderr": self.fitted_theta_stderr,
            "fitted_gamma": self.fitted_gamma,
            "fitted_gamma_stderr": self.fitted_gamma_stderr,
            "seminorm": self.seminorm,
            "notes": self.notes,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scale", "value", "raw_value"])
            raws = self.raw_per_scale or [float("nan")] * len(self.scales)
            for s, v, r in zip(self.scales, self.per_scale, raws):
                writer.writerow([repr(float(s)), repr(float(v)), repr(float(r))])


def _cylinder_samples(rng, domain: DomainSpec, cyl: ParabolicCylinder, budget: int):
    """Uniform points of D cap Q by rejection from the cylinder's box."""
    c = cyl.radius
    t0, x0 = cyl.center.t, cyl.center.x_array()
    ts_out, xs_out = [], []
    have = 0
    for _ in range(64):
        n_try = max(4 * (budget - have), 16)
        ts = rng.uniform(t0 - c * c, t0 + c * c, n_try)
        xs = x0[None, :] + rng.uniform(-c, c, (n_try, x0.size))
        keep = cyl.contains(ts, xs) & domain.contains(ts, xs)
        ts_out.append(ts[keep])
        xs_out.append(xs[keep])
        have += int(keep.sum())
        if have >= budget:
            break
    ts = np.concatenate(ts_out)[:budget]
    xs = np.vstack(xs_out)[:budget]
    return ts, xs


def _pairwise_mean(vals: np.ndarray, p: float) -> float:
    diff = np.abs(vals[:, None] - vals[None, :]) ** p
    return float(diff.mean())


def campanato_seminorm(u, domain: DomainSpec, p: float, theta: float,
                       scales=None, budget: int = 256, n_centers: int = 16,
                       seed: int = 0) -> SeminormReport:
    """Sampled Campanato seminorm of a deterministic space-time field.

    u is a callable u(ts, xs) -> values with ts (n,) and xs (n, d).  For
    each dyadic scale and each candidate center the mean-deviation form
    (1/|D cap Q|^theta) int |u - mean|^p and the dominating pairwise form
    (1/|D cap Q|^(1+theta)) int int |u(Y) - u(Z)|^p are estimated from a
    shared uniform sample, and the sup over centers is reported.  Centers
    refine toward the previous scale's maximizers so cusp-type fields keep
    their worst cylinders under shrinking scales.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if theta < 0.0:
        raise ValueError("theta must be >= 0")
    if budget < 64:
        raise SamplingBudgetTooSmall("need at least 64 points per cylinder")
    if scales is None:
        top = domain.diameter / 4.0
        scales = [top * 2.0**-k for k in range(5)]
    scales = sorted(scales, reverse=True)
    rng = Generator(Philox(key=[seed, 0xCA]))

    sup_pair, sup_dev, raw_pair = [], [], []
    carried = []
    for c in scales:
        ts, xs = domain.sample_points(rng, n_centers)
        candidates = [SpaceTimePoint(t, x) for t, x in zip(ts, xs)]
        for prev in carried:
            candidates.append(prev)
            jit_t = prev.t + rng.uniform(-c * c, c * c, 3)
            jit_x = prev.x_array()[None, :] + rng.uniform(-c, c, (3, domain.dim))
            keep = domain.contains(jit_t, jit_x)
            candidates.extend(SpaceTimePoint(t, x)
                              for t, x in zip(jit_t[keep], jit_x[keep]))
        best_pair, best_dev, best_raw = 0.0, 0.0, 0.0
        ranked = []
        for X in candidates:
            cyl = ParabolicCylinder(X, c)
            meas = domain.intersection_measure(cyl)
            if meas <= 0.0:
                continue
            pts_t, pts_x = _cylinder_samples(rng, domain, cyl, budget)
            if pts_t.size < budget // 2:
                continue
            vals = np.asarray(u(pts_t, pts_x), dtype=float)
            pw = _pairwise_mean(vals, p)
            dev = float(np.mean(np.abs(vals - vals.mean()) ** p))
            norm = meas ** (1.0 - theta)
            best_pair = max(best_pair, pw * norm)
            best_dev = max(best_dev, dev * norm)
            best_raw = max(best_raw, pw)
            ranked.append((pw, X))
        ranked.sort(key=lambda r: -r[0])
        carried = [X for _, X in ranked[:4]]
        sup_pair.append(best_pair)
        sup_dev.append(best_dev)
        raw_pair.append(best_raw)

    report = SeminormReport(
        kind="campanato", p=p, parameter=theta, scales=list(scales),
        per_scale=sup_pair, per_scale_meandev=sup_dev, raw_per_scale=raw_pair,
        seminorm=max(sup_pair) ** (1.0 / p) if sup_pair else None,
        notes={"budget": budget, "n_centers": n_centers,
               "pairwise_dominates_meandev": all(
                   pw >= dv * (1.0 - 1e-9) for pw, dv in zip(sup_pair, sup_dev))},
    )
    _attach_theta_fit(report, domain.dim)
    return report


def _attach_theta_fit(report: SeminormReport, dim: int) -> None:
    from .conditions import fit_exponent

    raw = report.raw_per_scale
    if raw is None or len(raw) < 4 or any(v <= 0 for v in raw):
        return
    cylinder_measures = [2.0 * c * c * unit_ball_volume(dim) * c**dim
                         for c in report.scales]
    fit = fit_exponent(list(zip(cylinder_measures, raw)))
    report.fitted_theta = 1.0 + fit.slope
    report.fitted_theta_stderr = fit.stderr
    report.fitted_gamma = (dim + 2.0) * fit.slope / report.p
    report.fitted_gamma_stderr = (dim + 2.0) * fit.stderr / report.p
    report.notes["theta_fit_decades"] = fit.value_decades


def campanato_from_pair_moments(groups, p: float, theta: float) -> SeminormReport:
    """Campanato report for a stochastic field from cylinder-grouped pair
    moments.

    groups is a list of (scale, cylinder_measure, mean_pair_moment) where
    mean_pair_moment approximates the double average of E|u(Y) - u(Z)|^p
    over the cylinder.  Within each scale the sup over cylinders is taken.
    """
    by_scale = {}
    for scale, meas, value in groups:
        norm = value * meas ** (1.0 - theta)
        cur = by_scale.setdefault(scale, {"sup": 0.0, "raw": 0.0})
        cur["sup"] = max(cur["sup"], norm)
        cur["raw"] = max(cur["raw"], value)
    scales = sorted(by_scale, reverse=True)
    report = SeminormReport(
        kind="campanato", p=p, parameter=theta, scales=list(scales),
        per_scale=[by_scale[s]["sup"] for s in scales],
        raw_per_scale=[by_scale[s]["raw"] for s in scales],
        seminorm=max(by_scale[s]["sup"] for s in scales) ** (1.0 / p),
    )
    return report


def holder_seminorm(u, domain: DomainSpec, alpha: float, budget: int = 256,
                    scales=None, seed: int = 0) -> SeminormReport:
    """Sampled Holder seminorm sup |u(X) - u(Y)| / delta(X, Y)^alpha.

    Pairs are drawn at controlled dyadic separations (pure-space and
    pure-time offsets from uniform base points); the reported value is the
    max ratio over all sampled pairs, a lower estimate of the sup.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if alpha > 1.0:
        warnings.warn("alpha > 1 requested: the seminorm vanishes for "
                      "differentiable fields; proceeding", stacklevel=2)
    if scales is None:
        top = domain.diameter / 4.0
        scales = [top * 2.0**-k for k in range(5)]
    scales = sorted(scales, reverse=True)
    rng = Generator(Philox(key=[seed, 0xB0]))

    best = 0.0
    per_scale, max_inc = [], []
    for c in scales:
        ts, xs = domain.sample_points(rng, budget)
        # pure-space partners
        direction = rng.normal(size=(budget, domain.dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        xs2 = xs + c * direction
        keep = domain.contains(ts, xs2)
        ratios, incs = [], []
        if np.any(keep):
            v1 = np.asarray(u(ts[keep], xs[keep]), dtype=float)
            v2 = np.asarray(u(ts[keep], xs2[keep]), dtype=float)
            d = parabolic_distance(ts[keep], xs[keep], ts[keep], xs2[keep])
            ratios.append(np.abs(v1 - v2) / d**alpha)
            incs.append(np.abs(v1 - v2))
        # pure-time partners
        ts2 = ts + c * c * rng.choice([-1.0, 1.0], budget)
        keep = domain.contains(ts2, xs)
        if np.any(keep):
            v1 = np.asarray(u(ts[keep], xs[keep]), dtype=float)
            v2 = np.asarray(u(ts2[keep], xs[keep]), dtype=float)
            d = parabolic_distance(ts[keep], xs[keep], ts2[keep], xs[keep])
            ratios.append(np.abs(v1 - v2) / d**alpha)
            incs.append(np.abs(v1 - v2))
        scale_best = float(np.max(np.concatenate(ratios))) if ratios else 0.0
        scale_inc = float(np.max(np.concatenate(incs))) if incs else 0.0
        per_scale.append(scale_best)
        max_inc.append(scale_inc)
        best = max(best, scale_best)

    report = SeminormReport(
        kind="holder", p=1.0, parameter=alpha, scales=list(scales),
        per_scale=per_scale, raw_per_scale=max_inc, seminorm=best,
        notes={"budget": budget},
    )
    from .conditions import fit_exponent

    if len(scales) >= 4 and all(v > 0 for v in max_inc):
        fit = fit_exponent(list(zip(scales, max_inc)))
        report.fitted_gamma = fit.slope
        report.fitted_gamma_stderr = fit.stderr
    return report


def embedding_exponent(p: float, theta: float, dim: int) -> float:
    """Holder exponent (d+2)(theta - 1)/p of the Campanato embedding.

    Valid for 1 < theta <= 1 + p/(d+2); the result lies in (0, 1].
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not 1.0 < theta <= 1.0 + p / (dim + 2.0):
        raise ThetaOutOfEmbeddingRange(
            f"theta={theta} outside (1, {1.0 + p / (dim + 2.0):.6g}]"
        )
    return (dim + 2.0) * (theta - 1.0) / p


def inclusion_holds(p: float, theta: float, q: float, sigma: float) -> bool:
    """Exponent test for the (q, sigma) Campanato family sitting inside the
    (p, theta) one on a bounded domain: true iff p <= q and
    (theta - 1)/p <= (sigma - 1)/q.

    The condition is the Holder-inequality threshold: the (p, theta)
    oscillation exponent may not exceed the (q, sigma) one, which under the
    embedding alpha = (d+2)(theta-1)/p is exactly alpha_p <= alpha_q.
    """
    if p < 1.0 or q < 1.0:
        raise ValueError("p and q must be >= 1")
    if theta < 0.0 or sigma < 0.0:
        raise ValueError("theta and sigma must be >= 0")
    return p <= q and (theta - 1.0) / p <= (sigma - 1.0) / q
