import math

import numpy as np
import pytest

from holderlab.noise import (
    JumpSpec,
    MarkLaw,
    NoiseSpec,
    compensated_ensemble,
    compensated_integral,
    compensated_path,
    compensator_integral,
    ito_ensemble,
    ito_integral,
    dump_path_csv,
    sample_path,
)

BROWNIAN = NoiseSpec(kind="brownian", horizon=1.0, steps=100, seed=2024)
POISSON = NoiseSpec(kind="poisson", horizon=2.0, steps=64, seed=2024,
                    jump=JumpSpec(intensity=5.0, mark=MarkLaw("two-sided-exponential", 1.0)))


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(kind="levy", horizon=1.0, steps=10)
    with pytest.raises(ValueError):
        NoiseSpec(kind="brownian", horizon=0.0, steps=10)
    with pytest.raises(ValueError):
        NoiseSpec(kind="brownian", horizon=1.0, steps=1)
    with pytest.raises(ValueError):
        NoiseSpec(kind="poisson", horizon=1.0, steps=10)  # no jump
    with pytest.raises(ValueError):
        JumpSpec(intensity=0.0)
    with pytest.raises(ValueError):
        MarkLaw("cauchy", 1.0)


def test_same_key_bit_identical():
    a = sample_path(BROWNIAN, 5)
    b = sample_path(BROWNIAN, 5)
    assert np.array_equal(a.increments, b.increments)
    c = sample_path(POISSON, 5)
    d = sample_path(POISSON, 5)
    assert np.array_equal(c.times, d.times)
    assert np.array_equal(c.marks, d.marks)


def test_streams_differ_and_decorrelate():
    a = sample_path(BROWNIAN, 0).increments
    b = sample_path(BROWNIAN, 1).increments
    assert not np.array_equal(a, b)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 3.0 / math.sqrt(len(a))


def test_brownian_increment_moments():
    M, n = 2000, 100
    dt = BROWNIAN.dt
    inc = np.stack([sample_path(BROWNIAN, m).increments for m in range(M)])
    mean = inc.mean()
    assert abs(mean) < 3.0 * math.sqrt(dt / (M * n))
    var = inc.var()
    assert abs(var - dt) < 3.0 * dt * math.sqrt(2.0 / (M * n))


def test_poisson_count_and_time_order():
    M = 2000
    lam_t = POISSON.jump.intensity * POISSON.horizon
    counts = np.array([sample_path(POISSON, m).times.size for m in range(M)])
    assert abs(counts.mean() - lam_t) < 3.0 * math.sqrt(lam_t / M)
    path = sample_path(POISSON, 3)
    assert np.all(np.diff(path.times) > 0)
    assert path.times[-1] <= POISSON.horizon


def test_mark_law_moments():
    law = MarkLaw("two-sided-exponential", 2.0)
    assert law.second_moment == pytest.approx(2.0 / 4.0)
    assert law.abs_moment(1.0) == pytest.approx(0.5)
    gauss = MarkLaw("gaussian", 1.5)
    assert gauss.second_moment == pytest.approx(2.25)
    rng = np.random.default_rng(0)
    z = law.sample(rng, 40000)
    assert abs((z**2).mean() - 0.5) < 3.0 * (z**2).std() / 200.0


def test_compensated_integral_zero_and_mean():
    path = sample_path(POISSON, 0)
    assert compensated_integral(path, lambda t, z: 0.0) == 0.0

    vals = compensated_ensemble(POISSON, lambda t, z: z, 4000)
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean()) < 3.0 * se


def test_compensated_integral_isometry():
    # E I^2 = T lambda E[z^2] for h = z
    vals = compensated_ensemble(POISSON, lambda t, z: z, 4000)
    target = POISSON.horizon * POISSON.jump.intensity * POISSON.jump.mark.second_moment
    sq = vals**2
    assert abs(sq.mean() - target) < 3.0 * sq.std() / math.sqrt(sq.size)


def test_compensated_integral_matches_ensemble_helper():
    h = lambda t, z: z * math.cos(t)
    one = compensated_integral(sample_path(POISSON, 17), h)
    many = compensated_ensemble(POISSON, lambda t, z: z * np.cos(t), 18, stream_offset=0)
    assert one == pytest.approx(many[17], rel=1e-10)


def test_compensator_quadrature_value():
    # h = z^2: compensator = lambda T E[z^2]
    comp = compensator_integral(lambda t, z: z * z, POISSON.horizon, POISSON.jump)
    assert comp == pytest.approx(POISSON.horizon * 5.0 * 2.0, rel=1e-6)


def test_ito_isometry():
    h = lambda t: np.cos(2.0 * math.pi * t)
    vals = ito_ensemble(BROWNIAN, h, 4000)
    # continuum oracle int_0^1 cos^2(2 pi t) dt = 1/2
    sq = vals**2
    assert abs(sq.mean() - 0.5) < 3.0 * sq.std() / math.sqrt(sq.size)
    single = ito_integral(sample_path(BROWNIAN, 7), lambda t: math.cos(2.0 * math.pi * t))
    assert single == pytest.approx(vals[7], rel=1e-10)


def test_kunita_moment_ratio_stable():
    # p = 4 bound: E sup |I|^4 <= N(4) [ (int int h^2 nu)^2 + int int h^4 nu ];
    # the constant is reported, and must be stable in the ensemble size
    lam, law = POISSON.jump.intensity, POISSON.jump.mark
    T = POISSON.horizon
    rhs = (T * lam * law.second_moment) ** 2 + T * lam * law.abs_moment(4.0)
    grid = np.linspace(0.0, T, 257)

    def sup_i4(M, offset):
        out = np.empty(M)
        for m in range(M):
            path = sample_path(POISSON, offset + m)
            csum = np.concatenate([[0.0], np.cumsum(path.marks)])
            jumps = csum[np.searchsorted(path.times, grid, side="right")]
            # h = z has zero mark mean: the compensator vanishes
            out[m] = np.max(np.abs(jumps)) ** 4
        return out.mean()

    r1 = sup_i4(800, 0) / rhs
    r2 = sup_i4(1600, 800) / rhs
    assert np.isfinite(r1) and np.isfinite(r2)
    assert abs(r1 - r2) / max(r1, r2) < 0.5


def test_compensated_path_on_grid():
    spec = NoiseSpec(kind="poisson", horizon=1.0, steps=16, seed=5,
                     jump=JumpSpec(intensity=3.0, mark=MarkLaw("gaussian", 1.0)))
    path = sample_path(spec, 0)
    grid = np.linspace(0.0, 1.0, 65)
    vals = compensated_path(path, lambda t, z: z * z, grid)
    # terminal value agrees with the scalar op
    total = compensated_integral(path, lambda t, z: z * z)
    assert vals[-1] == pytest.approx(total, rel=1e-3, abs=1e-3)
    assert vals[0] == pytest.approx(0.0, abs=1e-12)


def test_path_dump_csv(tmp_path):
    dump_path_csv(sample_path(BROWNIAN, 0), tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().strip().splitlines()
    assert lines[0] == "t,increment"
    assert len(lines) == BROWNIAN.steps + 1

    dump_path_csv(sample_path(POISSON, 0), tmp_path / "n.csv")
    lines = (tmp_path / "n.csv").read_text().strip().splitlines()
    assert lines[0] == "tau,mark"
