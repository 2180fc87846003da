import numpy as np
import pytest
from scipy.stats import chisquare

from btspec import montecarlo as mc
from btspec import signal as sig
from btspec.errors import ConfigError


def test_zero_gradient_gives_unity():
    cfg = mc.WalkConfig(geometry="sphere", gbar=0.0, tbar=0.1, walkers=500,
                        dt=1e-3, seed=1)
    S, err = mc.mc_signal(cfg)
    assert S == 1.0 + 0.0j
    assert err == 0.0


def test_free_diffusion_gaussian_phase():
    # back-to-back PGSE in free space: S = exp(-(2/3) gbar^2 tbar^3)
    cfg = mc.WalkConfig(geometry="free", gbar=1.0, tbar=0.3, walkers=30000,
                        dt=1e-3, seed=7)
    S, err = mc.mc_signal(cfg)
    ref = np.exp(-(2.0 / 3.0) * 0.3**3)
    assert abs(S.real - ref) < 3 * err
    assert abs(S.imag) < 3 * err


def test_sphere_against_matrix_route(sphere60):
    m, B = sphere60
    ref = sig.signal_matrix(m, B, 2.0, 0.5)
    cfg = mc.WalkConfig(geometry="sphere", gbar=2.0, tbar=0.5, walkers=30000,
                        dt=1e-3, seed=11)
    S, err = mc.mc_signal(cfg)
    assert abs(S - ref) < 3 * err


def test_step_halving_weak_order():
    base = mc.WalkConfig(geometry="sphere", gbar=2.0, tbar=0.3, walkers=30000,
                         dt=1e-3, seed=21)
    fine = mc.WalkConfig(geometry="sphere", gbar=2.0, tbar=0.3, walkers=30000,
                         dt=5e-4, seed=22)
    S1, e1 = mc.mc_signal(base)
    S2, e2 = mc.mc_signal(fine)
    assert abs(S1 - S2) < 3 * np.sqrt(e1**2 + e2**2)


def test_reflected_positions_stay_inside_and_uniform():
    cfg = mc.WalkConfig(geometry="sphere", gbar=0.0, tbar=1.0, walkers=20000,
                        dt=1e-3, seed=3)
    rng = np.random.Generator(np.random.Philox(3))
    pos = mc._initial_positions(cfg, rng)
    for _ in range(400):
        new = pos + np.sqrt(2e-3) * rng.standard_normal(pos.shape)
        pos = mc._reflect(cfg, pos, new)
    r2 = np.sum(pos**2, axis=1)
    assert np.max(r2) <= 1.0 + 1e-12
    hist, _ = np.histogram(r2**1.5, bins=10, range=(0.0, 1.0))
    assert chisquare(hist).pvalue > 0.01


def test_cylinder_reflection_contains_walkers():
    cfg = mc.WalkConfig(geometry="cylinder", gbar=0.0, tbar=0.5, walkers=5000,
                        dt=1e-3, aspect=1.0, seed=9)
    rng = np.random.Generator(np.random.Philox(9))
    pos = mc._initial_positions(cfg, rng)
    for _ in range(300):
        new = pos + np.sqrt(2e-3) * rng.standard_normal(pos.shape)
        pos = mc._reflect(cfg, pos, new)
    assert np.max(pos[:, 0]**2 + pos[:, 1]**2) <= 1.0 + 1e-12
    assert np.max(np.abs(pos[:, 2])) <= 0.5 + 1e-12


def test_determinism():
    cfg = mc.WalkConfig(geometry="sphere", gbar=1.0, tbar=0.2, walkers=2000,
                        dt=1e-3, seed=42)
    a = mc.mc_signal(cfg)
    b = mc.mc_signal(cfg)
    assert a == b


def test_config_validation():
    with pytest.raises(ConfigError):
        mc.WalkConfig(geometry="cube", gbar=1.0, tbar=0.1)
    with pytest.raises(ConfigError):
        mc.WalkConfig(geometry="sphere", gbar=1.0, tbar=0.1, dt=0.01)  # too coarse
    with pytest.raises(ConfigError):
        mc.WalkConfig(geometry="sphere", gbar=1.0, tbar=0.1, walkers=0)
    with pytest.raises(ConfigError):
        mc.WalkConfig(geometry="sphere", gbar=1.0, tbar=0.1,
                      direction=(0.0, 0.0, 0.0))


def test_direction_normalized():
    cfg = mc.WalkConfig(geometry="sphere", gbar=1.0, tbar=0.1,
                        direction=(0.0, 0.0, 2.0))
    assert cfg.direction == (0.0, 0.0, 1.0)
