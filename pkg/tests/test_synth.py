import dataclasses

import numpy as np
import pytest

import usdr
from usdr import (
    AbruptConfig,
    CleanSpec,
    ConfigError,
    DegradationConfig,
    PCAConfig,
    build_plan,
    gen_abrupt,
    gen_degradation,
    health_profile,
    preset,
)
from usdr.refine import run_refinement
from usdr.synth import NOISE_LEVELS


def test_generation_is_deterministic():
    cfg = preset("abrupt-single", seed=9)
    a, b = gen_abrupt(cfg), gen_abrupt(cfg)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.labels, b.labels)
    da, db = gen_degradation(preset("degradation", seed=9)), gen_degradation(preset("degradation", seed=9))
    assert np.array_equal(da.inputs, db.inputs)
    assert np.array_equal(da.health, db.health)


def test_labels_follow_segments_only():
    cfg = AbruptConfig(n_features=3, segments=(("normal", 800), ("fault", 200)), shift=1.0)
    data = gen_abrupt(cfg)
    assert data.labels.mean() == 0.2
    assert data.labels[:800].sum() == 0 and data.labels[800:].sum() == 200
    other = gen_abrupt(dataclasses.replace(cfg, seed=123))
    assert np.array_equal(data.labels, other.labels)
    assert not np.array_equal(data.inputs, other.inputs)


@pytest.mark.parametrize(
    "name,contamination",
    [("fan-like", 0.29), ("pump-like", 0.12), ("slider-like", 0.25), ("valve-like", 0.11)],
)
def test_contamination_presets(name, contamination):
    data = gen_abrupt(preset(name, seed=1))
    assert data.n == 1000
    assert np.isclose(data.labels.mean(), contamination)


def test_preset_aliases_and_noise_levels():
    assert preset("miml-fan-like").segments == preset("fan-like").segments
    assert preset("MIMII-Pump-Like").segments == preset("pump-like").segments
    low, mid, high = (preset("abrupt-single", noise_level=lv) for lv in ("low", "mid", "high"))
    assert low.noise < mid.noise < high.noise
    assert low.shift > mid.shift > high.shift
    with pytest.raises(ConfigError):
        preset("abrupt-single", noise_level="silly")
    with pytest.raises(ConfigError):
        preset("nope")
    assert set(NOISE_LEVELS) == {"low", "mid", "high"}


def test_marginal_variance_matches_ar1_stationary_level():
    for difficulty in (0.0, 0.22):
        cfg = AbruptConfig(
            n_features=4, segments=(("normal", 6000),), shift=0.0, noise=2.0,
            ar_coeff=0.5, seed=11, difficulty_prob=difficulty,
        )
        data = gen_abrupt(cfg)
        expected = cfg.noise ** 2 / (1 - cfg.ar_coeff ** 2)
        got = data.inputs.var(axis=0)
        assert np.all(np.abs(got - expected) <= 0.1 * expected)


def test_fault_segments_shift_the_mean():
    cfg = AbruptConfig(
        n_features=6, segments=(("normal", 4000), ("fault", 4000)), shift=2.0,
        noise=1.0, ar_coeff=0.0, seed=2,
    )
    data = gen_abrupt(cfg)
    normal_mean = data.inputs[:4000].mean(axis=0)
    fault_mean = data.inputs[4000:].mean(axis=0)
    assert np.all(np.abs(np.abs(fault_mean - normal_mean) - 2.0) < 0.2)


def test_health_profile_counts_and_shape():
    cfg = DegradationConfig(n_features=2, n=1000, knee=0.2, effect=1.0)
    h = health_profile(cfg)
    assert (h == 1.0).sum() == 200
    assert h[-1] == 0.0
    # affine decline anchored at the last plateau sample
    decline = h[199:]
    assert np.allclose(np.diff(decline), np.diff(decline)[0])
    data = gen_degradation(cfg)
    assert np.array_equal(data.health, h)


def test_health_profile_exponential():
    cfg = DegradationConfig(n_features=2, n=500, knee=0.3, effect=1.0, shape="exponential")
    h = health_profile(cfg)
    assert (h == 1.0).sum() == 150
    assert h[-1] == 0.0
    decline = h[150:]
    assert np.all(np.diff(decline) < 0)
    # convex decay: drops fastest right after the knee
    assert decline[0] - decline[1] < 1e-2
    assert np.all(np.diff(np.diff(decline)) > 0)


def test_degradation_drifts_along_one_direction():
    cfg = DegradationConfig(n_features=8, n=2000, knee=0.2, effect=50.0, noise=0.5, seed=4)
    data = gen_degradation(cfg)
    drift = data.inputs[-50:].mean(axis=0) - data.inputs[:50].mean(axis=0)
    assert np.isclose(np.linalg.norm(drift), 50.0, rtol=0.1)


def test_effect_zero_no_method_tracks_degradation():
    cfg = dataclasses.replace(preset("degradation", seed=0), effect=0.0)
    data = gen_degradation(cfg)
    plan = build_plan(1000, 200, 50)
    res = run_refinement(
        data, plan, PCAConfig(k=5), base_seed=0, smooth_window=1,
        clean_spec=CleanSpec(mode="prefix", prefix_fraction=0.1),
    )
    target = usdr.degradation_target(data.health)
    for method, series in res.scores.items():
        assert usdr.rmse(series, target) >= 0.25, method


def test_clean_ap_weakly_increases_with_shift():
    plan = build_plan(1000, 200, 40)
    for seed in (0, 1):
        aps = []
        for shift in (0.8, 1.6, 3.2):
            cfg = dataclasses.replace(preset("abrupt-single", seed=seed), shift=shift)
            data = gen_abrupt(cfg)
            res = run_refinement(
                data, plan, PCAConfig(k=5), methods=("clean",), base_seed=seed,
                smooth_window=10, clean_spec=CleanSpec(mode="ensemble", mask=data.labels == 0),
            )
            aps.append(usdr.average_precision(res.scores["clean"], data.labels))
        assert aps[0] <= aps[1] + 1e-9 and aps[1] <= aps[2] + 1e-9


def test_config_validation():
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=0, segments=(("normal", 10),), shift=1.0)
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=2, segments=(), shift=1.0)
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=2, segments=(("fault", 10),), shift=1.0)
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=2, segments=(("weird", 10),), shift=1.0)
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=2, segments=(("normal", 10),), shift=-1.0)
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=2, segments=(("normal", 10),), shift=1.0, ar_coeff=1.0)
    with pytest.raises(ConfigError):
        AbruptConfig(n_features=2, segments=(("normal", 10),), shift=1.0, difficulty_prob=2.0)
    with pytest.raises(ConfigError):
        DegradationConfig(n_features=2, n=5, knee=0.2, effect=1.0)
    with pytest.raises(ConfigError):
        DegradationConfig(n_features=2, n=100, knee=1.2, effect=1.0)
    with pytest.raises(ConfigError):
        DegradationConfig(n_features=2, n=100, knee=0.2, effect=1.0, shape="windmill")
