import dataclasses

import numpy as np
import pytest
from scipy import stats

from nomaedge import GenSpec, Scenario, ScenarioError, TrainingParams, generate, load, save

TABLE_DEFAULTS = GenSpec(seed=0)


def test_same_seed_same_scenario():
    a = generate(GenSpec(seed=1234))
    b = generate(GenSpec(seed=1234))
    assert np.array_equal(a.gains, b.gains)
    assert np.array_equal(a.dataset_bits, b.dataset_bits)
    assert np.array_equal(a.sample_counts, b.sample_counts)


def test_different_seeds_differ():
    matrices = [generate(GenSpec(seed=seed)).gains.tobytes() for seed in range(100)]
    assert len(set(matrices)) == 100


def test_scenarios_nest_across_sizes():
    # Per-device substreams: smaller instances are prefixes of larger ones,
    # so sweeps over device or channel count compare nested draws.
    big = generate(GenSpec(seed=7, num_devices=10, num_channels=16))
    small_m = generate(GenSpec(seed=7, num_devices=4, num_channels=16))
    assert np.array_equal(big.gains[:4], small_m.gains)
    assert np.array_equal(big.dataset_bits[:4], small_m.dataset_bits)
    small_n = generate(GenSpec(seed=7, num_devices=10, num_channels=3))
    assert np.array_equal(big.gains[:, :3], small_n.gains)
    assert np.array_equal(big.dataset_bits, small_n.dataset_bits)


def test_gains_log_uniform_over_range():
    spec = GenSpec(seed=99, num_devices=1000, num_channels=10)
    gains = generate(spec).gains.ravel()
    assert gains.min() >= spec.h_min and gains.max() <= spec.h_max
    span = np.log(spec.h_max) - np.log(spec.h_min)
    statistic, _ = stats.kstest(np.log(gains), "uniform",
                                args=(np.log(spec.h_min), span))
    assert statistic < 0.02


def test_dataset_size_mean_matches_default():
    spec = GenSpec(seed=5, num_devices=10000, num_channels=1)
    bits = generate(spec).dataset_bits
    assert abs(bits.mean() - spec.mean_dataset_bits) < 0.02 * spec.mean_dataset_bits


def test_sample_counts_track_bits():
    s = generate(GenSpec(seed=3, num_devices=50))
    residual = np.abs(s.sample_counts * 1800.0 - s.dataset_bits)
    assert (residual <= 900.0).all()
    assert (s.sample_counts >= 1).all()


def test_generated_scenarios_always_validate():
    rng = np.random.default_rng(17)
    for _ in range(50):
        spec = GenSpec(seed=int(rng.integers(0, 2**63)),
                       num_devices=int(rng.integers(1, 12)),
                       num_channels=int(rng.integers(1, 17)))
        generate(spec).validate()


def test_genspec_validation():
    with pytest.raises(ScenarioError):
        generate(GenSpec(seed=0, h_min=0.0))
    with pytest.raises(ScenarioError):
        generate(GenSpec(seed=0, h_min=0.5, h_max=0.1))
    with pytest.raises(ScenarioError):
        generate(GenSpec(seed=0, num_devices=0))
    with pytest.raises(ScenarioError):
        generate(GenSpec(seed=-1))


def test_scenario_validation_names_fields():
    s = generate(GenSpec(seed=1))
    bad = dataclasses.replace(s, gains=-s.gains)
    with pytest.raises(ScenarioError, match="gains"):
        bad.validate()
    bad = dataclasses.replace(s, powers=s.powers[:, :2])
    with pytest.raises(ScenarioError, match="powers"):
        bad.validate()
    bad = dataclasses.replace(s, training=TrainingParams(sigma=1.0))
    with pytest.raises(ScenarioError, match="sigma"):
        bad.validate()
    bad = dataclasses.replace(s, noise_w=0.0)
    with pytest.raises(ScenarioError, match="noise_w"):
        bad.validate()


def test_save_load_round_trip(tmp_path):
    s = generate(GenSpec(seed=11, num_devices=4, num_channels=3)).with_deadline(0.75)
    path = tmp_path / "instance.scn"
    save(s, path)
    loaded = load(path)
    assert np.array_equal(loaded.gains, s.gains)
    assert np.array_equal(loaded.powers, s.powers)
    assert np.array_equal(loaded.dataset_bits, s.dataset_bits)
    assert np.array_equal(loaded.sample_counts, s.sample_counts)
    assert loaded.deadline_s == s.deadline_s
    assert loaded.bandwidth_hz == s.bandwidth_hz
    assert loaded.training == s.training


def test_load_fixture_exact_matrices():
    loaded = load("tests/data/tiny2x2.scn")
    assert loaded.gains.tolist() == [[0.035, 1e-09], [0.0035, 1e-09]]
    assert loaded.powers.tolist() == [[0.1, 0.1], [0.1, 0.1]]
    assert loaded.dataset_bits.tolist() == [14400000.0, 7200000.0]
    assert loaded.sample_counts.tolist() == [8000, 4000]
    assert loaded.deadline_s is None


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "broken.scn"
    path.write_text("[radio]\nbandwidth_hz = 5e6\nnoise_w oops\n")
    with pytest.raises(ScenarioError, match="line 3"):
        load(path)
    good = open("tests/data/tiny2x2.scn").read()
    ragged = good.replace("0.0035 1e-09", "0.0035")
    path.write_text(ragged)
    lineno = ragged.splitlines().index("0.0035") + 1
    with pytest.raises(ScenarioError, match=f"line {lineno}"):
        load(path)


def test_load_rejects_negative_gain(tmp_path):
    s = generate(GenSpec(seed=2, num_devices=2, num_channels=2))
    path = tmp_path / "neg.scn"
    save(s, path)
    text = path.read_text().replace(repr(float(s.gains[0, 0])),
                                    repr(-float(s.gains[0, 0])))
    path.write_text(text)
    with pytest.raises(ScenarioError, match="gains"):
        load(path)


def test_load_missing_section(tmp_path):
    path = tmp_path / "missing.scn"
    path.write_text("[radio]\nbandwidth_hz = 5e6\nnoise_w = 1e-10\npower_w = 0.1\n")
    with pytest.raises(ScenarioError, match="training"):
        load(path)


def test_scalar_power_key(tmp_path):
    path = tmp_path / "scalar.scn"
    path.write_text("""
[radio]
bandwidth_hz = 5e6
noise_w = 1e-10
power_w = 0.25

[training]
batch_size = 100
compute_rate = 1000
alpha = 1e6
sigma = 1.2
round_cap = 1000

[devices]
dataset_bits = 1e7 2e7
sample_counts = 5555 11111

[gains]
0.01 0.02
0.03 0.004
""")
    loaded = load(path)
    assert (loaded.powers == 0.25).all()
