import numpy as np
import pytest

from edgepart.channel import (
    DEFAULT_MCS_TABLE,
    McsEntry,
    RHO_EPSILON,
    SCENARIO_NAMES,
    load_mcs_table,
    sample_trial,
    scenario_preset,
    snr_to_rate,
)
from edgepart.model import ValidationError, validate_instance


def test_snr_to_rate_top_entry():
    assert snr_to_rate(30.0, 180e3) == pytest.approx(180e3 * 5.5547)
    assert snr_to_rate(30.0, 180e3) == pytest.approx(999846.0)


def test_snr_to_rate_low_entry():
    assert snr_to_rate(0.2, 180e3) == pytest.approx(180e3 * 0.6016)
    assert snr_to_rate(0.2, 180e3) == pytest.approx(108288.0)


def test_snr_to_rate_below_table_floor():
    assert snr_to_rate(-40.0, 180e3) == pytest.approx(180e3 * 0.1523)


def test_snr_to_rate_monotone(rng):
    snr = rng.uniform(-10.0, 40.0, size=(2000, 2))
    lo = np.minimum(snr[:, 0], snr[:, 1])
    hi = np.maximum(snr[:, 0], snr[:, 1])
    assert np.all(snr_to_rate(lo, 180e3) <= snr_to_rate(hi, 180e3))


def test_snr_to_rate_image_bounds(rng):
    rates = snr_to_rate(rng.uniform(-50, 60, 5000), 180e3)
    assert rates.min() >= 180e3 * DEFAULT_MCS_TABLE[0].spectral_eff
    assert rates.max() <= 180e3 * DEFAULT_MCS_TABLE[-1].spectral_eff


def test_default_table_is_consistent():
    for entry in DEFAULT_MCS_TABLE:
        assert entry.spectral_eff == pytest.approx(
            {"QPSK": 2, "16QAM": 4, "64QAM": 6}[entry.modulation] * entry.code_rate,
            abs=5e-5,
        )


def test_mcs_table_override_roundtrip(tmp_path):
    path = tmp_path / "table.txt"
    path.write_text("# custom two-step table\n-5.0 0.5\n10.0 2.0\n")
    table = load_mcs_table(path)
    assert len(table) == 2
    assert snr_to_rate(0.0, 180e3, table) == pytest.approx(180e3 * 0.5)
    assert snr_to_rate(12.0, 180e3, table) == pytest.approx(180e3 * 2.0)


def test_mcs_table_override_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1.0 0.5 extra\n")
    with pytest.raises(ValidationError, match="line 1"):
        load_mcs_table(path)
    path.write_text("5.0 2.0\n-5.0 0.5\n")
    with pytest.raises(ValidationError, match="increasing"):
        load_mcs_table(path)


def test_mcs_entry_validation():
    with pytest.raises(ValidationError):
        McsEntry(0.0, "QPSK", 1.5, 1.0)
    with pytest.raises(ValidationError):
        McsEntry(0.0, "QPSK", 0.5, -1.0)


def test_scenario_preset_high_forwarding_rate():
    scen = scenario_preset("high_forwarding")
    assert scen.big_r_range == (1e9, 1e9)


def test_scenario_preset_comm_dominated_alpha():
    scen = scenario_preset("comm_dominated")
    assert scen.alpha_range == (45.0, 45.0)


def test_scenario_preset_custom_defaults():
    scen = scenario_preset("custom")
    assert scen.b_range == (0.8e6, 1.2e6)
    assert scen.alpha_range == (248.0, 248.0)
    assert scen.big_r_range == (50e6, 100e6)
    assert scen.f_p_range == (2e10, 3e10)
    assert scen.f_s_range == (2e10, 3e10)
    assert scen.n_rb == 100
    assert scen.snr_range_db == (0.0, 30.0)
    assert scen.rb_bandwidth_hz == 180e3


def test_scenario_preset_comp_dominated_capacities():
    scen = scenario_preset("comp_dominated")
    assert scen.f_p_range == (6e9, 10e9)
    assert scen.f_s_range == (6e9, 10e9)


def test_scenario_preset_limited_primary_ratio():
    scen = scenario_preset("limited_primary", m_ues=3, seed=5)
    assert scen.fp_fs_ratio == 0.2
    tasks, channels, cfg = sample_trial(scen, 0)
    assert cfg.f_p_total == pytest.approx(0.2 * cfg.f_s_total[0], rel=1e-15)


def test_scenario_preset_unknown_name():
    with pytest.raises(ValidationError, match="unknown scenario"):
        scenario_preset("warp_drive")


def test_scenario_names_all_buildable():
    for name in SCENARIO_NAMES:
        scenario_preset(name)


def test_sample_trial_deterministic():
    scen = scenario_preset("custom", m_ues=4, rho_mean=0.6, seed=99)
    a = sample_trial(scen, trial_index=7)
    b = sample_trial(scen, trial_index=7)
    assert a == b
    c = sample_trial(scen, trial_index=8)
    assert c != a


def test_sample_trial_rho_one_no_halfwidth():
    scen = scenario_preset("custom", m_ues=5, rho_mean=1.0, rho_halfwidth=0.0, seed=1)
    _, channels, _ = sample_trial(scen, 0)
    for chan in channels:
        assert chan.r_s[0] == chan.r_p


def test_sample_trial_validates():
    scen = scenario_preset("high_forwarding", m_ues=6, rho_mean=0.3, seed=3)
    tasks, channels, cfg = sample_trial(scen, 11)
    inst = validate_instance(tasks, channels, cfg)
    assert inst.num_ues == 6
    assert all(c.big_r == 1e9 for c in inst.channels)


def test_sample_trial_rho_bounds_and_mean():
    scen = scenario_preset("custom", m_ues=1, rho_mean=0.5, seed=13)
    ratios = []
    for k in range(10_000):
        _, channels, _ = sample_trial(scen, k)
        ratios.append(channels[0].r_s[0] / channels[0].r_p)
    ratios = np.array(ratios)
    assert ratios.min() >= 0.45 - 1e-12 and ratios.max() <= 0.55 + 1e-12
    assert abs(ratios.mean() - 0.5) <= 0.01


def test_sample_trial_tiny_rho_clamped():
    scen = scenario_preset("custom", m_ues=3, rho_mean=0.002, rho_halfwidth=0.05, seed=2)
    _, channels, _ = sample_trial(scen, 0)
    for chan in channels:
        assert chan.r_s[0] / chan.r_p >= RHO_EPSILON - 1e-15


def test_trial_streams_differ_without_state():
    # different indices give different draws even when generated out of order
    scen = scenario_preset("custom", m_ues=2, seed=0)
    later = sample_trial(scen, 1000)
    early = sample_trial(scen, 1)
    again_later = sample_trial(scen, 1000)
    assert later == again_later
    assert later != early


def test_scenario_config_validation():
    with pytest.raises(ValidationError):
        scenario_preset("custom", rho_mean=0.0)
    with pytest.raises(ValidationError):
        scenario_preset("custom", m_ues=0)
    with pytest.raises(ValidationError):
        scenario_preset("custom", b_range=(-1.0, 2.0))
