import numpy as np
import pytest

from edgepart.model import ChannelState, SystemConfig, TaskSpec, validate_instance


def make_instance(m, seed, rho=0.5, alpha=248.0, n_rb=100, big_r_range=(50e6, 100e6),
                  f_range=(2e10, 3e10), num_secondary=1):
    """Random instance with default-simulation-style parameter ranges.

    Kept independent of edgepart.channel so allocator tests do not rely on
    the scenario machinery they are not testing.
    """
    rng = np.random.default_rng(seed)
    tasks = [TaskSpec(b=float(rng.uniform(0.8e6, 1.2e6)), alpha=alpha) for _ in range(m)]
    channels = []
    for _ in range(m):
        r_p = float(rng.uniform(3e4, 1e6))
        ratio = float(rng.uniform(max(1e-3, rho - 0.05), min(1.0, rho + 0.05)))
        channels.append(ChannelState(
            r_p=r_p,
            r_s=tuple(ratio * r_p for _ in range(num_secondary)),
            big_r=float(rng.uniform(*big_r_range)),
        ))
    cfg = SystemConfig(
        n_rb=n_rb,
        f_p_total=float(rng.uniform(*f_range)),
        f_s_total=tuple(float(rng.uniform(*f_range)) for _ in range(num_secondary)),
    )
    return validate_instance(tasks, channels, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
