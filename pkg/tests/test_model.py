import pytest

from edgepart.model import (
    Allocation,
    ChannelState,
    LatencyReport,
    PartitionDecision,
    SystemConfig,
    TaskSpec,
    ValidationError,
    validate_instance,
)


def test_minimal_valid_instance():
    inst = validate_instance(
        [TaskSpec(b=1e6, alpha=248.0, beta=1.0)],
        [ChannelState(r_p=1e6, r_s=(5e5,), big_r=75e6)],
        SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,)),
    )
    assert inst.num_ues == 1
    assert inst.tasks[0].beta == 1.0


def test_uniform_beta_fill():
    tasks = [TaskSpec(b=1e6, alpha=248.0) for _ in range(4)]
    chans = [ChannelState(r_p=1e6, r_s=(5e5,), big_r=75e6) for _ in range(4)]
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    inst = validate_instance(tasks, chans, cfg)
    assert all(t.beta == 0.25 for t in inst.tasks)


def test_beta_sum_rejected():
    tasks = [TaskSpec(b=1e6, alpha=248.0, beta=0.5), TaskSpec(b=1e6, alpha=248.0, beta=0.6)]
    chans = [ChannelState(r_p=1e6, r_s=(5e5,), big_r=75e6) for _ in range(2)]
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    with pytest.raises(ValidationError, match="beta sum"):
        validate_instance(tasks, chans, cfg)


def test_partial_beta_rejected():
    tasks = [TaskSpec(b=1e6, alpha=248.0, beta=0.5), TaskSpec(b=1e6, alpha=248.0)]
    chans = [ChannelState(r_p=1e6, r_s=(5e5,), big_r=75e6) for _ in range(2)]
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    with pytest.raises(ValidationError):
        validate_instance(tasks, chans, cfg)


def test_rs_above_rp_rejected():
    tasks = [TaskSpec(b=1e6, alpha=248.0, beta=1.0)]
    chans = [ChannelState(r_p=1e6, r_s=(2e6,), big_r=75e6)]
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    with pytest.raises(ValidationError, match="r_s exceeds r_p"):
        validate_instance(tasks, chans, cfg)


def test_dimension_mismatch_rejected():
    tasks = [TaskSpec(b=1e6, alpha=248.0) for _ in range(2)]
    chans = [ChannelState(r_p=1e6, r_s=(5e5,), big_r=75e6)]
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    with pytest.raises(ValidationError, match="dimension mismatch"):
        validate_instance(tasks, chans, cfg)


def test_secondary_count_mismatch_rejected():
    tasks = [TaskSpec(b=1e6, alpha=248.0)]
    chans = [ChannelState(r_p=1e6, r_s=(5e5, 4e5), big_r=75e6)]
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    with pytest.raises(ValidationError, match="secondary"):
        validate_instance(tasks, chans, cfg)


def test_empty_instance_rejected():
    cfg = SystemConfig(n_rb=100, f_p_total=2e10, f_s_total=(2e10,))
    with pytest.raises(ValidationError):
        validate_instance([], [], cfg)


@pytest.mark.parametrize("field,value", [("b", 0.0), ("b", -1.0), ("alpha", 0.0), ("beta", -0.5)])
def test_task_positivity(field, value):
    kwargs = dict(b=1e6, alpha=248.0)
    kwargs[field] = value
    with pytest.raises(ValidationError):
        TaskSpec(**kwargs)


def test_channel_positivity():
    with pytest.raises(ValidationError):
        ChannelState(r_p=0.0, r_s=(1e5,), big_r=75e6)
    with pytest.raises(ValidationError):
        ChannelState(r_p=1e6, r_s=(0.0,), big_r=75e6)
    with pytest.raises(ValidationError):
        ChannelState(r_p=1e6, r_s=(1e5,), big_r=0.0)


def test_system_config_checks():
    with pytest.raises(ValidationError):
        SystemConfig(n_rb=0, f_p_total=1e10, f_s_total=(1e10,))
    with pytest.raises(ValidationError):
        SystemConfig(n_rb=100, f_p_total=1e10, f_s_total=())
    cfg = SystemConfig(n_rb=100, f_p_total=1e10, f_s_total=(1e10, 2e10))
    assert cfg.num_secondary == 2


def test_allocation_checks():
    with pytest.raises(ValidationError):
        Allocation(n=(1.0,), f_p=(1e9, 1e9), f_s=((1e9,),))
    with pytest.raises(ValidationError):
        Allocation(n=(0.0,), f_p=(1e9,), f_s=((1e9,),))
    alloc = Allocation(n=(10.0,), f_p=(1e9,), f_s=((1e9,),))
    assert alloc.n == (10.0,)


def test_partition_decision_checks():
    with pytest.raises(ValidationError):
        PartitionDecision(x=2, lam=0.5, eta=2.0, indicator=0.1)
    with pytest.raises(ValidationError):
        PartitionDecision(x=1, lam=1.5, eta=2.0, indicator=0.1)
    with pytest.raises(ValidationError):
        PartitionDecision(x=1, lam=0.5, eta=0.5, indicator=0.1)
    # forced static decisions may disagree with the indicator sign
    PartitionDecision(x=0, lam=0.5, eta=2.0, indicator=0.1)


def test_latency_report_positivity():
    with pytest.raises(ValidationError):
        LatencyReport(t_u=0.0, t_e=1.0, t_star=0.0, t_tilde=0.5)
