import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# First calls into freshly compiled kernels can blow hypothesis' default
# deadline; wall-clock limits are meaningless for these deterministic checks,
# and derandomizing keeps repeated suite runs identical.
settings.register_profile(
    "bayescpf",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("bayescpf")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_config(*overrides):
    from bayescpf.config import TrialConfig

    return TrialConfig().with_overrides(list(overrides)).validate()


@pytest.fixture
def tiny_config():
    return make_config(
        "sim.n_agents=5",
        "sim.max_steps=1200",
        "sim.trials=1",
        "sim.seed=7",
        "oqa.derivative_window=40",
        "oqa.queue_capacity=100",
    )
