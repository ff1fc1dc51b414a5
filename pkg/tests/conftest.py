import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) the numba kernels once, so individual
    tests measure run time rather than JIT time."""
    from pachoice import ballsbins, model
    from pachoice.cli import mc_multiset_distribution
    from pachoice.model import ModelSpec
    from pachoice.rng import RandomSource

    for spec in (ModelSpec(), ModelSpec(rule="min", alpha=2.0)):
        st = model.init(spec, m_capacity=64)
        model.grow(st, spec, RandomSource([0]), 64, k_max=256)
    ballsbins.run_two_choice(16, 16, seed=0)
    ballsbins.coupled_run(64, seed=0)
    mc_multiset_distribution(ModelSpec(), 3, 10, seed=0)
    yield
