import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def worked():
    from isoembed.verify import worked_example

    return worked_example(0.5)


_RUNS = {}


@pytest.fixture(scope="session")
def pipeline_run():
    """Memoized ``run_pipeline`` by (ghat, delta, grid)."""
    from isoembed.pipeline import PipelineConfig, run_pipeline

    def run(ghat, delta="auto", grid=(41, 41)):
        key = (ghat, delta, grid)
        if key not in _RUNS:
            _RUNS[key] = run_pipeline(PipelineConfig(ghat=ghat, delta=delta, grid=grid), write=False)
        return _RUNS[key]

    return run
