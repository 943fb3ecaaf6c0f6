import numpy as np
import pytest

from ilrkit.pipeline import DomainSpec, GenerationConfig, StageClients, run_pipeline


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[{verdict}] acceptance: {name}", flush=True)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A tiny generated dataset shared by pipeline/trainer/CLI tests:
    8 classes x 4 images."""
    config = GenerationConfig(
        domains=(
            DomainSpec(
                name="generic",
                categories=4,
                instances_per_category=2,
                backgrounds_per_instance=4,
            ),
        ),
        master_seed=7,
    )
    workdir = tmp_path_factory.mktemp("small_ds")
    result = run_pipeline(config, StageClients.mock(), workdir, threads=1)
    return result


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def unit_rows(generator, n, d):
    mat = generator.normal(size=(n, d))
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)
