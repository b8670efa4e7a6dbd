import numpy as np
import pytest

from avatargen import dataset, demo
from avatargen.poses import default_constraints
from avatargen.rig import default_skeleton


@pytest.fixture(scope="session")
def skeleton():
    return default_skeleton()


@pytest.fixture(scope="session")
def constraints(skeleton):
    return default_constraints(skeleton=skeleton)


@pytest.fixture(scope="session")
def capsule(skeleton):
    """(mesh, binding) of the procedural capsule person."""
    return demo.capsule_person(skeleton)


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    cfg = demo.write_demo_assets(root / "assets", n_backgrounds=3, images_per_scan=6, size=96, seed=7)
    return cfg


@pytest.fixture(scope="session")
def small_run(demo_dir, tmp_path_factory):
    """A 6-image dataset rendered once and shared by read-only tests."""
    out = tmp_path_factory.mktemp("run")
    manifest = dataset.generate(dataset.load_config(demo_dir), out, jobs=1)
    return out, manifest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
