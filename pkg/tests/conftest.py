import pathlib

import numpy as np
import pytest

import parastiff as ps

REPO = pathlib.Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def repo_root():
    return REPO


@pytest.fixture(scope="session")
def rule20():
    return ps.build_composite_gauss(-np.pi, np.pi, 20, 4)


@pytest.fixture(scope="session")
def rule50():
    return ps.build_composite_gauss(-np.pi, np.pi, 50, 4)


@pytest.fixture(scope="session")
def arch():
    return ps.default_architecture()


@pytest.fixture(scope="session")
def mlp(arch):
    return ps.PeriodicMlp(arch)


@pytest.fixture(scope="session")
def gaussian_ckpt(repo_root):
    theta, arch, meta = ps.load_checkpoint(repo_root / "checkpoints" / "gaussian.ckpt")
    return theta, arch, meta


@pytest.fixture(scope="session")
def hat_ckpt(repo_root):
    theta, arch, meta = ps.load_checkpoint(repo_root / "checkpoints" / "hat.ckpt")
    return theta, arch, meta
