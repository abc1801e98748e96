import numpy as np
import pytest

from clthres import ForestModel, NodeDist, PairwiseDist, build_random_forest


def random_pair(rng, r=2, positive=True):
    t = rng.dirichlet(np.ones(r * r)).reshape(r, r)
    if positive:
        t = 0.9 * t + 0.1 / (r * r)
    return PairwiseDist(t / t.sum())


def random_forest(rng, d, k=None, r=2):
    if k is None:
        k = int(rng.integers(0, d))
    return build_random_forest(d, k, r, rng, kappa=0.05, min_mi=0.0)


def random_model_on(rng, d, edges, r=2):
    """Positive random model with a prescribed forest skeleton."""
    from clthres.core import orient

    directed = orient(d, edges)
    marg = [None] * d
    tables = {}
    for i in directed.order:
        pa = directed.parent[i]
        if pa is None:
            marg[i] = 0.8 * rng.dirichlet(np.ones(r)) + 0.2 / r
            continue
        cond = 0.8 * rng.dirichlet(np.ones(r), size=r) + 0.2 / r
        joint = marg[pa][:, None] * cond
        marg[i] = joint.sum(axis=0)
        tables[(pa, i)] = PairwiseDist(joint)
    return ForestModel(d, r, tuple(edges), tuple(NodeDist(m) for m in marg), tables)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def bsc_chain(c=0.3):
    pd = PairwiseDist.binary_symmetric(c)
    u = NodeDist([0.5, 0.5])
    return ForestModel(3, 2, ((0, 1), (1, 2)), (u, u, u), {(0, 1): pd, (1, 2): pd})


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(LINES):
            terminalreporter.write_line(LINES[k])
