import numpy as np
import pytest

from cpsol.benchmarks import Environment, MovingParabola, MovingPeaks, MpbConfig, StaticFunction
from cpsol.core import RandomSource, make_random_source


class FixedSource(RandomSource):
    """Random source whose uniforms sit at a fixed fraction of their range."""

    def __init__(self, frac_w=0.2, r=0.5):
        super().__init__(0)
        self.frac_w = frac_w
        self.r = r

    def uniform(self, lo, hi, size=None):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        out = lo + self.frac_w * (hi - lo)
        return np.broadcast_to(out, size).copy() if size is not None else out

    def random(self, size=None):
        return np.full(size, self.r) if size is not None else self.r


@pytest.fixture
def static_env():
    def make(name="sphere", dim=5, **kw):
        return Environment(StaticFunction(name, dim), **kw)
    return make


@pytest.fixture
def parabola_env():
    def make(dim=3, kind="linear", tau=0.1, every=1, seed=0, **kw):
        return Environment(MovingParabola(dim, kind, tau), make_random_source(seed), every,
                           "iterations", **kw)
    return make


@pytest.fixture
def mpb_env():
    def make(seed=0, **cfg_kw):
        cfg = MpbConfig(**cfg_kw)
        return Environment(MovingPeaks.initial(cfg, make_random_source(seed)),
                           make_random_source(seed + 1), cfg.change_every)
    return make


# one "criterion N: PASS|FAIL ..." line per acceptance criterion, printed at the end
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
