import numpy as np
import pytest

CRITERIA = {
    1: "oracle correctness",
    2: "utility shape on the 2x2 example",
    3: "B = I equivalence",
    4: "gradient consistency",
    5: "deterministic convergence",
    6: "stochastic unbiasedness",
    7: "ICA unmixing",
    8: "angle lemmas",
    9: "smooth-variant consistency",
    10: "determinism and parallel invariance",
}

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def acceptance(request):
    """``record(num, ok, detail, part=None)`` files one acceptance outcome."""
    store = request.config.stash[_RESULTS]

    def record(num, ok, detail, part=None):
        store.setdefault(num, []).append((part, bool(ok), detail))

    return record


@pytest.fixture
def rng(request):
    # one stream per test, stable across runs and test ordering
    key = sum(request.node.nodeid.encode())
    return np.random.default_rng(key)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, title in CRITERIA.items():
        parts = store.get(num)
        if not parts:
            tr.write_line(f"criterion {num:2d}  NOT RUN  {title}")
            continue
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(
            (f"[{p}: {'pass' if ok else 'fail'}] " if p else "") + d for p, ok, d in parts
        )
        tr.write_line(f"criterion {num:2d}  {status}  {title}: {detail}")
