import time

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def _record(label: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else ""))
        print(ACCEPTANCE_LINES[-1])
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def timings():
    """Wall-clock seconds of the shared heavy computations, keyed by name."""
    return {}


@pytest.fixture(scope="session")
def ratchet_config():
    from ratchetlab.model import RatchetParams
    return RatchetParams(1, 4, 5.0)


@pytest.fixture(scope="session")
def stationary_n100(ratchet_config, timings):
    """Wrapped-chain analysis at n = 100 (symmetric extra step)."""
    from ratchetlab.stationary import stationary_analysis
    from ratchetlab.walk import FlashingSchedule
    t0 = time.perf_counter()
    sched = FlashingSchedule.for_params(ratchet_config, 100)
    res = stationary_analysis(ratchet_config, sched)
    timings["stationary"] = time.perf_counter() - t0
    return res, sched


@pytest.fixture(scope="session")
def lambda_runs(timings):
    """lambda -> (params, distribution at tau1 + tau2), n = 100."""
    from ratchetlab.model import RatchetParams
    from ratchetlab.stats import run_from_origin
    from reference_values import TABLE_LAMBDA
    out = {}
    for lam in TABLE_LAMBDA:
        p = RatchetParams(1, 4, float(lam))
        t0 = time.perf_counter()
        out[lam] = (p, run_from_origin(p, 100))
        timings[f"lambda_row_{lam}"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def n_stats(ratchet_config, timings):
    """n -> PeakStats at tau1 + tau2, lambda = 5."""
    from ratchetlab.stats import n_sweep
    from reference_values import TABLE_N
    ns = list(TABLE_N)
    t0 = time.perf_counter()
    out = dict(zip(ns, n_sweep(ns, ratchet_config)))
    timings["n_sweep"] = time.perf_counter() - t0
    return out
