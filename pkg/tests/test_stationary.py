import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import enumerate_paths, ring_matrix
from ratchetlab.model import RatchetParams
from ratchetlab.parrondo import solve_stationary
from ratchetlab.stationary import (
    EXTRA_RATCHET,
    EXTRA_SYMMETRIC,
    build_wrapped_matrix,
    cycle_runs,
    cycle_snapshots,
    load_matrix,
    mean_displacement_stationary,
    needs_parity_fix,
    one_step_matrices,
    recenter,
    save_matrix,
    stationary_analysis,
    stationary_distribution,
    wrapped_mean_increment,
    wrapped_row,
    write_stationary_csv,
)
from ratchetlab.walk import FlashingSchedule, ratchet_probs


def toy(l=1, L=3, lam=0.6, t1=1, t2=1):
    p = RatchetParams(l, L, lam, t1, t2)
    return p, FlashingSchedule.for_params(p, 1)


def test_parity_rule():
    p = RatchetParams(1, 4, 5.0)
    s = FlashingSchedule.for_params(p, 100)
    assert needs_parity_fix(p, s)
    assert cycle_runs(p, s) == [(False, 24000), (True, 24000), (False, 1)]
    assert cycle_runs(p, s, EXTRA_RATCHET)[-1] == (True, 1)
    p3, s3 = toy()
    assert not needs_parity_fix(p3, s3)
    with pytest.raises(ValueError):
        cycle_runs(p, s, "sideways")


def test_n100_matrix_structure(stationary_n100):
    res, _ = stationary_n100
    mat = res.matrix
    assert (mat.size, mat.cycle_steps, mat.extra_step) == (400, 48001, EXTRA_SYMMETRIC)
    assert mat.row_sum_defect() < 1e-10
    assert mat.is_irreducible()
    assert np.abs(res.pibar @ mat.entries - res.pibar).max() < 1e-10


def test_n100_matrix_rows_match_line_evolution(stationary_n100, ratchet_config):
    res, sched = stationary_n100
    for state in (0, 37, 100, 399):
        assert np.abs(res.matrix.entries[state] - wrapped_row(ratchet_config, sched, state)).max() < 1e-12


def test_without_fix_chain_is_reducible():
    p = RatchetParams(1, 4, 1.0, 1, 1)
    s = FlashingSchedule.for_params(p, 2)
    A, B = one_step_matrices(p, 2)
    raw = np.linalg.matrix_power(A, s.steps_off) @ np.linalg.matrix_power(B, s.steps_on)
    assert (raw[0, 1::2] == 0).all()
    assert build_wrapped_matrix(p, s).is_irreducible()


@pytest.mark.parametrize("l,L,t1,t2", [(1, 3, 1, 1), (1, 3, 2, 1), (1, 4, 1, 1), (3, 4, 1, 2)])
def test_small_matrix_equals_direct_products(l, L, t1, t2):
    p, s = toy(l, L, 0.6, t1, t2)
    p0, p1 = ratchet_probs(p, 1)
    A = ring_matrix([0.5] * L)
    B = ring_matrix([p0 if j < l else p1 for j in range(L)])
    ref = np.linalg.matrix_power(A, t1) @ np.linalg.matrix_power(B, t2)
    if L % 2 == 0 and (t1 + t2) % 2 == 0:
        ref = ref @ A
    assert np.abs(build_wrapped_matrix(p, s).entries - ref).max() < 1e-14


def test_pure_game_b_stationary_law():
    _, B = one_step_matrices(RatchetParams(1, 3, 2 / 3), 1)
    assert stationary_distribution(B) == pytest.approx([5 / 13, 2 / 13, 6 / 13], abs=1e-12)


def test_doubly_stochastic_gives_uniform():
    A, _ = one_step_matrices(RatchetParams(1, 5, 0.0), 3)
    assert stationary_distribution(A) == pytest.approx(np.full(15, 1 / 15), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_starts_agree(seed):
    p, s = toy(1, 3, 0.6, 2, 1)
    P = build_wrapped_matrix(p, s).entries
    start = np.random.default_rng(seed).random(3) + 1e-3
    assert np.abs(stationary_distribution(P, start=start) - solve_stationary(P)).max() < 1e-9


def test_power_iteration_matches_direct_solve(stationary_n100):
    res, _ = stationary_n100
    assert np.abs(res.pibar - solve_stationary(res.matrix.entries)).max() < 1e-9


@pytest.mark.parametrize("l,L,t1,t2,lam", [(1, 3, 1, 1, 0.6), (1, 3, 2, 1, 0.5), (2, 3, 1, 2, 0.3), (1, 4, 1, 1, 0.6)])
def test_mubar_equals_path_enumeration(l, L, t1, t2, lam):
    p, s = toy(l, L, lam, t1, t2)
    res = stationary_analysis(p, s)
    p0, p1 = ratchet_probs(p, 1)
    phases = [r for r, k in cycle_runs(p, s) for _ in range(k)]
    expect = sum(res.pibar[i] * enumerate_paths(i, phases, p0, p1, L, l)[1] for i in range(L))
    assert res.mubar == pytest.approx(expect, abs=1e-14)


def test_two_drift_routes_agree(stationary_n100, ratchet_config):
    res, sched = stationary_n100
    assert wrapped_mean_increment(res.pibar, ratchet_config, sched) == pytest.approx(res.mubar, abs=1e-8)


@pytest.mark.parametrize("n", [5, 10, 20])
def test_two_drift_routes_agree_small(n):
    p = RatchetParams(1, 4, 3.0)
    s = FlashingSchedule.for_params(p, n)
    for extra in (EXTRA_SYMMETRIC, EXTRA_RATCHET):
        res = stationary_analysis(p, s, extra)
        assert wrapped_mean_increment(res.pibar, p, s, extra) == pytest.approx(res.mubar, abs=1e-8)


def test_zero_drift_is_uniform_and_still():
    p = RatchetParams(1, 4, 0.0)
    s = FlashingSchedule.for_params(p, 10)
    res = stationary_analysis(p, s)
    assert np.abs(res.pibar - 1 / 40).max() < 1e-12
    assert abs(res.mubar) < 1e-10


def test_stationary_law_not_uniform(stationary_n100):
    res, _ = stationary_n100
    assert res.pibar.max() - res.pibar.min() > 1e-3


def test_recentered_law(stationary_n100):
    res, _ = stationary_n100
    c = res.pibar_recentered
    assert c.positions.min() == -3.0 and c.positions.max() < 1.0
    assert c.total_mass() == pytest.approx(res.pibar.sum(), abs=1e-15)
    # single interior maximum, monotone on either side
    k = int(np.argmax(c.masses))
    assert 0 < k < c.masses.size - 1
    assert (np.diff(c.masses[:k + 1]) >= 0).all() and (np.diff(c.masses[k:]) <= 0).all()


def test_recenter_is_a_rotation():
    v = np.arange(8, dtype=float)
    d = recenter(v, RatchetParams(1, 4, 1.0), 2)
    assert d.offset == -6
    assert list(d.masses) == [2, 3, 4, 5, 6, 7, 0, 1]
    with pytest.raises(ValueError):
        recenter(v[:5], RatchetParams(1, 4, 1.0), 2)


def test_extra_ratchet_variant_is_close():
    # the two parity conventions differ by one step out of 48001, so mubar moves slightly
    p = RatchetParams(1, 4, 5.0)
    s = FlashingSchedule.for_params(p, 20)
    a = mean_displacement_stationary(p, s, EXTRA_SYMMETRIC)
    b = mean_displacement_stationary(p, s, EXTRA_RATCHET)
    assert a != b and abs(a - b) < 1e-2


def test_panels(stationary_n100, ratchet_config):
    res, sched = stationary_n100
    start, mid, end = cycle_snapshots(res, ratchet_config, sched)
    assert mid.steps_taken == sched.steps_off and end.steps_taken == sched.cycle_steps
    for d in (start, mid, end):
        assert d.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_exports(tmp_path):
    p, s = toy(1, 3, 0.6, 2, 1)
    res = stationary_analysis(p, s)
    save_matrix(res.matrix, tmp_path / "m.bin")
    back = load_matrix(tmp_path / "m.bin")
    assert back.size == 3 and back.cycle_steps == 3
    assert np.array_equal(back.entries, res.matrix.entries)
    write_stationary_csv(res, p, 1, tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "state,wrapped_position,recentered_position,mass,density"
    assert len(rows) == 4
