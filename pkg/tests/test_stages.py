import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pseudogen.selection import (
    REJECT_REASONS,
    InformationSystem,
    SelectionError,
    UncertaintyVector,
    build_universe,
    stage1_filter,
    stage2_select,
    uncertainty_select,
    universe_ranges,
)

RANGES = (np.zeros(2), np.ones(2))


def test_stage1_examples():
    rep = stage1_filter([[0.5, float("nan")]], 2, RANGES)
    assert rep.rejected_counts["non_finite"] == 1 and len(rep.accepted) == 0
    rep = stage1_filter([[0.2, 0.3], [0.2, 0.3]], 2, RANGES)
    assert rep.rejected_counts["duplicate"] == 1 and len(rep.accepted) == 1
    rep = stage1_filter([[0.5, 10.0]], 2, RANGES)
    assert rep.rejected_counts["out_of_range"] == 1


def test_stage1_tolerance_band():
    rep = stage1_filter([[1.1, 0.5], [1.1000001, 0.5], [-0.1, 0.5]], 2, RANGES, tolerance=0.1)
    assert rep.accepted_source_index == [0, 2]


def malformed_fixture():
    good = [[0.1 * k, 0.5, 0.05 * k] for k in range(1, 6)]          # 5 accepted
    rows = list(good)
    rows += [[0.1, 0.2], [0.1, 0.2, 0.3, 0.4], [], [0.5]]            # 4 wrong arity
    rows += [[float("nan"), 0.1, 0.1], [0.1, float("inf"), 0.1],
             [0.1, 0.1, float("-inf")], ["abc", 0.1, 0.1]]           # 4 non-finite
    rows += [[5.0, 0.5, 0.5], [0.5, -3.0, 0.5], [0.5, 0.5, 1e9]]     # 3 out of range
    rows += [good[0], good[1], good[1], list(good[4])]               # 4 duplicates
    assert len(rows) == 20
    return rows


def test_stage1_malformed_fixture():
    rep = stage1_filter(malformed_fixture(), 3, (np.zeros(3), np.ones(3)))
    assert rep.rejected_counts == {"wrong_arity": 4, "non_finite": 4, "out_of_range": 3, "duplicate": 4}
    assert len(rep.accepted) == 5
    assert np.all(np.isfinite(rep.accepted))


def test_stage1_labels_must_be_anomalous():
    with pytest.raises(SelectionError, match="label"):
        stage1_filter([[0.1, 0.1]], 2, RANGES, labels=[0])


def test_build_universe_examples(rng):
    cand, pseudo, train = rng.random((3, 2)), rng.random((2, 2)), rng.random((5, 2))
    train[:, 1] = 0.0
    cand[:, 1] = pseudo[:, 1] = 0.0
    u = build_universe(cand, pseudo, train)
    assert u.n == 10
    assert [int(u.mask(t).sum()) for t in ("candidate", "pseudo", "train")] == [3, 2, 5]
    assert u.scaled[:, 0].min() == 0.0 and u.scaled[:, 0].max() == 1.0
    assert np.all(u.scaled[:, 1] == 0.5)
    np.testing.assert_array_equal(u.raw[:3], cand)


def toy_system(ap, origin):
    n = len(ap)
    system = InformationSystem(np.zeros((n, 1)), np.array(origin), np.arange(n, dtype=float)[:, None])
    unc = UncertaintyVector(np.ones(n), np.array(ap, dtype=float), np.ones(n), np.ones(n), np.ones(n))
    return unc, system


def test_stage2_hand_simulation():
    ap = [0.9, 0.7, 0.6, 0.2, 0.1]
    unc, system = toy_system(ap, ["candidate"] * 2 + ["pseudo"] + ["train"] * 2)
    mean, sigma = 0.5, float(np.std(ap))
    # hand simulation: p3 = mean + 3 sigma - k * sigma/4 until both candidates pass
    k = 0
    while sum(a >= mean + 3 * sigma - k * 0.25 * sigma for a in ap[:2]) < 2:
        k += 1
    sel = stage2_select(unc, system, 2)
    assert sel.universe_indices == [0, 1]
    assert sel.relax_steps == k == 10
    assert sel.initial_threshold == pytest.approx(mean + 3 * sigma, abs=1e-12)
    # 10 steps from mean + 3 sigma leave mean + sigma / 2, sigma^2 = 0.46 / 5
    assert sel.final_threshold == pytest.approx(0.5 + 0.5 * np.sqrt(0.092), abs=1e-12)
    np.testing.assert_array_equal(sel.rows, [[0.0], [1.0]])


def test_stage2_stops_at_pseudo_floor():
    # candidate 0.3 lies below the lowest pseudo score: the loop stops first
    unc, system = toy_system([0.9, 0.3, 0.6, 0.2, 0.1], ["candidate"] * 2 + ["pseudo"] + ["train"] * 2)
    sel = stage2_select(unc, system, 2)
    assert sel.universe_indices == [0]
    assert sel.final_threshold <= 0.6


def test_stage2_all_when_target_large():
    unc, system = toy_system([0.8, 0.7, 0.75, 0.6, 0.2], ["candidate"] * 3 + ["pseudo", "train"])
    sel = stage2_select(unc, system, 10)
    assert sel.universe_indices == [0, 1, 2]


def test_stage2_cap_and_ties():
    unc, system = toy_system([0.5, 0.9, 0.9, 0.9, 0.1], ["candidate"] * 4 + ["pseudo"])
    sel = stage2_select(unc, system, 2)
    assert sel.universe_indices == [1, 2]


def test_stage2_errors():
    unc, system = toy_system([0.5, 0.1], ["pseudo", "train"])
    with pytest.raises(SelectionError, match="no candidate"):
        stage2_select(unc, system, 1)
    unc, system = toy_system([0.5, 0.1], ["candidate", "train"])
    with pytest.raises(SelectionError, match="target_count"):
        stage2_select(unc, system, 0)


def test_stage2_constant_uncertainty():
    unc, system = toy_system([0.4] * 4, ["candidate", "candidate", "pseudo", "train"])
    assert stage2_select(unc, system, 5).universe_indices == [0, 1]


@given(st.lists(st.floats(0, 0.999), min_size=2, max_size=12), st.integers(1, 12), st.integers(0, 2**16))
def test_stage2_monotone_in_relaxation(aps, target, seed):
    rng = np.random.default_rng(seed)
    n = len(aps)
    origin = rng.choice(["candidate", "pseudo", "train"], size=n)
    origin[0] = "candidate"
    unc, system = toy_system(aps, origin.tolist())
    ap = np.asarray(aps)
    cand = np.flatnonzero(origin == "candidate")
    sel = stage2_select(unc, system, target)
    # every selected candidate clears the final threshold and anything above a
    # higher (earlier) threshold would still be selected before the cap
    assert all(ap[i] >= sel.final_threshold for i in sel.universe_indices)
    assert len(sel.universe_indices) <= target
    passing = cand[ap[cand] >= sel.final_threshold]
    higher = cand[ap[cand] >= sel.final_threshold + 0.25 * ap.std()]
    assert set(higher) <= set(passing)
    if len(passing) <= target:
        assert sel.universe_indices == sorted(passing.tolist())


def test_uncertainty_select_end_to_end(rng):
    train = rng.standard_normal((120, 3))
    pseudo = rng.standard_normal((6, 3)) + 3.0
    cand = np.vstack([rng.standard_normal((5, 3)) + 3.0, rng.standard_normal((5, 3)) * 0.1])
    res = uncertainty_select(cand, pseudo, train, target_count=10)
    assert res.system.n == 10 + 6 + 120
    assert res.delta > 0
    assert set(res.selected.universe_indices) <= set(range(10))
    rep = res.report()
    assert len(rep["candidates"]) == 10
    assert sum(c["selected"] for c in rep["candidates"]) == len(res.selected.universe_indices)
    # isolated candidates carry more uncertainty than ones inside the normal bulk
    ap = res.uncertainty.alpha_prime
    assert ap[:5].mean() > ap[5:10].mean()


def test_universe_ranges_skips_empty():
    lo, hi = universe_ranges(np.array([[0.0, 1.0], [2.0, -1.0]]), np.empty((0, 2)))
    assert lo.tolist() == [0.0, -1.0] and hi.tolist() == [2.0, 1.0]
    assert REJECT_REASONS == ("wrong_arity", "non_finite", "out_of_range", "duplicate")


@pytest.mark.parametrize("aps", [[0.0, 5e-324], [0.9, 0.9 + 2.2e-16, 0.9], [1e-310, 0.0, 3e-310]])
def test_stage2_terminates_on_tiny_spread(aps):
    unc, system = toy_system(aps, ["candidate"] * (len(aps) - 1) + ["pseudo"])
    sel = stage2_select(unc, system, len(aps))
    assert sel.relax_steps < 100


def test_stage2_rejects_nonpositive_step():
    unc, system = toy_system([0.5, 0.1], ["candidate", "train"])
    with pytest.raises(SelectionError, match="relax_step"):
        stage2_select(unc, system, 1, relax_step=0.0)
