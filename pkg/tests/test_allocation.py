import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakcake.allocation import (
    Allocation,
    Interval,
    audit_envy_free,
    audit_proportional,
    normalize_allocation,
    normalize_piece,
    peak_inversions,
    structure_flags,
    utilities,
    value_matrix,
    wasteful_parts,
)
from peakcake.errors import InvalidAllocation, ShapeMismatch
from peakcake.experiments import random_instance, support_allocation
from peakcake.mechanisms import run_envelope_um, run_mww, run_um, run_ww
from peakcake.valuation import CakeInstance, from_peak_density


def connected(edges, owners):
    n = len(owners)
    pieces = [[] for _ in range(n)]
    for s, e, o in zip(edges, edges[1:], owners):
        pieces[o].append((s, e))
    return Allocation.from_lists(pieces)


@st.composite
def instance_and_allocation(draw, common=True):
    n = draw(st.integers(2, 4))
    inst = random_instance(n, draw(st.integers(0, 10_000)), common)
    cuts = sorted(draw(st.lists(st.floats(0.0, 1.0), min_size=n - 1, max_size=n - 1)))
    perm = draw(st.permutations(range(n)))
    return inst, connected([0.0, *cuts, 1.0], perm)


def test_interval_validation():
    with pytest.raises(InvalidAllocation):
        Interval(0.6, 0.5)
    with pytest.raises(InvalidAllocation):
        Interval(-0.1, 0.5)
    assert Interval(0.2, 0.5).length == pytest.approx(0.3)


def test_normalize_examples():
    assert normalize_piece([(0.5, 1.0), (0.0, 0.5)]) == (Interval(0.0, 1.0),)
    assert normalize_piece([(0.3, 0.3), (0.0, 0.2)]) == (Interval(0.0, 0.2),)
    a = normalize_allocation([[(0.0, 0.5), (0.5, 0.7)], [(0.7, 1.0), (0.4, 0.4)]])
    assert a.pieces == ((Interval(0.0, 0.7),), (Interval(0.7, 1.0),))
    assert normalize_allocation(a) == a


def test_partition_checked():
    with pytest.raises(InvalidAllocation):
        Allocation.from_lists([[(0.0, 0.4)], [(0.5, 1.0)]])
    with pytest.raises(InvalidAllocation):
        Allocation.from_lists([[(0.0, 0.6)], [(0.5, 1.0)]])
    with pytest.raises(InvalidAllocation):
        Allocation.from_lists([[(0.0, 0.5)], [(0.5, 0.9)]])


def test_value_matrix_examples(fig1, fig3):
    m = value_matrix(fig1, support_allocation(fig1))
    assert m == pytest.approx(np.eye(3), abs=1e-12)
    assert value_matrix(fig3, run_ww(fig3).allocation) == pytest.approx(np.full((3, 3), 1 / 3), abs=1e-9)
    one = CakeInstance((from_peak_density(0.5, 2.0),))
    assert value_matrix(one, Allocation.from_lists([[(0.0, 1.0)]])) == pytest.approx(np.ones((1, 1)))
    with pytest.raises(ShapeMismatch):
        value_matrix(fig1, Allocation.from_lists([[(0.0, 1.0)]]))


def test_envy_examples(fig3):
    assert audit_envy_free(fig3, run_mww(fig3).allocation).passed
    one = CakeInstance((from_peak_density(0.5, 2.0),))
    assert audit_envy_free(one, Allocation.from_lists([[(0.0, 1.0)]])).passed


def test_um_on_three_agent_instance_is_envy_free(fig3):
    # derived by hand: agent 2 values [0, 5/12] at 9/32 < 14/32, and neither
    # outer agent values another piece above its own 23/32
    alloc = run_um(fig3).allocation
    m = value_matrix(fig3, alloc)
    assert m[1, 0] == pytest.approx(9 / 32, abs=1e-12)
    assert m[1, 1] == pytest.approx(14 / 32, abs=1e-12)
    assert m[0, 1] == pytest.approx(1 / 4, abs=1e-12)
    assert m[0, 2] == pytest.approx(1 / 32, abs=1e-12)
    assert audit_envy_free(fig3, alloc).passed


def test_envy_witness():
    # the narrow agent is left with the flanks and covets the centre
    inst = CakeInstance((from_peak_density(0.5, 1.2), from_peak_density(0.5, 6.0)), waste_tolerant=True)
    alloc = Allocation.from_lists([[(0.4, 0.6)], [(0.0, 0.4), (0.6, 1.0)]])
    report = audit_envy_free(inst, alloc)
    assert not report.passed
    i, j, own, other = report.witness
    assert (i, j) == (1, 0)
    assert own == pytest.approx(inst.agents[1].eval(0.0, 0.4) + inst.agents[1].eval(0.6, 1.0))
    assert other > own
    assert "FAIL" in report.describe()


def test_proportional_examples(fig1, fig3):
    r = audit_proportional(fig3, run_ww(fig3).allocation)
    assert r.passed and r.witness is None
    assert audit_proportional(fig1, support_allocation(fig1)).passed
    two = CakeInstance((from_peak_density(0.5, 2.0), from_peak_density(0.5, 2.0)))
    bad = audit_proportional(two, Allocation.from_lists([[(0.0, 1.0)], []]))
    assert not bad.passed and bad.witness == (1, 0.0)


def test_structure_examples(fig1, fig3, figdisc):
    assert structure_flags(fig1, support_allocation(fig1)) == (True, True, True)
    ww = run_ww(fig3).allocation
    assert structure_flags(fig3, ww) == (False, False, False)
    waste = wasteful_parts(fig3, ww)
    holders = {a for a, iv in waste if iv.end <= 1 / 6 + 1e-12}
    assert holders == {1, 2}
    env = run_envelope_um(figdisc).allocation
    assert not structure_flags(figdisc, env).connected


def test_peak_inversion_detected(fig3):
    alloc = connected([0.0, 0.4, 0.6, 1.0], [1, 0, 2])
    inv = peak_inversions(fig3, alloc)
    assert inv and inv[0][:2] == (0, 1)
    assert not structure_flags(fig3, alloc).peak_preserving


@given(instance_and_allocation(common=False))
def test_row_sums_are_one(pair):
    inst, alloc = pair
    assert value_matrix(inst, alloc).sum(axis=1) == pytest.approx(np.ones(inst.n), abs=1e-9)


@given(instance_and_allocation(common=False))
def test_envy_free_implies_proportional(pair):
    inst, alloc = pair
    if audit_envy_free(inst, alloc).passed:
        assert audit_proportional(inst, alloc).passed


@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.booleans())
def test_two_agents_envy_free_iff_proportional(seed, cut, flip):
    inst = random_instance(2, seed, False)
    alloc = connected([0.0, cut, 1.0], [1, 0] if flip else [0, 1])
    assert audit_envy_free(inst, alloc).passed == audit_proportional(inst, alloc).passed


@given(instance_and_allocation(common=False))
def test_normalization_keeps_values(pair):
    inst, alloc = pair
    split = [[(iv.start, 0.5 * (iv.start + iv.end)) for iv in p] + [(0.5 * (iv.start + iv.end), iv.end) for iv in p]
             for p in alloc.pieces]
    again = normalize_allocation(split)
    assert value_matrix(inst, again) == pytest.approx(value_matrix(inst, alloc), abs=1e-12)
    assert utilities(inst, again) == pytest.approx(np.diag(value_matrix(inst, alloc)), abs=1e-12)
