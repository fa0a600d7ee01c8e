import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmlinks.scalar_math import DomainError
from kmlinks.weyl import (
    SCHUR_GAP_THRESHOLD,
    ChamberPointC,
    ChamberPointD,
    PartitionN,
    chamber_to_partition,
    discrete_chamber,
    log_vandermonde,
    partition_to_chamber,
    schur_alternant,
    schur_combinatorial,
    schur_equal,
    schur_eval,
    use_combinatorial_branch,
    vandermonde,
)

partitions = st.lists(st.integers(0, 40), min_size=1, max_size=6).map(lambda v: tuple(sorted(v, reverse=True)))


def small_partitions(n, max_size):
    for lam in itertools.product(range(max_size + 1), repeat=n):
        if list(lam) == sorted(lam, reverse=True) and sum(lam) <= max_size:
            yield lam


class TestPointTypes:
    def test_text_round_trip(self):
        c = ChamberPointC.from_text("0, 1.5,1.5, 3")
        assert str(c) == "0.0,1.5,1.5,3.0"
        assert ChamberPointC.from_text(str(c)) == c
        d = ChamberPointD.from_text("0,2,5")
        assert str(d) == "0,2,5"
        assert PartitionN.from_text("3,1,0").parts == (3, 1, 0)

    def test_interior_predicate(self):
        assert ChamberPointC((0.0, 1.0)).is_interior
        assert not ChamberPointC((1.0, 1.0)).is_interior

    @pytest.mark.parametrize("bad", [(2.0, 1.0), (-0.1, 1.0)])
    def test_invalid_continuous(self, bad):
        with pytest.raises(DomainError):
            ChamberPointC(bad)

    @pytest.mark.parametrize("bad", [(1, 1), (2, 1), (-1, 3)])
    def test_invalid_discrete(self, bad):
        with pytest.raises(DomainError):
            ChamberPointD(bad)

    def test_invalid_partition(self):
        with pytest.raises(DomainError):
            PartitionN((1, 2))

    def test_size(self):
        assert PartitionN((3, 1, 0)).size == 4


class TestBijection:
    def test_empty_partition(self):
        for n in range(1, 6):
            assert partition_to_chamber((0,) * n).coords == tuple(range(n))

    def test_two_rows(self):
        assert partition_to_chamber((3, 1)).coords == (1, 4)

    @settings(max_examples=1000, deadline=None)
    @given(partitions)
    def test_round_trip(self, lam):
        y = partition_to_chamber(lam)
        assert all(b > a for a, b in zip(y.coords, y.coords[1:]))
        assert chamber_to_partition(y).parts == lam

    def test_discrete_chamber_enumeration(self):
        pts = discrete_chamber(3, 7)
        assert len(pts) == math.comb(7, 3)
        assert np.all(np.diff(pts, axis=1) > 0)


class TestVandermonde:
    def test_values(self):
        lw = log_vandermonde([2.5])
        assert lw.sign == 1 and lw.log_value == 0.0
        assert vandermonde([1, 2, 4]) == pytest.approx(6.0)
        assert log_vandermonde([1.0, 1.0, 3.0]).sign == 0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 60), min_size=1, max_size=6, unique=True))
    def test_discrete_points_at_least_one(self, pts):
        y = sorted(pts)
        lw = log_vandermonde(y)
        assert lw.sign == 1 and lw.log_value >= 0.0

    def test_log_domain_large(self):
        x = np.arange(0, 200, 10.0)
        lw = log_vandermonde(x)
        ref = sum(math.log(x[j] - x[i]) for i in range(len(x)) for j in range(i + 1, len(x)))
        assert lw.log_value == pytest.approx(ref, rel=1e-13)


class TestSchur:
    def test_one_variable(self):
        assert schur_eval([3], [1.7]) == pytest.approx(1.7**3)

    def test_empty_partition_is_one(self):
        for x in ([0.3, 2.0], [1.0, 1.0], [0.0, 0.0]):
            assert schur_eval([0, 1], x) == pytest.approx(1.0)

    def test_single_box_at_coincident_point(self):
        for a in (0.0, 0.5, 3.0):
            assert schur_eval([0, 2], [a, a]) == pytest.approx(2 * a)

    def test_weyl_dimension_formula(self):
        for lam in small_partitions(3, 6):
            y = partition_to_chamber(lam)
            assert schur_combinatorial(y, [1.3] * 3) == pytest.approx(schur_equal(lam, 1.3), rel=1e-13)

    @pytest.mark.parametrize("gap", [1e-3, 1e-2, 1.0])
    @pytest.mark.parametrize("layout", ["equal", "pair"])
    def test_branches_agree(self, gap, layout):
        for n in (2, 3):
            for base in (0.3, 1.0, 2.5):
                offsets = gap * np.arange(n) if layout == "equal" else np.r_[0.0, gap, gap + 1.0][:n]
                x = base + offsets
                for lam in small_partitions(n, 6):
                    y = partition_to_chamber(lam)
                    a, c = schur_alternant(y, x), schur_combinatorial(y, x)
                    assert abs(a - c) <= 1e-9 * c

    def test_alternant_nonnegative(self, rng):
        for _ in range(300):
            n = int(rng.integers(2, 5))
            x = np.sort(rng.uniform(0, 4, n))
            y = np.sort(rng.choice(25, n, replace=False))
            assert schur_alternant(y, x) >= 0.0
            m = x[:, None] ** y[None, :]
            det = np.linalg.det(m)
            assert det >= -1e-10 * np.prod(np.abs(m).max(axis=1))

    def test_symmetric_in_x(self, rng):
        y = [1, 3, 6]
        x = rng.uniform(0, 2, 3)
        ref = schur_combinatorial(y, np.sort(x))
        for perm in itertools.permutations(range(3)):
            assert schur_eval(y, np.sort(x[list(perm)])) == pytest.approx(ref, rel=1e-12)
            assert schur_combinatorial(y, x[list(perm)]) == pytest.approx(ref, rel=1e-12)

    def test_continuous_across_branch_switch(self):
        y = [0, 3, 5]
        thr = SCHUR_GAP_THRESHOLD * 2.0
        above = [1.0, 1.0 + 1.01 * thr, 2.0]
        below = [1.0, 1.0 + 0.99 * thr, 2.0]
        assert not use_combinatorial_branch(above)
        assert use_combinatorial_branch(below)
        assert schur_eval(y, above) == pytest.approx(schur_eval(y, below), rel=1e-5)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            schur_eval([0, 1], [1.0, 2.0], method="bogus")
