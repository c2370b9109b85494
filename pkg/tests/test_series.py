import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from zkseries import kernels
from zkseries.series import (
    CouplingWitness,
    DistanceConfig,
    SeriesError,
    TimeSeries,
    brute_force_series_distance,
    combine_edges,
    diagonal_sum_distance,
    dtw_distance,
    frechet_distance,
    local_distance,
    normalize_series,
    series_distance,
    smooth_moving_average,
    twed_distance,
    validate_coupling,
)

LOCALS = ["manhattan", "squared_euclidean", "chebyshev"]

# equal-length pair whose diagonal local distances are 0+4+4+1+1 = 10, DTW 2
WARP_X = TimeSeries([1, 5, 1, 1, 2])
WARP_Y = TimeSeries([1, 1, 5, 0, 1])


def series_strategy(max_len=6, max_m=2, max_val=20):
    return st.integers(1, max_m).flatmap(
        lambda m: st.tuples(
            st.lists(st.lists(st.integers(0, max_val), min_size=m, max_size=m), min_size=1, max_size=max_len),
            st.lists(st.lists(st.integers(0, max_val), min_size=m, max_size=m), min_size=1, max_size=max_len),
        )
    )


# ---------------------------------------------------------------- normalization

def test_normalize_boundaries():
    ts = normalize_series([[0.0], [1.0], [0.5]], [(0.0, 1.0)], K=1_000_000)
    assert ts.points == [(0,), (1_000_000,), (500_000,)]


def test_normalize_rounds_half_up():
    # 1/8 * 4 = 0.5 -> 1; 3/8 * 4 = 1.5 -> 2
    ts = normalize_series([[1], [3]], [(0, 8)], K=4)
    assert ts.points == [(1,), (2,)]


def test_normalize_clamps_outside_registration_range():
    ts = normalize_series([[-1.0, 2.0]], [(0.0, 1.0), (0.0, 1.0)], K=10)
    assert ts.points == [(0, 10)]


def test_normalize_degenerate_signal_named():
    with pytest.raises(SeriesError, match="signal 1"):
        normalize_series([[0, 1]], [(0, 1), (3, 3)], K=10)


# ---------------------------------------------------------------- smoothing

def test_smoothing_example():
    assert smooth_moving_average(TimeSeries([2, 4, 6, 8]), 2, 2).points == [(3,), (7,)]


def test_smoothing_identity():
    x = TimeSeries([[3, 1], [9, 4], [0, 0]])
    assert smooth_moving_average(x, 1, 1) == x


def test_smoothing_blow_length():
    x = TimeSeries(list(range(248)))
    assert smooth_moving_average(x, 4, 8).T == 62


@given(st.lists(st.integers(0, 100), min_size=1, max_size=40), st.integers(1, 6), st.integers(1, 9))
def test_smoothing_length_and_bounds(values, k, w):
    out = smooth_moving_average(TimeSeries(values), k, w)
    assert out.T == math.ceil(len(values) / k)
    assert min(values) <= out.array.min() and out.array.max() <= max(values)


def test_empty_series_rejected():
    with pytest.raises(SeriesError):
        TimeSeries([])


# ---------------------------------------------------------------- local distances

@pytest.mark.parametrize("kind", LOCALS)
def test_local_identity(kind):
    assert local_distance((4, 7, 1), (4, 7, 1), kind) == 0


def test_local_values():
    assert local_distance((1, 2), (3, 5), "manhattan") == 5
    assert local_distance((1, 2), (3, 5), "squared_euclidean") == 13
    assert local_distance((1, 2), (3, 5), "chebyshev") == 3


@given(st.integers(0, 1000), st.integers(0, 1000))
def test_local_single_coordinate_collapse(a, b):
    assert local_distance((a,), (b,), "manhattan") == local_distance((a,), (b,), "chebyshev")


def test_local_dimension_mismatch():
    with pytest.raises(SeriesError):
        local_distance((1, 2), (1,), "manhattan")


# ---------------------------------------------------------------- series distances

def test_diagonal_sum_examples():
    cfg = DistanceConfig("manhattan", "diagonal_sum")
    x = TimeSeries([[3, 1], [2, 2]])
    assert diagonal_sum_distance(x, x, cfg)[0] == 0
    d, w = diagonal_sum_distance(TimeSeries([0, 0]), TimeSeries([1, 2]), cfg)
    assert d == 3 and w.pairs == ((1, 1), (2, 2))


def test_diagonal_sum_truncates_to_common_length():
    cfg = DistanceConfig("manhattan", "diagonal_sum")
    d, w = diagonal_sum_distance(TimeSeries([0, 0, 9]), TimeSeries([1, 2]), cfg)
    assert d == 3 and w.pairs == ((1, 1), (2, 2))


def test_warped_pair_beats_diagonal():
    cfg = DistanceConfig("manhattan", "dtw")
    diag, w = diagonal_sum_distance(WARP_X, WARP_Y, DistanceConfig("manhattan", "diagonal_sum"))
    assert w.edge_values == (0, 4, 4, 1, 1) and diag == 10
    assert dtw_distance(WARP_X, WARP_Y, cfg)[0] == 2
    assert brute_force_series_distance(WARP_X, WARP_Y, cfg) == 2


def test_dtw_examples():
    cfg = DistanceConfig("manhattan", "dtw")
    x = TimeSeries([[1, 2], [5, 5], [0, 3]])
    d, w = dtw_distance(x, x, cfg)
    assert d == 0 and w.pairs == ((1, 1), (2, 2), (3, 3))
    d, w = dtw_distance(TimeSeries([1, 2, 3]), TimeSeries([1, 2, 2, 3]), cfg)
    assert d == 0
    assert brute_force_series_distance(TimeSeries([1, 2, 3]), TimeSeries([1, 2, 2, 3]), cfg) == 0


def test_frechet_examples():
    cfg = DistanceConfig("manhattan", "frechet")
    d, w = frechet_distance(TimeSeries([1, 5]), TimeSeries([2, 4]), cfg)
    assert d == 1 and w.pairs == ((1, 1), (2, 2))
    x = TimeSeries([7, 3, 9])
    assert frechet_distance(x, x, cfg)[0] == 0


def test_twed_examples():
    cfg = DistanceConfig("manhattan", "twed", lam=1_000_000)
    d, w = twed_distance(TimeSeries([0]), TimeSeries([5]), cfg)
    assert d == 5 and w.pairs == ((1, 1),)
    x = TimeSeries([[4, 1], [0, 9], [3, 3]])
    assert twed_distance(x, x, cfg)[0] == 0


def test_twed_hand_example():
    # x=(0,1), y=(0): only coupling (1,1),(2,1); second step advances x
    cfg = DistanceConfig("manhattan", "twed", lam=10)
    d, w = twed_distance(TimeSeries([0, 1]), TimeSeries([0]), cfg)
    assert d == 0 + 10 + 1 and w.edge_values == (0, 11)


def test_dtw_band():
    cfg = DistanceConfig("manhattan", "dtw", band=0)
    x, y = TimeSeries([1, 2, 3]), TimeSeries([3, 2, 1])
    d, w = dtw_distance(x, y, cfg)
    assert w.pairs == ((1, 1), (2, 2), (3, 3)) and d == 4
    with pytest.raises(SeriesError):
        dtw_distance(TimeSeries([1, 2, 3]), TimeSeries([1]), cfg)


def test_tie_break_prefers_diagonal_then_vertical():
    cfg = DistanceConfig("manhattan", "dtw")
    _, w = dtw_distance(TimeSeries([0, 0, 0]), TimeSeries([0, 0, 0]), cfg)
    assert w.pairs == ((1, 1), (2, 2), (3, 3))
    _, w = dtw_distance(TimeSeries([0, 0, 0]), TimeSeries([0, 0]), cfg)
    assert w.pairs == ((1, 1), (2, 1), (3, 2))


def test_validate_coupling_examples():
    ok = CouplingWitness(((1, 1),), (0,))
    assert validate_coupling(ok, 1, 1, "dtw")
    jump = CouplingWitness(((1, 1), (3, 2)), (0, 0))
    assert not validate_coupling(jump, 3, 2, "dtw")
    diag = CouplingWitness(((1, 1), (2, 2)), (0, 0))
    assert validate_coupling(diag, 2, 2, "diagonal_sum")
    assert not validate_coupling(CouplingWitness(((1, 1), (2, 1), (2, 2)), (0, 0, 0)), 2, 2, "diagonal_sum")
    assert not validate_coupling(CouplingWitness(((1, 1), (1, 2), (2, 3)), (0, 0, 0)), 2, 3, "dtw", band=0)
    assert not validate_coupling(CouplingWitness(((1, 1), (2, 2)), (0,)), 2, 2, "dtw")


def test_brute_force_refuses_large():
    with pytest.raises(SeriesError):
        brute_force_series_distance(TimeSeries(list(range(9))), TimeSeries(list(range(8))),
                                    DistanceConfig("manhattan", "dtw"))


# ---------------------------------------------------------------- properties

@pytest.mark.parametrize("series", ["dtw", "frechet", "twed"])
@pytest.mark.parametrize("local", LOCALS)
def test_oracle_equivalence(series, local):
    rng = random.Random(f"{series}-{local}")
    cfg = DistanceConfig(local, series, lam=rng.choice([0, 3, 17]))
    for _ in range(150):
        m = rng.randint(1, 2)
        x = TimeSeries([[rng.randint(0, 20) for _ in range(m)] for _ in range(rng.randint(1, 6))])
        y = TimeSeries([[rng.randint(0, 20) for _ in range(m)] for _ in range(rng.randint(1, 6))])
        d, w = series_distance(x, y, cfg)
        assert d == brute_force_series_distance(x, y, cfg)
        assert validate_coupling(w, x.T, y.T, series)
        assert combine_edges(w.edge_values, series) == d


@settings(max_examples=200, deadline=None)
@given(series_strategy())
def test_symmetry_and_orderings(pair):
    x, y = TimeSeries(pair[0]), TimeSeries(pair[1])
    for local in LOCALS:
        dtw = dtw_distance(x, y, DistanceConfig(local, "dtw"))[0]
        fr = frechet_distance(x, y, DistanceConfig(local, "frechet"))[0]
        assert dtw == dtw_distance(y, x, DistanceConfig(local, "dtw"))[0]
        assert fr == frechet_distance(y, x, DistanceConfig(local, "frechet"))[0]
        assert fr <= dtw
        if x.T == y.T:
            assert dtw <= diagonal_sum_distance(x, y, DistanceConfig(local, "diagonal_sum"))[0]
        for series in ("dtw", "frechet", "twed"):
            assert series_distance(x, x, DistanceConfig(local, series))[0] == 0


@settings(max_examples=100, deadline=None)
@given(series_strategy(max_len=8, max_m=3, max_val=1000), st.sampled_from(["dtw", "frechet", "twed"]),
       st.sampled_from(LOCALS))
def test_compiled_and_python_kernels_agree(pair, series, local):
    if not kernels.has_compiled():
        pytest.skip("compiled kernels not built")
    x, y = TimeSeries(pair[0]), TimeSeries(pair[1])
    cfg = DistanceConfig(local, series, lam=50)
    assert series_distance(x, y, cfg, backend="compiled") == series_distance(x, y, cfg, backend="python")


def test_large_values_route_to_python():
    cfg = DistanceConfig("squared_euclidean", "dtw", K=2**40)
    big = 2**40
    x, y = TimeSeries([[0], [big]]), TimeSeries([[big], [0]])
    d, w = dtw_distance(x, y, cfg)
    assert d == brute_force_series_distance(x, y, cfg) == 2 * big * big


@pytest.mark.parametrize("local", ["manhattan", "chebyshev"])
def test_twed_triangle_inequality_metric_locals(local):
    rng = random.Random(local)
    for lam in (0, 1, 10, 1_000_000):
        cfg = DistanceConfig(local, "twed", lam=lam)
        for _ in range(1000 // 4):
            m = rng.randint(1, 2)
            x, y, z = (TimeSeries([[rng.randint(0, 20) for _ in range(m)] for _ in range(rng.randint(1, 5))])
                       for _ in range(3))
            d = lambda a, b: twed_distance(a, b, cfg)[0]  # noqa: E731
            assert d(x, y) + d(y, z) >= d(x, z)


def test_twed_triangle_fails_for_squared_euclidean():
    # squared Euclidean is not itself a metric, so neither is TWED built on it
    cfg = DistanceConfig("squared_euclidean", "twed", lam=1_000_000)
    x, y, z = TimeSeries([12, 8]), TimeSeries([8, 5]), TimeSeries([1, 2, 0, 5])
    d = lambda a, b: twed_distance(a, b, cfg)[0]  # noqa: E731
    assert d(x, y) + d(y, z) < d(x, z)
