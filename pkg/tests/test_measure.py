import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reifenberg.generators import (
    comb_slabs,
    gen_circle,
    gen_comb,
    gen_koch,
    gen_lipschitz_graph,
    gen_plane_patch,
    koch_pieces,
    union,
)
from reifenberg.geometry import InputError, PointCloud, similarity_transform
from reifenberg.harness import koch_box_scales
from reifenberg.measure import (
    box_count,
    covering_recursion_check,
    eta,
    graph_ball_lower_bound_check,
    hausdorff_premeasure,
    lipschitz_constants,
    measure_compare,
    minkowski_dims,
    packing_dim_bound,
    packing_premeasure,
    slab_cover_centers,
    slab_covering_constant,
)

KOCH_DIM = math.log(4) / math.log(3)


def segment(h=1e-4, length=1.0, offset=(0.0, 0.0)):
    t = np.linspace(0, length, int(round(length / h)) + 1)
    return PointCloud(np.column_stack([t + offset[0], np.full_like(t, offset[1])]), h)


def arc_length(cloud):
    return float(np.sum(np.linalg.norm(np.diff(cloud.points, axis=0), axis=1)))


def naive_box_count(points, eps):
    return len({tuple(int(math.floor(x / eps)) for x in p) for p in points})


# --- box counting

def test_single_point_occupies_one_box():
    c = PointCloud([[0.3, 0.7]], 0.01)
    assert all(box_count(c, e) == 1 for e in (1.0, 0.1, 0.001))


def test_unit_segment_counts_endpoint_cube():
    assert box_count(segment(0.01), 1 / 8) == 9


@given(st.integers(0, 10_000), st.floats(0.01, 1.0))
def test_box_count_matches_naive_enumeration(seed, eps):
    pts = np.random.default_rng(seed).normal(size=(200, 3))
    assert box_count(PointCloud(pts, 1e-3), eps) == naive_box_count(pts, eps)


@given(st.integers(0, 10_000), st.floats(0.005, 0.5), st.integers(1, 3))
def test_box_count_sandwich(seed, eps, n):
    c = PointCloud(np.random.default_rng(seed).uniform(-1, 1, size=(300, n)), 1e-4)
    coarse, fine = box_count(c, 2 * eps), box_count(c, eps)
    assert coarse <= fine <= 3 ** n * coarse


def test_zero_dimensional_comb_slope():
    c = gen_comb(0, 1, 1000, h=1e-5)
    assert minkowski_dims(c, 2.0 ** -np.arange(3, 11)).slope == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("j,scales", [(1, 2.0 ** -np.arange(3, 9)), (2, np.geomspace(0.1, 0.02, 6))])
def test_flat_patch_slope(j, scales):
    c = gen_plane_patch(j, j + 1, radius=1.0, h=2e-3 if j == 2 else 1e-4)
    assert minkowski_dims(c, scales).slope == pytest.approx(j, abs=0.05)


def test_comb_slope():
    c = gen_comb(1, 2, 200, h=2.0 ** -11)
    assert minkowski_dims(c, 2.0 ** -np.arange(3, 8)).slope == pytest.approx(1.5, abs=0.1)


def test_koch_slope():
    k = gen_koch(math.pi / 3, 8)
    est = minkowski_dims(k, koch_box_scales(k, 1 / 3), shifts=16)
    assert est.slope == pytest.approx(KOCH_DIM, abs=0.02)
    assert est.lower_est <= est.slope <= est.upper_est


def test_scales_below_resolution_rejected():
    with pytest.raises(InputError):
        minkowski_dims(segment(0.01), [0.5, 0.2, 0.1, 0.05])


def test_too_few_scales_rejected():
    with pytest.raises(InputError):
        minkowski_dims(segment(1e-3), [0.5, 0.2, 0.1])


def test_loglog_pairs():
    est = minkowski_dims(segment(1e-3), 2.0 ** -np.arange(2, 7))
    ll = est.loglog()
    assert ll.shape == (5, 2)
    assert np.allclose(ll[:, 0], np.arange(2, 7) * math.log(2))


# --- decompositions

def test_comb_slab_decomposition_bound():
    c = gen_comb(1, 2, 200, h=2.0 ** -11)
    scales = 2.0 ** -np.arange(3, 8)
    bound = packing_dim_bound(comb_slabs(c, 200), scales)
    assert bound == pytest.approx(1.0, abs=0.05)
    assert minkowski_dims(c, scales).slope - bound >= 0.3


def test_single_part_decomposition_is_whole():
    c = gen_circle(1.0, 1e-3)
    scales = 2.0 ** -np.arange(2, 6)
    assert packing_dim_bound([c], scales) == minkowski_dims(c, scales).slope


def test_koch_pieces_do_not_lower_the_bound():
    k = gen_koch(math.pi / 3, 8)
    scales = koch_box_scales(k, 1 / 3)
    assert packing_dim_bound(koch_pieces(k), scales, shifts=16) == pytest.approx(KOCH_DIM, abs=0.03)


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.integers(2, 3))
def test_decomposition_never_exceeds_whole(seed, parts):
    # contiguous arcs; scales stay well below the arc size so short parts are not undercounted,
    # shifted lattices remove the phase bias of diagonal segments
    c = gen_lipschitz_graph(1, 2, 1.0, seed=seed, h=1e-4)
    cuts = np.linspace(0, len(c), parts + 1).astype(int)
    pieces = [c.subset(slice(a, b)) for a, b in zip(cuts, cuts[1:])]
    scales = 2.0 ** -np.arange(5, 10)
    assert packing_dim_bound(pieces, scales, shifts=8) <= minkowski_dims(c, scales, shifts=8).slope + 0.05


# --- pre-measures

def test_segment_packing_premeasure():
    for eta_ in (0.02, 0.01, 0.005):
        assert packing_premeasure(segment(), 1, eta_) == pytest.approx(1.0, abs=0.05)


def test_single_point_premeasures():
    c = PointCloud([[0.0, 0.0]], 1e-3)
    assert packing_premeasure(c, 1, 0.1) == pytest.approx(0.2)
    assert hausdorff_premeasure(c, 2, 0.1) == pytest.approx(math.pi * 0.01)


def test_disc_variable_packing_approaches_area():
    disc = gen_plane_patch(2, 2, radius=1.0, h=0.004)
    assert packing_premeasure(disc, 2, 0.05, mode="variable") == pytest.approx(math.pi, rel=0.05)


def test_segment_hausdorff_premeasure():
    for d in (0.02, 0.01, 0.005):
        assert hausdorff_premeasure(segment(), 1, d) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_graph_hausdorff_premeasure_near_arc_length(seed):
    g = gen_lipschitz_graph(1, 2, 1.0, seed=seed, h=1e-4)
    L = arc_length(g)
    assert 1.0 <= L <= math.sqrt(2)
    est = hausdorff_premeasure(g, 1, 0.01)
    assert 1.0 <= est <= math.sqrt(2) * 1.05
    assert est == pytest.approx(L, rel=0.06)


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.floats(0.0, 1.5), st.sampled_from([0.02, 0.01]))
def test_packing_dominates_covering_on_curves(seed, M, scale):
    g = gen_lipschitz_graph(1, 2, M, seed=seed, h=2e-4)
    rep = measure_compare(g, 1, scale)
    assert rep.packing_pre >= 0.9 * rep.hausdorff_pre


def test_disjoint_segments_add():
    a, b = segment(), segment(offset=(0.0, 0.5))
    both = union(a, b)
    rep = measure_compare(both, 1, 0.01)
    assert rep.hausdorff_pre == pytest.approx(2.0, rel=0.05)
    assert rep.packing_pre == pytest.approx(2.0, rel=0.05)


def test_segment_ratio_is_one():
    assert measure_compare(segment(), 1, 0.01).ratio == pytest.approx(1.0, abs=0.05)


def test_graph_ratio_within_lipschitz_bounds():
    _, C = lipschitz_constants(1.0, 1)
    rep = measure_compare(gen_lipschitz_graph(1, 2, 1.0, seed=0, h=1e-4), 1, 0.02)
    assert 0.95 <= rep.ratio <= C + 0.05


def test_unknown_packing_mode():
    with pytest.raises(InputError):
        packing_premeasure(segment(1e-3), 1, 0.1, mode="best")


# --- explicit constants

def test_one_dimensional_slab_constant():
    for d in (1 / 8, 1 / 16, 1 / 64):
        q, C = slab_covering_constant(1, 1, d)
        assert q == 2 * math.floor(1 / (4 * d)) + 1
        assert C <= 3


def test_planar_slab_constant_and_cover():
    q, C = slab_covering_constant(2, 1, 1 / 16)
    assert C == pytest.approx(q / 4) and C <= 10
    centers = slab_cover_centers(2, 1, 1 / 16)
    assert len(centers) == q
    # dense samples of the slab L^{2 delta} ∩ B_1 must each be within 4 delta of a center
    g = np.random.default_rng(0).uniform(-1, 1, size=(200_000, 2)) * [1, 1 / 8]
    g = g[np.linalg.norm(g, axis=1) <= 1]
    dist = np.min(np.linalg.norm(g[:, None, :] - centers[None, :, :], axis=2), axis=1)
    assert dist.max() <= 4 / 16 + 1e-12


@pytest.mark.parametrize("n,j", [(2, 1), (3, 1), (3, 2)])
def test_slab_constant_halving(n, j):
    for k in range(3, 8):
        d = 2.0 ** -k
        assert slab_covering_constant(n, j, d / 2)[1] <= 2 * slab_covering_constant(n, j, d)[1]


def test_slab_constant_range():
    with pytest.raises(InputError):
        slab_covering_constant(2, 1, 0.2)


def test_eta_examples():
    assert eta(1 / 8, 8, 2, 1) == pytest.approx(4.0)
    C = 3.0
    assert eta(1 / (8 * C), C, 2, 1) == pytest.approx(1.0)
    assert eta(0.2, 5.0, 3, 1) == 3


@pytest.mark.parametrize("C", [0.6, 1.5, 3.0])
def test_eta_decreasing_to_zero_for_fixed_constant(C):
    vals = [eta(2.0 ** -k, C, 2, 1) for k in range(3, 80)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.05


def test_eta_below_threshold_by_twenty_halvings_needs_small_constant():
    # -ln(2C) / ln(4 * 2^-20) < 0.05 exactly when 2C < exp(0.05 * 18 ln 2)
    limit = math.exp(0.05 * 18 * math.log(2)) / 2
    assert eta(2.0 ** -20, 0.99 * limit, 2, 1) < 0.05
    assert eta(2.0 ** -20, 1.01 * limit, 2, 1) > 0.05


def test_lipschitz_constants():
    assert lipschitz_constants(0.0, 1)[0] == pytest.approx(2.0)
    c, C = lipschitz_constants(1.0, 1)
    assert c == pytest.approx(math.sqrt(2))
    assert C == pytest.approx(2 * math.sqrt(2))


# --- recursion and ball bounds

def test_flat_patch_recursion_halves():
    rep = covering_recursion_check(gen_plane_patch(1, 2, radius=1.0, h=1e-4), 1, 1 / 16)
    assert rep.passed
    assert all(lv.decay is None or lv.decay <= 0.5 for lv in rep.levels)
    assert len(rep.levels) >= 3


def test_circle_recursion_halves():
    R = 1.0
    rep = covering_recursion_check(gen_circle(R, 1e-4), 1, 1 / 16, lam=0.1 * R)
    assert rep.passed


def test_comb_recursion_per_slab():
    slabs = comb_slabs(gen_comb(1, 2, 10, h=1e-4), 10)
    assert all(covering_recursion_check(s, 1, 1 / 16).passed for s in slabs)


def test_flat_graph_ball_bound_tight():
    g = gen_lipschitz_graph(1, 2, 0.0, h=1e-4)
    rep = graph_ball_lower_bound_check(g, 0.0, 1, trials=30)
    assert rep.used > 0 and rep.min_ratio >= 1 - 0.05


def test_graph_ball_bound_holds():
    g = gen_lipschitz_graph(1, 2, 1.0, seed=0, h=1e-4)
    rep = graph_ball_lower_bound_check(g, 1.0, 1, trials=100)
    assert rep.used == 100
    assert rep.passed


def test_measures_scale_like_length():
    g = gen_lipschitz_graph(1, 2, 0.5, seed=4, h=1e-4)
    big = similarity_transform(g, scale=2.0)
    assert hausdorff_premeasure(big, 1, 0.02) == pytest.approx(2 * hausdorff_premeasure(g, 1, 0.01), rel=0.03)
