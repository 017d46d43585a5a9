import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import ks_2samp

from mubpilot.channel import (UserDrop, build_geometry, fold_into_cluster, compute_gains, draw_channels, drop_users,
                              in_hexagon, uplink_receive, wrap_distance)
from mubpilot.codebook import build_mub
from mubpilot.errors import DimensionMismatch, InvalidParameter


@pytest.fixture(scope="module")
def geo():
    return build_geometry(10.0, 2.5)


def in_cluster(points, geo):
    return np.any([in_hexagon(points, c, geo.R) for c in geo.bs_positions], axis=0)


def test_bs_layout(geo):
    assert geo.J == 7
    np.testing.assert_array_equal(geo.bs_positions[0], [0.0, 0.0])
    d = np.hypot(*geo.bs_positions[1:].T)
    np.testing.assert_allclose(d, np.sqrt(3) * 10, rtol=1e-14)
    ang = np.degrees(np.arctan2(geo.bs_positions[1:, 1], geo.bs_positions[1:, 0])) % 360
    np.testing.assert_allclose(np.sort(ang), [30, 90, 150, 210, 270, 330], atol=1e-9)
    assert d[0] == pytest.approx(17.3205, abs=1e-4)


def test_wrap_translations(geo):
    t = geo.wrap_translations
    np.testing.assert_array_equal(t[0], [0.0, 0.0])
    np.testing.assert_allclose(np.hypot(*t[1:].T), np.sqrt(21) * 10, rtol=1e-13)
    assert np.sqrt(21) * 10 == pytest.approx(45.8258, abs=1e-4)


@pytest.mark.parametrize("R, alpha", [(0, 2.5), (10, 0), (-1, 2), (10, -3)])
def test_invalid_geometry(R, alpha):
    with pytest.raises(InvalidParameter):
        build_geometry(R, alpha)


def test_cluster_tiles_plane(geo):
    # every point within one cluster diameter maps into the cluster under
    # exactly one translation (grid offset keeps points off cell borders)
    D = geo.cluster_diameter
    x = np.linspace(-D, D, 120) + 0.0137
    pts = np.stack(np.meshgrid(x, x), axis=-1).reshape(-1, 2)
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= D]
    assert pts.shape[0] >= 10_000
    hits = np.sum([in_cluster(pts - t, geo) for t in geo.wrap_translations], axis=0)
    assert np.all(hits == 1)


def test_cluster_area(geo):
    # seven hexagons of area 3 sqrt(3) R^2 / 2 = one lattice cell |T1 x T2|
    t1, t2 = geo.wrap_translations[1], geo.wrap_translations[3]
    assert abs(t1[0] * t2[1] - t1[1] * t2[0]) == pytest.approx(7 * 1.5 * np.sqrt(3) * 100)


def test_wrap_distance_bounded_by_cluster_diameter(geo, rng):
    pts = drop_users(geo, 500, 0.0, rng).positions.reshape(-1, 2)
    d = wrap_distance(pts, geo.bs_positions, geo.wrap_translations)
    assert d.max() <= geo.cluster_diameter


def test_wrap_symmetry(geo):
    # each BS sees the same multiset of wrap distances to the others
    d = wrap_distance(geo.bs_positions, geo.bs_positions, geo.wrap_translations)
    rows = np.sort(d, axis=1)
    np.testing.assert_allclose(rows, np.tile(rows[0], (7, 1)), atol=1e-9)
    np.testing.assert_allclose(rows[0, 1:], np.sqrt(3) * 10, rtol=1e-12)


def test_drop_single_user_deterministic(geo):
    a = drop_users(geo, 1, 0.5, np.random.default_rng(1), J=1)
    b = drop_users(geo, 1, 0.5, np.random.default_rng(1), J=1)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert a.positions.shape == (1, 1, 2)
    assert in_hexagon(a.positions[0, 0], geo.bs_positions[0], 10.0)


def test_drop_respects_hexagon_and_dmin(geo, rng):
    drop = drop_users(geo, 300, 1.0, rng)
    for j in range(7):
        rel = drop.positions[j] - geo.bs_positions[j]
        assert np.all(in_hexagon(drop.positions[j], geo.bs_positions[j], 10.0))
        assert np.all(np.hypot(rel[:, 0], rel[:, 1]) >= 1.0)


def test_first_draw_acceptance_fraction(geo):
    d_min = 3.0
    drop = drop_users(geo, 20_000, d_min, np.random.default_rng(8))
    observed = drop.positions[..., 0].size / drop.draws
    expected = 1 - np.pi * d_min ** 2 / (3 * np.sqrt(3) * 100 / 2)
    assert observed == pytest.approx(expected, rel=0.01)


def test_uniform_in_hexagon(geo):
    # radial CDF of a uniform hexagon: the inscribed disc holds pi r^2 / area
    drop = drop_users(geo, 50_000, 0.0, np.random.default_rng(2), J=1)
    r = np.hypot(*drop.positions[0].T)
    for rad in (2.0, 5.0, 8.0):
        frac = np.mean(r <= rad)
        assert frac == pytest.approx(np.pi * rad ** 2 / (1.5 * np.sqrt(3) * 100), abs=0.01)


def test_statistical_homogeneity(geo):
    rng = np.random.default_rng(12)
    own, inter = [], []
    for _ in range(10):
        g = compute_gains(geo, drop_users(geo, 10_000, 0.5, rng))
        idx = np.arange(7)
        own.append(g[idx, idx])                   # (cell, user)
        inter.append(g.sum(axis=0) - g[idx, idx])  # gain to all other BSs
    own, inter = np.hstack(own), np.hstack(inter)
    assert own.shape == (7, 100_000)
    for j in range(1, 7):
        assert ks_2samp(own[0], own[j]).pvalue > 1e-3
        assert ks_2samp(inter[0], inter[j]).pvalue > 1e-3


def test_gain_formula(geo):
    pos = np.zeros((7, 1, 2))
    pos[:, 0] = geo.bs_positions + [0.0, 3.0]
    pos[0, 0] = [10.0, 0.0]
    g = compute_gains(geo, UserDrop(pos, 7))
    assert g[0, 0, 0] == pytest.approx(10 ** -2.5, rel=1e-14)
    assert g[0, 0, 0] == pytest.approx(3.16228e-3, rel=1e-5)
    assert np.all(compute_gains(geo, UserDrop(pos, 7), alpha=0.0) == 1.0)


def test_wrapped_gain_at_least_direct(geo, rng):
    drop = drop_users(geo, 50, 0.5, rng)
    g = compute_gains(geo, drop)
    direct = np.linalg.norm(drop.positions[None] - geo.bs_positions[:, None, None], axis=-1)
    assert np.all(g >= direct ** -2.5 * (1 - 1e-12))
    assert np.any(g > direct ** -2.5 * 1.5)


def test_gains_invariant_to_wrap_shift(geo, rng):
    drop = drop_users(geo, 20, 0.5, rng)
    g = compute_gains(geo, drop)
    for t in geo.wrap_translations[1:]:
        shifted = UserDrop(drop.positions + t, drop.draws)
        np.testing.assert_allclose(compute_gains(geo, shifted), g, rtol=1e-10)


def test_channel_variance_large_m(rng):
    H = draw_channels(np.ones((1, 1, 1)), 100_000, rng)
    assert np.mean(np.abs(H[0, 0]) ** 2) == pytest.approx(1.0, rel=0.02)
    assert abs(np.mean(H[0, 0].real ** 2) - 0.5) < 0.01  # circular


def test_channel_shape_and_scaling(rng):
    g = np.array([[[4.0, 0.25]], [[1.0, 9.0]]])
    H = draw_channels(g, 40_000, rng)
    assert H.shape == (2, 2, 40_000)
    np.testing.assert_allclose(np.mean(np.abs(H) ** 2, axis=-1), g.reshape(2, 2), rtol=0.03)


def test_channels_deterministic():
    g = np.full((7, 7, 3), 0.1)
    a = draw_channels(g, 16, np.random.default_rng(4))
    b = draw_channels(g, 16, np.random.default_rng(4))
    assert a.tobytes() == b.tobytes()


def test_channel_rows_uncorrelated(rng):
    M = 4096
    H = draw_channels(np.ones((1, 2, 1)), M, rng)[0]
    rho = np.vdot(H[0], H[1]) / np.sqrt(np.vdot(H[0], H[0]).real * np.vdot(H[1], H[1]).real)
    assert abs(rho) < 3 / np.sqrt(M)


def test_draw_channels_rejects_zero_m(rng):
    with pytest.raises(InvalidParameter):
        draw_channels(np.ones((1, 1, 1)), 0, rng)


def test_uplink_noiseless_single_user(rng):
    P = np.eye(4)[:, :1]
    h = rng.standard_normal((1, 8)) + 1j * rng.standard_normal((1, 8))
    Y = uplink_receive(P, h, 0.0, rng)
    np.testing.assert_array_equal(Y[0], h[0])
    assert not Y[1:].any()


def test_uplink_energy_moment():
    rng = np.random.default_rng(6)
    cb = build_mub(7, 7, rng).truncate(3)
    g = rng.uniform(0.1, 2.0, size=(7, 7, 3))
    M, s2 = 64, 0.5
    energy = []
    for _ in range(400):
        H = draw_channels(g, M, rng)
        energy.append(np.linalg.norm(uplink_receive(cb, H[0], s2, rng)) ** 2)
    expected = g[0].sum() * M + 7 * M * s2
    assert np.mean(energy) == pytest.approx(expected, rel=0.02)


def test_uplink_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        uplink_receive(np.eye(3), np.ones((2, 5)), 1.0, rng)


def test_uplink_deterministic():
    P = np.eye(3)
    H = np.ones((3, 4))
    a = uplink_receive(P, H, 0.1, np.random.default_rng(0))
    b = uplink_receive(P, H, 0.1, np.random.default_rng(0))
    assert a.tobytes() == b.tobytes()


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_folded_distance_periodic(x, y):
    geo = build_geometry()
    p = fold_into_cluster(np.array([[x, y]]), geo)
    assert in_cluster(p, geo)[0]
    base = wrap_distance(p, geo.bs_positions, geo.wrap_translations)
    for t in geo.wrap_translations[1:]:
        q = fold_into_cluster(p + t, geo)
        moved = wrap_distance(q, geo.bs_positions, geo.wrap_translations)
        np.testing.assert_allclose(moved, base, rtol=1e-9, atol=1e-9)
