import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frame_extend.domain import (
    BUILTIN_DOMAINS,
    TEST_SHAPES,
    DomainMask,
    EmptyMaskError,
    MaskFormatError,
    builtin_domain,
    disk,
    implicit,
    load_mask,
    mask_domain,
    rasterize,
    save_mask,
    star_radius,
)
from frame_extend.grid import GridSpec, build_spatial_grid

# sample counts from an independent pure-Python loop over grid coordinates
FROZEN_COUNTS = {
    16: {"square": 81, "diamond": 61, "disk": 69, "ring": 60},
    32: {"square": 289, "diamond": 265, "disk": 253, "ring": 256},
    36: {"square": 361, "diamond": 313, "disk": 325, "ring": 316},
}


@pytest.mark.parametrize("n", sorted(FROZEN_COUNTS))
def test_sample_counts_frozen(n):
    for name, count in FROZEN_COUNTS[n].items():
        assert rasterize(builtin_domain(name), GridSpec(n, 1)).N_omega == count, name


def test_shape_areas_are_four():
    # Monte Carlo area on the box [-2.2, 2.2]^2 with a fixed seed
    rng = np.random.Generator(np.random.Philox(5))
    pts = rng.uniform(-2.2, 2.2, size=(400_000, 2))
    for name in TEST_SHAPES:
        area = builtin_domain(name).contains(pts).mean() * 4.4**2
        assert area == pytest.approx(4.0, rel=0.02), name


def test_star_radius_sector_structure():
    # eight-fold symmetry and tips on the sector midlines
    t = np.linspace(0, 2 * np.pi, 721)
    r = star_radius(t)
    assert np.allclose(star_radius(t + np.pi / 4), r)
    assert star_radius(np.radians(22.5)) == pytest.approx(1.449**2)
    assert r.min() > 0.8


def test_boundary_points_are_inside():
    d = builtin_domain("square")
    assert d.contains(np.array([[1.0, 1.0], [1.0, 0.0]])).all()


def test_unknown_domain():
    with pytest.raises(ValueError, match="unknown domain"):
        builtin_domain("hexagon")


def test_empty_mask_raises():
    with pytest.raises(EmptyMaskError):
        rasterize(implicit(lambda p: np.zeros(p.shape[:-1], bool)), GridSpec(8, 2))


def test_underdetermined_warns():
    with pytest.warns(UserWarning, match="underdetermined"):
        rasterize(disk(0.3), GridSpec(16, 8))


def test_mask_validates_size():
    with pytest.raises(ValueError):
        DomainMask(GridSpec(4, 2), np.ones(15, bool))


def test_mask_is_immutable():
    m = rasterize(builtin_domain("disk"), GridSpec(16, 4))
    with pytest.raises(ValueError):
        m.inside[0] = True


def test_samples_ascending_and_coords():
    spec = GridSpec(16, 4)
    m = rasterize(builtin_domain("ring"), spec)
    assert np.all(np.diff(m.samples) > 0)
    r2 = np.sum(m.coords() ** 2, axis=1)
    assert np.all((r2 >= 0.25) & (r2 <= 4 / math.pi + 0.25))


def test_mask_file_roundtrip(tmp_path):
    spec = GridSpec(32, 8)
    for name in BUILTIN_DOMAINS:
        m = rasterize(builtin_domain(name), spec)
        p = tmp_path / f"{name}.mask"
        save_mask(m, p)
        text = p.read_text().splitlines()
        assert text[0] == "MASK 32 32" and len(text) == 33
        assert np.array_equal(load_mask(p, spec).inside, m.inside)


@pytest.mark.parametrize(
    "body, match",
    [
        ("MASX 2 2\n11\n11\n", "header"),
        ("MASK a b\n11\n11\n", "header"),
        ("MASK 3 3\n111\n111\n111\n", "grid is 2x2"),
        ("MASK 2 2\n11\n", "rows"),
        ("MASK 2 2\n12\n11\n", "0/1"),
        ("MASK 2 2\n111\n11\n", "0/1"),
    ],
)
def test_mask_file_errors(tmp_path, body, match):
    p = tmp_path / "bad.mask"
    p.write_text(body)
    with pytest.raises(MaskFormatError, match=match):
        load_mask(p, GridSpec(2, 1))


def test_mask_domain_membership_matches_grid():
    spec = GridSpec(16, 4)
    m = rasterize(builtin_domain("star"), spec)
    _, coords = build_spatial_grid(spec)
    # grid points and small perturbations map back to their own cells
    jitter = coords + 0.3 * spec.spacing
    d = mask_domain(m)
    assert np.array_equal(d.contains(coords), m.inside)
    assert np.array_equal(d.contains(jitter), m.inside)
    assert not d.contains(np.array([[5.0, 0.0]]))[0]


@given(r=st.floats(0.3, 1.9), n=st.integers(8, 40))
def test_disk_rasterization_matches_brute_force(r, n):
    spec = GridSpec(n, 1)
    h = 4.0 / n
    expected = [(-2 + h * i) ** 2 + (-2 + h * j) ** 2 <= r * r for i in range(n) for j in range(n)]
    if not any(expected):
        return
    assert rasterize(disk(r), spec).inside.tolist() == expected
