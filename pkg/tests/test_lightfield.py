import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfdepth import lightfield as L
from lfdepth.errors import DegenerateInput, OutOfView, SingularDepth


def ramp_lf(M=8, N=6, views=3):
    m = np.arange(M) / (M - 1)
    img = np.broadcast_to(m[None, :, None], (N, M, 3))
    return L.DiscreteLightField(np.broadcast_to(img, (views, views, N, M, 3)).copy())


def test_geometry_validation():
    with pytest.raises(ValueError):
        L.LFGeometry(D=1.0)
    with pytest.raises(ValueError):
        L.LFGeometry(delta_u=(0.0, 1.0))
    with pytest.raises(ValueError):
        L.LFGeometry(disp_min=1.0, disp_max=1.0)
    with pytest.raises(OutOfView):
        L.LFGeometry(k_ref=(9, 4)).check_grid((9, 9, 10, 10))


def test_eta_and_bounds():
    g = L.LFGeometry(delta_u=(1.0, 2.0), delta_s=(2.0, 2.0), disp_min=-1, disp_max=1)
    assert np.allclose(g.eta, [2.0, 1.0])
    assert g.tan_bounds == (-0.5, 0.5)


def test_light_field_invariants():
    with pytest.raises(ValueError):
        L.DiscreteLightField(np.full((3, 3, 4, 4, 3), 1.5))
    with pytest.raises(ValueError):
        L.DiscreteLightField(np.full((3, 3, 4, 4, 3), np.nan))
    with pytest.raises(DegenerateInput):
        L.DiscreteLightField(np.zeros((3, 3, 4, 4)))
    lf = ramp_lf()
    assert lf.dims == (3, 3, 8, 6)
    with pytest.raises(OutOfView):
        lf.view((3, 0))


@pytest.mark.parametrize("eta,t,expected", [
    ((1, 1), 0.0, [0.0, 0.0]),
    ((1, 1), 0.5, [0.5, 0.5]),
    ((2, 1), 0.25, [0.5, 0.25]),
])
def test_disparity_from_tan(eta, t, expected):
    g = L.LFGeometry(delta_u=(1, 1), delta_s=eta)
    assert np.allclose(L.disparity_from_tan(g, t), expected)


def test_depth_from_tan_examples():
    g = L.LFGeometry(D=-1.0, Z_p=2.0)
    assert L.depth_from_tan(g, 0.0) == 2.0
    assert L.depth_from_tan(g, 0.5) == pytest.approx(1.0)
    with pytest.raises(SingularDepth):
        L.depth_from_tan(L.LFGeometry(D=-1.0, Z_p=1.0), -1.0)


@pytest.mark.parametrize("z", [0.5, 1.0, 10.0])
def test_depth_tan_round_trip(z):
    g = L.LFGeometry(D=-1.0, Z_p=2.0)
    assert abs(L.depth_from_tan(g, L.tan_from_depth(g, z)) - z) <= 1e-12 * z


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.5, 1.5))
def test_tan_depth_round_trip_property(t):
    g = L.LFGeometry(D=-200.0, Z_p=100.0)
    back = L.tan_from_depth(g, L.depth_from_tan(g, t))
    assert abs(back - t) <= 1e-12 * max(1.0, abs(t))


def test_sample_bilinear_grid_and_linear():
    lf = ramp_lf()
    view = lf.view((1, 1))
    assert np.array_equal(L.sample_bilinear(lf, (3, 4), (1, 1)), view[4, 3])
    assert np.allclose(L.sample_bilinear(lf, (2.5, 2), (1, 1)), 2.5 / 7, atol=1e-7)
    const = L.DiscreteLightField(np.full((3, 3, 6, 8, 3), 0.25))
    assert np.allclose(L.sample_bilinear(const, (4.3, 1.7), (0, 2)), 0.25)
    with pytest.raises(OutOfView):
        L.sample_bilinear(lf, (1, 1), (5, 0))
    with pytest.raises(ValueError):
        L.sample_bilinear(lf, (-0.6, 1), (0, 0))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 7), st.floats(0, 5))
def test_bilinear_exact_on_linear_image(x, y):
    N, M = 6, 8
    yy, xx = np.mgrid[0:N, 0:M]
    img = 0.05 * xx + 0.07 * yy + 0.01
    lf = L.DiscreteLightField(np.broadcast_to(img[..., None], (3, 3, N, M, 3)).astype(np.float64))
    got = L.sample_bilinear(lf, (x, y), (0, 0))
    # float32 storage bounds the exactness
    assert np.allclose(got, 0.05 * x + 0.07 * y + 0.01, atol=1e-6)


def test_ppi_zero_orientation_and_invalid_views():
    lf = ramp_lf(M=10, N=10, views=9)
    g = L.LFGeometry(k_ref=(4, 4), disp_min=-2, disp_max=2)
    ppi = L.extract_ppi(lf, g, (3.2, 4.0), 0.0)
    assert ppi.valid.all()
    assert np.allclose(ppi.colors, ppi.colors[4, 4])
    corner = L.extract_ppi(lf, g, (9, 9), 2.0)
    assert corner.valid[4, 4]
    assert not corner.valid[8, 8] and not corner.valid[4, 8] and not corner.valid[8, 4]
    assert corner.valid[0, 0]


def test_ppi_constant_on_ramp_plane(ramp_scene, geom):
    # bilinear resampling is exact on linear textures, so the PPI is flat
    ppi = L.extract_ppi(ramp_scene.light_field, geom, (40.3, 51.7), 0.5)
    assert ppi.valid.all()
    assert np.abs(ppi.colors - ppi.colors[4, 4]).max() < 1e-6


def test_ppi_shift_invariance(ramp_scene, geom):
    # wrong orientation == correct orientation at a shifted origin
    lf, eta, delta = ramp_scene.light_field, geom.eta, 0.2
    wrong = L.extract_ppi(lf, geom, (48, 48), 0.5 + delta)
    for k, l in [(0, 0), (2, 7), (8, 3)]:
        a, b = k - 4, l - 4
        shifted = L.extract_ppi(lf, geom, (48 + eta[0] * a * delta, 48 + eta[1] * b * delta), 0.5)
        assert np.abs(wrong.colors[l, k] - shifted.colors[l, k]).max() < 1e-6


def test_point3d_from_pixel():
    g = L.LFGeometry(delta_u=(0.01, 0.01), D=-2.0, Z_p=5.0, m_ref=(3, 3))
    x = L.point3d_from_pixel(g, (3, 3), 0.4)
    assert x[0] == 0 and x[1] == 0 and x[2] == pytest.approx(L.depth_from_tan(g, 0.4))
    x = L.point3d_from_pixel(g, (4, 3), 0.0)
    assert np.allclose(x, [0.01 * 5.0 / -2.0, 0.0, 5.0])


def test_point_map_on_slanted_plane(slanted_pair, geom):
    from lfdepth.synth import load_scene
    from conftest import FIXTURES

    scene = load_scene(FIXTURES / "slanted_pair.scene")
    wall = scene.planes[1]
    pts = L.point_map(scene.geometry, slanted_pair.gt)
    on_wall = slanted_pair.plane_index == 1
    resid = pts[on_wall] @ np.asarray(wall.normal) - wall.offset
    assert np.abs(resid).max() < 1e-6 * np.abs(pts[on_wall]).max()


def test_epi_slices(plane_scene, geom):
    lf = plane_scene.light_field
    h = L.horizontal_epi(lf, geom, 10)
    v = L.vertical_epi(lf, geom, 20)
    assert h.shape == (9, 96, 3) and v.shape == (9, 96, 3)
    assert np.array_equal(h[4], lf.view(geom.k_ref)[10])
    assert np.array_equal(v[4], lf.view(geom.k_ref)[:, 20])


def test_orientation_map():
    g = L.LFGeometry(disp_min=-1, disp_max=1)
    m = L.OrientationMap(np.array([[2.0, -0.5]]), g)
    assert not m.within_bounds()
    assert m.clamped().within_bounds()
    with pytest.raises(ValueError):
        L.OrientationMap(np.array([[np.inf]]), g)
