import numpy as np
import pytest

from lfdepth import synth
from lfdepth.errors import SceneParseError
from lfdepth.lightfield import OrientationMap, horizontal_epi


def test_plane_at_focus_has_zero_orientation(geom):
    p = synth.Plane((0.0, 0.0, -1.0), -geom.Z_p, synth.Texture("noise", seed=4))
    r = synth.render(synth.SynthScene((p,), geom))
    assert np.abs(r.gt.values).max() < 1e-12
    # vertical EPI lines: every view sees the same image
    assert np.array_equal(r.light_field.view((0, 0)), r.light_field.view((8, 8)))
    assert r.gt_valid.all() and r.visibility.all()


def test_epi_slope_by_least_squares(geom):
    tex = synth.Texture("ramp", color=(0.3, 0.3, 0.3), grad_x=(0.004, 0.0, 0.0))
    p = synth.Plane.from_disparity(geom, 0.5, texture=tex)
    r = synth.render(synth.SynthScene((p,), geom))
    assert np.abs(r.gt.values - 0.5).max() < 1e-12
    epi = horizontal_epi(r.light_field, geom, 40)[..., 0].astype(float)
    u = np.arange(epi.shape[1], dtype=float)
    target = epi[4, 48]
    a = np.arange(9) - 4.0
    # where each view row takes the reference sample's value
    pos = []
    for row in epi:
        c1, c0 = np.polyfit(u, row, 1)
        pos.append((target - c0) / c1)
    slope, icpt = np.polyfit(a, pos, 1)
    resid = np.asarray(pos) - (slope * a + icpt)
    assert slope == pytest.approx(0.5 / geom.eta[0], abs=1e-4)
    # float32 storage of the views bounds the residual
    assert np.abs(resid).max() < 1e-3


def test_two_plane_visibility_geometry(two_plane_fractional, geom):
    """Background pixels are hidden exactly in the views where the
    foreground square covers their projection."""
    r = two_plane_fractional
    lo, hi = 30.5, 64.5
    a = np.arange(9) - 4
    mism = total = 0
    for y in range(0, 96, 3):
        for x in range(0, 96, 3):
            if r.plane_index[y, x] != 1:
                continue
            # foreground pixel rx lands on x + 0.2a in view a when rx + 0.8a = x + 0.2a
            fx = x - 0.6 * a[None, :]
            fy = y - 0.6 * a[:, None]
            hidden = (fx >= lo) & (fx <= hi) & (fy >= lo) & (fy <= hi)
            want = ~hidden
            on_edge = (np.isclose(fx, lo) | np.isclose(fx, hi)) | (np.isclose(fy, lo) | np.isclose(fy, hi))
            got = r.visibility[y, x]
            mism += np.sum((got != want) & ~on_edge)
            total += got.size
    assert total > 0 and mism == 0
    fg = r.plane_index == 0
    assert r.visibility[fg].all()


def test_background_gt_invalid_without_plane(geom):
    p = synth.Plane.from_disparity(geom, 0.1, texture=synth.Texture("constant", color=(0.5,) * 3),
                                   extent=(20, 20, 40, 40))
    r = synth.render(synth.SynthScene((p,), geom, background=(0.1, 0.2, 0.3)))
    assert not r.gt_valid[0, 0] and r.gt_valid[30, 30]
    assert np.allclose(r.light_field.view(geom.k_ref)[0, 0], (0.1, 0.2, 0.3))
    assert not r.visibility[0, 0].any()


def test_render_rejects_out_of_range(geom):
    p = synth.Plane.from_disparity(geom, 1.4, gradient=(0.01, 0.0))
    with pytest.raises(ValueError):
        synth.render(synth.SynthScene((p,), geom))


def test_planar_mask(two_plane):
    m = synth.planar_mask(two_plane, margin=3)
    assert not m[28:34, 48].any() and m[34, 48] and m[48, 48] and m[5, 5]
    assert not m[0, 0]  # window leaves the image


def test_corrupt(geom):
    t = OrientationMap(np.full((20, 20), 1.4), geom)
    assert np.array_equal(synth.corrupt(t, 0.0, seed=1).values, t.values)
    c = synth.corrupt(t, 0.3, seed=2)
    assert np.abs(c.values - t.values).max() <= 0.3
    assert c.within_bounds() and c.values.max() == 1.5
    again = synth.corrupt(t, 0.3, seed=2)
    assert c.values.tobytes() == again.values.tobytes()
    g = synth.corrupt(t, 0.1, seed=2, noise="gaussian")
    assert g.within_bounds() and not np.array_equal(g.values, c.values)
    with pytest.raises(ValueError):
        synth.corrupt(t, 0.1, noise="laplace")


def test_textures():
    x = np.linspace(0, 40, 50)
    y = np.linspace(3, 9, 50)
    n = synth.Texture("noise", seed=0).evaluate(x, y)
    assert n.shape == (50, 3) and n.min() >= 0 and n.max() <= 1
    assert np.array_equal(n, synth.Texture("noise", seed=0).evaluate(x, y))
    ramp = synth.Texture("ramp", color=(0.1, 0.2, 0.3), grad_x=(0.01, 0, 0)).evaluate(x, y)
    assert np.allclose(ramp[:, 0], 0.1 + 0.01 * x)
    # 2-D cubic B-spline at a node: own colour weight 20/36, other 16/36
    chk = synth.Texture("checker", color=(0.1,) * 3, color2=(0.9,) * 3, cell=4).evaluate(
        np.array([0.0, 4.0]), np.array([0.0, 0.0]))
    assert np.allclose(chk[:, 0], [0.5 - 0.4 / 9, 0.5 + 0.4 / 9])
    with pytest.raises(ValueError):
        synth.Texture("stripes")


SCENE = """
[scene]
views = 5
width = 32
height = 24
D = -100
Z_p = 50

[plane wall]
tan_theta = 0.2
texture = noise
seed = 3

[plane box]
tan_theta = 0.6
gradient = 0.001 0.0
center = 16 12
extent = 8 8 20 18
texture = constant
color = 0.9 0.1 0.1
"""


def test_parse_scene():
    s = synth.parse_scene(SCENE)
    g = s.geometry
    assert (s.views, s.width, s.height) == (5, 32, 24)
    assert g.k_ref == (2, 2) and g.m_ref == (16, 12) and g.D == -100
    assert len(s.planes) == 2 and s.planes[1].extent == (8, 8, 20, 18)
    r = synth.render(s)
    assert r.light_field.dims == (5, 5, 32, 24)
    assert r.gt.values[12, 16] == pytest.approx(0.6)


@pytest.mark.parametrize("text", [
    "not ini",
    "[plane a]\ntan_theta = 0.1\n",
    "[scene]\nviews = 9\n",
    "[scene]\n[plane a]\ntexture = noise\n",
    "[scene]\n[plane a]\ntan_theta = x\n",
    "[scene]\n[plane a]\nnormal = 0 0 -1\n",
    "[scene]\nviews = nine\n[plane a]\ntan_theta = 0\n",
    "[scene]\n[plane a]\ntan_theta = 0.1\ngradient = 1\n",
])
def test_scene_parse_errors(text):
    with pytest.raises(SceneParseError):
        synth.parse_scene(text)


def test_fixture_files_load():
    from conftest import FIXTURES

    for f in sorted(FIXTURES.glob("*.scene")):
        s = synth.load_scene(f)
        assert s.planes
