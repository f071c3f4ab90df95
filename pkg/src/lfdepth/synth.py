"""Piecewise-planar Lambertian light-field renderer with analytic ground truth.

Planes are described in world coordinates (``<normal, x> = offset``) but can
be built from disparity terms with :meth:`Plane.from_disparity`, because a
3D plane is exactly an affine tan(theta) field over the reference view.
Textures and extents are parametrised by the reference-view pixel position
of each surface point, which makes every texture a genuine surface property.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import SceneParseError
from .lightfield import DiscreteLightField, LFGeometry, OrientationMap, map_values

_LATTICE = 256


@dataclass(frozen=True)
class Texture:
    """Procedural colour as a function of reference-view pixel position.

    kind: ``constant``, ``ramp``, ``checker`` or ``noise``.  Checker and noise
    are cubic B-spline (smoothing, C2) surfaces over a periodic lattice with
    spacing ``cell`` pixels, which keeps bilinear resampling error small.
    """

    kind: str = "noise"
    color: tuple = (0.5, 0.5, 0.5)
    color2: tuple = (0.9, 0.9, 0.9)
    grad_x: tuple = (0.004, 0.0, 0.002)
    grad_y: tuple = (0.0, 0.004, 0.002)
    cell: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "ramp", "checker", "noise"):
            raise ValueError(f"unknown texture kind {self.kind!r}")
        if self.cell <= 0:
            raise ValueError("texture cell must be positive")

    def _lattice(self) -> np.ndarray:
        if self.kind == "noise":
            rng = np.random.default_rng(self.seed)
            return rng.uniform(0.05, 0.95, size=(_LATTICE, _LATTICE, 3))
        ii, jj = np.meshgrid(np.arange(_LATTICE), np.arange(_LATTICE))
        odd = ((ii + jj) % 2).astype(bool)
        lat = np.empty((_LATTICE, _LATTICE, 3))
        lat[~odd] = self.color
        lat[odd] = self.color2
        return lat

    def evaluate(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(np.asarray(self.color, float),
                                   x.shape + (3,)).copy()
        if self.kind == "ramp":
            out = (np.asarray(self.color, float)
                   + x[..., None] * np.asarray(self.grad_x, float)
                   + y[..., None] * np.asarray(self.grad_y, float))
            return np.clip(out, 0.0, 1.0)
        lat = self._lattice()
        coords = np.stack([y / self.cell, x / self.cell])
        out = np.empty(x.shape + (3,))
        for c in range(3):
            out[..., c] = map_coordinates(lat[..., c], coords, order=3,
                                          mode="grid-wrap", prefilter=False)
        return out


@dataclass(frozen=True)
class Plane:
    normal: tuple
    offset: float
    texture: Texture = field(default_factory=Texture)
    extent: tuple | None = None  # (x0, y0, x1, y1) in reference pixels

    @classmethod
    def from_disparity(cls, geom: LFGeometry, tan_theta: float,
                       gradient=(0.0, 0.0), center=None, **kw) -> "Plane":
        """Plane whose tan(theta) is ``tan_theta`` at ``center`` (default ``m_ref``)
        and changes by ``gradient`` per reference pixel."""
        gx, gy = (float(g) for g in gradient)
        cx, cy = geom.m_ref if center is None else center
        t_ref = (tan_theta - gx * (cx - geom.m_ref[0])
                 - gy * (cy - geom.m_ref[1]))
        n = np.array([-gx / geom.delta_u[0], -gy / geom.delta_u[1],
                      1.0 / geom.Z_p - t_ref / geom.D])
        s = np.linalg.norm(n)
        return cls(tuple((n / s).tolist()), 1.0 / s, **kw)

    def tan_at(self, geom: LFGeometry, x, y):
        """tan(theta) of the plane seen at reference pixel (x, y)."""
        n = np.asarray(self.normal)
        u = geom.delta_u[0] * (np.asarray(x, float) - geom.m_ref[0])
        v = geom.delta_u[1] * (np.asarray(y, float) - geom.m_ref[1])
        inv_z = (n[0] * u / geom.D + n[1] * v / geom.D + n[2]) / self.offset
        return geom.D * (1.0 / geom.Z_p - inv_z)


@dataclass(frozen=True)
class SynthScene:
    planes: tuple
    geometry: LFGeometry
    views: int = 9
    width: int = 96
    height: int = 96
    background: tuple = (0.5, 0.5, 0.5)


@dataclass(frozen=True, eq=False)
class Rendering:
    light_field: DiscreteLightField
    gt: OrientationMap
    gt_valid: np.ndarray  # (N, M) bool
    plane_index: np.ndarray  # (N, M) int, -1 for background
    visibility: np.ndarray  # (N, M, L, K) bool: reference point frontmost in view


def default_geometry(views=9, width=96, height=96, eta=1.0,
                     disp_range=(-1.5, 1.5)) -> LFGeometry:
    """Geometry used by the bundled fixtures: optical axis through the centre."""
    c = views // 2
    return LFGeometry(delta_u=(1.0, 1.0), delta_s=(eta, eta), k_ref=(c, c),
                      m_ref=(width // 2, height // 2), D=-200.0, Z_p=100.0,
                      disp_min=disp_range[0], disp_max=disp_range[1])


def _ray_hits(plane: Plane, geom: LFGeometry, x, y, a, b):
    """Depth and reference-pixel position where rays of view offset (a, b)
    through pixels (x, y) meet ``plane``; depth is +inf on a miss."""
    n = np.asarray(plane.normal)
    u = geom.delta_u[0] * (x - geom.m_ref[0])
    v = geom.delta_u[1] * (y - geom.m_ref[1])
    s = geom.delta_s[0] * a
    t = geom.delta_s[1] * b
    dx = u / geom.D - s / geom.Z_p
    dy = v / geom.D - t / geom.Z_p
    den = n[0] * dx + n[1] * dy + n[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (plane.offset - n[0] * s - n[1] * t) / den
        xi_x = s + z * dx
        xi_y = t + z * dy
        rx = geom.D * xi_x / (z * geom.delta_u[0]) + geom.m_ref[0]
        ry = geom.D * xi_y / (z * geom.delta_u[1]) + geom.m_ref[1]
    hit = np.isfinite(z) & (z > 0)
    if plane.extent is not None:
        x0, y0, x1, y1 = plane.extent
        hit &= (rx >= x0) & (rx <= x1) & (ry >= y0) & (ry <= y1)
    return np.where(hit, z, np.inf), rx, ry


def _nearest(scene: SynthScene, x, y, a, b):
    best_z = np.full(np.shape(x), np.inf)
    best_i = np.full(np.shape(x), -1)
    best_rx = np.zeros(np.shape(x))
    best_ry = np.zeros(np.shape(x))
    for i, p in enumerate(scene.planes):
        z, rx, ry = _ray_hits(p, scene.geometry, x, y, a, b)
        closer = z < best_z
        best_z = np.where(closer, z, best_z)
        best_i = np.where(closer, i, best_i)
        best_rx = np.where(closer, rx, best_rx)
        best_ry = np.where(closer, ry, best_ry)
    return best_z, best_i, best_rx, best_ry


def render(scene: SynthScene) -> Rendering:
    """Render every view with exact visibility and return ground truth alongside."""
    g = scene.geometry
    V, M, N = scene.views, scene.width, scene.height
    g.check_grid((V, V, M, N))
    ys, xs = np.mgrid[0:N, 0:M].astype(float)
    data = np.empty((V, V, N, M, 3))
    for l in range(V):
        for k in range(V):
            a, b = k - g.k_ref[0], l - g.k_ref[1]
            z, idx, rx, ry = _nearest(scene, xs, ys, a, b)
            img = np.empty((N, M, 3))
            img[:] = scene.background
            for i, p in enumerate(scene.planes):
                sel = idx == i
                if np.any(sel):
                    img[sel] = p.texture.evaluate(rx[sel], ry[sel])
            data[l, k] = img
    lf = DiscreteLightField(np.clip(data, 0.0, 1.0))

    z_ref, idx_ref, _, _ = _nearest(scene, xs, ys, 0, 0)
    valid = idx_ref >= 0
    lo, hi = g.tan_bounds
    with np.errstate(divide="ignore"):
        t_ref = g.D * (1.0 / g.Z_p - 1.0 / z_ref)
    t_ref = np.where(valid, t_ref, lo)
    if np.any(valid & ((t_ref < lo) | (t_ref > hi))):
        raise ValueError("scene depth outside the geometry's disparity range")

    vis = np.zeros((N, M, V, V), dtype=bool)
    eta = g.eta
    for l in range(V):
        for k in range(V):
            a, b = k - g.k_ref[0], l - g.k_ref[1]
            px = xs + eta[0] * a * t_ref
            py = ys + eta[1] * b * t_ref
            z, _, _, _ = _nearest(scene, px, py, a, b)
            vis[:, :, l, k] = valid & (z >= z_ref * (1.0 - 1e-9))
    return Rendering(lf, OrientationMap(t_ref, g), valid, idx_ref, vis)


def planar_mask(rendering: Rendering, margin: int = 3) -> np.ndarray:
    """Pixels whose (2*margin+1)^2 neighbourhood lies on a single plane."""
    from scipy.ndimage import minimum_filter, maximum_filter

    idx = rendering.plane_index
    size = 2 * margin + 1
    same = (minimum_filter(idx, size=size, mode="constant", cval=-2)
            == maximum_filter(idx, size=size, mode="constant", cval=-2))
    return same & (idx >= 0)


def corrupt(theta, amplitude: float, seed: int = 0, noise: str = "uniform",
            geometry: LFGeometry | None = None) -> OrientationMap:
    """Add seeded uniform (+-amplitude) or Gaussian (sigma=amplitude) noise,
    clamped to the orientation bounds."""
    if geometry is None:
        geometry = theta.geometry if isinstance(theta, OrientationMap) else LFGeometry()
    t = map_values(theta)
    rng = np.random.default_rng(seed)
    if noise == "uniform":
        pert = rng.uniform(-amplitude, amplitude, size=t.shape)
    elif noise == "gaussian":
        pert = amplitude * rng.standard_normal(t.shape)
    else:
        raise ValueError(f"unknown noise model {noise!r}")
    lo, hi = geometry.tan_bounds
    return OrientationMap(np.clip(t + pert, lo, hi), geometry)


# ----------------------------------------------------------- scene files

def _floats(text: str, n: int | None = None) -> tuple:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise SceneParseError(f"expected numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise SceneParseError(f"expected {n} numbers, got {text!r}")
    return vals


def parse_scene(text: str) -> SynthScene:
    """Parse the INI-style scene format.

    ``[scene]`` holds grid/geometry keys, each ``[plane <name>]`` section one
    plane, in file order.  See ``demos/fixtures/*.scene`` for examples.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SceneParseError(str(exc)) from exc
    if "scene" not in cp:
        raise SceneParseError("missing [scene] section")
    sc = cp["scene"]
    try:
        views = sc.getint("views", 9)
        width = sc.getint("width", 96)
        height = sc.getint("height", 96)
        eta = sc.getfloat("eta", 1.0)
        du = sc.getfloat("delta_u", 1.0)
        m_ref = sc.get("m_ref", "center")
        if m_ref.strip() == "center":
            m_ref = (width // 2, height // 2)
        else:
            m_ref = tuple(int(v) for v in _floats(m_ref, 2))
        geom = LFGeometry(
            delta_u=(du, du), delta_s=(eta * du, eta * du),
            k_ref=(views // 2, views // 2), m_ref=m_ref,
            D=sc.getfloat("D", -200.0), Z_p=sc.getfloat("Z_p", 100.0),
            disp_min=sc.getfloat("disp_min", -1.5),
            disp_max=sc.getfloat("disp_max", 1.5))
        background = _floats(sc.get("background", "0.5 0.5 0.5"), 3)
        planes = []
        for name in cp.sections():
            if not name.startswith("plane"):
                continue
            planes.append(_parse_plane(cp[name], geom))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, SceneParseError):
            raise
        raise SceneParseError(str(exc)) from exc
    if not planes:
        raise SceneParseError("scene defines no [plane ...] sections")
    return SynthScene(tuple(planes), geom, views, width, height, background)


def _parse_plane(sec, geom: LFGeometry) -> Plane:
    tex_kw = {"kind": sec.get("texture", "noise")}
    for key in ("color", "color2", "grad_x", "grad_y"):
        if key in sec:
            tex_kw[key] = _floats(sec[key], 3)
    if "cell" in sec:
        tex_kw["cell"] = sec.getfloat("cell")
    if "seed" in sec:
        tex_kw["seed"] = sec.getint("seed")
    texture = Texture(**tex_kw)
    extent = _floats(sec["extent"], 4) if "extent" in sec else None
    if "normal" in sec:
        n = np.asarray(_floats(sec["normal"], 3))
        if "offset" not in sec:
            raise SceneParseError("plane with 'normal' needs 'offset'")
        s = np.linalg.norm(n)
        return Plane(tuple((n / s).tolist()), sec.getfloat("offset") / s,
                     texture, extent)
    if "tan_theta" not in sec:
        raise SceneParseError("plane needs 'tan_theta' or 'normal'+'offset'")
    center = _floats(sec["center"], 2) if "center" in sec else None
    gradient = _floats(sec.get("gradient", "0 0"), 2)
    return Plane.from_disparity(geom, sec.getfloat("tan_theta"), gradient,
                                center, texture=texture, extent=extent)


def load_scene(path) -> SynthScene:
    return parse_scene(Path(path).read_text())
