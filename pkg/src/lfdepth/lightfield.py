"""Discrete 4D light fields, calibration geometry and 4D point-projection sampling.

Array layout
------------
A light field is stored as ``data[l, k, n, m, c]``: vertical view index,
horizontal view index, pixel row, pixel column, colour channel.  Every
2-vector in the public API (``eta``, ``k_ref``, ``m_ref``, continuous pixel
positions) is ordered ``(horizontal, vertical)``, i.e. ``(x, y)``.

Orientations are always stored as ``tan(theta)``; disparity is the view
``eta * tan(theta)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import DegenerateInput, OutOfView, SingularDepth


def _pair(v, dtype=float) -> tuple:
    a = np.broadcast_to(np.asarray(v, dtype=dtype), (2,))
    return tuple(a.tolist())


@dataclass(frozen=True)
class LFGeometry:
    """Calibration constants of a rectified light-field grid.

    ``eta`` (sampling slope distortion) is derived as ``delta_s / delta_u``.
    ``D`` is negative by convention, so nearer points have larger tan(theta).
    """

    delta_u: tuple = (1.0, 1.0)
    delta_s: tuple = (1.0, 1.0)
    k_ref: tuple = (4, 4)
    m_ref: tuple = (0, 0)
    D: float = -1.0
    Z_p: float = 1.0
    disp_min: float = -2.0
    disp_max: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "delta_u", _pair(self.delta_u))
        object.__setattr__(self, "delta_s", _pair(self.delta_s))
        object.__setattr__(self, "k_ref", _pair(self.k_ref, int))
        object.__setattr__(self, "m_ref", _pair(self.m_ref, int))
        if min(self.delta_u) <= 0 or min(self.delta_s) <= 0:
            raise ValueError("delta_u and delta_s must be strictly positive")
        if not self.D < 0:
            raise ValueError("D must be negative")
        if not self.Z_p > 0:
            raise ValueError("Z_p must be positive")
        if not self.disp_min < self.disp_max:
            raise ValueError("disp_min must be below disp_max")

    @property
    def eta(self) -> np.ndarray:
        return np.asarray(self.delta_s) / np.asarray(self.delta_u)

    @property
    def tan_bounds(self) -> tuple[float, float]:
        """Orientation range valid for both axes."""
        eta = self.eta
        return (float(np.max(self.disp_min / eta)),
                float(np.min(self.disp_max / eta)))

    def check_grid(self, dims) -> None:
        """Raise if ``k_ref`` falls outside a grid of ``(K, L, M, N)``.

        ``m_ref`` is not checked: after cropping, the optical origin may lie
        outside the retained window.
        """
        Kv, Lv, _, _ = dims
        if not (0 <= self.k_ref[0] < Kv and 0 <= self.k_ref[1] < Lv):
            raise OutOfView(f"k_ref {self.k_ref} outside {Kv}x{Lv} views")

    def cropped(self, x: int, y: int) -> "LFGeometry":
        """Geometry of the sub-window whose top-left pixel is ``(x, y)``."""
        return replace(self, m_ref=(self.m_ref[0] - x, self.m_ref[1] - y))

    def kernel_params(self) -> K.GeomParams:
        tmin, tmax = self.tan_bounds
        eta = self.eta
        return K.GeomParams(
            float(eta[0]), float(eta[1]), int(self.k_ref[0]), int(self.k_ref[1]),
            float(self.delta_u[0]), float(self.delta_u[1]), float(self.D),
            float(self.Z_p), float(self.m_ref[0]), float(self.m_ref[1]),
            tmin, tmax)


@dataclass(frozen=True, eq=False)
class DiscreteLightField:
    """K x L grid of M x N RGB views with samples in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 5 or data.shape[-1] != 3:
            raise DegenerateInput(
                f"expected (L, K, N, M, 3) samples, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("light field contains non-finite samples")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("light field samples must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """``(K, L, M, N)``: views across, views down, width, height."""
        L, K_, N, M, _ = self.data.shape
        return K_, L, M, N

    def view(self, k) -> np.ndarray:
        kk, ll = _pair(k, int)
        Kv, Lv, _, _ = self.dims
        if not (0 <= kk < Kv and 0 <= ll < Lv):
            raise OutOfView(f"view {(kk, ll)} outside {Kv}x{Lv} grid")
        return self.data[ll, kk]


@dataclass(eq=False)
class OrientationMap:
    """Per-pixel tan(theta) over the reference view, shape ``(N, M)``."""

    values: np.ndarray
    geometry: LFGeometry = field(default_factory=LFGeometry)

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("orientation map must be 2-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("orientation map contains non-finite values")

    def disparity(self) -> np.ndarray:
        """Horizontal disparity in pixels per view step."""
        return self.geometry.eta[0] * self.values

    def clamped(self) -> "OrientationMap":
        lo, hi = self.geometry.tan_bounds
        return OrientationMap(np.clip(self.values, lo, hi), self.geometry)

    def within_bounds(self) -> bool:
        lo, hi = self.geometry.tan_bounds
        return bool(np.all((self.values >= lo) & (self.values <= hi)))


def map_values(theta) -> np.ndarray:
    """Accept an :class:`OrientationMap` or a bare array."""
    if isinstance(theta, OrientationMap):
        return theta.values
    return np.asarray(theta, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class PPI:
    """Samples of one 4D point-projection plane across all views."""

    colors: np.ndarray  # (L, K, 3)
    valid: np.ndarray  # (L, K) bool
    origin: tuple
    tan_theta: float
    k_ref: tuple


def disparity_from_tan(geom: LFGeometry, tan_theta) -> np.ndarray:
    return geom.eta * tan_theta


def depth_from_tan(geom: LFGeometry, tan_theta: float) -> float:
    den = 1.0 / geom.Z_p - tan_theta / geom.D
    if den == 0.0:
        raise SingularDepth(f"tan_theta={tan_theta} is a point at infinity")
    return 1.0 / den


def tan_from_depth(geom: LFGeometry, z: float) -> float:
    if z == 0:
        raise SingularDepth("zero depth")
    return geom.D * (1.0 / geom.Z_p - 1.0 / z)


def sample_bilinear(lf: DiscreteLightField, u_bar, k) -> np.ndarray:
    """Bilinear RGB sample of view ``k`` at continuous position ``u_bar = (x, y)``.

    Positions up to half a pixel outside the view are clamped onto it.
    """
    view = lf.view(k)
    x, y = (float(c) for c in u_bar)
    N, M = view.shape[:2]
    if not K.in_view(x, y, M, N):
        raise ValueError(f"position {(x, y)} outside view of size {M}x{N}")
    return np.array(K.bilinear_rgb(view, x, y))


def extract_ppi(lf: DiscreteLightField, geom: LFGeometry, u0_bar,
                tan_theta: float) -> PPI:
    """Sample the 4D-PPP through ``u0_bar`` with orientation ``tan_theta``."""
    Kv, Lv, Mv, Nv = lf.dims
    x0, y0 = (float(c) for c in u0_bar)
    if not K.in_view(x0, y0, Mv, Nv):
        raise ValueError(f"origin {(x0, y0)} outside the reference view")
    eta = geom.eta
    colors = np.zeros((Lv, Kv, 3))
    valid = np.zeros((Lv, Kv), dtype=bool)
    for l in range(Lv):
        for k in range(Kv):
            x = x0 + eta[0] * (k - geom.k_ref[0]) * tan_theta
            y = y0 + eta[1] * (l - geom.k_ref[1]) * tan_theta
            if K.in_view(x, y, Mv, Nv):
                valid[l, k] = True
                colors[l, k] = K.bilinear_rgb(lf.data[l, k], x, y)
    return PPI(colors, valid, (x0, y0), float(tan_theta), geom.k_ref)


def point3d_from_pixel(geom: LFGeometry, m, tan_theta: float) -> np.ndarray:
    z = depth_from_tan(geom, tan_theta)
    u = np.asarray(geom.delta_u) * (np.asarray(m, dtype=float) - geom.m_ref)
    return np.array([u[0] * z / geom.D, u[1] * z / geom.D, z])


def point_map(geom: LFGeometry, theta) -> np.ndarray:
    """3D points for every reference pixel, shape ``(N, M, 3)``."""
    t = map_values(theta)
    den = 1.0 / geom.Z_p - t / geom.D
    if np.any(den == 0.0):
        raise SingularDepth("orientation map contains points at infinity")
    return K.point_map(np.ascontiguousarray(t), geom.kernel_params())


def horizontal_epi(lf: DiscreteLightField, geom: LFGeometry, row: int) -> np.ndarray:
    """s x u slice through pixel row ``row`` of the reference view row of views."""
    return lf.data[geom.k_ref[1], :, row, :, :]


def vertical_epi(lf: DiscreteLightField, geom: LFGeometry, col: int) -> np.ndarray:
    """t x v slice through pixel column ``col`` of the reference view column."""
    return lf.data[:, geom.k_ref[0], :, col, :]
