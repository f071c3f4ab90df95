"""Three-term energy: occlusion-aware data cost, colour-orientation
congruence and planar geometry.

Units
-----
``pixel_deviation`` and ``occlusion_aware_cost`` work on samples in [0, 1].
``total_cost`` multiplies the data term by ``CostParams.color_scale``
(default 255) so that it lives on the same 8-bit scale as the colour
thresholds ``tau_c``/``rho_c`` and the annealing temperature.  Set
``color_scale=1`` to combine the raw terms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DegenerateCross, RayParallelToPlane
from .lightfield import (PPI, DiscreteLightField, LFGeometry, map_values,
                         point_map)


@dataclass(frozen=True)
class CostParams:
    """Cost weights and thresholds.

    ``tau_eps`` and ``tau_theta`` are given in disparity pixels and divided by
    ``eta`` when the kernels are configured.
    """

    lam: float = 100.0
    gamma: float = 0.05
    eps_theta: float = 0.5
    rho_c: float = 0.15
    rho_theta: float = 10.0
    tau_c: float = 3.0
    tau_eps: float = 0.031
    tau_theta: float = 0.031
    tau_a: float = 1.3
    delta_a: int = 5
    window_coc: int = 5
    window_avg: int = 5
    color_scale: float = 255.0
    occlusion_aware: bool = True
    min_support: int = 3

    def __post_init__(self):
        vals = (self.lam, self.gamma, self.eps_theta, self.rho_c,
                self.rho_theta, self.tau_c, self.tau_eps, self.tau_theta,
                self.tau_a, self.color_scale)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("cost parameters must be finite")
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lam and gamma must be non-negative")
        if self.tau_a <= 0:
            raise ValueError("tau_a must be positive")
        if int(self.delta_a) != self.delta_a or self.delta_a < 1:
            raise ValueError("delta_a must be a positive integer")
        if self.window_coc < 0 or self.window_avg < 0:
            raise ValueError("window radii must be non-negative")

    def tan_theta_max(self, geom: LFGeometry) -> float:
        return geom.tan_bounds[1]

    def kernel_params(self, geom: LFGeometry) -> K.CostKernelParams:
        lo, hi = geom.tan_bounds
        eta = float(geom.eta[0])
        return K.CostKernelParams(
            float(self.lam), float(self.gamma), float(self.eps_theta),
            float(self.rho_c), float(self.rho_theta), float(self.tau_c),
            float(hi - lo), float(self.tau_eps) / eta,
            float(self.tau_theta) / eta, float(self.tau_a), int(self.delta_a),
            int(self.window_coc), int(self.window_avg),
            float(self.color_scale), bool(self.occlusion_aware),
            int(self.min_support))


@dataclass(frozen=True, eq=False)
class KernelSpec:
    taps: np.ndarray
    axis: str = "horizontal"

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise ValueError("kernel taps must be a square grid with odd side")
        if self.axis not in ("horizontal", "vertical"):
            raise ValueError("axis must be 'horizontal' or 'vertical'")
        object.__setattr__(self, "taps", taps)

    @property
    def radius(self) -> int:
        return self.taps.shape[0] // 2

    def transposed(self) -> "KernelSpec":
        other = "vertical" if self.axis == "horizontal" else "horizontal"
        return KernelSpec(self.taps.T.copy(), other)


def small_kernels() -> tuple[KernelSpec, KernelSpec]:
    """Central differences; taps indexed ``[j + r, i + r]``."""
    h = np.zeros((3, 3))
    h[1, 0] = -1.0
    h[1, 2] = 1.0
    gh = KernelSpec(h, "horizontal")
    return gh, gh.transposed()


def gaussian_kernels(delta_a: int = 5) -> tuple[KernelSpec, KernelSpec]:
    """Gaussian-weighted differences ``i * exp(-|i|^2 / (2 delta_a + 1)^2)``."""
    r = int(delta_a)
    j, i = np.mgrid[-r:r + 1, -r:r + 1].astype(float)
    h = i * np.exp(-(i * i + j * j) / (2 * r + 1) ** 2)
    gh = KernelSpec(h, "horizontal")
    return gh, gh.transposed()


@dataclass(frozen=True, eq=False)
class NormalMap:
    normals: np.ndarray  # (N, M, 3), NaN where undefined
    defined: np.ndarray  # (N, M) bool


# ------------------------------------------------------------- data terms

def pixel_deviation(ppi: PPI) -> float:
    kr, lr = ppi.k_ref
    if not ppi.valid[lr, kr]:
        raise ValueError("PPI is not valid at the reference view")
    diff = np.abs(ppi.colors[ppi.valid] - ppi.colors[lr, kr])
    return float(diff.mean())


def unoccluded_views(theta_map, geom: LFGeometry, m0, tan_theta: float,
                     views=None) -> np.ndarray:
    """Boolean ``(L, K)`` mask of views in which the point is not occluded.

    ``views = (K, L)`` defaults to a grid centred on ``k_ref``.
    """
    t = np.ascontiguousarray(map_values(theta_map))
    if views is None:
        views = (2 * geom.k_ref[0] + 1, 2 * geom.k_ref[1] + 1)
    mask = np.zeros((views[1], views[0]), dtype=np.bool_)
    x0, y0 = (float(c) for c in m0)
    K.fill_unoccluded(mask, t, geom.kernel_params(), x0, y0, float(tan_theta))
    return mask


def occlusion_aware_cost(lf: DiscreteLightField, geom: LFGeometry, theta_map,
                         m0, tan_theta: float, return_support: bool = False):
    """Mean absolute deviation from the reference over valid, unoccluded views.

    With ``return_support`` the number of contributing views (the reference
    included) is returned as well; a count of 1 means only the reference
    survived and the cost is 0.
    """
    t = np.ascontiguousarray(map_values(theta_map))
    x0, y0 = (float(c) for c in m0)
    cost, support = K.data_cost(lf.data, t, geom.kernel_params(), x0, y0,
                                float(tan_theta), True)
    if return_support:
        return float(cost), int(support)
    return float(cost)


# ------------------------------------------------------ congruence term

def smoothed_orientation(theta_map, lf: DiscreteLightField, geom: LFGeometry,
                         params: CostParams, m0, tan_theta=None) -> float:
    """Colour-guided weighted average of tan(theta) around ``m0``.

    Orientation differences are measured against ``tan_theta`` when given,
    otherwise against the map value at ``m0``.
    """
    t = np.ascontiguousarray(map_values(theta_map))
    x0, y0 = (int(c) for c in m0)
    centre = t[y0, x0] if tan_theta is None else float(tan_theta)
    ref = lf.view(geom.k_ref)
    return float(K.smoothed_tan(t, ref, x0, y0, centre,
                                params.kernel_params(geom)))


def coc_cost(tan_theta: float, tan_theta_s: float) -> float:
    return float((tan_theta - tan_theta_s) ** 2)


# ------------------------------------------------------- planar geometry

def normals_from_points(points: np.ndarray, kernels=None) -> NormalMap:
    """Camera-facing unit normals from kernel-correlated tangent vectors.

    Pixels where the kernel leaves the grid, or where the tangents are
    parallel, are undefined.
    """
    gh, gv = small_kernels() if kernels is None else kernels
    pts = np.ascontiguousarray(points, dtype=np.float64)
    th = K.correlate_points(pts, np.ascontiguousarray(gh.taps))
    tv = K.correlate_points(pts, np.ascontiguousarray(gv.taps))
    n = K.normal_map(th, tv)
    return NormalMap(n, np.isfinite(n[..., 0]))


def robust_normal(normals_lg: NormalMap, m0, params: CostParams,
                  return_selection: bool = False):
    """Average of the window normals close in angle to the one at ``m0``."""
    x0, y0 = (int(c) for c in m0)
    if not normals_lg.defined[y0, x0]:
        raise DegenerateCross(f"normal undefined at {(x0, y0)}")
    nrm, ok = _window(normals_lg.normals, normals_lg.defined, x0, y0,
                      params.window_avg)
    nx, ny, nz, sel = K.robust_select(nrm, ok, float(params.tau_a))
    nu = np.array([nx, ny, nz])
    if return_selection:
        return nu, sel
    return nu


def _window(normals, defined, x0, y0, r):
    N, M = defined.shape
    W = 2 * r + 1
    nrm = np.zeros((W, W, 3))
    ok = np.zeros((W, W), dtype=np.bool_)
    for b in range(W):
        for a in range(W):
            j, i = y0 + b - r, x0 + a - r
            if 0 <= j < N and 0 <= i < M and defined[j, i]:
                nrm[b, a] = normals[j, i]
                ok[b, a] = True
    return nrm, ok


def theta_mu(points_map: np.ndarray, geom: LFGeometry, nu_rob, m0,
             params: CostParams, selection: np.ndarray | None = None) -> float:
    """tan(theta) where the plane ``<x, nu_rob> = o`` meets the ray of ``m0``.

    ``o`` averages ``<x_map(m), nu_rob>`` over ``selection`` (a window mask
    as returned by :func:`robust_normal`, default the full window), ``m0``
    excluded.
    """
    x0, y0 = (int(c) for c in m0)
    W = 2 * params.window_avg + 1
    sel = np.ones((W, W), dtype=np.bool_) if selection is None else \
        np.ascontiguousarray(selection, dtype=np.bool_)
    nu = np.asarray(nu_rob, dtype=float)
    t, status = K.plane_tan(np.ascontiguousarray(points_map, dtype=np.float64),
                            sel, x0, y0, nu[0], nu[1], nu[2],
                            geom.kernel_params())
    if status == 1:
        raise RayParallelToPlane(f"viewing ray of {(x0, y0)} is parallel to the plane")
    if status != 0:
        raise ValueError("plane fit failed: no neighbours or plane behind camera")
    return float(t)


class _Maps:
    """Point and tangent maps for one orientation snapshot."""

    def __init__(self, geom: LFGeometry, theta, params: CostParams):
        self.theta = np.ascontiguousarray(map_values(theta), dtype=np.float64)
        self.points = point_map(geom, self.theta)
        gh, gv = gaussian_kernels(params.delta_a)
        self.gh = np.ascontiguousarray(gh.taps)
        self.th = K.correlate_points(self.points, self.gh)
        self.tv = K.correlate_points(self.points, np.ascontiguousarray(gv.taps))
        self.G = geom.kernel_params()
        self.C = params.kernel_params(geom)


def pg_terms(geom: LFGeometry, theta_map, m0, tan_theta: float,
             params: CostParams) -> tuple[float, float, bool]:
    """``(J_pg, tan_mu, fit_ok)`` for candidate ``tan_theta`` at ``m0``."""
    maps = _Maps(geom, theta_map, params)
    x0, y0 = (int(c) for c in m0)
    X, Y, Z = K.point3d(maps.G, float(x0), float(y0), float(tan_theta))
    p = maps.points[y0, x0]
    jpg, t_mu, ok = K.planar_terms(maps.points, maps.th, maps.tv, maps.gh,
                                   x0, y0, X - p[0], Y - p[1], Z - p[2],
                                   maps.theta[y0, x0], maps.G, maps.C)
    return float(jpg), float(t_mu), bool(ok)


def pg_cost(lf: DiscreteLightField | None, geom: LFGeometry, theta_map, m0,
            tan_theta: float, params: CostParams) -> float:
    """Angle between the robust large-kernel normal and the small-kernel
    normal at ``m0`` for the candidate; 0 off-plane or near the border.

    ``lf`` is unused and accepted for signature symmetry with the other terms.
    """
    return pg_terms(geom, theta_map, m0, tan_theta, params)[0]


def total_cost(lf: DiscreteLightField, geom: LFGeometry, theta_map, m0,
               tan_theta: float, params: CostParams = CostParams()) -> float:
    """``color_scale * J_oa + lam * J_coc + gamma * J_pg``.

    When fewer than ``min_support`` views survive the occlusion test the
    plain pixel deviation replaces ``J_oa``.
    """
    maps = _Maps(geom, theta_map, params)
    x0, y0 = (int(c) for c in m0)
    ref = lf.view(geom.k_ref)
    t_s = K.smoothed_tan(maps.theta, ref, x0, y0, maps.theta[y0, x0], maps.C)
    return float(K.total_cost(lf.data, maps.theta, maps.points, maps.th,
                              maps.tv, maps.gh, x0, y0, float(tan_theta),
                              t_s, maps.G, maps.C))
