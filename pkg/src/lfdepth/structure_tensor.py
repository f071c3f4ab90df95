"""Initial orientation map from EPI structure tensors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateInput
from .lightfield import DiscreteLightField, LFGeometry, OrientationMap

SIGMA_INNER = 0.8
SIGMA_OUTER = 1.6


@dataclass(frozen=True, eq=False)
class StResult:
    tan_theta: OrientationMap
    reliability: np.ndarray  # (N, M) in [0, 1]
    source: np.ndarray  # (N, M) winning map: 0-2 horizontal RGB, 3-5 vertical RGB


def _tensor(vol, s_axis, u_axis, sigma_i, sigma_o):
    # slope du/ds and coherence for every sample of a stack of EPIs
    sig_i = [0.0] * vol.ndim
    sig_i[s_axis] = sig_i[u_axis] = sigma_i
    sig_o = [0.0] * vol.ndim
    sig_o[s_axis] = sig_o[u_axis] = sigma_o
    sm = gaussian_filter(np.asarray(vol, dtype=np.float64), sig_i, mode="nearest")
    gs = np.gradient(sm, axis=s_axis)
    gu = np.gradient(sm, axis=u_axis)
    juu = gaussian_filter(gu * gu, sig_o, mode="nearest")
    jus = gaussian_filter(gu * gs, sig_o, mode="nearest")
    jss = gaussian_filter(gs * gs, sig_o, mode="nearest")
    slope = -np.tan(0.5 * np.arctan2(2.0 * jus, juu - jss))
    trace = juu + jss
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = ((jss - juu) ** 2 + 4.0 * jus ** 2) / trace ** 2
    rel = np.where(trace < 1e-12, 0.0, np.clip(rel, 0.0, 1.0))
    return slope, rel


def epi_structure_tensor(epi, sigma_i: float = SIGMA_INNER,
                         sigma_o: float = SIGMA_OUTER):
    """Per-sample line slope (pixels per view step) and coherence of an
    ``(S, U)`` single-channel EPI."""
    epi = np.asarray(epi, dtype=np.float64)
    if epi.ndim != 2:
        raise DegenerateInput("EPI must be a 2-D single-channel image")
    if epi.shape[0] < 3 or epi.shape[1] < 3:
        raise DegenerateInput(f"EPI of shape {epi.shape} is thinner than 3 samples")
    if sigma_i <= 0 or sigma_o <= 0:
        raise ValueError("structure tensor scales must be positive")
    return _tensor(epi, 0, 1, sigma_i, sigma_o)


def init_orientation_map(lf: DiscreteLightField, geom: LFGeometry,
                         sigma_i: float = SIGMA_INNER,
                         sigma_o: float = SIGMA_OUTER) -> StResult:
    """Most reliable of six per-channel, per-direction EPI estimates.

    Ties go to the earlier map in the order h-R, h-G, h-B, v-R, v-G, v-B.
    Pixels with no reliable estimate start at the middle of the range.
    """
    Kv, Lv, _, _ = lf.dims
    if Kv < 3 or Lv < 3:
        raise DegenerateInput("need at least 3x3 views for EPI analysis")
    if sigma_i <= 0 or sigma_o <= 0:
        raise ValueError("structure tensor scales must be positive")
    geom.check_grid(lf.dims)
    kr, lr = geom.k_ref
    eta = geom.eta
    slopes, rels = [], []
    for axis in ("h", "v"):
        for c in range(3):
            if axis == "h":
                vol = lf.data[lr, :, :, :, c]  # (K, N, M): s, row, u
                s, r = _tensor(vol, 0, 2, sigma_i, sigma_o)
                slopes.append(s[kr] / eta[0])
                rels.append(r[kr])
            else:
                vol = lf.data[:, kr, :, :, c]  # (L, N, M): t, v, col
                s, r = _tensor(vol, 0, 1, sigma_i, sigma_o)
                slopes.append(s[lr] / eta[1])
                rels.append(r[lr])
    slopes = np.stack(slopes)
    rels = np.stack(rels)
    src = np.argmax(rels, axis=0)
    best = np.take_along_axis(slopes, src[None], 0)[0]
    rel = np.take_along_axis(rels, src[None], 0)[0]
    lo, hi = geom.tan_bounds
    best = np.where(rel > 0.0, best, 0.5 * (lo + hi))
    theta = OrientationMap(np.clip(best, lo, hi), geom)
    return StResult(theta, rel, src)
