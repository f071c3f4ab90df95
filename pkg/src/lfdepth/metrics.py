"""Disparity accuracy metrics: MSE x 100, BadPix and median planar normal error."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .cost import KernelSpec, normals_from_points
from .errors import DimensionMismatch, EmptyMask
from .lightfield import LFGeometry, point_map

DEFAULT_CROP = 15


def scharr_kernels() -> tuple[KernelSpec, KernelSpec]:
    h = np.array([[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]]) / 32.0
    gh = KernelSpec(h, "horizontal")
    return gh, gh.transposed()


def evaluation_mask(shape, crop: int = DEFAULT_CROP, mask=None) -> np.ndarray:
    """``mask`` (default all pixels) with a ``crop``-pixel border removed."""
    out = np.ones(shape, dtype=bool) if mask is None else np.array(mask, dtype=bool)
    if out.shape != tuple(shape):
        raise DimensionMismatch(f"mask {out.shape} does not match {tuple(shape)}")
    if crop > 0:
        out[:crop] = False
        out[-crop:] = False
        out[:, :crop] = False
        out[:, -crop:] = False
    return out


def _prepare(d, gt, mask):
    d = np.asarray(d, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if d.shape != gt.shape:
        raise DimensionMismatch(f"estimate {d.shape} vs ground truth {gt.shape}")
    m = np.ones(d.shape, bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != d.shape:
        raise DimensionMismatch(f"mask {m.shape} vs maps {d.shape}")
    if not m.any():
        raise EmptyMask("evaluation mask selects no pixels")
    return d, gt, m


def mse_x100(d, gt, mask=None) -> float:
    d, gt, m = _prepare(d, gt, mask)
    return float(100.0 * np.mean((d[m] - gt[m]) ** 2))


def badpix(d, gt, mask=None, t: float = 0.07) -> float:
    if not t > 0:
        raise ValueError("threshold must be positive")
    d, gt, m = _prepare(d, gt, mask)
    return float(100.0 * np.mean(np.abs(d[m] - gt[m]) > t))


def lower_median(values) -> float:
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise EmptyMask("no values for the median")
    return float(v[(v.size - 1) // 2])


def normal_angles(d, gt, geom: LFGeometry) -> np.ndarray:
    """Per-pixel angle in degrees between Scharr normals of two disparity maps;
    NaN where either normal is undefined."""
    eta = geom.eta[0]
    kern = scharr_kernels()
    ne = normals_from_points(point_map(geom, np.asarray(d, float) / eta), kern)
    ng = normals_from_points(point_map(geom, np.asarray(gt, float) / eta), kern)
    c = np.clip(np.sum(ne.normals * ng.normals, axis=-1), -1.0, 1.0)
    return np.degrees(np.arccos(c))


def mae_planar(d, gt, planar_mask, geom: LFGeometry) -> float:
    """Lower median of normal angle errors (degrees) over ``planar_mask``."""
    d, gt, m = _prepare(d, gt, planar_mask)
    ang = normal_angles(d, gt, geom)
    vals = ang[m & np.isfinite(ang)]
    if vals.size == 0:
        raise EmptyMask("no defined normals inside the planar mask")
    return lower_median(vals)


@dataclass(frozen=True)
class MetricsReport:
    mse_x100: float
    badpix_007: float
    mae_planar_deg: float | None
    n_eval: int
    n_planar: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def table_row(self, name: str) -> str:
        mae = "-" if self.mae_planar_deg is None else f"{self.mae_planar_deg:.3f}"
        return (f"{name:<20} {self.mse_x100:>10.3f} {self.badpix_007:>10.2f}%"
                f" {mae:>10}")


TABLE_HEADER = f"{'scene':<20} {'MSEx100':>10} {'BadPix.07':>11} {'MAE-plan':>10}"


def format_table(reports: dict) -> str:
    lines = [TABLE_HEADER, "-" * len(TABLE_HEADER)]
    lines += [rep.table_row(name) for name, rep in reports.items()]
    return "\n".join(lines)


def evaluate(d, gt, geom: LFGeometry, mask=None, planar_mask=None,
             crop: int = DEFAULT_CROP) -> MetricsReport:
    """All three metrics on disparity maps, after the border crop."""
    d = np.asarray(d, dtype=np.float64)
    m = evaluation_mask(d.shape, crop, mask)
    mae = None
    n_planar = 0
    if planar_mask is not None:
        pm = evaluation_mask(d.shape, crop, planar_mask)
        n_planar = int(pm.sum())
        if n_planar:
            mae = mae_planar(d, gt, pm, geom)
    return MetricsReport(mse_x100(d, gt, m), badpix(d, gt, m), mae,
                         int(m.sum()), n_planar)
