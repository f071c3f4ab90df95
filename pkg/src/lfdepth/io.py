"""Benchmark-bundle ingest and result output.

A bundle directory holds ``input_Cam000.png`` ... ``input_Cam{KL-1}.png``
(row-major, view ``v`` at ``k = v % K``, ``l = v // K``), a
``parameters.cfg`` INI file and optionally ``gt_disp_lowres.pfm`` plus mask
images whose names are passed in explicitly.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import (ConfigParseError, DegenerateInput, DimensionMismatch,
                     MalformedHeader, MissingViews, NonFiniteSample,
                     TruncatedPayload, UnsupportedMagic)
from .lightfield import DiscreteLightField, LFGeometry, map_values

VIEW_PATTERN = "input_Cam{:03d}.png"
GT_NAME = "gt_disp_lowres.pfm"
CONFIG_NAME = "parameters.cfg"


# ------------------------------------------------------------------ PFM

@dataclass(frozen=True, eq=False)
class PfmImage:
    samples: np.ndarray  # (H, W) or (H, W, 3) float32, top row first
    scale: float = -1.0

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else 3


def _header_tokens(data: bytes):
    # magic, width, height, scale; returns them and the payload offset
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise MalformedHeader("PFM header ends prematurely")
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
        if len(tokens) == 1 and tokens[0] not in (b"Pf", b"PF"):
            raise UnsupportedMagic(f"unsupported PFM magic {tokens[0][:8]!r}")
    if pos >= n:
        raise MalformedHeader("missing whitespace after the PFM scale")
    return tokens, pos + 1


def read_pfm(data: bytes) -> PfmImage:
    if not data.startswith((b"Pf", b"PF")):
        raise UnsupportedMagic(f"unsupported PFM magic {data[:2]!r}")
    tokens, offset = _header_tokens(data)
    try:
        w = int(tokens[1])
        h = int(tokens[2])
        scale = float(tokens[3])
    except ValueError as exc:
        raise MalformedHeader(f"bad PFM header fields {tokens[1:]!r}") from exc
    if w <= 0 or h <= 0:
        raise MalformedHeader(f"non-positive PFM size {w}x{h}")
    if scale == 0 or not math.isfinite(scale):
        raise MalformedHeader(f"invalid PFM scale {scale}")
    ch = 3 if tokens[0] == b"PF" else 1
    count = w * h * ch
    payload = data[offset:offset + 4 * count]
    if len(payload) < 4 * count:
        raise TruncatedPayload(
            f"PFM payload has {len(payload)} bytes, expected {4 * count}")
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    shape = (h, w) if ch == 1 else (h, w, 3)
    return PfmImage(arr.reshape(shape)[::-1].copy(), scale)


def write_pfm(img) -> bytes:
    """Canonical little-endian PFM (scale -1), rows bottom-up."""
    samples = img.samples if isinstance(img, PfmImage) else np.asarray(img)
    samples = np.asarray(samples, dtype=np.float32)
    if samples.ndim == 3 and samples.shape[2] == 1:
        samples = samples[..., 0]
    if samples.ndim not in (2, 3) or (samples.ndim == 3 and samples.shape[2] != 3):
        raise DegenerateInput(f"cannot store shape {samples.shape} as PFM")
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSample("PFM samples must be finite")
    magic = b"Pf" if samples.ndim == 2 else b"PF"
    h, w = samples.shape[:2]
    header = magic + f"\n{w} {h}\n-1\n".encode("ascii")
    return header + samples[::-1].astype("<f4").tobytes()


def read_pfm_file(path) -> PfmImage:
    return read_pfm(Path(path).read_bytes())


def write_pfm_file(path, img) -> None:
    Path(path).write_bytes(write_pfm(img))


# ------------------------------------------------------------------ PNG

def read_png(path) -> np.ndarray:
    """RGB float image in [0, 1]; alpha dropped, grey expanded."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise MissingViews(f"cannot read image {path}")
    if img.dtype == np.uint8:
        scale = 255.0
    elif img.dtype == np.uint16:
        scale = 65535.0
    else:
        raise DegenerateInput(f"unsupported PNG sample type {img.dtype} in {path}")
    img = img.astype(np.float32) / scale
    if img.ndim == 2:
        return np.repeat(img[..., None], 3, axis=2)
    if img.shape[2] == 4:
        img = img[..., :3]
    return img[..., ::-1].copy()


def write_png(path, rgb, bits: int = 8) -> None:
    rgb = np.asarray(rgb, dtype=np.float64)
    top = 255 if bits == 8 else 65535
    q = np.round(np.clip(rgb, 0.0, 1.0) * top).astype(np.uint8 if bits == 8 else np.uint16)
    if q.ndim == 3:
        q = q[..., ::-1]
    if not cv2.imwrite(str(path), q):
        raise OSError(f"failed to write {path}")


# -------------------------------------------------------------- bundles

@dataclass(frozen=True, eq=False)
class DatasetBundle:
    light_field: DiscreteLightField
    geometry: LFGeometry
    gt_disparity: np.ndarray | None = None
    eval_mask: np.ndarray | None = None
    planar_mask: np.ndarray | None = None
    name: str = ""


def _read_config(path: Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ConfigParseError(f"missing {path}") from exc
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    return cp


def _get(cp, section, key, cast=float, default=None):
    try:
        return cast(cp[section][key])
    except KeyError:
        if default is not None:
            return default
        raise ConfigParseError(f"parameters.cfg lacks [{section}] {key}") from None
    except ValueError as exc:
        raise ConfigParseError(f"bad value for [{section}] {key}: {exc}") from exc


def geometry_from_config(cp, width: int, height: int, views=(9, 9),
                         mode: str = "normalized") -> LFGeometry:
    """Calibration constants from an HCI-style ``parameters.cfg``.

    ``normalized`` sets ``delta_u = delta_s = baseline`` (so ``eta = 1`` and
    disparity equals tan(theta)) with ``D = -baseline * focal_px``;
    ``physical`` uses the pixel pitch and focal length in millimetres.  Both
    reproduce the benchmark's disparity-to-depth relation.
    """
    focal = _get(cp, "intrinsics", "focal_length_mm")
    sensor = _get(cp, "intrinsics", "sensor_size_mm")
    res_x = _get(cp, "intrinsics", "image_resolution_x_px", int, width)
    res_y = _get(cp, "intrinsics", "image_resolution_y_px", int, height)
    baseline = _get(cp, "extrinsics", "baseline_mm")
    focus = _get(cp, "extrinsics", "focus_distance_m") * 1000.0
    dmin = _get(cp, "meta", "disp_min")
    dmax = _get(cp, "meta", "disp_max")
    if (res_x, res_y) != (width, height):
        raise DimensionMismatch(
            f"config says {res_x}x{res_y}, views are {width}x{height}")
    if min(focal, sensor, baseline, focus) <= 0:
        raise ConfigParseError("focal length, sensor, baseline and focus must be positive")
    pitch = sensor / max(res_x, res_y)
    focal_px = focal / pitch
    kr = (views[0] // 2, views[1] // 2)
    mr = (width // 2, height // 2)
    if mode == "normalized":
        return LFGeometry(delta_u=baseline, delta_s=baseline, k_ref=kr, m_ref=mr,
                          D=-baseline * focal_px, Z_p=focus,
                          disp_min=dmin, disp_max=dmax)
    if mode == "physical":
        return LFGeometry(delta_u=pitch, delta_s=baseline, k_ref=kr, m_ref=mr,
                          D=-focal, Z_p=focus,
                          disp_min=dmin, disp_max=dmax)
    raise ValueError(f"unknown geometry mode {mode!r}")


_VIEW_RE = re.compile(r"input_Cam(\d{3})\.png$")


def load_hci_bundle(directory, eval_mask: str | None = None,
                    planar_mask: str | None = None,
                    geometry_mode: str = "normalized") -> DatasetBundle:
    root = Path(directory)
    if not root.is_dir():
        raise MissingViews(f"bundle directory {root} does not exist")
    cp = _read_config(root / CONFIG_NAME)
    if cp.has_option("extrinsics", "num_cams_x"):
        Kv = _get(cp, "extrinsics", "num_cams_x", int)
        Lv = _get(cp, "extrinsics", "num_cams_y", int, Kv)
    else:
        found = [int(m.group(1)) for p in root.iterdir()
                 if (m := _VIEW_RE.match(p.name))]
        if not found:
            raise MissingViews(f"no input_Cam*.png views in {root}")
        Kv = math.isqrt(max(found) + 1)
        if Kv * Kv != max(found) + 1:
            Kv += 1
        Lv = Kv
    views = []
    for v in range(Kv * Lv):
        path = root / VIEW_PATTERN.format(v)
        if not path.is_file():
            raise MissingViews(f"missing view file {path.name}")
        views.append(read_png(path))
    shape = views[0].shape
    for v, img in enumerate(views):
        if img.shape != shape:
            raise DimensionMismatch(
                f"{VIEW_PATTERN.format(v)} is {img.shape[:2]}, expected {shape[:2]}")
    N, M = shape[:2]
    data = np.stack(views).reshape(Lv, Kv, N, M, 3)
    lf = DiscreteLightField(data)
    geom = geometry_from_config(cp, M, N, (Kv, Lv), geometry_mode)

    gt = None
    gt_path = root / GT_NAME
    if gt_path.is_file():
        gt = read_pfm_file(gt_path).samples.astype(np.float64)
        if gt.ndim == 3:
            gt = gt[..., 0]
        if gt.shape != (N, M):
            raise DimensionMismatch(f"{GT_NAME} is {gt.shape}, views are {(N, M)}")
        if gt.min() < geom.disp_min - 0.5 or gt.max() > geom.disp_max + 0.5:
            raise DegenerateInput(f"{GT_NAME} values exceed the disparity range")

    def _mask(name):
        if name is None:
            return None
        img = cv2.imread(str(root / name), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise MissingViews(f"missing mask file {name}")
        if img.ndim == 3:
            img = img[..., :3].max(axis=2)
        if img.shape != (N, M):
            raise DimensionMismatch(f"mask {name} is {img.shape}, views are {(N, M)}")
        return img > 0

    return DatasetBundle(lf, geom, gt, _mask(eval_mask), _mask(planar_mask),
                         root.name)


def write_hci_bundle(directory, lf: DiscreteLightField, geom: LFGeometry,
                     gt_disparity=None, masks: dict | None = None) -> Path:
    """Write views as 16-bit PNGs with a config that reloads to ``geom``.

    Only geometries with ``eta == 1`` and equal axes are representable.
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    if not (np.allclose(geom.eta, 1.0) and geom.delta_u[0] == geom.delta_u[1]):
        raise ValueError("bundle format needs eta = 1 and square sampling")
    Kv, Lv, M, N = lf.dims
    for l in range(Lv):
        for k in range(Kv):
            write_png(root / VIEW_PATTERN.format(l * Kv + k), lf.data[l, k], bits=16)
    baseline = geom.delta_u[0]
    focal_px = -geom.D / baseline
    sensor = 35.0
    cp = configparser.ConfigParser()
    cp["intrinsics"] = {
        "focal_length_mm": repr(focal_px * sensor / max(M, N)),
        "sensor_size_mm": repr(sensor),
        "image_resolution_x_px": str(M),
        "image_resolution_y_px": str(N),
    }
    cp["extrinsics"] = {
        "num_cams_x": str(Kv), "num_cams_y": str(Lv),
        "baseline_mm": repr(baseline),
        "focus_distance_m": repr(geom.Z_p / 1000.0),
    }
    cp["meta"] = {"disp_min": repr(geom.disp_min), "disp_max": repr(geom.disp_max)}
    with open(root / CONFIG_NAME, "w") as fh:
        cp.write(fh)
    if gt_disparity is not None:
        write_pfm_file(root / GT_NAME, np.asarray(gt_disparity, np.float32))
    for name, mask in (masks or {}).items():
        cv2.imwrite(str(root / name), np.where(mask, 255, 0).astype(np.uint8))
    return root


# -------------------------------------------------------------- outputs

def disparity_png(disp, geom: LFGeometry) -> np.ndarray:
    """8-bit visualisation mapping [disp_min, disp_max] linearly to [0, 255]."""
    span = geom.disp_max - geom.disp_min
    v = (np.asarray(disp, dtype=np.float64) - geom.disp_min) / span
    return np.round(np.clip(v, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_outputs(theta, geom: LFGeometry, out_dir, stem: str = "disparity"):
    """Write ``<stem>.pfm`` (horizontal disparity) and ``<stem>.png``."""
    t = map_values(theta)
    if not np.all(np.isfinite(t)):
        raise NonFiniteSample("orientation map is not finite")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    disp = geom.eta[0] * t
    pfm = out / f"{stem}.pfm"
    png = out / f"{stem}.png"
    write_pfm_file(pfm, disp.astype(np.float32))
    if not cv2.imwrite(str(png), disparity_png(disp, geom)):
        raise OSError(f"failed to write {png}")
    return pfm, png
