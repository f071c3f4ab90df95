"""``lfdepth`` command line: estimate | eval | synth."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io as lfio
from . import metrics, synth
from .cost import CostParams
from .errors import (ConfigParseError, DimensionMismatch, LFDepthError,
                     MissingViews, SceneParseError)
from .lightfield import DiscreteLightField
from .refine import AnnealSchedule, Heuristics, refine
from .structure_tensor import SIGMA_INNER, SIGMA_OUTER, init_orientation_map

log = logging.getLogger("lfdepth")

PLANAR_MASK = "mask_planar.png"
VALID_MASK = "mask_valid.png"
VISIBILITY = "visibility.npz"


def _crop_arg(text: str):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("crop must be x,y,w,h integers") from None
    if len(vals) != 4 or vals[2] <= 0 or vals[3] <= 0 or min(vals[:2]) < 0:
        raise argparse.ArgumentTypeError("crop must be x,y,w,h with w,h > 0")
    return vals


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    c, s, h = CostParams(), AnnealSchedule(), Heuristics()
    g = p.add_argument_group("annealing")
    g.add_argument("--t0", type=float, default=s.T0)
    g.add_argument("--alpha", type=float, default=s.alpha)
    g.add_argument("--q-max", "--iterations", dest="q_max", type=int, default=s.q_max,
                   help="refinement iterations; 0 returns the initial map")
    g.add_argument("--seed", type=int, default=0)
    g = p.add_argument_group("cost")
    g.add_argument("--lambda", dest="lam", type=float, default=c.lam)
    g.add_argument("--gamma", type=float, default=c.gamma)
    g.add_argument("--eps-theta", type=float, default=c.eps_theta)
    g.add_argument("--rho-c", type=float, default=c.rho_c)
    g.add_argument("--rho-theta", type=float, default=c.rho_theta)
    g.add_argument("--tau-c", type=float, default=c.tau_c)
    g.add_argument("--tau-eps", type=float, default=c.tau_eps,
                   help="planarity gate in disparity pixels")
    g.add_argument("--tau-theta", type=float, default=c.tau_theta,
                   help="smooth-plane candidate gate in disparity pixels")
    g.add_argument("--tau-a", type=float, default=c.tau_a)
    g.add_argument("--delta-a", type=int, default=c.delta_a)
    g.add_argument("--window-coc", type=int, default=c.window_coc)
    g.add_argument("--window-avg", type=int, default=c.window_avg)
    g.add_argument("--color-scale", type=float, default=c.color_scale)
    g.add_argument("--min-support", type=int, default=c.min_support)
    g.add_argument("--no-occlusion", action="store_true",
                   help="plain pixel deviation instead of the occlusion-aware cost")
    g = p.add_argument_group("candidates")
    g.add_argument("--sigma-a", type=float, default=h.sigma_a)
    for name in ("smooth-depth", "coc", "plane", "random"):
        g.add_argument(f"--no-{name}", action="store_true",
                       help=f"disable the {name} candidate heuristic")
    g = p.add_argument_group("initialisation")
    g.add_argument("--sigma-inner", type=float, default=SIGMA_INNER)
    g.add_argument("--sigma-outer", type=float, default=SIGMA_OUTER)


def config_from_args(args):
    """``(CostParams, AnnealSchedule | None, Heuristics)``; ``None`` when q_max is 0."""
    cost = CostParams(lam=args.lam, gamma=args.gamma, eps_theta=args.eps_theta,
                      rho_c=args.rho_c, rho_theta=args.rho_theta,
                      tau_c=args.tau_c, tau_eps=args.tau_eps,
                      tau_theta=args.tau_theta, tau_a=args.tau_a,
                      delta_a=args.delta_a, window_coc=args.window_coc,
                      window_avg=args.window_avg, color_scale=args.color_scale,
                      occlusion_aware=not args.no_occlusion,
                      min_support=args.min_support)
    if args.q_max < 0:
        raise ValueError("--q-max must be non-negative")
    sched = None if args.q_max == 0 else AnnealSchedule(args.t0, args.alpha,
                                                        args.q_max)
    heur = Heuristics(smooth_depth=not args.no_smooth_depth, coc=not args.no_coc,
                      plane=not args.no_plane, random=not args.no_random,
                      sigma_a=args.sigma_a)
    return cost, sched, heur


def crop_bundle(bundle: lfio.DatasetBundle, crop) -> lfio.DatasetBundle:
    x, y, w, h = crop
    _, _, M, N = bundle.light_field.dims
    if x + w > M or y + h > N:
        raise DimensionMismatch(f"crop {crop} exceeds the {M}x{N} views")

    def cut(a):
        return None if a is None else a[y:y + h, x:x + w].copy()

    lf = DiscreteLightField(bundle.light_field.data[:, :, y:y + h, x:x + w])
    return replace(bundle, light_field=lf, geometry=bundle.geometry.cropped(x, y),
                   gt_disparity=cut(bundle.gt_disparity),
                   eval_mask=cut(bundle.eval_mask),
                   planar_mask=cut(bundle.planar_mask))


def _apply_threads() -> None:
    val = os.environ.get("LFDEPTH_THREADS")
    if not val:
        return
    try:
        n = max(1, int(val))
    except ValueError:
        raise ConfigParseError(f"LFDEPTH_THREADS must be an integer, got {val!r}") from None
    import cv2
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    cv2.setNumThreads(n)


def _report(disp, bundle: lfio.DatasetBundle, border: int):
    return metrics.evaluate(disp, bundle.gt_disparity, bundle.geometry,
                            mask=bundle.eval_mask, planar_mask=bundle.planar_mask,
                            crop=border)


def cmd_estimate(args) -> int:
    bundle = lfio.load_hci_bundle(args.dataset, args.eval_mask, args.planar_mask,
                                  args.geometry)
    if args.crop:
        bundle = crop_bundle(bundle, args.crop)
    cost, sched, heur = config_from_args(args)
    lf, geom = bundle.light_field, bundle.geometry
    init = init_orientation_map(lf, geom, args.sigma_inner, args.sigma_outer)
    theta = init.tan_theta
    if sched is not None:
        theta = refine(lf, geom, theta, cost, sched, heur, args.seed)
    out = Path(args.out)
    lfio.write_outputs(theta, geom, out)
    run = {"dataset": str(args.dataset), "crop": args.crop, "seed": args.seed,
           "cost": asdict(cost), "schedule": None if sched is None else asdict(sched),
           "heuristics": asdict(heur)}
    (out / "run.json").write_text(json.dumps(run, indent=2))
    if bundle.gt_disparity is not None:
        rep = _report(theta.disparity(), bundle, args.border)
        (out / "metrics.json").write_text(rep.to_json())
        print(metrics.format_table({bundle.name or "scene": rep}))
    return 0


def cmd_eval(args) -> int:
    bundle = lfio.load_hci_bundle(args.bundle, args.eval_mask, args.planar_mask,
                                  args.geometry)
    if bundle.gt_disparity is None:
        raise MissingViews(f"no ground truth ({lfio.GT_NAME}) in {args.bundle}")
    disp = lfio.read_pfm_file(args.disparity).samples.astype(np.float64)
    if disp.ndim == 3:
        disp = disp[..., 0]
    if args.crop:
        bundle = crop_bundle(bundle, args.crop)
        if disp.shape != bundle.gt_disparity.shape:
            x, y, w, h = args.crop
            disp = disp[y:y + h, x:x + w]
    rep = _report(disp, bundle, args.border)
    print(rep.to_json() if args.json else
          metrics.format_table({bundle.name or "scene": rep}))
    return 0


def cmd_synth(args) -> int:
    scene = synth.load_scene(args.scene)
    if args.seed:
        planes = tuple(replace(p, texture=replace(p.texture, seed=p.texture.seed + args.seed))
                       for p in scene.planes)
        scene = replace(scene, planes=planes)
    r = synth.render(scene)
    out = Path(args.out)
    masks = {PLANAR_MASK: synth.planar_mask(r, args.planar_margin),
             VALID_MASK: r.gt_valid}
    lfio.write_hci_bundle(out, r.light_field, scene.geometry,
                          r.gt.disparity().astype(np.float32), masks)
    np.savez_compressed(out / VISIBILITY, visibility=r.visibility)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lfdepth",
                                description="Light-field depth estimation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def bundle_flags(sp):
        sp.add_argument("--eval-mask", default=None, help="mask file name inside the bundle")
        sp.add_argument("--planar-mask", default=None, help="planar mask file name inside the bundle")
        sp.add_argument("--geometry", choices=("normalized", "physical"), default="normalized")
        sp.add_argument("--crop", type=_crop_arg, default=None, metavar="X,Y,W,H")
        sp.add_argument("--border", type=int, default=metrics.DEFAULT_CROP,
                        help="border excluded from metrics (pixels)")

    e = sub.add_parser("estimate", help="estimate a disparity map")
    e.add_argument("dataset")
    e.add_argument("--out", required=True)
    bundle_flags(e)
    _add_model_flags(e)
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("eval", help="score a disparity PFM against a bundle")
    v.add_argument("disparity")
    v.add_argument("bundle")
    v.add_argument("--json", action="store_true")
    bundle_flags(v)
    v.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="render a synthetic bundle from a scene file")
    s.add_argument("scene")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0, help="offset added to texture seeds")
    s.add_argument("--planar-margin", type=int, default=3)
    s.set_defaults(func=cmd_synth)
    return p


_ERROR_CLASSES = (
    ((MissingViews, FileNotFoundError, OSError), "io", 3),
    ((ConfigParseError, SceneParseError), "config", 4),
    ((DimensionMismatch,), "dimension", 5),
    ((LFDepthError, ValueError), "input", 6),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_threads()
        return args.func(args)
    except Exception as exc:
        for classes, label, code in _ERROR_CLASSES:
            if isinstance(exc, classes):
                msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
                print(f"lfdepth: {label} error: {msg}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
