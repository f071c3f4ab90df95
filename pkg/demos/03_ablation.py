"""Switch parts of the model off and watch the planar normal error grow.

Run from the repository root:  python demos/03_ablation.py   (about 20 s)
"""
from pathlib import Path

from lfdepth import metrics, synth
from lfdepth.cost import CostParams
from lfdepth.refine import Heuristics, refine
from lfdepth.structure_tensor import init_orientation_map

HERE = Path(__file__).resolve().parent

# Two slanted planes: one square in front of a tilted wall.
scene = synth.load_scene(HERE / "fixtures" / "slanted_pair.scene")
r = synth.render(scene)
geom = scene.geometry
gt = r.gt.disparity()
planar = synth.planar_mask(r) & metrics.evaluation_mask(gt.shape)
init = init_orientation_map(r.light_field, geom).tan_theta

variants = {
    "full model": (CostParams(), Heuristics()),
    "no planar term": (CostParams(gamma=0.0), Heuristics()),
    "no plane candidate": (CostParams(), Heuristics(plane=False)),
    "no occlusion test": (CostParams(occlusion_aware=False), Heuristics()),
}

reports = {"initial map": metrics.evaluate(init.disparity(), gt, geom, planar_mask=planar)}
for name, (c, h) in variants.items():
    out = refine(r.light_field, geom, init, c, heuristics=h, seed=0)
    reports[name] = metrics.evaluate(out.disparity(), gt, geom, planar_mask=planar)

print(metrics.format_table(reports))
