"""How the occlusion-aware data term treats a background pixel next to a
foreground square.

Run from the repository root:  python demos/02_occlusion.py
"""
from pathlib import Path

import numpy as np

from lfdepth import cost, synth
from lfdepth.lightfield import extract_ppi

HERE = Path(__file__).resolve().parent

scene = synth.load_scene(HERE / "fixtures" / "two_plane.scene")
r = synth.render(scene)
geom = scene.geometry
t = r.gt.values

# A wall pixel just left of the square. Rays from some views towards it are
# blocked by the square, which sits at disparity +1 against the wall's -1.
x, y = 27, 48
print("pixel", (x, y), "on plane", r.plane_index[y, x], "tan", t[y, x])

# The renderer knows which views really see the point ...
vis = r.visibility[y, x]
print("views that see it (renderer):")
print(vis.astype(int))

# ... and the estimator infers the same set from the orientation map alone.
est = cost.unoccluded_views(t, geom, (x, y), t[y, x])
print("views kept by the occlusion test:")
print(est.astype(int))
print("identical:", np.array_equal(vis, est))

# Plain pixel deviation mixes in the square's colours; the occlusion-aware
# version only compares views that see the wall.
ppi = extract_ppi(r.light_field, geom, (x, y), t[y, x])
print(f"pixel deviation      {cost.pixel_deviation(ppi):.4f}")
print(f"occlusion-aware cost {cost.occlusion_aware_cost(r.light_field, geom, t, (x, y), t[y, x]):.2e}")

# Sweeping the candidate. Moving it behind the wall makes every neighbour
# look like an occluder, so only the reference view survives and the
# occlusion-aware value is trivially zero. The full cost therefore falls back
# to plain deviation when fewer than three views remain.
print("  tan      PD      OA  views   total J")
for cand in np.linspace(-1.3, -0.7, 7):
    pd = cost.pixel_deviation(extract_ppi(r.light_field, geom, (x, y), cand))
    oa, n = cost.occlusion_aware_cost(r.light_field, geom, t, (x, y), cand, return_support=True)
    j = cost.total_cost(r.light_field, geom, t, (x, y), cand)
    print(f"{cand:5.2f}  {pd:.4f}  {oa:.4f}  {n:5d}  {j:8.3f}")
