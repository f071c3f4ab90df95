"""Iterative occlusion-aware refinement by per-pixel simulated annealing.

Iteration ``q`` runs over the reference view in raster order when ``q`` is
even and in reverse raster order when odd.  Each visited pixel draws
candidates from up to four heuristics, keeps the cheapest, and accepts it
against the current value with the annealing rule.  Updates are applied in
place, so later pixels see them within the same scan.

Random draws come from ``numpy.random.default_rng([seed, q])``: one standard
normal and one uniform per pixel and iteration, indexed by position rather
than visit order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cost import CostParams, _Maps
from .errors import DegenerateInput
from .lightfield import DiscreteLightField, LFGeometry, OrientationMap, map_values

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealSchedule:
    T0: float = 10.0
    alpha: float = 0.8
    q_max: int = 10

    def __post_init__(self):
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if int(self.q_max) != self.q_max or self.q_max < 1:
            raise ValueError("q_max must be a positive integer")


@dataclass(frozen=True)
class Heuristics:
    smooth_depth: bool = True
    coc: bool = True
    plane: bool = True
    random: bool = True
    sigma_a: float = 0.04

    def kernel_params(self) -> K.HeuristicParams:
        return K.HeuristicParams(bool(self.smooth_depth), bool(self.coc),
                                 bool(self.plane), bool(self.random),
                                 float(self.sigma_a))


@dataclass(frozen=True, eq=False)
class IterationStats:
    q: int
    temperature: float
    visits: int
    accepted: int
    mean_cost: float  # mean J_old over the scan


@dataclass(frozen=True, eq=False)
class RefineResult:
    theta: OrientationMap
    stats: list = field(default_factory=list)


def temperature(q: int, sched: AnnealSchedule = AnnealSchedule()) -> float:
    if q < 0:
        raise ValueError("iteration index must be non-negative")
    return float(K.temperature(int(q), float(sched.T0), float(sched.alpha)))


def anneal_accept(j_old: float, j_cnd: float, T: float, u: float) -> bool:
    if not T > 0:
        raise ValueError("temperature must be positive")
    return bool(K.anneal_accept(float(j_old), float(j_cnd), float(T), float(u)))


def random_draws(seed: int, q: int, shape) -> tuple[np.ndarray, np.ndarray]:
    """Standard normals and uniforms used at iteration ``q``."""
    rng = np.random.default_rng([int(seed), int(q)])
    zeta = rng.standard_normal(shape)
    u = rng.random(shape)
    return zeta, u


def candidates(lf: DiscreteLightField, geom: LFGeometry, theta, m0, q: int,
               cost: CostParams = CostParams(),
               heuristics: Heuristics = Heuristics(),
               zeta: float = 0.0) -> np.ndarray:
    """Ordered candidate set for ``m0`` given the map state at visit time.

    ``zeta`` is the standard-normal draw behind the random perturbation.
    """
    maps = _Maps(geom, theta, cost)
    x0, y0 = (int(c) for c in m0)
    ref = lf.view(geom.k_ref)
    t_s = K.smoothed_tan(maps.theta, ref, x0, y0, maps.theta[y0, x0], maps.C)
    return K.candidate_list(maps.theta, maps.points, maps.th, maps.tv, maps.gh,
                            x0, y0, int(q), t_s, float(zeta), maps.G, maps.C,
                            heuristics.kernel_params())


def refine(lf: DiscreteLightField, geom: LFGeometry, theta_init,
           cost: CostParams = CostParams(),
           schedule: AnnealSchedule = AnnealSchedule(),
           heuristics: Heuristics = Heuristics(), seed: int = 0,
           return_stats: bool = False):
    """Refine ``theta_init`` for ``schedule.q_max`` iterations.

    Returns the refined :class:`OrientationMap`, or a :class:`RefineResult`
    with per-iteration statistics when ``return_stats`` is set.
    """
    Kv, Lv, Mv, Nv = lf.dims
    geom.check_grid(lf.dims)
    theta = np.array(map_values(theta_init), dtype=np.float64, order="C")
    if theta.shape != (Nv, Mv):
        raise DegenerateInput(
            f"orientation map {theta.shape} does not match views {(Nv, Mv)}")
    lo, hi = geom.tan_bounds
    if np.any(theta < lo) or np.any(theta > hi):
        raise ValueError("initial orientation map outside the valid range")

    maps = _Maps(geom, theta, cost)
    H = heuristics.kernel_params()
    out_stats = []
    for q in range(1, schedule.q_max + 1):
        zeta, u = random_draws(seed, q, theta.shape)
        accepted, jmean = K.refine_scan(lf.data, theta, maps.gh, zeta, u, q,
                                        float(schedule.T0),
                                        float(schedule.alpha), maps.G,
                                        maps.C, H)
        st = IterationStats(q, temperature(q, schedule), theta.size,
                            int(accepted), float(jmean))
        log.info("iteration %d: T=%.4g accepted %d/%d mean J %.4g", q,
                 st.temperature, st.accepted, st.visits, st.mean_cost)
        out_stats.append(st)
    result = OrientationMap(theta, geom)
    if return_stats:
        return RefineResult(result, out_stats)
    return result
