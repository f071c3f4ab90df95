"""Compiled per-pixel kernels.

Everything that runs inside the refinement scan lives here so the public
wrappers in :mod:`lfdepth.cost` and the refiner share one implementation.

Conventions: light fields are ``(L, K, N, M, 3)`` arrays (view row, view
column, pixel row, pixel column, channel); maps are ``(N, M)``; continuous
positions are ``(x, y)`` = (column, row) pairs.
"""
from collections import namedtuple
import math

import numpy as np
from numba import njit

GeomParams = namedtuple(
    "GeomParams",
    ["eta0", "eta1", "kr", "lr", "du0", "du1", "D", "Zp", "mr0", "mr1",
     "tmin", "tmax"],
)

CostKernelParams = namedtuple(
    "CostKernelParams",
    ["lam", "gamma", "eps_theta", "rho_c", "rho_theta", "tau_c", "tau_o",
     "tau_eps", "tau_theta", "tau_a", "delta_a", "r_coc", "r_avg",
     "color_scale", "occlusion_aware", "min_support"],
)

HeuristicParams = namedtuple(
    "HeuristicParams",
    ["smooth_depth", "coc", "plane", "random", "sigma_a"],
)


# ---------------------------------------------------------------- sampling

@njit(cache=True)
def in_view(x, y, M, N):
    return -0.5 <= x <= M - 0.5 and -0.5 <= y <= N - 0.5


@njit(cache=True)
def _cell(c, size):
    # base index and fraction, coordinate already clamped to [0, size-1]
    i = int(math.floor(c))
    if i >= size - 1:
        i = size - 2
    if i < 0:
        i = 0
    return i, c - i


@njit(cache=True)
def bilinear_rgb(view, x, y):
    N = view.shape[0]
    M = view.shape[1]
    x = min(max(x, 0.0), M - 1.0)
    y = min(max(y, 0.0), N - 1.0)
    i, fx = _cell(x, M)
    j, fy = _cell(y, N)
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    r = (w00 * view[j, i, 0] + w10 * view[j, i + 1, 0]
         + w01 * view[j + 1, i, 0] + w11 * view[j + 1, i + 1, 0])
    g = (w00 * view[j, i, 1] + w10 * view[j, i + 1, 1]
         + w01 * view[j + 1, i, 1] + w11 * view[j + 1, i + 1, 1])
    b = (w00 * view[j, i, 2] + w10 * view[j, i + 1, 2]
         + w01 * view[j + 1, i, 2] + w11 * view[j + 1, i + 1, 2])
    return r, g, b


@njit(cache=True)
def bilinear_scalar(img, x, y):
    N = img.shape[0]
    M = img.shape[1]
    x = min(max(x, 0.0), M - 1.0)
    y = min(max(y, 0.0), N - 1.0)
    i, fx = _cell(x, M)
    j, fy = _cell(y, N)
    return ((1.0 - fx) * (1.0 - fy) * img[j, i] + fx * (1.0 - fy) * img[j, i + 1]
            + (1.0 - fx) * fy * img[j + 1, i] + fx * fy * img[j + 1, i + 1])


# --------------------------------------------------------------- geometry

@njit(cache=True)
def point3d(G, x, y, t):
    den = 1.0 / G.Zp - t / G.D
    if den == 0.0:
        return np.nan, np.nan, np.nan
    z = 1.0 / den
    u = G.du0 * (x - G.mr0)
    v = G.du1 * (y - G.mr1)
    return u * z / G.D, v * z / G.D, z


@njit(cache=True)
def point_map(theta, G):
    N, M = theta.shape
    out = np.empty((N, M, 3))
    for j in range(N):
        for i in range(M):
            X, Y, Z = point3d(G, float(i), float(j), theta[j, i])
            out[j, i, 0] = X
            out[j, i, 1] = Y
            out[j, i, 2] = Z
    return out


@njit(cache=True)
def correlate_points(points, kernel):
    """Kernel correlation of a point map; NaN where the window leaves the grid."""
    N, M = points.shape[0], points.shape[1]
    r = kernel.shape[0] // 2
    out = np.full((N, M, 3), np.nan)
    for j in range(r, N - r):
        for i in range(r, M - r):
            a0 = 0.0
            a1 = 0.0
            a2 = 0.0
            for b in range(-r, r + 1):
                for a in range(-r, r + 1):
                    w = kernel[b + r, a + r]
                    if w != 0.0:
                        a0 += w * points[j + b, i + a, 0]
                        a1 += w * points[j + b, i + a, 1]
                        a2 += w * points[j + b, i + a, 2]
            out[j, i, 0] = a0
            out[j, i, 1] = a1
            out[j, i, 2] = a2
    return out


@njit(cache=True)
def unit_normal(hx, hy, hz, vx, vy, vz):
    """Camera-facing unit normal of tau_h x tau_v; ok=False when degenerate."""
    cx = hy * vz - hz * vy
    cy = hz * vx - hx * vz
    cz = hx * vy - hy * vx
    n = math.sqrt(cx * cx + cy * cy + cz * cz)
    if not (n >= 1e-15):
        return 0.0, 0.0, 0.0, False
    if cz > 0.0:
        n = -n
    return cx / n, cy / n, cz / n, True


@njit(cache=True)
def normal_map(th, tv):
    N, M = th.shape[0], th.shape[1]
    out = np.full((N, M, 3), np.nan)
    for j in range(N):
        for i in range(M):
            nx, ny, nz, ok = unit_normal(th[j, i, 0], th[j, i, 1], th[j, i, 2],
                                         tv[j, i, 0], tv[j, i, 1], tv[j, i, 2])
            if ok:
                out[j, i, 0] = nx
                out[j, i, 1] = ny
                out[j, i, 2] = nz
    return out


@njit(cache=True)
def _angle(ax, ay, az, bx, by, bz):
    c = ax * bx + ay * by + az * bz
    return math.acos(min(1.0, max(-1.0, c)))


# ------------------------------------------------------------- data costs

@njit(cache=True)
def view_occluded(theta_map, ex, ey, amax, x0, y0, t, tmax):
    """Algorithm-1 test for one view with epipolar step (ex, ey) per unit tan."""
    span = tmax - t
    if span <= 0.0 or amax == 0:
        return False
    N, M = theta_map.shape
    h = 0.5 / amax
    reach = max(abs(ex), abs(ey)) * span
    nsteps = int(math.ceil(reach))
    if nsteps < 1:
        nsteps = 1
    last_i = -1
    last_j = -1
    for s in range(nsteps + 1):
        f = span * s / nsteps
        ii = int(math.floor(x0 - ex * f + 0.5))
        jj = int(math.floor(y0 - ey * f + 0.5))
        if ii == last_i and jj == last_j:
            continue
        last_i = ii
        last_j = jj
        if ii < 0 or ii >= M or jj < 0 or jj >= N:
            continue
        tau = theta_map[jj, ii]
        if not (tau > t and tau <= tmax):
            continue
        ux = x0 - ex * (tau - t)
        uy = y0 - ey * (tau - t)
        if ux < 0.0 or ux > M - 1.0 or uy < 0.0 or uy > N - 1.0:
            continue
        tb = bilinear_scalar(theta_map, ux, uy)
        if tb <= t:
            continue
        ratio = (tau - t) / (tb - t)
        if abs(1.0 - ratio) < h:
            return True
    return False


@njit(cache=True)
def fill_unoccluded(mask, theta_map, G, x0, y0, t):
    L, K = mask.shape
    for l in range(L):
        for k in range(K):
            a = k - G.kr
            b = l - G.lr
            amax = max(abs(a), abs(b))
            mask[l, k] = not view_occluded(theta_map, G.eta0 * a, G.eta1 * b,
                                           amax, x0, y0, t, G.tmax)


@njit(cache=True)
def data_cost(lf, theta_map, G, x0, y0, t, occlusion_aware):
    """Channel-averaged mean |I(k) - I(k_ref)| over valid (and unoccluded) views."""
    L, K, N, M = lf.shape[0], lf.shape[1], lf.shape[2], lf.shape[3]
    r0, g0, b0 = bilinear_rgb(lf[G.lr, G.kr], x0, y0)
    acc = 0.0
    count = 0
    for l in range(L):
        b = l - G.lr
        for k in range(K):
            a = k - G.kr
            x = x0 + G.eta0 * a * t
            y = y0 + G.eta1 * b * t
            if not in_view(x, y, M, N):
                continue
            if a == 0 and b == 0:
                count += 1
                continue
            if occlusion_aware:
                amax = max(abs(a), abs(b))
                if view_occluded(theta_map, G.eta0 * a, G.eta1 * b, amax,
                                 x0, y0, t, G.tmax):
                    continue
            r, g, bb = bilinear_rgb(lf[l, k], x, y)
            acc += abs(r - r0) + abs(g - g0) + abs(bb - b0)
            count += 1
    if count == 0:
        return 0.0, 0
    return acc / (3.0 * count), count


# ------------------------------------------------- colour-orientation term

@njit(cache=True)
def smoothed_tan(theta_map, ref, x0, y0, t_center, C):
    N, M = theta_map.shape
    r = C.r_coc
    c0r = np.float64(ref[y0, x0, 0])
    c0g = np.float64(ref[y0, x0, 1])
    c0b = np.float64(ref[y0, x0, 2])
    num = 0.0
    den = 0.0
    for j in range(max(0, y0 - r), min(N, y0 + r + 1)):
        for i in range(max(0, x0 - r), min(M, x0 + r + 1)):
            tm = theta_map[j, i]
            dth = C.rho_theta * abs(tm - t_center)
            dr = ref[j, i, 0] - c0r
            dg = ref[j, i, 1] - c0g
            db = ref[j, i, 2] - c0b
            dc = C.rho_c * C.color_scale * math.sqrt(dr * dr + dg * dg + db * db)
            if dc > C.tau_c:
                continue
            if dth <= C.tau_o:
                w = 1.0 / max(C.eps_theta, math.sqrt(dth * dth + dc * dth))
            else:
                w = 1.0 / max(C.eps_theta, math.sqrt(dc * dc + dth * dth))
            num += w * tm
            den += w
    if den == 0.0:
        return theta_map[y0, x0]
    return num / den


# ---------------------------------------------------- planar geometry term

@njit(cache=True)
def robust_select(nrm, ok, tau_a):
    """Robust normal over a (W, W) window of normals centred on m0.

    Returns (nx, ny, nz, selected); falls back to the centre normal when the
    selection is empty.
    """
    W = nrm.shape[0]
    r = W // 2
    c0x = nrm[r, r, 0]
    c0y = nrm[r, r, 1]
    c0z = nrm[r, r, 2]
    beta = np.zeros((W, W))
    bsum = 0.0
    cnt = 0
    for b in range(W):
        for a in range(W):
            if ok[b, a]:
                beta[b, a] = _angle(nrm[b, a, 0], nrm[b, a, 1], nrm[b, a, 2],
                                    c0x, c0y, c0z)
                bsum += beta[b, a]
                cnt += 1
    lim = tau_a * bsum / cnt
    sel = np.zeros((W, W), dtype=np.bool_)
    sx = 0.0
    sy = 0.0
    sz = 0.0
    for b in range(W):
        for a in range(W):
            if ok[b, a] and beta[b, a] <= lim:
                sel[b, a] = True
                sx += nrm[b, a, 0]
                sy += nrm[b, a, 1]
                sz += nrm[b, a, 2]
    sn = math.sqrt(sx * sx + sy * sy + sz * sz)
    if sn == 0.0:
        return c0x, c0y, c0z, sel
    return sx / sn, sy / sn, sz / sn, sel


@njit(cache=True)
def plane_tan(points, sel, x0, y0, rx, ry, rz, G):
    """Orientation where the plane with normal r through the selected
    neighbours (m0 excluded) meets the viewing ray of m0.

    status: 0 ok, 1 ray parallel to plane, 2 no neighbours, 3 behind camera.
    """
    N, M = points.shape[0], points.shape[1]
    W = sel.shape[0]
    r = W // 2
    osum = 0.0
    ocnt = 0
    for b in range(W):
        for a in range(W):
            if sel[b, a] and not (a == r and b == r):
                j = y0 + b - r
                i = x0 + a - r
                if 0 <= j < N and 0 <= i < M:
                    osum += (points[j, i, 0] * rx + points[j, i, 1] * ry
                             + points[j, i, 2] * rz)
                    ocnt += 1
    if ocnt == 0:
        return np.nan, 2
    o = osum / ocnt
    dirx = G.du0 * (x0 - G.mr0) / G.D
    diry = G.du1 * (y0 - G.mr1) / G.D
    proj = rx * dirx + ry * diry + rz
    if abs(proj) <= 1e-12:
        return np.nan, 1
    z = o / proj
    if not z > 0.0:
        return np.nan, 3
    return G.D * (1.0 / G.Zp - 1.0 / z), 0


@njit(cache=True)
def planar_terms(points, th, tv, gh, x0, y0, dX, dY, dZ, t_map, G, C):
    """Return (J_pg, tan_mu, ok) for a candidate displacing x(m0) by (dX,dY,dZ).

    ``ok`` is False when the large-kernel normal at m0 or the plane fit is
    undefined; J_pg is then 0.
    """
    N, M = points.shape[0], points.shape[1]
    d = C.delta_a
    r = C.r_avg
    if x0 < d or x0 > M - 1 - d or y0 < d or y0 > N - 1 - d:
        return 0.0, np.nan, False
    W = 2 * r + 1
    nrm = np.empty((W, W, 3))
    ok = np.zeros((W, W), dtype=np.bool_)
    for b in range(-r, r + 1):
        my = y0 + b
        if my < d or my > N - 1 - d:
            continue
        for a in range(-r, r + 1):
            mx = x0 + a
            if mx < d or mx > M - 1 - d:
                continue
            # offset of m0 as seen from m
            ia = -a
            ib = -b
            wh = 0.0
            wv = 0.0
            if abs(ia) <= d and abs(ib) <= d:
                wh = gh[ib + d, ia + d]
                wv = gh[ia + d, ib + d]
            nx, ny, nz, good = unit_normal(
                th[my, mx, 0] + dX * wh, th[my, mx, 1] + dY * wh,
                th[my, mx, 2] + dZ * wh,
                tv[my, mx, 0] + dX * wv, tv[my, mx, 1] + dY * wv,
                tv[my, mx, 2] + dZ * wv)
            if good:
                nrm[b + r, a + r, 0] = nx
                nrm[b + r, a + r, 1] = ny
                nrm[b + r, a + r, 2] = nz
                ok[b + r, a + r] = True
    if not ok[r, r]:
        return 0.0, np.nan, False
    rx, ry, rz, sel = robust_select(nrm, ok, C.tau_a)
    t_mu, status = plane_tan(points, sel, x0, y0, rx, ry, rz, G)
    fit_ok = status == 0

    jpg = 0.0
    if fit_ok and abs(t_mu - t_map) < C.tau_eps:
        hx = points[y0, x0 + 1, 0] - points[y0, x0 - 1, 0]
        hy = points[y0, x0 + 1, 1] - points[y0, x0 - 1, 1]
        hz = points[y0, x0 + 1, 2] - points[y0, x0 - 1, 2]
        vx = points[y0 + 1, x0, 0] - points[y0 - 1, x0, 0]
        vy = points[y0 + 1, x0, 1] - points[y0 - 1, x0, 1]
        vz = points[y0 + 1, x0, 2] - points[y0 - 1, x0, 2]
        nx, ny, nz, good = unit_normal(hx, hy, hz, vx, vy, vz)
        if good:
            jpg = _angle(rx, ry, rz, nx, ny, nz)
    return jpg, t_mu, fit_ok


# ------------------------------------------------------------- total cost

@njit(cache=True)
def total_cost(lf, theta, points, th, tv, gh, x0, y0, t, t_s, G, C):
    data, support = data_cost(lf, theta, G, float(x0), float(y0), t,
                              C.occlusion_aware)
    if C.occlusion_aware and support < C.min_support:
        data, support = data_cost(lf, theta, G, float(x0), float(y0), t, False)
    J = C.color_scale * data
    if C.lam != 0.0:
        J += C.lam * (t - t_s) ** 2
    if C.gamma != 0.0:
        X, Y, Z = point3d(G, float(x0), float(y0), t)
        jpg, _, _ = planar_terms(points, th, tv, gh, x0, y0,
                                 X - points[y0, x0, 0], Y - points[y0, x0, 1],
                                 Z - points[y0, x0, 2], theta[y0, x0], G, C)
        J += C.gamma * jpg
    return J


# ------------------------------------------------------------- refinement

@njit(cache=True)
def temperature(q, t0, alpha):
    return t0 * alpha ** (q // 2)


@njit(cache=True)
def anneal_accept(j_old, j_cnd, T, u):
    d = (j_old - j_cnd) / T
    if d >= 0.0:
        return True
    if d < -745.0:
        return False
    return u < math.exp(d)


@njit(cache=True)
def candidate_list(theta, points, th, tv, gh, x0, y0, q, t_s, zeta, G, C, H):
    """Ordered, clamped, de-duplicated candidates for pixel (x0, y0)."""
    N, M = theta.shape
    raw = np.empty(5)
    n = 0
    if H.smooth_depth:
        if q % 2 == 0:
            if x0 - 1 >= 0:
                raw[n] = theta[y0, x0 - 1]
                n += 1
            if y0 - 1 >= 0:
                raw[n] = theta[y0 - 1, x0]
                n += 1
        else:
            if x0 + 1 < M:
                raw[n] = theta[y0, x0 + 1]
                n += 1
            if y0 + 1 < N:
                raw[n] = theta[y0 + 1, x0]
                n += 1
    if H.coc:
        raw[n] = t_s
        n += 1
    t_cur = theta[y0, x0]
    if H.plane:
        _, t_mu, fit_ok = planar_terms(points, th, tv, gh, x0, y0,
                                       0.0, 0.0, 0.0, t_cur, G, C)
        if fit_ok and abs(t_mu - t_cur) < C.tau_theta:
            raw[n] = t_mu
            n += 1
    if H.random:
        raw[n] = t_cur + H.sigma_a * zeta
        n += 1
    out = np.empty(n)
    m = 0
    for i in range(n):
        c = min(max(raw[i], G.tmin), G.tmax)
        dup = False
        for j in range(m):
            if out[j] == c:
                dup = True
                break
        if not dup:
            out[m] = c
            m += 1
    return out[:m]


@njit(cache=True)
def _move_point(theta, points, th, tv, gh, x0, y0, t_new, G, d):
    N, M = theta.shape
    X, Y, Z = point3d(G, float(x0), float(y0), t_new)
    dX = X - points[y0, x0, 0]
    dY = Y - points[y0, x0, 1]
    dZ = Z - points[y0, x0, 2]
    theta[y0, x0] = t_new
    points[y0, x0, 0] = X
    points[y0, x0, 1] = Y
    points[y0, x0, 2] = Z
    # tau(m) gains x(m0) * g(m0 - m)
    for b in range(-d, d + 1):
        my = y0 - b
        if my < 0 or my >= N:
            continue
        for a in range(-d, d + 1):
            mx = x0 - a
            if mx < 0 or mx >= M:
                continue
            wh = gh[b + d, a + d]
            wv = gh[a + d, b + d]
            th[my, mx, 0] += dX * wh
            th[my, mx, 1] += dY * wh
            th[my, mx, 2] += dZ * wh
            tv[my, mx, 0] += dX * wv
            tv[my, mx, 1] += dY * wv
            tv[my, mx, 2] += dZ * wv


@njit(cache=True)
def refine_scan(lf, theta, gh, zeta, uniform, q, t0, alpha, G, C, H):
    """One serpentine scan (iteration ``q``) in place on ``theta``.

    Returns (accepted, mean J_old).
    """
    N, M = theta.shape
    ref = lf[G.lr, G.kr]
    gv = gh.T.copy()
    T = temperature(q, t0, alpha)
    points = point_map(theta, G)
    th = correlate_points(points, gh)
    tv = correlate_points(points, gv)
    accepted = 0
    jsum = 0.0
    for s in range(N * M):
        if q % 2 == 0:
            idx = s
        else:
            idx = N * M - 1 - s
        y0 = idx // M
        x0 = idx - y0 * M
        t_old = theta[y0, x0]
        t_s = smoothed_tan(theta, ref, x0, y0, t_old, C)
        j_old = total_cost(lf, theta, points, th, tv, gh, x0, y0, t_old,
                           t_s, G, C)
        jsum += j_old
        cands = candidate_list(theta, points, th, tv, gh, x0, y0, q, t_s,
                               zeta[y0, x0], G, C, H)
        if cands.shape[0] == 0:
            continue
        best = cands[0]
        j_best = total_cost(lf, theta, points, th, tv, gh, x0, y0, best,
                            t_s, G, C)
        for c in range(1, cands.shape[0]):
            jc = total_cost(lf, theta, points, th, tv, gh, x0, y0,
                            cands[c], t_s, G, C)
            if jc < j_best:
                j_best = jc
                best = cands[c]
        if anneal_accept(j_old, j_best, T, uniform[y0, x0]):
            accepted += 1
            if best != t_old:
                _move_point(theta, points, th, tv, gh, x0, y0, best, G,
                            C.delta_a)
    return accepted, jsum / (N * M)
