"""Numba @njit implementations of the hot kernels.

Same signatures and semantics as ``kernels.ref``; the sequential
accumulation order matches the reference so both backends agree to
float precision. Selected at import time by ``kernels/__init__.py``.
"""

import math

import numpy as np
from numba import njit

BACKEND = "numba"

_BISECT_ITERS = 26


@njit(cache=True)
def scatter_max(rows, cols, vals, n):
    acc = np.full((n, n), -np.inf)
    cnt = np.zeros((n, n), dtype=np.int64)
    for i in range(rows.shape[0]):
        r = rows[i]
        c = cols[i]
        if vals[i] > acc[r, c]:
            acc[r, c] = vals[i]
        cnt[r, c] += 1
    return acc, cnt


@njit(cache=True)
def scatter_sum(rows, cols, vals, n):
    acc = np.zeros((n, n))
    cnt = np.zeros((n, n), dtype=np.int64)
    for i in range(rows.shape[0]):
        r = rows[i]
        c = cols[i]
        acc[r, c] += vals[i]
        cnt[r, c] += 1
    return acc, cnt


@njit(cache=True)
def gradient(values, valid):
    n = values.shape[0]
    g = np.zeros((n, n))
    gvalid = np.zeros((n, n), dtype=np.bool_)
    for r in range(n):
        for c in range(n):
            if not valid[r, c]:
                continue
            okl = c - 1 >= 0 and valid[r, c - 1]
            okr = c + 1 < n and valid[r, c + 1]
            okd = r - 1 >= 0 and valid[r - 1, c]
            oku = r + 1 < n and valid[r + 1, c]
            gx = 0.0
            gy = 0.0
            if okl and okr:
                gx = (values[r, c + 1] - values[r, c - 1]) * 0.5
            elif okr:
                gx = values[r, c + 1] - values[r, c]
            elif okl:
                gx = values[r, c] - values[r, c - 1]
            if okd and oku:
                gy = (values[r + 1, c] - values[r - 1, c]) * 0.5
            elif oku:
                gy = values[r + 1, c] - values[r, c]
            elif okd:
                gy = values[r, c] - values[r - 1, c]
            if (okl or okr) or (okd or oku):
                g[r, c] = math.sqrt(gx * gx + gy * gy)
                gvalid[r, c] = True
    return g, gvalid


@njit(cache=True, inline="always")
def _height_at(x, y, slope, bumps, steps):
    h = slope[0] + slope[1] * x + slope[2] * y
    for b in range(bumps.shape[0]):
        dx = x - bumps[b, 0]
        dy = y - bumps[b, 1]
        sigma = bumps[b, 3]
        d2 = dx * dx + dy * dy
        if d2 <= 25.0 * sigma * sigma:
            h = h + bumps[b, 2] * math.exp(-d2 / (2.0 * sigma * sigma))
    for s in range(steps.shape[0]):
        arg = (steps[s, 0] * x + steps[s, 1] * y - steps[s, 2]) / steps[s, 4]
        h = h + steps[s, 3] * 0.5 * (1.0 + math.tanh(arg))
    return h


@njit(cache=True)
def heightfield(xs, ys, slope, bumps, steps):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _height_at(xs[i], ys[i], slope, bumps, steps)
    return out


@njit(cache=True)
def raycast(origin, dirs, u, cyls, slope, bumps, steps, max_range, t_step,
            h_max, ground_intensity):
    R = dirs.shape[0]
    C = cyls.shape[0]
    ox = origin[0]
    oy = origin[1]
    oz = origin[2]

    pts = np.zeros((R, 4))
    kind = np.full(R, -1, dtype=np.int8)

    # scratch arrays for pliable crossings of one ray
    ca = np.empty(C + 1)
    cb = np.empty(C + 1)
    clnp = np.empty(C + 1)
    cint = np.empty(C + 1)

    h0 = _height_at(ox, oy, slope, bumps, steps)

    for ri in range(R):
        dx = dirs[ri, 0]
        dy = dirs[ri, 1]
        dz = dirs[ri, 2]

        t_solid = np.inf
        solid_int = 0.0
        n_cross = 0

        for c in range(C):
            rad = cyls[c, 2]
            fx = ox - cyls[c, 0]
            fy = oy - cyls[c, 1]
            qa = dx * dx + dy * dy
            qb = 2.0 * (fx * dx + fy * dy)
            qc = fx * fx + fy * fy - rad * rad
            if qa < 1e-12:
                if qc > 0.0:
                    continue
                t0 = 0.0
                t1 = max_range
            else:
                disc = qb * qb - 4.0 * qa * qc
                if disc <= 0.0:
                    continue
                sq = math.sqrt(disc)
                t0 = (-qb - sq) / (2.0 * qa)
                t1 = (-qb + sq) / (2.0 * qa)
            zlo = cyls[c, 3]
            zhi = cyls[c, 4]
            if abs(dz) < 1e-12:
                if oz < zlo or oz > zhi:
                    continue
            else:
                tz0 = (zlo - oz) / dz
                tz1 = (zhi - oz) / dz
                lo = min(tz0, tz1)
                hi = max(tz0, tz1)
                if lo > t0:
                    t0 = lo
                if hi < t1:
                    t1 = hi
            if t0 < 0.0:
                t0 = 0.0
            if t1 > max_range:
                t1 = max_range
            if t1 <= t0:
                continue
            if cyls[c, 6] <= 0.0:
                if t0 < t_solid:
                    t_solid = t0
                    solid_int = cyls[c, 5]
            else:
                # stable insertion sort by entry t
                j = n_cross
                while j > 0 and ca[j - 1] > t0:
                    ca[j] = ca[j - 1]
                    cb[j] = cb[j - 1]
                    clnp[j] = clnp[j - 1]
                    cint[j] = cint[j - 1]
                    j -= 1
                ca[j] = t0
                cb[j] = t1
                clnp[j] = math.log(cyls[c, 6])
                cint[j] = cyls[c, 5]
                n_cross += 1

        t_stop = t_solid if t_solid < max_range else max_range

        t_veg = np.inf
        veg_int = 0.0
        if n_cross > 0:
            if u[ri] > 0.0:
                lnu = math.log(u[ri])
            else:
                lnu = -np.inf
            acc = 0.0
            for j in range(n_cross):
                a = ca[j] if ca[j] > 0.0 else 0.0
                b = cb[j] if cb[j] < t_stop else t_stop
                if b <= a:
                    continue
                seg = (b - a) * clnp[j]
                if acc + seg <= lnu:
                    t_veg = a + (lnu - acc) / clnp[j]
                    veg_int = cint[j]
                    break
                acc += seg

        t_stop2 = t_stop if t_stop < t_veg else t_veg

        # ground march + bisection
        t_ground = np.inf
        if oz <= h0:
            t_ground = 0.0
        elif t_stop2 > 0.0:
            prev_t = 0.0
            k = 1
            while True:
                t = k * t_step
                if t > t_stop2:
                    t = t_stop2
                x = ox + dx * t
                y = oy + dy * t
                z = oz + dz * t
                h = _height_at(x, y, slope, bumps, steps)
                if z <= h:
                    blo = prev_t
                    bhi = t
                    for _ in range(_BISECT_ITERS):
                        mid = 0.5 * (blo + bhi)
                        xm = ox + dx * mid
                        ym = oy + dy * mid
                        zm = oz + dz * mid
                        if zm <= _height_at(xm, ym, slope, bumps, steps):
                            bhi = mid
                        else:
                            blo = mid
                    t_ground = bhi
                    break
                if dz >= 0.0 and z > h_max:
                    break
                if t >= t_stop2:
                    break
                prev_t = t
                k += 1

        ground_wins = t_ground <= t_stop2
        veg_wins = (not ground_wins) and t_veg <= t_stop
        solid_wins = (not ground_wins) and (not veg_wins) and t_solid < max_range

        if ground_wins:
            hx = ox + dx * t_ground
            hy = oy + dy * t_ground
            pts[ri, 0] = hx
            pts[ri, 1] = hy
            pts[ri, 2] = _height_at(hx, hy, slope, bumps, steps)
            pts[ri, 3] = ground_intensity
            kind[ri] = 0
        elif veg_wins:
            pts[ri, 0] = ox + dx * t_veg
            pts[ri, 1] = oy + dy * t_veg
            pts[ri, 2] = oz + dz * t_veg
            pts[ri, 3] = veg_int
            kind[ri] = 2
        elif solid_wins:
            pts[ri, 0] = ox + dx * t_solid
            pts[ri, 1] = oy + dy * t_solid
            pts[ri, 2] = oz + dz * t_solid
            pts[ri, 3] = solid_int
            kind[ri] = 1
    return pts, kind


@njit(cache=True, inline="always")
def _bilinear_one(vals, ok, x, y, x0, y0, res, n):
    if x < x0 or x >= x0 + n * res or y < y0 or y >= y0 + n * res:
        return 0.0, False
    fx = (x - x0) / res - 0.5
    fy = (y - y0) / res - 0.5
    c0 = int(math.floor(fx))
    r0 = int(math.floor(fy))
    wx = fx - c0
    wy = fy - r0

    all4 = True
    best_d = np.inf
    best_v = 0.0
    have = False
    bil = 0.0
    for i in range(4):
        r = r0 + (i // 2)
        c = c0 + (i % 2)
        good = 0 <= r < n and 0 <= c < n
        v = vals[r, c] if good else 0.0
        cok = good and ok[r, c]
        if not cok:
            all4 = False
        if i == 0:
            w = (1 - wx) * (1 - wy)
        elif i == 1:
            w = wx * (1 - wy)
        elif i == 2:
            w = (1 - wx) * wy
        else:
            w = wx * wy
        bil += v * w
        if cok:
            ccx = x0 + (c + 0.5) * res
            ccy = y0 + (r + 0.5) * res
            d = (x - ccx) * (x - ccx) + (y - ccy) * (y - ccy)
            if d < best_d:
                best_d = d
                best_v = v
            have = True
    if all4:
        return bil, True
    if have:
        return best_v, True
    return 0.0, False


@njit(cache=True)
def score_samples(vs, ws, px, py, pyaw, gx, gy, v_max, nsteps, dt,
                  footprint, clearance_cap,
                  occ, edt, res, x0, y0, n,
                  surf_vals, surf_ok, surf_active,
                  elev_vals, elev_ok, elev_active,
                  veg_vals, veg_ok, veg_active,
                  alpha, beta, gamma, delta, theta, near_goal):
    S = vs.shape[0]
    scores = np.empty(S)
    for i in range(S):
        x = px
        y = py
        yaw = pyaw
        min_clear = np.inf
        rejected = False
        s_sum = 0.0
        s_cnt = 0
        e_sum = 0.0
        e_cnt = 0
        g_sum = 0.0
        g_cnt = 0
        for _ in range(nsteps):
            x = x + vs[i] * math.cos(yaw) * dt
            y = y + vs[i] * math.sin(yaw) * dt
            yaw = yaw + ws[i] * dt
            col = int(math.floor((x - x0) / res))
            row = int(math.floor((y - y0) / res))
            inside = 0 <= col < n and 0 <= row < n
            if inside:
                if occ[row, col] != 0:
                    rejected = True
                    break
                d = edt[row, col]
                if d < footprint:
                    rejected = True
                    break
                if d < min_clear:
                    min_clear = d
            else:
                if clearance_cap < min_clear:
                    min_clear = clearance_cap
            if surf_active:
                val, got = _bilinear_one(surf_vals, surf_ok, x, y, x0, y0, res, n)
                if got:
                    s_sum += val
                    s_cnt += 1
            if elev_active:
                val, got = _bilinear_one(elev_vals, elev_ok, x, y, x0, y0, res, n)
                if got:
                    e_sum += val
                    e_cnt += 1
            if veg_active:
                val, got = _bilinear_one(veg_vals, veg_ok, x, y, x0, y0, res, n)
                if got:
                    g_sum += val
                    g_cnt += 1
        if rejected:
            scores[i] = -np.inf
            continue
        if near_goal:
            d_end = math.hypot(gx - x, gy - y)
            head = 1.0 - min(d_end, 1.0)
        else:
            err = math.atan2(gy - y, gx - x) - yaw
            err = math.atan2(math.sin(err), math.cos(err))
            head = 1.0 - abs(err) / math.pi
        obs = min(min_clear / clearance_cap, 1.0)
        vel = vs[i] / v_max
        if surf_active and s_cnt > 0:
            surface = (s_sum / s_cnt) / 100.0
        else:
            surface = 0.0
        if elev_active and e_cnt > 0:
            elevation = 1.0 - (e_sum / e_cnt) / 100.0
        else:
            elevation = 1.0
        if veg_active and g_cnt > 0:
            vegterm = 1.0 - (g_sum / g_cnt) / 100.0
        else:
            vegterm = 1.0
        scores[i] = (alpha * head * (1.0 - surface) + beta * obs + gamma * vel
                     + delta * elevation + theta * vegterm)
    return scores
