"""Pure-numpy reference implementations of the hot kernels.

Every function here has a numba twin in ``kernels.jit`` with the same
signature and semantics. The numpy path is the fallback when numba is
unavailable or disabled via ``SCENENAV_NO_NUMBA=1``; it is also the
ground truth the benchmark compares against. Accumulation order is kept
identical to the jit twins so the two backends agree to float precision.
"""

import numpy as np

BACKEND = "numpy"


# ---------------------------------------------------------------------------
# point binning


def scatter_max(rows, cols, vals, n):
    """Max-reduce values into an n x n grid. Returns (acc, cnt).

    Cells never written keep -inf in acc and 0 in cnt.
    """
    acc = np.full((n, n), -np.inf)
    cnt = np.zeros((n, n), dtype=np.int64)
    np.maximum.at(acc, (rows, cols), vals)
    np.add.at(cnt, (rows, cols), 1)
    return acc, cnt


def scatter_sum(rows, cols, vals, n):
    """Sum-reduce values into an n x n grid (for mean reducers).

    np.add.at applies updates in point order, matching the jit loop.
    """
    acc = np.zeros((n, n))
    cnt = np.zeros((n, n), dtype=np.int64)
    np.add.at(acc, (rows, cols), vals)
    np.add.at(cnt, (rows, cols), 1)
    return acc, cnt


# ---------------------------------------------------------------------------
# gradients


def gradient(values, valid):
    """Validity-aware gradient magnitude, map-units per cell.

    Central differences where both axis neighbours are valid, one-sided
    toward the valid side otherwise. A cell with no valid neighbour on
    either axis (or itself invalid) is invalid in the output; an axis
    with no valid neighbour contributes zero.
    """
    n = values.shape[0]
    v = values
    ok = valid

    def shift(arr, dr, dc, fill):
        out = np.full_like(arr, fill)
        rs = slice(max(dr, 0), n + min(dr, 0))
        rd = slice(max(-dr, 0), n + min(-dr, 0))
        cs = slice(max(dc, 0), n + min(dc, 0))
        cd = slice(max(-dc, 0), n + min(-dc, 0))
        out[rd, cd] = arr[rs, cs]
        return out

    vl = shift(v, 0, 1, 0.0)
    vr = shift(v, 0, -1, 0.0)
    vd = shift(v, 1, 0, 0.0)
    vu = shift(v, -1, 0, 0.0)
    okl = shift(ok, 0, 1, False)
    okr = shift(ok, 0, -1, False)
    okd = shift(ok, 1, 0, False)
    oku = shift(ok, -1, 0, False)

    gx = np.where(
        okl & okr, (vr - vl) * 0.5,
        np.where(okr, vr - v, np.where(okl, v - vl, 0.0)),
    )
    gy = np.where(
        okd & oku, (vu - vd) * 0.5,
        np.where(oku, vu - v, np.where(okd, v - vd, 0.0)),
    )
    has_x = okl | okr
    has_y = okd | oku
    gvalid = ok & (has_x | has_y)
    g = np.where(gvalid, np.sqrt(gx * gx + gy * gy), 0.0)
    return g, gvalid


# ---------------------------------------------------------------------------
# analytic heightfield

# slope: (base, sx, sy)
# bumps: (B, 4) rows [cx, cy, amp, sigma]
# steps: (S, 5) rows [nx, ny, c, amp, width] -> amp * 0.5 * (1 + tanh((n.p - c)/width))


def heightfield(xs, ys, slope, bumps, steps):
    """Evaluate the analytic heightfield at (xs, ys). Shapes broadcast.

    Bump contributions are cut off past 5 sigma (identically in both
    backends), where they are microscopic.
    """
    h = slope[0] + slope[1] * xs + slope[2] * ys
    for b in range(bumps.shape[0]):
        cx, cy, amp, sigma = bumps[b]
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        near = d2 <= 25.0 * sigma * sigma
        if np.any(near):
            h = h + np.where(near, amp * np.exp(-d2 / (2.0 * sigma * sigma)), 0.0)
    for s in range(steps.shape[0]):
        nx, ny, c, amp, width = steps[s]
        h = h + amp * 0.5 * (1.0 + np.tanh((nx * xs + ny * ys - c) / width))
    return h


# ---------------------------------------------------------------------------
# lidar ray casting
#
# cylinders: (C, 7) rows [cx, cy, radius, z_lo, z_hi, intensity, p_penetrate]
#   p_penetrate <= 0 means opaque (hit at entry); p in (0, 1) is the
#   per-meter transmission probability of pliable matter.
# u: one uniform draw per ray driving the attenuation sampling.
# Returns (pts (R,4) [x y z intensity], kind (R,) int8):
#   -1 no return, 0 ground, 1 opaque hit, 2 pliable hit.

_BISECT_ITERS = 26


def _cyl_intervals(origin, dirs, cyls, max_range):
    """Per (ray, cylinder) parametric entry/exit, inf/-inf when missed."""
    R = dirs.shape[0]
    C = cyls.shape[0]
    ox, oy, oz = origin
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    ta = np.full((R, C), np.inf)
    tb = np.full((R, C), -np.inf)
    for c in range(C):
        cx, cy, rad, zlo, zhi = cyls[c, 0], cyls[c, 1], cyls[c, 2], cyls[c, 3], cyls[c, 4]
        fx = ox - cx
        fy = oy - cy
        qa = dx * dx + dy * dy
        qb = 2.0 * (fx * dx + fy * dy)
        qc = fx * fx + fy * fy - rad * rad
        vertical = qa < 1e-12
        disc = qb * qb - 4.0 * qa * qc
        ok = (~vertical & (disc > 0.0)) | (vertical & (qc <= 0.0))
        sq = np.sqrt(np.where(disc > 0.0, disc, 0.0))
        den = np.where(vertical, 1.0, 2.0 * qa)
        t0 = np.where(vertical, 0.0, (-qb - sq) / den)
        t1 = np.where(vertical, max_range, (-qb + sq) / den)
        # clip to the cylinder's z extent
        horiz = np.abs(dz) < 1e-12
        tz0 = np.where(horiz, 0.0, (zlo - oz) / np.where(horiz, 1.0, dz))
        tz1 = np.where(horiz, max_range, (zhi - oz) / np.where(horiz, 1.0, dz))
        lo = np.minimum(tz0, tz1)
        hi = np.maximum(tz0, tz1)
        ok &= ~(horiz & ((oz < zlo) | (oz > zhi)))
        t0 = np.maximum(t0, np.where(horiz, t0, lo))
        t1 = np.minimum(t1, np.where(horiz, t1, hi))
        t0 = np.maximum(t0, 0.0)
        t1 = np.minimum(t1, max_range)
        ok &= t1 > t0
        ta[:, c] = np.where(ok, t0, np.inf)
        tb[:, c] = np.where(ok, t1, -np.inf)
    return ta, tb


def raycast(origin, dirs, u, cyls, slope, bumps, steps, max_range, t_step,
            h_max, ground_intensity):
    """Cast rays from a shared origin against ground and cylinders."""
    R = dirs.shape[0]
    C = cyls.shape[0]
    ox, oy, oz = origin
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]

    pts = np.zeros((R, 4))
    kind = np.full(R, -1, dtype=np.int8)

    # opaque hits and pliable crossing intervals
    t_solid = np.full(R, np.inf)
    solid_int = np.zeros(R)
    if C > 0:
        ta, tb = _cyl_intervals(origin, dirs, cyls, max_range)
        opaque = cyls[:, 6] <= 0.0
        for c in range(C):
            if not opaque[c]:
                continue
            hit = ta[:, c] < t_solid
            t_solid = np.where(hit, ta[:, c], t_solid)
            solid_int = np.where(hit, cyls[c, 5], solid_int)
        pli = np.where(opaque[None, :], np.inf, ta)
        plib = np.where(opaque[None, :], -np.inf, tb)
    else:
        pli = np.full((R, 1), np.inf)
        plib = np.full((R, 1), -np.inf)

    t_stop = np.minimum(t_solid, max_range)

    # pliable attenuation: transmission p^d, one uniform per ray
    t_veg = np.full(R, np.inf)
    veg_int = np.zeros(R)
    if C > 0:
        order = np.argsort(pli, axis=1, kind="stable")
        rows = np.arange(R)
        lnu = np.where(u > 0.0, np.log(np.where(u > 0.0, u, 1.0)), -np.inf)
        lnp_all = np.where(cyls[:, 6] > 0.0, np.log(np.where(cyls[:, 6] > 0.0, cyls[:, 6], 1.0)), 0.0)
        acc = np.zeros(R)
        done = np.zeros(R, dtype=bool)
        for j in range(C):
            idx = order[:, j]
            a = np.maximum(pli[rows, idx], 0.0)
            b = np.minimum(plib[rows, idx], t_stop)
            lnp = lnp_all[idx]
            seg_ok = (~done) & np.isfinite(a) & (b > a)
            seg = np.where(seg_ok, (b - a) * lnp, 0.0)
            crossed = seg_ok & (acc + seg <= lnu)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_hit = a + (lnu - acc) / np.where(lnp < 0.0, lnp, -1.0)
            t_veg = np.where(crossed, t_hit, t_veg)
            veg_int = np.where(crossed, cyls[idx, 5], veg_int)
            done |= crossed
            acc = np.where(seg_ok & ~crossed, acc + seg, acc)

    t_stop2 = np.minimum(t_stop, t_veg)

    # ground march + bisection over [0, t_stop2]
    t_ground = np.full(R, np.inf)
    lo = np.zeros(R)
    hi = np.zeros(R)
    bracket = np.zeros(R, dtype=bool)
    h0 = heightfield(np.array([ox]), np.array([oy]), slope, bumps, steps)[0]
    if oz <= h0:
        bracket[:] = True  # origin under ground: immediate hit
        t_ground[:] = 0.0
    else:
        alive = t_stop2 > 0.0
        prev_t = np.zeros(R)
        max_t = float(np.max(np.where(np.isfinite(t_stop2), t_stop2, max_range)))
        n_steps = int(np.ceil(max_t / t_step)) + 1
        for k in range(1, n_steps + 1):
            if not np.any(alive):
                break
            t = np.minimum(k * t_step, t_stop2)
            stepping = alive & (t > prev_t)
            x = ox + dx * t
            y = oy + dy * t
            z = oz + dz * t
            h = heightfield(x, y, slope, bumps, steps)
            below = stepping & (z <= h)
            lo = np.where(below, prev_t, lo)
            hi = np.where(below, t, hi)
            bracket |= below
            alive &= ~below
            rising_out = alive & (dz >= 0.0) & (z > h_max)
            alive &= ~rising_out
            alive &= t < t_stop2
            prev_t = np.where(stepping, t, prev_t)
        if np.any(bracket):
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                x = ox + dx * mid
                y = oy + dy * mid
                z = oz + dz * mid
                h = heightfield(x, y, slope, bumps, steps)
                under = z <= h
                hi = np.where(bracket & under, mid, hi)
                lo = np.where(bracket & ~under, mid, lo)
            t_ground = np.where(bracket, hi, t_ground)

    # earliest event wins
    ground_wins = bracket & (t_ground <= t_stop2)
    veg_wins = ~ground_wins & np.isfinite(t_veg) & (t_veg <= t_stop)
    solid_wins = ~ground_wins & ~veg_wins & (t_solid < max_range)

    t_hit = np.where(ground_wins, t_ground, np.where(veg_wins, t_veg, t_solid))
    any_hit = ground_wins | veg_wins | solid_wins
    hx = ox + dx * t_hit
    hy = oy + dy * t_hit
    hz = oz + dz * t_hit
    hz = np.where(ground_wins, heightfield(hx, hy, slope, bumps, steps), hz)
    inten = np.where(ground_wins, ground_intensity,
                     np.where(veg_wins, veg_int, solid_int))

    pts[:, 0] = np.where(any_hit, hx, 0.0)
    pts[:, 1] = np.where(any_hit, hy, 0.0)
    pts[:, 2] = np.where(any_hit, hz, 0.0)
    pts[:, 3] = np.where(any_hit, inten, 0.0)
    kind = np.where(ground_wins, 0, np.where(veg_wins, 2, np.where(solid_wins, 1, -1))).astype(np.int8)
    return pts, kind


# ---------------------------------------------------------------------------
# trajectory scoring (extended-DWA objective over a velocity sample grid)


def _bilinear(vals, ok, x, y, x0, y0, res, n):
    """Bilinear sample with nearest-valid fallback. Vectorized over x, y.

    Returns (value, sampled) arrays; sampled False means no valid cell
    among the four surrounding corners (or point outside the extent).
    """
    fx = (x - x0) / res - 0.5
    fy = (y - y0) / res - 0.5
    c0 = np.floor(fx).astype(np.int64)
    r0 = np.floor(fy).astype(np.int64)
    wx = fx - c0
    wy = fy - r0
    out_val = np.zeros_like(x)
    out_ok = np.zeros(x.shape, dtype=bool)

    inside = (x >= x0) & (x < x0 + n * res) & (y >= y0) & (y < y0 + n * res)

    corners = ((r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1))
    cin = []
    cok = []
    cval = []
    for (r, c) in corners:
        good = (r >= 0) & (r < n) & (c >= 0) & (c < n)
        rc = np.clip(r, 0, n - 1)
        cc = np.clip(c, 0, n - 1)
        cin.append(good)
        cok.append(good & ok[rc, cc])
        cval.append(np.where(good, vals[rc, cc], 0.0))
    all4 = cok[0] & cok[1] & cok[2] & cok[3]
    w00 = (1 - wx) * (1 - wy)
    w10 = wx * (1 - wy)
    w01 = (1 - wx) * wy
    w11 = wx * wy
    bil = cval[0] * w00 + cval[1] * w10 + cval[2] * w01 + cval[3] * w11

    # nearest valid corner fallback
    best_d = np.full(x.shape, np.inf)
    best_v = np.zeros_like(x)
    have = np.zeros(x.shape, dtype=bool)
    for i, (r, c) in enumerate(corners):
        ccx = x0 + (np.clip(c, 0, n - 1) + 0.5) * res
        ccy = y0 + (np.clip(r, 0, n - 1) + 0.5) * res
        d = (x - ccx) ** 2 + (y - ccy) ** 2
        better = cok[i] & (d < best_d)
        best_d = np.where(better, d, best_d)
        best_v = np.where(better, cval[i], best_v)
        have |= cok[i]

    out_val = np.where(inside & all4, bil, np.where(inside & have, best_v, 0.0))
    out_ok = inside & (all4 | have)
    return out_val, out_ok


def score_samples(vs, ws, px, py, pyaw, gx, gy, v_max, nsteps, dt,
                  footprint, clearance_cap,
                  occ, edt, res, x0, y0, n,
                  surf_vals, surf_ok, surf_active,
                  elev_vals, elev_ok, elev_active,
                  veg_vals, veg_ok, veg_active,
                  alpha, beta, gamma, delta, theta, near_goal):
    """Score every (v, w) sample with the weighted traversability objective.

    Trajectories are unicycle arcs of nsteps Euler steps; cost maps are
    averaged along the arc; a pose whose cell is occupied, or closer to
    an occupied cell than the footprint radius, rejects the sample with
    -inf. Inactive maps contribute their neutral value (surface 0,
    elevation 1, vegetation 1).
    """
    S = vs.shape[0]
    x = np.full(S, px)
    y = np.full(S, py)
    yaw = np.full(S, pyaw)
    min_clear = np.full(S, np.inf)
    rejected = np.zeros(S, dtype=bool)
    s_sum = np.zeros(S)
    s_cnt = np.zeros(S, dtype=np.int64)
    e_sum = np.zeros(S)
    e_cnt = np.zeros(S, dtype=np.int64)
    g_sum = np.zeros(S)
    g_cnt = np.zeros(S, dtype=np.int64)

    for _ in range(nsteps):
        x = x + vs * np.cos(yaw) * dt
        y = y + vs * np.sin(yaw) * dt
        yaw = yaw + ws * dt
        col = np.floor((x - x0) / res).astype(np.int64)
        row = np.floor((y - y0) / res).astype(np.int64)
        inside = (col >= 0) & (col < n) & (row >= 0) & (row < n)
        rc = np.clip(row, 0, n - 1)
        cc = np.clip(col, 0, n - 1)
        occ_here = inside & (occ[rc, cc] != 0)
        d_here = np.where(inside, edt[rc, cc], clearance_cap)
        rejected |= (~rejected) & (occ_here | (inside & (d_here < footprint)))
        min_clear = np.where(~rejected, np.minimum(min_clear, d_here), min_clear)
        if surf_active:
            val, got = _bilinear(surf_vals, surf_ok, x, y, x0, y0, res, n)
            s_sum = np.where(~rejected & got, s_sum + val, s_sum)
            s_cnt = np.where(~rejected & got, s_cnt + 1, s_cnt)
        if elev_active:
            val, got = _bilinear(elev_vals, elev_ok, x, y, x0, y0, res, n)
            e_sum = np.where(~rejected & got, e_sum + val, e_sum)
            e_cnt = np.where(~rejected & got, e_cnt + 1, e_cnt)
        if veg_active:
            val, got = _bilinear(veg_vals, veg_ok, x, y, x0, y0, res, n)
            g_sum = np.where(~rejected & got, g_sum + val, g_sum)
            g_cnt = np.where(~rejected & got, g_cnt + 1, g_cnt)

    if near_goal:
        d_end = np.hypot(gx - x, gy - y)
        head = 1.0 - np.minimum(d_end, 1.0)
    else:
        err = np.arctan2(gy - y, gx - x) - yaw
        err = np.arctan2(np.sin(err), np.cos(err))
        head = 1.0 - np.abs(err) / np.pi
    obs = np.minimum(min_clear / clearance_cap, 1.0)
    vel = vs / v_max
    surface = np.where(surf_active & (s_cnt > 0), (s_sum / np.maximum(s_cnt, 1)) / 100.0, 0.0)
    elevation = np.where(elev_active & (e_cnt > 0), 1.0 - (e_sum / np.maximum(e_cnt, 1)) / 100.0, 1.0)
    vegterm = np.where(veg_active & (g_cnt > 0), 1.0 - (g_sum / np.maximum(g_cnt, 1)) / 100.0, 1.0)

    scores = (alpha * head * (1.0 - surface) + beta * obs + gamma * vel
              + delta * elevation + theta * vegterm)
    return np.where(rejected, -np.inf, scores)
