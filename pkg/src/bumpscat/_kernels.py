"""Compiled trajectory kernels for the section map.

Everything here is numba-jitted and operates on plain floats/arrays; the
public classical API wraps these with the dataclass types. The integrator
is an adaptive Dormand-Prince 5(4) pair. Circle crossings are located by
bracketing a sign change of g_k = |pos - c_k| - R0 over an accepted step
and polishing the crossing time with single partial steps (Illinois
secant), so the refined point carries full integration accuracy.

Backward iteration of the section map uses the same code path with
direction = -1: the state keeps the forward momentum, the right-hand side
is negated, and the outgoing test (pos - c) . p > 0 picks out exactly the
previous outgoing intersection.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

# map-application outcomes
CROSS = 0
ESCAPE = 1
INADMISSIBLE = 2
UNDECIDED = 3
STEP_UNDERFLOW = 4
DRIFT_EXCEEDED = 5

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit(cache=True, fastmath=True, inline="always")
def _force(x, y, cx, cy, inv_s2):
    """Force -grad V and potential V of the bump sum at (x, y)."""
    fx = 0.0
    fy = 0.0
    v = 0.0
    for k in range(cx.shape[0]):
        dx = x - cx[k]
        dy = y - cy[k]
        g = math.exp(-0.5 * (dx * dx + dy * dy) * inv_s2)
        v += g
        fx += dx * inv_s2 * g
        fy += dy * inv_s2 * g
    return fx, fy, v


@njit(cache=True, fastmath=True, inline="always")
def _pot(x, y, cx, cy, inv_s2):
    v = 0.0
    for k in range(cx.shape[0]):
        dx = x - cx[k]
        dy = y - cy[k]
        v += math.exp(-0.5 * (dx * dx + dy * dy) * inv_s2)
    return v


@njit(cache=True, fastmath=True, inline="always")
def _dp_step(x, y, px, py, k1x, k1y, k1px, k1py, h, sgn, cx, cy, inv_s2):
    """One Dormand-Prince step of size h in the direction-signed time.

    Returns the end state, the FSAL derivative at the end point and the
    embedded error estimate per component.
    """
    x2 = x + h * _A21 * k1x
    y2 = y + h * _A21 * k1y
    px2 = px + h * _A21 * k1px
    py2 = py + h * _A21 * k1py
    fx, fy, _ = _force(x2, y2, cx, cy, inv_s2)
    k2x, k2y, k2px, k2py = sgn * px2, sgn * py2, sgn * fx, sgn * fy

    x2 = x + h * (_A31 * k1x + _A32 * k2x)
    y2 = y + h * (_A31 * k1y + _A32 * k2y)
    px2 = px + h * (_A31 * k1px + _A32 * k2px)
    py2 = py + h * (_A31 * k1py + _A32 * k2py)
    fx, fy, _ = _force(x2, y2, cx, cy, inv_s2)
    k3x, k3y, k3px, k3py = sgn * px2, sgn * py2, sgn * fx, sgn * fy

    x2 = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
    y2 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
    px2 = px + h * (_A41 * k1px + _A42 * k2px + _A43 * k3px)
    py2 = py + h * (_A41 * k1py + _A42 * k2py + _A43 * k3py)
    fx, fy, _ = _force(x2, y2, cx, cy, inv_s2)
    k4x, k4y, k4px, k4py = sgn * px2, sgn * py2, sgn * fx, sgn * fy

    x2 = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
    y2 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
    px2 = px + h * (_A51 * k1px + _A52 * k2px + _A53 * k3px + _A54 * k4px)
    py2 = py + h * (_A51 * k1py + _A52 * k2py + _A53 * k3py + _A54 * k4py)
    fx, fy, _ = _force(x2, y2, cx, cy, inv_s2)
    k5x, k5y, k5px, k5py = sgn * px2, sgn * py2, sgn * fx, sgn * fy

    x2 = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
    y2 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
    px2 = px + h * (_A61 * k1px + _A62 * k2px + _A63 * k3px + _A64 * k4px + _A65 * k5px)
    py2 = py + h * (_A61 * k1py + _A62 * k2py + _A63 * k3py + _A64 * k4py + _A65 * k5py)
    fx, fy, _ = _force(x2, y2, cx, cy, inv_s2)
    k6x, k6y, k6px, k6py = sgn * px2, sgn * py2, sgn * fx, sgn * fy

    xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    pxn = px + h * (_B1 * k1px + _B3 * k3px + _B4 * k4px + _B5 * k5px + _B6 * k6px)
    pyn = py + h * (_B1 * k1py + _B3 * k3py + _B4 * k4py + _B5 * k5py + _B6 * k6py)
    fx, fy, _ = _force(xn, yn, cx, cy, inv_s2)
    k7x, k7y, k7px, k7py = sgn * pxn, sgn * pyn, sgn * fx, sgn * fy

    ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
    ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
    epx = h * (_E1 * k1px + _E3 * k3px + _E4 * k4px + _E5 * k5px + _E6 * k6px + _E7 * k7px)
    epy = h * (_E1 * k1py + _E3 * k3py + _E4 * k4py + _E5 * k5py + _E6 * k6py + _E7 * k7py)

    return xn, yn, pxn, pyn, k7x, k7y, k7px, k7py, ex, ey, epx, epy


@njit(cache=True, fastmath=True, inline="always")
def _err_norm(ex, ey, epx, epy, x, y, px, py, xn, yn, pxn, pyn, rtol, atol):
    sx = atol + rtol * max(abs(x), abs(xn))
    sy = atol + rtol * max(abs(y), abs(yn))
    spx = atol + rtol * max(abs(px), abs(pxn))
    spy = atol + rtol * max(abs(py), abs(pyn))
    return math.sqrt(
        0.25 * ((ex / sx) ** 2 + (ey / sy) ** 2 + (epx / spx) ** 2 + (epy / spy) ** 2)
    )


@njit(cache=True, fastmath=True, inline="always")
def _substate(x, y, px, py, k1x, k1y, k1px, k1py, h, s, sgn, cx, cy, inv_s2):
    """State a fraction s in (0, 1] along the current step, by one partial step."""
    out = _dp_step(x, y, px, py, k1x, k1y, k1px, k1py, s * h, sgn, cx, cy, inv_s2)
    return out[0], out[1], out[2], out[3]


@njit(cache=True, fastmath=True)
def _refine_crossing(
    x, y, px, py, k1x, k1y, k1px, k1py, h, sgn, cx, cy, inv_s2, kc, R0, s_lo, g_lo, s_hi, g_hi, tol
):
    """Illinois secant for the root of g_kc along the step; returns (s, state...)."""
    xs, ys, pxs, pys = x, y, px, py
    s = s_hi
    for _ in range(80):
        ds = g_hi - g_lo
        if ds != 0.0:
            s = s_hi - g_hi * (s_hi - s_lo) / ds
        if not (s_lo < s < s_hi):
            s = 0.5 * (s_lo + s_hi)
        xs, ys, pxs, pys = _substate(x, y, px, py, k1x, k1y, k1px, k1py, h, s, sgn, cx, cy, inv_s2)
        g = math.hypot(xs - cx[kc], ys - cy[kc]) - R0
        if abs(g) <= tol:
            return s, xs, ys, pxs, pys, True
        if g * g_lo < 0.0:
            s_hi = s
            g_hi = g
            g_lo *= 0.5
        else:
            s_lo = s
            g_lo = g
            g_hi *= 0.5
        if s_hi - s_lo < 1e-15:
            return s, xs, ys, pxs, pys, abs(g) <= 1e3 * tol
    return s, xs, ys, pxs, pys, False


@njit(cache=True, fastmath=True)
def _next_crossing(
    theta,
    ptheta,
    kq,
    direction,
    R0,
    E,
    cx,
    cy,
    inv_s2,
    rtol,
    atol,
    crossing_tol,
    t_budget,
    esc_r2,
    drift_gate,
):
    """Embed a section point and integrate to the next outgoing intersection.

    Returns (status, theta', ptheta', k', drift) with drift the energy error
    |H - E| at the located crossing (0 for non-crossing outcomes).
    """
    m = cx.shape[0]
    sgn = 1.0 if direction > 0 else -1.0

    theta_k = TWO_PI * kq / m
    phi = theta + theta_k
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    x = cx[kq] + R0 * cphi
    y = cy[kq] + R0 * sphi
    v0 = _pot(x, y, cx, cy, inv_s2)
    pt_over = ptheta / R0
    pr2 = 2.0 * (E - v0) - pt_over * pt_over
    if pr2 <= 0.0:
        return INADMISSIBLE, 0.0, 0.0, -1, 0.0
    pr = math.sqrt(pr2)
    px = pr * cphi - pt_over * sphi
    py = pr * sphi + pt_over * cphi

    gprev = np.empty(m)
    for k in range(m):
        gprev[k] = math.hypot(x - cx[k], y - cy[k]) - R0
    qprev = np.empty(m)
    for k in range(m):
        qprev[k] = (x - cx[k]) * px + (y - cy[k]) * py

    clearance = 1e-3 * R0
    cleared = False

    fx, fy, _ = _force(x, y, cx, cy, inv_s2)
    k1x, k1y, k1px, k1py = sgn * px, sgn * py, sgn * fx, sgn * fy

    vmax = math.sqrt(2.0 * E) if E > 0 else 1.0
    h = 1e-3 * R0 / vmax
    hmin_floor = 1e-14 * max(t_budget, 1.0)
    t = 0.0

    while t < t_budget:
        out = _dp_step(x, y, px, py, k1x, k1y, k1px, k1py, h, sgn, cx, cy, inv_s2)
        xn, yn, pxn, pyn = out[0], out[1], out[2], out[3]
        k7x, k7y, k7px, k7py = out[4], out[5], out[6], out[7]
        err = _err_norm(
            out[8], out[9], out[10], out[11], x, y, px, py, xn, yn, pxn, pyn, rtol, atol
        )
        if err > 1.0:
            h *= max(0.2, 0.9 * err**-0.2)
            if h < hmin_floor:
                return STEP_UNDERFLOW, 0.0, 0.0, -1, 0.0
            continue

        # event scan over the accepted step; keep the earliest outgoing crossing
        best_s = 2.0
        best_k = -1
        bx = by = bpx = bpy = 0.0
        for k in range(m):
            if not cleared and k == kq:
                continue
            gn = math.hypot(xn - cx[k], yn - cy[k]) - R0
            qn = (xn - cx[k]) * pxn + (yn - cy[k]) * pyn
            if gprev[k] * gn < 0.0:
                s, xs, ys, pxs, pys, ok = _refine_crossing(
                    x, y, px, py, k1x, k1y, k1px, k1py, h, sgn, cx, cy, inv_s2,
                    k, R0, 0.0, gprev[k], 1.0, gn, crossing_tol,
                )
                if not ok:
                    return STEP_UNDERFLOW, 0.0, 0.0, -1, 0.0
                if (xs - cx[k]) * pxs + (ys - cy[k]) * pys > 0.0 and s < best_s:
                    best_s, best_k = s, k
                    bx, by, bpx, bpy = xs, ys, pxs, pys
            elif gprev[k] > 0.0 and gn > 0.0 and qprev[k] * sgn < 0.0 and qn * sgn > 0.0:
                # radial turnaround outside the circle: probe for a grazing
                # double crossing hidden inside the step
                if min(gprev[k], gn) < 0.25 * R0:
                    xm, ym, pxm, pym = _substate(
                        x, y, px, py, k1x, k1y, k1px, k1py, h, 0.5, sgn, cx, cy, inv_s2
                    )
                    gm = math.hypot(xm - cx[k], ym - cy[k]) - R0
                    if gm < 0.0:
                        s, xs, ys, pxs, pys, ok = _refine_crossing(
                            x, y, px, py, k1x, k1y, k1px, k1py, h, sgn, cx, cy, inv_s2,
                            k, R0, 0.5, gm, 1.0, gn, crossing_tol,
                        )
                        if not ok:
                            return STEP_UNDERFLOW, 0.0, 0.0, -1, 0.0
                        if (xs - cx[k]) * pxs + (ys - cy[k]) * pys > 0.0 and s < best_s:
                            best_s, best_k = s, k
                            bx, by, bpx, bpy = xs, ys, pxs, pys

        if best_k >= 0:
            hcur = 0.5 * (bpx * bpx + bpy * bpy) + _pot(bx, by, cx, cy, inv_s2)
            drift = abs(hcur - E)
            if drift > drift_gate:
                return DRIFT_EXCEEDED, 0.0, 0.0, -1, drift
            theta2 = math.atan2(by - cy[best_k], bx - cx[best_k]) - TWO_PI * best_k / m
            theta2 = theta2 % TWO_PI
            ptheta2 = (bx - cx[best_k]) * bpy - (by - cy[best_k]) * bpx
            return CROSS, theta2, ptheta2, best_k, drift

        if xn * xn + yn * yn > esc_r2 and sgn * (xn * pxn + yn * pyn) > 0.0:
            return ESCAPE, 0.0, 0.0, -1, 0.0

        if not cleared:
            if abs(math.hypot(xn - cx[kq], yn - cy[kq]) - R0) > clearance:
                cleared = True

        for k in range(m):
            gprev[k] = math.hypot(xn - cx[k], yn - cy[k]) - R0
            qprev[k] = (xn - cx[k]) * pxn + (yn - cy[k]) * pyn
        x, y, px, py = xn, yn, pxn, pyn
        k1x, k1y, k1px, k1py = k7x, k7y, k7px, k7py
        t += h
        h *= min(5.0, max(0.2, 0.9 * err**-0.2)) if err > 0.0 else 5.0

    return UNDECIDED, 0.0, 0.0, -1, 0.0


@njit(cache=True, fastmath=True)
def _fill_itinerary(
    theta,
    ptheta,
    kq,
    half_len,
    direction,
    syms,
    R0,
    E,
    cx,
    cy,
    inv_s2,
    rtol,
    atol,
    crossing_tol,
    t_budget,
    esc_r2,
    drift_gate,
):
    """Iterate the section map in one direction, recording circle symbols.

    Escape appends -1 (the infinity symbol) and stops. Returns
    (symbol count, terminal status, max energy drift over the segments).
    """
    th, pt, k = theta, ptheta, kq
    n = 0
    max_drift = 0.0
    for _ in range(half_len):
        status, th2, pt2, k2, drift = _next_crossing(
            th, pt, k, direction, R0, E, cx, cy, inv_s2,
            rtol, atol, crossing_tol, t_budget, esc_r2, drift_gate,
        )
        if drift > max_drift:
            max_drift = drift
        if status == CROSS:
            syms[n] = k2
            n += 1
            th, pt, k = th2, pt2, k2
        elif status == ESCAPE:
            syms[n] = -1
            n += 1
            return n, ESCAPE, max_drift
        else:
            return n, status, max_drift
    return n, CROSS, max_drift


@njit(cache=True, fastmath=True, parallel=True)
def _classify_mesh(
    thetas,
    pthetas,
    kq,
    kreq,
    R0,
    E,
    cx,
    cy,
    inv_s2,
    rtol,
    atol,
    crossing_tol,
    t_budget,
    esc_r2,
    drift_gate,
):
    """Classify mesh points by whether they bounce >= kreq times each way.

    Returns (survived, undecided, fwd_code, bwd_code); the codes pack the
    first kreq symbols of each direction in base m (-1 when not surviving).
    """
    npts = thetas.shape[0]
    m = cx.shape[0]
    survived = np.zeros(npts, dtype=np.uint8)
    undecided = np.zeros(npts, dtype=np.uint8)
    fwd_code = np.full(npts, -1, dtype=np.int64)
    bwd_code = np.full(npts, -1, dtype=np.int64)

    for i in prange(npts):
        if kreq == 0:
            theta_k = TWO_PI * kq / m
            phi = thetas[i] + theta_k
            x = cx[kq] + R0 * math.cos(phi)
            y = cy[kq] + R0 * math.sin(phi)
            v0 = _pot(x, y, cx, cy, inv_s2)
            if 2.0 * (E - v0) - (pthetas[i] / R0) ** 2 > 0.0:
                survived[i] = 1
                fwd_code[i] = 0
                bwd_code[i] = 0
            continue

        fsyms = np.empty(kreq, dtype=np.int64)
        nf, fstat, _ = _fill_itinerary(
            thetas[i], pthetas[i], kq, kreq, 1, fsyms,
            R0, E, cx, cy, inv_s2, rtol, atol, crossing_tol, t_budget, esc_r2, drift_gate,
        )
        if fstat != CROSS and fstat != ESCAPE:
            undecided[i] = 1
            continue
        if nf < kreq or fsyms[kreq - 1] < 0:
            continue

        bsyms = np.empty(kreq, dtype=np.int64)
        nb, bstat, _ = _fill_itinerary(
            thetas[i], pthetas[i], kq, kreq, -1, bsyms,
            R0, E, cx, cy, inv_s2, rtol, atol, crossing_tol, t_budget, esc_r2, drift_gate,
        )
        if bstat != CROSS and bstat != ESCAPE:
            undecided[i] = 1
            continue
        if nb < kreq or bsyms[kreq - 1] < 0:
            continue

        survived[i] = 1
        fc = 0
        bc = 0
        for j in range(kreq - 1, -1, -1):
            fc = fc * m + fsyms[j]
            bc = bc * m + bsyms[j]
        fwd_code[i] = fc
        bwd_code[i] = bc

    return survived, undecided, fwd_code, bwd_code


@njit(cache=True, fastmath=True)
def _flow(x, y, px, py, t_end, cx, cy, inv_s2, rtol, atol):
    """Integrate Hamilton's equations to exactly t_end (either sign)."""
    if t_end == 0.0:
        return 0, x, y, px, py
    sgn = 1.0 if t_end > 0 else -1.0
    total = abs(t_end)

    fx, fy, _ = _force(x, y, cx, cy, inv_s2)
    k1x, k1y, k1px, k1py = sgn * px, sgn * py, sgn * fx, sgn * fy

    t = 0.0
    h = min(1e-3 * max(total, 1.0), total)
    hmin_floor = 1e-14 * max(total, 1.0)
    while t < total:
        h = min(h, total - t)
        out = _dp_step(x, y, px, py, k1x, k1y, k1px, k1py, h, sgn, cx, cy, inv_s2)
        xn, yn, pxn, pyn = out[0], out[1], out[2], out[3]
        err = _err_norm(
            out[8], out[9], out[10], out[11], x, y, px, py, xn, yn, pxn, pyn, rtol, atol
        )
        if err > 1.0:
            h *= max(0.2, 0.9 * err**-0.2)
            if h < hmin_floor:
                return STEP_UNDERFLOW, x, y, px, py
            continue
        x, y, px, py = xn, yn, pxn, pyn
        k1x, k1y, k1px, k1py = out[4], out[5], out[6], out[7]
        t += h
        h *= min(5.0, max(0.2, 0.9 * err**-0.2)) if err > 0.0 else 5.0
    return 0, x, y, px, py
