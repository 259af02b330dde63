"""Compiled fixed-step closed-loop integration kernels.

The simulation advances the coupled state (leader pose, follower pose,
desired heading) with classical RK4 at step dt, re-evaluating the
controller inside every stage so the closed loop is integrated as a
smooth ODE.  Time-dependent inputs (leader velocity profile, formation
functions) are pre-sampled on quarter- and half-step grids so the
kernels never call back into Python.

The math here deliberately reuses the same @njit helpers that back the
public operations in `kinematics`, `formation`, `controllers` and
`fuzzy`; the kernels only do the bookkeeping around them.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .controllers import _command
from .formation import _desired_position, _error_rates, _to_local
from .fuzzy import _infer_kernel
from .kinematics import _rate, _wrap

# Column layout of the per-follower output array.
COL_X = 0
COL_Y = 1
COL_THETA = 2
COL_EX_HAT = 3
COL_EY_HAT = 4
COL_ETH_HAT = 5
COL_V = 6
COL_OMEGA = 7
COL_OMEGA_D = 8
COL_THETA_D = 9
COL_K1 = 10
COL_K2 = 11
COL_K3 = 12
COL_V1 = 13
COL_V2 = 14
COL_L_ACTUAL = 15
N_COLS = 16


@njit(cache=True)
def integrate_leader(x0, y0, th0, c, h, v_q, w_q, out):
    """RK4 the open-loop leader at step h = dt/2 onto the half-step grid.

    v_q/w_q are sampled at h/2 spacing, so one RK4 step from half-grid
    index j reads quarter-grid indices 2j, 2j+1, 2j+2.
    """
    n = out.shape[0] - 1
    x = x0
    y = y0
    th = th0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = th
    for j in range(n):
        q = 2 * j
        ax, ay, at = _rate(th, v_q[q], w_q[q], c)
        bx, by, bt = _rate(th + 0.5 * h * at, v_q[q + 1], w_q[q + 1], c)
        cx, cy, ct = _rate(th + 0.5 * h * bt, v_q[q + 1], w_q[q + 1], c)
        dx, dy, dt_ = _rate(th + h * ct, v_q[q + 2], w_q[q + 2], c)
        s = h / 6.0
        x += s * (ax + 2.0 * bx + 2.0 * cx + dx)
        y += s * (ay + 2.0 * by + 2.0 * cy + dy)
        th = _wrap(th + s * (at + 2.0 * bt + 2.0 * ct + dt_))
        out[j + 1, 0] = x
        out[j + 1, 1] = y
        out[j + 1, 2] = th
    return out


@njit(cache=True)
def _stage(
    x, y, th, thd,
    xl, yl, thl, vl, wl,
    ld, ldr, ad, adr,
    k1, k2, k3, c, v_lim, w_lim,
):
    """Closed-loop derivative of (x, y, theta, theta_d) at one RK4 stage."""
    xd, yd = _desired_position(xl, yl, thl, ld, ad, c)
    ex_hat, ey_hat = _to_local(xd - x, yd - y, th)
    eth_hat = _wrap(thd - th)
    gamma = ad + thl - th
    lam = thl - th
    v, w, wd = _command(
        ex_hat, ey_hat, eth_hat, gamma, lam, vl, wl, ld, ldr, adr, k1, k2, k3, c
    )
    if v_lim > 0.0:
        v = min(max(v, -v_lim), v_lim)
    if w_lim > 0.0:
        w = min(max(w, -w_lim), w_lim)
    x_dot = v * math.cos(th) - c * w * math.sin(th)
    y_dot = v * math.sin(th) + c * w * math.cos(th)
    return x_dot, y_dot, w, wd, v, ex_hat, ey_hat, eth_hat


@njit(cache=True)
def _tuned_gains(
    x, y, th, thd,
    xl, yl, thl, vl, wl,
    ld, ldr, ad, adr,
    k1n, k2n, k3n, c,
    e_shapes, e_lo, e_hi,
    r_shapes, r_lo, r_hi,
    rules, out_grid, out_matrix,
    kmin, kmax, err_scale, rate_scale, pair_ex,
):
    """Fuzzy-tuned gains at the current state.

    The error-rate inputs are the analytic error rates the nominal
    (untuned) gains would produce, which keeps the tuner a pure function
    of the state.
    """
    xd, yd = _desired_position(xl, yl, thl, ld, ad, c)
    ex_hat, ey_hat = _to_local(xd - x, yd - y, th)
    eth_hat = _wrap(thd - th)
    gamma = ad + thl - th
    lam = thl - th
    vn, wn, wdn = _command(
        ex_hat, ey_hat, eth_hat, gamma, lam, vl, wl, ld, ldr, adr, k1n, k2n, k3n, c
    )
    rx, ry, rt = _error_rates(
        ex_hat, ey_hat, eth_hat, gamma, lam, vl, wl, vn, wn, ld, ldr, adr, wdn, c
    )
    rate_1 = rx if pair_ex else rt
    k1 = _infer_kernel(
        ex_hat / err_scale, rate_1 / rate_scale,
        e_shapes, e_lo, e_hi, r_shapes, r_lo, r_hi,
        rules, out_grid, out_matrix, kmin, kmax,
    )
    k2 = _infer_kernel(
        (eth_hat - ey_hat) / err_scale, (rt - ry) / rate_scale,
        e_shapes, e_lo, e_hi, r_shapes, r_lo, r_hi,
        rules, out_grid, out_matrix, kmin, kmax,
    )
    return k1, k2, k2


@njit(cache=True)
def run_follower(
    dt, c,
    x0, y0, th0,
    leader_half,          # (2N+1, 3) leader pose on the half-step grid
    v_q, w_q,             # (4N+1,) leader commands on the quarter-step grid
    l_h, lr_h, a_h, ar_h,  # (2N+1,) formation functions on the half-step grid
    k1n, k2n, k3n,
    v_lim, w_lim,
    is_fabc,
    e_shapes, e_lo, e_hi,
    r_shapes, r_lo, r_hi,
    rules, out_grid, out_matrix,
    kmin, kmax, err_scale, rate_scale, pair_ex,
    out,                  # (N+1, N_COLS)
):
    """Integrate one follower; returns -1 or the step index of a non-finite state.

    Fuzzy gains are refreshed once per control step and held through the
    four RK4 stages of that step.
    """
    n = out.shape[0] - 1
    x = x0
    y = y0
    th = th0
    thd = th0
    for k in range(n + 1):
        h0 = 2 * k
        xl = leader_half[h0, 0]
        yl = leader_half[h0, 1]
        thl = leader_half[h0, 2]
        vl = v_q[2 * h0]
        wl = w_q[2 * h0]
        k1 = k1n
        k2 = k2n
        k3 = k3n
        if is_fabc:
            k1, k2, k3 = _tuned_gains(
                x, y, th, thd,
                xl, yl, thl, vl, wl,
                l_h[h0], lr_h[h0], a_h[h0], ar_h[h0],
                k1n, k2n, k3n, c,
                e_shapes, e_lo, e_hi, r_shapes, r_lo, r_hi,
                rules, out_grid, out_matrix,
                kmin, kmax, err_scale, rate_scale, pair_ex,
            )
        ax, ay, aw, awd, v, ex_hat, ey_hat, eth_hat = _stage(
            x, y, th, thd, xl, yl, thl, vl, wl,
            l_h[h0], lr_h[h0], a_h[h0], ar_h[h0],
            k1, k2, k3, c, v_lim, w_lim,
        )
        k4 = c * k3 / (2.0 * k2)
        v1 = 0.5 * (ex_hat * ex_hat + ey_hat * ey_hat)
        dxa = x - (xl - c * math.cos(thl))
        dya = y - (yl - c * math.sin(thl))
        out[k, COL_X] = x
        out[k, COL_Y] = y
        out[k, COL_THETA] = th
        out[k, COL_EX_HAT] = ex_hat
        out[k, COL_EY_HAT] = ey_hat
        out[k, COL_ETH_HAT] = eth_hat
        out[k, COL_V] = v
        out[k, COL_OMEGA] = aw
        out[k, COL_OMEGA_D] = awd
        out[k, COL_THETA_D] = thd
        out[k, COL_K1] = k1
        out[k, COL_K2] = k2
        out[k, COL_K3] = k3
        out[k, COL_V1] = v1
        out[k, COL_V2] = v1 + k4 * eth_hat * eth_hat
        out[k, COL_L_ACTUAL] = math.sqrt(dxa * dxa + dya * dya)
        if not (
            math.isfinite(x)
            and math.isfinite(y)
            and math.isfinite(th)
            and math.isfinite(thd)
            and math.isfinite(v)
            and math.isfinite(aw)
        ):
            return k
        if k == n:
            break
        h1 = h0 + 1
        h2 = h0 + 2
        half = 0.5 * dt
        bx, by, bw, bwd, _, _, _, _ = _stage(
            x + half * ax, y + half * ay, th + half * aw, thd + half * awd,
            leader_half[h1, 0], leader_half[h1, 1], leader_half[h1, 2],
            v_q[2 * h1], w_q[2 * h1],
            l_h[h1], lr_h[h1], a_h[h1], ar_h[h1],
            k1, k2, k3, c, v_lim, w_lim,
        )
        cx, cy, cw, cwd, _, _, _, _ = _stage(
            x + half * bx, y + half * by, th + half * bw, thd + half * bwd,
            leader_half[h1, 0], leader_half[h1, 1], leader_half[h1, 2],
            v_q[2 * h1], w_q[2 * h1],
            l_h[h1], lr_h[h1], a_h[h1], ar_h[h1],
            k1, k2, k3, c, v_lim, w_lim,
        )
        dx, dy, dw, dwd, _, _, _, _ = _stage(
            x + dt * cx, y + dt * cy, th + dt * cw, thd + dt * cwd,
            leader_half[h2, 0], leader_half[h2, 1], leader_half[h2, 2],
            v_q[2 * h2], w_q[2 * h2],
            l_h[h2], lr_h[h2], a_h[h2], ar_h[h2],
            k1, k2, k3, c, v_lim, w_lim,
        )
        s = dt / 6.0
        x += s * (ax + 2.0 * bx + 2.0 * cx + dx)
        y += s * (ay + 2.0 * by + 2.0 * cy + dy)
        th = _wrap(th + s * (aw + 2.0 * bw + 2.0 * cw + dw))
        thd = _wrap(thd + s * (awd + 2.0 * bwd + 2.0 * cwd + dwd))
    return -1


def dummy_fuzzy_arrays():
    """Placeholder fuzzy arrays for BC runs (never read, but typed)."""
    shapes = np.zeros((5, 4))
    rules = np.zeros((5, 5), dtype=np.int64)
    grid = np.linspace(0.0, 1.0, 3)
    matrix = np.zeros((5, 3))
    return shapes, rules, grid, matrix
