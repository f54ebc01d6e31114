"""Pure-Python collision kernel.

Reference implementation of the inner loop; ``_ckernel.pyx`` performs the same
floating-point operations in the same order, so both give identical results.
"""
from __future__ import annotations

import math

import numpy as np

from ._layout import (
    C_EX, C_EY, C_KIND, C_LEN, C_P0, C_SX, C_SY, E_COMP, E_GRAZE, E_KAPPA,
    E_PHI, E_T, E_TAU, E_X, E_Y, KIND_WALL, NEV, NSUM, S_ARCHITS, S_B, S_COMP,
    S_DX, S_DY, S_FIRSTARC, S_LOGEXP, S_NEVENTS, S_NGRAZE, S_PHI, S_SSGROUPS,
    S_SSMIN, S_SSSUM, S_TERM, S_TIME, S_X, S_Y, T_BOUNCES, T_ESCAPE, T_GRAZING,
    T_TIME, T_VERTEX,
)

BACKEND = "python"


def _trace(tab, x, y, dx, dy, comp, max_bounces, max_time, eps_joint, eps_time,
           eps_graze, max_grazing, events, out):
    rows = [tuple(float(v) for v in row) for row in tab]
    m = len(rows)
    t = 0.0
    bcurv = 0.0
    logexp = 0.0
    arc_hits = 0
    first_arc = -1
    ngraze = 0
    ss_sum = 0.0
    ss_min = math.inf
    ss_groups = 0
    ss_gt = 0.0
    phi = math.nan
    n = 0
    term = T_BOUNCES
    joint2 = eps_joint * eps_joint

    while n < max_bounces:
        best = -1
        best_t = math.inf
        for j in range(m):
            if j == comp:
                continue
            row = rows[j]
            if row[C_KIND] == KIND_WALL:
                nx = row[C_P0]
                ny = row[C_P0 + 1]
                dn = dx * nx + dy * ny
                if dn >= 0.0:
                    continue
                tt = ((row[C_SX] - x) * nx + (row[C_SY] - y) * ny) / dn
                if tt <= eps_time or tt >= best_t:
                    continue
                s = (x + tt * dx - row[C_SX]) * row[C_P0 + 2] + (y + tt * dy - row[C_SY]) * row[C_P0 + 3]
                if s < -eps_joint or s > row[C_LEN] + eps_joint:
                    continue
                best_t = tt
                best = j
            else:
                cx = row[C_P0]
                cy = row[C_P0 + 1]
                rad = row[C_P0 + 2]
                fx = x - cx
                fy = y - cy
                b = fx * dx + fy * dy
                if b >= 0.0:
                    continue
                c = fx * fx + fy * fy - rad * rad
                disc = b * b - c
                if disc < 0.0:
                    continue
                q = math.sqrt(disc) - b
                tt = c / q
                if tt <= eps_time or tt >= best_t:
                    continue
                wx = (x + tt * dx - cx) / rad
                wy = (y + tt * dy - cy) / rad
                tol = eps_joint / rad
                # inside the clockwise wedge from the chain start to the chain end
                if row[C_P0 + 5] * wy - row[C_P0 + 6] * wx < -tol:
                    continue
                if wx * row[C_P0 + 4] - wy * row[C_P0 + 3] < -tol:
                    continue
                best_t = tt
                best = j
        if best < 0:
            term = T_ESCAPE
            break
        if t + best_t > max_time:
            term = T_TIME
            break

        row = rows[best]
        hx = x + best_t * dx
        hy = y + best_t * dy
        if row[C_KIND] == KIND_WALL:
            nx = row[C_P0]
            ny = row[C_P0 + 1]
            off = (hx - row[C_SX]) * nx + (hy - row[C_SY]) * ny
            hx = hx - off * nx
            hy = hy - off * ny
            kappa = 0.0
        else:
            cx = row[C_P0]
            cy = row[C_P0 + 1]
            rad = row[C_P0 + 2]
            wx = hx - cx
            wy = hy - cy
            w = math.sqrt(wx * wx + wy * wy)
            nx = wx / w
            ny = wy / w
            hx = cx + rad * nx
            hy = cy + rad * ny
            kappa = 1.0 / rad

        dn = dx * nx + dy * ny
        dx = dx - 2.0 * dn * nx
        dy = dy - 2.0 * dn * ny
        norm = math.sqrt(dx * dx + dy * dy)
        dx = dx / norm
        dy = dy / norm
        cphi = dx * nx + dy * ny
        sphi = nx * dy - ny * dx
        phi = math.atan2(sphi, cphi)
        graze = abs(cphi) < eps_graze
        tau = best_t
        t = t + tau

        ddx = hx - row[C_SX]
        ddy = hy - row[C_SY]
        vertex = ddx * ddx + ddy * ddy < joint2
        ddx = hx - row[C_EX]
        ddy = hy - row[C_EY]
        vertex = vertex or ddx * ddx + ddy * ddy < joint2

        if bcurv > 0.0:
            fac = 1.0 + tau * bcurv
            logexp = logexp + math.log(fac)
            bcurv = bcurv / fac
        ss_gt = ss_gt + tau
        if graze:
            ngraze += 1
        elif kappa > 0.0:
            inc = 2.0 * kappa / cphi
            bcurv = bcurv + inc
            inc = ss_gt + inc
            ss_sum = ss_sum + inc
            if inc < ss_min:
                ss_min = inc
            ss_groups += 1
            ss_gt = 0.0
        if kappa > 0.0:
            arc_hits += 1
            if first_arc < 0:
                first_arc = n + 1

        if events is not None:
            ev = events[n]
            ev[E_T] = t
            ev[E_TAU] = tau
            ev[E_X] = hx
            ev[E_Y] = hy
            ev[E_COMP] = best
            ev[E_KAPPA] = kappa
            ev[E_PHI] = phi
            ev[E_GRAZE] = 1.0 if graze else 0.0
        n += 1
        x = hx
        y = hy
        comp = best
        if vertex:
            term = T_VERTEX
            break
        if ngraze > max_grazing:
            term = T_GRAZING
            break

    out[S_NEVENTS] = n
    out[S_TERM] = term
    out[S_TIME] = t
    out[S_LOGEXP] = logexp
    out[S_B] = bcurv
    out[S_ARCHITS] = arc_hits
    out[S_FIRSTARC] = first_arc
    out[S_NGRAZE] = ngraze
    out[S_SSSUM] = ss_sum
    out[S_SSMIN] = ss_min
    out[S_SSGROUPS] = ss_groups
    out[S_X] = x
    out[S_Y] = y
    out[S_DX] = dx
    out[S_DY] = dy
    out[S_COMP] = comp
    out[S_PHI] = phi


def run_trajectory(tab, start, max_bounces, max_time, eps_joint, eps_time,
                   eps_graze, max_grazing, record=True):
    """Trace one trajectory; returns ``(summary, events)``.

    ``start`` is ``(x, y, dx, dy, component)`` with component ``-1`` for an
    interior point.  ``events`` is ``None`` unless ``record`` is set.
    """
    out = np.zeros(NSUM)
    events = np.zeros((max_bounces, NEV)) if record else None
    x, y, dx, dy, comp = start
    _trace(tab, float(x), float(y), float(dx), float(dy), int(comp), int(max_bounces),
           float(max_time), eps_joint, eps_time, eps_graze, int(max_grazing), events, out)
    if events is not None:
        events = events[: int(out[S_NEVENTS])]
    return out, events


def run_batch(tab, starts, max_bounces, max_time, eps_joint, eps_time, eps_graze,
              max_grazing, out):
    """Trace every row of ``starts`` and write summaries into ``out``."""
    for i in range(len(starts)):
        x, y, dx, dy, comp = starts[i]
        _trace(tab, float(x), float(y), float(dx), float(dy), int(comp), int(max_bounces),
               float(max_time), eps_joint, eps_time, eps_graze, int(max_grazing), None, out[i])
