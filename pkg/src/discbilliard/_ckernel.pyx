# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collision kernel; mirrors ``_pykernel`` operation for operation."""
import numpy as np

from libc.math cimport sqrt, atan2, log, fabs, INFINITY, NAN

BACKEND = "cython"

# layout constants (checked against _layout by the test suite)
cdef enum:
    KIND_WALL = 0
    C_KIND = 0
    C_SX = 1
    C_SY = 2
    C_EX = 3
    C_EY = 4
    C_LEN = 5
    C_P0 = 6
    NCOL = 13
    E_T = 0
    E_TAU = 1
    E_X = 2
    E_Y = 3
    E_COMP = 4
    E_KAPPA = 5
    E_PHI = 6
    E_GRAZE = 7
    NEV = 8
    S_NEVENTS = 0
    S_TERM = 1
    S_TIME = 2
    S_LOGEXP = 3
    S_B = 4
    S_ARCHITS = 5
    S_FIRSTARC = 6
    S_NGRAZE = 7
    S_SSSUM = 8
    S_SSMIN = 9
    S_SSGROUPS = 10
    S_X = 11
    S_Y = 12
    S_DX = 13
    S_DY = 14
    S_COMP = 15
    S_PHI = 16
    NSUM = 17
    T_BOUNCES = 0
    T_TIME = 1
    T_VERTEX = 2
    T_GRAZING = 3
    T_ESCAPE = 4

LAYOUT = {
    "KIND_WALL": KIND_WALL, "C_KIND": C_KIND, "C_SX": C_SX, "C_SY": C_SY, "C_EX": C_EX,
    "C_EY": C_EY, "C_LEN": C_LEN, "C_P0": C_P0, "NCOL": NCOL, "E_T": E_T, "E_TAU": E_TAU,
    "E_X": E_X, "E_Y": E_Y, "E_COMP": E_COMP, "E_KAPPA": E_KAPPA, "E_PHI": E_PHI,
    "E_GRAZE": E_GRAZE, "NEV": NEV, "S_NEVENTS": S_NEVENTS, "S_TERM": S_TERM, "S_TIME": S_TIME,
    "S_LOGEXP": S_LOGEXP, "S_B": S_B, "S_ARCHITS": S_ARCHITS, "S_FIRSTARC": S_FIRSTARC,
    "S_NGRAZE": S_NGRAZE, "S_SSSUM": S_SSSUM, "S_SSMIN": S_SSMIN, "S_SSGROUPS": S_SSGROUPS,
    "S_X": S_X, "S_Y": S_Y, "S_DX": S_DX, "S_DY": S_DY, "S_COMP": S_COMP, "S_PHI": S_PHI,
    "NSUM": NSUM, "T_BOUNCES": T_BOUNCES, "T_TIME": T_TIME, "T_VERTEX": T_VERTEX,
    "T_GRAZING": T_GRAZING, "T_ESCAPE": T_ESCAPE,
}


cdef void _trace(const double[:, ::1] tab, double x, double y, double dx, double dy,
                 long comp, long max_bounces, double max_time, double eps_joint,
                 double eps_time, double eps_graze, long max_grazing,
                 double[:, ::1] events, bint record, double[::1] out) noexcept nogil:
    cdef Py_ssize_t m = tab.shape[0]
    cdef Py_ssize_t j
    cdef long best, n = 0, arc_hits = 0, first_arc = -1, ngraze = 0, ss_groups = 0
    cdef int term = T_BOUNCES
    cdef bint graze, vertex
    cdef double t = 0.0, bcurv = 0.0, logexp = 0.0, ss_sum = 0.0, ss_min = INFINITY
    cdef double ss_gt = 0.0, phi = NAN, joint2 = eps_joint * eps_joint
    cdef double best_t, nx, ny, dn, tt, s, cx, cy, rad, fx, fy, b, c, disc, q
    cdef double wx, wy, tol, hx, hy, off, kappa, w, norm, cphi, sphi, tau
    cdef double ddx, ddy, fac, inc

    while n < max_bounces:
        best = -1
        best_t = INFINITY
        for j in range(m):
            if j == comp:
                continue
            if tab[j, C_KIND] == KIND_WALL:
                nx = tab[j, C_P0]
                ny = tab[j, C_P0 + 1]
                dn = dx * nx + dy * ny
                if dn >= 0.0:
                    continue
                tt = ((tab[j, C_SX] - x) * nx + (tab[j, C_SY] - y) * ny) / dn
                if tt <= eps_time or tt >= best_t:
                    continue
                s = (x + tt * dx - tab[j, C_SX]) * tab[j, C_P0 + 2] + (y + tt * dy - tab[j, C_SY]) * tab[j, C_P0 + 3]
                if s < -eps_joint or s > tab[j, C_LEN] + eps_joint:
                    continue
                best_t = tt
                best = j
            else:
                cx = tab[j, C_P0]
                cy = tab[j, C_P0 + 1]
                rad = tab[j, C_P0 + 2]
                fx = x - cx
                fy = y - cy
                b = fx * dx + fy * dy
                if b >= 0.0:
                    continue
                c = fx * fx + fy * fy - rad * rad
                disc = b * b - c
                if disc < 0.0:
                    continue
                q = sqrt(disc) - b
                tt = c / q
                if tt <= eps_time or tt >= best_t:
                    continue
                wx = (x + tt * dx - cx) / rad
                wy = (y + tt * dy - cy) / rad
                tol = eps_joint / rad
                if tab[j, C_P0 + 5] * wy - tab[j, C_P0 + 6] * wx < -tol:
                    continue
                if wx * tab[j, C_P0 + 4] - wy * tab[j, C_P0 + 3] < -tol:
                    continue
                best_t = tt
                best = j
        if best < 0:
            term = T_ESCAPE
            break
        if t + best_t > max_time:
            term = T_TIME
            break

        hx = x + best_t * dx
        hy = y + best_t * dy
        if tab[best, C_KIND] == KIND_WALL:
            nx = tab[best, C_P0]
            ny = tab[best, C_P0 + 1]
            off = (hx - tab[best, C_SX]) * nx + (hy - tab[best, C_SY]) * ny
            hx = hx - off * nx
            hy = hy - off * ny
            kappa = 0.0
        else:
            cx = tab[best, C_P0]
            cy = tab[best, C_P0 + 1]
            rad = tab[best, C_P0 + 2]
            wx = hx - cx
            wy = hy - cy
            w = sqrt(wx * wx + wy * wy)
            nx = wx / w
            ny = wy / w
            hx = cx + rad * nx
            hy = cy + rad * ny
            kappa = 1.0 / rad

        dn = dx * nx + dy * ny
        dx = dx - 2.0 * dn * nx
        dy = dy - 2.0 * dn * ny
        norm = sqrt(dx * dx + dy * dy)
        dx = dx / norm
        dy = dy / norm
        cphi = dx * nx + dy * ny
        sphi = nx * dy - ny * dx
        phi = atan2(sphi, cphi)
        graze = fabs(cphi) < eps_graze
        tau = best_t
        t = t + tau

        ddx = hx - tab[best, C_SX]
        ddy = hy - tab[best, C_SY]
        vertex = ddx * ddx + ddy * ddy < joint2
        ddx = hx - tab[best, C_EX]
        ddy = hy - tab[best, C_EY]
        vertex = vertex or ddx * ddx + ddy * ddy < joint2

        if bcurv > 0.0:
            fac = 1.0 + tau * bcurv
            logexp = logexp + log(fac)
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

        if record:
            events[n, E_T] = t
            events[n, E_TAU] = tau
            events[n, E_X] = hx
            events[n, E_Y] = hy
            events[n, E_COMP] = best
            events[n, E_KAPPA] = kappa
            events[n, E_PHI] = phi
            events[n, E_GRAZE] = 1.0 if graze else 0.0
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


def run_trajectory(tab, start, long max_bounces, double max_time, double eps_joint,
                   double eps_time, double eps_graze, long max_grazing, bint record=True):
    """Trace one trajectory; returns ``(summary, events)``."""
    cdef const double[:, ::1] tv = np.ascontiguousarray(tab, dtype=np.float64)
    out = np.zeros(NSUM)
    events = np.zeros((max_bounces if record else 1, NEV))
    cdef double[::1] ov = out
    cdef double[:, ::1] ev = events
    x, y, dx, dy, comp = start
    cdef double cx = x, cy = y, cdx = dx, cdy = dy
    cdef long ccomp = int(comp)
    with nogil:
        _trace(tv, cx, cy, cdx, cdy, ccomp, max_bounces, max_time, eps_joint, eps_time,
               eps_graze, max_grazing, ev, record, ov)
    if not record:
        return out, None
    return out, events[: int(out[S_NEVENTS])]


def run_batch(tab, starts, long max_bounces, double max_time, double eps_joint,
              double eps_time, double eps_graze, long max_grazing, double[:, ::1] out):
    """Trace every row of ``starts`` and write summaries into ``out``; releases the GIL."""
    cdef const double[:, ::1] tv = np.ascontiguousarray(tab, dtype=np.float64)
    cdef const double[:, ::1] sv = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[:, ::1] dummy = np.zeros((1, NEV))
    cdef Py_ssize_t i, k = sv.shape[0]
    with nogil:
        for i in range(k):
            _trace(tv, sv[i, 0], sv[i, 1], sv[i, 2], sv[i, 3], <long>sv[i, 4], max_bounces,
                   max_time, eps_joint, eps_time, eps_graze, max_grazing, dummy, False, out[i])
