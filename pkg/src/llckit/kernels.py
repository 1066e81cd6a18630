"""Fixed-step integration kernels for the switched LLC power stage.

The power stage is piecewise linear: within one (switch phase, rectifier
phase) mode the four states

    x = (iLr, vCr, iLm, vOut)

obey a constant-coefficient ODE, integrated here with classic fixed-step
RK4.  Mode boundaries are located by bisection on the event functions:

  * diode turn-off: secondary current n (iLr - iLm) falling through zero,
  * diode turn-on: open-rectifier magnetizing voltage
    Lm/(Lr+Lm) (vsw - vCr) reaching the output clamp +/- n (vOut + Vf),
  * dead-time node swap: iLr changing sign while both switches are off
    (the body diodes re-clamp the node to the other rail).

Gate transitions are segment boundaries handled by the caller; each call
integrates one span of constant gate state.  Everything here is scalar
float64 arithmetic in a fixed order so the numba and plain-Python paths
produce identical bits (see _accel).
"""

from __future__ import annotations

import math

from ._accel import maybe_njit

# rectifier phases
RECT_OFF = 0
RECT_D1 = 1
RECT_D2 = 2
# switch-phase segments, in the order they occur inside one period
SEG_HIGH = 0
SEG_DEAD_TO_LOW = 1
SEG_LOW = 2
SEG_DEAD_TO_HIGH = 3
# load kinds
LOAD_RES = 0
LOAD_CUR = 1
# kernel error codes
ERR_OK = 0
ERR_EVENT_LOC = 1
ERR_CHATTER = 2
ERR_MODE_VIOLATION = 3
ERR_RECORD_FULL = 4
# event codes (written into the event log)
EV_D1_ON = 1
EV_D2_ON = 2
EV_D1_OFF = 3
EV_D2_OFF = 4
EV_CLAMP_HIGH = 5
EV_CLAMP_LOW = 6
EV_GATE_HS_ON = 7
EV_GATE_HS_OFF = 8
EV_GATE_LS_ON = 9
EV_GATE_LS_OFF = 10

# invariant slack: events are located far tighter than this, so a breach
# means a genuinely missed transition
I_TOL = 1e-6  # A
V_TOL = 1e-3  # V
EVENT_GUARD = 16
BISECT_MAX = 200

# record row layout
REC_COLS = 9  # t, iLr, vCr, iLm, vOut, vsw, iload, rect, seg


def _iload(vOut, load_kind, load_val):
    # current sinks cannot pull the output below ground
    if load_kind == LOAD_RES:
        return vOut / load_val
    if vOut > 0.0:
        return load_val
    return 0.0


def _derivs(iLr, vCr, iLm, vOut, vsw, rect, Lr, Cr, Lm, n, Vf, Cout,
            load_kind, load_val):
    il = _iload(vOut, load_kind, load_val)
    if rect == RECT_D1:
        vp = n * (vOut + Vf)
        d_ilr = (vsw - vCr - vp) / Lr
        d_ilm = vp / Lm
        d_vout = (n * (iLr - iLm) - il) / Cout
    elif rect == RECT_D2:
        vp = -n * (vOut + Vf)
        d_ilr = (vsw - vCr - vp) / Lr
        d_ilm = vp / Lm
        d_vout = (n * (iLm - iLr) - il) / Cout
    else:
        d = (vsw - vCr) / (Lr + Lm)
        d_ilr = d
        d_ilm = d
        d_vout = -il / Cout
    return d_ilr, iLr / Cr, d_ilm, d_vout


def _rk4(iLr, vCr, iLm, vOut, h, vsw, rect, Lr, Cr, Lm, n, Vf, Cout,
         load_kind, load_val):
    a1, b1, c1, d1 = _derivs(iLr, vCr, iLm, vOut, vsw, rect,
                             Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
    hh = 0.5 * h
    a2, b2, c2, d2 = _derivs(iLr + hh * a1, vCr + hh * b1, iLm + hh * c1,
                             vOut + hh * d1, vsw, rect,
                             Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
    a3, b3, c3, d3 = _derivs(iLr + hh * a2, vCr + hh * b2, iLm + hh * c2,
                             vOut + hh * d2, vsw, rect,
                             Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
    a4, b4, c4, d4 = _derivs(iLr + h * a3, vCr + h * b3, iLm + h * c3,
                             vOut + h * d3, vsw, rect,
                             Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
    s = h / 6.0
    return (iLr + s * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            vCr + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            iLm + s * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
            vOut + s * (d1 + 2.0 * d2 + 2.0 * d3 + d4))


def _event_values(iLr, vCr, iLm, vOut, vsw, rect, is_dead, Lr, Lm, n, Vf):
    """Event-function triple (rect primary, rect secondary, dead clamp)."""
    e0 = 0.0
    e1 = 0.0
    e2 = 0.0
    if rect == RECT_D1:
        e0 = iLr - iLm
    elif rect == RECT_D2:
        e0 = iLm - iLr
    else:
        vp_open = Lm / (Lr + Lm) * (vsw - vCr)
        nv = n * (vOut + Vf)
        e0 = vp_open - nv
        e1 = -vp_open - nv
    if is_dead:
        e2 = iLr
    return e0, e1, e2


def _fired(g_a, g_b, direction):
    # direction: 0 rising (<=0 to >0), 1 falling (>=0 to <0), 2 either sign flip
    if direction == 0:
        return g_a <= 0.0 and g_b > 0.0
    if direction == 1:
        return g_a >= 0.0 and g_b < 0.0
    return (g_a > 0.0 and g_b < 0.0) or (g_a < 0.0 and g_b > 0.0)


def _bisect_event(iLr, vCr, iLm, vOut, h_full, vsw, rect, slot, direction, g_a,
                  is_dead, Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val, tol_t):
    """Locate the crossing of event ``slot`` inside (0, h_full].

    Returns (ok, h_star): the first h where the event condition has fired,
    narrowed to within tol_t by bisection on single RK4 steps from the base
    state.  ok = 0 flags a localization failure (iteration cap).
    """
    lo = 0.0
    hi = h_full
    g_lo = g_a
    it = 0
    while hi - lo > tol_t:
        if it >= BISECT_MAX:
            return 0, hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # float exhaustion: bracket cannot shrink further
        mi, mc, mm, mo = _rk4(iLr, vCr, iLm, vOut, mid, vsw, rect,
                              Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
        e0, e1, e2 = _event_values(mi, mc, mm, mo, vsw, rect, is_dead,
                                   Lr, Lm, n, Vf)
        g_m = e0
        if slot == 1:
            g_m = e1
        elif slot == 2:
            g_m = e2
        if _fired(g_lo, g_m, direction):
            hi = mid
        else:
            lo = mid
            g_lo = g_m
        it += 1
    return 1, hi


def integrate_segment(iLr, vCr, iLm, vOut, t0, t1, seg_kind, clamp_hi, rect,
                      vin, Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val,
                      dt_max, tol_t, stride, rec, rec_n, ev, ev_n, acc):
    """Advance one constant-gate span [t0, t1] with event handling.

    rec is a (cap, 9) float64 record buffer filled from row ``rec_n``; ev a
    (cap, 2) event log (t, code).  acc[0] accumulates source energy and
    acc[1] load energy (trapezoid per accepted substep).  Returns

        (err, rec_n, ev_n, rect, clamp_hi,
         iLr, vCr, iLm, vOut, max_iLr, max_vCr, max_iLm, max_vOut)

    with err one of the ERR_* codes; on err != 0 the state is whatever was
    reached and the caller is expected to abort.
    """
    is_dead = seg_kind == SEG_DEAD_TO_LOW or seg_kind == SEG_DEAD_TO_HIGH
    if seg_kind == SEG_HIGH:
        vsw = vin
        node_hi = 1
    elif seg_kind == SEG_LOW:
        vsw = 0.0
        node_hi = 0
    else:
        node_hi = clamp_hi
        vsw = vin if clamp_hi == 1 else 0.0

    max_ilr = abs(iLr)
    max_vcr = abs(vCr)
    max_ilm = abs(iLm)
    max_vout = abs(vOut)

    # entry settle: a gate edge (or the caller's clamp choice) may push the
    # open rectifier straight past a clamp threshold
    if rect == RECT_OFF:
        e0, e1, e2 = _event_values(iLr, vCr, iLm, vOut, vsw, rect, is_dead,
                                   Lr, Lm, n, Vf)
        if e0 > 0.0:
            rect = RECT_D1
            if ev_n >= ev.shape[0]:
                return (ERR_RECORD_FULL, rec_n, ev_n, rect, clamp_hi,
                        iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm, max_vout)
            ev[ev_n, 0] = t0
            ev[ev_n, 1] = EV_D1_ON
            ev_n += 1
        elif e1 > 0.0:
            rect = RECT_D2
            if ev_n >= ev.shape[0]:
                return (ERR_RECORD_FULL, rec_n, ev_n, rect, clamp_hi,
                        iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm, max_vout)
            ev[ev_n, 0] = t0
            ev[ev_n, 1] = EV_D2_ON
            ev_n += 1

    # record the segment entry (overwrites a sample left at the same t)
    il0 = _iload(vOut, load_kind, load_val)
    if rec_n > 0 and rec[rec_n - 1, 0] == t0:
        r = rec_n - 1
    else:
        if rec_n >= rec.shape[0]:
            return (ERR_RECORD_FULL, rec_n, ev_n, rect, clamp_hi,
                    iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm, max_vout)
        r = rec_n
        rec_n += 1
    rec[r, 0] = t0
    rec[r, 1] = iLr
    rec[r, 2] = vCr
    rec[r, 3] = iLm
    rec[r, 4] = vOut
    rec[r, 5] = vsw
    rec[r, 6] = il0
    rec[r, 7] = rect
    rec[r, 8] = seg_kind

    span = t1 - t0
    if span <= 0.0:
        return (ERR_OK, rec_n, ev_n, rect, clamp_hi,
                iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm, max_vout)
    n_steps = int(math.ceil(span / dt_max))
    if n_steps < 1:
        n_steps = 1
    dt = span / n_steps

    for k in range(n_steps):
        t_b = t1 if k == n_steps - 1 else t0 + dt * (k + 1)
        t_cur = t0 + dt * k if k > 0 else t0
        guard = 0
        while t_cur < t_b:
            h = t_b - t_cur
            ni, nc, nm, no = _rk4(iLr, vCr, iLm, vOut, h, vsw, rect,
                                  Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
            a0, a1_, a2_ = _event_values(iLr, vCr, iLm, vOut, vsw, rect,
                                         is_dead, Lr, Lm, n, Vf)
            b0, b1_, b2_ = _event_values(ni, nc, nm, no, vsw, rect,
                                         is_dead, Lr, Lm, n, Vf)
            # slot directions: rect event rises in Off (clamp reached) and
            # falls in D1/D2 (current zero); dead-clamp flips either way
            dir0 = 0 if rect == RECT_OFF else 1
            fired0 = _fired(a0, b0, dir0)
            fired1 = rect == RECT_OFF and _fired(a1_, b1_, 0)
            fired2 = is_dead and _fired(a2_, b2_, 2)
            if not (fired0 or fired1 or fired2):
                # accepted step: energy, extrema, invariants, record
                p_src_a = vin * iLr if node_hi == 1 else 0.0
                p_src_b = vin * ni if node_hi == 1 else 0.0
                il_a = _iload(vOut, load_kind, load_val)
                il_b = _iload(no, load_kind, load_val)
                acc[0] += 0.5 * (p_src_a + p_src_b) * h
                acc[1] += 0.5 * (vOut * il_a + no * il_b) * h
                iLr, vCr, iLm, vOut = ni, nc, nm, no
                t_cur = t_b
                if abs(iLr) > max_ilr:
                    max_ilr = abs(iLr)
                if abs(vCr) > max_vcr:
                    max_vcr = abs(vCr)
                if abs(iLm) > max_ilm:
                    max_ilm = abs(iLm)
                if abs(vOut) > max_vout:
                    max_vout = abs(vOut)
                bad = False
                if rect == RECT_D1 and n * (iLr - iLm) < -I_TOL:
                    bad = True
                elif rect == RECT_D2 and n * (iLm - iLr) < -I_TOL:
                    bad = True
                if vOut < -V_TOL:
                    bad = True
                if bad:
                    return (ERR_MODE_VIOLATION, rec_n, ev_n, rect, clamp_hi,
                            iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                            max_vout)
                if k % stride == 0 or k == n_steps - 1:
                    if rec_n > 0 and rec[rec_n - 1, 0] == t_b:
                        r = rec_n - 1
                    else:
                        if rec_n >= rec.shape[0]:
                            return (ERR_RECORD_FULL, rec_n, ev_n, rect,
                                    clamp_hi, iLr, vCr, iLm, vOut, max_ilr,
                                    max_vcr, max_ilm, max_vout)
                        r = rec_n
                        rec_n += 1
                    rec[r, 0] = t_b
                    rec[r, 1] = iLr
                    rec[r, 2] = vCr
                    rec[r, 3] = iLm
                    rec[r, 4] = vOut
                    rec[r, 5] = vsw
                    rec[r, 6] = _iload(vOut, load_kind, load_val)
                    rec[r, 7] = rect
                    rec[r, 8] = seg_kind
                continue

            # localize the earliest fired event
            h_star = h
            slot_star = -1
            if fired0:
                ok, hs = _bisect_event(iLr, vCr, iLm, vOut, h, vsw, rect, 0,
                                       dir0, a0, is_dead, Lr, Cr, Lm, n, Vf,
                                       Cout, load_kind, load_val, tol_t)
                if ok == 0:
                    return (ERR_EVENT_LOC, rec_n, ev_n, rect, clamp_hi,
                            iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                            max_vout)
                if hs <= h_star:
                    h_star = hs
                    slot_star = 0
            if fired1:
                ok, hs = _bisect_event(iLr, vCr, iLm, vOut, h, vsw, rect, 1,
                                       0, a1_, is_dead, Lr, Cr, Lm, n, Vf,
                                       Cout, load_kind, load_val, tol_t)
                if ok == 0:
                    return (ERR_EVENT_LOC, rec_n, ev_n, rect, clamp_hi,
                            iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                            max_vout)
                if hs < h_star:
                    h_star = hs
                    slot_star = 1
            if fired2:
                ok, hs = _bisect_event(iLr, vCr, iLm, vOut, h, vsw, rect, 2,
                                       2, a2_, is_dead, Lr, Cr, Lm, n, Vf,
                                       Cout, load_kind, load_val, tol_t)
                if ok == 0:
                    return (ERR_EVENT_LOC, rec_n, ev_n, rect, clamp_hi,
                            iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                            max_vout)
                if hs < h_star:
                    h_star = hs
                    slot_star = 2

            ei, ec, em, eo = _rk4(iLr, vCr, iLm, vOut, h_star, vsw, rect,
                                  Lr, Cr, Lm, n, Vf, Cout, load_kind, load_val)
            p_src_a = vin * iLr if node_hi == 1 else 0.0
            p_src_b = vin * ei if node_hi == 1 else 0.0
            il_a = _iload(vOut, load_kind, load_val)
            il_b = _iload(eo, load_kind, load_val)
            acc[0] += 0.5 * (p_src_a + p_src_b) * h_star
            acc[1] += 0.5 * (vOut * il_a + eo * il_b) * h_star
            iLr, vCr, iLm, vOut = ei, ec, em, eo
            t_ev = t_cur + h_star
            t_cur = t_ev
            if abs(iLr) > max_ilr:
                max_ilr = abs(iLr)
            if abs(vCr) > max_vcr:
                max_vcr = abs(vCr)
            if abs(iLm) > max_ilm:
                max_ilm = abs(iLm)
            if abs(vOut) > max_vout:
                max_vout = abs(vOut)

            # apply the transition
            code = 0
            if slot_star == 0:
                if rect == RECT_D1:
                    rect = RECT_OFF
                    iLm = iLr  # series constraint is exact at turn-off
                    code = EV_D1_OFF
                elif rect == RECT_D2:
                    rect = RECT_OFF
                    iLm = iLr
                    code = EV_D2_OFF
                else:
                    rect = RECT_D1
                    code = EV_D1_ON
            elif slot_star == 1:
                rect = RECT_D2
                code = EV_D2_ON
            else:
                # node swaps rails when iLr reverses during dead time
                if a2_ > 0.0:
                    clamp_hi = 1
                    code = EV_CLAMP_HIGH
                else:
                    clamp_hi = 0
                    code = EV_CLAMP_LOW
                node_hi = clamp_hi
                vsw = vin if clamp_hi == 1 else 0.0
            if ev_n >= ev.shape[0]:
                return (ERR_RECORD_FULL, rec_n, ev_n, rect, clamp_hi,
                        iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                        max_vout)
            ev[ev_n, 0] = t_ev
            ev[ev_n, 1] = code
            ev_n += 1

            # settle: the new Off state may sit past the other clamp already
            if rect == RECT_OFF:
                s0, s1, s2 = _event_values(iLr, vCr, iLm, vOut, vsw, rect,
                                           is_dead, Lr, Lm, n, Vf)
                if s0 > 0.0 or s1 > 0.0:
                    rect = RECT_D1 if s0 > 0.0 else RECT_D2
                    if ev_n >= ev.shape[0]:
                        return (ERR_RECORD_FULL, rec_n, ev_n, rect, clamp_hi,
                                iLr, vCr, iLm, vOut, max_ilr, max_vcr,
                                max_ilm, max_vout)
                    ev[ev_n, 0] = t_ev
                    ev[ev_n, 1] = EV_D1_ON if s0 > 0.0 else EV_D2_ON
                    ev_n += 1

            # record the instant with the post-transition mode
            if rec_n > 0 and rec[rec_n - 1, 0] == t_ev:
                r = rec_n - 1
            else:
                if rec_n >= rec.shape[0]:
                    return (ERR_RECORD_FULL, rec_n, ev_n, rect, clamp_hi,
                            iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                            max_vout)
                r = rec_n
                rec_n += 1
            rec[r, 0] = t_ev
            rec[r, 1] = iLr
            rec[r, 2] = vCr
            rec[r, 3] = iLm
            rec[r, 4] = vOut
            rec[r, 5] = vsw
            rec[r, 6] = _iload(vOut, load_kind, load_val)
            rec[r, 7] = rect
            rec[r, 8] = seg_kind

            guard += 1
            if guard > EVENT_GUARD:
                return (ERR_CHATTER, rec_n, ev_n, rect, clamp_hi,
                        iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm,
                        max_vout)

    return (ERR_OK, rec_n, ev_n, rect, clamp_hi,
            iLr, vCr, iLm, vOut, max_ilr, max_vcr, max_ilm, max_vout)


# public single-step helper shared by the driver and tests
def rk4_step(iLr, vCr, iLm, vOut, h, vsw, rect, Lr, Cr, Lm, n, Vf, Cout,
             load_kind, load_val):
    return _rk4(iLr, vCr, iLm, vOut, h, vsw, rect, Lr, Cr, Lm, n, Vf, Cout,
                load_kind, load_val)


_iload = maybe_njit(_iload)
_derivs = maybe_njit(_derivs)
_rk4 = maybe_njit(_rk4)
_event_values = maybe_njit(_event_values)
_fired = maybe_njit(_fired)
_bisect_event = maybe_njit(_bisect_event)
integrate_segment = maybe_njit(integrate_segment)
