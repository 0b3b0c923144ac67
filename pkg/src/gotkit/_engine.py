"""Slot-loop simulation kernel.

One source function implements the whole per-slot loop; it is compiled
with numba when available and run as plain Python otherwise.  All
randomness is consumed from a pre-drawn uniform matrix, every arithmetic
step is a plain add or compare, and the accumulation order is fixed, so
the two engines produce bit-identical results.

Sampler codes: 0 uniform (param = period), 1 age-aware (param = AoI
threshold), 2 change-aware, 3 mismatch-triggered, 4 tabular.
"""

from __future__ import annotations

import numpy as np

UNIFORM = 0
AGE_AWARE = 1
CHANGE_AWARE = 2
MISMATCH = 3
TABULAR = 4


def _run_slots_source(
    sampler_code,
    sampler_param,
    sampler_table,
    decision_table,
    src_cum,
    ctx_cum,
    got_flat,
    channel_success,
    sampling_cost,
    x0,
    x_hat0,
    phi0,
    u,
    trace_x,
    trace_x_hat,
    trace_phi,
    trace_a_s,
    trace_a_a,
    trace_h,
    trace_aoi,
    trace_aoci,
    trace_aoii,
    trace_got,
    trace_cost,
):
    horizon = u.shape[0]
    trace_slots = trace_x.shape[0]
    num_semantics = src_cum.shape[2]
    num_contexts = ctx_cum.shape[0]

    x = x0
    x_hat = x_hat0
    phi = phi0
    prev_x = x0
    aoi = 1
    aoci = 1
    aoii = 0 if x0 == x_hat0 else 1
    last_delivered = x_hat0

    total_cost = 0.0
    total_samples = 0

    for t in range(horizon):
        if sampler_code == UNIFORM:
            a_s = 1 if t % sampler_param == 0 else 0
        elif sampler_code == AGE_AWARE:
            a_s = 1 if aoi > sampler_param else 0
        elif sampler_code == CHANGE_AWARE:
            a_s = 1 if x != prev_x else 0
        elif sampler_code == MISMATCH:
            a_s = 1 if x != x_hat else 0
        else:
            flat = (x * num_semantics + x_hat) * num_contexts + phi
            a_s = int(sampler_table[flat])

        delivered = a_s == 1 and u[t, 0] < channel_success
        x_hat_next = x if delivered else x_hat

        a_a = int(decision_table[x_hat])
        flat_now = (x * num_semantics + x_hat) * num_contexts + phi
        got = got_flat[flat_now]
        slot_cost = got
        if a_s == 1:
            slot_cost = slot_cost + sampling_cost
        total_cost += got
        if a_s == 1:
            total_cost += sampling_cost
            total_samples += 1

        u_src = u[t, 1]
        x_next = num_semantics - 1
        for i in range(num_semantics):
            if u_src < src_cum[phi, a_a, x, i]:
                x_next = i
                break
        u_ctx = u[t, 2]
        phi_next = num_contexts - 1
        for i in range(num_contexts):
            if u_ctx < ctx_cum[phi, i]:
                phi_next = i
                break

        if t < trace_slots:
            trace_x[t] = x
            trace_x_hat[t] = x_hat
            trace_phi[t] = phi
            trace_a_s[t] = a_s
            trace_a_a[t] = a_a
            trace_h[t] = 1 if delivered else 0
            trace_aoi[t] = aoi
            trace_aoci[t] = aoci
            trace_aoii[t] = aoii
            trace_got[t] = got
            trace_cost[t] = slot_cost

        if delivered:
            aoi = 1
            if x != last_delivered:
                aoci = 1
            else:
                aoci += 1
            last_delivered = x
        else:
            aoi += 1
            aoci += 1
        aoii = 0 if x_next == x_hat_next else aoii + 1

        prev_x = x
        x = x_next
        x_hat = x_hat_next
        phi = phi_next

    return total_cost, total_samples


run_slots_python = _run_slots_source

try:  # pragma: no cover - exercised via whichever kernel is active
    import numba

    run_slots_numba = numba.njit(cache=True)(_run_slots_source)
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    run_slots_numba = None
    HAS_NUMBA = False
