"""Numba kernels for batched exact simulation of the three model families.

Each realization r draws from the SplitMix64 stream keyed by
(master_seed, base_stream + r), matching ``rng.Stream`` draw for draw, so a
batch run and n calls to the generic ``ssa.simulate_one`` produce identical
outcomes, and thread scheduling cannot change any result.

Outcome codes: 0 = extinct, 1 = outbreak, 2 = censored.
"""
from __future__ import annotations

import numba as nb
import numpy as np

_MASK = nb.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = nb.uint64(0x9E3779B97F4A7C15)
_U53 = 1.1102230246251565e-16  # 2**-53

FOI_MASS_ACTION = 0
FOI_SATURATING = 1


@nb.njit(nb.uint64(nb.uint64), inline="always", cache=True)
def _sm64(x):
    z = (x + _GAMMA) & _MASK
    z = ((z ^ (z >> nb.uint64(30))) * nb.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> nb.uint64(27))) * nb.uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> nb.uint64(31))


@nb.njit(nb.uint64(nb.uint64, nb.uint64), inline="always", cache=True)
def _stream_init(master_seed, stream_id):
    return _sm64((master_seed + stream_id * _GAMMA) & _MASK)


@nb.njit(parallel=True, cache=True)
def one_patch_batch(n, foi_code, beta, mu, alpha, delta, omega, m1, m2, a1, a2,
                    S0, I0, V0, threshold, max_events, max_time,
                    master_seed, base_stream):
    kind = np.empty(n, np.int8)
    t_final = np.empty(n, np.float64)
    events = np.empty(n, np.int64)
    for r in nb.prange(n):
        st = _stream_init(nb.uint64(master_seed), nb.uint64(base_stream) + nb.uint64(r))
        S, I, V = S0, I0, V0
        t = 0.0
        ev = 0
        k = np.int8(2)
        running = True
        while running:
            if I + V == 0:
                k = np.int8(0)
                running = False
            elif I + V >= threshold:
                k = np.int8(1)
                running = False
            elif ev >= max_events:
                running = False
            else:
                r0 = beta * S
                r1 = mu * S * S
                if foi_code == FOI_MASS_ACTION:
                    r2 = S * (I + V)
                else:
                    r2 = S * (m1 * I / (a1 + I + V) + m2 * V / (a2 + I + V))
                r3 = alpha * I
                r4 = delta * I
                r5 = omega * V
                R = r0 + r1 + r2 + r3 + r4 + r5
                st = _sm64(st)
                u = (st >> nb.uint64(11)) * _U53
                t = t - np.log(1.0 - u) / R
                if t > max_time:
                    t = max_time
                    running = False
                else:
                    st = _sm64(st)
                    x = (st >> nb.uint64(11)) * _U53 * R
                    if x < r0:
                        S += 1
                    elif x < r0 + r1:
                        S -= 1
                    elif x < r0 + r1 + r2:
                        S -= 1
                        I += 1
                    elif x < r0 + r1 + r2 + r3:
                        I -= 1
                    elif x < r0 + r1 + r2 + r3 + r4:
                        V += 1
                    else:
                        V -= 1
                    ev += 1
        kind[r] = k
        t_final[r] = t
        events[r] = ev
    return kind, t_final, events


@nb.njit(parallel=True, cache=True)
def two_patch_batch(n, beta1, mu1, beta2, mu2, alpha, delta, omega, kdiff,
                    S10, I10, V10, S20, I20, V20, threshold, max_events,
                    max_time, master_seed, base_stream):
    """Two-patch batch; also flags per-patch disease extinction.

    hit1[r] is set when patch 1 is disease-free (I1 = V1 = 0) while patch 2 is
    still infected, or on total extinction; hit2 symmetrically. Total
    extinction therefore implies both flags.
    """
    kind = np.empty(n, np.int8)
    t_final = np.empty(n, np.float64)
    events = np.empty(n, np.int64)
    hit1 = np.zeros(n, np.int8)
    hit2 = np.zeros(n, np.int8)
    for r in nb.prange(n):
        st = _stream_init(nb.uint64(master_seed), nb.uint64(base_stream) + nb.uint64(r))
        S1, I1, V1, S2, I2, V2 = S10, I10, V10, S20, I20, V20
        t = 0.0
        ev = 0
        k = np.int8(2)
        h1 = np.int8(0)
        h2 = np.int8(0)
        if I1 + V1 == 0 and I2 + V2 > 0:
            h1 = np.int8(1)
        if I2 + V2 == 0 and I1 + V1 > 0:
            h2 = np.int8(1)
        running = True
        while running:
            tot = I1 + V1 + I2 + V2
            if tot == 0:
                k = np.int8(0)
                h1 = np.int8(1)
                h2 = np.int8(1)
                running = False
            elif tot >= threshold:
                k = np.int8(1)
                running = False
            elif ev >= max_events:
                running = False
            else:
                a0 = beta1 * S1
                a1 = mu1 * S1 * S1
                a2 = S1 * (I1 + V1)
                a3 = alpha * I1
                a4 = delta * I1
                a5 = omega * V1
                a6 = kdiff * V1
                a7 = beta2 * S2
                a8 = mu2 * S2 * S2
                a9 = S2 * (I2 + V2)
                a10 = alpha * I2
                a11 = delta * I2
                a12 = omega * V2
                a13 = kdiff * V2
                R = (a0 + a1 + a2 + a3 + a4 + a5 + a6
                     + a7 + a8 + a9 + a10 + a11 + a12 + a13)
                st = _sm64(st)
                u = (st >> nb.uint64(11)) * _U53
                t = t - np.log(1.0 - u) / R
                if t > max_time:
                    t = max_time
                    running = False
                else:
                    st = _sm64(st)
                    x = (st >> nb.uint64(11)) * _U53 * R
                    c = a0
                    if x < c:
                        S1 += 1
                    elif x < c + a1:
                        S1 -= 1
                    elif x < c + a1 + a2:
                        S1 -= 1
                        I1 += 1
                    elif x < c + a1 + a2 + a3:
                        I1 -= 1
                    elif x < c + a1 + a2 + a3 + a4:
                        V1 += 1
                    elif x < c + a1 + a2 + a3 + a4 + a5:
                        V1 -= 1
                    elif x < c + a1 + a2 + a3 + a4 + a5 + a6:
                        V1 -= 1
                        V2 += 1
                    else:
                        c = c + a1 + a2 + a3 + a4 + a5 + a6
                        if x < c + a7:
                            S2 += 1
                        elif x < c + a7 + a8:
                            S2 -= 1
                        elif x < c + a7 + a8 + a9:
                            S2 -= 1
                            I2 += 1
                        elif x < c + a7 + a8 + a9 + a10:
                            I2 -= 1
                        elif x < c + a7 + a8 + a9 + a10 + a11:
                            V2 += 1
                        elif x < c + a7 + a8 + a9 + a10 + a11 + a12:
                            V2 -= 1
                        else:
                            V2 -= 1
                            V1 += 1
                    ev += 1
                    if I1 + V1 == 0 and I2 + V2 > 0:
                        h1 = np.int8(1)
                    if I2 + V2 == 0 and I1 + V1 > 0:
                        h2 = np.int8(1)
        kind[r] = k
        t_final[r] = t
        events[r] = ev
        hit1[r] = h1
        hit2[r] = h2
    return kind, t_final, events, hit1, hit2
