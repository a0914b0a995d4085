"""
Compiled extended-Viterbi recursion

Time indices are segment *ends* (exclusive): ``delta[t, m, D-1]`` is the best
log score of a partial path whose last segment is state ``m`` with duration
``D`` covering ticks ``[t-D, t)``.
"""

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def extended_viterbi(log_pi, log_a, cum_log, cum_zero, log_int, gap_run, start_ok, end_ok, allow_self):
    """Max-product recursion over (end, state, duration, interval).

    Args:
        log_pi: (M, Dmax) log initial table
        log_a: (M, Dmax, M, Dmax) log transition table
        cum_log: (M, T+1) prefix sums of finite log emissions per state
        cum_zero: (M, T+1) prefix counts of zero-probability emissions per state
        log_int: (M, M, Lmax+1) log interval factor per pair and length
        gap_run: (T+1,) longest interval allowed to end at each start tick
        start_ok: (T+1,) first segment may start here
        end_ok: (T+1,) last segment may end here
        allow_self: permit m -> m transitions

    Returns:
        best score, its (end, state, duration) and the back-pointer arrays
    """
    n_states, d_max = log_pi.shape
    length = cum_log.shape[1] - 1
    l_max = log_int.shape[2] - 1

    delta = np.full((length + 1, n_states, d_max), -np.inf)
    back_m = np.full((length + 1, n_states, d_max), -1, dtype=np.int64)
    back_d = np.zeros((length + 1, n_states, d_max), dtype=np.int64)
    back_l = np.zeros((length + 1, n_states, d_max), dtype=np.int64)

    for t in range(1, length + 1):
        for m in range(n_states):
            for d in range(1, min(d_max, t) + 1):
                s = t - d
                if cum_zero[m, t] - cum_zero[m, s] > 0:
                    continue
                emit = cum_log[m, t] - cum_log[m, s]

                best = -np.inf
                best_m = -1
                best_d = 0
                best_l = 0
                if start_ok[s]:
                    best = log_pi[m, d - 1]

                l_top = min(l_max, gap_run[s])
                for mp in range(n_states):
                    if mp == m and not allow_self:
                        continue
                    for dp in range(1, d_max + 1):
                        trans = log_a[mp, dp - 1, m, d - 1]
                        if trans == -np.inf:
                            continue
                        for gap in range(l_top + 1):
                            tp = s - gap
                            if tp < dp:
                                break
                            prev = delta[tp, mp, dp - 1]
                            if prev == -np.inf:
                                continue
                            cand = prev + trans + log_int[mp, m, gap]
                            if cand > best:
                                best = cand
                                best_m = mp
                                best_d = dp
                                best_l = gap

                if best > -np.inf:
                    delta[t, m, d - 1] = best + emit
                    back_m[t, m, d - 1] = best_m
                    back_d[t, m, d - 1] = best_d
                    back_l[t, m, d - 1] = best_l

    final = -np.inf
    final_t = -1
    final_m = -1
    final_d = 0
    for t in range(length, 0, -1):
        if not end_ok[t]:
            continue
        for m in range(n_states):
            for d in range(1, min(d_max, t) + 1):
                if delta[t, m, d - 1] > final:
                    final = delta[t, m, d - 1]
                    final_t = t
                    final_m = m
                    final_d = d

    return final, final_t, final_m, final_d, back_m, back_d, back_l
