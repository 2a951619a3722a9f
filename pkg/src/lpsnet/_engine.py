"""Event-driven simulation kernel (numba-compiled).

State representation.  Every in-service job, at every node, depletes at the
same instantaneous rate 1/B, where B is the system-wide count of busy
servers.  Let A(t) be the cumulative per-server work, dA/dt = 1/B while
B > 0.  A job admitted to service at clock value A0 with requirement s
finishes exactly when A reaches A0 + s, independent of how B fluctuates in
between.  Completions therefore live in a priority queue keyed by that
static "mark", and the next completion time is t + (min_mark - A) * B.
Work conservation (total in-service work drains at rate one) holds by
construction; the optional debug mode re-verifies it event by event along
with the server-discipline invariant (in-service count == min(x_i, K_i),
waiting count == x_i - min(x_i, K_i)).  Debug mode is meant for short runs.

Event ties are resolved deterministically: completions before arrivals,
and among simultaneous completions the lowest node index, then admission
order.  Randomness comes from splitmix64 streams derived from
(seed, replication, stream tag), with tags i / J+i / 2J+i for arrivals,
service draws, and routing decisions of node i; the stream arithmetic
mirrors ``lpsnet.rng`` word for word.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_PATH = U64(0xD1B54A32D192ED03)
_INV_2_53 = 2.0 ** -53

# svc_kind codes
KIND_EXPONENTIAL = 0
KIND_HYPEREXP2 = 1
KIND_DETERMINISTIC = 2

# error codes returned by run_replication
OK = 0
ERR_STUCK = 1          # no future event exists (nothing in service, no arrivals)
ERR_NONFINITE = 2      # next event time is not finite
ERR_INVARIANT = 3      # debug mode: discipline or work-conservation violation


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True, inline="always")
def _derive_state(seed, rep, tag):
    s = _mix64(U64(seed))
    s = _mix64(s + U64(rep + 1) * _PATH)
    s = _mix64(s + U64(tag + 1) * _PATH)
    return s


@njit(cache=True, nogil=True, inline="always")
def _next_uniform(states, i):
    """Advance stream i and return a double in (0, 1]."""
    states[i] = states[i] + _GAMMA
    z = _mix64(states[i])
    return (np.float64(z >> U64(11)) + 1.0) * _INV_2_53


@njit(cache=True, nogil=True)
def _sample_service(kind, a, b, c, states, i):
    """Draw one service requirement for node i from its service stream."""
    k = kind[i]
    if k == KIND_DETERMINISTIC:
        return a[i]
    if k == KIND_EXPONENTIAL:
        return -a[i] * np.log(_next_uniform(states, i))
    # two-phase hyperexponential: a = p1, b = mean of phase 1, c = mean of phase 2
    if _next_uniform(states, i) <= a[i]:
        return -b[i] * np.log(_next_uniform(states, i))
    return -c[i] * np.log(_next_uniform(states, i))


@njit(cache=True, nogil=True)
def service_draws(kind, a, b, c, seed, rep, tag, n):
    """n service draws from the stream (seed, rep, tag); test hook."""
    states = np.empty(1, dtype=np.uint64)
    states[0] = _derive_state(seed, rep, tag)
    kinds = np.empty(1, dtype=np.int64)
    kinds[0] = kind
    aa = np.empty(1); aa[0] = a
    bb = np.empty(1); bb[0] = b
    cc = np.empty(1); cc[0] = c
    out = np.empty(n)
    for i in range(n):
        out[i] = _sample_service(kinds, aa, bb, cc, states, 0)
    return out


@njit(cache=True, nogil=True, inline="always")
def _heap_before(hm, hn, hs, a, b):
    if hm[a] != hm[b]:
        return hm[a] < hm[b]
    if hn[a] != hn[b]:
        return hn[a] < hn[b]
    return hs[a] < hs[b]


@njit(cache=True, nogil=True)
def _heap_swap(hm, hn, hs, hj, ht, hv, a, b):
    hm[a], hm[b] = hm[b], hm[a]
    hn[a], hn[b] = hn[b], hn[a]
    hs[a], hs[b] = hs[b], hs[a]
    hj[a], hj[b] = hj[b], hj[a]
    ht[a], ht[b] = ht[b], ht[a]
    hv[a], hv[b] = hv[b], hv[a]


@njit(cache=True, nogil=True)
def _heap_push(hm, hn, hs, hj, ht, hv, size, mark, node, sq, jid, tsys, visit):
    cap = hm.shape[0]
    if size >= cap:
        cap2 = 2 * cap
        m2 = np.empty(cap2); m2[:cap] = hm; hm = m2
        n2 = np.empty(cap2, dtype=np.int64); n2[:cap] = hn; hn = n2
        s2 = np.empty(cap2, dtype=np.int64); s2[:cap] = hs; hs = s2
        j2 = np.empty(cap2, dtype=np.int64); j2[:cap] = hj; hj = j2
        t2 = np.empty(cap2); t2[:cap] = ht; ht = t2
        v2 = np.empty(cap2, dtype=np.int64); v2[:cap] = hv; hv = v2
    hm[size] = mark
    hn[size] = node
    hs[size] = sq
    hj[size] = jid
    ht[size] = tsys
    hv[size] = visit
    idx = size
    while idx > 0:
        parent = (idx - 1) // 2
        if _heap_before(hm, hn, hs, idx, parent):
            _heap_swap(hm, hn, hs, hj, ht, hv, idx, parent)
            idx = parent
        else:
            break
    return hm, hn, hs, hj, ht, hv, size + 1


@njit(cache=True, nogil=True)
def _heap_pop_root(hm, hn, hs, hj, ht, hv, size):
    """Remove the root; caller must have read its fields first."""
    size -= 1
    if size > 0:
        _heap_swap(hm, hn, hs, hj, ht, hv, 0, size)
        idx = 0
        while True:
            left = 2 * idx + 1
            if left >= size:
                break
            best = left
            right = left + 1
            if right < size and _heap_before(hm, hn, hs, right, left):
                best = right
            if _heap_before(hm, hn, hs, best, idx):
                _heap_swap(hm, hn, hs, hj, ht, hv, idx, best)
                idx = best
            else:
                break
    return size


@njit(cache=True, nogil=True)
def _wq_push(w_req, w_jid, w_tsys, w_visit, w_head, w_count, node, req, jid, tsys, visit):
    J, cap = w_req.shape
    if w_count[node] >= cap:
        cap2 = 2 * cap
        r2 = np.empty((J, cap2))
        j2 = np.empty((J, cap2), dtype=np.int64)
        t2 = np.empty((J, cap2))
        v2 = np.empty((J, cap2), dtype=np.int64)
        for n in range(J):
            for k in range(w_count[n]):
                src = (w_head[n] + k) % cap
                r2[n, k] = w_req[n, src]
                j2[n, k] = w_jid[n, src]
                t2[n, k] = w_tsys[n, src]
                v2[n, k] = w_visit[n, src]
            w_head[n] = 0
        w_req, w_jid, w_tsys, w_visit = r2, j2, t2, v2
        cap = cap2
    pos = (w_head[node] + w_count[node]) % cap
    w_req[node, pos] = req
    w_jid[node, pos] = jid
    w_tsys[node, pos] = tsys
    w_visit[node, pos] = visit
    w_count[node] += 1
    return w_req, w_jid, w_tsys, w_visit


@njit(cache=True, nogil=True)
def _trace_append(tj, tn, te, ta, td, count, jid, node, t_enter):
    cap = tj.shape[0]
    if count >= cap:
        cap2 = 2 * cap
        a1 = np.empty(cap2, dtype=np.int64); a1[:cap] = tj; tj = a1
        a2 = np.empty(cap2, dtype=np.int64); a2[:cap] = tn; tn = a2
        a3 = np.empty(cap2); a3[:cap] = te; te = a3
        a4 = np.empty(cap2); a4[:cap] = ta; ta = a4
        a5 = np.empty(cap2); a5[:cap] = td; td = a5
    tj[count] = jid
    tn[count] = node
    te[count] = t_enter
    ta[count] = np.nan
    td[count] = np.nan
    return tj, tn, te, ta, td, count + 1


@njit(cache=True, nogil=True)
def run_replication(lam, arr_mean, K, cum_routing, svc_kind, svc_a, svc_b, svc_c,
                    seed, rep, horizon, warmup, collect_trace, debug):
    """Simulate one replication until `horizon` jobs have left the system.

    The first `warmup` departures are discarded: sojourn, admission, and
    time-average measurements start at the instant of the warmup-th
    departure.  Returns an error code (OK on success), the measurement
    accumulators, and (when requested) the per-visit trace arrays.
    """
    J = len(lam)

    # random streams: [0, J): arrivals, [J, 2J): service, [2J, 3J): routing
    arr_states = np.empty(J, dtype=np.uint64)
    svc_states = np.empty(J, dtype=np.uint64)
    rt_states = np.empty(J, dtype=np.uint64)
    for i in range(J):
        arr_states[i] = _derive_state(seed, rep, i)
        svc_states[i] = _derive_state(seed, rep, J + i)
        rt_states[i] = _derive_state(seed, rep, 2 * J + i)

    # completion heap (marks on the per-server work clock)
    h_mark = np.empty(1024)
    h_node = np.empty(1024, dtype=np.int64)
    h_seq = np.empty(1024, dtype=np.int64)
    h_jid = np.empty(1024, dtype=np.int64)
    h_tsys = np.empty(1024)
    h_visit = np.empty(1024, dtype=np.int64)
    heap_size = 0

    # per-node FIFO waiting rooms (ring buffers sharing one capacity)
    w_req = np.empty((J, 256))
    w_jid = np.empty((J, 256), dtype=np.int64)
    w_tsys = np.empty((J, 256))
    w_visit = np.empty((J, 256), dtype=np.int64)
    w_head = np.zeros(J, dtype=np.int64)
    w_count = np.zeros(J, dtype=np.int64)

    # per-visit trace
    tcap = 1024 if collect_trace else 1
    tr_jid = np.empty(tcap, dtype=np.int64)
    tr_node = np.empty(tcap, dtype=np.int64)
    tr_enter = np.empty(tcap)
    tr_admit = np.empty(tcap)
    tr_depart = np.empty(tcap)
    tr_count = 0

    x = np.zeros(J, dtype=np.int64)
    area = np.zeros(J)
    admitted = np.zeros(J, dtype=np.int64)
    waited = np.zeros(J, dtype=np.int64)

    t = 0.0
    A = 0.0
    seq = 0
    job_counter = 0
    completed = 0
    sum_sojourn = 0.0
    n_sojourn = 0
    measuring = warmup == 0
    meas_start = 0.0
    max_violation = 0.0

    next_arr = np.empty(J)
    for i in range(J):
        if lam[i] > 0.0:
            next_arr[i] = -arr_mean[i] * np.log(_next_uniform(arr_states, i))
        else:
            next_arr[i] = np.inf

    while completed < horizon:
        # -- next event: completions win ties, then lowest node index -------
        if heap_size > 0:
            t_comp = t + (h_mark[0] - A) * heap_size
        else:
            t_comp = np.inf
        t_arr = np.inf
        arr_node = -1
        for i in range(J):
            if next_arr[i] < t_arr:
                t_arr = next_arr[i]
                arr_node = i
        is_completion = t_comp <= t_arr
        t_event = t_comp if is_completion else t_arr
        if not np.isfinite(t_event):
            code = ERR_NONFINITE if t_event != np.inf else ERR_STUCK
            return (code, t, A, x, sum_sojourn, n_sojourn, admitted, waited,
                    area, (t - meas_start) if measuring else 0.0, job_counter,
                    completed, max_violation,
                    tr_jid[:tr_count], tr_node[:tr_count], tr_enter[:tr_count],
                    tr_admit[:tr_count], tr_depart[:tr_count])
        dt = t_event - t
        if dt < 0.0:
            dt = 0.0

        if debug and heap_size > 0:
            # in-service work must drain at exactly rate one until the event
            a_next = h_mark[0] if is_completion else A + dt / heap_size
            drained = (a_next - A) * heap_size
            sum_marks = 0.0
            for k in range(heap_size):
                sum_marks += h_mark[k] - A
            viol = abs(drained - dt)
            if viol > max_violation:
                max_violation = viol
            if viol > 1e-9 * max(1.0, sum_marks):
                return (ERR_INVARIANT, t, A, x, sum_sojourn, n_sojourn,
                        admitted, waited, area,
                        (t - meas_start) if measuring else 0.0, job_counter,
                        completed, max_violation,
                        tr_jid[:tr_count], tr_node[:tr_count], tr_enter[:tr_count],
                        tr_admit[:tr_count], tr_depart[:tr_count])

        if measuring:
            for i in range(J):
                area[i] += x[i] * dt
        t = t_event

        if is_completion:
            A = h_mark[0]
            node = h_node[0]
            jid = h_jid[0]
            t_sys = h_tsys[0]
            visit = h_visit[0]
            heap_size = _heap_pop_root(h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size)
            x[node] -= 1
            if collect_trace and visit >= 0:
                tr_depart[visit] = t

            # a server came free; the longest-waiting job (if any) takes it
            if x[node] >= K[node]:
                pos = w_head[node]
                cap = w_req.shape[1]
                req = w_req[node, pos]
                wj = w_jid[node, pos]
                wt = w_tsys[node, pos]
                wv = w_visit[node, pos]
                w_head[node] = (pos + 1) % cap
                w_count[node] -= 1
                h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size = _heap_push(
                    h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size,
                    A + req, node, seq, wj, wt, wv)
                seq += 1
                if collect_trace and wv >= 0:
                    tr_admit[wv] = t

            # route the finished job
            dest = -1
            total_cont = cum_routing[node, J - 1]
            if total_cont > 0.0:
                u = _next_uniform(rt_states, node)
                if u <= total_cont:
                    for j in range(J):
                        if u <= cum_routing[node, j]:
                            dest = j
                            break
            if dest < 0:
                completed += 1
                if measuring:
                    sum_sojourn += t - t_sys
                    n_sojourn += 1
                elif completed >= warmup:
                    measuring = True
                    meas_start = t
            else:
                req = _sample_service(svc_kind, svc_a, svc_b, svc_c, svc_states, dest)
                if measuring:
                    admitted[dest] += 1
                    if x[dest] >= K[dest]:
                        waited[dest] += 1
                visit2 = -1
                if collect_trace:
                    visit2 = tr_count
                    tr_jid, tr_node, tr_enter, tr_admit, tr_depart, tr_count = _trace_append(
                        tr_jid, tr_node, tr_enter, tr_admit, tr_depart, tr_count, jid, dest, t)
                x[dest] += 1
                if x[dest] <= K[dest]:
                    h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size = _heap_push(
                        h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size,
                        A + req, dest, seq, jid, t_sys, visit2)
                    seq += 1
                    if collect_trace and visit2 >= 0:
                        tr_admit[visit2] = t
                else:
                    w_req, w_jid, w_tsys, w_visit = _wq_push(
                        w_req, w_jid, w_tsys, w_visit, w_head, w_count,
                        dest, req, jid, t_sys, visit2)
        else:
            # external arrival
            if heap_size > 0:
                A += dt / heap_size
            node = arr_node
            next_arr[node] = t - arr_mean[node] * np.log(_next_uniform(arr_states, node))
            req = _sample_service(svc_kind, svc_a, svc_b, svc_c, svc_states, node)
            jid = job_counter
            job_counter += 1
            if measuring:
                admitted[node] += 1
                if x[node] >= K[node]:
                    waited[node] += 1
            visit2 = -1
            if collect_trace:
                visit2 = tr_count
                tr_jid, tr_node, tr_enter, tr_admit, tr_depart, tr_count = _trace_append(
                    tr_jid, tr_node, tr_enter, tr_admit, tr_depart, tr_count, jid, node, t)
            x[node] += 1
            if x[node] <= K[node]:
                h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size = _heap_push(
                    h_mark, h_node, h_seq, h_jid, h_tsys, h_visit, heap_size,
                    A + req, node, seq, jid, t, visit2)
                seq += 1
                if collect_trace and visit2 >= 0:
                    tr_admit[visit2] = t
            else:
                w_req, w_jid, w_tsys, w_visit = _wq_push(
                    w_req, w_jid, w_tsys, w_visit, w_head, w_count,
                    node, req, jid, t, visit2)

        if debug:
            # discipline: exactly min(x_i, K_i) in service, the rest waiting
            for i in range(J):
                want = x[i] if x[i] < K[i] else K[i]
                got = 0
                for k in range(heap_size):
                    if h_node[k] == i:
                        got += 1
                if got != want or w_count[i] != x[i] - want:
                    return (ERR_INVARIANT, t, A, x, sum_sojourn, n_sojourn,
                            admitted, waited, area,
                            (t - meas_start) if measuring else 0.0, job_counter,
                            completed, max_violation,
                            tr_jid[:tr_count], tr_node[:tr_count], tr_enter[:tr_count],
                            tr_admit[:tr_count], tr_depart[:tr_count])

    return (OK, t, A, x, sum_sojourn, n_sojourn, admitted, waited, area,
            t - meas_start, job_counter, completed, max_violation,
            tr_jid[:tr_count], tr_node[:tr_count], tr_enter[:tr_count],
            tr_admit[:tr_count], tr_depart[:tr_count])
