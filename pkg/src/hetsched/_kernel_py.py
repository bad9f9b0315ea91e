"""Pure-Python event loop; the reference the compiled kernel mirrors line for line.

State layout (all numpy arrays, mutated in place so a run can be resumed):

    clock[0]           current simulated time
    res, tag, vstart   per thread: resource, finish tag, virtual start (PS)
    size, disp_t, nxt  per thread: task size, dispatch time, FCFS link
    vtime, nres        per resource: PS virtual time, resident count
    rate_sum           per resource: sum of resident rates (PS)
    head, tail         per resource: FCFS queue ends (-1 when empty)
    C, occ, occ_last   per cell: resident count, windowed occupancy integral,
                       last occupancy update time
    done_type          per type: measured completions
    acc                [sum of response times, energy]
    cap, work          per resource: delivered capacity, completed work
    flags              [initialized, finished]

``run_chunk`` returns 0 when the horizon is reached and 1 when some thread
needs a task beyond the end of the size buffer (the caller refills and calls
again).
"""

import math

BF, RD, LB, JSQ, QUOTA = 0, 1, 2, 3, 4
PS, FCFS = 0, 1

_INF = math.inf


def run_chunk(mu_a, ttype_a, g, policy, target_a, discipline, horizon, warmup,
              sizes_a, unif_a, cursor_a, clock_a, res_a, tag_a, vstart_a, size_a,
              disp_t_a, nxt_a, vtime_a, nres_a, rate_sum_a, head_a, tail_a, C_a,
              occ_a, occ_last_a, done_type_a, acc_a, cap_a, work_a, flags_a):
    mu = mu_a.tolist()
    ttype = ttype_a.tolist()
    target = target_a.tolist()
    sizes = sizes_a.tolist()
    unif = unif_a.tolist()
    cursor = cursor_a.tolist()
    res = res_a.tolist()
    tag = tag_a.tolist()
    vstart = vstart_a.tolist()
    size = size_a.tolist()
    disp_t = disp_t_a.tolist()
    nxt = nxt_a.tolist()
    vtime = vtime_a.tolist()
    nres = nres_a.tolist()
    rate_sum = rate_sum_a.tolist()
    head = head_a.tolist()
    tail = tail_a.tolist()
    C = C_a.tolist()
    occ = occ_a.tolist()
    occ_last = occ_last_a.tolist()
    done_type = done_type_a.tolist()
    acc = acc_a.tolist()
    cap = cap_a.tolist()
    work = work_a.tolist()
    flags = flags_a.tolist()

    Q = len(ttype)
    ell = len(mu)
    K = len(sizes[0]) if Q else 0
    is_ps = discipline == PS
    scratch = [0.0] * ell

    def touch(i, j, t):
        # integrate C[i][j] over [occ_last, t] clipped to the measurement window
        lo = occ_last[i][j]
        if lo < warmup:
            lo = warmup
        if t > lo:
            occ[i][j] += C[i][j] * (t - lo)
        occ_last[i][j] = t

    def remaining(k, t):
        r = res[k]
        m = mu[ttype[k]][r]
        if m <= 0.0:
            return size[k]
        if is_ps:
            rem = (tag[k] - vtime[r]) * m
        elif head[r] == k:
            rem = (tag[k] - t) * m
        else:
            return size[k]
        return rem if rem > 0.0 else 0.0

    def place(q, t):
        i = ttype[q]
        c = cursor[q]
        w = sizes[q][c]
        u = unif[q][c]
        cursor[q] = c + 1
        m_cols = g + 1 if i >= g else g
        if policy == BF:
            j = i
        elif policy == RD:
            k = int(u * m_cols)
            if k >= m_cols:
                k = m_cols - 1
            j = k if k < g else i
        elif policy == LB:
            for r in range(ell):
                scratch[r] = 0.0
            for k in range(Q):
                if res[k] >= 0:
                    scratch[res[k]] += remaining(k, t)
            j = -1
            best = _INF
            for k in range(m_cols):
                r = k if k < g else i
                if j < 0 or scratch[r] < best:
                    j = r
                    best = scratch[r]
        elif policy == JSQ:
            j = -1
            bestn = 0
            for k in range(m_cols):
                r = k if k < g else i
                if j < 0 or nres[r] < bestn:
                    j = r
                    bestn = nres[r]
        else:
            j = -1
            bestd = 0
            for k in range(m_cols):
                r = k if k < g else i
                d = target[i][r] - C[i][r]
                if j < 0 or d > bestd:
                    j = r
                    bestd = d

        touch(i, j, t)
        C[i][j] += 1
        res[q] = j
        size[q] = w
        disp_t[q] = t
        nres[j] += 1
        m = mu[i][j]
        if is_ps:
            if nres[j] == 1:
                vtime[j] = 0.0
            vstart[q] = vtime[j]
            tag[q] = vtime[j] + (w / m if m > 0.0 else _INF)
            rate_sum[j] += m
        else:
            nxt[q] = -1
            if head[j] < 0:
                head[j] = q
                tail[j] = q
                tag[q] = t + (w / m if m > 0.0 else _INF)
            else:
                nxt[tail[j]] = q
                tail[j] = q

    def advance(t0, t1):
        dt = t1 - t0
        if dt <= 0.0:
            return
        if is_ps:
            for r in range(ell):
                n = nres[r]
                if n > 0:
                    vtime[r] += dt / n
                    cap[r] += rate_sum[r] / n * dt
        else:
            for r in range(ell):
                h = head[r]
                if h >= 0:
                    cap[r] += mu[ttype[h]][r] * dt

    def complete(q, t):
        i = ttype[q]
        j = res[q]
        m = mu[i][j]
        touch(i, j, t)
        C[i][j] -= 1
        nres[j] -= 1
        if is_ps:
            rate_sum[j] -= m
            if nres[j] == 0:
                rate_sum[j] = 0.0
                vtime[j] = 0.0
        else:
            h = nxt[q]
            head[j] = h
            if h < 0:
                tail[j] = -1
            else:
                mh = mu[ttype[h]][j]
                tag[h] = t + (size[h] / mh if mh > 0.0 else _INF)
            nxt[q] = -1
        work[j] += size[q]
        if t >= warmup:
            done_type[i] += 1
            acc[0] += t - disp_t[q]
            acc[1] += size[q] / m
        res[q] = -1

    status = 0
    if not flags[0]:
        for q in range(Q):
            place(q, 0.0)
        flags[0] = 1

    t = float(clock_a[0])
    while not flags[1]:
        best = _INF
        bq = -1
        bj = ell
        if is_ps:
            for q in range(Q):
                r = res[q]
                dt = (tag[q] - vtime[r]) * nres[r]
                if dt < 0.0:
                    dt = 0.0
                if dt < best or (dt == best and r < bj):
                    best = dt
                    bq = q
                    bj = r
        else:
            for r in range(ell):
                h = head[r]
                if h >= 0:
                    dt = tag[h] - t
                    if dt < 0.0:
                        dt = 0.0
                    if dt < best:
                        best = dt
                        bq = h
        t_next = t + best
        if bq < 0 or t_next > horizon:
            advance(t, horizon)
            t = horizon
            for i in range(ell):
                for j in range(ell):
                    touch(i, j, horizon)
            flags[1] = 1
            break
        if cursor[bq] >= K:
            status = 1
            break
        advance(t, t_next)
        t = t_next
        complete(bq, t)
        place(bq, t)

    clock_a[0] = t
    cursor_a[:] = cursor
    res_a[:] = res
    tag_a[:] = tag
    vstart_a[:] = vstart
    size_a[:] = size
    disp_t_a[:] = disp_t
    nxt_a[:] = nxt
    vtime_a[:] = vtime
    nres_a[:] = nres
    rate_sum_a[:] = rate_sum
    head_a[:] = head
    tail_a[:] = tail
    C_a[:] = C
    occ_a[:] = occ
    occ_last_a[:] = occ_last
    done_type_a[:] = done_type
    acc_a[:] = acc
    cap_a[:] = cap
    work_a[:] = work
    flags_a[:] = flags
    return status
