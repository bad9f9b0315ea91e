# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop. Semantics are identical to ``_kernel_py.run_chunk``."""

from libc.math cimport INFINITY
from libc.stdint cimport int64_t

cdef enum:
    BF = 0
    RD = 1
    LB = 2
    JSQ = 3
    PS = 0


cdef struct Sim:
    int64_t Q
    int64_t ell
    int64_t g
    int64_t K
    int64_t policy
    bint is_ps
    double warmup
    double* mu
    int64_t* ttype
    int64_t* target
    double* sizes
    double* unif
    int64_t* cursor
    int64_t* res
    double* tag
    double* vstart
    double* size
    double* disp_t
    int64_t* nxt
    double* vtime
    int64_t* nres
    double* rate_sum
    int64_t* head
    int64_t* tail
    int64_t* C
    double* occ
    double* occ_last
    int64_t* done_type
    double* acc
    double* cap
    double* work
    double* scratch


cdef inline void touch(Sim* s, int64_t i, int64_t j, double t) noexcept nogil:
    cdef int64_t c = i * s.ell + j
    cdef double lo = s.occ_last[c]
    if lo < s.warmup:
        lo = s.warmup
    if t > lo:
        s.occ[c] += s.C[c] * (t - lo)
    s.occ_last[c] = t


cdef inline double remaining(Sim* s, int64_t k, double t) noexcept nogil:
    cdef int64_t r = s.res[k]
    cdef double m = s.mu[s.ttype[k] * s.ell + r]
    cdef double rem
    if m <= 0.0:
        return s.size[k]
    if s.is_ps:
        rem = (s.tag[k] - s.vtime[r]) * m
    elif s.head[r] == k:
        rem = (s.tag[k] - t) * m
    else:
        return s.size[k]
    return rem if rem > 0.0 else 0.0


cdef void place(Sim* s, int64_t q, double t) noexcept nogil:
    cdef int64_t i = s.ttype[q]
    cdef int64_t c = s.cursor[q]
    cdef double w = s.sizes[q * s.K + c]
    cdef double u = s.unif[q * s.K + c]
    cdef int64_t m_cols, j, k, r, bestn, d, bestd
    cdef double best, m
    s.cursor[q] = c + 1
    m_cols = s.g + 1 if i >= s.g else s.g
    if s.policy == BF:
        j = i
    elif s.policy == RD:
        k = <int64_t>(u * m_cols)
        if k >= m_cols:
            k = m_cols - 1
        j = k if k < s.g else i
    elif s.policy == LB:
        for r in range(s.ell):
            s.scratch[r] = 0.0
        for k in range(s.Q):
            if s.res[k] >= 0:
                s.scratch[s.res[k]] += remaining(s, k, t)
        j = -1
        best = INFINITY
        for k in range(m_cols):
            r = k if k < s.g else i
            if j < 0 or s.scratch[r] < best:
                j = r
                best = s.scratch[r]
    elif s.policy == JSQ:
        j = -1
        bestn = 0
        for k in range(m_cols):
            r = k if k < s.g else i
            if j < 0 or s.nres[r] < bestn:
                j = r
                bestn = s.nres[r]
    else:
        j = -1
        bestd = 0
        for k in range(m_cols):
            r = k if k < s.g else i
            d = s.target[i * s.ell + r] - s.C[i * s.ell + r]
            if j < 0 or d > bestd:
                j = r
                bestd = d

    touch(s, i, j, t)
    s.C[i * s.ell + j] += 1
    s.res[q] = j
    s.size[q] = w
    s.disp_t[q] = t
    s.nres[j] += 1
    m = s.mu[i * s.ell + j]
    if s.is_ps:
        if s.nres[j] == 1:
            s.vtime[j] = 0.0
        s.vstart[q] = s.vtime[j]
        s.tag[q] = s.vtime[j] + (w / m if m > 0.0 else INFINITY)
        s.rate_sum[j] += m
    else:
        s.nxt[q] = -1
        if s.head[j] < 0:
            s.head[j] = q
            s.tail[j] = q
            s.tag[q] = t + (w / m if m > 0.0 else INFINITY)
        else:
            s.nxt[s.tail[j]] = q
            s.tail[j] = q


cdef inline void advance(Sim* s, double t0, double t1) noexcept nogil:
    cdef double dt = t1 - t0
    cdef int64_t r, n, h
    if dt <= 0.0:
        return
    if s.is_ps:
        for r in range(s.ell):
            n = s.nres[r]
            if n > 0:
                s.vtime[r] += dt / n
                s.cap[r] += s.rate_sum[r] / n * dt
    else:
        for r in range(s.ell):
            h = s.head[r]
            if h >= 0:
                s.cap[r] += s.mu[s.ttype[h] * s.ell + r] * dt


cdef void complete(Sim* s, int64_t q, double t) noexcept nogil:
    cdef int64_t i = s.ttype[q]
    cdef int64_t j = s.res[q]
    cdef double m = s.mu[i * s.ell + j]
    cdef int64_t h
    cdef double mh
    touch(s, i, j, t)
    s.C[i * s.ell + j] -= 1
    s.nres[j] -= 1
    if s.is_ps:
        s.rate_sum[j] -= m
        if s.nres[j] == 0:
            s.rate_sum[j] = 0.0
            s.vtime[j] = 0.0
    else:
        h = s.nxt[q]
        s.head[j] = h
        if h < 0:
            s.tail[j] = -1
        else:
            mh = s.mu[s.ttype[h] * s.ell + j]
            s.tag[h] = t + (s.size[h] / mh if mh > 0.0 else INFINITY)
        s.nxt[q] = -1
    s.work[j] += s.size[q]
    if t >= s.warmup:
        s.done_type[i] += 1
        s.acc[0] += t - s.disp_t[q]
        s.acc[1] += s.size[q] / m
    s.res[q] = -1


def run_chunk(double[:, ::1] mu, int64_t[::1] ttype, int64_t g, int64_t policy,
              int64_t[:, ::1] target, int64_t discipline, double horizon, double warmup,
              double[:, ::1] sizes, double[:, ::1] unif, int64_t[::1] cursor,
              double[::1] clock, int64_t[::1] res, double[::1] tag, double[::1] vstart,
              double[::1] size, double[::1] disp_t, int64_t[::1] nxt, double[::1] vtime,
              int64_t[::1] nres, double[::1] rate_sum, int64_t[::1] head, int64_t[::1] tail,
              int64_t[:, ::1] C, double[:, ::1] occ, double[:, ::1] occ_last,
              int64_t[::1] done_type, double[::1] acc, double[::1] cap, double[::1] work,
              int64_t[::1] flags):
    cdef Sim s
    cdef int64_t ell = mu.shape[0]
    cdef double[::1] scratch = cdef_scratch(ell)
    cdef int64_t status = 0
    cdef int64_t q, r, h, bq, bj, i, j
    cdef double t, best, dt, t_next

    s.Q = ttype.shape[0]
    s.ell = ell
    s.g = g
    s.K = sizes.shape[1]
    s.policy = policy
    s.is_ps = discipline == PS
    s.warmup = warmup
    s.mu = &mu[0, 0]
    s.ttype = &ttype[0]
    s.target = &target[0, 0]
    s.sizes = &sizes[0, 0]
    s.unif = &unif[0, 0]
    s.cursor = &cursor[0]
    s.res = &res[0]
    s.tag = &tag[0]
    s.vstart = &vstart[0]
    s.size = &size[0]
    s.disp_t = &disp_t[0]
    s.nxt = &nxt[0]
    s.vtime = &vtime[0]
    s.nres = &nres[0]
    s.rate_sum = &rate_sum[0]
    s.head = &head[0]
    s.tail = &tail[0]
    s.C = &C[0, 0]
    s.occ = &occ[0, 0]
    s.occ_last = &occ_last[0, 0]
    s.done_type = &done_type[0]
    s.acc = &acc[0]
    s.cap = &cap[0]
    s.work = &work[0]
    s.scratch = &scratch[0]

    with nogil:
        if not flags[0]:
            for q in range(s.Q):
                place(&s, q, 0.0)
            flags[0] = 1

        t = clock[0]
        while not flags[1]:
            best = INFINITY
            bq = -1
            bj = ell
            if s.is_ps:
                for q in range(s.Q):
                    r = s.res[q]
                    dt = (s.tag[q] - s.vtime[r]) * s.nres[r]
                    if dt < 0.0:
                        dt = 0.0
                    if dt < best or (dt == best and r < bj):
                        best = dt
                        bq = q
                        bj = r
            else:
                for r in range(ell):
                    h = s.head[r]
                    if h >= 0:
                        dt = s.tag[h] - t
                        if dt < 0.0:
                            dt = 0.0
                        if dt < best:
                            best = dt
                            bq = h
            t_next = t + best
            if bq < 0 or t_next > horizon:
                advance(&s, t, horizon)
                t = horizon
                for i in range(ell):
                    for j in range(ell):
                        touch(&s, i, j, horizon)
                flags[1] = 1
                break
            if s.cursor[bq] >= s.K:
                status = 1
                break
            advance(&s, t, t_next)
            t = t_next
            complete(&s, bq, t)
            place(&s, bq, t)

        clock[0] = t
    return status


cdef double[::1] cdef_scratch(int64_t n):
    import numpy as np
    return np.zeros(max(n, 1))
