"""Compiled trellis kernels shared by the convolutional and TPST decoders.

Conventions used throughout:

* trellis state at time ``t`` packs the previous ``m`` inputs,
  ``u[t-1]`` in bit 0 up to ``u[t-m]`` in bit ``m-1``;
* an information word is carried as an int64 with ``u[0]`` as the most
  significant of its ``k`` bits, so integer order is lexicographic order;
* path metrics are correlations ``sum_j (1 - 2 c_j) * llr_j`` (larger is better).

Tail-biting decoding runs one backward pass per start state ``s`` with the
end state pinned to ``s``. Ties between the two branches leaving a node go to
input 0, which makes the surviving suffix the lexicographically smallest among
the optimal ones. The list enumerator is the classic sidetrack (deviation)
scheme over those backward passes, keyed on ``(-metric, info)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NEG_INF = -np.inf
LN2 = np.log(2.0)


@njit(cache=True)
def parity(x):
    p = 0
    while x:
        p ^= 1
        x &= x - 1
    return p


@njit(cache=True)
def branch_metrics(llr, n0, k):
    npat = 1 << n0
    pm = np.zeros((k, npat))
    for t in range(k):
        for p in range(npat):
            acc = 0.0
            for i in range(n0):
                if (p >> i) & 1:
                    acc -= llr[n0 * t + i]
                else:
                    acc += llr[n0 * t + i]
            pm[t, p] = acc
    return pm


@njit(cache=True)
def backward(pm, out_pat, m, k):
    """Best-to-go metrics, branch decisions and suffix words for every start state."""
    S = 1 << m
    mask = S - 1
    beta = np.full((S, k + 1, S), NEG_INF)
    bit = np.zeros((S, k, S), np.int8)
    sec = np.zeros((S, k + 1, S), np.int64)
    for s in range(S):
        beta[s, k, s] = 0.0
        for t in range(k - 1, -1, -1):
            w = np.int64(1) << (k - 1 - t)
            for x in range(S):
                n0s = (x << 1) & mask
                n1s = ((x << 1) | 1) & mask
                v0 = pm[t, out_pat[x, 0]] + beta[s, t + 1, n0s]
                v1 = pm[t, out_pat[x, 1]] + beta[s, t + 1, n1s]
                if v0 >= v1 or v1 == NEG_INF:
                    beta[s, t, x] = v0
                    bit[s, t, x] = 0
                    sec[s, t, x] = sec[s, t + 1, n0s]
                else:
                    beta[s, t, x] = v1
                    bit[s, t, x] = 1
                    sec[s, t, x] = w | sec[s, t + 1, n1s]
    return beta, bit, sec


@njit(cache=True)
def best_path(beta, sec):
    """Exact tail-biting ML path: (metric, info) maximizing metric, ties to smaller info."""
    S = beta.shape[0]
    best_m = NEG_INF
    best_i = np.int64(-1)
    for s in range(S):
        mt = beta[s, 0, s]
        if mt == NEG_INF:
            continue
        inf = sec[s, 0, s]
        if best_i < 0 or mt > best_m or (mt == best_m and inf < best_i):
            best_m = mt
            best_i = inf
    return best_m, best_i


@njit(cache=True)
def info_to_bits(info, k):
    u = np.empty(k, np.uint8)
    for t in range(k):
        u[t] = (info >> (k - 1 - t)) & 1
    return u


@njit(cache=True)
def bits_to_info(u):
    k = u.shape[0]
    info = np.int64(0)
    for t in range(k):
        info = (info << 1) | np.int64(u[t])
    return info


@njit(cache=True)
def encode_info(info, k, m, taps):
    """Tail-biting feedforward encoding, streams interleaved per time step."""
    n0 = taps.shape[0]
    u = info_to_bits(info, k)
    out = np.empty(n0 * k, np.uint8)
    for t in range(k):
        reg = 0
        for d in range(m + 1):
            j = t - d
            if j < 0:
                j += k
            reg |= np.int64(u[j]) << d
        for i in range(n0):
            out[n0 * t + i] = parity(reg & taps[i])
    return out


@njit(cache=True)
def _window(info, k, m, t):
    x = 0
    for d in range(1, m + 1):
        j = t - d
        if j < 0:
            j += k
        x |= ((info >> (k - 1 - j)) & 1) << (d - 1)
    return x


# -- binary max-heap on (metric desc, info asc) ---------------------------------


@njit(cache=True)
def _before(hm, hi, a, b):
    return hm[a] > hm[b] or (hm[a] == hm[b] and hi[a] < hi[b])


@njit(cache=True)
def _swap(hm, hi, hs, ht, a, b):
    hm[a], hm[b] = hm[b], hm[a]
    hi[a], hi[b] = hi[b], hi[a]
    hs[a], hs[b] = hs[b], hs[a]
    ht[a], ht[b] = ht[b], ht[a]


@njit(cache=True)
def heap_push(hm, hi, hs, ht, size, metric, info, start, tdev):
    pos = size
    hm[pos] = metric
    hi[pos] = info
    hs[pos] = start
    ht[pos] = tdev
    while pos > 0:
        parent = (pos - 1) >> 1
        if _before(hm, hi, pos, parent):
            _swap(hm, hi, hs, ht, pos, parent)
            pos = parent
        else:
            break
    return size + 1


@njit(cache=True)
def heap_pop(hm, hi, hs, ht, size):
    metric, info, start, tdev = hm[0], hi[0], hs[0], ht[0]
    size -= 1
    if size > 0:
        hm[0], hi[0], hs[0], ht[0] = hm[size], hi[size], hs[size], ht[size]
        pos = 0
        while True:
            left = 2 * pos + 1
            if left >= size:
                break
            child = left
            if left + 1 < size and _before(hm, hi, left + 1, left):
                child = left + 1
            if _before(hm, hi, child, pos):
                _swap(hm, hi, hs, ht, child, pos)
                pos = child
            else:
                break
    return metric, info, start, tdev, size


def new_heap(cap):
    return (
        np.empty(cap, np.float64),
        np.empty(cap, np.int64),
        np.empty(cap, np.int64),
        np.empty(cap, np.int64),
    )


@njit(cache=True)
def heap_seed(hm, hi, hs, ht, beta, sec):
    """Push the best path of every feasible start state."""
    S = beta.shape[0]
    size = 0
    for s in range(S):
        if beta[s, 0, s] != NEG_INF:
            size = heap_push(hm, hi, hs, ht, size, beta[s, 0, s], sec[s, 0, s], s, -1)
    return size


@njit(cache=True)
def kbest_next(hm, hi, hs, ht, size, pm, out_pat, beta, bit, sec, m, k):
    """Pop the next-best path and push its deviations. Returns (metric, info, size); info=-1 when exhausted."""
    if size == 0:
        return NEG_INF, np.int64(-1), 0
    metric, info, s, tdev, size = heap_pop(hm, hi, hs, ht, size)
    mask = (1 << m) - 1
    x = _window(info, k, m, tdev + 1)
    for tau in range(tdev + 1, k):
        if tau > tdev + 1:
            x = ((x << 1) | ((info >> (k - tau)) & 1)) & mask
        alt = 1 - bit[s, tau, x]
        nx = ((x << 1) | alt) & mask
        val = pm[tau, out_pat[x, alt]] + beta[s, tau + 1, nx]
        if val == NEG_INF:
            continue
        delta = beta[s, tau, x] - val
        if delta < 0.0:
            delta = 0.0
        keep = info & ~((np.int64(1) << (k - tau)) - 1)
        child = keep | (np.int64(alt) << (k - 1 - tau)) | sec[s, tau + 1, nx]
        size = heap_push(hm, hi, hs, ht, size, metric - delta, child, s, tau)
    return metric, info, size


# -- channel-side helpers --------------------------------------------------------


@njit(cache=True)
def boxplus(a, b):
    """log((1 + e^(a+b)) / (e^a + e^b)) without overflow."""
    sa = 1.0 if a >= 0 else -1.0
    sb = 1.0 if b >= 0 else -1.0
    aa = abs(a)
    ab = abs(b)
    mn = aa if aa < ab else ab
    return sa * sb * mn + np.log1p(np.exp(-abs(a + b))) - np.log1p(np.exp(-abs(a - b)))


@njit(cache=True)
def softplus(x):
    if x > 0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(cache=True)
def layer0_llr(y0, y1, sdiag, sigma):
    n = y0.shape[0]
    g = 2.0 / (sigma * sigma)
    out = np.empty(n)
    for j in range(n):
        a = g * y0[j]
        if sdiag[j]:
            out[j] = boxplus(a, g * y1[j])
        else:
            out[j] = a
    return out


@njit(cache=True)
def layer1_llr(y0, y1, v0, w0, sdiag, sigma):
    n = y0.shape[0]
    g = 2.0 / (sigma * sigma)
    out = np.empty(n)
    for j in range(n):
        val = g * y1[j] * (1.0 - 2.0 * w0[j])
        if sdiag[j]:
            val += g * y0[j] * (1.0 - 2.0 * (w0[j] ^ v0[j]))
        out[j] = val
    return out


@njit(cache=True)
def edf_value(y, c, sigma):
    g = 2.0 / (sigma * sigma)
    acc = 0.0
    for j in range(y.shape[0]):
        x = 1.0 - 2.0 * c[j]
        acc += softplus(-x * g * y[j])
    return 1.0 - acc / (y.shape[0] * LN2)


@njit(cache=True)
def loglik(y, c, sigma):
    acc = 0.0
    for j in range(y.shape[0]):
        d = y[j] - (1.0 - 2.0 * c[j])
        acc -= d * d
    return acc / (2.0 * sigma * sigma)


@njit(cache=True)
def depuncture(llr, kept, mother_len):
    out = np.zeros(mother_len)
    for i in range(kept.shape[0]):
        out[kept[i]] = llr[i]
    return out


@njit(cache=True)
def puncture(c, kept):
    out = np.empty(kept.shape[0], np.uint8)
    for i in range(kept.shape[0]):
        out[i] = c[kept[i]]
    return out


@njit(cache=True)
def times_r(v, r):
    n = r.shape[1]
    out = np.zeros(n, np.uint8)
    for i in range(v.shape[0]):
        if v[i]:
            for j in range(n):
                out[j] ^= r[i, j]
    return out


@njit(cache=True)
def viterbi_info(llr_mother, out_pat, m, k, n0):
    """Exact tail-biting ML decode: (metric, info).

    All start states run side by side in the inner (vectorizable) loop; the
    column for start ``s`` is pinned to end in state ``s``.
    """
    pm = branch_metrics(llr_mother, n0, k)
    S = 1 << m
    mask = S - 1
    nxt = np.full((S, S), NEG_INF)
    cur = np.empty((S, S))
    snxt = np.zeros((S, S), np.int64)
    scur = np.empty((S, S), np.int64)
    for s in range(S):
        nxt[s, s] = 0.0
    for t in range(k - 1, -1, -1):
        w = np.int64(1) << (k - 1 - t)
        for x in range(S):
            n0s = (x << 1) & mask
            n1s = ((x << 1) | 1) & mask
            g0 = pm[t, out_pat[x, 0]]
            g1 = pm[t, out_pat[x, 1]]
            for s in range(S):
                v0 = g0 + nxt[n0s, s]
                v1 = g1 + nxt[n1s, s]
                # branch-free select; data-dependent branches mispredict badly here
                sel = -np.int64(v1 > v0)
                cur[x, s] = max(v0, v1)
                scur[x, s] = (snxt[n0s, s] & ~sel) | ((w | snxt[n1s, s]) & sel)
        cur, nxt = nxt, cur
        scur, snxt = snxt, scur
    best_m = NEG_INF
    best_i = np.int64(-1)
    for s in range(S):
        mt = nxt[s, s]
        if mt == NEG_INF:
            continue
        inf = snxt[s, s]
        if best_i < 0 or mt > best_m or (mt == best_m and inf < best_i):
            best_m = mt
            best_i = inf
    return best_m, best_i


@njit(cache=True)
def encode_punctured(u, k, m, taps, kept):
    return puncture(encode_info(bits_to_info(u), k, m, taps), kept)


@njit(cache=True)
def assemble(v0, v1, w0, sdiag):
    """Forward then backward superposition: (v0 + (v1 + w0) S, v1 + w0)."""
    n = v0.shape[0]
    c = np.empty(2 * n, np.uint8)
    for j in range(n):
        c1 = v1[j] ^ w0[j]
        c[n + j] = c1
        c[j] = v0[j] ^ (c1 & sdiag[j])
    return c


@njit(cache=True)
def scl_kernel(
    y, sigma, sdiag, r, l_max, threshold,
    pat0, m0, k0, n00, taps0, kept0, mlen0,
    pat1, m1, k1, n01, taps1, kept1, mlen1,
):
    """Successive-cancellation list decoding of one TPST frame.

    Returns (codeword, info0, info1, list_used, early, loglik, edf).
    """
    n = kept0.shape[0]
    y0 = y[:n]
    y1 = y[n:]
    lam0 = depuncture(layer0_llr(y0, y1, sdiag, sigma), kept0, mlen0)
    pm = branch_metrics(lam0, n00, k0)
    beta, bit, sec = backward(pm, pat0, m0, k0)
    S = beta.shape[0]
    cap = S + l_max * k0 + 1
    hm = np.empty(cap)
    hi = np.empty(cap, np.int64)
    hs = np.empty(cap, np.int64)
    ht = np.empty(cap, np.int64)
    size = heap_seed(hm, hi, hs, ht, beta, sec)

    best_c = np.zeros(2 * n, np.uint8)
    best_ll = NEG_INF
    best_i0 = np.int64(-1)
    best_i1 = np.int64(-1)
    best_edf = NEG_INF
    used = 0
    early = False
    for _ in range(l_max):
        metric, i0, size = kbest_next(hm, hi, hs, ht, size, pm, pat0, beta, bit, sec, m0, k0)
        if i0 < 0:
            break
        used += 1
        v0 = puncture(encode_info(i0, k0, m0, taps0), kept0)
        w0 = times_r(v0, r)
        lam1 = depuncture(layer1_llr(y0, y1, v0, w0, sdiag, sigma), kept1, mlen1)
        _, i1 = viterbi_info(lam1, pat1, m1, k1, n01)
        v1 = puncture(encode_info(i1, k1, m1, taps1), kept1)
        c = assemble(v0, v1, w0, sdiag)
        ll = loglik(y, c, sigma)
        d = edf_value(y, c, sigma)
        if ll > best_ll:
            best_ll = ll
            best_c[:] = c
            best_i0 = i0
            best_i1 = i1
            best_edf = d
        if d > threshold:
            best_ll = ll
            best_c[:] = c
            best_i0 = i0
            best_i1 = i1
            best_edf = d
            early = True
            break
    return best_c, best_i0, best_i1, used, early, best_ll, best_edf


@njit(cache=True)
def list_rank(llr_mother, target, l_max, out_pat, m, k, n0):
    """1-based position of ``target`` in the exact top-``l_max`` list, or 0 if absent."""
    pm = branch_metrics(llr_mother, n0, k)
    beta, bit, sec = backward(pm, out_pat, m, k)
    S = beta.shape[0]
    cap = S + l_max * k + 1
    hm = np.empty(cap)
    hi = np.empty(cap, np.int64)
    hs = np.empty(cap, np.int64)
    ht = np.empty(cap, np.int64)
    size = heap_seed(hm, hi, hs, ht, beta, sec)
    for pos in range(1, l_max + 1):
        _, info, size = kbest_next(hm, hi, hs, ht, size, pm, out_pat, beta, bit, sec, m, k)
        if info < 0:
            return 0
        if info == target:
            return pos
    return 0
