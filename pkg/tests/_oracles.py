"""Slow, independent reference implementations used as test oracles."""
from __future__ import annotations

from itertools import product

import numpy as np


def direct_convolve(generators, k, info):
    """Encode by explicit shift register: tap j of generator g multiplies u[t-j]."""
    n = len(generators)
    taps = [[(g >> (k - 1 - j)) & 1 for j in range(k)] for g in generators]
    u = list(info) + [0] * (k - 1)
    out = []
    for t in range(len(u)):
        for i in range(n):
            acc = 0
            for j in range(k):
                if t - j >= 0:
                    acc ^= taps[i][j] & u[t - j]
            out.append(acc)
    return out


def brute_free_distance(generators, k, max_len=None):
    """Minimum output weight over all nonzero terminated inputs up to ``max_len`` bits."""
    max_len = max_len or 2 * k + 6
    best = None
    for n in range(1, max_len + 1):
        for tail in product((0, 1), repeat=n - 1):
            w = sum(direct_convolve(generators, k, (1,) + tail))
            best = w if best is None else min(best, w)
    return best


def reference_viterbi(decoder, dist, survivor=True):
    """Path-list Viterbi over the decoder's metric schedule (single frame).

    ``dist`` is (F, 2^N).  Survivor paths are stored explicitly, so right
    terms read the left-transition bits straight off the stored path.
    """
    tr = decoder.trellis
    lay = decoder.layout
    sched = decoder.schedule
    n = lay.n_antennas
    S = tr.next_state.shape[0]

    def cand_index(u, bits_by_slot):
        return sum(int(b) << j for j, b in enumerate(bits_by_slot))

    def increment(t, label, path):
        total = 0.0
        for c in sched.entries(t):
            u = c.symbol
            slots = [None] * n
            for j in range(n):
                if lay.trans[u, j] == t:
                    slots[j] = (label >> lay.row[u, j]) & 1
            role = int(c.role)
            if role == 0:
                d = dist[u, cand_index(u, slots)]
            elif role == 1:
                free = [j for j in range(n) if slots[j] is None]
                d = min(dist[u, cand_index(u, [f if s is None else s for s, f in
                                               zip(slots, _fill(free, fill, n))])]
                        for fill in product((0, 1), repeat=len(free)))
            else:
                tl = int(lay.left[u])
                if survivor:
                    lab_l = path[1][tl]
                    for j in range(n):
                        if lay.trans[u, j] == tl:
                            slots[j] = (lab_l >> lay.row[u, j]) & 1
                    d = dist[u, cand_index(u, slots)]
                else:
                    free = [j for j in range(n) if slots[j] is None]
                    d = min(dist[u, cand_index(u, [f if s is None else s for s, f in
                                                   zip(slots, _fill(free, fill, n))])]
                            for fill in product((0, 1), repeat=len(free)))
            total += c.weight * d
        return total

    INF = float("inf")
    metric = [0.0] + [INF] * (S - 1)
    paths = [([], []) for _ in range(S)]  # (inputs, labels)
    for t in range(decoder.n_transitions):
        forced_zero = decoder.terminate and t >= decoder.n_info
        new_metric = [INF] * S
        new_paths = [None] * S
        for s in range(S):  # ascending state, input 0 first: strict < keeps the lower one
            if metric[s] == INF:
                continue
            for b in ((0,) if forced_zero else (0, 1)):
                ns = int(tr.next_state[s, b])
                lab = int(tr.label[s, b])
                m = metric[s] + increment(t, lab, paths[s])
                if m < new_metric[ns]:
                    new_metric[ns] = m
                    new_paths[ns] = (paths[s][0] + [b], paths[s][1] + [lab])
        metric, paths = new_metric, [p if p is not None else ([], []) for p in new_paths]
    end = 0 if decoder.terminate else int(np.argmin(metric))
    return np.array(paths[end][0][: decoder.n_info], dtype=np.uint8), metric[end]


def _fill(free, fill, n):
    out = [None] * n
    for j, f in zip(free, fill):
        out[j] = f
    return out


def search_free_distance(generators, k):
    """Dijkstra over shift-register states: cheapest detour leaving and re-entering zero.

    Builds its own state graph from the generator taps (no package code).
    """
    import heapq

    mask = (1 << k) - 1

    def step(reg, b):
        reg = ((reg << 1) | b) & mask  # reg holds the last k inputs, newest in the LSB
        w = 0
        for g in generators:
            taps = int(f"{g:0{k}b}"[::-1], 2)  # MSB of g multiplies the newest input
            w += bin(reg & taps).count("1") & 1
        return reg, w

    start, w0 = step(0, 1)
    heap = [(w0, start)]
    best = {start: w0}
    while heap:
        w, reg = heapq.heappop(heap)
        if reg & (mask >> 1) == 0:
            return w
        if w > best.get(reg, w):
            continue
        for b in (0, 1):
            nxt, dw = step(reg, b)
            if w + dw < best.get(nxt, float("inf")):
                best[nxt] = w + dw
                heapq.heappush(heap, (w + dw, nxt))
    raise RuntimeError("no path back to the zero state")
