"""Compiled inner loops for the trellis decoders."""
from __future__ import annotations

import numpy as np
from numba import njit

FULL = 0
LEFT = 1
RIGHT = 2


@njit(cache=True)
def viterbi_batch(dist, lmask, c_sym, c_tl, c_map, c_lmap, c_role, c_weight, offsets,
                  use_survivor, label, prev_state, prev_input, terminate, out_bits, out_metric):
    """Viterbi over a batch of frames sharing one layout and schedule.

    dist[f, u, a]: squared distance of super-symbol u to candidate a (bit j
    of a drives antenna j).  The branch metric of transition t is the sum
    of its scheduled contributions.  ``c_map[c, lab]`` turns a branch label
    into the candidate bits it fixes; survivor-assisted RIGHT terms add
    ``c_lmap[c, lab_left]`` where ``lab_left`` is the left transition's
    label on the survivor entering the departing state.

    ACS runs per next state over its two incoming branches, which
    ``prev_state`` lists in ascending order; ties keep the first.
    """
    n_frames, n_sym, n_cand = dist.shape
    n_states = prev_state.shape[0]
    n_trans = offsets.shape[0] - 1
    n_lab = c_map.shape[1]
    full = n_cand - 1
    p0 = prev_state[:, 0].copy()
    p1 = prev_state[:, 1].copy()
    b0 = prev_input[:, 0].copy()
    b1 = prev_input[:, 1].copy()
    l0 = np.empty(n_states, dtype=np.int64)
    l1 = np.empty(n_states, dtype=np.int64)
    for ns in range(n_states):
        l0[ns] = label[p0[ns], b0[ns]]
        l1[ns] = label[p1[ns], b1[ns]]
    min_l = np.empty((n_sym, n_cand))
    min_r = np.empty((n_sym, n_cand))
    pm = np.empty(n_states)
    new_pm = np.empty(n_states)
    extra = np.zeros((n_states, 2))
    decision = np.zeros((n_trans, n_states), dtype=np.uint8)
    base = np.empty(n_lab)
    surv_c = np.empty(max(c_role.shape[0], 1), dtype=np.int64)
    inf = np.inf
    for f in range(n_frames):
        d = dist[f]
        for u in range(n_sym):
            lm = lmask[u]
            rm = full ^ lm
            for a in range(n_cand):
                min_l[u, a] = inf
                min_r[u, a] = inf
            for a in range(n_cand):
                v = d[u, a]
                if v < min_l[u, a & lm]:
                    min_l[u, a & lm] = v
                if v < min_r[u, a & rm]:
                    min_r[u, a & rm] = v
        for s in range(n_states):
            pm[s] = inf
        pm[0] = 0.0
        for t in range(n_trans):
            c0 = offsets[t]
            c1 = offsets[t + 1]
            # state-independent part of the branch metric, per label
            for lab in range(n_lab):
                acc = 0.0
                for c in range(c0, c1):
                    u = c_sym[c]
                    role = c_role[c]
                    if role == FULL:
                        acc += c_weight[c] * d[u, c_map[c, lab]]
                    elif role == LEFT:
                        acc += c_weight[c] * min_l[u, c_map[c, lab]]
                    elif not use_survivor:
                        acc += c_weight[c] * min_r[u, c_map[c, lab]]
                base[lab] = acc
            n_surv = 0
            if use_survivor:
                for c in range(c0, c1):
                    if c_role[c] == RIGHT:
                        surv_c[n_surv] = c
                        n_surv += 1
            if n_surv == 0:
                for ns in range(n_states):
                    m0 = pm[p0[ns]] + base[l0[ns]]
                    m1 = pm[p1[ns]] + base[l1[ns]]
                    choose = m1 < m0
                    new_pm[ns] = m1 if choose else m0
                    decision[t, ns] = choose
            else:
                for s in range(n_states):
                    extra[s, 0] = 0.0
                    extra[s, 1] = 0.0
                    if pm[s] == inf:
                        continue
                    for k in range(n_surv):
                        c = surv_c[k]
                        u = c_sym[c]
                        w = c_weight[c]
                        tl = c_tl[c]
                        st = s
                        for tau in range(t - 1, tl, -1):
                            st = p1[st] if decision[tau, st] else p0[st]
                        lab_l = l1[st] if decision[tl, st] else l0[st]
                        al = c_lmap[c, lab_l]
                        extra[s, 0] += w * d[u, al | c_map[c, label[s, 0]]]
                        extra[s, 1] += w * d[u, al | c_map[c, label[s, 1]]]
                for ns in range(n_states):
                    m0 = pm[p0[ns]] + base[l0[ns]] + extra[p0[ns], b0[ns]]
                    m1 = pm[p1[ns]] + base[l1[ns]] + extra[p1[ns], b1[ns]]
                    choose = m1 < m0
                    new_pm[ns] = m1 if choose else m0
                    decision[t, ns] = choose
            for s in range(n_states):
                pm[s] = new_pm[s]
        st = 0
        if not terminate:
            for s in range(1, n_states):
                if pm[s] < pm[st]:
                    st = s
        out_metric[f] = pm[st]
        for tau in range(n_trans - 1, -1, -1):
            if decision[tau, st]:
                out_bits[f, tau] = b1[st]
                st = p1[st]
            else:
                out_bits[f, tau] = b0[st]
                st = p0[st]


@njit(cache=True)
def segment_viterbi_batch(dist, trans, row, seg_start, seg_len, seg_sym_off, seg_syms,
                          next_state, label, terminate, out_bits, out_metric):
    """Exact ML Viterbi on a trellis whose branches are whole segments.

    Segments are runs of transitions that no super-symbol straddles, so
    every segment branch metric is an exact sum of symbol distances.
    """
    n_frames = dist.shape[0]
    n_states = next_state.shape[0]
    n_seg = seg_start.shape[0]
    max_len = 0
    for g in range(n_seg):
        if seg_len[g] > max_len:
            max_len = seg_len[g]
    pm = np.empty(n_states)
    new_pm = np.empty(n_states)
    surv_prev = np.zeros((n_seg, n_states), dtype=np.int64)
    surv_x = np.zeros((n_seg, n_states), dtype=np.int64)
    labs = np.zeros(max(max_len, 1), dtype=np.int64)
    inf = np.inf
    for f in range(n_frames):
        d = dist[f]
        for s in range(n_states):
            pm[s] = inf
        pm[0] = 0.0
        for g in range(n_seg):
            t0 = seg_start[g]
            glen = seg_len[g]
            for s in range(n_states):
                new_pm[s] = inf
            for s in range(n_states):
                if pm[s] == inf:
                    continue
                for x in range(1 << glen):
                    st = s
                    for j in range(glen):
                        b = (x >> j) & 1
                        labs[j] = label[st, b]
                        st = next_state[st, b]
                    m = pm[s]
                    for k in range(seg_sym_off[g], seg_sym_off[g + 1]):
                        u = seg_syms[k]
                        a = 0
                        for j in range(trans.shape[1]):
                            a |= ((labs[trans[u, j] - t0] >> row[u, j]) & 1) << j
                        m += d[u, a]
                    if m < new_pm[st]:
                        new_pm[st] = m
                        surv_prev[g, st] = s
                        surv_x[g, st] = x
            for s in range(n_states):
                pm[s] = new_pm[s]
        st = 0
        if not terminate:
            for s in range(1, n_states):
                if pm[s] < pm[st]:
                    st = s
        out_metric[f] = pm[st]
        for g in range(n_seg - 1, -1, -1):
            x = surv_x[g, st]
            for j in range(seg_len[g]):
                out_bits[f, seg_start[g] + j] = (x >> j) & 1
            st = surv_prev[g, st]
