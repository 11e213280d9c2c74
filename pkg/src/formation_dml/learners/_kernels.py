"""Compiled inner loops for tree growing and tree application."""
import numpy as np
from numba import njit


@njit(cache=True)
def _accumulate(codes, offsets, g, rows, lo, hi, hist):
    hist[:, :] = 0.0
    n_feat = codes.shape[1]
    for idx in range(lo, hi):
        r = rows[idx]
        v = g[r]
        for f in range(n_feat):
            b = offsets[f] + codes[r, f]
            hist[b, 0] += 1.0
            hist[b, 1] += v


@njit(cache=True)
def grow_tree(codes, n_bins, offsets, g, rows, max_depth, min_leaf):
    """Grow one squared-error regression tree depth-first.

    codes[r, f] is the rank of X[r, f] among the distinct values of column
    f, so "code <= b" is the same partition as "x <= threshold_b" and the
    search below is the exact greedy split search. ``rows`` (sample
    indices) is reordered in place.

    Histograms (count, sum per code) are built directly only for the root
    and for the smaller child of each split; the sibling is the parent
    minus that child.

    Returns per-node arrays: feature (-1 for leaves), split code, left,
    right, value (mean of g), count, depth.
    """
    n_feat = codes.shape[1]
    total_bins = offsets[n_feat - 1] + n_bins[n_feat - 1]
    cap = 2 ** (max_depth + 1) - 1

    feature = np.full(cap, -1, np.int64)
    split = np.zeros(cap, np.int64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, np.int64)
    depth = np.zeros(cap, np.int64)

    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    # depth-first order keeps at most two histograms live per level
    n_slots = 2 * (max_depth + 1)
    hists = np.empty((n_slots, total_bins, 2))
    free = np.arange(n_slots)[::-1].copy()
    n_free = n_slots
    slot_of = np.full(cap, -1, np.int64)
    buf = np.empty(rows.shape[0], np.int64)

    n_nodes = 1
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = rows.shape[0]
    top = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        n = hi - lo
        count[node] = n
        if n == 0:
            continue

        s = 0.0
        gmin = np.inf
        gmax = -np.inf
        for idx in range(lo, hi):
            v = g[rows[idx]]
            s += v
            if v < gmin:
                gmin = v
            if v > gmax:
                gmax = v
        value[node] = s / n
        slot = slot_of[node]
        if depth[node] >= max_depth or n < 2 * min_leaf or gmax <= gmin:
            if slot >= 0:
                free[n_free] = slot
                n_free += 1
            continue

        if slot < 0:
            n_free -= 1
            slot = free[n_free]
            _accumulate(codes, offsets, g, rows, lo, hi, hists[slot])
        hist = hists[slot]

        best = 0.0
        best_f = -1
        best_b = -1
        for f in range(n_feat):
            o = offsets[f]
            nl = 0.0
            sl = 0.0
            for b in range(n_bins[f] - 1):
                nl += hist[o + b, 0]
                sl += hist[o + b, 1]
                if nl < min_leaf:
                    continue
                nr = n - nl
                if nr < min_leaf:
                    break
                diff = sl / nl - (s - sl) / nr
                # squared-error reduction of the split
                gain = diff * diff * nl * nr / n
                if gain > best:
                    best = gain
                    best_f = f
                    best_b = b
        if best_f < 0:
            free[n_free] = slot
            n_free += 1
            continue

        wl = lo
        wr = 0
        for idx in range(lo, hi):
            r = rows[idx]
            if codes[r, best_f] <= best_b:
                rows[wl] = r
                wl += 1
            else:
                buf[wr] = r
                wr += 1
        for i in range(wr):
            rows[wl + i] = buf[i]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        split[node] = best_b
        left[node] = lc
        right[node] = rc
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1

        if depth[lc] < max_depth:
            if wl - lo <= hi - wl:
                small, big, s_lo, s_hi = lc, rc, lo, wl
            else:
                small, big, s_lo, s_hi = rc, lc, wl, hi
            n_free -= 1
            s_slot = free[n_free]
            n_free -= 1
            b_slot = free[n_free]
            _accumulate(codes, offsets, g, rows, s_lo, s_hi, hists[s_slot])
            hists[b_slot][:, :] = hist - hists[s_slot]
            slot_of[small] = s_slot
            slot_of[big] = b_slot
        free[n_free] = slot
        n_free += 1

        # right pushed first so the left child is expanded next
        st_node[top] = rc
        st_lo[top] = wl
        st_hi[top] = hi
        top += 1
        st_node[top] = lc
        st_lo[top] = lo
        st_hi[top] = wl
        top += 1

    return (feature[:n_nodes], split[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], count[:n_nodes], depth[:n_nodes])


@njit(cache=True)
def apply_codes(codes, feature, split, left, right, value, scale, out):
    """out[r] += scale * tree(codes[r])"""
    for r in range(codes.shape[0]):
        node = 0
        while feature[node] >= 0:
            if codes[r, feature[node]] <= split[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] += scale * value[node]


@njit(cache=True)
def apply_values(X, feature, threshold, left, right, value, scale, out):
    """out[r] += scale * tree(X[r])"""
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] += scale * value[node]
