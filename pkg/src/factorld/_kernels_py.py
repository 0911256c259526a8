"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

from ._rng import bits_to_uniform

_TWO52 = np.uint64(1 << 52)


def _complement(bits):
    # 1 - u computed exactly from the same 52-bit grid
    return ((_TWO52 - (bits >> np.uint64(12))).astype(np.float64) - 0.5) * 2.0 ** -52


def _pareto_values(bits, alpha, scale, p):
    u = bits_to_uniform(bits)
    inv_alpha = 1.0 / alpha
    with np.errstate(divide="ignore"):
        log_p = np.log(p) if p > 0 else -np.inf
        log_q = np.log1p(-p) if p < 1 else -np.inf
    left = u < 1.0 - p
    if not left.any():
        return scale * np.exp(-(np.log(_complement(bits)) - log_p) * inv_alpha)
    out = np.empty_like(u)
    out[left] = -scale * np.exp(-(np.log(u[left]) - log_q) * inv_alpha)
    right = ~left
    out[right] = scale * np.exp(-(np.log(_complement(bits[right])) - log_p) * inv_alpha)
    return out


def segment_stats(values, offsets):
    values = np.asarray(values, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    counts = np.diff(offsets)
    nseg = counts.size
    head_sum = np.zeros(nseg)
    head_max = np.full(nseg, -np.inf)
    last = np.zeros(nseg)
    if nseg == 0:
        return head_sum, head_max, last
    c0 = counts[0]
    if c0 > 0 and np.all(counts == c0) and offsets[0] == 0:
        block = values[: nseg * c0].reshape(nseg, c0)
        last[:] = block[:, -1]
        if c0 > 1:
            head = block[:, :-1]
            head_sum[:] = head.sum(axis=1)
            head_max[:] = head.max(axis=1)
        return head_sum, head_max, last
    has = counts > 0
    ends = offsets[1:][has] - 1
    last[has] = values[ends]
    keep = np.zeros(values.size, dtype=bool)
    keep[offsets[0]: offsets[-1]] = True
    keep[ends] = False
    head_vals = values[keep]
    head_counts = counts - has
    nz = head_counts > 0
    if nz.any():
        starts = np.concatenate(([0], np.cumsum(head_counts)[:-1]))[nz]
        head_sum[nz] = np.add.reduceat(head_vals, starts)
        head_max[nz] = np.maximum.reduceat(head_vals, starts)
    return head_sum, head_max, last


def pareto_segment_stats(bits, offsets, alpha, scale, p):
    return segment_stats(_pareto_values(np.asarray(bits, dtype=np.uint64), alpha, scale, p), offsets)


def path_stats(sizes, offsets):
    sizes = np.asarray(sizes, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    counts = np.diff(offsets)
    nseg = counts.size
    terminal = np.zeros(nseg)
    sup = np.zeros(nseg)
    argmax = np.full(nseg, -1, dtype=np.int64)
    has = counts > 0
    if not has.any():
        return terminal, sup, argmax
    seg_of = np.repeat(np.arange(nseg), counts)
    vals = sizes[offsets[0]: offsets[-1]]
    starts = (offsets[:-1] - offsets[0])[has]
    # prefix sums restart at each segment
    prefix = np.cumsum(vals)
    base = np.zeros(nseg)
    base[has] = prefix[starts] - vals[starts]
    prefix -= base[seg_of]
    terminal[has] = prefix[offsets[1:][has] - offsets[0] - 1]
    sup[has] = np.maximum(np.maximum.reduceat(prefix, starts), 0.0)
    seg_best = np.full(nseg, -np.inf)
    seg_best[has] = np.maximum.reduceat(vals, starts)
    hit = np.flatnonzero(vals == seg_best[seg_of])
    first_seg, first_idx = np.unique(seg_of[hit], return_index=True)
    argmax[first_seg] = hit[first_idx] + offsets[0]
    return terminal, sup, argmax
