"""Hot loops over flat matrix arrays.

Every function here is compiled with numba when it is available. Setting
``PTRMATRIX_DISABLE_NUMBA=1`` before import runs the identical source as plain
Python over numpy arrays, which is the reference path for the benchmark and
for backend-parity tests.

Cells are addressed by their linear index ``row * s + col``. ``nxt[idx]`` is
the decoded pointer target (linear index) or -1 for a null pointer.

Oracle state is passed as a bundle of arrays (see :class:`QueryOracle`):

    bits, nxt      the matrix (read-only)
    seen_b, seen_p per-entry "already charged" flags
    ctr            int64[4]: distinct bit reads, distinct pointer reads,
                   raw reads, transcript length
    tk, ti, tv     transcript buffers: kind (0 bit / 1 ptr), cell, value
    log_all        record repeats in the transcript (raw mode)
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = "PTRMATRIX_DISABLE_NUMBA"

_disabled = os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError(_FLAG)
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def _jit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


def pyfunc(fn):
    """The uncompiled Python body of a kernel (cheap to call from Python)."""
    return getattr(fn, "py_func", fn)


BACKEND = "numba" if NUMBA_ENABLED else "python"

# ctr slots
C_BITS = 0
C_PTRS = 1
C_RAW = 2
C_TLEN = 3

KIND_BIT = 0
KIND_PTR = 1

# milestone trace end states
END_HIT_ONE = 0
END_NULL = 1
END_BUDGET = 2

# loop exit states
LOOP_SMALL = 0
LOOP_ITERS = 1
LOOP_NEED_CAPACITY = 2

MEMO_UNKNOWN = -2
MEMO_STOP = -1


@_jit
def read_bit(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, idx):
    v = bits[idx]
    ctr[2] += 1
    fresh = not seen_b[idx]
    if fresh:
        seen_b[idx] = True
        ctr[0] += 1
    if fresh or log_all:
        p = ctr[3]
        tk[p] = 0
        ti[p] = idx
        tv[p] = v
        ctr[3] = p + 1
    return v


@_jit
def read_ptr(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, idx):
    v = nxt[idx]
    ctr[2] += 1
    fresh = not seen_p[idx]
    if fresh:
        seen_p[idx] = True
        ctr[1] += 1
    if fresh or log_all:
        p = ctr[3]
        tk[p] = 1
        ti[p] = idx
        tv[p] = v
        ctr[3] = p + 1
    return v


@_jit
def chain_is_valid(bits, nxt, s, start):
    """Full-knowledge check of the length-s chain starting at ``start``."""
    if bits[start] != 1:
        return False
    cols = np.zeros(s, dtype=np.bool_)
    cols[start % s] = True
    cur = start
    for _ in range(1, s):
        p = nxt[cur]
        if p < 0:
            return False
        cur = p
        if bits[cur] != 0:
            return False
        c = cur % s
        # a revisited cell is also a revisited column
        if cols[c]:
            return False
        cols[c] = True
    return nxt[cur] < 0


@_jit
def evaluate(bits, nxt, s):
    special = -1
    for c in range(s):
        all_one = True
        for r in range(s):
            if bits[r * s + c] == 0:
                all_one = False
                break
        if all_one:
            if special >= 0:
                return 0
            special = c
    if special < 0:
        return 0
    for r in range(s):
        idx = r * s + special
        if nxt[idx] >= 0:
            if chain_is_valid(bits, nxt, s, idx):
                return 1
            return 0
    return 0


@_jit
def span_mask(bits, nxt, s, c, out):
    """Mark in ``out`` every column covered by column ``c`` (plus ``c``)."""
    visited = np.zeros(s * s, dtype=np.bool_)
    out[c] = True
    for r in range(s):
        cur = r * s + c
        if bits[cur] != 0:
            continue
        while not visited[cur]:
            visited[cur] = True
            p = nxt[cur]
            if p < 0 or bits[p] != 0:
                break
            out[p % s] = True
            cur = p


@_jit
def remove_column(members, where, cst, col):
    pos = where[col]
    if pos < 0:
        return
    last = cst[0] - 1
    moved = members[last]
    members[pos] = moved
    where[moved] = pos
    members[last] = col
    where[col] = -1
    cst[0] = last


@_jit
def milestone_walk(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all,
                   s, members, where, cst, start, budget_factor, mark, out_cols):
    """One budget-disciplined pointer walk; removes the seen columns from C.

    Returns (end state, columns discarded, pointer steps, reads issued).
    ``mark`` must be all False on entry and is left all False.
    """
    raw0 = ctr[2]
    b = read_bit(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, start)
    if b == 1:
        return END_HIT_ONE, 0, 0, ctr[2] - raw0
    csize = cst[0]
    col = start % s
    mark[col] = True
    out_cols[0] = col
    nd = 1
    step = 0
    end = END_BUDGET
    cur = start
    while step * csize <= budget_factor * s * nd:
        p = read_ptr(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, cur)
        step += 1
        if p < 0:
            end = END_NULL
            break
        cur = p
        b = read_bit(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, cur)
        col = cur % s
        if b == 0 and where[col] >= 0 and not mark[col]:
            mark[col] = True
            out_cols[nd] = col
            nd += 1
    for k in range(nd):
        mark[out_cols[k]] = False
        remove_column(members, where, cst, out_cols[k])
    return end, nd, step, ctr[2] - raw0


@_jit
def one_sided_loop(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all,
                   s, members, where, cst, u_col, u_row, t0, iters, threshold,
                   budget_factor, mark, out_cols, per_call_cap, tally):
    """Main sampling loop; resumable from iteration ``t0``.

    ``tally`` (int64[5]) accumulates: traces started on a 0-bit, budget
    exhaustions, null endings, accounting violations, max reads in one call.
    Returns (next iteration, exit state).
    """
    t = t0
    cap = tk.shape[0]
    while t < iters:
        csize = cst[0]
        if csize < threshold:
            return t, LOOP_SMALL
        if ctr[3] + per_call_cap > cap:
            return t, LOOP_NEED_CAPACITY
        k = int(u_col[t] * csize)
        if k >= csize:
            k = csize - 1
        j = members[k]
        i = int(u_row[t] * s)
        if i >= s:
            i = s - 1
        end, nd, steps, q = milestone_walk(
            bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all,
            s, members, where, cst, i * s + j, budget_factor, mark, out_cols)
        if end != END_HIT_ONE:
            tally[0] += 1
            if end == END_BUDGET:
                tally[1] += 1
            else:
                tally[2] += 1
            if q * csize > 2.0 * budget_factor * s * nd + 3.0 * csize:
                tally[3] += 1
        if q > tally[4]:
            tally[4] = q
        t += 1
    return t, LOOP_ITERS


@_jit
def span_walk(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all,
              s, cur, memo, vstamp, stamp, colmark, cols_out, counts):
    """Trace bit-0 cells from the 0-cell ``cur``, reusing resolved successors.

    ``memo[x]`` is the next bit-0 cell after x, MEMO_STOP when the walk ends
    at x, MEMO_UNKNOWN when x's pointer has not been resolved yet. Only
    unresolved cells cost queries. ``counts`` = [columns marked, cells
    resolved]. Returns (status, cell): status 1 means the transcript buffer
    needs room and the walk must be resumed from ``cell``.
    """
    cap = tk.shape[0]
    while True:
        if vstamp[cur] == stamp:
            return 0, cur
        if memo[cur] == MEMO_UNKNOWN and ctr[3] + 2 > cap:
            return 1, cur
        vstamp[cur] = stamp
        c = cur % s
        if not colmark[c]:
            colmark[c] = True
            cols_out[counts[0]] = c
            counts[0] += 1
        if memo[cur] == MEMO_UNKNOWN:
            p = read_ptr(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, cur)
            if p < 0:
                memo[cur] = MEMO_STOP
            else:
                b = read_bit(bits, nxt, seen_b, seen_p, ctr, tk, ti, tv, log_all, p)
                memo[cur] = p if b == 0 else MEMO_STOP
            counts[1] += 1
        nx = memo[cur]
        if nx < 0:
            return 0, cur
        cur = nx


@_jit
def bad_index_mask(xs, factor):
    """Bad-index flags via suffix maxima of ell*prefix - factor*N*k.

    Index I (0-based) is bad iff some window [I, k) has
    ell * sum > factor * (k - I) * N.
    """
    ell = xs.shape[0]
    total = 0.0
    for i in range(ell):
        total += xs[i]
    pref = np.empty(ell + 1)
    pref[0] = 0.0
    for i in range(ell):
        pref[i + 1] = pref[i] + xs[i]
    bad = np.zeros(ell, dtype=np.bool_)
    best = -np.inf
    for k in range(ell, 0, -1):
        g = ell * pref[k] - factor * total * k
        if g > best:
            best = g
        h = ell * pref[k - 1] - factor * total * (k - 1)
        if best > h:
            bad[k - 1] = True
    return bad
