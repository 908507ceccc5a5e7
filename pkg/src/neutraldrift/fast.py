"""Compiled search kernels (numba).

The same operators as :mod:`neutraldrift.mutation` and
:mod:`neutraldrift.semantics`, on a flat array encoding, so the 1+lambda
loop runs at native speed:

* ``kinds``: int8[N], ``-1`` input, ``-2`` output, else ``FunctionKind`` value
* ``edges``: int32[N, 2], unused slots hold ``-1``
* truth-table columns: uint64[..., W] with ``W = ceil(2**i / 64)``

Randomness comes from a splitmix64 stream whose state is a uint64[1] array
owned by the caller, so kernels have no hidden global state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .circuit_graph import FunctionKind, Individual
from .snd_rewrites import RuleId
from .semantics import input_patterns

INPUT = -1
OUTPUT = -2
_NOT = int(FunctionKind.NOT)
_KINDS = tuple(FunctionKind)
_WORD = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


# -- rng ----------------------------------------------------------------------


def new_state(seed: int) -> np.ndarray:
    return np.array([seed & _WORD], dtype=np.uint64)


@njit(cache=True)
def next_u64(state):
    z = state[0] + _GOLDEN
    state[0] = z
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def uniform(state):
    return float(next_u64(state) >> _S11) * _INV53


@njit(cache=True)
def randbelow(state, n):
    r = int(uniform(state) * n)
    return r if r < n else n - 1


# -- encoding ----------------------------------------------------------------


def encode(ind: Individual) -> tuple[np.ndarray, np.ndarray]:
    first_out = ind.first_output
    klist = [INPUT] * ind.num_inputs
    elist = [(-1, -1)] * ind.num_inputs
    for v in range(ind.num_inputs, ind.num_nodes):
        e = ind.edges[v]
        if v >= first_out:
            klist.append(OUTPUT)
            elist.append((e[0], -1))
        else:
            klist.append(int(ind.kinds[v]))
            elist.append(e if len(e) == 2 else (e[0], -1))
    return np.array(klist, dtype=np.int8), np.array(elist, dtype=np.int32).reshape(-1, 2)


def decode(kinds: np.ndarray, edges: np.ndarray, num_inputs: int, num_outputs: int) -> Individual:
    n = len(kinds)
    n_fn = n - num_inputs - num_outputs
    klist = kinds.tolist()
    elist = edges.tolist()
    out_kinds: list = [None] * num_inputs
    out_edges: list = [()] * num_inputs
    for v in range(num_inputs, num_inputs + n_fn):
        k = _KINDS[klist[v]]
        out_kinds.append(k)
        out_edges.append(tuple(elist[v][:1]) if k == _NOT else tuple(elist[v]))
    for v in range(num_inputs + n_fn, n):
        out_kinds.append(None)
        out_edges.append((elist[v][0],))
    return Individual(num_inputs, num_outputs, n_fn, out_kinds, out_edges)


def int_to_words(x: int, words: int) -> np.ndarray:
    return np.array([(x >> (64 * w)) & _WORD for w in range(words)], dtype=np.uint64)


def words_to_int(ws) -> int:
    return sum(int(w) << (64 * i) for i, w in enumerate(ws))


def word_count(num_inputs: int) -> int:
    return max(1, (1 << num_inputs) // 64)


def pack_inputs(num_inputs: int) -> tuple[np.ndarray, np.ndarray]:
    """Input coordinate columns and the valid-row mask, as word arrays."""
    w = word_count(num_inputs)
    pats = np.zeros((num_inputs, w), dtype=np.uint64)
    for k, col in enumerate(input_patterns(num_inputs)):
        pats[k] = int_to_words(col, w)
    mask = int_to_words((1 << (1 << num_inputs)) - 1, w)
    return pats, mask


def pack_columns(columns, num_inputs: int) -> np.ndarray:
    w = word_count(num_inputs)
    out = np.zeros((len(columns), w), dtype=np.uint64)
    for j, col in enumerate(columns):
        out[j] = int_to_words(col, w)
    return out


# -- graph kernels -------------------------------------------------------------


@njit(cache=True)
def arity(k):
    if k == -1:
        return 0
    if k == -2 or k == 2:
        return 1
    return 2


@njit(cache=True)
def ancestor_flags(kinds, edges, node, flags):
    """flags[v] = v == node or v has a directed path to node."""
    n = kinds.shape[0]
    flags[:] = False
    flags[node] = True
    if kinds[node] == -2:
        return
    # CSR of parents
    start = np.zeros(n + 1, dtype=np.int32)
    for v in range(n):
        for p in range(arity(kinds[v])):
            start[edges[v, p] + 1] += 1
    for v in range(n):
        start[v + 1] += start[v]
    fill = start[:-1].copy()
    parents = np.empty(start[n], dtype=np.int32)
    for v in range(n):
        for p in range(arity(kinds[v])):
            t = edges[v, p]
            parents[fill[t]] = v
            fill[t] += 1
    stack = np.empty(n, dtype=np.int32)
    stack[0] = node
    top = 1
    while top > 0:
        top -= 1
        u = stack[top]
        for j in range(start[u], start[u + 1]):
            p = parents[j]
            if not flags[p]:
                flags[p] = True
                stack[top] = p
                top += 1


@njit(cache=True)
def mutate_edge(kinds, edges, n_sources, v, pos, state, flags):
    """Redirect edge (v, pos) to a uniform acyclicity-safe node; False if none."""
    old = edges[v, pos]
    ancestor_flags(kinds, edges, v, flags)
    count = 0
    for u in range(n_sources):
        if not flags[u] and u != old:
            count += 1
    if count == 0:
        return False
    pick = randbelow(state, count)
    for u in range(n_sources):
        if not flags[u] and u != old:
            if pick == 0:
                edges[v, pos] = u
                return True
            pick -= 1
    return False


@njit(cache=True)
def mutate_function(kinds, edges, n_sources, v, fs, state, flags):
    old = kinds[v]
    m = 0
    for k in fs:
        if k != old:
            m += 1
    if m == 0:
        return False
    pick = randbelow(state, m)
    new = old
    for k in fs:
        if k != old:
            if pick == 0:
                new = k
                break
            pick -= 1
    a_old = arity(old)
    a_new = arity(new)
    kinds[v] = new
    if a_new > a_old:
        ancestor_flags(kinds, edges, v, flags)
        allowed = 0
        for u in range(n_sources):
            if not flags[u]:
                allowed += 1
        for p in range(a_old, a_new):
            pick = randbelow(state, allowed)
            for u in range(n_sources):
                if not flags[u]:
                    if pick == 0:
                        edges[v, p] = u
                        break
                    pick -= 1
    elif a_new < a_old:
        # a_old == 2, a_new == 1: delete one of the two edges uniformly
        if randbelow(state, 2) == 0:
            edges[v, 0] = edges[v, 1]
        edges[v, 1] = -1
    return True


@njit(cache=True)
def next_hit(i, log_q, state):
    """Index of the next Bernoulli success after i (geometric gap)."""
    return i + 1 + int(np.log(1.0 - uniform(state)) / log_q)


@njit(cache=True)
def mutate_genes(kinds, edges, n_in, n_fn, rate, fs, state, flags, parent_active):
    """Per-gene mutation; returns (attempts, whether any active gene was hit)."""
    n = kinds.shape[0]
    n_sources = n_in + n_fn
    attempts = 0
    hit_active = False
    if rate <= 0.0:
        return 0, False
    all_genes = rate >= 1.0
    log_q = np.log1p(-rate) if not all_genes else -1.0

    i = -1
    while True:
        i = i + 1 if all_genes else next_hit(i, log_q, state)
        if i >= n_fn:
            break
        v = n_in + i
        mutate_function(kinds, edges, n_sources, v, fs, state, flags)
        attempts += 1
        hit_active = hit_active or parent_active[v]

    n_edges = 0
    for v in range(n_in, n):
        n_edges += arity(kinds[v])
    i = -1
    v = n_in
    base = 0
    while True:
        i = i + 1 if all_genes else next_hit(i, log_q, state)
        if i >= n_edges:
            break
        while i >= base + arity(kinds[v]):
            base += arity(kinds[v])
            v += 1
        mutate_edge(kinds, edges, n_sources, v, i - base, state, flags)
        attempts += 1
        hit_active = hit_active or parent_active[v]
    return attempts, hit_active


# -- evaluation ----------------------------------------------------------------


@njit(cache=True)
def active_flags(kinds, edges, n_in, n_fn, active):
    """Mark nodes reachable from outputs; returns the active function-node count."""
    n = kinds.shape[0]
    active[:] = False
    stack = np.empty(n, dtype=np.int32)
    top = 0
    for o in range(n_in + n_fn, n):
        active[o] = True
        t = edges[o, 0]
        if not active[t]:
            active[t] = True
            stack[top] = t
            top += 1
    while top > 0:
        top -= 1
        u = stack[top]
        for p in range(arity(kinds[u])):
            t = edges[u, p]
            if not active[t]:
                active[t] = True
                stack[top] = t
                top += 1
    size = 0
    for v in range(n_in, n_in + n_fn):
        if active[v]:
            size += 1
    return size


@njit(cache=True)
def node_values(kinds, edges, n_in, n_fn, pats, mask, vals, done):
    """Fill vals[v] for every node reachable from an output (post-order DFS)."""
    n = kinds.shape[0]
    w = mask.shape[0]
    done[:] = False
    for v in range(n_in):
        vals[v] = pats[v]
        done[v] = True
    stack = np.empty(n, dtype=np.int32)
    for o in range(n_in + n_fn, n):
        root = edges[o, 0]
        if done[root]:
            continue
        top = 1
        stack[0] = root
        while top > 0:
            u = stack[top - 1]
            if done[u]:
                top -= 1
                continue
            k = kinds[u]
            pending = False
            for p in range(arity(k)):
                t = edges[u, p]
                if not done[t]:
                    stack[top] = t
                    top += 1
                    pending = True
            if pending:
                continue
            a = edges[u, 0]
            b = edges[u, 1]
            for j in range(w):
                if k == 0:
                    x = vals[a, j] & vals[b, j]
                elif k == 1:
                    x = vals[a, j] | vals[b, j]
                elif k == 2:
                    x = vals[a, j] ^ mask[j]
                elif k == 3:
                    x = (vals[a, j] & vals[b, j]) ^ mask[j]
                else:
                    x = (vals[a, j] | vals[b, j]) ^ mask[j]
                vals[u, j] = x
            done[u] = True
            top -= 1


@njit(cache=True)
def popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True)
def output_columns(kinds, edges, n_in, n_fn, pats, mask, vals, done, out):
    node_values(kinds, edges, n_in, n_fn, pats, mask, vals, done)
    n = kinds.shape[0]
    for o in range(n_in + n_fn, n):
        out[o - n_in - n_fn] = vals[edges[o, 0]]


@njit(cache=True)
def errors(kinds, edges, n_in, n_fn, pats, mask, target, vals, done):
    node_values(kinds, edges, n_in, n_fn, pats, mask, vals, done)
    n = kinds.shape[0]
    total = 0
    for o in range(n_in + n_fn, n):
        src = edges[o, 0]
        row = target[o - n_in - n_fn]
        for j in range(mask.shape[0]):
            total += popcount(vals[src, j] ^ row[j])
    return total


# -- rewrites ------------------------------------------------------------------
#
# Compiled counterparts of the DeMorgan and identity rules in
# :mod:`neutraldrift.snd_rewrites`, with the same two-stage selection. Rule codes
# index COMPILED_RULES. Pattern-root categories:
#   0 NOT over AND(a != b)      1 NOT over OR(a != b)
#   2 OR(NOT a, NOT b)          3 AND(NOT a, NOT b)     (5 distinct nodes)
#   4 AND(v, v)                 5 OR(v, v)              6 NOT over NOT

COMPILED_RULES = (
    RuleId.DeMorganF1, RuleId.DeMorganF2, RuleId.DeMorganR1, RuleId.DeMorganR2,
    RuleId.IdAndF, RuleId.IdAndR, RuleId.IdOrF, RuleId.IdOrR, RuleId.IdNotF, RuleId.IdNotR,
)
_NEEDS = np.array([2, 2, 1, 1, 1, 0, 1, 0, 2, 0], dtype=np.int64)
# root category per code, -1 for rules matched on any active edge
_CATEGORY = np.array([0, 1, 2, 3, -1, 4, -1, 5, -1, 6], dtype=np.int64)


def rule_codes(rules) -> np.ndarray | None:
    """Kernel codes for ``rules``, or None if some rule has no kernel."""
    try:
        return np.array([COMPILED_RULES.index(r) for r in rules], dtype=np.int64)
    except ValueError:
        return None


@njit(cache=True)
def _nth_in_edge(kinds, edges, n_in, active, x, j):
    """The j-th active edge (in scan order) that points at x, packed as u*2+p."""
    for u in range(n_in, kinds.shape[0]):
        if active[u]:
            for p in range(arity(kinds[u])):
                if edges[u, p] == x:
                    if j == 0:
                        return u * 2 + p
                    j -= 1
    return -1


@njit(cache=True)
def rewrite(kinds, edges, n_in, n_fn, rules, active, state):
    """Apply one rule from ``rules`` at a uniform match; returns its code or -1.

    ``active`` is refreshed to the post-rewrite activity.
    """
    needs = _NEEDS
    category = _CATEGORY
    n = kinds.shape[0]
    first_out = n_in + n_fn
    active_flags(kinds, edges, n_in, n_fn, active)
    neutral = np.empty(n_fn, dtype=np.int32)
    k = 0
    for v in range(n_in, first_out):
        if not active[v]:
            neutral[k] = v
            k += 1

    indeg = np.zeros(n, dtype=np.int64)
    n_edges = 0
    for u in range(n_in, n):
        if active[u]:
            for p in range(arity(kinds[u])):
                indeg[edges[u, p]] += 1
                n_edges += 1

    roots = np.empty((7, n_fn), dtype=np.int32)
    counts = np.zeros(7, dtype=np.int64)
    for v in range(n_in, first_out):
        if not active[v]:
            continue
        kv = kinds[v]
        if kv == 2:
            m = edges[v, 0]
            if n_in <= m < first_out:
                km = kinds[m]
                c = -1
                if km == 2:
                    c = 6
                elif (km == 0 or km == 1) and edges[m, 0] != edges[m, 1]:
                    c = km
                if c >= 0:
                    roots[c, counts[c]] = v
                    counts[c] += 1
            continue
        if kv != 0 and kv != 1:
            continue
        a = edges[v, 0]
        b = edges[v, 1]
        c = -1
        if a == b:
            c = 4 + kv
        elif n_in <= a < first_out and n_in <= b < first_out and kinds[a] == 2 and kinds[b] == 2:
            ta = edges[a, 0]
            tb = edges[b, 0]
            if ta != tb and ta != b and tb != a:
                c = 3 - kv
        if c >= 0:
            roots[c, counts[c]] = v
            counts[c] += 1

    sites = np.zeros(rules.shape[0], dtype=np.int64)
    n_ok = 0
    for i in range(rules.shape[0]):
        code = rules[i]
        if k < needs[code]:
            continue
        c = category[code]
        if c < 0:
            sites[i] = n_edges
        elif c < 4:
            sites[i] = counts[c]
        else:
            total = 0
            for j in range(counts[c]):
                total += indeg[roots[c, j]]
            sites[i] = total
        if sites[i] > 0:
            n_ok += 1
    if n_ok == 0:
        return -1

    pick = randbelow(state, n_ok)
    chosen = -1
    for i in range(rules.shape[0]):
        if sites[i] > 0:
            if pick == 0:
                chosen = i
                break
            pick -= 1
    code = rules[chosen]
    s = randbelow(state, sites[chosen])
    w1 = -1
    w2 = -1
    if needs[code] >= 1:
        j1 = randbelow(state, k)
        w1 = neutral[j1]
        if needs[code] == 2:
            j2 = randbelow(state, k - 1)
            if j2 >= j1:
                j2 += 1
            w2 = neutral[j2]

    c = category[code]
    if c < 0:
        # s-th active edge
        u = n_in
        while True:
            if active[u]:
                ar = arity(kinds[u])
                if s < ar:
                    break
                s -= ar
            u += 1
        p = s
        v = edges[u, p]
        if code == 8:
            kinds[w1] = 2
            edges[w1, 0] = w2
            edges[w1, 1] = -1
            kinds[w2] = 2
            edges[w2, 0] = v
            edges[w2, 1] = -1
        else:
            kinds[w1] = 0 if code == 4 else 1
            edges[w1, 0] = v
            edges[w1, 1] = v
        edges[u, p] = w1
    elif c < 2:
        r = roots[c, s]
        m = edges[r, 0]
        kinds[w1] = 2
        edges[w1, 0] = edges[m, 0]
        edges[w1, 1] = -1
        kinds[w2] = 2
        edges[w2, 0] = edges[m, 1]
        edges[w2, 1] = -1
        kinds[r] = 1 - c
        edges[r, 0] = w1
        edges[r, 1] = w2
    elif c < 4:
        r = roots[c, s]
        kinds[w1] = c - 2
        edges[w1, 0] = edges[edges[r, 0], 0]
        edges[w1, 1] = edges[edges[r, 1], 0]
        kinds[r] = 2
        edges[r, 0] = w1
        edges[r, 1] = -1
    else:
        x = -1
        for j in range(counts[c]):
            x = roots[c, j]
            if s < indeg[x]:
                break
            s -= indeg[x]
        h = _nth_in_edge(kinds, edges, n_in, active, x, s)
        v = edges[x, 0]
        if c == 6:
            v = edges[v, 0]
        edges[h // 2, h % 2] = v
    active_flags(kinds, edges, n_in, n_fn, active)
    return code


# -- search loop ------------------------------------------------------------------


@njit(cache=True)
def run_generations(
    pk, pe, p_active, p_fit, lam, rate, fs, n_in, n_fn, pats, mask, target, state,
    max_generations, rules,
):
    """Up to ``max_generations`` of 1+lambda with neutral acceptance.

    Each generation first rewrites the parent with a rule from ``rules``
    (kernel codes, may be empty). The parent arrays are updated in place.
    Stops early on a perfect parent. Returns (fitness, generations run, sum
    of survivor active sizes, rewrites applied).
    """
    n = pk.shape[0]
    ck = np.empty((lam, n), dtype=np.int8)
    ce = np.empty((lam, n, 2), dtype=np.int32)
    ca = np.empty((lam, n), dtype=np.bool_)
    cfit = np.empty(lam, dtype=np.int64)
    csize = np.empty(lam, dtype=np.int64)
    flags = np.empty(n, dtype=np.bool_)
    done = np.empty(n, dtype=np.bool_)
    vals = np.empty((n, mask.shape[0]), dtype=np.uint64)
    tied = np.empty(lam, dtype=np.int64)

    p_size = 0
    for v in range(n_in, n_in + n_fn):
        if p_active[v]:
            p_size += 1

    fit = p_fit
    gens = 0
    size_sum = 0
    snd = 0
    while gens < max_generations and fit > 0:
        gens += 1
        if rules.shape[0] > 0 and rewrite(pk, pe, n_in, n_fn, rules, p_active, state) >= 0:
            snd += 1
            p_size = 0
            for v in range(n_in, n_in + n_fn):
                if p_active[v]:
                    p_size += 1
        for c in range(lam):
            ck[c] = pk
            ce[c] = pe
            _, hit = mutate_genes(ck[c], ce[c], n_in, n_fn, rate, fs, state, flags, p_active)
            if hit:
                cfit[c] = errors(ck[c], ce[c], n_in, n_fn, pats, mask, target, vals, done)
                csize[c] = active_flags(ck[c], ce[c], n_in, n_fn, ca[c])
            else:
                cfit[c] = fit
                ca[c] = p_active
                csize[c] = p_size
        best = cfit[0]
        for c in range(1, lam):
            if cfit[c] < best:
                best = cfit[c]
        if best <= fit:
            m = 0
            for c in range(lam):
                if cfit[c] == best:
                    tied[m] = c
                    m += 1
            c = tied[0] if m == 1 else tied[randbelow(state, m)]
            pk[:] = ck[c]
            pe[:] = ce[c]
            p_active[:] = ca[c]
            p_size = csize[c]
            fit = best
        size_sum += p_size
    return fit, gens, size_sum, snd
