"""Primal network simplex for the dense transportation problem.

Graph: supply nodes ``0..n-1``, demand nodes ``n..n+m-1`` and an artificial
root ``n+m``.  Real arc ``e = i*m + j`` goes from supply ``i`` to demand
``n+j``.  Each supply node also has an artificial arc to the root and the
root has one to every demand node; those start as a spanning tree (the
big-M start) carrying all the mass.

The tree is stored with parent pointers, the arc to the parent, depths,
node potentials, and doubly-linked child lists so that a pivot only touches
the subtree being re-hung.  Entering arcs come from block pricing; leaving
arcs follow the strongly-feasible-tree rule (last blocking arc met when
walking the cycle in its orientation from the apex), which rules out
cycling on degenerate pivots.

Potentials follow ``reduced_cost(a -> b) = cost + pi[a] - pi[b]``.
"""

import math

import numpy as np
from numba import njit

OPTIMAL = 0
ITERATION_LIMIT = 1


@njit(cache=True, inline="always")
def _src(e, n, m, n_real, root):
    if e < n_real:
        return e // m
    if e < n_real + n:
        return e - n_real
    return root


@njit(cache=True, inline="always")
def _cost(e, C, m, n_real, art):
    if e < n_real:
        return C[e // m, e % m]
    return art


@njit(cache=True)
def _unlink(v, parent, first_child, next_sib, prev_sib):
    pa = parent[v]
    if prev_sib[v] >= 0:
        next_sib[prev_sib[v]] = next_sib[v]
    else:
        first_child[pa] = next_sib[v]
    if next_sib[v] >= 0:
        prev_sib[next_sib[v]] = prev_sib[v]
    next_sib[v] = -1
    prev_sib[v] = -1


@njit(cache=True)
def _link(v, pa, parent, first_child, next_sib, prev_sib):
    parent[v] = pa
    f = first_child[pa]
    next_sib[v] = f
    prev_sib[v] = -1
    if f >= 0:
        prev_sib[f] = v
    first_child[pa] = v


@njit(cache=True)
def network_simplex(p, q, C, tol, max_pivots):
    """Solve ``min <C, M>`` s.t. ``M 1 = p``, ``M^T 1 = q``, ``M >= 0``.

    Returns ``(flow, pi, status, n_pivots)`` where ``flow`` holds all arcs
    (real arcs first, row-major) and ``pi`` the node potentials.
    """
    n = p.size
    m = q.size
    n_real = n * m
    n_arcs = n_real + n + m
    root = n + m
    n_nodes = n + m + 1

    maxc = 0.0
    for i in range(n):
        for j in range(m):
            if C[i, j] > maxc:
                maxc = C[i, j]
    art = (maxc + 1.0) * n_nodes
    # rounding in potentials scales with the big-M magnitude
    eps = max(tol, 1e-14 * art)

    flow = np.zeros(n_arcs)
    in_tree = np.zeros(n_arcs, np.bool_)
    parent = np.full(n_nodes, -1, np.int64)
    pred = np.full(n_nodes, -1, np.int64)
    depth = np.zeros(n_nodes, np.int64)
    pi = np.zeros(n_nodes)
    first_child = np.full(n_nodes, -1, np.int64)
    next_sib = np.full(n_nodes, -1, np.int64)
    prev_sib = np.full(n_nodes, -1, np.int64)

    for i in range(n):
        e = n_real + i
        flow[e] = p[i]
        in_tree[e] = True
        pred[i] = e
        depth[i] = 1
        pi[i] = -art
        _link(i, root, parent, first_child, next_sib, prev_sib)
    for j in range(m):
        v = n + j
        e = n_real + n + j
        flow[e] = q[j]
        in_tree[e] = True
        pred[v] = e
        depth[v] = 1
        pi[v] = art
        _link(v, root, parent, first_child, next_sib, prev_sib)

    block = max(int(math.sqrt(n_real)), 10)
    if block > n_real:
        block = n_real
    next_arc = 0
    path = np.empty(n_nodes, np.int64)
    old_pred = np.empty(n_nodes, np.int64)
    stack = np.empty(n_nodes, np.int64)
    pivots = 0
    status = OPTIMAL

    while True:
        # --- block pricing over real arcs
        in_arc = -1
        best = -eps
        cnt = block
        e = next_arc
        for _ in range(n_real):
            if not in_tree[e]:
                i = e // m
                j = e - i * m
                rc = C[i, j] + pi[i] - pi[n + j]
                if rc < best:
                    best = rc
                    in_arc = e
            e += 1
            if e == n_real:
                e = 0
            cnt -= 1
            if cnt == 0:
                if in_arc >= 0:
                    break
                cnt = block
        if in_arc < 0:
            break
        next_arc = e
        if pivots >= max_pivots:
            status = ITERATION_LIMIT
            break
        pivots += 1

        first = in_arc // m
        second = n + (in_arc - first * m)

        a = first
        b = second
        while a != b:
            if depth[a] > depth[b]:
                a = parent[a]
            elif depth[b] > depth[a]:
                b = parent[b]
            else:
                a = parent[a]
                b = parent[b]
        join = a

        # --- leaving arc: strongly feasible rule
        delta = np.inf
        u_out = -1
        result = 0
        u = first
        while u != join:
            ep = pred[u]
            if _src(ep, n, m, n_real, root) == u:
                d = flow[ep]
            else:
                d = np.inf
            if d < delta:
                delta = d
                u_out = u
                result = 1
            u = parent[u]
        u = second
        while u != join:
            ep = pred[u]
            if _src(ep, n, m, n_real, root) == u:
                d = np.inf
            else:
                d = flow[ep]
            if d <= delta:
                delta = d
                u_out = u
                result = 2
            u = parent[u]

        # --- augment
        if delta > 0:
            flow[in_arc] += delta
            u = first
            while u != join:
                ep = pred[u]
                if _src(ep, n, m, n_real, root) == u:
                    flow[ep] -= delta
                else:
                    flow[ep] += delta
                u = parent[u]
            u = second
            while u != join:
                ep = pred[u]
                if _src(ep, n, m, n_real, root) == u:
                    flow[ep] += delta
                else:
                    flow[ep] -= delta
                u = parent[u]
        leaving = pred[u_out]
        flow[leaving] = 0.0
        in_tree[leaving] = False
        in_tree[in_arc] = True

        # --- re-hang the cut subtree below the entering arc
        if result == 1:
            u_in = first
            v_in = second
        else:
            u_in = second
            v_in = first
        k = 0
        w = u_in
        while True:
            path[k] = w
            k += 1
            if w == u_out:
                break
            w = parent[w]
        for t in range(k):
            old_pred[t] = pred[path[t]]
            _unlink(path[t], parent, first_child, next_sib, prev_sib)
        pred[path[0]] = in_arc
        _link(path[0], v_in, parent, first_child, next_sib, prev_sib)
        for t in range(k - 1):
            pred[path[t + 1]] = old_pred[t]
            _link(path[t + 1], path[t], parent, first_child, next_sib, prev_sib)

        # --- refresh depth and potentials inside the moved subtree
        top = 0
        stack[top] = u_in
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            pa = parent[v]
            ep = pred[v]
            depth[v] = depth[pa] + 1
            c = _cost(ep, C, m, n_real, art)
            if _src(ep, n, m, n_real, root) == v:
                pi[v] = pi[pa] - c
            else:
                pi[v] = pi[pa] + c
            ch = first_child[v]
            while ch >= 0:
                stack[top] = ch
                top += 1
                ch = next_sib[ch]

    return flow, pi, status, pivots
