"""Exact solver for the balanced quadratic-cost transportation problem.

The solver is a transportation simplex (network simplex specialised to the
bipartite flow graph): a northwest-corner starting basis after a
lexicographic presort of the support points, then deterministic pivoting
in a jit-compiled core. The entering arc is the most negative reduced
cost within the currently scanned pricing block (row-major on ties); the
leaving arc is the first minimiser along the pivot cycle; termination is
certified by a full scan against exactly recomputed potentials. The basis
is always a spanning tree, so the returned coupling is a basic solution
with at most ``n0 + n1 - 1`` strictly positive entries.

The presort makes the start basis the monotone coupling for sorted inputs,
which is already optimal for one-dimensional data; it never changes the
optimal cost and keeps the solve deterministic for any fixed input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .measures import DimensionMismatchError, EmpiricalMeasure

# Reduced costs above -PIVOT_TOL (scaled by the largest cost entry) count
# as optimal; marginal sums are validated to MARGINAL_TOL and inputs that
# fail are rejected rather than silently renormalised.
PIVOT_TOL = 1e-12
MARGINAL_TOL = 1e-10


def cost_matrix(points0: np.ndarray, points1: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, c_ij = ||x0_i - x1_j||^2.

    Computed from explicit coordinate differences so that entries are
    exactly zero iff the points coincide.
    """
    diff = points0[:, None, :] - points1[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Nonnegative mass matrix with prescribed row and column marginals."""

    gamma: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        a = np.asarray(self.row_marginal, dtype=float)
        b = np.asarray(self.col_marginal, dtype=float)
        if g.ndim != 2 or g.shape != (a.shape[0], b.shape[0]):
            raise ValueError("coupling shape does not match the marginals")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("coupling entries must be finite and nonnegative")
        row_err = np.max(np.abs(g.sum(axis=1) - a))
        col_err = np.max(np.abs(g.sum(axis=0) - b))
        if row_err > MARGINAL_TOL or col_err > MARGINAL_TOL:
            raise ValueError(
                f"marginal mismatch: row error {row_err:.3e}, col error {col_err:.3e}"
            )
        for arr in (g, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "row_marginal", a)
        object.__setattr__(self, "col_marginal", b)

    @property
    def n0(self) -> int:
        return self.gamma.shape[0]

    @property
    def n1(self) -> int:
        return self.gamma.shape[1]

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.gamma > 0.0))

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Strictly positive entries as (rows, cols, masses), row-major."""
        I, J = np.nonzero(self.gamma > 0.0)
        return I, J, self.gamma[I, J]


@dataclass(frozen=True, eq=False)
class TransportResult:
    """Optimal coupling plus its cost and the induced W2 distance."""

    coupling: Coupling
    cost: float
    w2: float


def solve_transport(mu0: EmpiricalMeasure, mu1: EmpiricalMeasure) -> TransportResult:
    """Exact optimal coupling between two empirical measures.

    Solves the transportation linear program with squared Euclidean cost
    and returns a basic optimal solution. Deterministic for a fixed input
    order; see the module docstring for the pivot rules.
    """
    if mu0.dim != mu1.dim:
        raise DimensionMismatchError(f"dim {mu0.dim} vs {mu1.dim}")
    a = mu0.weights
    b = mu1.weights
    if abs(math.fsum(a.tolist()) - math.fsum(b.tolist())) > MARGINAL_TOL:
        raise ValueError("total masses differ; the problem must be balanced")
    ord0 = np.lexsort(mu0.points.T[::-1])
    ord1 = np.lexsort(mu1.points.T[::-1])
    C = cost_matrix(mu0.points[ord0], mu1.points[ord1])
    gamma_sorted = _transport_simplex(C, a[ord0], b[ord1])
    cost = float(np.einsum("ij,ij->", C, gamma_sorted))
    gamma = np.zeros_like(gamma_sorted)
    gamma[np.ix_(ord0, ord1)] = gamma_sorted
    coupling = Coupling(gamma, a.copy(), b.copy())
    return TransportResult(coupling, cost, math.sqrt(max(cost, 0.0)))


@numba.njit(cache=True)
def _simplex_core(C, a, b, tol):  # pragma: no cover - exercised via solve_transport
    """Transportation simplex over a spanning-tree basis; returns (gamma, status).

    Nodes 0..m-1 are rows, m..m+n-1 columns; node 0 is the root. Start
    basis is the northwest-corner staircase. Pricing scans fixed blocks of
    the reduced-cost matrix cyclically and enters the block's most
    negative arc (row-major on ties); the solve is optimal when one full
    wrap finds nothing below the tolerance. The pivot cycle is found by
    walking both entering endpoints toward the root until the walks meet;
    a basis exchange reverses the parent chain between the entering and
    leaving arcs and shifts the potentials of the smaller cut component by
    the entering arc's reduced cost. After a long degenerate run the
    entering rule falls back to Bland's (first eligible arc), which rules
    out cycling. status: 0 = optimal, 1 = pivot limit hit.
    """
    m, n = C.shape
    size = m + n
    n_arcs = size - 1
    flow = np.zeros((m, n))
    arc_i = np.empty(n_arcs, np.int64)
    arc_j = np.empty(n_arcs, np.int64)

    # northwest-corner start: exactly m + n - 1 arcs, degenerate ones at 0
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    e = 0
    while True:
        f = min(ra[i], rb[j])
        arc_i[e] = i
        arc_j[e] = j
        flow[i, j] = f
        ra[i] -= f
        rb[j] -= f
        e += 1
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1

    # adjacency: two slots per arc (2e = row side, 2e+1 = col side) in
    # doubly linked per-node lists
    head = np.full(size, -1, np.int64)
    nxt = np.full(2 * n_arcs, -1, np.int64)
    prv = np.full(2 * n_arcs, -1, np.int64)

    for e in range(n_arcs):
        for side in range(2):
            pos = 2 * e + side
            node = arc_i[e] if side == 0 else m + arc_j[e]
            nxt[pos] = head[node]
            prv[pos] = -1
            if head[node] >= 0:
                prv[head[node]] = pos
            head[node] = pos

    # tree arrays from a BFS at the root
    parent = np.full(size, -1, np.int64)
    parent_slot = np.full(size, -1, np.int64)
    pot = np.zeros(size)
    queue = np.empty(size, np.int64)
    queue[0] = 0
    qlen = 1
    qpos = 0
    seen = np.zeros(size, np.bool_)
    seen[0] = True
    while qpos < qlen:
        u = queue[qpos]
        qpos += 1
        pos = head[u]
        while pos >= 0:
            e = pos >> 1
            v = m + arc_j[e] if (pos & 1) == 0 else arc_i[e]
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                parent_slot[v] = e
                pot[v] = C[arc_i[e], arc_j[e]] - pot[u]
                queue[qlen] = v
                qlen += 1
            pos = nxt[pos]

    mark = np.zeros(size, np.int64)
    compx = np.zeros(size, np.int64)
    compy = np.zeros(size, np.int64)
    qx = np.empty(size, np.int64)
    qy = np.empty(size, np.int64)
    cyc = np.empty(size, np.int64)
    stamp = 0

    total = m * n
    block = 4096 if total > 4096 else total
    scan_start = 0
    degenerate_run = 0
    bland = False
    pivots = 0
    max_pivots = 20_000 + 400 * size

    while True:
        # ---- periodic exact refresh of the potentials ------------------
        # incremental shifts accumulate rounding drift over thousands of
        # pivots, which could make pricing miss genuinely negative arcs
        if pivots % 8192 == 0 and pivots > 0:
            stamp += 1
            pot[0] = 0.0
            mark[0] = stamp
            queue[0] = 0
            qlen = 1
            qpos = 0
            while qpos < qlen:
                u = queue[qpos]
                qpos += 1
                pos = head[u]
                while pos >= 0:
                    e = pos >> 1
                    v = m + arc_j[e] if (pos & 1) == 0 else arc_i[e]
                    if mark[v] != stamp:
                        mark[v] = stamp
                        pot[v] = C[arc_i[e], arc_j[e]] - pot[u]
                        queue[qlen] = v
                        qlen += 1
                    pos = nxt[pos]

        # ---- pricing -------------------------------------------------
        ei = -1
        ej = -1
        if bland:
            for bi in range(m):
                pi = pot[bi]
                for bj in range(n):
                    if C[bi, bj] - pi - pot[m + bj] < -tol:
                        ei = bi
                        ej = bj
                        break
                if ei >= 0:
                    break
        else:
            scanned = 0
            while scanned < total:
                best = -tol
                best_k = -1
                stop = scan_start + block
                for k0 in range(scan_start, stop):
                    k = k0 if k0 < total else k0 - total
                    ki = k // n
                    kj = k - ki * n
                    r = C[ki, kj] - pot[ki] - pot[m + kj]
                    if r < best:
                        best = r
                        best_k = k
                scanned += block
                scan_start = stop if stop < total else stop - total
                if best_k >= 0:
                    ei = best_k // n
                    ej = best_k - ei * n
                    break

        if ei < 0:
            # pricing claims optimality; certify it against exactly
            # recomputed potentials before terminating
            stamp += 1
            pot[0] = 0.0
            mark[0] = stamp
            queue[0] = 0
            qlen = 1
            qpos = 0
            while qpos < qlen:
                u = queue[qpos]
                qpos += 1
                pos = head[u]
                while pos >= 0:
                    e = pos >> 1
                    v = m + arc_j[e] if (pos & 1) == 0 else arc_i[e]
                    if mark[v] != stamp:
                        mark[v] = stamp
                        pot[v] = C[arc_i[e], arc_j[e]] - pot[u]
                        queue[qlen] = v
                        qlen += 1
                    pos = nxt[pos]
            best = -tol
            for bi in range(m):
                pi = pot[bi]
                for bj in range(n):
                    r = C[bi, bj] - pi - pot[m + bj]
                    if r < best:
                        best = r
                        ei = bi
                        ej = bj
            if ei < 0:
                break  # certified optimal

        # ---- pivot cycle via the tree path --------------------------
        r_enter = C[ei, ej] - pot[ei] - pot[m + ej]
        col_end = m + ej
        stamp += 1
        mark[ei] = stamp
        mark[col_end] = stamp
        u = ei
        v = col_end
        meet = -1
        while meet < 0:
            if u >= 0:
                pu = parent[u]
                if pu >= 0:
                    if mark[pu] == stamp:
                        meet = pu
                        break
                    mark[pu] = stamp
                    u = pu
                else:
                    u = -1
            if v >= 0:
                pv = parent[v]
                if pv >= 0:
                    if mark[pv] == stamp:
                        meet = pv
                        break
                    mark[pv] = stamp
                    v = pv
                else:
                    v = -1

        len_a = 0
        u = ei
        while u != meet:
            cyc[len_a] = parent_slot[u]
            len_a += 1
            u = parent[u]
        len_b = 0
        v = col_end
        while v != meet:
            cyc[size - 1 - len_b] = parent_slot[v]
            len_b += 1
            v = parent[v]
        cyc_len = len_a + len_b
        for t in range(len_b):  # append path_b reversed
            cyc[len_a + t] = cyc[size - len_b + t]

        # minus arcs at even positions; leaving = first minimiser
        theta = np.inf
        leave_pos = -1
        for pos in range(0, cyc_len, 2):
            e = cyc[pos]
            fv = flow[arc_i[e], arc_j[e]]
            if fv < theta:
                theta = fv
                leave_pos = pos
        for pos in range(cyc_len):
            e = cyc[pos]
            if pos % 2 == 0:
                flow[arc_i[e], arc_j[e]] -= theta
            else:
                flow[arc_i[e], arc_j[e]] += theta

        # ---- basis exchange ------------------------------------------
        ls = cyc[leave_pos]
        li = arc_i[ls]
        lj = arc_j[ls]
        child = li if parent_slot[li] == ls else m + lj

        # unlink the leaving arc's two adjacency slots
        for side in range(2):
            pos = 2 * ls + side
            node = li if side == 0 else m + lj
            if prv[pos] >= 0:
                nxt[prv[pos]] = nxt[pos]
            else:
                head[node] = nxt[pos]
            if nxt[pos] >= 0:
                prv[nxt[pos]] = prv[pos]

        # smaller cut component by alternating expansion
        stamp += 1
        compx[li] = stamp
        compy[m + lj] = stamp
        qx[0] = li
        qy[0] = m + lj
        hx = 0
        tx = 1
        hy = 0
        ty = 1
        small_is_x = True
        while True:
            if hx == tx:
                small_is_x = True
                break
            if hy == ty:
                small_is_x = False
                break
            u = qx[hx]
            hx += 1
            pos = head[u]
            while pos >= 0:
                e = pos >> 1
                v = m + arc_j[e] if (pos & 1) == 0 else arc_i[e]
                if compx[v] != stamp:
                    compx[v] = stamp
                    qx[tx] = v
                    tx += 1
                pos = nxt[pos]
            u = qy[hy]
            hy += 1
            pos = head[u]
            while pos >= 0:
                e = pos >> 1
                v = m + arc_j[e] if (pos & 1) == 0 else arc_i[e]
                if compy[v] != stamp:
                    compy[v] = stamp
                    qy[ty] = v
                    ty += 1
                pos = nxt[pos]
        if small_is_x:
            comp = compx
            qs = qx
            count = tx
        else:
            comp = compy
            qs = qy
            count = ty

        in_small_child = comp[child] == stamp
        in_small_ei = comp[ei] == stamp
        attach = ei if in_small_ei == in_small_child else col_end
        anchor = col_end if attach == ei else ei

        # the entering arc reuses the leaving arc's slot
        arc_i[ls] = ei
        arc_j[ls] = ej
        flow[ei, ej] = theta
        for side in range(2):
            pos = 2 * ls + side
            node = ei if side == 0 else col_end
            nxt[pos] = head[node]
            prv[pos] = -1
            if head[node] >= 0:
                prv[head[node]] = pos
            head[node] = pos

        # re-root the cut-off side at the entering endpoint
        prev = anchor
        prev_slot = ls
        cur = attach
        while True:
            nxt_node = parent[cur]
            nxt_slot = parent_slot[cur]
            parent[cur] = prev
            parent_slot[cur] = prev_slot
            if cur == child:
                break
            prev = cur
            prev_slot = nxt_slot
            cur = nxt_node

        # consistent potentials: shift the smaller side by the entering
        # reduced cost (the global gauge is free)
        ends_in_small_is_row = in_small_ei
        t_shift = r_enter if ends_in_small_is_row else -r_enter
        for q in range(count):
            u = qs[q]
            if u < m:
                pot[u] += t_shift
            else:
                pot[u] -= t_shift

        pivots += 1
        if theta <= 0.0:
            degenerate_run += 1
        else:
            degenerate_run = 0
        if degenerate_run > size:
            bland = True
        if pivots > max_pivots:
            return flow, 1

    return flow, 0


def _transport_simplex(C, a, b):
    """Exact optimal basic solution of the transportation problem."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    tol = PIVOT_TOL * max(1.0, float(C.max()) if C.size else 1.0)
    gamma, status = _simplex_core(
        C, np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), tol
    )
    if status != 0:  # pragma: no cover
        raise RuntimeError("pivot limit exceeded; numerically degenerate input?")
    return gamma


def _sorted_quantile_table(mu: EmpiricalMeasure):
    order = np.argsort(mu.points[:, 0], kind="stable")
    return mu.points[order, 0], np.cumsum(mu.weights[order])


def wasserstein2_1d(mu0: EmpiricalMeasure, mu1: EmpiricalMeasure) -> float:
    """W2 distance between one-dimensional measures via quantile functions.

    Integrates the squared difference of the two (piecewise constant)
    quantile functions over [0, 1] without building a coupling. Agrees
    with ``solve_transport(mu0, mu1).w2`` to solver precision.
    """
    if mu0.dim != 1 or mu1.dim != 1:
        raise DimensionMismatchError("quantile fast path requires dim == 1")
    x0, c0 = _sorted_quantile_table(mu0)
    x1, c1 = _sorted_quantile_table(mu1)
    levels = np.union1d(c0, c1)
    bounds = np.concatenate(([0.0], levels))
    widths = np.diff(bounds)
    mids = bounds[:-1] + widths / 2
    q0 = x0[np.minimum(np.searchsorted(c0, mids, side="left"), x0.size - 1)]
    q1 = x1[np.minimum(np.searchsorted(c1, mids, side="left"), x1.size - 1)]
    return float(np.sqrt(np.sum(widths * (q0 - q1) ** 2)))


def barycenter_from_coupling(
    mu0: EmpiricalMeasure,
    mu1: EmpiricalMeasure,
    coupling: Coupling,
    pi0: float,
    pi1: float,
) -> EmpiricalMeasure:
    """Weighted barycenter measure read off an optimal coupling.

    Supported on ``pi0 * x0_i + pi1 * x1_j`` for every strictly positive
    coupling entry, each with that entry's mass.
    """
    if not (pi0 >= 0 and pi1 >= 0 and abs(pi0 + pi1 - 1.0) <= 1e-12):
        raise ValueError("pi0 and pi1 must be nonnegative and sum to 1")
    if mu0.dim != mu1.dim:
        raise DimensionMismatchError(f"dim {mu0.dim} vs {mu1.dim}")
    if coupling.gamma.shape != (mu0.n, mu1.n):
        raise ValueError("coupling shape does not match the measures")
    if (
        np.max(np.abs(coupling.row_marginal - mu0.weights)) > MARGINAL_TOL
        or np.max(np.abs(coupling.col_marginal - mu1.weights)) > MARGINAL_TOL
    ):
        raise ValueError("marginal mismatch between coupling and measures")
    I, J, masses = coupling.triplets()
    points = pi0 * mu0.points[I] + pi1 * mu1.points[J]
    return EmpiricalMeasure(points, masses)


def variance_functional(
    nu: EmpiricalMeasure, mus: list[EmpiricalMeasure], weights
) -> float:
    """Weighted sum of squared W2 distances from ``nu`` to each measure."""
    weights = np.asarray(weights, dtype=float)
    if len(mus) != weights.shape[0]:
        raise ValueError("one weight per measure required")
    if np.any(weights < 0) or abs(math.fsum(weights.tolist()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    return math.fsum(
        float(w) * solve_transport(nu, mu).cost for w, mu in zip(weights, mus)
    )
