"""Histograms on the simplex: Sinkhorn distance, exact EMD, barycenters.

Histograms are 1-D numpy arrays summing to one; the ground metric is a
symmetric nonnegative ``(d, d)`` cost matrix with zero diagonal.  The
Sinkhorn solver exposes the dual variables, whose centered second block is
the approximate gradient of the distance w.r.t. the second marginal.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    EmptyInput,
    InfeasibleMarginals,
    NoConvergence,
    NotConverged,
    NumericalError,
    NumericalUnderflow,
)

# entries below this are clamped before Sinkhorn scaling (exact zeros stall
# the iteration); affects distances by O(eps * d * max M)
CLAMP_EPS = 1e-10


def check_histogram(h: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.ndim != 1:
        raise DimensionMismatch(f"histogram must be 1-D, got shape {h.shape}")
    if np.any(h < 0):
        raise InfeasibleMarginals("histogram has negative mass")
    if abs(h.sum() - 1.0) > tol:
        raise InfeasibleMarginals(f"histogram mass {h.sum()} != 1")
    return h


def check_ground_metric(M: np.ndarray, dim: int | None = None) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"ground metric must be square, got {M.shape}")
    if dim is not None and M.shape[0] != dim:
        raise DimensionMismatch(
            f"ground metric dim {M.shape[0]} != histogram dim {dim}")
    if np.any(M < 0) or np.any(np.abs(np.diag(M)) > 0):
        raise InfeasibleMarginals("ground metric needs M >= 0 and zero diagonal")
    return M


def clamp_histogram(h: np.ndarray, eps: float = CLAMP_EPS) -> np.ndarray:
    """Lift zero bins to eps and renormalize (Sinkhorn stalls on exact zeros)."""
    h = np.maximum(np.asarray(h, dtype=float), eps)
    return h / h.sum()


@dataclass
class SinkhornSolution:
    distance: float
    transport: np.ndarray
    dual_alpha: np.ndarray
    dual_beta: np.ndarray
    iterations: int
    converged: bool


def sinkhorn(h: np.ndarray, hp: np.ndarray, M: np.ndarray, lam: float,
             tol: float = 1e-9, max_iter: int = 10000,
             v0: np.ndarray | None = None) -> SinkhornSolution:
    """Entropy-regularized transport distance between h and hp.

    Alternating scaling iterations on K = exp(-lam * M) until the L1
    marginal violation drops below tol.  The duals are recovered from the
    scalings (alpha = log u / lam, beta = log v / lam, each up to an
    additive constant); the distance is tr(T M), an upper bound on the
    exact EMD that tightens as lam grows.  Falls back to log-domain
    scaling when any kernel entry underflows.
    """
    h = clamp_histogram(check_histogram(h))
    hp = clamp_histogram(check_histogram(hp))
    if h.shape != hp.shape:
        raise DimensionMismatch(f"marginal dims {h.shape} vs {hp.shape}")
    M = check_ground_metric(M, h.shape[0])
    if lam <= 0:
        raise InfeasibleMarginals("lambda must be positive")

    K = np.exp(-lam * M)
    if np.all(K == 0.0):
        raise NumericalUnderflow("exp(-lam*M) underflowed everywhere; lam too large")
    if np.any(K == 0.0):
        return _sinkhorn_log(h, hp, M, lam, tol, max_iter, v0)

    v = np.ones_like(hp) if v0 is None else np.asarray(v0, dtype=float)
    u = np.ones_like(h)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        Kv = K @ v
        if np.any(Kv <= 0) or not np.all(np.isfinite(Kv)):
            return _sinkhorn_log(h, hp, M, lam, tol, max_iter, None)
        u = h / Kv
        KTu = K.T @ u
        if np.any(KTu <= 0) or not np.all(np.isfinite(KTu)):
            return _sinkhorn_log(h, hp, M, lam, tol, max_iter, None)
        v = hp / KTu
        err = np.abs(u * (K @ v) - h).sum()
        if err < tol:
            converged = True
            break
    T = u[:, None] * K * v[None, :]
    return SinkhornSolution(
        distance=float(np.sum(T * M)),
        transport=T,
        dual_alpha=np.log(u) / lam,
        dual_beta=np.log(v) / lam,
        iterations=it,
        converged=converged,
    )


def _sinkhorn_log(h, hp, M, lam, tol, max_iter, v0):
    """Log-domain scaling, used when exp(-lam*M) underflows."""
    logK = -lam * M
    logh = np.log(h)
    loghp = np.log(hp)
    g = np.zeros_like(hp) if v0 is None else np.log(np.asarray(v0, dtype=float))
    f = np.zeros_like(h)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        f = logh - logsumexp(logK + g[None, :], axis=1)
        g = loghp - logsumexp(logK + f[:, None], axis=0)
        row = np.exp(logsumexp(f[:, None] + logK + g[None, :], axis=1))
        if np.abs(row - h).sum() < tol:
            converged = True
            break
    T = np.exp(f[:, None] + logK + g[None, :])
    return SinkhornSolution(
        distance=float(np.sum(T * M)),
        transport=T,
        dual_alpha=f / lam,
        dual_beta=g / lam,
        iterations=it,
        converged=converged,
    )


def sinkhorn_grad_dual(sol: SinkhornSolution) -> np.ndarray:
    """Centered dual beta*: approximate gradient of the Sinkhorn distance
    with respect to its second marginal.

    Centering removes the additive-constant ambiguity of the dual.
    """
    if not sol.converged:
        raise NotConverged("Sinkhorn solution did not converge")
    beta = sol.dual_beta
    return beta - beta.mean()


def sinkhorn_batch(H: np.ndarray, hp: np.ndarray, M: np.ndarray, lam: float,
                   tol: float = 1e-9, max_iter: int = 10000,
                   V0: np.ndarray | None = None):
    """Solve sinkhorn(H[i], hp) for all rows of H at once.

    The scaling updates share the kernel, so the whole batch reduces to
    matrix products.  Returns (distances (n,), betas (n, d), V (d, n),
    converged (n,), iterations).  V seeds warm starts of later calls.
    """
    H = np.asarray(H, dtype=float)
    hp = clamp_histogram(check_histogram(hp))
    M = check_ground_metric(M, hp.shape[0])
    n, d = H.shape
    Hc = np.stack([clamp_histogram(check_histogram(h)) for h in H])

    K = np.exp(-lam * M)
    if np.any(K == 0.0):
        # rare at training-scale lambda; defer to the single-pair solver
        out_d = np.empty(n)
        out_b = np.empty((n, d))
        conv = np.zeros(n, dtype=bool)
        its = 0
        for i in range(n):
            v0 = V0[:, i] if V0 is not None else None
            sol = sinkhorn(Hc[i], hp, M, lam, tol, max_iter, v0=v0)
            out_d[i] = sol.distance
            out_b[i] = sol.dual_beta
            conv[i] = sol.converged
            its = max(its, sol.iterations)
        return out_d, out_b, np.ones((d, n)), conv, its

    KM = K * M
    HT = Hc.T  # (d, n)
    V = np.ones((d, n)) if V0 is None else np.array(V0, dtype=float)
    U = np.ones((d, n))
    it = 0
    active = np.ones(n, dtype=bool)
    for it in range(1, max_iter + 1):
        U = HT / (K @ V)
        V = hp[:, None] / (K.T @ U)
        err = np.abs(U * (K @ V) - HT).sum(axis=0)
        active = err >= tol
        if not active.any():
            break
        if not np.all(np.isfinite(U)) or not np.all(np.isfinite(V)):
            break
    converged = ~active
    dists = np.sum(U * (KM @ V), axis=0)
    betas = (np.log(V) / lam).T
    bad = ~converged | ~np.isfinite(dists)
    if bad.any():
        for i in np.where(bad)[0]:
            sol = sinkhorn(Hc[i], hp, M, lam, tol, max_iter)
            dists[i] = sol.distance
            betas[i] = sol.dual_beta
            converged[i] = sol.converged
    return dists, betas, V, converged, it


def sinkhorn_pairwise(H: np.ndarray, M: np.ndarray, lam: float,
                      tol: float = 1e-9, max_iter: int = 10000) -> np.ndarray:
    """Symmetric (n, n) matrix of Sinkhorn distances among the rows of H."""
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    D = np.zeros((n, n))
    for j in range(n):
        if j == 0:
            continue
        dists, _, _, _, _ = sinkhorn_batch(H[:j], H[j], M, lam, tol, max_iter)
        D[:j, j] = dists
        D[j, :j] = dists
    return D


# --- exact EMD via the transportation simplex -------------------------------

def emd_exact(h: np.ndarray, hp: np.ndarray, M: np.ndarray,
              max_pivots: int = 100000) -> float:
    """Exact optimum of the transportation LP min tr(T M), T1 = h, T'1 = hp.

    Transportation simplex with north-west-corner initialization and
    Bland's (lowest-index) entering rule.  Meant as an oracle at small d;
    for a 1-D line metric it must equal the L1 distance between the
    cumulative sums.
    """
    h = check_histogram(h)
    hp = check_histogram(hp)
    if h.shape != hp.shape:
        raise DimensionMismatch(f"marginal dims {h.shape} vs {hp.shape}")
    M = check_ground_metric(M, h.shape[0])
    d = h.shape[0]

    a = h / h.sum()
    b = hp / hp.sum()
    T, basis = _northwest_corner(a, b)
    basis_set = set(basis)

    for _ in range(max_pivots):
        u, v = _potentials(basis, M, d)
        entering = None
        # Bland's rule: lowest (i, j) with negative reduced cost
        R = M - u[:, None] - v[None, :]
        for i in range(d):
            neg = np.where(R[i] < -1e-12)[0]
            for j in neg:
                if (i, int(j)) not in basis_set:
                    entering = (i, int(j))
                    break
            if entering is not None:
                break
        if entering is None:
            return float(np.sum(T * M))

        cycle = _find_cycle(basis, entering)
        minus = cycle[1::2]
        theta = min(T[c] for c in minus)
        leaving = min((c for c in minus if T[c] <= theta), default=minus[0])
        for c in cycle[0::2]:
            T[c] += theta
        for c in minus:
            T[c] -= theta
        T[leaving] = 0.0
        basis.remove(leaving)
        basis_set.remove(leaving)
        basis.append(entering)
        basis_set.add(entering)
    raise NumericalError("transportation simplex exceeded pivot cap")


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Initial basic feasible solution; returns (T, basis of 2d-1 cells)."""
    a = a.copy()
    b = b.copy()
    d = a.shape[0]
    T = np.zeros((d, d))
    basis: list[tuple[int, int]] = []
    i = j = 0
    while True:
        t = min(a[i], b[j])
        T[i, j] = t
        basis.append((i, j))
        a[i] -= t
        b[j] -= t
        if i == d - 1 and j == d - 1:
            break
        # advance one index at a time so the basis keeps 2d-1 cells even
        # under degeneracy
        if (a[i] <= b[j] and i < d - 1) or j == d - 1:
            i += 1
        else:
            j += 1
    return T, basis


def _potentials(basis, M, d):
    """Dual potentials u, v from the basis spanning tree (u[0] = 0)."""
    u = np.full(d, np.nan)
    v = np.full(d, np.nan)
    row_cells: list[list[int]] = [[] for _ in range(d)]
    col_cells: list[list[int]] = [[] for _ in range(d)]
    for (i, j) in basis:
        row_cells[i].append(j)
        col_cells[j].append(i)
    u[0] = 0.0
    stack = [("r", 0)]
    while stack:
        kind, k = stack.pop()
        if kind == "r":
            for j in row_cells[k]:
                if np.isnan(v[j]):
                    v[j] = M[k, j] - u[k]
                    stack.append(("c", j))
        else:
            for i in col_cells[k]:
                if np.isnan(u[i]):
                    u[i] = M[i, k] - v[k]
                    stack.append(("r", i))
    return u, v


def _find_cycle(basis, entering):
    """Unique cycle formed by the entering cell and the basis tree.

    Returned as [entering, c1, c2, ...] with alternating +/- signs in that
    order.
    """
    i0, j0 = entering
    adj: dict[tuple[str, int], list[tuple[tuple[str, int], tuple[int, int]]]] = {}
    for (i, j) in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    # DFS from row i0 to col j0 through the basis tree
    start, goal = ("r", i0), ("c", j0)
    stack = [(start, [])]
    seen = {start}
    while stack:
        node, path = stack.pop()
        if node == goal:
            return [entering] + path
        for (nxt, cell) in adj.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, path + [cell]))
    raise NumericalError("degenerate basis: no cycle found")  # unreachable


# --- barycenter --------------------------------------------------------------

def sinkhorn_barycenter(members: list[np.ndarray], M: np.ndarray, lam: float,
                        tol: float = 1e-9, max_iter: int = 1000) -> np.ndarray:
    """Histogram minimizing sum_i D_S(b, h_i), by iterative Bregman projections.

    Fixed point on the shared scaling: all members are projected onto their
    marginal constraint, the barycenter is the geometric mean of the free
    marginals, and the shared scalings are updated until the barycenter
    stabilizes in L1.
    """
    if len(members) == 0:
        raise EmptyInput("barycenter of an empty set")
    H = np.stack([clamp_histogram(check_histogram(h)) for h in members])
    N, d = H.shape
    M = check_ground_metric(M, d)
    if N == 1:
        return H[0].copy()

    logK = -lam * M
    G = np.zeros((N, d))  # log v_i
    b = np.full(d, 1.0 / d)
    for _ in range(max_iter):
        # F[i] = log u_i projecting onto the fixed marginals h_i
        F = np.log(H) - logsumexp(logK[None, :, :] + G[:, None, :], axis=2)
        # free marginals log(K^T u_i); barycenter = geometric mean
        logm = logsumexp(logK.T[None, :, :] + F[:, None, :], axis=2)
        logb = logm.mean(axis=0) + G.mean(axis=0)
        logb -= logsumexp(logb)
        G = logb[None, :] - logm
        b_new = np.exp(logb)
        if np.abs(b_new - b).sum() < tol:
            return b_new
        b = b_new
    warnings.warn("sinkhorn_barycenter hit max_iter; returning last iterate",
                  NoConvergence)
    return b
