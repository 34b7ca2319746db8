"""Linear relaxation of the one-shot placement problem.

Given nonnegative weights w[i, f] (one per user-file pair), the relaxation
maximizes sum w[i, f] * z[i, f] subject to z[i, f] <= sum of y[j, f] over the
caches j connected to user i, per-cache capacity sum_f y[j, :] = C, and box
bounds [0, 1] on every variable. Variables are restricted to the support files
(those with a positive weight for some user); C zero-weight slack columns per
cache turn the capacity constraint into an equality, so the variable count is
at most m*(s + C) + n*s for support size s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import ConfigurationError, SolverError
from .model import BipartiteNetwork

DEFAULT_TOL = 1e-6


def support_weights(
    weights, n: int, clip: bool = True
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Extract (n, s) positive weights and the sorted support file ids.

    Accepts a dense (n, N) array or a {(user, file): weight} mapping. Negative
    entries are clipped to zero before the support is taken.
    """
    if isinstance(weights, dict):
        files = sorted({f for (_, f), w in weights.items() if w > 0})
        col = {f: k for k, f in enumerate(files)}
        out = np.zeros((n, len(files)), dtype=np.float64)
        for (i, f), w in weights.items():
            if w > 0:
                out[i, col[f]] = w
        return out, tuple(files)
    dense = np.asarray(weights, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != n:
        raise ConfigurationError(f"weights must be ({n}, N) or a pair mapping")
    if clip:
        dense = np.maximum(dense, 0.0)
    cols = np.nonzero(dense.max(axis=0) > 0)[0]
    return dense[:, cols].copy(), tuple(int(f) for f in cols)


@dataclass
class LPInstance:
    """Assembled relaxation ready for the solver.

    Variable layout: y variables first, cache-major, s + n_slack columns per
    cache (slack columns last); then one z variable per positive-weight
    (user, file) pair in sorted order.
    """

    c: np.ndarray
    a_ub: sparse.csr_matrix | None
    b_ub: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray
    n: int
    m: int
    capacity: int
    files: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]  # (user, support column)
    n_slack: int
    user_caches: tuple[tuple[int, ...], ...]


@dataclass
class FractionalAllocation:
    """Solver output on the support-plus-slack grid.

    Attributes:
        files: support file ids (ascending); column k of y is files[k] for
            k < len(files), a zero-weight slack column otherwise.
        y: (m, s + n_slack) fractional placement, entries in [0, 1], each row
            summing to the capacity.
        z: (n, s) fractional coverage, nonzero only on positive-weight pairs.
        objective: attained relaxation value.
    """

    files: tuple[int, ...]
    y: np.ndarray
    z: np.ndarray
    objective: float
    capacity: int
    n_slack: int

    @property
    def num_support(self) -> int:
        return len(self.files)

    def real_y(self) -> np.ndarray:
        """Placement mass on real files only (slack columns dropped)."""
        return self.y[:, : self.num_support]


def build_lp(weights, net: BipartiteNetwork, capacity: int) -> LPInstance:
    """Assemble the relaxation for the given weights and network.

    Args:
        weights: dense (n, N) array or {(user, file): weight} mapping;
            negative entries are treated as zero.
        net: bipartite user-cache network.
        capacity: per-cache capacity C >= 1.
    """
    if capacity < 1:
        raise ConfigurationError("capacity must be >= 1")
    w, files = support_weights(weights, net.n)
    s = len(files)
    width = s + capacity  # slack columns make the capacity row an equality
    ny = net.m * width
    pairs = [(i, k) for i in range(net.n) for k in range(s) if w[i, k] > 0]
    nz = len(pairs)

    c = np.zeros(ny + nz)
    for q, (i, k) in enumerate(pairs):
        c[ny + q] = -w[i, k]  # linprog minimizes

    rows, cols, vals = [], [], []
    for q, (i, k) in enumerate(pairs):
        rows.append(q)
        cols.append(ny + q)
        vals.append(1.0)
        for j in net.user_caches[i]:
            rows.append(q)
            cols.append(j * width + k)
            vals.append(-1.0)
    a_ub = (
        sparse.csr_matrix((vals, (rows, cols)), shape=(nz, ny + nz)) if nz else None
    )
    b_ub = np.zeros(nz)

    rows, cols, vals = [], [], []
    for j in range(net.m):
        for k in range(width):
            rows.append(j)
            cols.append(j * width + k)
            vals.append(1.0)
    a_eq = sparse.csr_matrix((vals, (rows, cols)), shape=(net.m, ny + nz))
    b_eq = np.full(net.m, float(capacity))

    return LPInstance(
        c=c,
        a_ub=a_ub,
        b_ub=b_ub,
        a_eq=a_eq,
        b_eq=b_eq,
        n=net.n,
        m=net.m,
        capacity=capacity,
        files=files,
        pairs=tuple(pairs),
        n_slack=capacity,
        user_caches=net.user_caches,
    )


def solve_lp(instance: LPInstance, tol: float = DEFAULT_TOL) -> FractionalAllocation:
    """Solve the relaxation and validate the solution at the given tolerance.

    Raises:
        SolverError: solver failure, infeasibility, or a solution violating
            the relaxation invariants beyond `tol`.
    """
    res = linprog(
        instance.c,
        A_ub=instance.a_ub,
        b_ub=instance.b_ub if instance.a_ub is not None else None,
        A_eq=instance.a_eq,
        b_eq=instance.b_eq,
        bounds=(0.0, 1.0),
        method="highs",
    )
    if not res.success:
        raise SolverError(f"relaxation solve failed: {res.message}")

    s = len(instance.files)
    width = s + instance.n_slack
    ny = instance.m * width
    y = np.asarray(res.x[:ny]).reshape(instance.m, width)
    z = np.zeros((instance.n, s))
    for q, (i, k) in enumerate(instance.pairs):
        z[i, k] = res.x[ny + q]
    objective = float(-res.fun)

    scale = max(1.0, float(instance.capacity))
    if y.min() < -tol or y.max() > 1 + tol:
        raise SolverError("solution violates box bounds beyond tolerance")
    if z.size and (z.min() < -tol or z.max() > 1 + tol):
        raise SolverError("solution violates box bounds beyond tolerance")
    if np.abs(y.sum(axis=1) - instance.capacity).max() > tol * scale:
        raise SolverError("solution violates capacity equality beyond tolerance")
    cov = np.zeros((instance.n, s))
    for i in range(instance.n):
        for j in instance.user_caches[i]:
            cov[i] += y[j, :s]
    if z.size and (z - cov).max() > tol * scale:
        raise SolverError("coverage variables exceed placement mass")

    return FractionalAllocation(
        files=instance.files,
        y=np.clip(y, 0.0, 1.0),
        z=np.clip(z, 0.0, 1.0),
        objective=objective,
        capacity=instance.capacity,
        n_slack=instance.n_slack,
    )
