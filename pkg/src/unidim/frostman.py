"""Finite-instance weight extremal problem: maximize the mean of h-weighted
vertex masses subject to ball-mass caps r^alpha, its dual weighted
ball-cover problem, and the flow-derived per-point weight for patterns.

Everything is normalized per vertex so values mimic expectations at a
uniform root.  Solutions certify both sides by direct substitution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .coverings import WeightedBallCollection
from .flows import build_badic_tree, tree_maxflow
from .rng import RngStream

_TOL = 1e-9
_GAP_TOL = 1e-6
_MAX_CONSTRAINTS = 10_000


# ---------------------------------------------------------------------------
# instances


@dataclass
class FrostmanInstance:
    space: object                      # finite space or window
    alpha: float
    M: float
    grid: np.ndarray
    h: np.ndarray
    grid_capped: bool = False

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if self.grid.size == 0:
            raise ValueError("radius grid is empty")
        if self.grid.min() < self.M - _TOL:
            raise ValueError("grid radii must be >= M")
        if (self.h < 0).any():
            raise ValueError("h must be nonnegative")
        if self.h.size != self.size:
            raise ValueError("h size mismatch")
        self.active = self._active_vertices()

    @property
    def size(self) -> int:
        return int(self.space.size)

    def _active_vertices(self) -> np.ndarray:
        horizon = getattr(self.space, "horizon", math.inf)
        if not math.isfinite(horizon):
            return np.arange(self.size)
        top = float(self.grid.max())
        d = self.space.root_distances()
        ok = d + top <= horizon + _TOL
        if hasattr(self.space, "neighbors"):
            ok &= d >= 0
        return np.nonzero(ok)[0]

    @property
    def boundary_bias(self) -> bool:
        return self.active.size < self.size


def instance_for(space, alpha: float, M: float, R_max: float | None = None,
                 h=None, grid=None) -> FrostmanInstance:
    """Build an instance with an automatic radius grid.

    Integer metrics get the integer grid [M, R_max]; real metrics get the
    distinct pairwise distances in range, thinned so |V|*|grid| stays
    under the constraint cap (reported via grid_capped).
    """
    n = int(space.size)
    h = np.ones(n) if h is None else np.asarray(h, dtype=float)
    if grid is not None:
        return FrostmanInstance(space, alpha, M, np.asarray(grid, float), h)
    dists = np.concatenate([space.distances_from(v) for v in
                            range(min(n, 64))])
    dists = dists[dists > 0]
    if R_max is None:
        R_max = float(dists.max())
    integral = np.allclose(dists, np.round(dists), atol=1e-9)
    if integral:
        grid = np.arange(math.ceil(M), math.floor(R_max) + 1, dtype=float)
        capped = False
    else:
        vals = np.unique(np.round(dists, 9))
        vals = vals[(vals >= M) & (vals <= R_max)]
        cap = max(1, _MAX_CONSTRAINTS // n)
        capped = vals.size > cap
        if capped:
            vals = vals[np.linspace(0, vals.size - 1, cap).astype(int)]
        grid = vals
    return FrostmanInstance(space, alpha, M, grid, h, grid_capped=capped)


# ---------------------------------------------------------------------------
# the LP


@dataclass
class FrostmanSolution:
    instance: FrostmanInstance
    w: np.ndarray
    collection: WeightedBallCollection
    primal_value: float
    dual_value: float
    gap: float
    primal_residual: float
    dual_residual: float

    def to_record(self) -> dict:
        inst = self.instance
        return {
            "vertices": inst.size,
            "alpha": inst.alpha,
            "M": inst.M,
            "grid": [float(r) for r in inst.grid],
            "grid_capped": inst.grid_capped,
            "boundary_bias": inst.boundary_bias,
            "w": [float(x) for x in self.w],
            "collection": [
                {"center": int(c), "radius": float(r), "cost": float(k)}
                for c, r, k in zip(self.collection.centers,
                                   self.collection.radii,
                                   self.collection.costs)],
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=1)


class SolverError(RuntimeError):
    pass


def _ball_matrix(instance: FrostmanInstance) -> tuple:
    """Sparse constraint matrix: one row per (active vertex, radius)."""
    space = instance.space
    rows, cols = [], []
    caps = []
    row_meta = []
    k = 0
    for v in instance.active:
        for r in instance.grid:
            idx = space.ball_indices(int(v), float(r))
            rows.extend([k] * len(idx))
            cols.extend(int(u) for u in idx)
            caps.append(float(r) ** instance.alpha)
            row_meta.append((int(v), float(r)))
            k += 1
    A = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)),
                          shape=(k, instance.size))
    return A, np.array(caps), row_meta


def xi_lp(instance: FrostmanInstance) -> FrostmanSolution:
    """Solve the weight LP and certify both optima by substitution.

    Degenerate optima are canonicalized by a second solve minimizing
    total mass with a slight preference for low vertex indices.
    """
    A, b, meta = _ball_matrix(instance)
    n = instance.size
    n_active = instance.active.size
    hbar = np.zeros(n)
    hbar[instance.active] = instance.h[instance.active] / n_active
    res = linprog(-hbar, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    if not res.success:
        raise SolverError(f"primal solve failed: {res.message}")
    primal = float(hbar @ res.x)
    y = -np.asarray(res.ineqlin.marginals)
    y = np.maximum(y, 0.0)
    dual = float(y @ b)

    # canonicalize: among optima, least total mass, low indices preferred
    tie = (1.0 + 1e-9 * np.arange(n)) / n
    A2 = sparse.vstack([A, sparse.csr_matrix(-hbar)])
    b2 = np.append(b, -(primal - 1e-12 * max(1.0, abs(primal))))
    res2 = linprog(tie, A_ub=A2, b_ub=b2, bounds=(0, None), method="highs")
    w = np.asarray(res2.x if res2.success else res.x)
    w = np.maximum(w, 0.0)
    primal = float(hbar @ w)

    # independent certification
    primal_res = 0.0
    for (v, r), cap in zip(meta, b):
        idx = instance.space.ball_indices(v, r)
        primal_res = max(primal_res, math.fsum(w[idx]) - cap)
    costs = y * n_active
    short = instance.h[instance.active] / n_active - (A.T @ y)[instance.active]
    dual_res = float(np.max(short, initial=0.0)) * n_active
    gap = dual - primal
    if primal_res > 1e-6 or dual_res > 1e-4:
        raise SolverError(f"certification failed: primal residual "
                          f"{primal_res:.2e}, dual residual {dual_res:.2e}")
    if abs(gap) > _GAP_TOL * max(1.0, abs(dual)):
        raise SolverError(f"duality gap {gap:.2e} too large")

    keep = costs > 1e-12
    centers = np.array([meta[i][0] for i in np.nonzero(keep)[0]],
                       dtype=np.int64)
    radii = np.array([meta[i][1] for i in np.nonzero(keep)[0]])
    collection = WeightedBallCollection(centers, radii, costs[keep])
    return FrostmanSolution(instance, w, collection, primal, dual, gap,
                            float(max(primal_res, 0.0)),
                            float(max(dual_res, 0.0)))


def xi_value(space, alpha: float, M: float, h=None, grid=None,
             R_max=None) -> float:
    return xi_lp(instance_for(space, alpha, M, R_max, h, grid)).dual_value


# ---------------------------------------------------------------------------
# symmetry


def xi_symmetry_check(instance: FrostmanInstance) -> dict:
    """On a vertex-transitive space the optimum is achieved by a constant
    weight: re-solve restricted to constants and compare; also check
    value * |N_M(e)| <= M^alpha.
    """
    sol = xi_lp(instance)
    space = instance.space
    # constant w = c: binding constraint is min over (v, r) of r^a/|N_r(v)|
    best = math.inf
    for v in instance.active:
        for r in instance.grid:
            cnt = space.ball_count(int(v), float(r))
            best = min(best, float(r) ** instance.alpha / cnt)
    const_value = best * float(np.mean(instance.h[instance.active]))
    scale = max(1.0, abs(sol.dual_value))
    match = abs(const_value - sol.primal_value) <= _GAP_TOL * scale
    ball_m = space.ball_count(int(instance.active[0]), float(instance.M))
    ineq_ok = (sol.dual_value * ball_m
               <= instance.M ** instance.alpha + _TOL * scale)
    return {
        "lp_value": sol.primal_value,
        "constant_value": const_value,
        "constant_weight": best,
        "match": bool(match),
        "ball_M": int(ball_m),
        "inequality_ok": bool(ineq_ok),
    }


# ---------------------------------------------------------------------------
# flow-derived pattern weights


@dataclass
class PatternWeightReport:
    w: np.ndarray
    delta: float
    flow_value: float
    violations: list
    checked: int
    root_weight: float


def frostman_weight_pp(window, alpha: float, b: int, N: int,
                       stream: RngStream) -> PatternWeightReport:
    """Per-point weights delta * f0(leaf cube)/(points in leaf cube).

    delta = (b+1)^(-dim).  The mass bound w(N_r(v)) <= r^alpha is
    verified at radii b^0..b^N for every vertex that can see the full
    ball; equality can be attained (saturated cubes), so the check
    carries a 1e-9 relative slack.
    """
    tree = build_badic_tree(window, b, N, stream, alpha)
    value, flow = tree_maxflow(tree)
    dim = window.dim
    delta = float(b + 1) ** (-dim)
    leaf = tree.point_leaf
    w = delta * flow[leaf] / tree.counts[leaf]

    radii = np.array([float(b) ** j for j in range(N + 1)])
    d_root = window.root_distances()
    coords = np.asarray(window.coords)
    violations = []
    checked = 0
    if dim == 1:
        # all ball masses at once per radius by a sliding sum
        xs = coords[:, 0]
        order = np.argsort(xs, kind="stable")
        xs_s = xs[order]
        cum = np.concatenate([[0.0], np.cumsum(w[order])])
        for r in radii:
            safe = d_root + r <= window.horizon + _TOL
            lo = np.searchsorted(xs_s, xs - r - 1e-12, side="left")
            hi = np.searchsorted(xs_s, xs + r + 1e-12, side="right")
            masses = cum[hi] - cum[lo]
            cap = r ** alpha
            checked += int(safe.sum())
            bad = safe & (masses > cap * (1.0 + _TOL) + 1e-12)
            for v in np.nonzero(bad)[0]:
                violations.append((int(v), float(r), float(masses[v])))
    else:
        for v in range(window.size):
            top = window.horizon - d_root[v]
            ok_radii = radii[radii <= top + _TOL]
            if ok_radii.size == 0:
                continue
            dv = window.distances_from(v)
            ov = np.argsort(dv, kind="stable")
            cum = np.cumsum(w[ov])
            pos = np.searchsorted(dv[ov], ok_radii + _TOL)
            masses = cum[pos - 1]
            caps = ok_radii ** alpha
            checked += ok_radii.size
            bad = masses > caps * (1.0 + _TOL) + 1e-12
            for j in np.nonzero(bad)[0]:
                violations.append((int(v), float(ok_radii[j]),
                                   float(masses[j])))
    return PatternWeightReport(w, delta, float(value), violations, checked,
                               float(w[window.root_index]))


# ---------------------------------------------------------------------------
# content sandwich


@dataclass
class ContentSandwich:
    lower: float                       # the LP value b
    upper: float                       # b + b|log b|
    part_ii: float                     # inf over the a-grid
    part_ii_argmin: float
    empirical: float | None            # best covering found, if asked

    def contains(self, x: float, tol: float = 1e-9) -> bool:
        return self.lower - tol <= x <= self.upper + tol


def greedy_covering_content(space, alpha: float, grid) -> float:
    """Weighted set-cover greedy over (center, radius) pairs, per vertex."""
    n = space.size
    uncovered = np.ones(n, dtype=bool)
    cost = 0.0
    balls = [(v, float(r), space.ball_indices(v, float(r)))
             for v in range(n) for r in np.asarray(grid, dtype=float)]
    while uncovered.any():
        best = None
        best_ratio = math.inf
        for v, r, idx in balls:
            gain = int(uncovered[idx].sum())
            if gain == 0:
                continue
            ratio = r ** alpha / gain
            if ratio < best_ratio - 1e-15:
                best_ratio = ratio
                best = (v, r, idx)
        v, r, idx = best
        uncovered[idx] = False
        cost += r ** alpha
    return cost / n


def content_sandwich(instance: FrostmanInstance,
                     a_grid=None, empirical: bool = False) -> ContentSandwich:
    """Two-sided content bounds from the LP value at M = 1, h == 1.

    lower = LP value b; upper = b + b|log b|; part_ii evaluates
    inf_a {M^alpha * mean(exp(-a h)) + a * b} on the a-grid.
    """
    if abs(instance.M - 1.0) > _TOL:
        raise ValueError("content bounds need M = 1")
    if not np.allclose(instance.h, 1.0):
        raise ValueError("content bounds need h == 1")
    sol = xi_lp(instance)
    bval = sol.dual_value
    upper = bval + bval * abs(math.log(bval)) if bval > 0 else 0.0
    if a_grid is None:
        a_grid = np.geomspace(1e-3, 1e3, 121)
    h_act = instance.h[instance.active]
    vals = [instance.M ** instance.alpha * float(np.mean(np.exp(-a * h_act)))
            + a * bval for a in a_grid]
    j = int(np.argmin(vals))
    emp = None
    if empirical:
        emp = greedy_covering_content(instance.space, instance.alpha,
                                      instance.grid)
    return ContentSandwich(bval, upper, float(vals[j]), float(a_grid[j]), emp)
