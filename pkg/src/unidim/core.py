"""Windows, slopes, and finite vertex-transitive spaces.

A *window* is the finite piece of a random rooted space that one trial
materializes: every point within some horizon of the root.  Estimators must
never look past the horizon; ball queries that would raise TruncationError.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-9


class TruncationError(RuntimeError):
    """A query needed data beyond the materialized horizon."""


# ---------------------------------------------------------------------------
# windows


@dataclass
class PointWindow:
    """Point set with an explicit metric, centered at coords[root_index].

    metric:
      "sup"        max_i |dx_i|
      "euclidean"  L2
      "l1"         sum_i |dx_i|
      "walk_graph" max(sqrt|dx_0|, |dx_1|)  (2-d only)
    """

    coords: np.ndarray
    horizon: float
    root_index: int = 0
    metric: str = "sup"
    labels: list | None = None

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if self.coords.shape[0] == 0:
            raise ValueError("empty window")

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def distances_from(self, index: int) -> np.ndarray:
        delta = np.abs(self.coords - self.coords[index])
        if self.metric == "sup":
            return delta.max(axis=1)
        if self.metric == "euclidean":
            return np.sqrt((delta * delta).sum(axis=1))
        if self.metric == "l1":
            return delta.sum(axis=1)
        if self.metric == "walk_graph":
            return np.maximum(np.sqrt(delta[:, 0]), delta[:, 1])
        raise ValueError(f"unknown metric {self.metric!r}")

    def root_distances(self) -> np.ndarray:
        return self.distances_from(self.root_index)

    def check_radius(self, index: int, r: float) -> None:
        # every point of N_r(index) must already be materialized
        d_root = self.distances_from(self.root_index)[index]
        if d_root + r > self.horizon + _EPS:
            raise TruncationError(
                f"ball of radius {r} at distance {d_root} exceeds horizon "
                f"{self.horizon}")

    def ball_indices(self, index: int, r: float) -> np.ndarray:
        self.check_radius(index, r)
        return np.nonzero(self.distances_from(index) <= r + _EPS)[0]

    def ball_count(self, index: int, r: float) -> int:
        return int(self.ball_indices(index, r).size)

    def root_ball_counts(self, radii) -> np.ndarray:
        d = self.root_distances()
        radii = np.asarray(radii, dtype=float)
        if radii.max() > self.horizon + _EPS:
            raise TruncationError("radius grid exceeds horizon")
        return np.searchsorted(np.sort(d), radii + _EPS)

    def safe_indices(self, r: float) -> np.ndarray:
        """Vertices whose r-ball is fully inside the window."""
        d = self.root_distances()
        return np.nonzero(d + r <= self.horizon + _EPS)[0]


@dataclass
class GraphWindow:
    """BFS ball of a graph around the root; metric is hop distance."""

    neighbors: list            # neighbors[i] = list of vertex indices
    horizon: int
    root_index: int = 0
    coords: np.ndarray | None = None   # optional embedding, for plots
    labels: list | None = None

    @property
    def size(self) -> int:
        return len(self.neighbors)

    def distances_from(self, index: int) -> np.ndarray:
        dist = np.full(self.size, -1, dtype=np.int64)
        dist[index] = 0
        queue = deque([index])
        while queue:
            v = queue.popleft()
            for w in self.neighbors[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        # unreachable-within-window stays -1; callers mask on >= 0
        return dist

    def root_distances(self) -> np.ndarray:
        return self.distances_from(self.root_index)

    def check_radius(self, index: int, r: float) -> None:
        d_root = self.root_distances()[index]
        if d_root < 0 or d_root + r > self.horizon + _EPS:
            raise TruncationError("ball exceeds horizon")

    def ball_indices(self, index: int, r: float) -> np.ndarray:
        self.check_radius(index, r)
        d = self.distances_from(index)
        return np.nonzero((d >= 0) & (d <= r + _EPS))[0]

    def ball_count(self, index: int, r: float) -> int:
        return int(self.ball_indices(index, r).size)

    def root_ball_counts(self, radii) -> np.ndarray:
        radii = np.asarray(radii, dtype=float)
        if radii.max() > self.horizon + _EPS:
            raise TruncationError("radius grid exceeds horizon")
        d = self.root_distances()
        d = np.sort(d[d >= 0])
        return np.searchsorted(d, radii + _EPS)

    def safe_indices(self, r: float) -> np.ndarray:
        d = self.root_distances()
        return np.nonzero((d >= 0) & (d + r <= self.horizon + _EPS))[0]


# ---------------------------------------------------------------------------
# slopes


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    log_r: np.ndarray = field(repr=False, default=None)
    log_v: np.ndarray = field(repr=False, default=None)


def slope_fit(log_r, log_v) -> SlopeFit:
    """OLS line through (log_r, log_v); stderr is the usual OLS slope se."""
    x = np.asarray(log_r, dtype=float)
    y = np.asarray(log_v, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two grid points")
    xbar = x.mean()
    sxx = ((x - xbar) ** 2).sum()
    slope = ((x - xbar) * (y - y.mean())).sum() / sxx
    intercept = y.mean() - slope * xbar
    resid = y - (intercept + slope * x)
    dof = max(x.size - 2, 1)
    stderr = math.sqrt(float((resid ** 2).sum()) / dof / sxx)
    return SlopeFit(float(slope), float(intercept), float(stderr), x, y)


def log2_increments(log_r: np.ndarray, log_v: np.ndarray, lag: int) -> np.ndarray:
    """Finite-difference slopes at the given grid lag."""
    log_r = np.asarray(log_r, dtype=float)
    log_v = np.asarray(log_v, dtype=float)
    if lag < 1 or lag >= log_r.size:
        raise ValueError("lag out of range")
    return (log_v[lag:] - log_v[:-lag]) / (log_r[lag:] - log_r[:-lag])


def default_lag(n_grid: int) -> int:
    return max(1, (n_grid - 1) // 2)


def bootstrap_slope_sigma(log_r, per_trial_log_v, rng: np.random.Generator,
                          n_boot: int = 200) -> float:
    """Resample trials, refit the mean-curve slope, return the sd."""
    mat = np.asarray(per_trial_log_v, dtype=float)
    n = mat.shape[0]
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        pick = rng.integers(0, n, size=n)
        slopes[b] = slope_fit(log_r, mat[pick].mean(axis=0)).slope
    return float(slopes.std(ddof=1))


def dyadic_grid(lo_exp: int, hi_exp: int) -> np.ndarray:
    return 2.0 ** np.arange(lo_exp, hi_exp + 1)


# ---------------------------------------------------------------------------
# finite vertex-transitive spaces


@dataclass
class FiniteSpace:
    """Finite metric space with full distance matrix (boundary-free).

    Implements the window interface with an infinite horizon and every
    vertex safe, so covering constructions run on it unchanged.
    """

    name: str
    dist: np.ndarray
    transitive: bool = True
    root_index: int = 0

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    @property
    def horizon(self) -> float:
        return math.inf

    def ball_sizes(self, r: float) -> np.ndarray:
        return (self.dist <= r + _EPS).sum(axis=1)

    def distances_from(self, index: int) -> np.ndarray:
        return self.dist[index]

    def root_distances(self) -> np.ndarray:
        return self.dist[self.root_index]

    def check_radius(self, index: int, r: float) -> None:
        pass

    def ball_indices(self, index: int, r: float) -> np.ndarray:
        return np.nonzero(self.dist[index] <= r + _EPS)[0]

    def ball_count(self, index: int, r: float) -> int:
        return int(self.ball_indices(index, r).size)

    def safe_indices(self, r: float) -> np.ndarray:
        return np.arange(self.size)


def cycle_space(n: int) -> FiniteSpace:
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - idx[None, :])
    return FiniteSpace(f"cycle_{n}", np.minimum(diff, n - diff))


def torus_space(n: int, k: int) -> FiniteSpace:
    """Z_n^k with the L1 circular (graph) metric."""
    if n ** k > 20000:
        raise ValueError("torus too large for a dense distance matrix")
    grids = np.meshgrid(*[np.arange(n)] * k, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    circ = np.minimum(diff, n - diff)
    return FiniteSpace(f"torus_{n}^{k}", circ.sum(axis=2))


def heisenberg_quotient_space(n: int) -> FiniteSpace:
    """Word metric on the mod-n Heisenberg group (upper unitriangular 3x3).

    Group law (a,b,c)*(a',b',c') = (a+a', b+b', c+c'+a*b') mod n; generators
    are (1,0,0), (0,1,0) and inverses, so the graph is vertex-transitive.
    """
    size = n ** 3
    def enc(a, b, c):
        return (a % n) * n * n + (b % n) * n + (c % n)

    neighbors = np.empty((size, 4), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                i = enc(a, b, c)
                # right multiplication by x, x^-1, y, y^-1
                neighbors[i, 0] = enc(a + 1, b, c)
                neighbors[i, 1] = enc(a - 1, b, c)
                neighbors[i, 2] = enc(a, b + 1, c + a)
                neighbors[i, 3] = enc(a, b - 1, c - a)

    dist = np.full((size, size), -1, dtype=np.int64)
    for start in range(size):
        row = dist[start]
        row[start] = 0
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in neighbors[v]:
                if row[w] < 0:
                    row[w] = row[v] + 1
                    queue.append(w)
    return FiniteSpace(f"heis_{n}", dist)


FINITE_SPACES = {
    "cycle": cycle_space,
    "torus": torus_space,
    "heisenberg_quotient": heisenberg_quotient_space,
}


def mtp_residual(kernel: np.ndarray, root_probs: np.ndarray | None = None) -> float:
    """Mass-transport residual |E sum_x g(o,x) - E sum_x g(x,o)|.

    kernel[i, j] is the mass i sends to j.  With the uniform root of a
    transitive space this is zero up to float summation order; a biased
    root distribution breaks it, which is what the check is for.
    """
    kernel = np.asarray(kernel, dtype=float)
    n = kernel.shape[0]
    if root_probs is None:
        probs = np.full(n, 1.0 / n)
    else:
        probs = np.asarray(root_probs, dtype=float)
    sent = math.fsum((probs * kernel.sum(axis=1)).tolist())
    received = math.fsum((probs * kernel.sum(axis=0)).tolist())
    return abs(sent - received)


def run_trials(fn, n_trials: int, jobs: int = 1) -> list:
    """fn(trial_index) -> result; aggregation is order-independent."""
    if jobs <= 1:
        return [fn(t) for t in range(n_trials)]
    import concurrent.futures as cf
    with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(fn, range(n_trials),
                                chunksize=max(1, n_trials // (jobs * 4))))
    return results
