"""Random rooted tree windows: canopy, branching-process trees, PWIT.

Each model samples graph-metric ball windows that are pure functions of
(seed, trial, radius).  Tree-shaped models additionally export parent
arrays and subtree heights for the flow machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GraphWindow, TruncationError
from .offspring import Offspring
from .rng import RngStream

_NODE_BUDGET = 3_000_000


# ---------------------------------------------------------------------------
# incremental tree window builder

class _TreeBuilder:
    """Grows a tree window by BFS over lazily generated parents/children."""

    def __init__(self):
        self.level = []          # per-vertex integer level (model-specific)
        self.parent = []         # index of parent, -1 if not materialized
        self.linked_children = []  # per-vertex list of child indices
        self.label = []          # stable label path, for keyed RNG
        self.dist = []

    def add(self, level, parent, label, dist) -> int:
        idx = len(self.level)
        if idx >= _NODE_BUDGET:
            raise TruncationError("tree window exceeded node budget")
        self.level.append(level)
        self.parent.append(parent)
        self.linked_children.append([])
        self.label.append(label)
        self.dist.append(dist)
        if parent >= 0:
            self.linked_children[parent].append(idx)
        return idx

    def graph_window(self, horizon) -> GraphWindow:
        nbrs = [list(ch) for ch in self.linked_children]
        for idx, par in enumerate(self.parent):
            if par >= 0:
                nbrs[idx].append(par)
        win = GraphWindow(neighbors=nbrs, horizon=horizon, root_index=0,
                          labels=list(self.label))
        return win


# ---------------------------------------------------------------------------
# generalized canopy

_LEVEL_TRUNC = 1 << 18


@dataclass
class Canopy:
    """Deterministic layered tree; randomness only in the root's level.

    Level-(n+1) vertices have 2^(q[n+1]-q[n]) children at level n; level-0
    vertices are the leaves.  The root sits at level n with probability
    proportional to 2^(-q[n]).  A constant q gives the degenerate single
    path rooted at the leaf.  The level distribution is truncated at 2^18
    and renormalized, which is negligible for every supported profile.
    """

    q: object                 # callable n -> int, or indexable
    stream: RngStream = None
    name: str = "canopy"

    def __post_init__(self):
        qf = self.q
        self._q = qf if callable(qf) else (lambda n, arr=qf: int(arr[n]))
        if self._q(0) is None:
            raise ValueError("q must be defined at 0")

    def _qv(self, n: int) -> int:
        v = int(self._q(n))
        return v

    def _level_cdf(self) -> np.ndarray:
        cached = getattr(self, "_cdf_cache", None)
        if cached is not None:
            return cached
        qs = np.array([self._qv(n) for n in range(_LEVEL_TRUNC)], dtype=float)
        if np.any(np.diff(qs) < 0):
            raise ValueError("q must be nondecreasing")
        weights = np.exp2(-qs)
        total = weights.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("level distribution not normalizable")
        # constant q: no decay, treat as the degenerate path (root at 0)
        if qs[-1] == qs[0]:
            cdf = np.ones(1)
        else:
            cdf = np.cumsum(weights) / total
        self._cdf_cache = cdf
        return cdf

    def child_count(self, level: int) -> int:
        # children of a level-`level` vertex (they live at level-1)
        if level <= 0:
            return 0
        return 1 << (self._qv(level) - self._qv(level - 1))

    def root_level(self, trial: int) -> int:
        cdf = self._level_cdf()
        u = self.stream.uniform("trial", trial, "root_level")
        return int(np.searchsorted(cdf, u, side="right"))

    def window(self, trial: int, radius: int) -> GraphWindow:
        lvl0 = self.root_level(trial)
        b = _TreeBuilder()
        b.add(lvl0, -1, ("o",), 0)
        frontier = [0]
        d = 0
        while frontier and d < radius:
            nxt = []
            for v in frontier:
                lv = b.level[v]
                if b.parent[v] < 0:
                    p = b.add(lv + 1, -1, ("up", lv + 1), b.dist[v] + 1)
                    b.parent[v] = p
                    b.linked_children[p].append(v)
                    nxt.append(p)
                want = self.child_count(lv)
                have = sum(1 for c in b.linked_children[v] if b.level[c] == lv - 1)
                for i in range(want - have):
                    c = b.add(lv - 1, v, b.label[v] + (have + i,),
                              b.dist[v] + 1)
                    nxt.append(c)
            frontier = nxt
            d += 1
        return b.graph_window(radius)

    def flow_forest(self, trial: int, height: int):
        """Component of the root in the height-truncated forest.

        Returns (parent, level, labels, root_index) or None when the root
        sits above the cut.  Heights equal levels here because every
        subtree reaches the leaves.
        """
        lvl0 = self.root_level(trial)
        if lvl0 > height:
            return None
        # full subtree of the root's level-`height` ancestor
        parent = [-1]
        level = [height]
        labels = [("up", height)]
        # breadth-first materialization of the whole subtree
        order = [0]
        i = 0
        while i < len(order):
            v = order[i]
            i += 1
            lv = level[v]
            for c in range(self.child_count(lv)):
                idx = len(parent)
                parent.append(v)
                level.append(lv - 1)
                labels.append(labels[v] + (c,))
                order.append(idx)
        # the root is the all-zero descent path at level lvl0
        want = ("up", height) + (0,) * (height - lvl0)
        root_index = labels.index(want)
        return (np.array(parent), np.array(level), labels, root_index)


# ---------------------------------------------------------------------------
# unimodular Galton-Watson


@dataclass
class UnimodularGW:
    """Branching tree where the root's offspring law is size-biased.

    With condition_survival the realization is rejection-sampled until a
    path reaches survival_depth; the depth is a model parameter (not tied
    to the window radius) so windows stay nested as the horizon grows.
    """

    mu: Offspring
    condition_survival: bool = False
    margin: int = 16
    survival_depth: int = 64
    stream: RngStream = None
    name: str = "ugw"

    def __post_init__(self):
        if self.condition_survival and self.mu.mean <= 1.0:
            raise ValueError("survival conditioning needs a supercritical law")
        self._root_law = self.mu.size_biased()

    def _offspring(self, s: RngStream, label, root: bool) -> int:
        law = self._root_law if root else self.mu
        return law.sample(s.uniform("kids", label))

    def _survives(self, s: RngStream) -> bool:
        depth_target = self.survival_depth + self.margin
        stack = [(("o",), 0, True)]
        while stack:
            label, depth, is_root = stack.pop()
            if depth >= depth_target:
                return True
            n = self._offspring(s, label, is_root)
            for i in range(n):
                stack.append((label + (i,), depth + 1, False))
        return False

    def _trial_stream(self, trial: int) -> RngStream:
        base = self.stream.child("trial", trial)
        if not self.condition_survival:
            return base
        for attempt in range(10_000):
            s = base.child("attempt", attempt)
            if self._survives(s):
                return s
        raise RuntimeError("survival conditioning failed to accept")

    def window(self, trial: int, radius: int) -> GraphWindow:
        if self.condition_survival and radius > self.survival_depth:
            raise TruncationError(
                "radius exceeds the conditioned survival depth")
        s = self._trial_stream(trial)
        b = _TreeBuilder()
        b.add(0, -1, ("o",), 0)
        frontier = [0]
        d = 0
        while frontier and d < radius:
            nxt = []
            for v in frontier:
                n = self._offspring(s, b.label[v], v == 0)
                for i in range(n):
                    nxt.append(b.add(b.level[v] + 1, v,
                                     b.label[v] + (i,), b.dist[v] + 1))
            frontier = nxt
            d += 1
        return b.graph_window(radius)


# ---------------------------------------------------------------------------
# eternal (critical) Galton-Watson


@dataclass
class EternalGW:
    """Critical branching tree seen from a uniform vertex.

    The window holds the root's own descendant tree, an ancestor chain,
    and at each ancestor an independent number of side subtrees whose
    count follows the size-biased-minus-one law.
    """

    mu: Offspring
    stream: RngStream = None
    name: str = "egw"

    def __post_init__(self):
        if abs(self.mu.mean - 1.0) > 1e-9:
            raise ValueError("offspring law must be critical (mean 1)")
        self._side_law = self.mu.size_biased_minus_one()

    def _grow_subtree(self, b: _TreeBuilder, s: RngStream, root_idx: int,
                      depth_left: int, frontier_out: list):
        if depth_left <= 0:
            return
        frontier = [root_idx]
        for _ in range(depth_left):
            nxt = []
            for v in frontier:
                n = self.mu.sample(s.uniform("kids", b.label[v]))
                for i in range(n):
                    nxt.append(b.add(b.level[v] - 1, v,
                                     b.label[v] + (i,), b.dist[v] + 1))
            frontier = nxt

    def window(self, trial: int, radius: int) -> GraphWindow:
        radius = int(math.floor(radius))   # the loop below walks integer hops
        s = self.stream.child("trial", trial)
        b = _TreeBuilder()
        b.add(0, -1, ("o",), 0)                       # level = -generation depth
        self._grow_subtree(b, s, 0, radius, [])
        prev = 0
        for j in range(1, radius + 1):
            anc = b.add(j, -1, ("anc", j), j)
            b.parent[prev] = anc
            b.linked_children[anc].append(prev)
            n_side = self._side_law.sample(s.uniform("side", j))
            for i in range(n_side):
                if j + 1 > radius:
                    break
                side = b.add(j - 1, anc, ("anc", j, "s", i), j + 1)
                self._grow_subtree(b, s, side, radius - (j + 1), [])
            prev = anc
        return b.graph_window(radius)

    def side_counts(self, trial: int, count: int) -> np.ndarray:
        """Side-subtree counts at the first `count` ancestors (for tests)."""
        s = self.stream.child("trial", trial)
        return np.array([self._side_law.sample(s.uniform("side", j))
                         for j in range(1, count + 1)])

    def flow_forest(self, trial: int, height: int):
        """Root component of the forest of subtree-height <= `height`,
        or None when the root itself sits above the cut.

        Subtrees are materialized to depth height+1, which decides
        membership exactly.
        """
        s = self.stream.child("trial", trial)
        parent, labels = [], []
        children = []

        def add(par, label):
            idx = len(parent)
            parent.append(par)
            labels.append(label)
            children.append([])
            if par >= 0:
                children[par].append(idx)
            return idx

        def grow(root_idx, depth_left):
            frontier = [root_idx]
            while frontier and depth_left > 0:
                nxt = []
                for v in frontier:
                    n = self.mu.sample(s.uniform("kids", labels[v]))
                    for i in range(n):
                        nxt.append(add(v, labels[v] + (i,)))
                frontier = nxt
                depth_left -= 1

        root = add(-1, ("o",))
        grow(root, height + 1)
        prev = root
        for j in range(1, height + 2):
            anc = add(-1, ("anc", j))
            parent[prev] = anc
            children[anc].append(prev)
            n_side = self._side_law.sample(s.uniform("side", j))
            for i in range(n_side):
                side = add(anc, ("anc", j, "s", i))
                grow(side, height + 1)  # depth height+1 decides the cut exactly
            prev = anc

        n = len(parent)
        top = prev
        h = np.zeros(n, dtype=np.int64)
        order = []
        stack2 = [top]
        while stack2:
            v = stack2.pop()
            order.append(v)
            stack2.extend(children[v])
        for v in reversed(order):       # children before parents
            p = parent[v]
            if p >= 0:
                h[p] = max(h[p], h[v] + 1)
        keep = h <= height
        if not keep[root]:
            return None            # the root sits above the cut
        # component of the root within the kept set, following parents up
        comp_top = root
        while parent[comp_top] >= 0 and keep[parent[comp_top]]:
            comp_top = parent[comp_top]
        # collect the subtree of comp_top restricted to kept vertices
        idx_map = {}
        out_parent, out_labels, out_height = [], [], []
        stack = [comp_top]
        while stack:
            v = stack.pop()
            idx_map[v] = len(out_parent)
            p = parent[v]
            out_parent.append(idx_map.get(p, -1) if p >= 0 else -1)
            out_labels.append(labels[v])
            out_height.append(int(h[v]))
            for c in children[v]:
                if keep[c]:
                    stack.append(c)
        root_index = idx_map[root]
        return (np.array(out_parent), np.array(out_height), out_labels,
                root_index)


# ---------------------------------------------------------------------------
# Poisson weighted infinite tree


@dataclass
class PathTreeWindow:
    """Tree window with real edge lengths; metric is path length."""

    parent: np.ndarray
    edge_len: np.ndarray        # length of the edge to the parent
    depth: np.ndarray           # path distance to the root
    horizon: float
    root_index: int = 0
    labels: list | None = None

    @property
    def size(self) -> int:
        return self.parent.size

    def root_distances(self) -> np.ndarray:
        return self.depth

    def distances_from(self, index: int) -> np.ndarray:
        # distance via lowest common ancestor with every vertex
        n = self.size
        # ancestors of `index` with their depths
        anc_depth = {}
        v = index
        while v != -1:
            anc_depth[v] = self.depth[v]
            v = int(self.parent[v])
        out = np.empty(n)
        for w in range(n):
            v = w
            while v not in anc_depth:
                v = int(self.parent[v])
            out[w] = (self.depth[w] - self.depth[v]) + \
                     (self.depth[index] - self.depth[v])
        return out

    def check_radius(self, index: int, r: float) -> None:
        if self.depth[index] + r > self.horizon + 1e-9:
            raise TruncationError("ball exceeds horizon")

    def ball_indices(self, index: int, r: float) -> np.ndarray:
        self.check_radius(index, r)
        return np.nonzero(self.distances_from(index) <= r + 1e-9)[0]

    def ball_count(self, index: int, r: float) -> int:
        return int(self.ball_indices(index, r).size)

    def root_ball_counts(self, radii) -> np.ndarray:
        radii = np.asarray(radii, dtype=float)
        if radii.max() > self.horizon + 1e-9:
            raise TruncationError("radius grid exceeds horizon")
        d = np.sort(self.depth)
        return np.searchsorted(d, radii + 1e-9)

    def safe_indices(self, r: float) -> np.ndarray:
        return np.nonzero(self.depth + r <= self.horizon + 1e-9)[0]


@dataclass
class PWIT:
    """Poisson weighted tree: child arrival distances have intensity x^k.

    Arrival times come from the inverse of the cumulative intensity
    t^(k+1)/(k+1) applied to a unit-rate Poisson process, so enlarging the
    budget only appends arrivals.
    """

    k: int = 1
    stream: RngStream = None
    name: str = "pwit"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")

    def _arrivals(self, s: RngStream, label, budget: float) -> np.ndarray:
        gen = s.child("arrivals", label).generator()
        cum_cap = budget ** (self.k + 1) / (self.k + 1)
        times = []
        total = 0.0
        while True:
            chunk = gen.exponential(size=16)
            for e in chunk:
                total += e
                if total > cum_cap:
                    return np.array(times)
                times.append((total * (self.k + 1)) ** (1.0 / (self.k + 1)))

    def window(self, trial: int, radius: float) -> PathTreeWindow:
        s = self.stream.child("trial", trial)
        parent = [-1]
        edge = [0.0]
        depth = [0.0]
        labels = [("o",)]
        stack = [0]
        while stack:
            v = stack.pop()
            budget = radius - depth[v]
            if budget <= 0:
                continue
            for i, t in enumerate(self._arrivals(s, labels[v], budget)):
                idx = len(parent)
                if idx >= _NODE_BUDGET:
                    raise TruncationError("PWIT window exceeded node budget")
                parent.append(v)
                edge.append(float(t))
                depth.append(depth[v] + float(t))
                labels.append(labels[v] + (i,))
                stack.append(idx)
        return PathTreeWindow(np.array(parent), np.array(edge),
                              np.array(depth), float(radius), 0, labels)

    def nearest_children_subtree(self, trial: int, fanout: int,
                                 depth_levels: int,
                                 min_edge: float = 0.0) -> PathTreeWindow:
        """Keep each vertex's `fanout` nearest children, `depth_levels` deep.

        min_edge clamps every edge length from below (the degree-based
        weight bound needs lengths >= 1).
        """
        s = self.stream.child("trial", trial)
        parent = [-1]
        edge = [0.0]
        depth = [0.0]
        labels = [("o",)]
        frontier = [0]
        for _ in range(depth_levels):
            nxt = []
            for v in frontier:
                gen = s.child("arrivals", labels[v]).generator()
                cum = np.cumsum(gen.exponential(size=fanout))
                times = (cum * (self.k + 1)) ** (1.0 / (self.k + 1))
                times = np.maximum(times, min_edge)
                for i, t in enumerate(times):
                    idx = len(parent)
                    parent.append(v)
                    edge.append(float(t))
                    depth.append(depth[v] + float(t))
                    labels.append(labels[v] + (i,))
                    nxt.append(idx)
            frontier = nxt
        horizon = float(max(depth))
        return PathTreeWindow(np.array(parent), np.array(edge),
                              np.array(depth), horizon, 0, labels)
