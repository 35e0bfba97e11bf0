"""Max-flow / min-cut on truncated rooted forests with edge conductances,
flow-norm root statistics, and the base-b cube tree over point patterns.

A forest is stored child-up: parent[v] is the vertex above v (-1 for the
top of a component) and conductance[v] belongs to the edge (v, parent[v]).
Flow travels from the leaves toward the tops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import TruncationError
from .rng import RngStream

_TOL = 1e-9


# ---------------------------------------------------------------------------
# FlowTree


@dataclass
class FlowTree:
    parent: np.ndarray                 # -1 marks component tops
    conductance: np.ndarray            # c(v) for the edge (v, parent[v])
    labels: list | None = None
    flow: np.ndarray | None = None
    counts: np.ndarray | None = None   # per-vertex point counts (cube trees)
    level: np.ndarray | None = None

    def __post_init__(self):
        self.parent = np.asarray(self.parent, dtype=np.int64)
        self.conductance = np.asarray(self.conductance, dtype=float)
        n = self.parent.size
        if self.conductance.size != n:
            raise ValueError("conductance size mismatch")
        edges = self.parent >= 0
        if (self.parent[edges] >= n).any():
            raise ValueError("parent index out of range")
        if not (self.conductance[edges] > 0).all():
            raise ValueError("conductances must be positive")
        self.children = [[] for _ in range(n)]
        for v in range(n):
            p = self.parent[v]
            if p >= 0:
                self.children[p].append(v)
        self.tops = np.nonzero(self.parent < 0)[0]
        self.is_leaf = np.array([not c for c in self.children])
        self._order = self._topo_order()
        # heights: 0 at leaves, 1 + max child height above
        h = np.zeros(n, dtype=np.int64)
        for v in self._order:                    # children before parents
            if not self.is_leaf[v]:
                h[v] = 1 + max(h[w] for w in self.children[v])
        self.height = h
        if self.tops.size == 0 and n > 0:
            raise ValueError("forest has no top (cycle?)")

    def _topo_order(self) -> np.ndarray:
        """Vertices ordered children-first (post-order over every top)."""
        n = self.parent.size
        order = np.empty(n, dtype=np.int64)
        seen = 0
        visited = np.zeros(n, dtype=bool)
        for top in self.tops:
            stack = [(int(top), False)]
            while stack:
                v, done = stack.pop()
                if done:
                    order[seen] = v
                    seen += 1
                    continue
                visited[v] = True
                stack.append((v, True))
                for w in self.children[v]:
                    stack.append((w, False))
        if seen != n:
            raise ValueError("parent map contains a cycle")
        return order

    @property
    def size(self) -> int:
        return self.parent.size

    def leaves(self) -> np.ndarray:
        return np.nonzero(self.is_leaf)[0]

    def residuals(self) -> tuple:
        """(max legality violation, max conservation violation)."""
        if self.flow is None:
            raise ValueError("no flow attached")
        f = self.flow
        edges = self.parent >= 0
        legal = 0.0
        if edges.any():
            legal = max(float(np.max(-f[edges], initial=0.0)),
                        float(np.max(f[edges] - self.conductance[edges],
                                     initial=0.0)))
        cons = 0.0
        for v in range(self.size):
            if self.is_leaf[v] or self.parent[v] < 0:
                continue
            s = math.fsum(f[w] for w in self.children[v])
            cons = max(cons, abs(f[v] - s))
        return legal, cons


def serialize_flow_tree(tree: FlowTree) -> str:
    """Edge list, one line per vertex: child parent conductance [flow]."""
    out = []
    for v in range(tree.size):
        p = int(tree.parent[v])
        c = float(tree.conductance[v]) if p >= 0 else float("nan")
        line = f"{v} {p} {c!r}"
        if tree.flow is not None:
            line += f" {float(tree.flow[v])!r}"
        out.append(line)
    return "\n".join(out)


def parse_flow_tree(text: str) -> FlowTree:
    parent, cond, flow = [], [], []
    has_flow = False
    for line in text.strip().splitlines():
        parts = line.split()
        if len(parts) not in (3, 4):
            raise ValueError(f"bad edge line: {line!r}")
        parent.append(int(parts[1]))
        cond.append(float(parts[2]))
        if len(parts) == 4:
            has_flow = True
            flow.append(float(parts[3]))
    cond = [1.0 if (p < 0 and math.isnan(c)) else c
            for p, c in zip(parent, cond)]
    return FlowTree(np.array(parent), np.array(cond),
                    flow=np.array(flow) if has_flow else None)


# ---------------------------------------------------------------------------
# truncation


def truncate_forest(parent, n: int, conductance=None, labels=None,
                    level=None) -> tuple:
    """Cut the forest to components of height <= n.

    Every edge above a vertex of height >= n is removed.  A vertex left
    alone (an original leaf hanging on a tall parent) is extended by its
    parent edge so each component carries at least one edge.  Returns
    (FlowTree, index map old -> new, top mask) where extended parents are
    fresh vertices.
    """
    parent = np.asarray(parent, dtype=np.int64)
    m = parent.size
    # heights in the input forest
    children = [[] for _ in range(m)]
    roots = []
    for v in range(m):
        if parent[v] >= 0:
            children[parent[v]].append(v)
        else:
            roots.append(v)
    height = np.zeros(m, dtype=np.int64)
    order = []
    for r in roots:
        stack = [(r, False)]
        while stack:
            v, done = stack.pop()
            if done:
                order.append(v)
                if children[v]:
                    height[v] = 1 + max(height[w] for w in children[v])
                continue
            stack.append((v, True))
            stack.extend((w, False) for w in children[v])
    if len(order) != m:
        raise TruncationError("parent map incomplete at the boundary")

    keep = height <= n
    new_index = -np.ones(m, dtype=np.int64)
    kept = np.nonzero(keep)[0]
    for i, v in enumerate(kept):
        new_index[v] = i
    new_parent = []
    new_cond = []
    new_labels = [] if labels is not None else None
    new_level = [] if level is not None else None
    cond = (np.asarray(conductance, dtype=float) if conductance is not None
            else np.ones(m))
    for v in kept:
        p = parent[v]
        if p >= 0 and keep[p]:
            new_parent.append(int(new_index[p]))
            new_cond.append(float(cond[v]))
        else:
            new_parent.append(-1)
            new_cond.append(float("nan"))
        if new_labels is not None:
            new_labels.append(labels[v])
        if new_level is not None:
            new_level.append(level[v])

    # extend singleton components (kept vertex with no kept children and
    # a dropped parent) by their parent edge
    extended = {}
    for i, v in enumerate(kept):
        p = parent[v]
        if new_parent[i] != -1 or p < 0:
            continue
        if any(keep[w] for w in children[v]):
            continue
        if p not in extended:
            extended[p] = len(new_parent)
            new_parent.append(-1)
            new_cond.append(float("nan"))
            if new_labels is not None:
                new_labels.append(labels[p])
            if new_level is not None:
                new_level.append(level[p])
        new_parent[i] = extended[p]
        new_cond[i] = float(cond[v])

    tree = FlowTree(np.array(new_parent), np.array(new_cond),
                    labels=new_labels,
                    level=np.array(new_level) if new_level is not None
                    else None)
    return tree, new_index, extended


# ---------------------------------------------------------------------------
# max-flow / min-cut


def _into(tree: FlowTree) -> np.ndarray:
    """Bottom-up saturation: into(v) = min(c(v), sum into children)."""
    into = np.zeros(tree.size)
    for v in tree._order:
        if tree.is_leaf[v]:
            s = tree.conductance[v] if tree.parent[v] >= 0 else 0.0
        else:
            s = math.fsum(into[w] for w in tree.children[v])
        if tree.parent[v] >= 0:
            s = min(s, tree.conductance[v])
        into[v] = s
    return into


def tree_maxflow(tree: FlowTree) -> tuple:
    """(value, flow array); the flow is legal and conserving.

    Where a parent edge saturates, the children's subtree flows are scaled
    proportionally; the last child absorbs the rounding remainder so
    conservation is exact.
    """
    into = _into(tree)
    flow = np.zeros(tree.size)
    for top in tree.tops:
        flow[top] = math.nan
    for v in tree._order[::-1]:                  # parents before children
        target = into[v] if tree.parent[v] < 0 else flow[v]
        kids = tree.children[v]
        if not kids:
            continue
        total = math.fsum(into[w] for w in kids)
        if total <= 0:
            for w in kids:
                flow[w] = 0.0
            continue
        scale = target / total
        acc = 0.0
        for w in kids[:-1]:
            flow[w] = into[w] * scale
            acc += flow[w]
        last = kids[-1]
        flow[last] = min(max(target - acc, 0.0), into[last])
    value = math.fsum(into[t] for t in tree.tops)
    return value, flow


def tree_mincut(tree: FlowTree) -> tuple:
    """(cut vertex indices, total conductance).

    Cut at the edge (v, parent) when c(v) <= flow arriving from below,
    otherwise recurse; ties cut at the higher edge.  The conductance
    equals the max-flow value.
    """
    into = _into(tree)
    cut = []
    for top in tree.tops:
        stack = list(tree.children[top])
        while stack:
            v = stack.pop()
            below = math.fsum(into[w] for w in tree.children[v])
            if tree.is_leaf[v] or tree.conductance[v] <= below:
                cut.append(v)
            else:
                stack.extend(tree.children[v])
    cut.sort()
    return cut, math.fsum(tree.conductance[v] for v in cut)


def _separates(tree: FlowTree, cut_mask: np.ndarray) -> bool:
    protected = np.zeros(tree.size, dtype=bool)
    for v in tree._order[::-1]:                  # parents before children
        p = tree.parent[v]
        protected[v] = cut_mask[v] or (p >= 0 and protected[p])
    # a leaf that is itself a top has no edge path, so nothing to cut
    need = tree.is_leaf & (tree.parent >= 0)
    return bool(protected[need].all())


def cut_minimality_prune(tree: FlowTree, cut) -> list:
    """Drop redundant cut edges, deepest first; idempotent.

    An edge is redundant when every leaf it guards is also guarded by
    another cut edge.  The input must itself be a cut.
    """
    cut = sorted(set(int(v) for v in cut))
    mask = np.zeros(tree.size, dtype=bool)
    for v in cut:
        if tree.parent[v] < 0:
            raise ValueError("top vertices carry no edge")
        mask[v] = True
    if not _separates(tree, mask):
        raise ValueError("input is not a cut")
    depth = np.zeros(tree.size, dtype=np.int64)
    for v in tree._order[::-1]:
        p = tree.parent[v]
        depth[v] = 0 if p < 0 else depth[p] + 1
    for v in sorted(cut, key=lambda v: (-depth[v], v)):
        mask[v] = False
        if not _separates(tree, mask):
            mask[v] = True
    return [int(v) for v in np.nonzero(mask)[0]]


# ---------------------------------------------------------------------------
# flow norm statistics


@dataclass
class FlowNormReport:
    flow_norms: np.ndarray             # per trial: sum_L f / |V|
    cut_conductances: np.ndarray       # per trial: sum_Pi c / |V|
    mid_terms: np.ndarray              # per trial: sum_Pi f / |V|
    chain_ok: bool                     # norm <= mid <= cut on every trial
    truncations: int

    @property
    def flow_norm(self) -> float:
        return float(self.flow_norms.mean())

    @property
    def cut_conductance(self) -> float:
        return float(self.cut_conductances.mean())

    def stderrs(self) -> tuple:
        n = self.flow_norms.size
        if n < 2:
            return (0.0, 0.0)
        return (float(self.flow_norms.std(ddof=1) / math.sqrt(n)),
                float(self.cut_conductances.std(ddof=1) / math.sqrt(n)))


def resolve_conductances(tree: FlowTree, spec, stream: RngStream,
                         trial: int) -> np.ndarray:
    """Edge conductances by spec: unit, iid_uniform, level, or callable."""
    n = tree.size
    if spec in (None, "unit"):
        return np.ones(n)
    if spec == "iid_uniform":
        s = stream.child("cond", trial)
        if tree.labels is not None:
            return np.array([0.1 + 1.9 * s.uniform("c", lab)
                             for lab in tree.labels])
        return np.array([0.1 + 1.9 * s.uniform("c", v) for v in range(n)])
    if spec == "level":
        if tree.level is None:
            raise ValueError("tree has no level data")
        return 2.0 ** tree.level.astype(float)
    if callable(spec):
        if tree.level is None:
            raise ValueError("tree has no level data")
        return np.array([float(spec(int(l))) for l in tree.level])
    raise ValueError(f"unknown conductance spec {spec!r}")


def flow_norm_estimate(model, n: int, trials: int,
                       conductance_spec="unit") -> FlowNormReport:
    """Monte Carlo of the root flow-norm and cut-conductance statistics.

    Each trial exports the root's component of the height-<= n forest,
    solves max-flow and min-cut, and records sum_L f / |V|,
    sum_Pi f / |V|, sum_Pi c / |V|.  A trial whose root sits above the
    cut contributes zeros.  The chain norm <= mid <= cut is exact per
    trial (every unit of flow crosses the cut).
    """
    norms, cuts, mids = [], [], []
    truncated = 0
    for t in range(trials):
        try:
            export = model.flow_forest(t, n)
        except TruncationError:
            truncated += 1
            continue
        if export is None:
            norms.append(0.0)
            cuts.append(0.0)
            mids.append(0.0)
            continue
        parent, level, labels, root = export
        tree = FlowTree(parent, np.ones(len(parent)), labels=labels,
                        level=np.asarray(level))
        tree.conductance = resolve_conductances(tree, conductance_spec,
                                                model.stream, t)
        edges = tree.parent >= 0
        if not (tree.conductance[edges] > 0).all():
            raise ValueError("conductances must be positive")
        value, flow = tree_maxflow(tree)
        cut, cond = tree_mincut(tree)
        size = tree.size
        leaf_sum = math.fsum(flow[v] for v in tree.leaves()
                             if tree.parent[v] >= 0)
        mid = math.fsum(flow[v] for v in cut)
        norms.append(leaf_sum / size)
        mids.append(mid / size)
        cuts.append(cond / size)
    norms = np.array(norms)
    mids = np.array(mids)
    cuts = np.array(cuts)
    ok = bool((norms <= mids + _TOL).all() and (mids <= cuts + _TOL).all())
    return FlowNormReport(norms, cuts, mids, ok, truncated)


# ---------------------------------------------------------------------------
# base-b cube tree over a point pattern


def badic_shift(stream: RngStream, b: int, dim: int, levels: int) -> np.ndarray:
    """Nested-grid shift with digits keyed exactly like the fractal model."""
    u = np.zeros(dim)
    for d in range(dim):
        total = 0
        for i in range(levels):
            total += stream.integer(b, "shift", i, d) * b ** i
        u[d] = float(total)
    return u


def build_badic_tree(window, b: int, N: int, stream: RngStream,
                     alpha: float = 1.0) -> FlowTree:
    """Tree of occupied cubes, levels 0..N, over the window's points.

    Leaves are level-0 occupied cubes; a level-n vertex carries edge
    conductance b^(n*alpha) to its level-(n+1) parent.  Level-N cubes
    attach to virtual tops (one per level-(N+1) cube) so every real cube
    edge is capacity-capped.  counts[v] = pattern points in the cube.
    """
    if b < 2:
        raise ValueError("base must be >= 2")
    if float(b) ** N > window.horizon + _TOL:
        raise ValueError("window too small for the requested level count")
    log2c = np.arange(N + 1) * alpha * math.log2(b)
    if log2c.max() > 1000:
        raise ValueError("conductances overflow; reduce N or alpha")
    coords = np.asarray(window.coords, dtype=float)
    dim = coords.shape[1]
    shift = badic_shift(stream, b, dim, N + 2)

    index_of = {}
    parent, cond, counts, level, labels = [], [], [], [], []

    def vertex(n, key) -> int:
        k = (n, key)
        if k in index_of:
            return index_of[k]
        idx = len(parent)
        index_of[k] = idx
        parent.append(-1)
        cond.append(float("nan"))
        counts.append(0)
        level.append(n)
        labels.append(k)
        return idx

    # floor(floor(y)/b) = floor(y/b), so integer floor-division walks the
    # nesting upward exactly, for real and integer patterns alike
    cur = np.floor(coords - shift).astype(np.int64)
    prev_ids = None
    point_leaf = None
    for n in range(N + 2):
        ids = np.array([vertex(n, row) for row in map(tuple, cur)],
                       dtype=np.int64)
        if n == 0:
            point_leaf = ids.copy()
        if n <= N:
            for i in ids:
                counts[i] += 1
        if prev_ids is not None:
            for child, par in zip(prev_ids, ids):
                parent[child] = par
                cond[child] = 2.0 ** log2c[n - 1]
        prev_ids = ids
        cur = np.floor_divide(cur, b)
    tree = FlowTree(np.array(parent), np.array(cond), labels=labels,
                    counts=np.array(counts), level=np.array(level))
    tree.point_leaf = point_leaf
    return tree


def _ancestor_at_level(tree: FlowTree, v: int, n: int) -> int:
    while tree.level[v] < n:
        v = int(tree.parent[v])
    return v


def cutset_to_covering(tree: FlowTree, cut, window, b: int) -> tuple:
    """Centers and radii (b^level) realizing a cut as a ball covering.

    Each cut cube contributes one ball of radius b^n at its
    lexicographically least pattern point; under the sup metric this
    covers the whole cube, so a cut of the tree covers the pattern.
    """
    coords = np.asarray(window.coords, dtype=float)
    if getattr(tree, "point_leaf", None) is None or tree.level is None:
        raise ValueError("cube tree with point map required")
    members = {int(v): [] for v in cut}
    for i, leaf in enumerate(tree.point_leaf):
        v = int(leaf)
        while v >= 0:
            if v in members:
                members[v].append(i)
                break
            v = int(tree.parent[v])
    centers, radii = [], []
    for v in sorted(members):
        pts = members[v]
        if not pts:
            continue
        best = min(pts, key=lambda i: tuple(coords[i]))
        centers.append(best)
        radii.append(float(b) ** int(tree.level[v]))
    return np.array(centers, dtype=np.int64), np.array(radii)
