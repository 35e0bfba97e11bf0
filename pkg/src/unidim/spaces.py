"""Window generators for the example spaces, plus combinators.

Every model exposes window(trial, radius) as a pure function of
(seed, trial, radius, params).  Randomness is drawn through keyed label
paths so lazily explored regions are consistent across queries and
horizons (one coherent realization per seed).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .core import GraphWindow, PointWindow, TruncationError
from .offspring import from_config as offspring_from_config
from .rng import RngStream
from .trees import PWIT, Canopy, EternalGW, UnimodularGW

_BOX_BUDGET = 6_000_000


# ---------------------------------------------------------------------------
# deterministic lattices and Cayley graphs


@dataclass
class Lattice:
    """Z^k with the sup metric (or l1 when used as a Cayley graph)."""

    k: int = 1
    metric: str = "sup"
    stream: RngStream = None
    name: str = "lattice"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def window(self, trial: int, radius: int) -> PointWindow:
        r = int(radius)
        if (2 * r + 1) ** self.k > _BOX_BUDGET:
            raise TruncationError("lattice window too large")
        axes = [np.arange(-r, r + 1)] * self.k
        grids = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([g.ravel() for g in grids], axis=1).astype(float)
        if self.metric == "l1":
            coords = coords[np.abs(coords).sum(axis=1) <= r]
        root = int(np.nonzero((coords == 0).all(axis=1))[0][0])
        return PointWindow(coords, float(r), root, self.metric)

    def exact_ball_count(self, r: int) -> int:
        if self.metric == "sup":
            return (2 * r + 1) ** self.k
        raise NotImplementedError


@dataclass
class HeisenbergCayley:
    """Discrete Heisenberg group H_3(Z), word metric by BFS."""

    stream: RngStream = None
    name: str = "cayley"

    def window(self, trial: int, radius: int) -> GraphWindow:
        r = int(radius)
        index = {(0, 0, 0): 0}
        verts = [(0, 0, 0)]
        nbrs = [[]]
        dist = [0]
        queue = [0]
        head = 0
        while head < len(queue):
            vi = queue[head]
            head += 1
            if dist[vi] >= r:
                continue
            a, b, c = verts[vi]
            for cand in ((a + 1, b, c), (a - 1, b, c),
                         (a, b + 1, c + a), (a, b - 1, c - a)):
                wi = index.get(cand)
                if wi is None:
                    wi = len(verts)
                    if wi > _BOX_BUDGET:
                        raise TruncationError("Cayley window too large")
                    index[cand] = wi
                    verts.append(cand)
                    nbrs.append([])
                    dist.append(dist[vi] + 1)
                    queue.append(wi)
                nbrs[vi].append(wi)
                nbrs[wi].append(vi)
        # dedupe neighbor lists (each edge was added from both sides)
        nbrs = [sorted(set(x)) for x in nbrs]
        return GraphWindow(nbrs, r, 0, labels=verts)


# ---------------------------------------------------------------------------
# random-walk point sets


def _pareto_jumps(gen: np.random.Generator, beta: float, target: float):
    """Partial sums of jumps with tail P(J > r) = r^(-beta), until > target."""
    sums = []
    total = 0.0
    while total <= target:
        block = gen.random(size=256)
        jumps = (1.0 - block) ** (-1.0 / beta)
        for j in jumps:
            total += j
            sums.append(total)
            if total > target:
                break
    return np.array(sums)


@dataclass
class SRWImage:
    """Two-sided strictly increasing walk with heavy-tailed jumps."""

    beta: float = 0.5
    stream: RngStream = None
    name: str = "srw_image"

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def _points(self, trial: int, radius: float):
        s = self.stream.child("trial", trial)
        # one extra jump past the horizon so every in-window gap is known
        fwd = _pareto_jumps(s.child("fwd").generator(), self.beta, radius)
        bwd = _pareto_jumps(s.child("bwd").generator(), self.beta, radius)
        return fwd, bwd

    def window(self, trial: int, radius: float) -> PointWindow:
        fwd, bwd = self._points(trial, radius)
        pts = np.concatenate([-bwd[::-1], [0.0], fwd])
        coords = pts.reshape(-1, 1)
        root = bwd.size
        win = PointWindow(coords, float(radius), root, "euclidean")
        return win

    def gap_weights(self, win: PointWindow) -> np.ndarray:
        """Forward gap at each point.

        The largest point lies past the horizon (the walk is simulated one
        jump beyond), so every in-horizon point has its gap; the last entry
        is poisoned with nan to fail loudly if ever used.
        """
        x = win.coords[:, 0]
        gaps = np.empty_like(x)
        gaps[:-1] = np.diff(x)
        gaps[-1] = np.nan
        return gaps


@dataclass
class SRWZeros:
    """Zero set of the two-sided simple symmetric walk, metric |i - j|."""

    stream: RngStream = None
    name: str = "srw_zeros"

    def window(self, trial: int, radius: int) -> PointWindow:
        r = int(radius)
        s = self.stream.child("trial", trial)
        zeros = [0]
        for side in ("fwd", "bwd"):
            gen = s.child(side).generator()
            steps = gen.integers(0, 2, size=r) * 2 - 1
            walk = np.cumsum(steps)
            hits = np.nonzero(walk == 0)[0] + 1
            sign = 1 if side == "fwd" else -1
            zeros.extend((sign * hits).tolist())
        coords = np.sort(np.array(zeros, dtype=float)).reshape(-1, 1)
        root = int(np.nonzero(coords[:, 0] == 0)[0][0])
        return PointWindow(coords, float(r), root, "euclidean")


@dataclass
class SRWGraph:
    """Graph of the simple walk {(n, S_n)} with metric max(sqrt|dx|, |dy|)."""

    metric: str = "walk_graph"     # or "sup"
    stream: RngStream = None
    name: str = "srw_graph"

    def window(self, trial: int, radius: float) -> PointWindow:
        r = float(radius)
        h = int(math.ceil(r * r)) if self.metric == "walk_graph" else int(r)
        if 2 * h + 1 > _BOX_BUDGET:
            raise TruncationError("walk-graph window too large")
        s = self.stream.child("trial", trial)
        xs = [np.arange(-h, 0)[::-1], np.arange(1, h + 1)]
        pieces = {}
        for side, idx in zip(("bwd", "fwd"), xs):
            gen = s.child(side).generator()
            steps = gen.integers(0, 2, size=h) * 2 - 1
            pieces[side] = np.cumsum(steps)
        n = np.arange(-h, h + 1)
        vals = np.concatenate([pieces["bwd"][::-1], [0], pieces["fwd"]])
        coords = np.stack([n, vals], axis=1).astype(float)
        root = h
        return PointWindow(coords, r, root, self.metric)


# ---------------------------------------------------------------------------
# drainage network


@dataclass
class DrainageNetwork:
    """Forest on the even sublattice: each (x,y) drains to (x+-1, y-1)."""

    stream: RngStream = None
    name: str = "drainage"

    def _arrow(self, trial: int, x: int, y: int) -> int:
        u = self.stream.uniform("trial", trial, "arrow", x, y)
        return 1 if u < 0.5 else -1

    def window(self, trial: int, radius: int) -> GraphWindow:
        r = int(radius)
        index = {(0, 0): 0}
        verts = [(0, 0)]
        dist = [0]
        nbrs = [[]]
        queue = [0]
        head = 0

        def vertex(v):
            wi = index.get(v)
            if wi is None:
                wi = len(verts)
                index[v] = wi
                verts.append(v)
                dist.append(None)
                nbrs.append([])
            return wi

        while head < len(queue):
            vi = queue[head]
            head += 1
            if dist[vi] >= r:
                continue
            x, y = verts[vi]
            links = [(x + self._arrow(trial, x, y), y - 1)]   # parent
            for cx in (x - 1, x + 1):                          # children
                if cx + self._arrow(trial, cx, y + 1) == x:
                    links.append((cx, y + 1))
            for cand in links:
                wi = vertex(cand)
                if dist[wi] is None:
                    dist[wi] = dist[vi] + 1
                    queue.append(wi)
                nbrs[vi].append(wi)
                nbrs[wi].append(vi)
        nbrs = [sorted(set(x)) for x in nbrs]
        return GraphWindow(nbrs, r, 0, labels=verts)

    def parent_of(self, trial: int, v: tuple) -> tuple:
        x, y = v
        return (x + self._arrow(trial, x, y), y - 1)


# ---------------------------------------------------------------------------
# digit-restricted integers


_BLOCK_BOUNDS = [0, 4, 9, 16, 256, 65536]
while _BLOCK_BOUNDS[-1] < 1 << 200:
    _BLOCK_BOUNDS.append(_BLOCK_BOUNDS[-1] ** 2)


def digit_predicate(preset) -> object:
    if callable(preset):
        return preset
    if preset == "all":
        return lambda i: True
    if preset == "none":
        return lambda i: False
    if preset == "even":
        return lambda i: i % 2 == 0
    if preset == "block":
        # alternating inclusion blocks with squared boundaries: the digit
        # density oscillates between 0 and 1
        def member(i):
            j = bisect_right(_BLOCK_BOUNDS, i)
            return j % 2 == 1
        return member
    if isinstance(preset, (list, tuple, set, frozenset)):
        allowed = frozenset(int(i) for i in preset)
        return lambda i: i in allowed
    raise ValueError(f"unknown digit set {preset!r}")


@dataclass
class DigitRestriction:
    """Signed sums over a restricted set of binary digit positions.

    Points are sums of eps_i * 2^(i+1) over finite subsets of the allowed
    positions, with one frozen random sign per position.
    """

    digits: object = "even"
    cap_margin: int = 40
    stream: RngStream = None
    name: str = "digits"

    def __post_init__(self):
        self._member = digit_predicate(self.digits)

    def _sign(self, trial: int, i: int) -> int:
        return 1 if self.stream.uniform("trial", trial, "sign", i) < 0.5 else -1

    def _cap(self, radius: float) -> int:
        return int(math.ceil(math.log2(max(radius, 2)))) + self.cap_margin

    def enumerate_points(self, trial: int, radius: float,
                         cap: int | None = None) -> np.ndarray:
        r = float(radius)
        cap = self._cap(r) if cap is None else cap
        if r >= 2.0 ** (cap - 2):
            raise ValueError("horizon too large for the digit cap")
        positions = [i for i in range(cap, -1, -1) if self._member(i)]
        sums = {0}
        for i in positions:
            delta = self._sign(trial, i) * (1 << (i + 1))
            bound = r + 2.0 ** (i + 1)
            sums = {s for s in sums if abs(s) <= bound}
            sums |= {s + delta for s in sums if abs(s + delta) <= bound}
        return np.array(sorted(s for s in sums if abs(s) <= r), dtype=float)

    def window(self, trial: int, radius: float) -> PointWindow:
        pts = self.enumerate_points(trial, radius)
        coords = pts.reshape(-1, 1)
        root = int(np.searchsorted(pts, 0.0))
        return PointWindow(coords, float(radius), root, "euclidean")

    def contains(self, trial: int, x: int, cap: int | None = None) -> bool:
        """Membership by carry peeling from the low digits.

        Track t = (x - decided digits) / 2^(i+1); digit i maps t to
        (t - eps_i)/2 (or t/2 when skipped), pruned on parity.  t = 0 is
        the accepting state.
        """
        x = int(x)
        cap = cap if cap is not None else self._cap(abs(x) + 2)
        if x % 2 != 0:
            return False
        states = {x // 2}
        for i in range(cap + 1):
            if 0 in states:
                return True
            nxt = set()
            for t in states:
                opts = (0, self._sign(trial, i)) if self._member(i) else (0,)
                for eps in opts:
                    d = t - eps
                    if d % 2 == 0:
                        nxt.add(d // 2)
            states = nxt
            if not states:
                return False
        return 0 in states


# ---------------------------------------------------------------------------
# randomized Cantor-type subset of Z^k


@dataclass
class CantorRandomized:
    """Survivors of nested random cube deletions on Z^k.

    Level-n cubes (side b^n, common random shift) are independently kept
    with probability p; cubes containing the origin are never deleted.
    Deletions act at levels n >= 1, so every lattice point survives level 0.
    """

    b: int = 2
    p: float = 0.8
    k: int = 1
    stream: RngStream = None
    name: str = "cantor"

    def __post_init__(self):
        if self.b < 2 or not (0.0 <= self.p <= 1.0) or self.k < 1:
            raise ValueError("need b >= 2, p in [0,1], k >= 1")

    def shift(self, trial: int, level: int) -> np.ndarray:
        """Cumulative shift U_n = sum_{i<n} a_i b^i, one digit per level."""
        u = np.zeros(self.k, dtype=np.int64)
        for i in range(level):
            for d in range(self.k):
                a = self.stream.integer(self.b, "trial", trial, "shift", i, d)
                u[d] += a * self.b ** i
        return u

    def _keep(self, trial: int, level: int, anchor: tuple) -> bool:
        u = self.stream.uniform("trial", trial, "keep", level, anchor)
        return u < self.p

    def survives(self, trial: int, point) -> bool:
        v = np.asarray(point, dtype=np.int64)
        for level in range(1, 500):
            side = self.b ** level
            u = self.shift(trial, level)
            anchor = tuple((((v - u) // side) * side + u).tolist())
            origin_anchor = tuple((((-u) // side) * side + u).tolist())
            if anchor == origin_anchor:
                return True
            if not self._keep(trial, level, anchor):
                return False
        raise TruncationError("cube levels failed to merge")

    def window(self, trial: int, radius: int) -> PointWindow:
        r = int(radius)
        if (2 * r + 1) ** self.k > _BOX_BUDGET:
            raise TruncationError("cantor window too large")
        axes = [np.arange(-r, r + 1)] * self.k
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        alive = np.ones(pts.shape[0], dtype=bool)
        for level in range(1, 500):
            side = self.b ** level
            u = self.shift(trial, level)
            anchors = ((pts - u) // side) * side + u
            origin_anchor = ((0 - u) // side) * side + u
            same = (anchors == origin_anchor).all(axis=1)
            if same[alive].all():
                break
            idx = np.nonzero(alive & ~same)[0]
            keys = {}
            for i in idx:
                key = tuple(anchors[i].tolist())
                kept = keys.get(key)
                if kept is None:
                    kept = self._keep(trial, level, key)
                    keys[key] = kept
                if not kept:
                    alive[i] = False
        else:
            raise TruncationError("cube levels failed to merge")
        survivors = pts[alive].astype(float)
        root = int(np.nonzero((survivors == 0).all(axis=1))[0][0])
        return PointWindow(survivors, float(r), root, "sup")


# ---------------------------------------------------------------------------
# combinators


@dataclass
class Superpose:
    """Union of a point pattern with an independently shifted lattice."""

    inner: object = None
    stream: RngStream = None
    name: str = "superpose"

    def window(self, trial: int, radius: float) -> PointWindow:
        win = self.inner.window(trial, radius)
        k = win.dim
        r = float(radius)
        shift = np.array([self.stream.uniform("trial", trial, "shift", d)
                          for d in range(k)])
        axes = [np.arange(-math.ceil(r) - 1, math.ceil(r) + 2)] * k
        grids = np.meshgrid(*axes, indexing="ij")
        lat = np.stack([g.ravel() for g in grids], axis=1) + shift
        keep = np.abs(lat).max(axis=1) <= r if win.metric == "sup" else \
            np.sqrt((lat * lat).sum(axis=1)) <= r
        coords = np.concatenate([win.coords, lat[keep]], axis=0)
        return PointWindow(coords, r, win.root_index, win.metric)


@dataclass
class ProductSpace:
    """Pairs from two windows at one horizon; metric is the sup of the two."""

    left: object = None
    right: object = None
    stream: RngStream = None
    name: str = "product"

    def window(self, trial: int, radius: float) -> PointWindow:
        w1 = self.left.window(trial, radius)
        w2 = self.right.window(trial, radius)
        if abs(w1.horizon - w2.horizon) > 1e-9:
            raise ValueError("product factors must share the horizon")
        for w in (w1, w2):
            if w.dim != 1 or w.metric not in ("euclidean", "sup", "l1"):
                raise ValueError("product factors must be 1-d point sets")
        if w1.size * w2.size > _BOX_BUDGET:
            raise TruncationError("product window too large")
        xs = w1.coords[:, 0]
        ys = w2.coords[:, 0]
        coords = np.stack([np.repeat(xs, ys.size), np.tile(ys, xs.size)],
                          axis=1)
        root = w1.root_index * ys.size + w2.root_index
        return PointWindow(coords, float(radius), root, "sup")


# ---------------------------------------------------------------------------
# registry


def _mk_lattice(stream, params):
    return Lattice(k=int(params.get("k", 1)),
                   metric=params.get("metric", "sup"), stream=stream)


def _mk_cayley(stream, params):
    preset = params.get("preset", "heisenberg")
    if preset == "heisenberg":
        return HeisenbergCayley(stream=stream)
    if preset == "zk":
        return Lattice(k=int(params.get("k", 1)), metric="l1", stream=stream,
                       name="cayley")
    raise ValueError(f"unknown cayley preset {preset!r}")


def canopy_profile(params):
    prof = params.get("profile", "standard")
    if prof == "standard":
        return lambda n: n
    if prof == "const":
        return lambda n: 0
    if prof == "log":
        alpha = float(params.get("alpha", 2.0))
        qs = np.ceil(alpha * np.log2(np.arange(_PROFILE_LEN) + 1.0))
        return lambda n: int(qs[n])
    if prof == "osc":
        lo = float(params.get("lo", 1.5))
        hi = float(params.get("hi", 3.0))
        qs = np.empty(_PROFILE_LEN)
        cur, nxt, use_hi = 0, 4, False
        slope = lo
        for n in range(_PROFILE_LEN):
            if n >= nxt:
                cur, nxt = nxt, nxt * 4
                use_hi = not use_hi
                slope = hi if use_hi else lo
            qs[n] = slope * math.log2(n + 1.0)
        qs = np.ceil(np.maximum.accumulate(qs))
        return lambda n: int(qs[n])
    raise ValueError(f"unknown canopy profile {prof!r}")


_PROFILE_LEN = 1 << 18


def _mk_canopy(stream, params):
    return Canopy(q=canopy_profile(params), stream=stream)


def _offspring_of(params, default_mean=1.0):
    fam = params.get("offspring", "poisson")
    if fam == "poisson":
        return offspring_from_config(
            "poisson", mean=float(params.get("mean", default_mean)))
    if fam in ("geometric", "geometric_shifted", "fractional_linear"):
        return offspring_from_config(fam, a=float(params.get("a", 1.0)))
    if fam == "binomial":
        return offspring_from_config("binomial", n=int(params.get("n", 2)),
                                     p=float(params.get("p", 0.5)))
    raise ValueError(f"unknown offspring family {fam!r}")


def _mk_ugw(stream, params):
    mu = _offspring_of(params, default_mean=2.0)
    return UnimodularGW(
        mu=mu,
        condition_survival=bool(params.get("condition_survival", False)),
        margin=int(params.get("margin", 16)),
        survival_depth=int(params.get("survival_depth", 64)),
        stream=stream)


def _mk_egw(stream, params):
    return EternalGW(mu=_offspring_of(params, default_mean=1.0),
                     stream=stream)


def _mk_pwit(stream, params):
    return PWIT(k=int(params.get("k", 1)), stream=stream)


def _mk_superpose(stream, params):
    inner_name = params.get("inner", "srw_image")
    inner_params = {k[6:]: v for k, v in params.items()
                    if k.startswith("inner.")}
    inner = make_space(inner_name, inner_params, stream.child("inner"))
    return Superpose(inner=inner, stream=stream)


def _mk_product(stream, params):
    def sub(side, default):
        name = params.get(side, default)
        sub_params = {k[len(side) + 1:]: v for k, v in params.items()
                      if k.startswith(side + ".")}
        return make_space(name, sub_params, stream.child(side))
    return ProductSpace(left=sub("left", "lattice"),
                        right=sub("right", "srw_zeros"), stream=stream)


_REGISTRY = {
    "lattice": (_mk_lattice,
                "Integer lattice Z^k under the sup metric; deterministic "
                "windows with exact ball counts."),
    "cayley": (_mk_cayley,
               "Cayley graph windows by breadth-first search: preset 'zk' "
               "(Z^k, word metric) or 'heisenberg' (discrete Heisenberg "
               "group, polynomial growth of degree 4)."),
    "canopy": (_mk_canopy,
               "Layered tree whose level-(n+1) vertices each carry "
               "2^(q[n+1]-q[n]) children; only the root's level is random. "
               "Profiles: standard (q=n), const, log(alpha), osc(lo, hi)."),
    "ugw": (_mk_ugw,
            "Branching tree rooted at a typical vertex: the root's offspring "
            "law is the size-biased version of mu, everyone else draws mu. "
            "Optional rejection conditioning on survival to a fixed depth."),
    "egw": (_mk_egw,
            "Critical branching tree made eternal: the offspring law must "
            "have mean exactly 1 (criticality is enforced), the root keeps "
            "an infinite ancestor line, and each ancestor gets side "
            "subtrees with the size-biased-minus-one count."),
    "pwit": (_mk_pwit,
             "Poisson weighted tree: each vertex's children sit at distances "
             "drawn from a Poisson process on [0, inf) with intensity x^k; "
             "within budget t the child count is Poisson(t^(k+1)/(k+1))."),
    "srw_image": (lambda s, p: SRWImage(beta=float(p.get("beta", 0.5)),
                                        stream=s),
                  "Image of a transient walk with positive heavy-tailed "
                  "jumps, P(jump > r) = r^(-beta) for r >= 1."),
    "srw_zeros": (lambda s, p: SRWZeros(stream=s),
                  "Zero set of the two-sided simple symmetric random walk, "
                  "with the index metric."),
    "srw_graph": (lambda s, p: SRWGraph(metric=p.get("metric", "walk_graph"),
                                        stream=s),
                  "Graph {(n, S_n)} of the simple walk with metric "
                  "max(sqrt|dx|, |dy|) (flag 'sup' for the plain sup metric)."),
    "drainage": (lambda s, p: DrainageNetwork(stream=s),
                 "Drainage forest on the even lattice: every (x, y) drains "
                 "to (x-1, y-1) or (x+1, y-1) by an independent fair coin."),
    "digits": (lambda s, p: DigitRestriction(digits=p.get("set", "even"),
                                             stream=s),
               "Integers representable as signed sums of 2^(i+1) over a "
               "restricted digit set; presets: even, block, all, none."),
    "cantor": (lambda s, p: CantorRandomized(b=int(p.get("b", 2)),
                                             p=float(p.get("p", 0.8)),
                                             k=int(p.get("k", 1)), stream=s),
               "Random Cantor-type subset of Z^k: nested shifted cube "
               "partitions, each non-origin cube kept with probability p."),
    "superpose": (_mk_superpose,
                  "Union of a point pattern with an independently shifted "
                  "copy of the integer lattice."),
    "product": (_mk_product,
                "Product of two 1-d point models under the sup metric."),
}

GENERATOR_NAMES = [n for n in _REGISTRY if n not in ("superpose", "product")]
COMBINATOR_NAMES = ["superpose", "product"]


def list_spaces() -> list:
    return list(_REGISTRY)


def describe_space(name: str) -> str:
    if name not in _REGISTRY:
        raise KeyError(f"unknown space {name!r}")
    return _REGISTRY[name][1]


def make_space(name: str, params: dict, stream: RngStream):
    if name not in _REGISTRY:
        raise KeyError(f"unknown space {name!r}")
    return _REGISTRY[name][0](stream, dict(params))
