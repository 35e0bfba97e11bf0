"""Equivariant ball coverings and covering-intensity estimation.

A covering assigns each vertex a radius in {0} union [M, inf); vertices with
positive radius carry a ball, and every safe vertex must land in some ball.
Statistics are evaluated at the root only, where coverage is decidable
whenever the horizon is at least the construction's reach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PointWindow, TruncationError
from .rng import RngStream


@dataclass
class Covering:
    min_radius: float                  # the M of the radius range
    radius: np.ndarray                 # per-vertex, 0 or >= M
    safe: np.ndarray                   # bool mask: status is horizon-safe

    def __post_init__(self):
        self.radius = np.asarray(self.radius, dtype=float)
        self.safe = np.asarray(self.safe, dtype=bool)
        pos = self.radius[self.radius > 0]
        if pos.size and pos.min() < self.min_radius - 1e-9:
            raise ValueError("positive radius below the minimum")


@dataclass
class WeightedBallCollection:
    """Finite list of candidate balls (center index, radius, cost)."""

    centers: np.ndarray
    radii: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=int)
        self.radii = np.asarray(self.radii, dtype=float)
        self.costs = np.asarray(self.costs, dtype=float)
        if (self.costs <= 0).any():
            raise ValueError("costs must be positive")

    @property
    def total_cost(self) -> float:
        return float(self.costs.sum())


# ---------------------------------------------------------------------------
# cube covering


def _cube_keys(coords: np.ndarray, r: float, shift: np.ndarray) -> np.ndarray:
    return np.floor((coords - shift) / r).astype(np.int64)


def cube_covering(window: PointWindow, r: float, rng: RngStream,
                  rule: str = "lexicographic", weights=None) -> Covering:
    """Partition space into half-open cubes of side r with a common uniform
    shift; one point per occupied cube receives radius r.

    rule "lexicographic" picks the least point of the cube;
    rule "weight" picks proportionally to `weights`.
    """
    if not isinstance(window, PointWindow):
        raise TypeError("cube covering needs a coordinate window")
    if r < 1:
        raise ValueError("cube side must be >= 1")
    coords = window.coords
    k = window.dim
    shift = np.array([rng.uniform("cube_shift", d) * r for d in range(k)])
    keys = _cube_keys(coords, r, shift)
    order = np.lexsort(tuple(coords[:, d] for d in range(k - 1, -1, -1)))

    radius = np.zeros(window.size)
    chosen = {}
    if rule == "lexicographic":
        for idx in order:
            key = tuple(keys[idx])
            if key not in chosen:
                chosen[key] = idx
    elif rule == "weight":
        w = np.asarray(weights, dtype=float)
        groups = {}
        for idx in order:
            groups.setdefault(tuple(keys[idx]), []).append(idx)
        for key, members in groups.items():
            wv = w[members]
            total = wv.sum()
            if total <= 0:
                chosen[key] = members[0]
                continue
            u = rng.uniform("cube_pick", key) * total
            chosen[key] = members[int(np.searchsorted(np.cumsum(wv), u))]
    else:
        raise ValueError(f"unknown rule {rule!r}")
    for idx in chosen.values():
        radius[idx] = r

    # v is safe when every ball that can cover it is materialized: its
    # own cube's representative sits within one cube diameter, and any
    # covering center's ball extends r beyond itself
    diam = r if window.metric == "sup" else r * math.sqrt(k)
    d_root = window.root_distances()
    safe = d_root + diam + r <= window.horizon + 1e-9
    return Covering(float(r), radius, safe)


def root_cube_selected(window: PointWindow, r: float, rng: RngStream,
                       rule: str = "lexicographic", weights=None) -> bool:
    cov = cube_covering(window, r, rng, rule, weights)
    return bool(cov.radius[window.root_index] > 0)


# ---------------------------------------------------------------------------
# selection covering


def selection_covering(window, weights, n: int, beta: float, rng: RngStream,
                       all_or_nothing: bool = False) -> Covering:
    """Select v with probability min(1, n^-beta * w(v)); selected vertices
    carry radius n, and a vertex with no selected point within distance n
    carries radius 1 (covers itself) or, in the all-or-nothing variant, n.
    """
    if n < 1 or beta < 0:
        raise ValueError("need n >= 1 and beta >= 0")
    w = np.asarray(weights, dtype=float)
    size = w.size
    probs = np.minimum(1.0, w * float(n) ** (-beta))
    selected = np.array([rng.uniform("select", i) < probs[i]
                         for i in range(size)])

    d_root = window.root_distances()
    # a vertex's status is decidable once every selected point that could
    # cover it is materialized together with its whole ball: margin 2n
    safe = np.asarray(d_root + 2 * n <= window.horizon + 1e-9)
    ball_fits = np.asarray(d_root + n <= window.horizon + 1e-9)
    if hasattr(window, "neighbors"):
        safe &= d_root >= 0
        ball_fits &= d_root >= 0

    radius = np.zeros(size)
    sel_idx = np.nonzero(selected)[0]
    for v in range(size):
        if selected[v]:
            if ball_fits[v]:
                radius[v] = n
            continue
        if not safe[v]:
            continue
        if sel_idx.size:
            dv = window.distances_from(v)
            near = (dv[sel_idx] <= n + 1e-9)
            if hasattr(window, "neighbors"):
                near &= dv[sel_idx] >= 0
            isolated = not bool(near.any())
        else:
            isolated = True
        if isolated:
            radius[v] = n if all_or_nothing else 1.0
    min_radius = 1.0 if not all_or_nothing else float(n)
    return Covering(min_radius, radius, safe)


# ---------------------------------------------------------------------------
# rounding covering


def rounding_covering(window, collection: WeightedBallCollection, a: float,
                      min_radius: float, rng: RngStream) -> Covering:
    """Keep each candidate ball with probability min(1, a * cost); every
    safe vertex left uncovered falls back to a ball of the minimum radius.
    """
    if a < 0:
        raise ValueError("a must be >= 0")
    if collection.radii.size and collection.radii.min() < min_radius - 1e-9:
        raise ValueError("collection radius below the minimum")
    size = window.size
    keep = np.array([rng.uniform("round", i) < min(1.0, a * c)
                     for i, c in enumerate(collection.costs)])

    best = np.zeros(size)
    covered = np.zeros(size, dtype=bool)
    for i in np.nonzero(keep)[0]:
        c = int(collection.centers[i])
        r = float(collection.radii[i])
        best[c] = max(best[c], r)
        covered[window.ball_indices(c, r)] = True

    max_r = float(collection.radii.max()) if collection.radii.size else min_radius
    d_root = window.root_distances()
    # v's coverage is decidable once every ball that could reach v fits
    safe = np.asarray(d_root + 2.0 * max(max_r, min_radius)
                      <= window.horizon + 1e-9)
    if hasattr(window, "neighbors"):
        safe &= d_root >= 0
    fallback = safe & ~covered
    radius = best.copy()
    radius[fallback] = np.maximum(radius[fallback], min_radius)
    return Covering(float(min_radius), radius, safe)


# ---------------------------------------------------------------------------
# validation and intensity


@dataclass
class CoverReport:
    valid: bool
    violations: list
    multiplicity: dict                # histogram over safe vertices
    max_multiplicity: int


def covering_validate(window, covering: Covering) -> CoverReport:
    """Check every safe vertex lies in a ball; report coverage multiplicity.

    Balls whose extent is not materialized are skipped (their centers are
    outside the safe region by construction); coverage of safe vertices is
    still exact because any ball reaching a safe vertex is materialized.
    """
    size = window.size
    mult = np.zeros(size, dtype=int)
    for v in np.nonzero(covering.radius > 0)[0]:
        try:
            mult[window.ball_indices(v, covering.radius[v])] += 1
        except TruncationError:
            if covering.safe[v]:
                raise
    safe = covering.safe
    violations = [int(v) for v in np.nonzero(safe & (mult == 0))[0]]
    hist = {}
    for m in mult[safe]:
        hist[int(m)] = hist.get(int(m), 0) + 1
    max_mult = int(mult[safe].max()) if safe.any() else 0
    return CoverReport(not violations, violations, hist, max_mult)


@dataclass
class IntensityEstimate:
    r: float
    probability: float
    stderr: float
    trials: int
    truncations: int


def covering_intensity(model, constructor, r: float, trials: int,
                       stream: RngStream,
                       horizon: float | None = None) -> IntensityEstimate:
    """Monte Carlo estimate of P(radius(root) != 0).

    `constructor(window, r, rng)` builds the covering for one trial.
    On a radius grid the decay slope of the intensity estimates the
    Minkowski dimension.
    """
    hits = 0
    done = 0
    truncated = 0
    for t in range(trials):
        rng = stream.child("trial", t, "covering")
        try:
            window = model.window(t, horizon if horizon is not None
                                  else max(2.0 * r + 2.0, 8.0))
            cov = constructor(window, r, rng)
        except TruncationError:
            truncated += 1
            continue
        hits += 1 if cov.radius[window.root_index] > 0 else 0
        done += 1
    if done == 0:
        raise TruncationError("all trials truncated")
    p = hits / done
    se = math.sqrt(max(p * (1 - p), 1e-12) / done)
    return IntensityEstimate(float(r), p, se, done, truncated)
