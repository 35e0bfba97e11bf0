"""Growth-rate estimators: ball-weight slopes, dimension sandwiches,
mass-distribution bounds, and the Euclidean decay formulas.

Conventions shared by every estimator here:
  * radius grids are strictly increasing, dyadic by default;
  * per-trial curves are log2 of ball weights at the root;
  * liminf/limsup proxies are the min/max of incremental slopes at a
    fixed grid lag; the interval endpoints use the mean curve, whose
    increments are far less noisy than any single trial's (per-trial
    proxies and their across-trial minima are reported alongside).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (TruncationError, bootstrap_slope_sigma, default_lag,
                   log2_increments, slope_fit, SlopeFit)

_EPS = 1e-9


# ---------------------------------------------------------------------------
# weights


def resolve_weights(model, window, spec, trial: int) -> np.ndarray:
    """Per-vertex weights for a window; keyed by stable vertex identity."""
    if spec in (None, "unit", "one"):
        return np.ones(window.size)
    if spec == "zero":
        return np.zeros(window.size)
    if spec == "iid_uniform":
        s = model.stream.child("marks", trial)
        labels = getattr(window, "labels", None)
        if labels is None:
            labels = [tuple(row) for row in np.asarray(window.coords)]
        return np.array([s.uniform("w", tuple(l) if isinstance(l, (list, np.ndarray)) else l)
                         for l in labels])
    if spec == "gap":
        return model.gap_weights(window)
    if spec == "inverse_cube":
        coords = np.asarray(window.coords)
        anchors = np.floor(coords)
        counts = {}
        for row in anchors:
            counts[tuple(row)] = counts.get(tuple(row), 0) + 1
        return np.array([1.0 / counts[tuple(row)] for row in anchors])
    raise ValueError(f"unknown weight spec {spec!r}")


def ball_weight_curve(window, weights, radii) -> np.ndarray:
    """w(N_r(o)) for each r; the root's own weight is always included."""
    radii = np.asarray(radii, dtype=float)
    if radii.max() > window.horizon + _EPS:
        raise TruncationError("radius grid exceeds horizon")
    d = window.root_distances()
    w = np.asarray(weights, dtype=float)
    if hasattr(window, "neighbors"):
        mask = d >= 0
        d, w = d[mask], w[mask]
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(w[order])
    idx = np.searchsorted(d[order], radii + _EPS)
    return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


# ---------------------------------------------------------------------------
# growth report


@dataclass
class GrowthReport:
    space: str
    weight: str
    grid: np.ndarray
    per_trial_log: np.ndarray          # (trials, grid) log2 ball weights
    truncations: int
    root_weights: np.ndarray           # w(o) per trial
    flags: list = field(default_factory=list)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if (np.diff(g) <= 0).any():
            raise ValueError("grid must be strictly increasing")
        curves = np.asarray(self.per_trial_log)
        if (np.diff(curves, axis=1) < -1e-12).any():
            raise ValueError("trial curves must be nondecreasing in r")
        self.grid = g
        self.log_grid = np.log2(g)

    @property
    def valid(self) -> bool:
        return self.truncations == 0

    @property
    def trials(self) -> int:
        return self.per_trial_log.shape[0]

    @property
    def mean_curve(self) -> np.ndarray:
        return self.per_trial_log.mean(axis=0)

    def mean_slope(self) -> SlopeFit:
        return slope_fit(self.log_grid, self.mean_curve)

    def lag(self) -> int:
        return default_lag(self.grid.size)

    def per_trial_increments(self) -> np.ndarray:
        """(trials, windows) incremental slopes at the default lag."""
        lag = self.lag()
        num = self.per_trial_log[:, lag:] - self.per_trial_log[:, :-lag]
        den = self.log_grid[lag:] - self.log_grid[:-lag]
        return num / den

    def per_trial_liminf(self) -> np.ndarray:
        return self.per_trial_increments().min(axis=1)

    def per_trial_limsup(self) -> np.ndarray:
        return self.per_trial_increments().max(axis=1)

    def mean_curve_increments(self) -> np.ndarray:
        return log2_increments(self.log_grid, self.mean_curve, self.lag())

    def essinf_proxies(self) -> dict:
        lo = self.per_trial_liminf()
        hi = self.per_trial_limsup()
        return {
            "liminf_min": float(lo.min()),
            "liminf_p05": float(np.percentile(lo, 5)),
            "limsup_min": float(hi.min()),
            "limsup_p05": float(np.percentile(hi, 5)),
        }

    def bootstrap_sigma(self, n_boot: int = 200) -> float:
        gen = np.random.Generator(np.random.Philox(key=12345))
        return bootstrap_slope_sigma(self.log_grid, self.per_trial_log, gen,
                                     n_boot)


def growth_report(model, weight_spec, grid, trials: int,
                  horizon=None) -> GrowthReport:
    """Sample w(N_r(o)) curves at the root across trials."""
    grid = np.asarray(grid, dtype=float)
    horizon = float(grid.max()) if horizon is None else float(horizon)
    rows = []
    roots = []
    truncated = 0
    for t in range(trials):
        try:
            win = model.window(t, horizon)
            w = resolve_weights(model, win, weight_spec, t)
            curve = ball_weight_curve(win, w, grid)
        except TruncationError:
            truncated += 1
            continue
        if (curve <= 0).any():
            truncated += 1
            continue
        rows.append(np.log2(curve))
        roots.append(w[win.root_index])
    if not rows:
        raise TruncationError("no usable trials")
    return GrowthReport(getattr(model, "name", "?"), str(weight_spec), grid,
                        np.array(rows), truncated, np.array(roots))


# ---------------------------------------------------------------------------
# Billingsley interval


@dataclass
class BillingsleyInterval:
    lower: float
    upper: float
    lower_ci: tuple
    upper_ci: tuple
    essinf: dict
    mean_slope: float

    def as_tuple(self) -> tuple:
        return (self.lower, self.upper)


def billingsley_interval(report: GrowthReport,
                         n_boot: int = 200) -> BillingsleyInterval:
    """Dimension sandwich endpoints from the mean log-curve.

    lower/upper = min/max incremental slope of the mean curve at the
    default lag; bootstrap CIs resample trials.  The raw per-trial
    essential-infimum proxies ride along in `essinf`.
    """
    if not report.valid:
        raise ValueError("report has truncated trials; refusing to estimate")
    inc = report.mean_curve_increments()
    lower, upper = float(inc.min()), float(inc.max())

    gen = np.random.Generator(np.random.Philox(key=54321))
    lows, highs = [], []
    mat = report.per_trial_log
    n = mat.shape[0]
    lag = report.lag()
    den = report.log_grid[lag:] - report.log_grid[:-lag]
    for _ in range(n_boot):
        pick = gen.integers(0, n, size=n)
        curve = mat[pick].mean(axis=0)
        inc_b = (curve[lag:] - curve[:-lag]) / den
        lows.append(inc_b.min())
        highs.append(inc_b.max())
    lo_ci = (float(np.percentile(lows, 2.5)), float(np.percentile(lows, 97.5)))
    hi_ci = (float(np.percentile(highs, 2.5)),
             float(np.percentile(highs, 97.5)))
    return BillingsleyInterval(lower, upper, lo_ci, hi_ci,
                               report.essinf_proxies(),
                               report.mean_slope().slope)


# ---------------------------------------------------------------------------
# mass distribution principle


@dataclass
class MdpResult:
    hypothesis_ok: bool
    bound: float | None                # E[w(o)]/c when hypothesis holds
    bound_stderr: float | None
    limsup_variant: float | None       # divides by 2^alpha c
    violations: list
    mean_root_weight: float
    trials: int


def mdp_content_bound(model, weight_spec, alpha: float, c: float, M: float,
                      trials: int, grid, horizon=None) -> MdpResult:
    """Lower bound E[w(o)]/c on the alpha-content, guarded by the pointwise
    hypothesis w(N_r(o)) <= c r^alpha on every sampled trial and radius.

    A single violation yields a hypothesis-failed result and no bound.
    """
    grid = np.asarray(grid, dtype=float)
    grid = grid[grid >= M - _EPS]
    if grid.size == 0:
        raise ValueError("grid has no radii >= M")
    horizon = float(grid.max()) if horizon is None else float(horizon)
    violations = []
    roots = []
    for t in range(trials):
        win = model.window(t, horizon)
        w = resolve_weights(model, win, weight_spec, t)
        curve = ball_weight_curve(win, w, grid)
        bad = curve > c * grid ** alpha + 1e-9
        for j in np.nonzero(bad)[0]:
            violations.append((t, float(grid[j]), float(curve[j])))
        roots.append(w[win.root_index])
    roots = np.array(roots)
    mean_w = float(roots.mean())
    if violations:
        return MdpResult(False, None, None, None, violations, mean_w, trials)
    se = float(roots.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MdpResult(True, mean_w / c, se / c,
                     mean_w / (2.0 ** alpha * c), [], mean_w, trials)


# ---------------------------------------------------------------------------
# Euclidean Minkowski decay


@dataclass
class MinkowskiEstimate:
    grid: np.ndarray
    cube_decay: SlopeFit               # -slope of log E[w(0)/w(cube_r)]
    ball_decay: SlopeFit
    growth: SlopeFit                   # slope of log E[w(N_r(0))]
    cube_sigma: float
    ball_sigma: float
    growth_sigma: float
    chain_ok: bool
    truncations: int

    def chain(self) -> tuple:
        """(cube decay, ball decay, growth) as positive exponents."""
        return (-self.cube_decay.slope, -self.ball_decay.slope,
                self.growth.slope)


def euclidean_minkowski_estimate(model, weight_spec, grid, trials: int,
                                 horizon=None) -> MinkowskiEstimate:
    """Decay of E[w(0)/w(cube at 0)] and E[w(0)/w(N_r(0))] on a pattern.

    The cube of side r containing the root gets an independent uniform
    shift per (trial, r).  The chain cube-decay <= ball-decay <= growth
    is checked within two bootstrap sigmas.
    """
    grid = np.asarray(grid, dtype=float)
    horizon = 2.0 * float(grid.max()) if horizon is None else float(horizon)
    ratios_cube = []
    ratios_ball = []
    ball_weights = []
    truncated = 0
    for t in range(trials):
        try:
            win = model.window(t, horizon)
            w = resolve_weights(model, win, weight_spec, t)
            w0 = w[win.root_index]
            curve = ball_weight_curve(win, w, grid)
            coords = win.coords
            root = coords[win.root_index]
            cube_w = np.empty(grid.size)
            for j, r in enumerate(grid):
                s = model.stream.child("trial", t, "cube", int(j))
                shift = np.array([s.uniform("u", d) * r
                                  for d in range(win.dim)])
                key0 = np.floor((root - shift) / r)
                keys = np.floor((coords - shift) / r)
                inside = (keys == key0).all(axis=1)
                cube_w[j] = w[inside].sum()
        except TruncationError:
            truncated += 1
            continue
        ratios_cube.append(w0 / cube_w)
        ratios_ball.append(w0 / curve)
        ball_weights.append(curve)
    log_r = np.log2(grid)
    def fit_of(rows):
        mean = np.log2(np.mean(rows, axis=0))
        return slope_fit(log_r, mean)
    gen = np.random.Generator(np.random.Philox(key=99))
    def sigma_of(rows, sign):
        mat = np.array(rows)
        vals = []
        for _ in range(200):
            pick = gen.integers(0, mat.shape[0], size=mat.shape[0])
            vals.append(sign * slope_fit(
                log_r, np.log2(mat[pick].mean(axis=0))).slope)
        return float(np.std(vals, ddof=1))
    cube_fit = fit_of(ratios_cube)
    ball_fit = fit_of(ratios_ball)
    grow_fit = fit_of(ball_weights)
    s_cube = sigma_of(ratios_cube, -1.0)
    s_ball = sigma_of(ratios_ball, -1.0)
    s_grow = sigma_of(ball_weights, 1.0)
    d_cube, d_ball, g = -cube_fit.slope, -ball_fit.slope, grow_fit.slope
    chain_ok = (d_cube <= d_ball + 2 * (s_cube + s_ball) and
                d_ball <= g + 2 * (s_ball + s_grow))
    return MinkowskiEstimate(grid, cube_fit, ball_fit, grow_fit,
                             s_cube, s_ball, s_grow, chain_ok, truncated)


# ---------------------------------------------------------------------------
# growth-rate comparison of two weights


@dataclass
class BirkhoffComparison:
    pairs: np.ndarray                  # (trials, 2): liminf w1, limsup w2
    violation_rate: float
    w1_mean_flag: bool                 # True when E[w1(o)] looks infinite
    slopes1: SlopeFit
    slopes2: SlopeFit


def _heavy_mean_flag(samples: np.ndarray) -> bool:
    # heuristic: the top 1% of |samples| carrying half the sum suggests
    # an infinite-mean law
    s = np.sort(np.abs(samples))[::-1]
    top = max(1, s.size // 100)
    total = s.sum()
    return bool(total > 0 and s[:top].sum() > 0.5 * total)


def birkhoff_compare(model, w1_spec, w2_spec, grid, trials: int,
                     horizon=None) -> BirkhoffComparison:
    """Per-trial (liminf slope of w1 balls, limsup slope of w2 balls).

    The proven inequality needs E[w1(o)] < infinity; a heavy-tail flag is
    raised when the sampled root weights look infinite-mean, in which
    case violations are expected rather than errors.
    """
    rep1 = growth_report(model, w1_spec, grid, trials, horizon)
    rep2 = growth_report(model, w2_spec, grid, trials, horizon)
    lo1 = rep1.per_trial_liminf()
    hi2 = rep2.per_trial_limsup()
    n = min(lo1.size, hi2.size)
    pairs = np.stack([lo1[:n], hi2[:n]], axis=1)
    viol = float(np.mean(pairs[:, 0] > pairs[:, 1] + 0.05))
    return BirkhoffComparison(pairs, viol, _heavy_mean_flag(rep1.root_weights),
                              rep1.mean_slope(), rep2.mean_slope())


# ---------------------------------------------------------------------------
# minimum-degree tree weight check


def degree_weight_constant(alpha: float) -> float:
    """Smallest C with C x^alpha + (1-x)^alpha >= 1/2 on [0, 1]."""
    xs = np.linspace(1e-6, 1.0, 20001)
    need = (0.5 - (1.0 - xs) ** alpha) / xs ** alpha
    return float(max(need.max(), 0.0))


def regtree_weight_check(window, alpha: float, C: float | None = None,
                         r_grid=None) -> list:
    """Verify sum-of-edge-powers ball weights dominate r^alpha at the root.

    The window must have root degree >= 2 and all other in-window degrees
    >= 3 (leaves at the horizon boundary are exempt); edge lengths must be
    >= 1.  Returns the violation list (expected empty).
    """
    if C is None:
        C = degree_weight_constant(alpha)
    else:
        xs = np.linspace(1e-6, 1.0, 20001)
        if ((C * xs ** alpha + (1.0 - xs) ** alpha) < 0.5 - 1e-12).any():
            raise ValueError("C fails the pointwise constraint")

    # neighbor structure with edge lengths
    if hasattr(window, "edge_len"):
        parent = window.parent
        lengths = window.edge_len
        if (lengths[1:] < 1.0 - 1e-12).any():
            raise ValueError("edge lengths must be >= 1")
        nbr_pow = np.zeros(window.size)
        deg = np.zeros(window.size, dtype=int)
        child_count = np.zeros(window.size, dtype=int)
        for v in range(1, window.size):
            p = int(parent[v])
            nbr_pow[v] += lengths[v] ** alpha
            nbr_pow[p] += lengths[v] ** alpha
            deg[v] += 1
            deg[p] += 1
            child_count[p] += 1
        interior = child_count > 0      # leaves at the cut are exempt
        if r_grid is None:
            safe_top = float(window.depth[child_count == 0].min())
            r_grid = np.linspace(1.0, max(safe_top, 1.0), 15)
    else:
        nbrs = window.neighbors
        deg = np.array([len(set(ns)) for ns in nbrs])
        nbr_pow = deg.astype(float)      # unit lengths
        d_root = window.root_distances()
        interior = (d_root >= 0) & (d_root < window.horizon)
        if r_grid is None:
            r_grid = np.linspace(1.0, max(window.horizon, 1.0), 15)

    if deg[window.root_index] < 2:
        raise ValueError("root degree must be >= 2")
    inner = interior.copy()
    inner[window.root_index] = False
    if (deg[inner] < 3).any():
        raise ValueError("interior degrees must be >= 3")

    w = C * nbr_pow
    curve = ball_weight_curve(window, w, r_grid)
    out = []
    for r, val in zip(np.asarray(r_grid, dtype=float), curve):
        if val < r ** alpha - 1e-9:
            out.append((float(r), float(val)))
    return out


# ---------------------------------------------------------------------------
# inverse hitting-time bound


@dataclass
class InverseTimeReport:
    crossing_index: np.ndarray         # per-trial first k from which ok
    violation_fraction: float          # fraction not ok at k_max
    k_max: float
    constant: float


def inverse_time_bound_check(model, t_exp: float, c_tail: float,
                             k_grid, trials: int) -> InverseTimeReport:
    """Count walk points below k against C k^t loglog k, C = 2^(t+1)/c.

    model must produce increasing point windows (srw_image-like); the
    count S^{-1}(k) is |image points in (0, k]|.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    k_max = float(k_grid.max())
    C = 2.0 ** (t_exp + 1.0) / c_tail
    bound = C * k_grid ** t_exp * np.log(np.maximum(np.log(k_grid), math.e))
    crossings = []
    bad = 0
    for t in range(trials):
        win = model.window(t, k_max)
        x = win.coords[:, 0]
        counts = np.searchsorted(np.sort(x[x > 0]), k_grid + _EPS)
        ok = counts <= bound
        if ok[-1]:
            idx = len(ok) - 1
            while idx > 0 and ok[idx - 1]:
                idx -= 1
            crossings.append(float(k_grid[idx]))
        else:
            bad += 1
            crossings.append(math.inf)
    return InverseTimeReport(np.array(crossings), bad / trials, k_max, C)


# ---------------------------------------------------------------------------
# per-trial vs mean slope chain (monotone-sequence comparison)


@dataclass
class ChainReport:
    liminf_le_limsup_rate: float       # fraction of trials satisfying
    liminf_le_mean_rate: float         # liminf <= mean slope + tol
    limsup_le_mean_rate: float         # strict form, data only
    tol: float


def slope_chain_report(report: GrowthReport, tol: float = 0.05) -> ChainReport:
    lo = report.per_trial_liminf()
    hi = report.per_trial_limsup()
    mean_slope = report.mean_slope().slope
    return ChainReport(
        float(np.mean(lo <= hi + 1e-12)),
        float(np.mean(lo <= mean_slope + tol)),
        float(np.mean(hi <= mean_slope + tol)),
        tol)
