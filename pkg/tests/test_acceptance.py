"""End-to-end checks of the package's headline numbers.

One test per pinned result, so `pytest -v` prints one pass/fail line
for each.  These are slower than the unit files (a few minutes total);
the Monte Carlo ones carry fixed seeds and were calibrated with margin,
and the stated wall-clock budgets are asserted with time.monotonic.
"""

import math
import time

import numpy as np

from unidim import offspring as osp
from unidim.core import (PointWindow, cycle_space, dyadic_grid,
                         heisenberg_quotient_space, mtp_residual, slope_fit,
                         torus_space)
from unidim.coverings import (covering_intensity, covering_validate,
                              cube_covering)
from unidim.dimension import (billingsley_interval,
                              euclidean_minkowski_estimate, growth_report,
                              slope_chain_report)
from unidim.flows import (FlowTree, build_badic_tree, cut_minimality_prune,
                          flow_norm_estimate, resolve_conductances,
                          tree_maxflow, tree_mincut)
from unidim.frostman import (FrostmanInstance, frostman_weight_pp,
                             instance_for, xi_lp, xi_symmetry_check)
from unidim.rng import RngStream
from unidim.spaces import make_space


def mk(name, params=None, seed=0):
    return make_space(name, params or {}, RngStream.from_seed(seed))


def mean_curve_slope(rep):
    """Slope of the log-log mean count curve (arithmetic mean over trials)."""
    mean = np.mean(2.0 ** rep.per_trial_log, axis=0)
    return slope_fit(np.log2(rep.grid), np.log2(mean)).slope


def greedy_path_value(tree):
    """Independent max-flow oracle: saturate one leaf-to-top path at a time.

    Exact on trees: the highest saturated edge over each leaf forms an
    antichain cut of the same value.
    """
    residual = tree.conductance.astype(float).copy()
    total = 0.0
    for leaf in tree.leaves():
        if tree.parent[leaf] < 0:
            continue
        path = []
        v = int(leaf)
        while tree.parent[v] >= 0:
            path.append(v)
            v = int(tree.parent[v])
        delta = min(residual[u] for u in path)
        if delta > 0:
            for u in path:
                residual[u] -= delta
            total += delta
    return total


def test_drainage_forest_dimension_three_halves():
    t0 = time.monotonic()
    rep = growth_report(mk("drainage"), "unit", dyadic_grid(3, 7),
                        trials=2000)
    slope = mean_curve_slope(rep)
    assert abs(slope - 1.5) <= 0.1, slope
    assert time.monotonic() - t0 <= 120.0


def test_walk_zero_set_dimension_half():
    t0 = time.monotonic()
    rep = growth_report(mk("srw_zeros"), "unit", dyadic_grid(4, 12),
                        trials=2000)
    slope = mean_curve_slope(rep)
    assert abs(slope - 0.5) <= 0.07, slope
    assert time.monotonic() - t0 <= 120.0


def test_eternal_tree_quadratic_ball_growth():
    t0 = time.monotonic()
    egw = mk("egw", {"offspring": "poisson", "mean": 1.0})
    rep = growth_report(egw, "unit", dyadic_grid(3, 7), trials=2000)
    slope = mean_curve_slope(rep)
    assert abs(slope - 2.0) <= 0.15, slope
    mean = np.mean(2.0 ** rep.per_trial_log, axis=0)
    caps = 2.0 * rep.grid ** 2 * 1.05
    assert (mean <= caps).all(), mean / (2.0 * rep.grid ** 2)
    assert time.monotonic() - t0 <= 180.0


def test_digit_restriction_interval_endpoints():
    grid = dyadic_grid(4, 14)
    even = growth_report(mk("digits", {"set": "even"}, seed=2), "unit",
                         grid, trials=200)
    iv = billingsley_interval(even)
    assert 0.43 <= iv.lower <= iv.upper <= 0.57, iv.as_tuple()
    block = growth_report(mk("digits", {"set": "block"}, seed=3), "unit",
                          grid, trials=200)
    iv = billingsley_interval(block)
    assert iv.lower <= 0.2, iv.lower
    assert iv.upper >= 0.8, iv.upper


def test_random_cantor_dimension_and_critical_nonempty():
    rep = growth_report(mk("cantor", {"b": 2, "k": 1, "p": 0.8}), "unit",
                        dyadic_grid(4, 12), trials=400)
    slope = mean_curve_slope(rep)
    assert abs(slope - (1 + math.log2(0.8))) <= 0.08, slope
    crit = mk("cantor", {"b": 2, "k": 1, "p": 0.5}, seed=1)
    for t in range(300):
        assert crit.window(t, 1024.0).size > 0


def test_group_ball_growth_exponents():
    t0 = time.monotonic()
    plane = mk("cayley", {"preset": "zk", "k": 2})
    rep = growth_report(plane, "unit", dyadic_grid(6, 10), trials=1)
    counts = np.rint(2.0 ** rep.per_trial_log[0])
    assert np.array_equal(counts, 2 * rep.grid ** 2 + 2 * rep.grid + 1)
    assert abs(rep.mean_slope().slope - 2.0) <= 0.02
    hei = mk("cayley", {"preset": "heisenberg"})
    rep = growth_report(hei, "unit", np.array([5.0, 10.0, 20.0, 40.0]),
                        trials=1)
    assert abs(rep.mean_slope().slope - 4.0) <= 0.3
    assert time.monotonic() - t0 <= 300.0


def test_maxflow_equals_mincut_on_random_truncated_trees():
    gen = np.random.default_rng(99)
    worst = 0.0
    checked = 0

    def check(tree):
        nonlocal worst, checked
        value, flow = tree_maxflow(tree)
        cut, cond = tree_mincut(tree)
        pruned = cut_minimality_prune(tree, list(cut))
        pruned_cond = float(tree.conductance[list(pruned)].sum())
        worst = max(worst, abs(value - greedy_path_value(tree)),
                    abs(value - cond), abs(value - pruned_cond))
        tree.flow = flow
        legal, cons = tree.residuals()
        worst = max(worst, legal, cons)
        checked += 1

    def forest_tree(model, trial, height):
        export = model.flow_forest(trial, height)
        if export is None:
            return None
        parent, level, labels, _ = export
        tree = FlowTree(np.asarray(parent), np.ones(len(parent)),
                        labels=labels, level=np.asarray(level))
        tree.conductance = resolve_conductances(tree, "iid_uniform",
                                                model.stream, trial)
        return tree

    can = mk("canopy", {"profile": "standard"}, 21)
    egw = mk("egw", {"offspring": "poisson", "mean": 1.0}, 22)
    zeros = mk("srw_zeros", {}, 23)
    done, t = 0, 0
    while done < 400:
        tree = forest_tree(can, t, int(gen.integers(1, 5)))
        t += 1
        if tree is not None:
            check(tree)
            done += 1
    done, t = 0, 0
    while done < 350:
        tree = forest_tree(egw, t, int(gen.integers(1, 4)))
        t += 1
        if tree is not None:
            check(tree)
            done += 1
    for t in range(250):
        win = zeros.window(t, 260.0)
        tree = build_badic_tree(win, int(gen.integers(2, 4)),
                                int(gen.integers(2, 5)),
                                zeros.stream.child("badic", t),
                                alpha=float(gen.uniform(0.3, 1.0)))
        check(tree)
    assert checked == 1000
    assert worst <= 1e-9, worst


def test_weighted_cover_lp_cycle_value_and_symmetry():
    inst = FrostmanInstance(cycle_space(41), 1.0, 2.0,
                            np.arange(2.0, 11.0), np.ones(41))
    sol = xi_lp(inst)
    assert abs(sol.primal_value - 0.4) <= 1e-6
    assert abs(sol.dual_value - 0.4) <= 1e-6
    assert sol.gap <= 1e-6
    for space, r_max in ((cycle_space(17), 6.0), (torus_space(7, 2), 3.0)):
        rep = xi_symmetry_check(instance_for(space, 1.0, 2.0, R_max=r_max))
        assert rep["match"] and rep["inequality_ok"]


def test_pattern_weight_ball_bound_zero_violations():
    img = mk("srw_image", {}, seed=31)
    lat = mk("lattice", {"k": 1}, seed=32)
    checked = 0
    for model in (img, lat):
        for t in range(50):
            win = model.window(t, 1026.0)
            rep = frostman_weight_pp(win, 1.0, 2, 10,
                                     model.stream.child("pp", t))
            assert not rep.violations, rep.violations[:3]
            checked += rep.checked
    assert checked > 100_000


def test_generation_size_transform_matches_iterates():
    gen = np.random.default_rng(77)
    for mu in (osp.poisson(1.0), osp.geometric_shifted(2.0)):
        for n in (2, 5, 8):
            draws = np.array([osp.generation_size(mu, n, gen)
                              for _ in range(30000)], dtype=float)
            for s in (0.3, 0.7):
                vals = s ** draws
                se = vals.std(ddof=1) / math.sqrt(vals.size)
                assert abs(vals.mean() - osp.gf_iterate(mu, n, s)) <= 3 * se
    for a in (0.5, 2.0, 5.0):
        for n in (2, 5, 8):
            for s in (0.3, 0.7):
                it = osp.gf_iterate(osp.geometric_shifted(a), n, s)
                closed = osp.fractional_linear_iterate(a, n, s)
                assert abs(it - closed) <= 1e-12


def test_cube_covering_multiplicity_intensity_and_transport():
    gen = np.random.default_rng(7)
    for i in range(10_000):
        k = 1 if i % 2 == 0 else 2
        half = int(gen.integers(6, 21)) if k == 1 else int(gen.integers(3, 8))
        axes = [np.arange(-half, half + 1.0)] * k
        coords = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, k)
        root = int((coords == 0).all(axis=1).nonzero()[0][0])
        w = PointWindow(coords, float(half), root, "sup")
        cov = cube_covering(w, float(gen.integers(2, 6)),
                            RngStream.from_seed(1000 + i))
        rep = covering_validate(w, cov)
        assert rep.valid, (i, rep.violations[:3])
        assert rep.max_multiplicity <= 3 ** k

    lat = mk("lattice", {"k": 1}, seed=1)
    for r in (2.0, 3.0, 5.0):
        est = covering_intensity(
            lat, lambda win, rr, rng: cube_covering(win, rr, rng),
            r, 1500, RngStream.from_seed(int(r)))
        assert abs(est.probability - 1.0 / r) <= 3 * est.stderr

    gen = np.random.default_rng(11)
    for space in (cycle_space(7), cycle_space(41), torus_space(5, 2),
                  torus_space(7, 2), heisenberg_quotient_space(3)):
        for _ in range(3):
            kern = gen.random((space.size, space.size))
            assert mtp_residual(kern) <= 1e-12
        assert mtp_residual((space.dist <= 2).astype(float)) <= 1e-12


def test_growth_inequality_suites():
    # per-trial slope chain on every generator
    configs = [
        ("lattice", {"k": 1}, dyadic_grid(1, 5), 6, 0),
        ("cayley", {"preset": "zk", "k": 2}, dyadic_grid(2, 6), 4, 0),
        ("canopy", {"profile": "standard"}, dyadic_grid(0, 4), 20, 1),
        ("ugw", {"offspring": "geometric", "a": 2.0}, dyadic_grid(0, 4),
         60, 2),
        ("egw", {"offspring": "poisson", "mean": 1.0}, dyadic_grid(0, 5),
         150, 3),
        ("pwit", {"k": 1}, np.linspace(0.8, 8.0, 10), 40, 4),
        ("srw_image", {}, dyadic_grid(2, 10), 150, 5),
        ("srw_zeros", {}, dyadic_grid(3, 12), 200, 10),
        ("srw_graph", {}, dyadic_grid(0, 5), 60, 6),
        ("drainage", {}, dyadic_grid(2, 9), 80, 7),
        ("digits", {"set": "even"}, dyadic_grid(4, 14), 60, 8),
        ("cantor", {"b": 2, "k": 1, "p": 0.8}, dyadic_grid(4, 12), 80, 9),
    ]
    for name, params, grid, trials, seed in configs:
        rep = growth_report(mk(name, params, seed), "unit", grid,
                            trials=trials)
        chain = slope_chain_report(rep)
        assert chain.liminf_le_limsup_rate == 1.0, name
        assert chain.liminf_le_mean_rate >= 0.95, (name,
                                                   chain.liminf_le_mean_rate)

    # euclidean box-count chain, ordered within two bootstrap sigma
    est = euclidean_minkowski_estimate(mk("srw_image", {"beta": 0.5}, 6),
                                       "unit", dyadic_grid(2, 7), trials=150)
    cube, ball, growth = est.chain()
    assert est.chain_ok
    assert cube <= ball + 2 * est.ball_sigma
    assert ball <= growth + 2 * est.growth_sigma

    # flow norm below cut conductance in every trial
    for model, height, trials in (
            (mk("canopy", {"profile": "standard"}, 11), 2, 500),
            (mk("egw", {"offspring": "poisson", "mean": 1.0}, 12), 3, 300)):
        rep = flow_norm_estimate(model, height, trials=trials,
                                 conductance_spec="iid_uniform")
        assert rep.chain_ok
        norms = np.asarray(rep.flow_norms)
        cuts = np.asarray(rep.cut_conductances)
        assert (norms <= cuts + 1e-9).all()

    # product of a line with a sparse set: slopes add
    prod = mk("product", {"left": "lattice", "right": "srw_zeros"}, seed=4)
    rep = growth_report(prod, "unit", dyadic_grid(4, 11), trials=150)
    assert abs(mean_curve_slope(rep) - 1.5) <= 0.15
    iv = billingsley_interval(rep)
    assert abs(iv.lower - 1.5) <= 0.15 and abs(iv.upper - 1.5) <= 0.15
