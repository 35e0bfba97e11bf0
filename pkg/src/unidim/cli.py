"""Batch experiment runner.

Subcommands: run, selftest, list-spaces, describe.  Configs are flat
"key = value" text files with dotted section prefixes; every key is
validated against the estimator's schema before any sampling happens.
Outputs: trials.csv (header trial,r,value), summary.json with a full
config echo, and an optional plot.svg.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import core, dimension, flows, frostman, spaces
from .rng import RngStream

ESTIMATORS = ("growth", "minkowski-euclidean", "mdp", "billingsley",
              "birkhoff", "frostman-lp", "maxflow", "frostman-pp")

WEIGHTS = ("unit", "iid_uniform", "gap", "inverse_cube")

_SPACE_PARAMS = {
    "lattice": {"k", "metric"},
    "cayley": {"preset", "k"},
    "canopy": {"profile", "alpha", "lo", "hi"},
    "ugw": {"offspring", "mean", "a", "n", "p", "condition_survival",
            "margin", "survival_depth"},
    "egw": {"offspring", "mean", "a", "n", "p"},
    "pwit": {"k"},
    "srw_image": {"beta"},
    "srw_zeros": set(),
    "srw_graph": {"metric"},
    "drainage": set(),
    "digits": {"set"},
    "cantor": {"b", "p", "k"},
    "cycle": {"n"},
    "torus": {"n", "k"},
    "heisenberg_quotient": {"n"},
}

_ESTIMATOR_KEYS = {
    "growth": {"weight", "grid.kind", "grid.min", "grid.max", "grid.count",
               "grid.values", "horizon"},
    "billingsley": {"weight", "grid.kind", "grid.min", "grid.max",
                    "grid.count", "grid.values", "horizon"},
    "minkowski-euclidean": {"weight", "grid.kind", "grid.min", "grid.max",
                            "grid.count", "grid.values", "horizon"},
    "mdp": {"weight", "grid.kind", "grid.min", "grid.max", "grid.count",
            "grid.values", "horizon", "alpha", "M", "c"},
    "birkhoff": {"weight", "weight2", "grid.kind", "grid.min", "grid.max",
                 "grid.count", "grid.values", "horizon"},
    "frostman-lp": {"alpha", "M", "grid.kind", "grid.min", "grid.max",
                    "grid.values"},
    "maxflow": {"height", "conductance"},
    "frostman-pp": {"alpha", "base", "levels", "horizon"},
}

_BASE_KEYS = {"estimator", "trials", "seed", "plot", "space.kind"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing


def _coerce(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    if "," in t:
        return [_coerce(p) for p in t.split(",")]
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _coerce(value)
    return out


def _space_keys_ok(kind: str, keys: set, prefix: str = "space.") -> set:
    """Return the subset of `keys` this space kind does not accept."""
    if kind == "superpose":
        return {k for k in keys
                if k != prefix + "inner"
                and not k.startswith(prefix + "inner.")}
    if kind == "product":
        bad = set()
        for key in keys:
            rest = key[len(prefix):]
            if rest in ("left", "right"):
                continue
            if rest.startswith(("left.", "right.")):
                continue
            bad.add(key)
        return bad
    allowed = _SPACE_PARAMS.get(kind)
    if allowed is None:
        raise ConfigError(f"unknown space kind {kind!r}")
    return {k for k in keys if k[len(prefix):] not in allowed}


def validate_config(cfg: dict) -> dict:
    if "space.kind" not in cfg:
        raise ConfigError("missing space.kind")
    if "estimator" not in cfg:
        raise ConfigError("missing estimator")
    est = cfg["estimator"]
    if est not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {est!r}; choose from "
                          f"{', '.join(ESTIMATORS)}")
    kind = cfg["space.kind"]
    space_keys = {k for k in cfg if k.startswith("space.")
                  and k != "space.kind"}
    bad = _space_keys_ok(kind, space_keys)
    allowed = _BASE_KEYS | _ESTIMATOR_KEYS[est]
    bad |= {k for k in cfg if not k.startswith("space.") and k not in allowed}
    if bad:
        raise ConfigError(f"unknown keys for {est}: {sorted(bad)}")
    if est == "frostman-lp" and kind not in core.FINITE_SPACES:
        raise ConfigError("frostman-lp needs a finite space "
                          f"({', '.join(core.FINITE_SPACES)})")
    for w_key in ("weight", "weight2"):
        if w_key in cfg and cfg[w_key] not in WEIGHTS:
            raise ConfigError(f"unknown {w_key} {cfg[w_key]!r}")
    if "conductance" in cfg and cfg["conductance"] not in ("unit",
                                                           "iid_uniform",
                                                           "level"):
        raise ConfigError(f"unknown conductance {cfg['conductance']!r}")
    trials = cfg.get("trials", 100)
    if not isinstance(trials, int) or trials <= 0:
        raise ConfigError("trials must be a positive integer")
    return cfg


def resolve_grid(cfg: dict, default=(2.0, 256.0)) -> np.ndarray:
    kind = cfg.get("grid.kind", "dyadic")
    if kind == "explicit":
        vals = cfg.get("grid.values")
        if vals is None:
            raise ConfigError("grid.kind = explicit needs grid.values")
        if not isinstance(vals, list):
            vals = [vals]
        return np.asarray([float(v) for v in vals])
    lo = float(cfg.get("grid.min", default[0]))
    hi = float(cfg.get("grid.max", default[1]))
    if kind == "dyadic":
        return core.dyadic_grid(int(math.log2(lo)), int(math.log2(hi)))
    if kind == "linear":
        return np.linspace(lo, hi, int(cfg.get("grid.count", 9)))
    raise ConfigError(f"unknown grid.kind {kind!r}")


def build_space(cfg: dict, seed: int):
    kind = cfg["space.kind"]
    params = {k[len("space."):]: v for k, v in cfg.items()
              if k.startswith("space.") and k != "space.kind"}
    if kind in core.FINITE_SPACES:
        return core.FINITE_SPACES[kind](**{k: int(v)
                                           for k, v in params.items()})
    return spaces.make_space(kind, params, RngStream.from_seed(seed))


# ---------------------------------------------------------------------------
# trial workers (module level so process pools can pickle them)


def _curve_chunk(payload) -> list:
    cfg, seed, weight, grid, horizon, trial_list = payload
    model = build_space(cfg, seed)
    grid = np.asarray(grid)
    out = []
    for t in trial_list:
        try:
            win = model.window(t, horizon)
            w = dimension.resolve_weights(model, win, weight, t)
            curve = dimension.ball_weight_curve(win, w, grid)
        except core.TruncationError:
            out.append((t, None))
            continue
        out.append((t, curve.tolist()))
    return out


def _collect_curves(cfg, seed, weight, grid, horizon, trials, jobs) -> list:
    chunks = max(1, jobs)
    ranges = [list(range(trials))[i::chunks] for i in range(chunks)]
    payloads = [(cfg, seed, weight, tuple(float(g) for g in grid),
                 horizon, r) for r in ranges if r]
    if jobs <= 1:
        parts = [_curve_chunk(p) for p in payloads]
    else:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_curve_chunk, payloads))
    merged = [None] * trials
    for part in parts:
        for t, curve in part:
            merged[t] = (t, curve)
    return merged


# ---------------------------------------------------------------------------
# estimator pipelines: each returns (rows, summary-extras, flags, exit code)


def _report_from_curves(cfg, merged, grid, weight) -> dimension.GrowthReport:
    rows = [np.log2(c) for _, c in merged
            if c is not None and min(c) > 0]
    skipped = sum(1 for _, c in merged if c is None or min(c) <= 0)
    if not rows:
        raise core.TruncationError("no usable trials")
    return dimension.GrowthReport(cfg["space.kind"], str(weight),
                                  np.asarray(grid), np.array(rows), skipped,
                                  np.zeros(len(rows)))


def _run_growth_family(cfg, seed, jobs, est):
    grid = resolve_grid(cfg)
    trials = int(cfg.get("trials", 100))
    weight = cfg.get("weight", "unit")
    horizon = float(cfg.get("horizon", grid.max()))
    merged = _collect_curves(cfg, seed, weight, grid, horizon, trials, jobs)
    rows = []
    for t, curve in merged:
        if curve is None:
            continue
        for r, v in zip(grid, curve):
            rows.append((t, float(r), float(v)))
    report = _report_from_curves(cfg, merged, grid, weight)
    fit = report.mean_slope()
    sigma = report.bootstrap_sigma()
    proxies = report.essinf_proxies()
    extra = {"essinf": proxies}
    flags = []
    code = 0

    if est == "billingsley":
        if not report.valid:
            raise core.TruncationError(
                f"{report.truncations} truncated trials; interval refused")
        interval = dimension.billingsley_interval(report)
        lower, upper = interval.lower, interval.upper
        extra["interval_ci"] = {"lower": interval.lower_ci,
                                "upper": interval.upper_ci}
    else:
        lower = proxies["liminf_min"]
        upper = proxies["limsup_min"]

    if est == "mdp":
        model = build_space(cfg, seed)
        res = dimension.mdp_content_bound(
            model, weight, float(cfg.get("alpha", 1.0)),
            float(cfg.get("c", 1.0)), float(cfg.get("M", 1.0)),
            trials, grid, horizon)
        extra["mdp"] = {"hypothesis_ok": res.hypothesis_ok,
                        "bound": res.bound,
                        "bound_stderr": res.bound_stderr,
                        "limsup_variant": res.limsup_variant,
                        "violations": len(res.violations)}
        if not res.hypothesis_ok:
            flags.append("hypothesis-failed")
            code = 2

    if est == "minkowski-euclidean":
        model = build_space(cfg, seed)
        mk = dimension.euclidean_minkowski_estimate(model, weight, grid,
                                                    trials)
        extra["minkowski"] = {"chain": list(mk.chain()),
                              "chain_ok": mk.chain_ok,
                              "sigmas": [mk.cube_sigma, mk.ball_sigma,
                                         mk.growth_sigma]}
        if not mk.chain_ok:
            flags.append("chain-violated")
            code = 2

    if est == "birkhoff":
        model = build_space(cfg, seed)
        cmpres = dimension.birkhoff_compare(model, weight,
                                            cfg.get("weight2", "iid_uniform"),
                                            grid, trials, horizon)
        extra["birkhoff"] = {"violation_rate": cmpres.violation_rate,
                             "w1_heavy_tail": cmpres.w1_mean_flag}
        if cmpres.w1_mean_flag:
            flags.append("infinite-mean-expected")
        elif cmpres.violation_rate > 0.05:
            flags.append("hypothesis-failed")
            code = 2

    summary = {
        "slope": fit.slope,
        "slope_ci": [fit.slope - 2 * sigma, fit.slope + 2 * sigma],
        "essinf_lower": lower,
        "essinf_upper": upper,
        "trials": trials,
        "truncations": report.truncations,
    }
    return rows, summary, extra, flags, code


def _run_frostman_lp(cfg, seed):
    space = build_space(cfg, seed)
    grid = resolve_grid(cfg, default=(1.0, 8.0))
    inst = frostman.FrostmanInstance(space, float(cfg.get("alpha", 1.0)),
                                     float(cfg.get("M", 1.0)), grid,
                                     np.ones(space.size))
    sol = frostman.xi_lp(inst)
    per_radius = {float(r): 0.0 for r in grid}
    for r, c in zip(sol.collection.radii, sol.collection.costs):
        per_radius[float(r)] += float(c) / space.size
    rows = [(0, r, per_radius[r]) for r in sorted(per_radius)]
    summary = {"slope": None, "slope_ci": None,
               "essinf_lower": None, "essinf_upper": None,
               "trials": 1, "truncations": 0}
    extra = {"frostman": {"primal": sol.primal_value,
                          "dual": sol.dual_value,
                          "gap": sol.gap,
                          "boundary_bias": inst.boundary_bias,
                          "grid_capped": inst.grid_capped}}
    return rows, summary, extra, [], 0


def _maxflow_chunk(payload) -> list:
    cfg, seed, height, cond, trial_list = payload
    model = build_space(cfg, seed)
    out = []
    for t in trial_list:
        rep = flows.flow_norm_estimate(_SingleTrial(model, t), height, 1,
                                       cond)
        out.append((t, float(rep.flow_norms[0]),
                    float(rep.cut_conductances[0]),
                    float(rep.mid_terms[0]), rep.truncations))
    return out


class _SingleTrial:
    """Adapter exposing one trial of a model as trial 0."""

    def __init__(self, model, trial):
        self.model = model
        self.trial = trial
        self.stream = model.stream

    def flow_forest(self, t, n):
        return self.model.flow_forest(self.trial, n)


def _run_maxflow(cfg, seed, jobs):
    trials = int(cfg.get("trials", 100))
    height = int(cfg.get("height", 3))
    cond = cfg.get("conductance", "unit")
    chunks = max(1, jobs)
    ranges = [list(range(trials))[i::chunks] for i in range(chunks)]
    payloads = [(cfg, seed, height, cond, r) for r in ranges if r]
    if jobs <= 1:
        parts = [_maxflow_chunk(p) for p in payloads]
    else:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_maxflow_chunk, payloads))
    recs = sorted(rec for part in parts for rec in part)
    rows = [(t, float(height), norm) for t, norm, _, _, _ in recs]
    norms = np.array([r[1] for r in recs])
    cuts = np.array([r[2] for r in recs])
    mids = np.array([r[3] for r in recs])
    truncs = sum(r[4] for r in recs)
    ok = bool((norms <= mids + 1e-9).all() and (mids <= cuts + 1e-9).all())
    flags = [] if ok else ["chain-violated"]
    summary = {"slope": None, "slope_ci": None,
               "essinf_lower": None, "essinf_upper": None,
               "trials": trials, "truncations": truncs}
    extra = {"flow": {"flow_norm": float(norms.mean()),
                      "cut_conductance": float(cuts.mean()),
                      "chain_ok": ok}}
    return rows, summary, extra, flags, 0 if ok else 2


def _frostman_pp_chunk(payload) -> list:
    cfg, seed, alpha, b, levels, horizon, trial_list = payload
    model = build_space(cfg, seed)
    out = []
    for t in trial_list:
        try:
            win = model.window(t, horizon)
            rep = frostman.frostman_weight_pp(
                win, alpha, b, levels, model.stream.child("frostman", t))
        except core.TruncationError:
            out.append((t, None, 0, 0))
            continue
        out.append((t, rep.root_weight, len(rep.violations), rep.checked))
    return out


def _run_frostman_pp(cfg, seed, jobs):
    trials = int(cfg.get("trials", 50))
    alpha = float(cfg.get("alpha", 1.0))
    b = int(cfg.get("base", 2))
    levels = int(cfg.get("levels", 10))
    horizon = float(cfg.get("horizon", float(b) ** levels + 2))
    chunks = max(1, jobs)
    ranges = [list(range(trials))[i::chunks] for i in range(chunks)]
    payloads = [(cfg, seed, alpha, b, levels, horizon, r)
                for r in ranges if r]
    if jobs <= 1:
        parts = [_frostman_pp_chunk(p) for p in payloads]
    else:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_frostman_pp_chunk, payloads))
    recs = sorted(rec for part in parts for rec in part)
    rows = [(t, float(b) ** levels, w) for t, w, _, _ in recs
            if w is not None]
    truncs = sum(1 for r in recs if r[1] is None)
    violations = sum(r[2] for r in recs)
    checked = sum(r[3] for r in recs)
    weights = [r[1] for r in recs if r[1] is not None]
    flags = []
    code = 0
    if violations:
        flags.append("hypothesis-failed")
        code = 2
    summary = {"slope": None, "slope_ci": None,
               "essinf_lower": None, "essinf_upper": None,
               "trials": trials, "truncations": truncs}
    extra = {"frostman_pp": {"mean_root_weight": float(np.mean(weights))
                             if weights else None,
                             "violations": violations,
                             "checked": checked}}
    return rows, summary, extra, flags, code


# ---------------------------------------------------------------------------
# artifacts


def _write_artifacts(out_dir: Path, rows, summary: dict, plot: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["trial,r,value"]
    lines += [f"{t},{r!r},{v!r}" for t, r, v in rows]
    (out_dir / "trials.csv").write_text("\n".join(lines) + "\n")
    if plot:
        _write_plot(out_dir, rows, summary)
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n")


def _write_plot(out_dir: Path, rows, summary: dict) -> None:
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        summary["flags"].append("plot-skipped")
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    by_trial = {}
    for t, r, v in rows:
        by_trial.setdefault(t, []).append((r, v))
    for pts in list(by_trial.values())[:50]:
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                color="steelblue", alpha=0.2, lw=0.6)
    if by_trial:
        grid = sorted({r for _, r, _ in rows})
        means = [float(np.mean([v for _, rr, v in rows if rr == r]))
                 for r in grid]
        ax.plot(grid, means, color="crimson", lw=1.5, label="mean")
        ax.legend()
    if rows and all(v > 0 for _, _, v in rows):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("value")
    fig.savefig(out_dir / "plot.svg")
    plt.close(fig)


def run_experiment(config_path: str, out_dir: str | None = None,
                   seed: int | None = None, jobs: int = 1,
                   plot: bool = False) -> int:
    out = Path(out_dir) if out_dir else Path(config_path).with_suffix("")
    try:
        cfg = validate_config(parse_config_text(
            Path(config_path).read_text()))
        run_seed = int(seed if seed is not None else cfg.get("seed", 0))
        est = cfg["estimator"]
        if est in ("growth", "billingsley", "mdp", "minkowski-euclidean",
                   "birkhoff"):
            rows, summary, extra, flags, code = _run_growth_family(
                cfg, run_seed, jobs, est)
        elif est == "frostman-lp":
            rows, summary, extra, flags, code = _run_frostman_lp(cfg,
                                                                 run_seed)
        elif est == "maxflow":
            rows, summary, extra, flags, code = _run_maxflow(cfg, run_seed,
                                                             jobs)
        else:
            rows, summary, extra, flags, code = _run_frostman_pp(cfg,
                                                                 run_seed,
                                                                 jobs)
        summary.update({
            "space": cfg["space.kind"],
            "estimator": est,
            "seed": run_seed,
            "flags": flags,
            "config": {k: cfg[k] for k in sorted(cfg)},
            "extra": extra,
        })
        _write_artifacts(out, rows, summary,
                         plot or bool(cfg.get("plot", False)))
        return code
    except Exception as exc:                     # noqa: BLE001
        record = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(record) + "\n")
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(record, indent=1)
                                            + "\n")
        except OSError:
            pass
        return 1


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks():
    from . import offspring as osp
    from .coverings import covering_validate, cube_covering

    def closed_form():
        mu = osp.geometric_shifted(2.0)
        it = osp.gf_iterate(mu, 3, 0.5)
        closed = osp.fractional_linear_iterate(2.0, 3, 0.5)
        assert abs(it - closed) < 1e-12, (it, closed)

    def flow_duality():
        gen = np.random.Generator(np.random.Philox(key=5))
        for _ in range(50):
            n = int(gen.integers(2, 40))
            parent = np.full(n, -1, dtype=np.int64)
            for v in range(1, n):
                parent[v] = int(gen.integers(0, v))
            cond = np.append(np.nan, 0.1 + gen.random(n - 1) * 2)
            tree = flows.FlowTree(parent, cond)
            value, f = flows.tree_maxflow(tree)
            cut, cc = flows.tree_mincut(tree)
            assert abs(value - cc) <= 1e-9, (value, cc)
            tree.flow = f
            legal, cons = tree.residuals()
            assert legal <= 1e-9 and cons <= 1e-9

    def frostman_cycle():
        inst = frostman.FrostmanInstance(core.cycle_space(41), 1.0, 2.0,
                                         np.arange(2.0, 11.0), np.ones(41))
        sol = frostman.xi_lp(inst)
        assert abs(sol.primal_value - 0.4) < 1e-6
        assert abs(sol.dual_value - 0.4) < 1e-6

    def cube_multiplicity():
        model = spaces.make_space("lattice", {"k": 2},
                                  RngStream.from_seed(3))
        win = model.window(0, 40.0)
        cov = cube_covering(win, 4.0, model.stream.child("cov"))
        rep = covering_validate(win, cov)
        assert rep.max_multiplicity <= 9
        assert not rep.violations

    def stability():
        model = spaces.make_space("drainage", {}, RngStream.from_seed(7))
        a = model.window(0, 8.0)
        b_ = model.window(0, 16.0)
        assert set(a.labels) <= set(b_.labels)

    def transport():
        space = core.cycle_space(11)
        kernel = (space.dist <= 2).astype(float)
        assert core.mtp_residual(kernel) <= 1e-12

    return [("offspring closed form", closed_form),
            ("flow duality on random trees", flow_duality),
            ("frostman cycle value", frostman_cycle),
            ("cube covering multiplicity", cube_multiplicity),
            ("window prefix stability", stability),
            ("mass transport residual", transport)]


def selftest() -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:                 # noqa: BLE001
            failures += 1
            print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            print(f"ok   {name}")
    print(f"{'PASS' if not failures else 'FAIL'}: "
          f"{len(_selftest_checks()) - failures} checks passed")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# main


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="unidim",
        description="Growth, dimension, flow, and weight-LP experiments "
                    "on random discrete spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="worker processes (default 1)")
    run_p.add_argument("--plot", action="store_true",
                       help="also write plot.svg")

    sub.add_parser("selftest", help="run the built-in property checks")
    sub.add_parser("list-spaces", help="list space generators")
    d = sub.add_parser("describe", help="describe one space generator")
    d.add_argument("space")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_experiment(args.config, args.out, args.seed, args.jobs,
                              args.plot)
    if args.command == "selftest":
        return selftest()
    if args.command == "list-spaces":
        for name in spaces.list_spaces():
            tag = ("combinator" if name in spaces.COMBINATOR_NAMES
                   else "generator")
            print(f"{name:12s} [{tag}] {spaces.describe_space(name)}")
        for name in core.FINITE_SPACES:
            print(f"{name:12s} [finite]    periodic finite space "
                  "(weight-LP instances)")
        return 0
    if args.command == "describe":
        try:
            print(spaces.describe_space(args.space))
        except KeyError:
            sys.stderr.write(f"unknown space {args.space!r}\n")
            return 1
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
