"""Offspring distributions and generating-function iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_TAIL = 1e-15
_MAX_SUPPORT = 2000


def _poisson_pmf(mean: float) -> np.ndarray:
    probs = [math.exp(-mean)]
    k = 0
    while 1.0 - math.fsum(probs) > _TAIL and k < _MAX_SUPPORT:
        k += 1
        probs.append(probs[-1] * mean / k)
    return np.array(probs)


def _geometric_shifted_pmf(a: float) -> np.ndarray:
    # pgf a*s/(a+1-s): support starts at 1, p_j = a*(a+1)^(-j)
    probs = [0.0]
    j = 0
    while 1.0 - math.fsum(probs) > _TAIL and j < _MAX_SUPPORT:
        j += 1
        probs.append(a * (a + 1.0) ** (-j))
    return np.array(probs)


@dataclass
class Offspring:
    """Distribution on {0, 1, 2, ...} with a pmf table and exact pgf."""

    name: str
    pmf: np.ndarray
    exact_pgf: object = None          # callable s -> f(s), or None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=float)
        self.cdf = np.cumsum(self.pmf)
        self.mean = float((np.arange(self.pmf.size) * self.pmf).sum())

    def sample(self, u: float) -> int:
        return int(np.searchsorted(self.cdf, u, side="right"))

    def sample_many(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return np.searchsorted(self.cdf, gen.random(size), side="right")

    def pgf(self, s: float) -> float:
        if self.exact_pgf is not None:
            return float(self.exact_pgf(s))
        powers = s ** np.arange(self.pmf.size)
        return float((self.pmf * powers).sum())

    def size_biased(self) -> "Offspring":
        """pmf proportional to n * p_n; used to root a tree at a uniform vertex."""
        n = np.arange(self.pmf.size)
        table = n * self.pmf / self.mean
        return Offspring(self.name + "_sizebiased", table, params=self.params)

    def size_biased_minus_one(self) -> "Offspring":
        """pmf q_n = (n+1) p_{n+1} / m; offspring count seen from a child."""
        p = self.pmf
        n = np.arange(1, p.size)
        table = n * p[1:] / self.mean
        return Offspring(self.name + "_sb_minus1", table, params=self.params)


def poisson(mean: float) -> Offspring:
    return Offspring("poisson", _poisson_pmf(mean),
                     exact_pgf=lambda s: math.exp(mean * (s - 1.0)),
                     params={"mean": mean})


def geometric_shifted(a: float) -> Offspring:
    """The fractional-linear family: pgf a*s/(a+1-s), mean (a+1)/a, p_0 = 0."""
    return Offspring("geometric_shifted", _geometric_shifted_pmf(a),
                     exact_pgf=lambda s: a * s / (a + 1.0 - s),
                     params={"a": a})


def binomial(n: int, p: float) -> Offspring:
    from scipy.stats import binom
    table = binom.pmf(np.arange(n + 1), n, p)
    return Offspring("binomial", table,
                     exact_pgf=lambda s: (1.0 - p + p * s) ** n,
                     params={"n": n, "p": p})


def table_offspring(pmf) -> Offspring:
    pmf = np.asarray(pmf, dtype=float)
    if abs(pmf.sum() - 1.0) > 1e-9 or (pmf < 0).any():
        raise ValueError("pmf must be nonnegative and sum to 1")
    return Offspring("table", pmf)


def from_config(name: str, **kw) -> Offspring:
    if name == "poisson":
        return poisson(kw.get("mean", 1.0))
    if name in ("geometric", "geometric_shifted", "fractional_linear"):
        return geometric_shifted(kw.get("a", 1.0))
    if name == "binomial":
        return binomial(int(kw["n"]), float(kw["p"]))
    raise ValueError(f"unknown offspring family {name!r}")


# ---------------------------------------------------------------------------
# generating functions


def gf_iterate(dist: Offspring, n: int, s: float) -> float:
    """n-fold composition of the pgf, evaluated at s."""
    val = s
    for _ in range(n):
        val = dist.pgf(val)
    return val


def fractional_linear_iterate(a: float, n: int, s: float) -> float:
    """Closed form for the n-fold composition of a*s/(a+1-s).

    The pgf is the Moebius map [[a, 0], [-1, a+1]]; its n-th matrix power
    gives a^n s / (a^n s + (a+1)^n (1-s)).
    """
    an = a ** n
    bn = (a + 1.0) ** n
    return an * s / (an * s + bn * (1.0 - s))


def generation_size(dist: Offspring, n: int, gen: np.random.Generator,
                    cap: int = 10_000_000) -> int:
    """One sample of the n-th generation size of a branching process."""
    z = 1
    for _ in range(n):
        if z == 0:
            return 0
        if z > cap:
            raise OverflowError("population exceeded cap")
        z = int(dist.sample_many(gen, z).sum())
    return z
