import math

import numpy as np
import pytest

from unidim import offspring
from unidim.offspring import (Offspring, binomial, fractional_linear_iterate,
                              from_config, generation_size, geometric_shifted,
                              gf_iterate, poisson, table_offspring)


def test_poisson_moments():
    mu = poisson(1.3)
    assert abs(mu.mean - 1.3) < 1e-9
    assert abs(mu.pgf(1.0) - 1.0) < 1e-12
    assert abs(mu.pgf(0.0) - math.exp(-1.3)) < 1e-12


def test_geometric_shifted_moments():
    # pgf a*s/(a+1-s): mean (a+1)/a, no extinction at a single step
    for a in (0.5, 1.0, 2.0, 7.5):
        mu = geometric_shifted(a)
        assert abs(mu.mean - (a + 1.0) / a) < 1e-6
        assert mu.pmf[0] == 0.0
        assert abs(mu.pgf(0.5) - a * 0.5 / (a + 0.5)) < 1e-12


def test_binomial_pgf():
    mu = binomial(3, 0.25)
    s = 0.4
    assert abs(mu.pgf(s) - (0.75 + 0.25 * s) ** 3) < 1e-12


def test_table_offspring():
    mu = table_offspring([0.5, 0.0, 0.5])
    assert abs(mu.mean - 1.0) < 1e-9
    assert abs(mu.pgf(0.5) - 0.5 * (1 + 0.25)) < 1e-12
    with pytest.raises(ValueError):
        table_offspring([0.5, 0.2])


def test_size_biased_poisson_shift():
    # size-biasing a Poisson adds one deterministic child
    mu = poisson(1.0)
    sb = mu.size_biased()
    ref = poisson(1.0)
    for s in (0.2, 0.5, 0.9):
        assert abs(sb.pgf(s) - s * ref.pgf(s)) < 1e-10
    sbm = mu.size_biased_minus_one()
    for s in (0.2, 0.5, 0.9):
        assert abs(sbm.pgf(s) - ref.pgf(s)) < 1e-10


def test_from_config_dispatch():
    assert abs(from_config("poisson", mean=2.0).mean - 2.0) < 1e-9
    assert abs(from_config("fractional_linear", a=3.0).mean - 4.0 / 3.0) < 1e-6
    with pytest.raises(ValueError):
        from_config("zeta")


# ---------------------------------------------------------------------------
# generating-function iteration


def test_gf_iterate_base_case():
    mu = poisson(1.0)
    for s in (0.0, 0.3, 0.99):
        assert gf_iterate(mu, 0, s) == s


def test_fractional_linear_worked_value():
    # a = 2, three iterations at s = 1/2: 8*(1/2) / (8*(1/2) + 27*(1/2))
    got = fractional_linear_iterate(2.0, 3, 0.5)
    assert abs(got - 4.0 / 17.5) < 1e-15


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_closed_form_matches_iteration(a, s):
    mu = geometric_shifted(a)
    for n in (1, 2, 3, 6):
        assert abs(gf_iterate(mu, n, s)
                   - fractional_linear_iterate(a, n, s)) < 1e-12


def test_iterate_monotone_in_n_below_fixed_point():
    # subcritical start: survival probability decays, pgf value climbs
    mu = poisson(1.0)
    vals = [gf_iterate(mu, n, 0.3) for n in range(8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v <= 1.0 for v in vals)


# ---------------------------------------------------------------------------
# simulation


def test_generation_size_matches_pgf():
    mu = poisson(1.0)
    gen = np.random.default_rng(42)
    n, s = 4, 0.5
    trials = 20000
    draws = np.array([generation_size(mu, n, gen) for _ in range(trials)])
    est = np.mean(s ** draws)
    se = np.std(s ** draws) / math.sqrt(trials)
    assert abs(est - gf_iterate(mu, n, s)) < 4 * se + 1e-4


def test_generation_size_critical_mean_one():
    mu = poisson(1.0)
    gen = np.random.default_rng(7)
    draws = np.array([generation_size(mu, 3, gen) for _ in range(20000)])
    assert abs(draws.mean() - 1.0) < 0.1


def test_generation_size_cap():
    mu = poisson(4.0)
    gen = np.random.default_rng(1)
    with pytest.raises(OverflowError):
        for _ in range(50):
            generation_size(mu, 40, gen, cap=10_000)
