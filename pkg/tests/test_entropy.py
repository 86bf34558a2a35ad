"""Entropy functionals, feasibility scaling, generalized Gaussians."""
import math
from fractions import Fraction

import numpy as np
import pytest

from renyiconv.entropy import (
    ConstraintSet,
    DegenerateDensity,
    GeneralizedGaussian,
    NoBracket,
    ZeroMass,
    entropy_power,
    exact_gengauss_p2,
    exact_gengauss_p2_for_lp_mass,
    gengauss,
    gengauss_beta_for_entropy,
    gengauss_for_lp_mass,
    lp_mass,
    objective_I,
    renyi_entropy,
    scale_to_feasible,
)
from renyiconv.grid import GridFunction, lp_norm_real, sample
from renyiconv.piecewise import PiecewisePoly, Polynomial


def rand_step_density(rng, exact=False):
    """Random piecewise-constant density on a random interval."""
    k = int(rng.integers(2, 8))
    if exact:
        bps = sorted(rng.integers(-40, 40, size=k + 1).tolist())
        while len(set(bps)) < k + 1:
            bps = sorted(rng.integers(-40, 40, size=k + 1).tolist())
        bps = [Fraction(b, 8) for b in bps]
        heights = [Fraction(int(h), 16) for h in rng.integers(1, 40, size=k)]
        return PiecewisePoly(bps, [Polynomial([h]) for h in heights])
    bps = np.sort(rng.uniform(-3, 3, size=k + 1))
    heights = rng.uniform(0.05, 2.0, size=k)
    dx = 1e-3
    lo, hi = bps[0], bps[-1]
    n = int(math.ceil((hi - lo) / dx)) + 1
    xs = lo + dx * np.arange(n)
    vals = np.zeros(n)
    for i in range(k):
        vals[(xs >= bps[i]) & (xs < bps[i + 1])] = heights[i]
    return GridFunction(float(lo), dx, vals)


class TestConstraintSet:
    def test_validation(self):
        ConstraintSet(M=0.5, p=2.0, n=2)
        with pytest.raises(ValueError):
            ConstraintSet(M=0.0, p=2.0, n=2)
        with pytest.raises(ValueError):
            ConstraintSet(M=0.5, p=1.0, n=2)
        with pytest.raises(ValueError):
            ConstraintSet(M=0.5, p=2.0, n=1)


class TestEntropyFunctionals:
    def test_uniform_half_width_has_zero_entropy(self):
        f = PiecewisePoly.indicator(Fraction(-1, 2), Fraction(1, 2), 1)
        assert abs(renyi_entropy(f, 2.0)) < 1e-12

    def test_entropy_power_relation(self):
        f = PiecewisePoly.indicator(-1, 1, Fraction(1, 2))
        h = renyi_entropy(f, 2.0)
        assert entropy_power(f, 2.0) == pytest.approx(math.exp(2 * h), rel=1e-12)

    def test_lp_mass_exact_vs_grid(self):
        f = PiecewisePoly.single(Polynomial([Fraction(3, 4), 0, Fraction(-3, 4)]), -1, 1)
        exact = lp_mass(f, 2)
        assert isinstance(exact, Fraction)
        g = sample(f, 1e-3)
        assert lp_mass(g, 2.0) == pytest.approx(float(exact), rel=1e-5)

    def test_objective_uniform_exact_third(self):
        f = PiecewisePoly.indicator(-1, 1, Fraction(1, 2))
        assert objective_I(f, 2, 2) == Fraction(1, 3)

    def test_objective_grid_matches_exact(self):
        f = PiecewisePoly.single(Polynomial([1, 0, -1]), -1, 1)
        exact = objective_I(f, 2, 2)
        g = sample(f, 1e-3)
        assert float(objective_I(g, 2, 2.0)) == pytest.approx(float(exact), rel=1e-5)

    def test_scaling_invariance_of_entropy_shift(self):
        # h_p(f dilated by lam, renormalized) = h_p(f) + log lam
        f = PiecewisePoly.indicator(-1, 1, Fraction(1, 2))
        lam = Fraction(3, 2)
        g = f.dilate(lam) * (1 / lam)
        assert renyi_entropy(g, 2.0) == pytest.approx(
            renyi_entropy(f, 2.0) + math.log(float(lam)), abs=1e-12)


class TestScaleToFeasible:
    def test_exact_case_feasible_and_identity(self):
        f = PiecewisePoly.indicator(-2, 2, Fraction(3, 2))  # mass 6, |f|_2^2 = 9
        cs = ConstraintSet(M=0.25, p=2, n=2)
        ft, lam, ratio = scale_to_feasible(f, cs)
        assert ft.integral_all() == 1
        assert ft.lp_norm_int(2) == Fraction(1, 4)
        assert objective_I(ft, 2, 2) == ratio * objective_I(f, 2, 2)

    def test_exact_rational_lambda_p3(self):
        # with p = 3 the dilation is a square root; engineered to be rational
        f = PiecewisePoly.indicator(0, 1, 2)  # mass 2, |f|_3^3 = 8
        # lam = (lpm / (M mass^p))^(1/(p-1)) = (8 / (M 8))^(1/2) -> M = 1/4 gives lam = 2
        cs = ConstraintSet(M=Fraction(1, 4), p=3, n=2)
        ft, lam, ratio = scale_to_feasible(f, cs)
        assert lam == 2
        assert ft.integral_all() == 1
        assert ft.lp_norm_int(3) == Fraction(1, 4)

    def test_grid_case(self):
        g = GridFunction(-1.0, 1e-3, np.full(2001, 0.7))
        cs = ConstraintSet(M=0.4, p=2.0, n=2)
        ft, lam, ratio = scale_to_feasible(g, cs)
        assert ft.mass == pytest.approx(1.0, abs=1e-9)
        assert lp_norm_real(ft, 2.0) == pytest.approx(0.4, abs=1e-9)

    def test_zero_mass_rejected(self):
        with pytest.raises((ZeroMass, ValueError)):
            scale_to_feasible(PiecewisePoly.zero(), ConstraintSet(M=0.5, p=2, n=2))

    def test_identity_suite_grid(self, rng, trials):
        cs = ConstraintSet(M=0.5, p=2.0, n=2)
        for _ in range(trials):
            f = rand_step_density(rng)
            i_orig = float(objective_I(f, 2, 2.0))
            ft, lam, ratio = scale_to_feasible(f, cs)
            assert ft.mass == pytest.approx(1.0, abs=1e-9)
            assert lp_norm_real(ft, 2.0) == pytest.approx(0.5, abs=1e-9)
            i_new = float(objective_I(ft, 2, 2.0))
            assert i_new == pytest.approx(float(ratio) * i_orig, rel=1e-9)

    def test_identity_suite_exact(self, rng):
        cs = ConstraintSet(M=Fraction(2, 5), p=2, n=2)
        for _ in range(10):
            f = rand_step_density(rng, exact=True)
            ft, lam, ratio = scale_to_feasible(f, cs)
            assert ft.integral_all() == 1
            assert ft.lp_norm_int(2) == Fraction(2, 5)
            assert objective_I(ft, 2, 2) == ratio * objective_I(f, 2, 2)


class TestGeneralizedGaussian:
    def test_alpha_closed_form_p2(self):
        gg = gengauss(1.0, 2.0)
        assert gg.alpha == pytest.approx(0.75, abs=1e-10)

    def test_alpha_exact_symbolic_p2(self):
        alpha, poly = exact_gengauss_p2(Fraction(1))
        assert alpha == Fraction(3, 4)
        assert poly.integral_all() == 1
        assert poly.lp_norm_int(2) == Fraction(3, 5)

    def test_unit_mass_various_p(self):
        for p in (1.5, 2.0, 3.0, 4.5):
            gg = gengauss(2.0, p)
            g = gg.to_grid(1e-4)
            assert g.mass == pytest.approx(1.0, abs=2e-5)

    def test_lp_mass_closed_form_vs_grid(self):
        gg = gengauss(1.5, 2.5)
        g = gg.to_grid(1e-4)
        assert lp_norm_real(g, 2.5) == pytest.approx(gg.lp_mass(2.5), rel=1e-6)

    def test_beta_for_entropy_round_trip(self):
        for beta in (0.3, 1.0, 7.5):
            h = gengauss(beta, 2.0).renyi_entropy()
            gg2 = gengauss_beta_for_entropy(h, 2.0)
            assert gg2.beta == pytest.approx(beta, rel=1e-9)

    def test_for_lp_mass(self):
        gg = gengauss_for_lp_mass(0.5, 2.0)
        assert gg.lp_mass(2.0) == pytest.approx(0.5, rel=1e-12)

    def test_exact_p2_for_lp_mass(self):
        alpha, poly = exact_gengauss_p2_for_lp_mass(Fraction(1, 2))
        assert poly.integral_all() == 1
        assert poly.lp_norm_int(2) == Fraction(1, 2)

    def test_entropy_matches_grid(self):
        gg = gengauss(1.0, 2.0)
        g = gg.to_grid(1e-4)
        assert renyi_entropy(g, 2.0) == pytest.approx(gg.renyi_entropy(), abs=1e-6)
