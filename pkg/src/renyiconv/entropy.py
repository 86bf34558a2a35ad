"""Renyi entropy functionals, the convolution objective, feasible-set
normalization, and the generalized Gaussian family.

All quantities are for densities on the line (d = 1).  Exact rational
arithmetic is used whenever the input is a piecewise polynomial and the
exponents are integers; otherwise computation routes through the grid
layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np

from . import grid as _grid
from .grid import GridFunction
from .piecewise import PiecewisePoly, self_convolution

Density = Union[PiecewisePoly, GridFunction]

# grid spacing used when a piecewise input needs a numeric fallback
DEFAULT_DX = 1e-3


class DegenerateDensity(ValueError):
    """Raised when a density has zero p-mass where positivity is required."""


class ZeroMass(ValueError):
    """Raised when a normalization needs ||f||_1 > 0 but the mass is 0."""


class NoBracket(ValueError):
    """Raised when a scalar solve cannot bracket its target."""


@dataclass(frozen=True)
class ConstraintSet:
    """Feasibility data: ||f||_1 = 1 and ||f||_p^p = M, objective uses C_n."""

    M: float
    p: float
    n: int

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("M must be positive")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ValueError("n must be an integer >= 2")


def _is_integer_exponent(p) -> bool:
    if isinstance(p, int):
        return True
    if isinstance(p, Fraction):
        return p.denominator == 1
    if isinstance(p, float):
        return p.is_integer()
    return False


def _as_grid(f: Density, dx: float = DEFAULT_DX) -> GridFunction:
    if isinstance(f, GridFunction):
        return f
    return _grid.sample(f, dx)


def lp_mass(f: Density, p) -> Union[Fraction, float]:
    """Integral of f^p: exact Fraction for piecewise f with integer p,
    float otherwise."""
    if isinstance(f, PiecewisePoly) and _is_integer_exponent(p):
        return f.lp_norm_int(int(p))
    return _grid.lp_norm_real(_as_grid(f), float(p))


def _log_fraction(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


def renyi_entropy(f: Density, p) -> float:
    """h_p = -log(integral of f^p) / (p - 1), for p > 1."""
    if not float(p) > 1:
        raise ValueError("renyi_entropy requires p > 1")
    ip = lp_mass(f, p)
    if ip <= 0:
        raise DegenerateDensity("integral of f^p is zero")
    log_ip = _log_fraction(ip) if isinstance(ip, Fraction) else math.log(ip)
    return -log_ip / (float(p) - 1)


def entropy_power(f: Density, p) -> float:
    """N_p = exp(2 h_p) (d = 1)."""
    return math.exp(2.0 * renyi_entropy(f, p))


def objective_I(f: Density, n: int, p) -> Union[Fraction, float]:
    """The objective: integral of [C_n(f)]^p where C_n is the n-fold
    self convolution.

    Exact mode (piecewise f, integer p) returns a Fraction, which is
    simultaneously the exact rational value and a usable real number;
    all other inputs go through the grid pipeline and return a float.
    """
    if n < 1:
        raise ValueError("objective_I requires n >= 1")
    if isinstance(f, PiecewisePoly) and _is_integer_exponent(p):
        return self_convolution(f, n).lp_norm_int(int(p))
    g = _as_grid(f)
    return _grid.lp_norm_real(_grid.self_convolution_grid(g, n), float(p))


class FeasibleScaling(NamedTuple):
    f_tilde: Density
    lam: Union[Fraction, float]
    predicted_ratio: Union[Fraction, float]


def _integer_kth_root(m: int, k: int) -> int:
    """Floor of the k-th root of m >= 0, pure integer Newton iteration."""
    if m < 2:
        return m
    x = 1 << ((m.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + m // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _nth_root_fraction(r: Fraction, k: int) -> Union[Fraction, None]:
    """Exact rational k-th root of r > 0, or None if irrational."""
    if k == 1:
        return r
    num = _integer_kth_root(r.numerator, k)
    den = _integer_kth_root(r.denominator, k)
    if num ** k != r.numerator or den ** k != r.denominator:
        return None
    return Fraction(num, den)


def scale_to_feasible(f: Density, constraints: ConstraintSet) -> FeasibleScaling:
    """Normalize f into the feasible set by dilation and mass scaling.

    Returns (f_tilde, lam, predicted_ratio) with
      f_tilde(x) = f(x / lam) / (lam * ||f||_1),
      lam = (||f||_p^p / (M * ||f||_1^p))^(1/(p-1)),
    so that ||f_tilde||_1 = 1 and ||f_tilde||_p^p = M, and
      objective_I(f_tilde, n, p) = predicted_ratio * objective_I(f, n, p)
    with predicted_ratio = M / (||f||_p^p * ||f||_1^(p(n-1))).
    """
    M, p, n = constraints.M, constraints.p, constraints.n
    if isinstance(f, PiecewisePoly) and _is_integer_exponent(p):
        pi = int(p)
        mass = f.integral_all()
        if mass <= 0:
            raise ZeroMass("||f||_1 must be positive")
        lpm = f.lp_norm_int(pi)
        if lpm <= 0:
            raise DegenerateDensity("||f||_p^p must be positive")
        m_exact = M if isinstance(M, Fraction) else Fraction(M)
        ratio = lpm / (m_exact * mass ** pi)
        lam = _nth_root_fraction(ratio, pi - 1)
        if lam is None:
            lam = Fraction(float(ratio) ** (1.0 / (pi - 1)))
        f_tilde = f.dilate(lam) * (1 / (lam * mass))
        predicted = m_exact / (lpm * mass ** (pi * (n - 1)))
        _assert_feasible(f_tilde, constraints)
        return FeasibleScaling(f_tilde, lam, predicted)

    g = _as_grid(f)
    mass = g.mass
    if mass <= 0:
        raise ZeroMass("||f||_1 must be positive")
    lpm = _grid.lp_norm_real(g, float(p))
    if lpm <= 0:
        raise DegenerateDensity("||f||_p^p must be positive")
    lam = (lpm / (float(M) * mass ** float(p))) ** (1.0 / (float(p) - 1.0))
    f_tilde = g.dilate(lam).scaled(1.0 / (lam * mass))
    predicted = float(M) / (lpm * mass ** (float(p) * (n - 1)))
    _assert_feasible(f_tilde, constraints)
    return FeasibleScaling(f_tilde, lam, predicted)


def _assert_feasible(f: Density, constraints: ConstraintSet, rtol: float = 1e-9) -> None:
    mass = f.integral_all() if isinstance(f, PiecewisePoly) else f.mass
    lpm = lp_mass(f, constraints.p if not _is_integer_exponent(constraints.p) else int(constraints.p))
    if abs(float(mass) - 1.0) > rtol:
        raise RuntimeError(f"normalization failed: ||f||_1 = {float(mass)}")
    if abs(float(lpm) - float(constraints.M)) > rtol * max(1.0, float(constraints.M)):
        raise RuntimeError(f"normalization failed: ||f||_p^p = {float(lpm)}")


# ----------------------------------------------------------------------
# generalized Gaussians


def _log_beta_half(s: float) -> float:
    """log B(1/2, s) via log-gamma."""
    return math.lgamma(0.5) + math.lgamma(s) - math.lgamma(0.5 + s)


@dataclass(frozen=True)
class GeneralizedGaussian:
    """The density alpha * (1 - beta x^2)_+^(1/(p-1)) on the line."""

    beta: float
    p: float
    alpha: float

    @property
    def q(self) -> float:
        return 1.0 / (self.p - 1.0)

    @property
    def support(self) -> tuple[float, float]:
        half = self.beta ** -0.5
        return (-half, half)

    def value(self, x: float) -> float:
        u = 1.0 - self.beta * x * x
        if u <= 0:
            return 0.0
        return self.alpha * u ** self.q

    def to_grid(self, dx: float, padding: float = 0.0) -> GridFunction:
        half = self.beta ** -0.5 + padding
        n = max(2, int(math.ceil(half / dx - 1e-9)))
        xs = dx * np.arange(-n, n + 1)
        u = np.maximum(1.0 - self.beta * xs * xs, 0.0)
        return GridFunction(xs[0], dx, self.alpha * u ** self.q)

    def lp_mass(self, r: float) -> float:
        """Closed-form integral of G^r for real r > 0."""
        if not r > 0:
            raise ValueError("exponent must be positive")
        log_val = r * math.log(self.alpha) - 0.5 * math.log(self.beta) + _log_beta_half(r * self.q + 1.0)
        return math.exp(log_val)

    def renyi_entropy(self) -> float:
        return -math.log(self.lp_mass(self.p)) / (self.p - 1.0)


def gengauss(beta: float, p: float) -> GeneralizedGaussian:
    """G_{beta,p} with alpha fixed by unit mass:
    alpha = sqrt(beta) / B(1/2, q+1), q = 1/(p-1)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not p > 1:
        raise ValueError("p must exceed 1")
    q = 1.0 / (p - 1.0)
    alpha = math.exp(0.5 * math.log(beta) - _log_beta_half(q + 1.0))
    return GeneralizedGaussian(beta=beta, p=p, alpha=alpha)


def gengauss_beta_for_entropy(h_target: float, p: float, tol: float = 1e-12) -> GeneralizedGaussian:
    """Solve h_p(G_{beta,p}) = h_target for beta by bisection on log beta.

    h_p is strictly decreasing in beta (dilation shifts entropy by
    -(1/2) log beta), so bisection on [1e-300, 1e300] is monotone.
    """
    lo, hi = math.log(1e-300), math.log(1e300)

    def h(logb: float) -> float:
        return gengauss(math.exp(logb), p).renyi_entropy()

    h_lo, h_hi = h(lo), h(hi)
    # decreasing: h(lo) is the largest achievable entropy
    if not (h_hi <= h_target <= h_lo):
        raise NoBracket(f"entropy {h_target} outside achievable range [{h_hi}, {h_lo}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) >= h_target:
            lo = mid
        else:
            hi = mid
        if abs(h(lo) - h_target) <= tol:
            break
    return gengauss(math.exp(lo), p)


def gengauss_for_lp_mass(M: float, p: float) -> GeneralizedGaussian:
    """G_{beta,p} with integral of G^p equal to M.

    The p-mass scales as beta^((p-1)/2) times its beta = 1 value, which
    inverts in closed form.
    """
    if not M > 0:
        raise ValueError("M must be positive")
    base = gengauss(1.0, p).lp_mass(p)
    beta = (M / base) ** (2.0 / (p - 1.0))
    return gengauss(beta, p)


def exact_gengauss_p2(sqrt_beta: Fraction) -> tuple[Fraction, PiecewisePoly]:
    """Exact p = 2 generalized Gaussian for rational sqrt(beta).

    Returns (alpha, density) with alpha = (3/4) sqrt(beta) and density
    alpha (1 - beta x^2) on [-1/sqrt(beta), 1/sqrt(beta)]; the mass is
    exactly 1 and the 2-mass exactly (3/5) sqrt(beta).
    """
    s = Fraction(sqrt_beta)
    if s <= 0:
        raise ValueError("sqrt_beta must be positive")
    alpha = Fraction(3, 4) * s
    from .piecewise import Polynomial

    poly = Polynomial([alpha, 0, -alpha * s * s])
    return alpha, PiecewisePoly.single(poly, -1 / s, 1 / s)


def exact_gengauss_p2_for_lp_mass(M: Fraction) -> tuple[Fraction, PiecewisePoly]:
    """Exact p = 2 generalized Gaussian with 2-mass exactly M (rational)."""
    m = Fraction(M)
    if m <= 0:
        raise ValueError("M must be positive")
    return exact_gengauss_p2(Fraction(5, 3) * m)
