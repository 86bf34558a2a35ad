"""Sampled nonnegative functions on a uniform grid.

Floating-point companion to the exact piecewise layer: supplies
convolution, powers, norms, reflection and symmetric decreasing
rearrangement for general real exponents.  Integrals are plain
rectangle-rule sums dx * sum(values), which makes the discrete mass of a
convolution factor exactly and keeps the solver's discrete identities
clean.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .piecewise import PiecewisePoly

# negatives within this of zero are clamped at construction, below it rejected
NEGATIVE_CLAMP = 1e-12
# convolution roundoff clamp, relative to the largest output value
_CONV_CLAMP_REL = 1e-10
_SPACING_RTOL = 1e-12


class MismatchedSpacing(ValueError):
    """Raised when an operation combines grids with different spacing."""


class AsymmetricGrid(ValueError):
    """Raised when an operation requires a grid symmetric about 0."""


@dataclass(frozen=True)
class GridFunction:
    """Nonnegative samples on the uniform grid x0 + k*dx, k = 0..n-1."""

    x0: float
    dx: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (self.dx > 0):
            raise ValueError("dx must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("values must be a 1-D sequence of length >= 2")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        low = float(vals.min())
        if low < 0:
            if low < -NEGATIVE_CLAMP:
                raise ValueError(f"negative value {low} below clamp tolerance")
            vals = np.maximum(vals, 0.0)
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.size)

    @property
    def x_end(self) -> float:
        return self.x0 + self.dx * (self.values.size - 1)

    @property
    def mass(self) -> float:
        """Rectangle-rule integral dx * sum(values), summed with fsum."""
        return self.dx * math.fsum(self.values.tolist())

    def is_symmetric_grid(self, rtol: float = 1e-9) -> bool:
        """True when the node set is symmetric about 0 (odd count)."""
        n = self.values.size
        if n % 2 == 0:
            return False
        target = -(n - 1) / 2 * self.dx
        return abs(self.x0 - target) <= rtol * max(1.0, abs(target))

    def node_index(self, x: float) -> int:
        """Index of the node at x; raises if x is not a node."""
        k = (x - self.x0) / self.dx
        ki = round(k)
        if abs(k - ki) > 1e-6 or not (0 <= ki < self.values.size):
            raise ValueError(f"x = {x} is not a grid node")
        return int(ki)

    def value_at(self, x: float) -> float:
        return float(self.values[self.node_index(x)])

    def with_values(self, values: np.ndarray) -> "GridFunction":
        """Same grid, new values (validated by the constructor)."""
        return GridFunction(self.x0, self.dx, values)

    def scaled(self, c: float) -> "GridFunction":
        """Pointwise multiple c*f, c >= 0."""
        return self.with_values(c * self.values)

    def dilate(self, lam: float) -> "GridFunction":
        """The function x -> f(x/lam): same samples on the lattice scaled
        by lam.  No interpolation, so discrete norms transform exactly by
        the continuum rules."""
        if not (lam > 0):
            raise ValueError("dilation factor must be positive")
        return GridFunction(lam * self.x0, lam * self.dx, self.values)


def symmetric_grid(values: Sequence[float], dx: float) -> GridFunction:
    """Grid symmetric about 0: odd node count, x0 = -(n-1)/2 * dx."""
    vals = np.asarray(values, dtype=float)
    if vals.size % 2 == 0:
        raise AsymmetricGrid("symmetric grid needs an odd number of nodes")
    return GridFunction(-(vals.size - 1) / 2 * dx, dx, vals)


def sample(f: PiecewisePoly, dx: float, padding: float = 0.0) -> GridFunction:
    """Sample f at uniform nodes covering its support extended by padding."""
    if not (dx > 0):
        raise ValueError("dx must be positive")
    lo = float(f.support[0]) - padding
    hi = float(f.support[1]) + padding
    n = max(2, int(math.ceil((hi - lo) / dx - 1e-9)) + 1)
    vals = np.empty(n)
    for k in range(n):
        x = lo + k * dx
        vals[k] = float(f.eval(Fraction(x)))
    return GridFunction(lo, dx, vals)


def _check_spacing(f: GridFunction, g: GridFunction) -> float:
    if abs(f.dx - g.dx) > _SPACING_RTOL * max(f.dx, g.dx):
        raise MismatchedSpacing(f"dx mismatch: {f.dx} vs {g.dx}")
    return f.dx


def convolve_grid(f: GridFunction, g: GridFunction, method: str = "auto") -> GridFunction:
    """Discrete convolution (f*g)[i] = dx * sum_j f[j] g[i-j].

    Output starts at f.x0 + g.x0 with length len(f)+len(g)-1.  The
    transform-based path pads to a power of two; its roundoff can leave
    tiny negatives on nodes whose true value is 0, clamped relative to
    the peak before construction.
    """
    dx = _check_spacing(f, g)
    n_out = f.values.size + g.values.size - 1
    if method == "auto":
        method = "fft" if n_out > 512 else "direct"
    if method == "direct":
        out = np.convolve(f.values, g.values)
    elif method == "fft":
        n_fft = 1 << (n_out - 1).bit_length()
        out = np.fft.irfft(np.fft.rfft(f.values, n_fft) * np.fft.rfft(g.values, n_fft), n_fft)[:n_out]
        clamp = _CONV_CLAMP_REL * max(1.0, float(np.abs(out).max()))
        out[(out < 0) & (out > -clamp)] = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridFunction(f.x0 + g.x0, dx, dx * out)


def self_convolution_grid(f: GridFunction, n: int, method: str = "auto") -> GridFunction:
    """n-fold self convolution on the grid (n = 1 returns f)."""
    if n < 1:
        raise ValueError("self_convolution_grid requires n >= 1")
    out = f
    for _ in range(n - 1):
        out = convolve_grid(out, f, method=method)
    return out


def power_real(f: GridFunction, q: float) -> GridFunction:
    """Pointwise power f^q for real q > 0 (0^q = 0)."""
    if not (q > 0):
        raise ValueError("power_real requires q > 0")
    return f.with_values(np.power(f.values, q))


def lp_norm_real(f: GridFunction, p: float) -> float:
    """dx * sum f[i]^p, the p-th power of the grid L^p norm, for p >= 1."""
    if not (p >= 1):
        raise ValueError("lp_norm_real requires p >= 1")
    return f.dx * math.fsum(np.power(f.values, p).tolist())


def reflect(f: GridFunction) -> GridFunction:
    """The grid function x -> f(-x)."""
    return GridFunction(-f.x_end, f.dx, f.values[::-1])


def rearrange_symmetric_decreasing(f: GridFunction) -> GridFunction:
    """Symmetric decreasing rearrangement on a symmetric grid.

    The multiset of values is preserved; sorted descending, they are
    placed at offsets 0, +1, -1, +2, -2, ... from the center node, so the
    output is non-increasing in |x|.
    """
    if not f.is_symmetric_grid():
        raise AsymmetricGrid("rearrangement needs a grid symmetric about 0")
    n = f.values.size
    center = n // 2
    order = np.argsort(-f.values, kind="stable")
    out = np.empty(n)
    pos = center
    for rank, idx in enumerate(order):
        if rank == 0:
            pos = center
        elif rank % 2 == 1:
            pos = center + (rank + 1) // 2
        else:
            pos = center - rank // 2
        out[pos] = f.values[idx]
    return f.with_values(out)


def write_csv(f: GridFunction, path) -> None:
    """Write two-column CSV `x,value` with full float precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "value"])
        for x, v in zip(f.nodes, f.values):
            writer.writerow([f"{x:.17g}", f"{v:.17g}"])


def read_csv(path) -> GridFunction:
    """Read the CSV written by write_csv; validates uniform spacing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip().lower() for h in header[:2]] != ["x", "value"]:
            raise ValueError("expected header row 'x,value'")
        xs, vs = [], []
        for row in reader:
            if not row:
                continue
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    if len(xs) < 2:
        raise ValueError("need at least two rows")
    dx = (xs[-1] - xs[0]) / (len(xs) - 1)
    if dx <= 0 or np.max(np.abs(np.diff(xs) - dx)) > 1e-9 * max(1.0, abs(dx)):
        raise ValueError("grid spacing is not uniform")
    return GridFunction(xs[0], dx, np.array(vs))
