"""Periodic lattice functions and their discrete calculus.

The chain has N sites at x = k*eps, k = 1..N, with eps = 1/N, extended
periodically.  Values are stored in a plain float array where entry i
corresponds to site k = i + 1.  A site k belongs to species (k-1) mod p,
which is also the index into the p-periodic parameter lists of a potential
family and into micro-cell fields.

Discrete operators (all wrap periodically):

    diff_r(u, r)(x)    = (u(x + r eps) - u(x)) / (r eps)
    average_r(u, r)    = (1/r) * sum_{k=0..r-1} u(. + k eps)
    translate(u, k)(x) = u(x + k eps)

so that diff_r(u, r) == average_r(diff_r(u, 1), r).

Norms use the mean-scaled convention ||u||_q = ((1/N) sum |u|^q)^(1/q)
(max for q = inf), and |u|_{m,q} = ||D^m u||_q for m >= 0.  The negative
seminorm

    |u|_{-1,inf} = sup { <u, v> : <v> = 0, |v|_{1,1} = 1 }

has the closed form (max w - min w) / 2 where w is any discrete primitive
with D w(x) = u(x + eps); the additive constant of w cancels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LatticeGrid:
    """N-site periodic chain with microstructure period p; eps = 1/N."""

    N: int
    p: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"need at least 2 sites, got N={self.N}")
        if self.p < 1:
            raise ValueError(f"period must be positive, got p={self.p}")
        if self.N % self.p != 0:
            raise ValueError(f"N={self.N} is not a multiple of the period p={self.p}")

    @property
    def eps(self) -> float:
        return 1.0 / self.N

    def sites(self) -> np.ndarray:
        """Site coordinates x = eps, 2 eps, ..., N eps = 1."""
        return self.eps * np.arange(1, self.N + 1)

    def species(self) -> np.ndarray:
        """Species index (k-1) mod p of every site, as 0-based array indices."""
        return np.arange(self.N) % self.p


@dataclass(frozen=True)
class LatticeFn:
    """Real-valued eps*N-periodic function given by its N site values."""

    grid: LatticeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def mean(self) -> float:
        return float(self.values.mean())

    def with_values(self, values: np.ndarray) -> "LatticeFn":
        return LatticeFn(self.grid, values)


@dataclass(frozen=True)
class MicroFn:
    """p-periodic function on the micro lattice {1, .., p} (unit spacing).

    Entry j of ``values`` is the value at micro site y = j + 1.
    """

    p: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.p,):
            raise ValueError(f"expected {self.p} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def mean(self) -> float:
        return float(self.values.mean())


def micro_diff_r(eta: MicroFn, r: int) -> MicroFn:
    """r-step derivative on the micro lattice (unit spacing)."""
    if r == 0:
        raise ValueError("r must be nonzero")
    v = eta.values
    return MicroFn(eta.p, (np.roll(v, -r) - v) / r)


def diff_r(u: LatticeFn, r: int) -> LatticeFn:
    """r-step discrete derivative (u(x + r eps) - u(x)) / (r eps), r != 0."""
    if r == 0:
        raise ValueError("r must be nonzero")
    v = u.values
    return u.with_values((np.roll(v, -r) - v) / (r * u.grid.eps))


def average_r(u: LatticeFn, r: int) -> LatticeFn:
    """Average of the r forward translates u, u(.+eps), ..., u(.+(r-1) eps)."""
    if r < 1:
        raise ValueError("r must be a positive integer")
    v = u.values
    acc = v.copy()
    for k in range(1, r):
        acc += np.roll(v, -k)
    return u.with_values(acc / r)


def translate(u: LatticeFn, k: int) -> LatticeFn:
    """k-step translation x -> u(x + k eps)."""
    return u.with_values(np.roll(u.values, -k))


def project_zero_mean(u: LatticeFn) -> LatticeFn:
    """Remove the mean: u - <u>."""
    return u.with_values(u.values - u.values.mean())


def inner(u: LatticeFn, v: LatticeFn) -> float:
    """Mean-scaled scalar product (1/N) sum u(x) v(x)."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch in inner product")
    return float(u.values @ v.values) / u.grid.N


def _qnorm(values: np.ndarray, q) -> float:
    if q == np.inf:
        return float(np.abs(values).max())
    if q < 1:
        raise ValueError(f"q must be in [1, inf], got {q}")
    n = values.size
    return float((np.abs(values) ** q).sum() / n) ** (1.0 / q)


def norm(u: LatticeFn, q=2) -> float:
    return _qnorm(u.values, q)


def seminorm(u: LatticeFn, m: int = 0, q=2) -> float:
    """|u|_{m,q} = ||D^m u||_q for m >= 0 (m = 0 is the plain norm)."""
    if m < 0:
        raise ValueError("negative-order seminorms: use dual_seminorm_neg1")
    v = u
    for _ in range(m):
        v = diff_r(v, 1)
    return _qnorm(v.values, q)


def dual_seminorm_neg1(u: LatticeFn, q=np.inf) -> float:
    """|u|_{-1,inf} of a zero-mean u, by the primitive closed form.

    Equals sup{ <u, v> : v zero mean, |v|_{1,1} = 1 }.  Computed as
    (max w - min w) / 2 for the primitive w = eps * cumsum(u), which
    satisfies D w(x) = u(x + eps).
    """
    if q != np.inf:
        raise ValueError("only q = inf is supported")
    if abs(u.values.mean()) > 1e-12:
        raise ValueError(f"dual seminorm needs zero mean, got mean {u.values.mean():.3e}")
    w = u.grid.eps * np.cumsum(u.values)
    return 0.5 * float(w.max() - w.min())
