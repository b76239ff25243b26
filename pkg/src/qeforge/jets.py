"""Truncated Taylor-polynomial ("jet") arithmetic in n variables.

A :class:`Jet` stores all partial derivatives of a scalar quantity at a point
up to a fixed order, in the *derivative convention*: the coefficient indexed
by the multi-index ``alpha`` is the raw partial ``d^alpha f``, not the
monomial coefficient ``d^alpha f / alpha!``.  Curvature formulas consume raw
partials, so this keeps every downstream contraction factor-free.

Binary operations close over ``min(order)`` of the operands and require equal
``n_vars``.  The public entry point :func:`seed` caps the order at
``MAX_SEED_ORDER`` (= 4); internal field composition is allowed to build
higher-order jets through the :class:`Jet` constructor directly (deformed
metric components need fifth derivatives of surface potentials to expose
third metric derivatives).
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import SingularityError

MAX_SEED_ORDER = 4

# |leading value| below this aborts a division outright.
DIV_ZERO_THRESHOLD = 1e-300


def n_terms(n_vars: int, order: int) -> int:
    """Number of multi-indices alpha with |alpha| <= order."""
    return math.comb(n_vars + order, order)


class _JetSpace:
    """Precomputed index tables for jets with a fixed (n_vars, order).

    Multi-indices are enumerated by total degree then lexicographically, so
    truncation to a lower order is a prefix slice of the coefficient vector.
    """

    def __init__(self, n_vars: int, order: int):
        self.n_vars = n_vars
        self.order = order
        alphas = [
            a
            for a in product(range(order + 1), repeat=n_vars)
            if sum(a) <= order
        ]
        alphas.sort(key=lambda a: (sum(a), a))
        self.alphas = tuple(alphas)
        self.pos = {a: i for i, a in enumerate(alphas)}
        self.size = len(alphas)

        # Leibniz plan: out[i_out] += coef * a[i_a] * b[i_b] over all splits
        # beta + gamma = alpha with multinomial weight prod C(alpha_i, beta_i).
        outs, ias, ibs, coefs = [], [], [], []
        for alpha in alphas:
            i_out = self.pos[alpha]
            for beta in product(*(range(k + 1) for k in alpha)):
                gamma = tuple(a - b for a, b in zip(alpha, beta))
                c = 1.0
                for a, b in zip(alpha, beta):
                    c *= math.comb(a, b)
                outs.append(i_out)
                ias.append(self.pos[beta])
                ibs.append(self.pos[gamma])
                coefs.append(c)
        self.mul_out = np.asarray(outs, dtype=np.intp)
        self.mul_a = np.asarray(ias, dtype=np.intp)
        self.mul_b = np.asarray(ibs, dtype=np.intp)
        self.mul_c = np.asarray(coefs)

        # Coordinate-derivative shift: jet of d_i f has coefficients
        # (d_i f)_alpha = f_{alpha + e_i}, one order lower.
        if order >= 1:
            sub = _space(n_vars, order - 1)
            self.shift = []
            for i in range(n_vars):
                src = np.empty(sub.size, dtype=np.intp)
                for j, alpha in enumerate(sub.alphas):
                    bumped = tuple(
                        a + (1 if k == i else 0) for k, a in enumerate(alpha)
                    )
                    src[j] = self.pos[bumped]
                self.shift.append(src)


@lru_cache(maxsize=None)
def _space(n_vars: int, order: int) -> _JetSpace:
    return _JetSpace(n_vars, order)


class Jet:
    """All partial derivatives of a scalar at a point, up to ``order``."""

    __slots__ = ("n_vars", "order", "coeffs")

    def __init__(self, n_vars: int, order: int, coeffs):
        if n_vars < 1:
            raise ValueError(f"n_vars must be >= 1, got {n_vars}")
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        coeffs = np.asarray(coeffs, dtype=float)
        expected = n_terms(n_vars, order)
        if coeffs.shape != (expected,):
            raise ValueError(
                f"need {expected} coefficients for n_vars={n_vars}, "
                f"order={order}, got shape {coeffs.shape}"
            )
        self.n_vars = n_vars
        self.order = order
        self.coeffs = coeffs

    # -- constructors ------------------------------------------------------

    @classmethod
    def const(cls, value: float, n_vars: int, order: int) -> "Jet":
        c = np.zeros(n_terms(n_vars, order))
        c[0] = value
        return cls(n_vars, order, c)

    # -- basic access ------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def partial(self, alpha) -> float:
        """Stored raw partial d^alpha (derivative convention)."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n_vars or any(a < 0 for a in alpha):
            raise ValueError(f"bad multi-index {alpha} for n_vars={self.n_vars}")
        if sum(alpha) > self.order:
            raise ValueError(
                f"|{alpha}| = {sum(alpha)} exceeds jet order {self.order}"
            )
        return float(self.coeffs[_space(self.n_vars, self.order).pos[alpha]])

    def gradient(self) -> np.ndarray:
        """First partials as a vector (requires order >= 1)."""
        if self.order < 1:
            raise ValueError("order-0 jet has no first derivatives")
        sp = _space(self.n_vars, self.order)
        return np.array([self.coeffs[sp.pos[_unit(self.n_vars, i)]]
                         for i in range(self.n_vars)])

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot extend order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.n_vars, order, self.coeffs[: n_terms(self.n_vars, order)])

    def d(self, i: int) -> "Jet":
        """Jet of the i-th coordinate derivative (one order lower)."""
        if not 0 <= i < self.n_vars:
            raise ValueError(f"variable index {i} out of range")
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        sp = _space(self.n_vars, self.order)
        return Jet(self.n_vars, self.order - 1, self.coeffs[sp.shift[i]])

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.n_vars != self.n_vars:
                raise ValueError(
                    f"jet variable-count mismatch: {self.n_vars} vs {other.n_vars}"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.const(float(other), self.n_vars, self.order)
        return None

    @staticmethod
    def _align(a: "Jet", b: "Jet"):
        k = min(a.order, b.order)
        return a.truncate(k), b.truncate(k)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = self._align(self, other)
        return Jet(a.n_vars, a.order, a.coeffs + b.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = self._align(self, other)
        return Jet(a.n_vars, a.order, a.coeffs - b.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __neg__(self):
        return Jet(self.n_vars, self.order, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.n_vars, self.order, self.coeffs * float(other))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = self._align(self, other)
        sp = _space(a.n_vars, a.order)
        out = np.zeros(sp.size)
        np.add.at(out, sp.mul_out, sp.mul_c * a.coeffs[sp.mul_a] * b.coeffs[sp.mul_b])
        return Jet(a.n_vars, a.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.n_vars, self.order, self.coeffs / float(other))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = self._align(self, other)
        return a * _reciprocal(b)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, r):
        if isinstance(r, (int, np.integer)):
            return _int_pow(self, int(r))
        if isinstance(r, (float, np.floating)):
            return pow_real(self, float(r))
        return NotImplemented

    def __repr__(self):
        return (f"Jet(n_vars={self.n_vars}, order={self.order}, "
                f"value={self.value:.6g})")


def _unit(n: int, i: int) -> tuple:
    return tuple(1 if k == i else 0 for k in range(n))


# -- public construction ----------------------------------------------------


def seed(point, var_index: int, order: int) -> Jet:
    """Jet of the coordinate function x^var_index at ``point``."""
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    if not 0 <= var_index < n:
        raise ValueError(f"var_index {var_index} out of range for {n} variables")
    if not 0 <= order <= MAX_SEED_ORDER:
        raise ValueError(f"order must be in [0, {MAX_SEED_ORDER}], got {order}")
    return coordinate(point, var_index, order)


def coordinate(point, var_index: int, order: int) -> Jet:
    """Like :func:`seed` without the public order cap (internal use)."""
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    j = Jet.const(point[var_index], n, order)
    if order >= 1:
        sp = _space(n, order)
        j.coeffs[sp.pos[_unit(n, var_index)]] = 1.0
    return j


def const(value: float, n_vars: int, order: int) -> Jet:
    return Jet.const(value, n_vars, order)


# -- functional arithmetic wrappers -------------------------------------------


def add(a: Jet, b: Jet) -> Jet:
    return a + b


def sub(a: Jet, b: Jet) -> Jet:
    return a - b


def mul(a: Jet, b: Jet) -> Jet:
    return a * b


def div(a: Jet, b: Jet) -> Jet:
    return a / b


def neg(a: Jet) -> Jet:
    return -a


def scale(a: Jet, c: float) -> Jet:
    return a * float(c)


def partial(a: Jet, alpha) -> float:
    return a.partial(alpha)


# -- composition with univariate series --------------------------------------


def _nilpotent_powers(a: Jet):
    """Powers u^1..u^order of u = a - a.value (u has zero constant term)."""
    u = a - a.value
    powers = [u]
    for _ in range(a.order - 1):
        powers.append(powers[-1] * u)
    return powers


def _compose(a: Jet, series):
    """sum_m series[m] * (a - a0)^m, truncated at a.order.

    ``series[m]`` must be f^(m)(a0) / m! for the analytic function being
    applied, so this is Taylor's theorem in the truncated ring.
    """
    out = Jet.const(series[0], a.n_vars, a.order)
    if a.order >= 1:
        for m, u_m in enumerate(_nilpotent_powers(a), start=1):
            if series[m] != 0.0:
                out = out + u_m * series[m]
    return out


def _reciprocal(b: Jet) -> Jet:
    b0 = b.value
    if abs(b0) < DIV_ZERO_THRESHOLD:
        raise SingularityError("division by a jet with zero leading value")
    series = [(-1.0) ** m / b0 ** (m + 1) for m in range(b.order + 1)]
    return _compose(b, series)


def _int_pow(a: Jet, r: int) -> Jet:
    if r == 0:
        return Jet.const(1.0, a.n_vars, a.order)
    if r < 0:
        return _reciprocal(_int_pow(a, -r))
    out = a
    for _ in range(r - 1):
        out = out * a
    return out


def exp(a: Jet) -> Jet:
    e = math.exp(a.value)
    return _compose(a, [e / math.factorial(m) for m in range(a.order + 1)])


def log(a: Jet) -> Jet:
    a0 = a.value
    if a0 <= 0.0:
        raise SingularityError(f"log of non-positive leading value {a0:.6g}")
    series = [math.log(a0)]
    series += [(-1.0) ** (m - 1) / (m * a0 ** m) for m in range(1, a.order + 1)]
    return _compose(a, series)


def sin(a: Jet) -> Jet:
    a0 = a.value
    cyc = [math.sin(a0), math.cos(a0), -math.sin(a0), -math.cos(a0)]
    return _compose(a, [cyc[m % 4] / math.factorial(m) for m in range(a.order + 1)])


def cos(a: Jet) -> Jet:
    a0 = a.value
    cyc = [math.cos(a0), -math.sin(a0), -math.cos(a0), math.sin(a0)]
    return _compose(a, [cyc[m % 4] / math.factorial(m) for m in range(a.order + 1)])


def sqrt(a: Jet) -> Jet:
    if a.value <= 0.0:
        raise SingularityError(f"sqrt of non-positive leading value {a.value:.6g}")
    return pow_real(a, 0.5)


def pow_real(a: Jet, r: float) -> Jet:
    """a^r for real r; integer r falls back to repeated multiplication."""
    if float(r).is_integer():
        return _int_pow(a, int(r))
    a0 = a.value
    if a0 <= 0.0:
        raise SingularityError(
            f"non-integer power {r:.6g} of non-positive leading value {a0:.6g}"
        )
    series = []
    c = a0 ** r
    for m in range(a.order + 1):
        series.append(c)
        c *= (r - m) / (m + 1) / a0
    return _compose(a, series)


_ANALYTIC = {"exp": exp, "log": log, "sin": sin, "cos": cos, "sqrt": sqrt}


def analytic(fn: str, a: Jet, r: float | None = None) -> Jet:
    """Apply a named analytic function; ``pow_real`` takes the exponent r."""
    if fn == "pow_real":
        if r is None:
            raise ValueError("pow_real requires the exponent argument")
        return pow_real(a, r)
    try:
        return _ANALYTIC[fn](a)
    except KeyError:
        raise ValueError(f"unknown analytic function {fn!r}") from None
