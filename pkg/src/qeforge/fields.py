"""Scalar fields: anything evaluable to a jet at a point.

All geometry code consumes fields only through ``field.eval(point, order)``
returning a :class:`~qeforge.jets.Jet` with ``n_vars == field.n_vars``.
Parsed expressions (:class:`qeforge.dsl.ScalarField`), ODE trajectories,
pullbacks and derived quantities (e.g. a tensor component computed from other
fields) all share this interface, and the combinators below let constructors
assemble metric components without symbolic machinery.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .jets import Jet


class Field:
    """Base class; subclasses implement ``eval(point, order) -> Jet``."""

    n_vars: int

    def eval(self, point, order: int) -> Jet:
        raise NotImplementedError

    def value(self, point) -> float:
        return self.eval(point, 0).value

    # -- combinators ---------------------------------------------------------

    def _wrap(self, other) -> "Field":
        if isinstance(other, Field):
            if other.n_vars != self.n_vars:
                raise ValueError("field variable-count mismatch")
            return other
        return ConstField(float(other), self.n_vars)

    def __add__(self, other):
        other = self._wrap(other)
        return DerivedField(self.n_vars,
                            lambda p, k: self.eval(p, k) + other.eval(p, k))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._wrap(other)
        return DerivedField(self.n_vars,
                            lambda p, k: self.eval(p, k) - other.eval(p, k))

    def __rsub__(self, other):
        other = self._wrap(other)
        return DerivedField(self.n_vars,
                            lambda p, k: other.eval(p, k) - self.eval(p, k))

    def __mul__(self, other):
        other = self._wrap(other)
        return DerivedField(self.n_vars,
                            lambda p, k: self.eval(p, k) * other.eval(p, k))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._wrap(other)
        return DerivedField(self.n_vars,
                            lambda p, k: self.eval(p, k) / other.eval(p, k))

    def __rtruediv__(self, other):
        other = self._wrap(other)
        return DerivedField(self.n_vars,
                            lambda p, k: other.eval(p, k) / self.eval(p, k))

    def __neg__(self):
        return DerivedField(self.n_vars, lambda p, k: -self.eval(p, k))

    def d(self, i: int) -> "Field":
        """Field of the i-th coordinate derivative (evaluates one order up)."""
        return DerivedField(self.n_vars, lambda p, k: self.eval(p, k + 1).d(i))


class ConstField(Field):
    def __init__(self, value: float, n_vars: int):
        self.n_vars = n_vars
        self._value = float(value)

    def eval(self, point, order):
        return Jet.const(self._value, self.n_vars, order)

    @property
    def const_value(self):
        return self._value


class CoordinateField(Field):
    """The coordinate function x^index on an n_vars-dimensional chart."""

    def __init__(self, n_vars: int, index: int):
        if not 0 <= index < n_vars:
            raise ValueError(f"coordinate index {index} out of range")
        self.n_vars = n_vars
        self.index = index

    def eval(self, point, order):
        return jets.coordinate(point, self.index, order)


class DerivedField(Field):
    """Field backed by an arbitrary jet-producing callable."""

    def __init__(self, n_vars: int, fn):
        self.n_vars = n_vars
        self._fn = fn

    def eval(self, point, order):
        return self._fn(np.asarray(point, dtype=float), order)


class PullbackField(Field):
    """A field on (x1, x2) reinterpreted over (x1, x2, x1p, x2p).

    Primed derivatives are exactly zero: the 4-variable jet is populated only
    on multi-indices supported in the first two slots.
    """

    def __init__(self, base: Field, total_vars: int = 4):
        if base.n_vars >= total_vars:
            raise ValueError("pullback must extend to more variables")
        self.base = base
        self.n_vars = total_vars

    def eval(self, point, order):
        point = np.asarray(point, dtype=float)
        base_jet = self.base.eval(point[: self.base.n_vars], order)
        return extend_jet(base_jet, self.n_vars)


def extend_jet(j: Jet, n_vars: int) -> Jet:
    """Embed a jet into a chart with extra trailing variables (zero partials)."""
    src_space = jets._space(j.n_vars, j.order)
    dst_space = jets._space(n_vars, j.order)
    out = np.zeros(dst_space.size)
    pad = (0,) * (n_vars - j.n_vars)
    for i, alpha in enumerate(src_space.alphas):
        out[dst_space.pos[alpha + pad]] = j.coeffs[i]
    return Jet(n_vars, j.order, out)


class LinearPullbackField(Field):
    """Compose a 1-variable field with a linear form w . x.

    Used for potentials of the form gamma(x1 + x2): by the chain rule the
    partial d^alpha equals gamma^(|alpha|)(w . x) * prod w_i^alpha_i.
    """

    def __init__(self, line_field: Field, weights, offset: float = 0.0):
        if line_field.n_vars != 1:
            raise ValueError("line_field must be univariate")
        self.base = line_field
        self.weights = np.asarray(weights, dtype=float)
        self.offset = float(offset)
        self.n_vars = self.weights.shape[0]

    def eval(self, point, order):
        point = np.asarray(point, dtype=float)
        t = float(self.weights @ point) + self.offset
        line = self.base.eval(np.array([t]), order)
        sp = jets._space(self.n_vars, order)
        out = np.empty(sp.size)
        for i, alpha in enumerate(sp.alphas):
            w = 1.0
            for wi, ai in zip(self.weights, alpha):
                w *= wi ** ai
            out[i] = w * line.coeffs[sum(alpha)] if w != 0.0 else 0.0
        return Jet(self.n_vars, order, out)


# -- pointwise analytic helpers ----------------------------------------------


def _apply(fn, field: Field) -> Field:
    return DerivedField(field.n_vars, lambda p, k: fn(field.eval(p, k)))


def fexp(field: Field) -> Field:
    return _apply(jets.exp, field)


def flog(field: Field) -> Field:
    return _apply(jets.log, field)


def fsqrt(field: Field) -> Field:
    return _apply(jets.sqrt, field)


def fpow(field: Field, r: float) -> Field:
    return _apply(lambda j: jets.pow_real(j, r), field)
