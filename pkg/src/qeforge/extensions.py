"""Neutral-signature metrics on the cotangent bundle of an affine surface.

All constructors emit a 4-dimensional :class:`~qeforge.tensors.MetricField`
in coordinates (x1, x2, x1p, x2p) of the Walker form

    g = 2 dx^i o dx_{i'} + a_ij dx^i o dx^j,

so the cross block is the identity, the primed block vanishes, and only the
unprimed block a_ij varies by family:

* plain/deformed extension: a_ij = -2 x_{k'} Gamma_ij^k + Phi_ij;
* modified extension:       + x_{r'} x_{s'} (T_i^r S_j^s + T_j^r S_i^s) / 2;
* general form with X:      + (x_{k'} X^k) x_{i'} x_{j'}  (S = Id);
* nilpotent family:         T = S nilpotent with T d1 = d2 on a surface whose
  only Christoffel symbol is Gamma_11^2 = u(x1) + x2 v(x1).

The Walker orientation (+1 in this coordinate order) makes the plane dual to
span{d_x1p, d_x2p} self-dual; it is the default for every constructor.
"""

from __future__ import annotations

from dataclasses import dataclass

from .affine import AffineSurface, surface_from_json, wong_nilpotent
from .dsl import ScalarField
from .fields import ConstField, CoordinateField, Field, PullbackField
from .sampling import Box
from .tensors import MetricField

COORDS4 = ("x1", "x2", "x1p", "x2p")
_X1P = CoordinateField(4, 2)
_X2P = CoordinateField(4, 3)
_PRIMED = (_X1P, _X2P)


@dataclass
class ExtensionSpec:
    """Declarative description of an extension metric (JSON-facing).

    ``Phi``/``T_tensor``/``S_tensor`` are 2x2 grids of expressions or
    fields over (x1, x2); ``X_field`` is a pair of components; ``a`` maps
    (i, j) to unprimed-block entries for raw Walker metrics.
    """

    kind: str
    surface: AffineSurface | None = None
    Phi: object = None
    T_tensor: object = None
    S_tensor: object = None
    X_field: object = None
    a: dict | None = None
    box: Box | None = None

    def build(self) -> MetricField:
        if self.kind == "walker_raw":
            return build_walker(self.a or {}, box=self.box)
        if self.kind == "nilpotent_TT":
            u, v = self.a.get("u", "0"), self.a.get("v", "0")
            return build_nilpotent_TT(u, v, box=self.box)
        if self.kind == "deformed":
            return build_deformed(self.surface, self.Phi, box=self.box)
        if self.kind == "modified":
            return build_modified(self.surface, self.Phi, self.T_tensor,
                                  self.S_tensor, box=self.box)
        if self.kind == "general_with_X":
            return build_general_with_X(self.surface, self.Phi, self.T_tensor,
                                        self.X_field, box=self.box)
        raise ValueError(f"unknown extension kind {self.kind!r}")


def _lift(fld: Field) -> Field:
    """Surface field (x1, x2) -> cotangent-bundle field (4 coordinates)."""
    if fld.n_vars == 4:
        return fld
    return PullbackField(fld, 4)


def pullback(f_hat: Field) -> Field:
    """pi^* f_hat: reinterpret a surface function over all four coordinates."""
    return _lift(f_hat)


def _default_box(surface: AffineSurface | None, primed=(-0.75, 0.75)) -> Box:
    base = surface.box.bounds if surface is not None else [(0.5, 1.5), (0.5, 1.5)]
    return Box(list(base) + [primed, primed])


def _as_2x2_fields(obj, coords=("x1", "x2")):
    """Coerce a 2x2 of fields/exprs/numbers to fields on the surface chart."""
    out = [[None, None], [None, None]]
    for i in range(2):
        for j in range(2):
            entry = obj[i][j]
            if isinstance(entry, Field):
                out[i][j] = entry
            elif isinstance(entry, str):
                out[i][j] = ScalarField(entry, coords)
            else:
                out[i][j] = ConstField(float(entry), 2)
    return out


def _zero_phi():
    return [[ConstField(0.0, 2), ConstField(0.0, 2)],
            [ConstField(0.0, 2), ConstField(0.0, 2)]]


def _walker_metric(a_fields: dict, box: Box, name: str) -> MetricField:
    comps = {}
    for (i, j), fld in a_fields.items():
        comps[(i, j)] = fld
    one = ConstField(1.0, 4)
    comps[(0, 2)] = one
    comps[(1, 3)] = one
    return MetricField(COORDS4, comps, orientation=1, box=box, name=name)


def build_walker(a: dict, box: Box | None = None, name: str = "walker_raw") -> MetricField:
    """General Walker metric from a_ij fields over all four coordinates.

    ``a``: {(i, j): field-or-expr} with i, j in {0, 1}; expressions may use
    x1, x2, x1p, x2p.
    """
    fields = {}
    for (i, j), entry in a.items():
        key = (min(i, j), max(i, j))
        if isinstance(entry, Field):
            fld = entry if entry.n_vars == 4 else _lift(entry)
        elif isinstance(entry, str):
            fld = ScalarField(entry, COORDS4)
        else:
            fld = ConstField(float(entry), 4)
        fields[key] = fld
    if box is None:
        box = Box([(0.5, 1.5), (0.5, 1.5), (-0.75, 0.75), (-0.75, 0.75)])
    return _walker_metric(fields, box, name)


def _gamma_block(surface: AffineSurface, i: int, j: int) -> Field:
    """-2 x_{k'} Gamma_ij^k as a 4-coordinate field."""
    acc = None
    for k in range(2):
        term = _PRIMED[k] * _lift(surface.gamma_field(i, j, k)) * (-2.0)
        acc = term if acc is None else acc + term
    return acc


def build_deformed(surface: AffineSurface, Phi=None, box: Box | None = None,
                   name: str = "deformed_extension") -> MetricField:
    """Deformed extension: a_ij = -2 x_{k'} Gamma_ij^k + Phi_ij."""
    Phi = _as_2x2_fields(Phi) if Phi is not None else _zero_phi()
    fields = {}
    for i in range(2):
        for j in range(i, 2):
            fields[(i, j)] = _gamma_block(surface, i, j) + _lift(Phi[i][j])
    metric = _walker_metric(fields, box or _default_box(surface), name)
    metric.surface = surface
    return metric


def build_modified(surface: AffineSurface, Phi=None, T_tensor=None,
                   S_tensor=None, box: Box | None = None,
                   name: str = "modified_extension") -> MetricField:
    """Modified extension:
    a_ij = x_{r'} x_{s'} (T_i^r S_j^s + T_j^r S_i^s)/2
           - 2 x_{k'} Gamma_ij^k + Phi_ij.

    ``T_tensor``/``S_tensor`` are 2x2 with T[i][r] the component of T d_i
    along d_r; None means the zero endomorphism.
    """
    Phi = _as_2x2_fields(Phi) if Phi is not None else _zero_phi()
    T = _as_2x2_fields(T_tensor) if T_tensor is not None else None
    S = _as_2x2_fields(S_tensor) if S_tensor is not None else None

    def iota(endo):
        """x_{r'} E_i^r for an endomorphism: the 1-form components."""
        return [
            sum((_PRIMED[r] * _lift(endo[i][r]) for r in range(2)),
                start=ConstField(0.0, 4))
            for i in range(2)
        ]

    fields = {}
    if T is not None and S is not None:
        iota_T = iota(T)
        iota_S = iota(S)
        for i in range(2):
            for j in range(i, 2):
                quad = (iota_T[i] * iota_S[j] + iota_T[j] * iota_S[i]) * 0.5
                fields[(i, j)] = (quad + _gamma_block(surface, i, j)
                                  + _lift(Phi[i][j]))
    else:
        for i in range(2):
            for j in range(i, 2):
                fields[(i, j)] = _gamma_block(surface, i, j) + _lift(Phi[i][j])
    metric = _walker_metric(fields, box or _default_box(surface), name)
    metric.surface = surface
    return metric


_IDENTITY = ((1.0, 0.0), (0.0, 1.0))


def build_general_with_X(surface: AffineSurface, Phi=None, T_tensor=None,
                         X_field=None, box: Box | None = None,
                         name: str = "general_extension") -> MetricField:
    """Walker form with the cubic term: adds (x_{k'} X^k) x_{i'} x_{j'} to
    the modified extension with S = Id."""
    base = build_modified(surface, Phi, T_tensor,
                          _IDENTITY if T_tensor is not None else None,
                          box=box, name=name)
    if X_field is None:
        return base
    X = [x if isinstance(x, Field) else
         (ScalarField(x, ("x1", "x2")) if isinstance(x, str) else ConstField(float(x), 2))
         for x in X_field]
    iota_X = sum((_PRIMED[k] * _lift(X[k]) for k in range(2)),
                 start=ConstField(0.0, 4))
    comps = {}
    for i in range(2):
        for j in range(i, 2):
            cubic = iota_X * _PRIMED[i] * _PRIMED[j]
            comps[(i, j)] = base.component(i, j) + cubic
    metric = _walker_metric(comps, base.box, name)
    metric.surface = surface
    return metric


def build_nilpotent_TT(u, v, box: Box | None = None,
                       name: str = "nilpotent_extension") -> MetricField:
    """g = iota T o iota T + g_D for the parallel nilpotent T (T d1 = d2)
    over the surface with Gamma_11^2 = u(x1) + x2 v(x1)."""
    surface = wong_nilpotent(u, v)
    T = ((0.0, 1.0), (0.0, 0.0))
    metric = build_modified(surface, None, T, T,
                            box=box or _default_box(surface), name=name)
    metric.surface = surface
    return metric


# -- JSON ----------------------------------------------------------------------


KINDS = ("walker_raw", "deformed", "modified", "general_with_X",
         "nilpotent_TT")


def extension_spec_from_json(obj: dict) -> ExtensionSpec:
    """Parse the JSON schema into an :class:`ExtensionSpec`."""
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown extension kind {kind!r}; known: {KINDS}")
    box = None
    if "domain" in obj:
        box = Box.from_dict(obj["domain"], COORDS4)

    def grid2x2(key):
        raw = obj.get(key)
        if raw is None:
            return None
        return [[raw[i][j] for j in range(2)] for i in range(2)]

    if kind == "walker_raw":
        a = {}
        for label, text in obj.get("a", {}).items():
            i, j = (int(c) for c in label)
            a[(i - 1, j - 1)] = text
        return ExtensionSpec(kind=kind, a=a, box=box)
    if kind == "nilpotent_TT":
        params = obj.get("params", {})
        return ExtensionSpec(kind=kind, a={"u": params.get("u", "0"),
                                           "v": params.get("v", "0")},
                             box=box)
    return ExtensionSpec(
        kind=kind, surface=surface_from_json(obj["surface"]),
        Phi=grid2x2("Phi"), T_tensor=grid2x2("T"), S_tensor=grid2x2("S"),
        X_field=obj.get("X"), box=box)


def extension_from_json(obj: dict) -> MetricField:
    """Build an extension metric from its JSON description."""
    return extension_spec_from_json(obj).build()
