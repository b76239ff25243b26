"""Pointwise pseudo-Riemannian curvature via jet differentiation.

Sign conventions (fixed once, used everywhere):

* curvature operator  ``Rc(X,Y)Z = nabla_[X,Y] Z - [nabla_X, nabla_Y] Z``,
  in coordinates ``Rc(d_i,d_j)d_k = -(d_i G_jk^m - d_j G_ik^m
  + G_jk^a G_ia^m - G_ik^a G_ja^m) d_m``;
* ``R(X,Y,Z,T) = g(Rc(X,Y)Z, T)``;
* ``ricci(X,Y) = trace(Z -> Rc(X,Z)Y)`` (coincides with the usual Ricci);
* ``tau = g^{ij} ricci_ij``;
* Weyl and Cotton as assembled below, verbatim in these conventions.

Everything is computed from metric-component jets, so first derivatives of
any curvature quantity are available by reading one more jet slot.  A
:class:`CurvaturePack` bundles all tensors at one point and is the unit other
modules consume.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import jets
from .errors import DegenerateMetricError, SingularityError
from .fields import ConstField, Field
from .dsl import ScalarField
from .jets import Jet

DEGENERACY_RTOL = 1e-12


# -- small helpers -------------------------------------------------------------


def jet_values(arr) -> np.ndarray:
    """Map an object array of jets to the float array of leading values."""
    out = np.empty(arr.shape)
    for idx in np.ndindex(arr.shape):
        out[idx] = arr[idx].value
    return out


def jet_partials(arr, direction: int) -> np.ndarray:
    """Float array of first partials d_direction of an object array of jets."""
    out = np.empty(arr.shape)
    for idx in np.ndindex(arr.shape):
        out[idx] = arr[idx].d(direction).value
    return out


def max_abs(arr) -> float:
    arr = np.asarray(arr, dtype=float)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def normalized_norm(tensor, g_values, covariant: int) -> float:
    """Max-component norm scaled by metric size to the tensor's valence."""
    gscale = max(1.0, max_abs(g_values))
    return max_abs(tensor) / (1.0 + gscale ** (covariant / 2.0))


def jet_matrix_inverse(G):
    """Invert an (n, n) object array of jets by Gauss-Jordan elimination.

    Pivots on the largest leading value; raises if a pivot collapses.
    """
    n = G.shape[0]
    A = [[G[i, j] for j in range(n)] for i in range(n)]
    some = G[0, 0]
    ident = [[Jet.const(1.0 if i == j else 0.0, some.n_vars, some.order)
              for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(A[r][col].value))
        if abs(A[pivot_row][col].value) < jets.DIV_ZERO_THRESHOLD:
            raise SingularityError("matrix of jets is singular")
        if pivot_row != col:
            A[col], A[pivot_row] = A[pivot_row], A[col]
            ident[col], ident[pivot_row] = ident[pivot_row], ident[col]
        inv_piv = 1.0 / A[col][col]
        A[col] = [a * inv_piv for a in A[col]]
        ident[col] = [b * inv_piv for b in ident[col]]
        for r in range(n):
            if r == col:
                continue
            factor = A[r][col]
            if not np.any(factor.coeffs):
                continue
            A[r] = [a - factor * p for a, p in zip(A[r], A[col])]
            ident[r] = [b - factor * q for b, q in zip(ident[r], ident[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = ident[i][j]
    return out


# -- metric fields --------------------------------------------------------------


class MetricField:
    """Symmetric matrix of scalar fields with an orientation convention.

    Only the upper triangle is stored; ``component(i, j)`` resolves through
    the symmetry.  ``orientation`` is the sign in front of the volume form
    used by the duality module (+1 is the Walker convention for extension
    metrics in coordinate order x1, x2, x1p, x2p).
    """

    def __init__(self, coords, components: dict, orientation: int = 1,
                 box=None, name: str = ""):
        self.coords = list(coords)
        self.dim = len(self.coords)
        self.orientation = int(orientation)
        self.box = box
        self.name = name
        self._comp = {}
        for (i, j), fld in components.items():
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"component index {(i, j)} out of range")
            key = (min(i, j), max(i, j))
            if key in self._comp and self._comp[key] is not fld:
                raise ValueError(f"duplicate component {key}")
            if fld.n_vars != self.dim:
                raise ValueError(
                    f"component {key} has {fld.n_vars} variables, metric has {self.dim}"
                )
            self._comp[key] = fld

    @classmethod
    def from_exprs(cls, coords, exprs: dict, params=None, orientation: int = 1,
                   box=None, name: str = ""):
        """Build from {"11": "expr", "13": "expr", ...} (1-based index pairs)."""
        comps = {}
        for key, text in exprs.items():
            i, j = (int(c) for c in key)
            comps[(i - 1, j - 1)] = ScalarField(text, coords, params)
        return cls(coords, comps, orientation=orientation, box=box, name=name)

    @classmethod
    def constant(cls, diag, orientation: int = 1, name: str = ""):
        n = len(diag)
        coords = [f"x{i + 1}" for i in range(n)]
        comps = {(i, i): ConstField(float(diag[i]), n) for i in range(n)}
        return cls(coords, comps, orientation=orientation, name=name)

    def component(self, i: int, j: int) -> Field:
        key = (min(i, j), max(i, j))
        fld = self._comp.get(key)
        return fld if fld is not None else ConstField(0.0, self.dim)

    def eval_jets(self, point, order: int):
        g = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(i, self.dim):
                jet = self.component(i, j).eval(point, order)
                g[i, j] = jet
                g[j, i] = jet
        return g

    def values(self, point) -> np.ndarray:
        return jet_values(self.eval_jets(point, 0))

    def signature(self, point) -> tuple[int, int]:
        """(negative, positive) eigenvalue counts at the point."""
        eig = np.linalg.eigvalsh(self.values(point))
        return int(np.sum(eig < 0)), int(np.sum(eig > 0))


# -- the curvature bundle --------------------------------------------------------


class CurvaturePack:
    """Metric, connection and curvature tensors evaluated at one point.

    Jets are kept alongside the numeric views so that first derivatives of
    every tensor (for Cotton, the divergence of Weyl, and the identity
    suites) come for free.  ``order`` is the metric-jet order: 2 suffices for
    curvature values, 3 adds their first derivatives.
    """

    def __init__(self, metric: MetricField, point, order: int = 3):
        self.metric = metric
        self.point = np.asarray(point, dtype=float)
        self.order = order
        self.n = metric.dim
        self.g_jets = metric.eval_jets(self.point, order)
        g = jet_values(self.g_jets)
        scale = max(1.0, max_abs(g)) ** self.n
        det = float(np.linalg.det(g))
        if abs(det) < DEGENERACY_RTOL * scale:
            raise DegenerateMetricError(
                f"metric determinant {det:.3e} below threshold", point=self.point
            )
        self.det = det

    # ---- jet-level tensors ----

    @cached_property
    def g_inv_jets(self):
        return jet_matrix_inverse(self.g_jets)

    @cached_property
    def gamma_jets(self):
        """Levi-Civita symbols Gamma[i, j, k] = Gamma_ij^k as jets."""
        n = self.n
        g, ginv = self.g_jets, self.g_inv_jets
        dg = np.empty((n, n, n), dtype=object)  # dg[l, i, j] = d_l g_ij
        for l in range(n):
            for i in range(n):
                for j in range(i, n):
                    dij = g[i, j].d(l)
                    dg[l, i, j] = dij
                    dg[l, j, i] = dij
        gamma = np.empty((n, n, n), dtype=object)
        for i in range(n):
            for j in range(i, n):
                for k in range(n):
                    acc = None
                    for l in range(n):
                        term = ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                        acc = term if acc is None else acc + term
                    val = acc * 0.5
                    gamma[i, j, k] = val
                    gamma[j, i, k] = val
        return gamma

    @cached_property
    def curv_op_jets(self):
        """Rop[i, j, k, m]: coefficient of d_m in Rc(d_i, d_j) d_k."""
        n = self.n
        G = self.gamma_jets
        dG = np.empty((n, n, n, n), dtype=object)  # dG[l, i, j, k] = d_l Gamma_ij^k
        for l in range(n):
            for i in range(n):
                for j in range(i, n):
                    for k in range(n):
                        d = G[i, j, k].d(l)
                        dG[l, i, j, k] = d
                        dG[l, j, i, k] = d
        rop = np.empty((n, n, n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for m in range(n):
                        acc = dG[i, j, k, m] - dG[j, i, k, m]
                        for a in range(n):
                            acc = acc + (G[j, k, a] * G[i, a, m]
                                         - G[i, k, a] * G[j, a, m])
                        rop[i, j, k, m] = -acc
        return rop

    @cached_property
    def riemann_jets(self):
        """R[i, j, k, l] = g(Rc(d_i, d_j) d_k, d_l)."""
        n = self.n
        rop, g = self.curv_op_jets, self.g_jets
        order = rop[0, 0, 0, 0].order
        R = np.empty((n, n, n, n), dtype=object)
        zero = Jet.const(0.0, g[0, 0].n_vars, order)
        for i in range(n):
            for j in range(n):
                if j == i:
                    for k in range(n):
                        for l in range(n):
                            R[i, j, k, l] = zero
                    continue
                for k in range(n):
                    for l in range(n):
                        acc = None
                        for m in range(n):
                            term = rop[i, j, k, m] * g[m, l]
                            acc = term if acc is None else acc + term
                        R[i, j, k, l] = acc
        return R

    @cached_property
    def ricci_jets(self):
        n = self.n
        rop = self.curv_op_jets
        ric = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                acc = None
                for m in range(n):
                    term = rop[i, m, j, m]
                    acc = term if acc is None else acc + term
                ric[i, j] = acc
        return ric

    @cached_property
    def tau_jet(self) -> Jet:
        acc = None
        for i in range(self.n):
            for j in range(self.n):
                term = self.g_inv_jets[i, j] * self.ricci_jets[i, j]
                acc = term if acc is None else acc + term
        return acc

    @cached_property
    def weyl_jets(self):
        n = self.n
        if n < 3:
            raise ValueError("Weyl tensor requires dimension >= 3")
        g, R, ric, tau = self.g_jets, self.riemann_jets, self.ricci_jets, self.tau_jet
        c1 = 1.0 / ((n - 1) * (n - 2))
        c2 = 1.0 / (n - 2)
        W = np.empty((n, n, n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        term = R[i, j, k, l]
                        term = term + (tau * (g[i, k] * g[j, l] - g[i, l] * g[j, k])) * c1
                        term = term + (ric[i, l] * g[j, k] - ric[i, k] * g[j, l]
                                       + ric[j, k] * g[i, l] - ric[j, l] * g[i, k]) * c2
                        W[i, j, k, l] = term
        return W

    # ---- numeric views ----

    @cached_property
    def g(self) -> np.ndarray:
        return jet_values(self.g_jets)

    @cached_property
    def g_inv(self) -> np.ndarray:
        return jet_values(self.g_inv_jets)

    @cached_property
    def gamma(self) -> np.ndarray:
        return jet_values(self.gamma_jets)

    @cached_property
    def riemann(self) -> np.ndarray:
        return jet_values(self.riemann_jets)

    @cached_property
    def ricci(self) -> np.ndarray:
        return jet_values(self.ricci_jets)

    @cached_property
    def tau(self) -> float:
        return self.tau_jet.value

    @cached_property
    def weyl(self) -> np.ndarray:
        return jet_values(self.weyl_jets)

    @cached_property
    def ricci_operator(self) -> np.ndarray:
        """Ric^i_j = g^{ik} ricci_kj (matrix of the Ricci operator)."""
        return self.g_inv @ self.ricci

    @cached_property
    def dtau(self) -> np.ndarray:
        return self.tau_jet.gradient()

    @cached_property
    def nabla_ricci(self) -> np.ndarray:
        """(nabla_k ricci)_ij indexed [k, i, j]."""
        n = self.n
        dric = np.empty((n, n, n))
        for k in range(n):
            dric[k] = jet_partials(self.ricci_jets, k)
        G, ric = self.gamma, self.ricci
        out = dric - np.einsum("kim,mj->kij", G, ric) - np.einsum(
            "kjm,im->kij", G, ric)
        return out

    @cached_property
    def cotton(self) -> np.ndarray:
        """C[i, j, k] = (nabla_i ricci)_jk - (nabla_j ricci)_ik
        - (d_i tau g_jk - d_j tau g_ik) / (2 (n - 1))."""
        n = self.n
        if n < 3:
            raise ValueError("Cotton tensor requires dimension >= 3")
        nr = self.nabla_ricci
        dt, g = self.dtau, self.g
        out = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    out[i, j, k] = (nr[i, j, k] - nr[j, i, k]
                                    - (dt[i] * g[j, k] - dt[j] * g[i, k])
                                    / (2.0 * (n - 1)))
        return out

    @cached_property
    def div4_weyl(self) -> np.ndarray:
        """(div_4 W)(X,Y,Z) = g^{ab} (nabla_a W)(X,Y,Z, e_b), indexed [i,j,k]."""
        n = self.n
        W = self.weyl
        dW = np.empty((n, n, n, n, n))
        for a in range(n):
            dW[a] = jet_partials(self.weyl_jets, a)
        G = self.gamma
        nabla_W = (dW
                   - np.einsum("aip,pjkl->aijkl", G, W)
                   - np.einsum("ajp,ipkl->aijkl", G, W)
                   - np.einsum("akp,ijpl->aijkl", G, W)
                   - np.einsum("alp,ijkp->aijkl", G, W))
        return np.einsum("ab,aijkb->ijk", self.g_inv, nabla_W)

    @cached_property
    def cotton_from_weyl(self) -> np.ndarray:
        """-(n-2)/(n-3) div_4 W; cross-oracle for :attr:`cotton` (n >= 4)."""
        n = self.n
        if n < 4:
            raise ValueError("divergence form of Cotton requires dimension >= 4")
        return -(n - 2) / (n - 3) * self.div4_weyl

    # ---- scalar-field differential operators ----

    def field_jets(self, f: Field) -> Jet:
        if f.n_vars != self.n:
            raise ValueError("field lives on a different chart than the metric")
        return f.eval(self.point, self.order)

    def hessian_jets(self, f_jet: Jet):
        n = self.n
        G = self.gamma_jets
        df = [f_jet.d(i) for i in range(n)]
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(i, n):
                acc = df[i].d(j)
                for k in range(n):
                    acc = acc - G[i, j, k] * df[k]
                out[i, j] = acc
                out[j, i] = acc
        return out

    def gradient_jets(self, f_jet: Jet):
        n = self.n
        df = [f_jet.d(i) for i in range(n)]
        out = np.empty(n, dtype=object)
        for i in range(n):
            acc = None
            for j in range(n):
                term = self.g_inv_jets[i, j] * df[j]
                acc = term if acc is None else acc + term
            out[i] = acc
        return out

    def grad_norm_sq_jet(self, f_jet: Jet) -> Jet:
        n = self.n
        df = [f_jet.d(i) for i in range(n)]
        acc = None
        for i in range(n):
            for j in range(n):
                term = self.g_inv_jets[i, j] * df[i] * df[j]
                acc = term if acc is None else acc + term
        return acc

    def laplacian_jet(self, f_jet: Jet) -> Jet:
        hes = self.hessian_jets(f_jet)
        acc = None
        for i in range(self.n):
            for j in range(self.n):
                term = self.g_inv_jets[i, j] * hes[i, j]
                acc = term if acc is None else acc + term
        return acc


def curvature_pack(metric: MetricField, point, order: int = 3) -> CurvaturePack:
    return CurvaturePack(metric, point, order)


# -- functional wrappers -----------------------------------------------------------


def christoffel(metric: MetricField, point) -> np.ndarray:
    return CurvaturePack(metric, point, order=2).gamma


def riemann(metric: MetricField, point) -> np.ndarray:
    return CurvaturePack(metric, point, order=2).riemann


def ricci(metric: MetricField, point) -> np.ndarray:
    return CurvaturePack(metric, point, order=2).ricci


def scalar(metric: MetricField, point) -> float:
    return CurvaturePack(metric, point, order=2).tau


def weyl(metric: MetricField, point) -> np.ndarray:
    return CurvaturePack(metric, point, order=2).weyl


def cotton(metric: MetricField, point) -> np.ndarray:
    return CurvaturePack(metric, point, order=3).cotton


def covariant_derivative_ricci(metric: MetricField, point) -> np.ndarray:
    return CurvaturePack(metric, point, order=3).nabla_ricci


def hessian(metric: MetricField, f: Field, point) -> np.ndarray:
    pack = CurvaturePack(metric, point, order=2)
    return jet_values(pack.hessian_jets(pack.field_jets(f)))


def gradient(metric: MetricField, f: Field, point) -> np.ndarray:
    pack = CurvaturePack(metric, point, order=2)
    return jet_values(pack.gradient_jets(pack.field_jets(f)))


def grad_norm_sq(metric: MetricField, f: Field, point) -> float:
    pack = CurvaturePack(metric, point, order=2)
    return pack.grad_norm_sq_jet(pack.field_jets(f)).value


def laplacian(metric: MetricField, f: Field, point) -> float:
    pack = CurvaturePack(metric, point, order=2)
    return pack.laplacian_jet(pack.field_jets(f)).value
