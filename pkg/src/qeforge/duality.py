"""Hodge star on 2-forms in signature (2,2) and the self-duality toolkit.

The six coordinate 2-forms dx^a ^ dx^b (a < b) are kept in fixed
lexicographic order (12, 13, 14, 23, 24, 34).  In neutral signature the star
squares to +1 on 2-forms, so Lambda^2 splits into the +1/-1 eigenspaces cut
out by the projectors (I +- star)/2.  A metric is self-dual when the Weyl
operator vanishes on the -1 eigenspace, anti-self-dual when it vanishes on
the +1 eigenspace; both verdicts depend on the orientation sign, which for
Walker extension metrics defaults to +1 in coordinate order
(x1, x2, x1p, x2p).
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from .errors import FrameError
from .tensors import CurvaturePack, max_abs

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
FRAME_SIGNS = np.array([-1.0, 1.0, -1.0, 1.0])


def _epsilon4() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in permutations(range(4)):
        inversions = sum(
            1 for x in range(4) for y in range(x + 1, 4) if perm[x] > perm[y]
        )
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


_EPS4 = _epsilon4()


def _as_pack(metric, point, order: int = 2) -> CurvaturePack:
    if isinstance(metric, CurvaturePack):
        return metric
    return CurvaturePack(metric, point, order=order)


def hodge_star(metric, point, orientation_sign: int | None = None) -> np.ndarray:
    """6x6 matrix of the star operator on coordinate 2-form components.

    (star w)_cd = (sign sqrt|det g| / 2) w_ab g^{aa'} g^{bb'} eps_{a'b'cd}.
    """
    pack = _as_pack(metric, point)
    if pack.n != 4:
        raise ValueError("Hodge star on 2-forms requires dimension 4")
    if orientation_sign is None:
        orientation_sign = pack.metric.orientation
    ginv = pack.g_inv
    factor = orientation_sign * np.sqrt(abs(pack.det)) / 2.0
    star = np.empty((6, 6))
    for J, (a, b) in enumerate(PAIRS):
        w = np.zeros((4, 4))
        w[a, b] = 1.0
        w[b, a] = -1.0
        w_up = ginv @ w @ ginv.T
        starred = factor * np.einsum("ab,abcd->cd", w_up, _EPS4)
        for I, (c, d) in enumerate(PAIRS):
            star[I, J] = starred[c, d]
    return star


class TwoFormBasisPack:
    """Star matrix and eigen-projectors on the 2-form basis at one point."""

    def __init__(self, metric, point, orientation_sign: int | None = None):
        self.point = np.asarray(point, dtype=float)
        self.star = hodge_star(metric, point, orientation_sign)
        eye = np.eye(6)
        self.proj_plus = 0.5 * (eye + self.star)
        self.proj_minus = 0.5 * (eye - self.star)


def weyl_operator(pack: CurvaturePack) -> np.ndarray:
    """Weyl tensor as a 6x6 operator on 2-forms: M[I, J] = W_I{}^J."""
    W_mixed = np.einsum("ijab,ac,bd->ijcd", pack.weyl, pack.g_inv, pack.g_inv)
    M = np.empty((6, 6))
    for I, (a, b) in enumerate(PAIRS):
        for J, (c, d) in enumerate(PAIRS):
            M[I, J] = W_mixed[a, b, c, d]
    return M


def weyl_blocks(metric, point, orientation_sign: int | None = None) -> dict:
    """Frobenius norms of the self-dual / anti-self-dual Weyl blocks."""
    pack = _as_pack(metric, point)
    basis = TwoFormBasisPack(pack, point, orientation_sign)
    M = weyl_operator(pack)
    plus = basis.proj_plus @ M @ basis.proj_plus
    minus = basis.proj_minus @ M @ basis.proj_minus
    return {
        "W_plus_norm": float(np.linalg.norm(plus)),
        "W_minus_norm": float(np.linalg.norm(minus)),
        "W_operator": M,
    }


# -- frames -------------------------------------------------------------------


def _canonical_vector(v: np.ndarray) -> np.ndarray:
    lead = int(np.argmax(np.abs(v)))
    return -v if v[lead] < 0 else v


def orthonormal_frame(metric, point) -> np.ndarray:
    """Columns E1..E4 with g(E_i, E_j) = diag(-1, +1, -1, +1), positively
    oriented for the metric's orientation convention.

    Built from the eigendecomposition of g at the point; within each sign
    class eigenvectors are ordered by the index of their largest component
    and sign-fixed, so the frame is deterministic under eigenvalue ties.
    The last spacelike leg is flipped if needed to make the frame volume
    positive.
    """
    pack = _as_pack(metric, point)
    if pack.n != 4:
        raise FrameError("orthonormal frame construction requires dimension 4")
    evals, evecs = np.linalg.eigh(pack.g)
    neg = [i for i in range(4) if evals[i] < 0]
    pos = [i for i in range(4) if evals[i] > 0]
    if len(neg) != 2 or len(pos) != 2:
        raise FrameError(
            f"metric signature is not (2,2): eigenvalues {np.round(evals, 6)}"
        )
    cols = {}
    for sign, idxs in (("neg", neg), ("pos", pos)):
        vs = [_canonical_vector(evecs[:, i] / np.sqrt(abs(evals[i]))) for i in idxs]
        vs.sort(key=lambda v: int(np.argmax(np.abs(v))))
        cols[sign] = vs
    frame = np.column_stack(
        [cols["neg"][0], cols["pos"][0], cols["neg"][1], cols["pos"][1]]
    )
    if pack.metric.orientation * np.linalg.det(frame) < 0:
        frame[:, 3] = -frame[:, 3]
    return frame


def _check_orthonormal(pack: CurvaturePack, frame: np.ndarray, tol: float = 1e-8):
    gram = frame.T @ pack.g @ frame
    target = np.diag(FRAME_SIGNS)
    err = max_abs(gram - target)
    if err > tol:
        raise FrameError(
            f"frame is not orthonormal with signs (-,+,-,+): max deviation {err:.3e}"
        )


def frame_self_duality_check(metric, point, frame: np.ndarray,
                             dual_sign: int = 1) -> float:
    """Residual of the frame identity characterizing (anti-)self-duality.

    Checks max over i and coordinate pairs (X, Y) of
    |W(E1, E_i, X, Y) - dual_sign sigma_ijk eps_j eps_k W(E_j, E_k, X, Y)|
    where {i, j, k} reorders {2, 3, 4}.  ``dual_sign`` +1 tests self-duality,
    -1 anti-self-duality.
    """
    pack = _as_pack(metric, point)
    _check_orthonormal(pack, frame)
    W = pack.weyl
    # Wf[p, q, a, b] = W(E_p, E_q, d_a, d_b)
    Wf = np.einsum("ip,jq,ijab->pqab", frame, frame, W)
    eps = FRAME_SIGNS
    residual = 0.0
    for i in (1, 2, 3):  # frame indices of E2, E3, E4
        j, k = [m for m in (1, 2, 3) if m != i]
        perm = (i, j, k)
        ref = (1, 2, 3)
        inversions = sum(
            1 for x in range(3) for y in range(x + 1, 3)
            if ref.index(perm[x]) > ref.index(perm[y])
        )
        sigma = -1.0 if inversions % 2 else 1.0
        lhs = Wf[0, i]
        rhs = dual_sign * sigma * eps[j] * eps[k] * Wf[j, k]
        residual = max(residual, max_abs(lhs - rhs))
    return residual


def null_frame_from_gradient(metric, point, f, iso_tol: float = 1e-8,
                             gram_tol: float = 1e-9,
                             u_hint=None) -> np.ndarray:
    """Hyperbolic frame B = (grad f, U, V, T) for an isotropic potential.

    The Gram matrix of the returned columns has exactly the two unit
    pairings g(grad f, V) = g(U, T) = 1 (checked to ``gram_tol``).
    Preconditions: grad f != 0 and g(grad f, grad f) = 0 at the point.

    A null plane through grad f has two null rulings; ``u_hint`` (a vector)
    selects the one spanning the intended distribution.  Without it, U comes
    from rotating an orthonormal eigenframe, which picks one ruling
    arbitrarily but deterministically.
    """
    pack = _as_pack(metric, point)
    f_jet = pack.field_jets(f) if not isinstance(f, np.ndarray) else None
    if f_jet is not None:
        grad = pack.g_inv @ f_jet.gradient()
    else:
        grad = np.asarray(f, dtype=float)
    g = pack.g
    gscale = max(1.0, max_abs(g))
    if max_abs(grad) < 1e-12 * gscale:
        raise FrameError("gradient vanishes at the point (critical case)")
    norm_sq = float(grad @ g @ grad)
    if abs(norm_sq) > iso_tol * gscale * max(1.0, float(grad @ grad)):
        raise FrameError(
            f"gradient is not null: |grad f|^2 = {norm_sq:.3e} at {tuple(point)}"
        )
    if u_hint is not None:
        U = np.asarray(u_hint, dtype=float)
        if (abs(float(U @ g @ U)) > iso_tol * gscale * max(1.0, float(U @ U))
                or abs(float(U @ g @ grad)) > iso_tol * gscale):
            raise FrameError("u_hint is not a null vector orthogonal to grad f")
        V = _complete_null_leg(g, (grad, 1.0), (U, 0.0))
        T = _complete_null_leg(g, (grad, 0.0), (U, 1.0), (V, 0.0))
    else:
        F = orthonormal_frame(pack, point)
        # components of grad f in the frame: a_i = eps_i g(grad, F_i)
        a = FRAME_SIGNS * (F.T @ g @ grad)
        r_minus = float(np.hypot(a[0], a[2]))
        r_plus = float(np.hypot(a[1], a[3]))
        if r_minus < 1e-14 or r_plus < 1e-14:
            raise FrameError("degenerate null decomposition of grad f")
        E3 = (-a[2] * F[:, 0] + a[0] * F[:, 2]) / r_minus
        E4 = (-a[3] * F[:, 1] + a[1] * F[:, 3]) / r_plus
        E1 = (a[0] * F[:, 0] + a[2] * F[:, 2]) / r_minus
        E2 = (a[1] * F[:, 1] + a[3] * F[:, 3]) / r_plus
        # boost in the (E1, E2) plane so that (E1 + E2)/sqrt(2) = grad f
        r = np.sqrt(0.5 * (r_minus ** 2 + r_plus ** 2))
        t = np.log(np.sqrt(2.0) * r)
        ch, sh = np.cosh(t), np.sinh(t)
        E1b = ch * E1 + sh * E2
        E2b = sh * E1 + ch * E2
        U = (E4 - E3) / np.sqrt(2.0)
        V = (E2b - E1b) / np.sqrt(2.0)
        T = (E3 + E4) / np.sqrt(2.0)
    B = np.column_stack([grad, U, V, T])
    gram = B.T @ g @ B
    target = np.zeros((4, 4))
    target[0, 2] = target[2, 0] = 1.0
    target[1, 3] = target[3, 1] = 1.0
    err = max_abs(gram - target)
    if err > gram_tol * gscale * max(1.0, max_abs(B) ** 2):
        raise FrameError(f"null frame Gram check failed: deviation {err:.3e}")
    return B


def _complete_null_leg(g: np.ndarray, *pairings) -> np.ndarray:
    """Null vector w with prescribed inner products g(w, v_i) = c_i.

    Solves the linear conditions by least squares, then cancels g(w, w)
    using a null direction v0 with g(w, v0) != 0 among the prescribed pairs.
    """
    rows = np.stack([g @ v for v, _ in pairings])
    rhs = np.array([c for _, c in pairings])
    w0, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    # pick a null adjustment direction that does not disturb the conditions:
    # any v_i with c_i = 0 and g(v_i, v_j) = 0 for all prescribed j works if
    # g(w0, v_i) != 0 is not required; here the hyperbolic mate (c_i != 0)
    # of w is the safe choice.
    mate = None
    for v, c in pairings:
        if c != 0.0:
            mate = v
            break
    if mate is None:
        raise FrameError("null completion needs one nonzero pairing")
    # w = w0 + s * mate keeps g(w, v_i) when g(mate, v_i) = 0 for all i with
    # nonzero... mate pairs only against w, and mate is null in our frames.
    denom = 2.0 * float((g @ mate) @ w0)
    if abs(denom) < 1e-14:
        raise FrameError("null completion degenerate")
    s = -float(w0 @ g @ w0) / denom
    return w0 + s * mate
