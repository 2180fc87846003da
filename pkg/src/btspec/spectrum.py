"""Non-Hermitian diagonalization at fixed gradient strength.

Rows of the coefficient matrix X are left eigenvectors of Lambda + i*gbar*B,
so that X (Lambda + i*gbar*B) = Lambda^(g) X and the eigenfunction j is
v_j = sum_k X[j, k] u_k.  Normalization uses the bilinear form (no complex
conjugation): diag(X W X^T) = 1.  Within a degenerate eigenvalue the solver
returns an arbitrary mixture, so degenerate pairs are re-orthogonalized by an
explicit 2x2 linear transform before normalizing; this also converts the
complex-conjugate (m, -m) sphere pairs into bilinear-orthonormal combinations.

Near a branch point the bilinear self-product <v, v> vanishes and no
normalization exists; such rows are flagged 'near branch point' and left with
unit 2-norm instead of being rescaled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError, OrthogonalizationError
from .matrices import OperatorMatrices

DEGENERATE_RTOL = 1e-8
NEAR_BRANCH_TOL = 1e-6


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (dimensionless R^2 lambda_j) and coefficient rows at one gbar.

    X is None for an eigenvalues-only computation.  vv holds |<v_j, v_j>|
    before rescaling (the normalization 'condition number'); near_branch marks
    rows whose bilinear norm collapsed; degenerate_class labels exact
    eigenvalue clusters (-1 for simple eigenvalues).
    """

    gbar: float
    eigenvalues: np.ndarray
    X: np.ndarray | None = None
    vv: np.ndarray | None = None
    near_branch: np.ndarray | None = None
    degenerate_class: np.ndarray | None = None
    normalized: bool = False

    @property
    def N(self) -> int:
        return len(self.eigenvalues)


def diagonalize(mat: OperatorMatrices, B: np.ndarray, gbar: float,
                eigvals_only: bool = False) -> Spectrum:
    """Raw spectrum of Lambda + i*gbar*B, sorted by (Re, Im).

    Rows of X are left eigenvectors (unit 2-norm, not yet bilinear-normalized).
    """
    M = mat.bloch_torrey(B, gbar)
    try:
        if eigvals_only:
            w = sla.eigvals(M, check_finite=False)
            X = None
        else:
            w, vl = sla.eig(M, left=True, right=False, check_finite=False)
            X = vl.conj().T
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise NumericalError(
            f"eigensolver failed at gbar={gbar} (N={mat.N}, "
            f"norm={np.linalg.norm(M):.3e})") from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    if X is not None:
        X = X[order]
    return Spectrum(gbar=float(gbar), eigenvalues=w, X=X)


def _degenerate_classes(w: np.ndarray, rtol: float = DEGENERATE_RTOL) -> np.ndarray:
    """Cluster eigenvalues (already sorted by Re) whose mutual distance is
    below rtol * scale; returns -1 for singletons, else a class id."""
    N = len(w)
    cid = -np.ones(N, dtype=int)
    next_id = 0
    i = 0
    while i < N:
        j = i + 1
        while j < N and abs(w[j] - w[j - 1]) <= rtol * max(1.0, abs(w[j])):
            j += 1
        if j - i > 1:
            cid[i:j] = next_id
            next_id += 1
        i = j
    return cid


def bilinear_gram(rows: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Gram matrix <v_a, v_b> = rows W rows^T (transpose, no conjugation)."""
    return rows @ W @ rows.T


def orthogonalize_pair(vj: np.ndarray, vjp: np.ndarray, C: np.ndarray):
    """Bilinear-orthonormal combinations of two degenerate coefficient rows.

    C is the 2x2 Gram of (vj, vjp) under the bilinear form.  Solves for the
    formal rotation angle and rescalings; when C11 ~ C22 makes the direct
    expressions singular, the stabilized variant
    A^2 = (C11+C22)/2 + C12/sin(2a) is used.  Raises OrthogonalizationError if
    neither produces an orthonormal pair (e.g. exactly at a branch point).
    """
    C11, C12, C22 = C[0, 0], C[0, 1], C[1, 1]
    if abs(C12) < 1e-14 * max(1.0, abs(C11), abs(C22)):
        alpha = 0.0 + 0.0j
    elif abs(C11 - C22) < 1e-12 * max(abs(C11), abs(C22), abs(C12)):
        alpha = np.pi / 4 + 0.0j
    else:
        alpha = 0.5 * np.arctan(2.0 * C12 / (C11 - C22) + 0.0j)
    ca, sa = np.cos(alpha), np.sin(alpha)
    cos2a = ca * ca - sa * sa
    if abs(cos2a) > 0.25:
        A2 = (C11 * ca**2 - C22 * sa**2) / cos2a
        B2 = (C22 * ca**2 - C11 * sa**2) / cos2a
    else:
        sin2a = 2.0 * sa * ca
        A2 = 0.5 * (C11 + C22) + C12 / sin2a
        B2 = 0.5 * (C11 + C22) - C12 / sin2a
    if min(abs(A2), abs(B2)) < 1e-12:
        raise OrthogonalizationError("degenerate pair has a vanishing combination")
    A, Bc = np.sqrt(A2 + 0j), np.sqrt(B2 + 0j)
    new_j = (ca * vj + sa * vjp) / A
    new_jp = (-sa * vj + ca * vjp) / Bc
    return new_j, new_jp


def normalize(spec: Spectrum, W: np.ndarray,
              near_branch_tol: float = NEAR_BRANCH_TOL) -> Spectrum:
    """Bilinear normalization and sign fixing of a raw spectrum.

    Degenerate classes are orthogonalized pairwise first (greedy, in index
    order, driven by the off-diagonal Gram entries); rows whose bilinear norm
    stays below near_branch_tol are flagged and kept unit-2-norm.  The sign of
    each row is fixed to make the constant-mode projection X[j, 0] have a
    positive real part (falling back to the largest coefficient when that
    projection is negligible).
    """
    if spec.X is None:
        raise ValueError("normalize() needs eigenvectors; run diagonalize "
                         "with eigvals_only=False")
    w = spec.eigenvalues
    X = spec.X.copy()
    N = len(w)
    cid = _degenerate_classes(w)
    vv_raw = np.abs(np.einsum("ik,kl,il->i", X, W, X))
    near = np.zeros(N, dtype=bool)
    done = np.zeros(N, dtype=bool)

    for c in np.unique(cid[cid >= 0]):
        members = np.flatnonzero(cid == c)
        gram = bilinear_gram(X[members], W)
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                a, b = members[ai], members[bi]
                if done[a] or done[b]:
                    continue
                if abs(gram[ai, bi]) <= 1e-10 * max(1.0, abs(gram[ai, ai]),
                                                    abs(gram[bi, bi])):
                    continue
                C = np.array([[gram[ai, ai], gram[ai, bi]],
                              [gram[bi, ai], gram[bi, bi]]])
                try:
                    X[a], X[b] = orthogonalize_pair(X[a], X[b], C)
                    check = bilinear_gram(X[[a, b]], W)
                    if np.max(np.abs(check - np.eye(2))) > 1e-8:
                        raise OrthogonalizationError("pair Gram not identity")
                    done[a] = done[b] = True
                except OrthogonalizationError:
                    near[a] = near[b] = True

    for j in range(N):
        if done[j] or near[j]:
            continue
        vvj = X[j] @ W @ X[j]
        if abs(vvj) < near_branch_tol:
            near[j] = True
            continue
        X[j] = X[j] / np.sqrt(vvj + 0j)

    for j in range(N):
        if near[j]:
            nrm = np.linalg.norm(X[j])
            if nrm > 0:
                X[j] = X[j] / nrm
        X[j] = X[j] * _sign_fix(X[j])

    return Spectrum(gbar=spec.gbar, eigenvalues=w, X=X, vv=vv_raw,
                    near_branch=near, degenerate_class=cid, normalized=True)


def _sign_fix(row: np.ndarray) -> float:
    """+-1 making Re(X[j,0]) > 0, or the largest coefficient's real part when
    the constant-mode projection is negligible."""
    ref = row[0]
    if abs(ref) < 1e-12:
        ref = row[np.argmax(np.abs(row))]
    if ref.real < 0 or (abs(ref.real) < 1e-300 and ref.imag < 0):
        return -1.0
    return 1.0


def spectrum_at_negative_g(spec: Spectrum, W: np.ndarray) -> Spectrum:
    """Spectrum at -gbar from the one at +gbar via B_{-g} = (B_g)^*.

    Eigenvalues conjugate; coefficients map as X -> conj(X) W so that the
    reconstructed eigenfunctions are the pointwise conjugates (W re-expresses
    the conjugated basis functions in the original basis; it is the identity
    for real bases).
    """
    X = None if spec.X is None else np.conj(spec.X) @ W
    return replace(spec, gbar=-spec.gbar, eigenvalues=np.conj(spec.eigenvalues), X=X)


def residual(mat: OperatorMatrices, B: np.ndarray, spec: Spectrum) -> float:
    """max_j ||X_j M - lambda_j X_j|| / ||M||, a solver quality metric."""
    if spec.X is None:
        raise ValueError("residual needs eigenvectors")
    M = mat.bloch_torrey(B, spec.gbar)
    R = spec.X @ M - spec.eigenvalues[:, None] * spec.X
    scale = np.linalg.norm(M)
    rownorm = np.linalg.norm(R, axis=1) / np.maximum(np.linalg.norm(spec.X, axis=1), 1e-300)
    return float(np.max(rownorm) / scale)
