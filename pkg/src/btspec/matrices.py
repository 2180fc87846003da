"""Dense operator matrices in the truncated Laplacian basis.

For each geometry this assembles the diagonal Laplacian matrix Lambda, the
coordinate-multiplication matrices B^x, B^y, B^z (dimensionless: lengths in
units of R), and the bilinear overlap matrix W with entries
W_ab = integral(u_a * u_b) without conjugation.  The eigenproblem downstream
is row-vector sided: X (Lambda + i*gbar*B) = Lambda^(g) X, with
B_ab = integral(u_a * (x/R) * u_b^*).

Closed-form matrix elements follow the delta_{n,n'+-1} selection rules of the
separable bases; off-diagonal denominators (alpha^2 - alpha'^2)^2 never vanish
for distinct orders, but a floor is asserted to catch zero-table corruption.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import specfun
from .basis import BasisSet, build_basis
from .errors import DomainError, MatrixAssemblyError

_MIN_DENOM_SQ = 1e-12
_MAGIC = b"BTSPECM1"


@dataclass(frozen=True)
class OperatorMatrices:
    """Assembled matrices for one geometry; axes absent from a reduced
    geometry are None (e.g. the interval only multiplies by z)."""

    basis: BasisSet
    lam: np.ndarray  # diagonal of Lambda, real, dimensionless R^2*lambda
    Bx: np.ndarray | None
    By: np.ndarray | None
    Bz: np.ndarray | None
    W: np.ndarray

    @property
    def N(self) -> int:
        return len(self.lam)

    @property
    def Lambda(self) -> np.ndarray:
        return np.diag(self.lam)

    def bloch_torrey(self, B: np.ndarray, gbar: float) -> np.ndarray:
        """Dense matrix Lambda + i*gbar*B."""
        M = np.diag(self.lam).astype(complex)
        M += 1j * gbar * B
        return M


def _alpha_sphere(n: int, k: int) -> float:
    if n == 0:
        return 0.0 if k == 0 else specfun.cached_zeros_dj_spherical(0, k)[k - 1]
    return specfun.cached_zeros_dj_spherical(n, k + 1)[k]


def _alpha_disk(n: int, k: int) -> float:
    if n == 0:
        return 0.0 if k == 0 else specfun.cached_zeros_dJ(0, k)[k - 1]
    return specfun.cached_zeros_dJ(n, k + 1)[k]


def beta_sphere(n: int, alpha: float) -> float:
    """Radial normalization factor for the sphere; beta_00 = sqrt(3/2)."""
    if alpha == 0.0:
        return np.sqrt(1.5)
    return np.sqrt((2 * n + 1) * alpha**2 / (alpha**2 - n * (n + 1)))


def beta_disk(n: int, alpha: float) -> float:
    """Radial normalization factor for the disk; beta_00 = 1."""
    if alpha == 0.0:
        return 1.0
    return alpha / np.sqrt(alpha**2 - n * n)


def _check_denom(a: float, a2: float) -> float:
    d = (a * a - a2 * a2) ** 2
    if d < _MIN_DENOM_SQ:
        raise MatrixAssemblyError(
            f"vanishing denominator between alpha={a} and alpha'={a2}; "
            "zero tables are inconsistent"
        )
    return d


def b_element_sphere(n: int, a: float, n2: int, a2: float) -> float:
    """Reduced-sphere element B_{nk,n'k'} between radial-angular modes.

    Nonzero only for n' = n +- 1.  a, a2 are alpha_nk, alpha_n'k'.
    """
    if abs(n - n2) != 1:
        return 0.0
    d = _check_denom(a, a2)
    num = a * a + a2 * a2 - n * (n2 + 1) - n2 * (n + 1) + 1
    pref = (n + n2 + 1) / ((2 * n + 1) * (2 * n2 + 1))
    return pref * beta_sphere(n, a) * beta_sphere(n2, a2) * num / d


def b_element_disk(n: int, a: float, n2: int, a2: float) -> float:
    """Disk element B^d_{nk,n'k'}; nonzero only for n' = n +- 1."""
    if abs(n - n2) != 1:
        return 0.0
    d = _check_denom(a, a2)
    num = a * a + a2 * a2 - 2 * n * n2
    pref = np.sqrt(1.0 + (n == 0) + (n2 == 0))
    return pref * beta_disk(n, a) * beta_disk(n2, a2) * num / d


def b_element_interval(m: int, m2: int) -> float:
    """Interval element B^i_{m,m'} for the unit interval (-1/2, 1/2)."""
    if m == m2:
        return 0.0
    sign = (-1.0) ** (m + m2) - 1.0
    if sign == 0.0:
        return 0.0
    c = np.sqrt(2.0 - (m == 0)) * np.sqrt(2.0 - (m2 == 0))
    return sign * c * (m * m + m2 * m2) / (np.pi**2 * (m * m - m2 * m2) ** 2)


def assemble_reduced_sphere(basis: BasisSet) -> OperatorMatrices:
    """Matrices of the axisymmetric sphere operator; the gradient axis is z."""
    _expect(basis, "sphere_reduced")
    N = len(basis)
    alphas = [_alpha_sphere(ix.n, ix.k) for ix in basis.indices]
    B = np.zeros((N, N), dtype=complex)
    for a in range(N):
        ia = basis.indices[a]
        for b in range(N):
            ib = basis.indices[b]
            if abs(ia.n - ib.n) == 1:
                B[a, b] = b_element_sphere(ia.n, alphas[a], ib.n, alphas[b])
    W = np.eye(N)
    return OperatorMatrices(basis, basis.eigenvalues.copy(), None, None, B, W)


def assemble_sphere(basis: BasisSet) -> OperatorMatrices:
    """Full sphere operator with B^x, B^y, B^z and the non-identity W."""
    _expect(basis, "sphere")
    N = len(basis)
    idx = basis.indices
    alphas = [_alpha_sphere(ix.n, ix.k) for ix in idx]
    Bx = np.zeros((N, N), dtype=complex)
    By = np.zeros((N, N), dtype=complex)
    Bz = np.zeros((N, N), dtype=complex)
    W = np.zeros((N, N))
    for a in range(N):
        na, ka, ma = idx[a].n, idx[a].k, idx[a].m
        for b in range(N):
            nb, kb, mb = idx[b].n, idx[b].k, idx[b].m
            if na == nb and ka == kb and ma == -mb:
                W[a, b] = (-1.0) ** ma
            if abs(na - nb) != 1:
                continue
            base = b_element_sphere(na, alphas[a], nb, alphas[b])
            if ma == mb and abs(ma) <= min(na, nb):
                nmax = max(na, nb)
                Bz[a, b] = base * np.sqrt(1.0 - (ma / nmax) ** 2)
            if nb == na + 1:
                if mb == ma - 1:
                    c = np.sqrt((na - ma + 1) * (na - ma + 2)) / (na + 1)
                    Bx[a, b] += 0.5 * base * c
                    By[a, b] += 0.5j * base * c
                if mb == ma + 1:
                    c = np.sqrt((na + ma + 1) * (na + ma + 2)) / (na + 1)
                    Bx[a, b] -= 0.5 * base * c
                    By[a, b] += 0.5j * base * c
            elif nb == na - 1:
                if mb == ma - 1:
                    c = np.sqrt((na + ma - 1) * (na + ma)) / na
                    Bx[a, b] -= 0.5 * base * c
                    By[a, b] -= 0.5j * base * c
                if mb == ma + 1:
                    c = np.sqrt((na - ma - 1) * (na - ma)) / na
                    Bx[a, b] += 0.5 * base * c
                    By[a, b] -= 0.5j * base * c
    return OperatorMatrices(basis, basis.eigenvalues.copy(), Bx, By, Bz, W)


def assemble_disk(basis: BasisSet) -> OperatorMatrices:
    """Unit-disk operator; gradients live in the plane (B^x, B^y)."""
    _expect(basis, "disk")
    N = len(basis)
    idx = basis.indices
    alphas = [_alpha_disk(ix.n, ix.k) for ix in idx]
    Bx = np.zeros((N, N), dtype=complex)
    By = np.zeros((N, N), dtype=complex)
    for a in range(N):
        for b in range(N):
            Bx[a, b], By[a, b] = _disk_xy(idx[a], alphas[a], idx[b], alphas[b])
    W = np.eye(N)
    return OperatorMatrices(basis, basis.eigenvalues.copy(), Bx, By, None, W)


def _disk_xy(ia, aa, ib, ab):
    """(B_d^x, B_d^y) entry between two disk modes (n, k, l)."""
    na, la, nb, lb = ia.n, ia.l, ib.n, ib.l
    if abs(na - nb) != 1:
        return 0.0, 0.0
    base = b_element_disk(na, aa, nb, ab)
    guard = 0.0 if na + nb == 1 else 1.0
    x = y = 0.0
    if la == lb:
        x = base if la == 1 else base * guard
    elif la == 1 and lb == 2:
        y = base if nb == na + 1 else -base * guard
    elif la == 2 and lb == 1:
        y = base if nb == na - 1 else -base * guard
    return x, y


def assemble_interval(basis: BasisSet) -> OperatorMatrices:
    """Interval operator (Neumann cosine modes); the coordinate axis is z."""
    _expect(basis, "interval")
    N = len(basis)
    ms = [ix.m for ix in basis.indices]
    B = np.zeros((N, N), dtype=complex)
    for a in range(N):
        for b in range(N):
            B[a, b] = basis.aspect * b_element_interval(ms[a], ms[b])
    W = np.eye(N)
    return OperatorMatrices(basis, basis.eigenvalues.copy(), None, None, B, W)


def assemble_cylinder(basis: BasisSet) -> OperatorMatrices:
    """Capped cylinder: disk blocks repeated over m for B^{x,y}, and the
    interval matrix stretched by the aspect ratio h = H/R for B^z."""
    _expect(basis, "cylinder")
    N = len(basis)
    idx = basis.indices
    h = basis.aspect
    alphas = [_alpha_disk(ix.n, ix.k) for ix in idx]
    Bx = np.zeros((N, N), dtype=complex)
    By = np.zeros((N, N), dtype=complex)
    Bz = np.zeros((N, N), dtype=complex)
    for a in range(N):
        ia = idx[a]
        for b in range(N):
            ib = idx[b]
            if ia.m == ib.m:
                Bx[a, b], By[a, b] = _disk_xy(ia, alphas[a], ib, alphas[b])
            if ia.n == ib.n and ia.k == ib.k and ia.l == ib.l:
                Bz[a, b] = h * b_element_interval(ia.m, ib.m)
    W = np.eye(N)
    return OperatorMatrices(basis, basis.eigenvalues.copy(), Bx, By, Bz, W)


def assemble_operator(basis: BasisSet) -> OperatorMatrices:
    """Dispatch on the basis geometry."""
    table = {
        "sphere": assemble_sphere,
        "sphere_reduced": assemble_reduced_sphere,
        "cylinder": assemble_cylinder,
        "disk": assemble_disk,
        "interval": assemble_interval,
    }
    try:
        return table[basis.geometry](basis)
    except KeyError:
        raise DomainError(f"unknown geometry {basis.geometry!r}") from None


def _expect(basis_or_mat, geometry: str):
    basis = basis_or_mat.basis if isinstance(basis_or_mat, OperatorMatrices) else basis_or_mat
    if basis.geometry != geometry:
        raise DomainError(f"expected a {geometry} basis, got {basis.geometry}")


def gradient_matrix_sphere(mat: OperatorMatrices, theta_g: float, phi_g: float) -> np.ndarray:
    """Gradient-direction matrix sin(t)cos(p) B^x + sin(t)sin(p) B^y + cos(t) B^z."""
    _expect(mat, "sphere")
    st, ct = np.sin(theta_g), np.cos(theta_g)
    return st * np.cos(phi_g) * mat.Bx + st * np.sin(phi_g) * mat.By + ct * mat.Bz


def gradient_matrix_cylinder(mat: OperatorMatrices, eta: float) -> np.ndarray:
    """Gradient in the xz plane at angle eta from the x axis: cos(eta) B^x + sin(eta) B^z."""
    _expect(mat, "cylinder")
    return np.cos(eta) * mat.Bx + np.sin(eta) * mat.Bz


def gradient_matrix(mat: OperatorMatrices, theta_g: float | None = None,
                    phi_g: float | None = None, eta: float | None = None) -> np.ndarray:
    """Geometry-appropriate gradient matrix.

    sphere: angles (theta_g, phi_g), default z axis.  cylinder: angle eta in
    the xz plane, default x axis.  disk: x axis.  interval / reduced sphere:
    the single coordinate axis.
    """
    g = mat.basis.geometry
    if g == "sphere":
        return gradient_matrix_sphere(mat, theta_g or 0.0, phi_g or 0.0)
    if g == "cylinder":
        return gradient_matrix_cylinder(mat, eta if eta is not None else 0.0)
    if g == "disk":
        return mat.Bx
    return mat.Bz  # interval, sphere_reduced


def operator_for(geometry: str, N: int, R: float = 1.0, H: float = 1.0) -> OperatorMatrices:
    """Build basis and matrices in one call."""
    return assemble_operator(build_basis(geometry, N, R=R, H=H))


def save_matrices(path, mat: OperatorMatrices):
    """Debug dump, little-endian: magic 'BTSPECM1', geometry as 16 NUL-padded
    ASCII bytes, uint32 N, float64 R (always 1: internal units), float64
    aspect H/R, then the Lambda diagonal as N float64, then for each of
    B^x, B^y, B^z a uint8 presence flag followed (if present) by N*N
    complex128 row-major, then W as N*N complex128 row-major."""
    N = mat.N
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<16sIdd", mat.basis.geometry.encode(), N, 1.0,
                            float(mat.basis.aspect)))
        f.write(np.ascontiguousarray(mat.lam, dtype="<f8").tobytes())
        for B in (mat.Bx, mat.By, mat.Bz):
            if B is None:
                f.write(struct.pack("<B", 0))
            else:
                f.write(struct.pack("<B", 1))
                f.write(np.ascontiguousarray(B, dtype="<c16").tobytes())
        f.write(np.ascontiguousarray(mat.W.astype(complex), dtype="<c16").tobytes())


def load_matrices(path) -> dict:
    """Read back a save_matrices dump into plain arrays (no BasisSet)."""
    with open(path, "rb") as f:
        if f.read(8) != _MAGIC:
            raise ValueError("not a btspec matrix dump")
        geom_raw, N, R, aspect = struct.unpack("<16sIdd", f.read(36))
        geometry = geom_raw.rstrip(b"\x00").decode()
        lam = np.frombuffer(f.read(8 * N), dtype="<f8")
        Bs = []
        for _ in range(3):
            present, = struct.unpack("<B", f.read(1))
            if present:
                Bs.append(np.frombuffer(f.read(16 * N * N), dtype="<c16").reshape(N, N))
            else:
                Bs.append(None)
        W = np.frombuffer(f.read(16 * N * N), dtype="<c16").reshape(N, N)
    return {"geometry": geometry, "N": N, "R": R, "aspect": aspect,
            "lam": lam, "Bx": Bs[0], "By": Bs[1], "Bz": Bs[2], "W": W}
