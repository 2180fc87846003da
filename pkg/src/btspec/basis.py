"""Ordered, truncated Laplacian eigenbases for the supported geometries.

All lengths are expressed in units of the radius R, so eigenvalues are the
dimensionless R^2*lambda.  A cylinder keeps its aspect ratio h = H/R; the
standalone interval uses its own length as the unit (h = 1 by default).

The enumeration order is what defines the branch index j used everywhere
downstream, so it is pinned precisely:

* eigenvalues ascending;
* ties inside a degenerate eigenvalue broken by (n, k, m-rank) for the sphere
  with m-rank ordering (0, -1, +1, -2, +2, ...), and by (n, k, l, m) for the
  cylinder/disk (l = 1 before l = 2);
* a truncation that would split a degenerate family is extended to the end of
  the family, so requesting N entries may return slightly more.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError

DEGENERACY_RTOL = 1e-10

GEOMETRIES = ("sphere", "sphere_reduced", "cylinder", "disk", "interval")


@dataclass(frozen=True)
class BasisIndex:
    """Multi-index of one Laplacian mode; unused slots are None.

    sphere: (n, k, m); cylinder: (n, k, l, m); disk: (n, k, l);
    interval: (m); reduced sphere: (n, k).
    """

    n: int | None = None
    k: int | None = None
    l: int | None = None
    m: int | None = None

    def label(self) -> str:
        parts = []
        for name in ("n", "k", "l", "m"):
            v = getattr(self, name)
            if v is not None:
                parts.append(f"{name}{v}")
        return ",".join(parts)


@dataclass(frozen=True)
class BasisSet:
    """Ordered truncated basis with eigenvalues and degeneracy classes.

    class_id[i] groups entries whose eigenvalues coincide to DEGENERACY_RTOL;
    classes are contiguous in the ordering and never cut by the truncation.
    """

    geometry: str
    indices: tuple
    eigenvalues: np.ndarray
    aspect: float = 1.0  # H/R for cylinder; 1 elsewhere
    class_id: np.ndarray | None = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", ev)
        if np.any(np.diff(ev) < -1e-12):
            raise ValueError("eigenvalues must be non-decreasing")
        if self.class_id is None:
            object.__setattr__(self, "class_id", _group_classes(ev))

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def classes(self):
        """Yield (class_id, slice) for each degeneracy class in order."""
        cid = self.class_id
        start = 0
        for i in range(1, len(cid) + 1):
            if i == len(cid) or cid[i] != cid[start]:
                yield cid[start], slice(start, i)
                start = i


def _group_classes(ev: np.ndarray) -> np.ndarray:
    cid = np.zeros(len(ev), dtype=int)
    for i in range(1, len(ev)):
        close = abs(ev[i] - ev[i - 1]) <= DEGENERACY_RTOL * max(1.0, abs(ev[i]))
        cid[i] = cid[i - 1] if close else cid[i - 1] + 1
    return cid


def _m_rank(m: int) -> int:
    # ordering 0, -1, +1, -2, +2, ...
    return 2 * abs(m) - (1 if m < 0 else 0)


def _cut_at_class_boundary(entries, N):
    """entries: list of (eigenvalue, sort_key, BasisIndex), sorted.

    Returns the first M >= N entries such that the cut does not split a
    degeneracy class.
    """
    M = N
    while M < len(entries):
        lam_prev, lam_next = entries[M - 1][0], entries[M][0]
        if abs(lam_next - lam_prev) <= DEGENERACY_RTOL * max(1.0, abs(lam_next)):
            M += 1
        else:
            break
    if M > len(entries):
        raise RuntimeError("candidate pool too small; internal cutoff bug")
    return entries[:M]


def _collect(generate, N):
    """Generate candidates under a growing eigenvalue cutoff until the first N
    entries (plus any degeneracy-class completion) are guaranteed present."""
    cut = 10.0
    while True:
        entries = sorted(generate(cut), key=lambda e: (e[0], e[1]))
        # Safe only if we can see past the N-th entry's class: demand a strict
        # eigenvalue increase after position N and headroom below the cutoff.
        if len(entries) > N and entries[-1][0] > entries[N - 1][0] * (1 + 1e-9) + 1.0:
            picked = _cut_at_class_boundary(entries, N)
            lams = np.array([e[0] for e in picked])
            idxs = tuple(e[2] for e in picked)
            return idxs, lams
        cut *= 2.0


def build_sphere_basis(N: int) -> BasisSet:
    """First N entries of the ordered sphere basis (modes u_{nkm}).

    Eigenvalues alpha_nk^2 with alpha_nk the positive zeros of j_n'; the
    constant mode (n=k=m=0) carries alpha_00 = 0.  Each (n, k) family is
    (2n+1)-fold degenerate in m.
    """
    if N < 1:
        raise DomainError("N >= 1 required")

    def generate(cut):
        zmax = np.sqrt(cut)
        out = [(0.0, (0, 0, 0), BasisIndex(n=0, k=0, m=0))]
        n = 0
        while True:
            zeros = _zeros_upto_spherical(n, zmax)
            if n > 0 and zeros.size == 0:
                break
            for j, a in enumerate(zeros):
                k = j + 1 if n == 0 else j
                for m in range(-n, n + 1):
                    out.append((a * a, (n, k, _m_rank(m)), BasisIndex(n=n, k=k, m=m)))
            n += 1
        return out

    idxs, lams = _collect(generate, N)
    return BasisSet(geometry="sphere", indices=idxs, eigenvalues=lams)


def build_reduced_sphere_basis(N: int) -> BasisSet:
    """Axisymmetric (m = 0) sector of the sphere basis."""
    if N < 1:
        raise DomainError("N >= 1 required")

    def generate(cut):
        zmax = np.sqrt(cut)
        out = [(0.0, (0, 0), BasisIndex(n=0, k=0))]
        n = 0
        while True:
            zeros = _zeros_upto_spherical(n, zmax)
            if n > 0 and zeros.size == 0:
                break
            for j, a in enumerate(zeros):
                k = j + 1 if n == 0 else j
                out.append((a * a, (n, k), BasisIndex(n=n, k=k)))
            n += 1
        return out

    idxs, lams = _collect(generate, N)
    return BasisSet(geometry="sphere_reduced", indices=idxs, eigenvalues=lams)


def build_disk_basis(N: int) -> BasisSet:
    """Unit-disk basis u_{nkl}; l = 2 (sin sector) exists only for n > 0."""
    if N < 1:
        raise DomainError("N >= 1 required")

    def generate(cut):
        zmax = np.sqrt(cut)
        out = [(0.0, (0, 0, 1), BasisIndex(n=0, k=0, l=1))]
        n = 0
        while True:
            zeros = _zeros_upto_J(n, zmax)
            if n > 0 and zeros.size == 0:
                break
            for j, a in enumerate(zeros):
                k = j + 1 if n == 0 else j
                for l in (1, 2) if n > 0 else (1,):
                    out.append((a * a, (n, k, l), BasisIndex(n=n, k=k, l=l)))
            n += 1
        return out

    idxs, lams = _collect(generate, N)
    return BasisSet(geometry="disk", indices=idxs, eigenvalues=lams)


def build_interval_basis(N: int, H: float = 1.0) -> BasisSet:
    """Neumann cosine modes on an interval of length H (eigenvalues in 1/H^2...
    expressed with H as given; use H = 1 for the standalone unit interval)."""
    if N < 1:
        raise DomainError("N >= 1 required")
    if H <= 0:
        raise DomainError("H > 0 required")
    ms = np.arange(N)
    lams = (np.pi * ms / H) ** 2
    idxs = tuple(BasisIndex(m=int(m)) for m in ms)
    return BasisSet(geometry="interval", indices=idxs, eigenvalues=lams, aspect=H)


def build_cylinder_basis(N: int, R: float = 1.0, H: float = 1.0) -> BasisSet:
    """Capped-cylinder product basis u_{nklm}, lengths in units of R.

    Eigenvalues alpha_nk^2 + (pi*m/h)^2 with h = H/R; each (n, k, m) family is
    twice degenerate for n > 0 (l = 1, 2) and simple for n = 0.
    """
    if N < 1:
        raise DomainError("N >= 1 required")
    if R <= 0 or H <= 0:
        raise DomainError("R > 0 and H > 0 required")
    h = H / R

    def generate(cut):
        out = []
        zmax = np.sqrt(cut)
        n = 0
        while True:
            zeros = _zeros_upto_J(n, zmax)
            alphas = [(0, 0.0)] if n == 0 else []
            alphas += [((j + 1 if n == 0 else j), a) for j, a in enumerate(zeros)]
            if not alphas:
                break
            emitted = False
            for k, a in alphas:
                base = a * a
                if base > cut:
                    continue
                m = 0
                while base + (np.pi * m / h) ** 2 <= cut:
                    lam = base + (np.pi * m / h) ** 2
                    for l in (1, 2) if n > 0 else (1,):
                        out.append((lam, (n, k, l, m), BasisIndex(n=n, k=k, l=l, m=m)))
                    emitted = True
                    m += 1
            if not emitted:
                break
            n += 1
        return out

    idxs, lams = _collect(generate, N)
    return BasisSet(geometry="cylinder", indices=idxs, eigenvalues=lams, aspect=h)


def _zeros_upto_spherical(n: int, zmax: float) -> np.ndarray:
    count = max(4, int(zmax / np.pi) + 2)
    while True:
        z = specfun.cached_zeros_dj_spherical(n, count)
        if z[-1] > zmax:
            return z[z <= zmax]
        count *= 2


def _zeros_upto_J(n: int, zmax: float) -> np.ndarray:
    count = max(4, int(zmax / np.pi) + 2)
    while True:
        z = specfun.cached_zeros_dJ(n, count)
        if z[-1] > zmax:
            return z[z <= zmax]
        count *= 2


def build_basis(geometry: str, N: int, R: float = 1.0, H: float = 1.0) -> BasisSet:
    """Dispatch on geometry name; see the individual builders."""
    if geometry == "sphere":
        return build_sphere_basis(N)
    if geometry == "sphere_reduced":
        return build_reduced_sphere_basis(N)
    if geometry == "cylinder":
        return build_cylinder_basis(N, R=R, H=H)
    if geometry == "disk":
        return build_disk_basis(N)
    if geometry == "interval":
        return build_interval_basis(N, H=H)
    raise DomainError(f"unknown geometry {geometry!r}")
