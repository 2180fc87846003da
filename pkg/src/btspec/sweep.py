"""Eigenvalue branch tracking over a gradient-strength grid.

Branches are labeled by continuity from gbar = 0, where they coincide with
the ordered Laplacian eigenvalues.  Consecutive grid points are matched by an
optimal assignment on squared eigenvalue displacement (Hungarian method)
against a linear prediction from the two previous points, which keeps
identities through crossings and through slowly splitting near-parallel
branches.  Residual displacement ties are broken by eigenvector overlap; a
real pair turning into a complex-conjugate pair is ordered with the Im > 0
member on the lower branch index.  Steps whose matching stays ambiguous are
bisected down to min_step and the surviving ambiguity is recorded rather
than suppressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matrices import OperatorMatrices
from .spectrum import Spectrum, diagonalize

EXACT_DEGENERACY_TOL = 1e-9
# Below this relative split a swapped labeling is numerically invisible;
# such ties are kept in index order instead of spending eigenvectors.
EFFECTIVE_DEGENERACY_TOL = 1e-5
TIE_REL = 0.05
OVERLAP_MARGIN = 0.2


@dataclass
class BranchSweep:
    """Branch-ordered eigenvalues lambda_j(gbar) on an adaptively refined grid.

    eigenvalues[i, j] is branch j at g_grid[i]; branch j starts at the j-th
    ordered Laplacian eigenvalue.  refinements and ambiguities log the
    adaptive insertions and unresolved assignment ties.
    """

    g_grid: np.ndarray
    eigenvalues: np.ndarray
    permutations: list = field(default_factory=list)
    refinements: list = field(default_factory=list)
    ambiguities: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def n_branches(self) -> int:
        return self.eigenvalues.shape[1]

    def branch(self, j: int) -> np.ndarray:
        """Eigenvalue curve of branch j (0-based) over the grid."""
        return self.eigenvalues[:, j]

    def values_at(self, g: float) -> np.ndarray:
        """Branch-ordered eigenvalues at the grid point nearest to g."""
        i = int(np.argmin(np.abs(self.g_grid - g)))
        return self.eigenvalues[i]


def match_step(prev: Spectrum, next_: Spectrum, W: np.ndarray | None = None):
    """Permutation sigma minimizing sum |lambda_prev[b] - lambda_next[sigma(b)]|^2.

    Returns (sigma, info).  info['tie_groups'] lists branch pairs whose
    assignment is cost-degenerate; exact degeneracies (equal next-values) are
    left in index order, a freshly formed conjugate pair is ordered Im > 0
    first, and remaining ties are broken by the bilinear overlap
    |<v_prev, W v_next>| when both spectra carry eigenvectors (plain Hermitian
    overlap when W is None).  Pairs that stay ambiguous are reported with
    kind='unresolved'.
    """
    wp, wn = prev.eigenvalues, next_.eigenvalues
    if len(wp) != len(wn):
        raise ValueError("spectra have different sizes")
    diff = wp[:, None] - wn[None, :]
    cost = diff.real**2 + diff.imag**2
    rows, cols = linear_sum_assignment(cost)
    sigma = np.empty_like(cols)
    sigma[rows] = cols
    info = {"cost": float(cost[rows, cols].sum()), "tie_groups": [],
            "swapped_pairs": []}

    # Swap ties, vectorized: relative cost change of exchanging the
    # assignments of two branches.
    d = cost[np.arange(len(wp)), sigma]
    c_now = d[:, None] + d[None, :]
    cs = cost[:, sigma]
    c_swp = cs + cs.T
    rel = np.abs(c_swp - c_now) / (c_now + c_swp + 1e-300)
    cand = np.argwhere(np.triu((rel <= TIE_REL) & (c_now + c_swp > 0), k=1))
    for comp in _components(cand, len(wp)):
        _resolve_component(comp, sigma, wp, wn, prev, next_, W, info)
    return sigma, info


def _components(pairs, n) -> list[list[int]]:
    """Connected components of the tie graph (only components of size > 1)."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for b1, b2 in pairs:
        parent[find(int(b1))] = find(int(b2))
    groups: dict[int, list[int]] = {}
    for b1, b2 in pairs:
        for b in (int(b1), int(b2)):
            groups.setdefault(find(b), [])
    for b in range(n):
        r = find(b)
        if r in groups:
            groups[r].append(b)
    return [sorted(v) for v in groups.values() if len(v) > 1]


def _resolve_component(comp, sigma, wp, wn, prev, next_, W, info):
    cols = sigma[comp]
    vals = wn[cols]
    scale = max(1.0, float(np.max(np.abs(vals))))
    spread = np.max(np.abs(vals[:, None] - vals[None, :]))
    exact_tol = EXACT_DEGENERACY_TOL if prev.X is not None else EFFECTIVE_DEGENERACY_TOL
    if spread <= exact_tol * scale:
        if next_.X is not None:
            # Inside an (almost) exactly degenerate cluster the previous
            # step's eigenvectors are arbitrary mixtures, so anchor the
            # labels to the gbar = 0 basis content of the same branch
            # indices instead (branch j descends from basis mode j).
            anchor = W[comp] if W is not None else np.eye(len(wp))[comp]
            ov = np.abs(anchor @ next_.X[cols].T)
            r_idx, c_idx = linear_sum_assignment(-ov)
            new_cols = cols[c_idx[np.argsort(r_idx)]]
            for pos, branch in enumerate(comp):
                sigma[branch] = new_cols[pos]
        return  # degenerate at working precision: not an ambiguity
    if np.all(np.abs(wp[comp].imag) <= 1e-9) and \
            _is_conjugate_family(vals, scale):
        # real branches merged into conjugate pairs: deterministic order,
        # Im > 0 to the lower branch index within each real-part group
        # (real parts quantized so conjugate twins share the primary key)
        rank = np.lexsort((-vals.imag, np.round(vals.real / (1e-6 * scale))))
        before = cols.copy()
        for pos, branch in enumerate(comp):
            sigma[branch] = cols[rank[pos]]
        if not np.array_equal(sigma[comp], before):
            info["swapped_pairs"].extend(int(b) for b in comp)
        info["tie_groups"].append({"branches": tuple(int(b) for b in comp),
                                   "kind": "conjugate_pair",
                                   "candidates": "cost-equal assignments, "
                                                 "ordered Im>0 first"})
        return
    if prev.X is None or next_.X is None:
        info["tie_groups"].append({"branches": tuple(int(b) for b in comp),
                                   "kind": "unresolved"})
        return
    # maximize total overlap within the component (Hungarian on -|overlap|)
    a = prev.X[comp]
    b = next_.X[cols]
    ov = np.abs(a @ W @ b.T) if W is not None else np.abs(a @ np.conj(b).T)
    r_idx, c_idx = linear_sum_assignment(-ov)
    new_cols = cols[c_idx[np.argsort(r_idx)]]
    if not np.array_equal(new_cols, cols):
        info["swapped_pairs"].extend(int(b) for b in comp)
    for pos, branch in enumerate(comp):
        sigma[branch] = new_cols[pos]
    # ambiguity: a row whose best and runner-up overlaps are comparable while
    # the two candidate next-values are visibly distinct
    resolved = True
    for r in range(len(comp)):
        order = np.argsort(ov[r])[::-1]
        if len(order) < 2:
            continue
        c0, c1 = order[0], order[1]
        close = ov[r, c0] - ov[r, c1] <= OVERLAP_MARGIN * (ov[r, c0] + ov[r, c1] + 1e-300)
        if close and abs(vals[c0] - vals[c1]) > EFFECTIVE_DEGENERACY_TOL * scale:
            resolved = False
    info["tie_groups"].append({"branches": tuple(int(b) for b in comp),
                               "kind": "overlap_resolved" if resolved
                               else "unresolved"})


def _is_conjugate_family(vals: np.ndarray, scale: float) -> bool:
    """True when vals form conjugate pairs (reals self-paired) with at least
    one genuinely complex member."""
    if not np.any(np.abs(vals.imag) > 1e-9):
        return False
    unused = list(range(len(vals)))
    while unused:
        i = unused.pop(0)
        if abs(vals[i].imag) <= 1e-9 * scale:
            continue
        match = None
        for j in unused:
            if abs(vals[i] - np.conj(vals[j])) <= 1e-6 * scale:
                match = j
                break
        if match is None:
            return False
        unused.remove(match)
    return True


def run_sweep(mat: OperatorMatrices, B: np.ndarray, g_max: float,
              step: float = 0.05, min_step: float = 1e-5,
              n_branches: int | None = None,
              refine_displacement: float = 0.5) -> BranchSweep:
    """Track eigenvalue branches from gbar = 0 to g_max.

    Eigenvalues only are computed at each grid point; eigenvectors are pulled
    in lazily when a displacement tie survives the slope-prediction matching.
    A step whose maximal matched displacement exceeds refine_displacement, or
    whose matching stays ambiguous, is bisected until min_step; leftover
    ambiguities are logged with both candidate assignments.
    """
    if g_max <= 0:
        raise ValueError("g_max must be positive")
    n_grid = int(np.ceil(g_max / step))
    grid = list(np.linspace(0.0, g_max, n_grid + 1))

    sweep_g: list[float] = []
    rows: list[np.ndarray] = []
    perms: list[np.ndarray] = []
    refinements: list[dict] = []
    ambiguities: list[dict] = []

    first = diagonalize(mat, B, grid[0], eigvals_only=True)
    order0 = np.argsort(first.eigenvalues.real)
    sweep_g.append(grid[0])
    rows.append(first.eigenvalues[order0])

    # Vector-chained matching is needed while degenerate families are still
    # splitting: labels inside a family are only defined by eigenvector
    # content.  At gbar = 0 the eigenvectors are exactly the basis vectors.
    prev_vec: Spectrum | None = Spectrum(
        gbar=grid[0], eigenvalues=rows[0],
        X=np.eye(mat.N, dtype=complex)) if grid[0] == 0.0 else None
    vector_mode = prev_vec is not None

    pending = grid[1:]
    while pending:
        g_next = pending.pop(0)
        pred = _predict(sweep_g, rows, g_next)
        if not vector_mode:
            nxt = diagonalize(mat, B, g_next, eigvals_only=True)
            sigma, info = match_step(Spectrum(gbar=g_next, eigenvalues=pred), nxt)
            ties = info["tie_groups"]
            if ties:
                # re-run this step with eigenvectors; the previous point was
                # tie-free, so aligning its vectors by value is unambiguous
                prev_vec = _aligned_vector_spectrum(mat, B, sweep_g[-1], rows[-1])
                vector_mode = True
        if vector_mode:
            nxt = diagonalize(mat, B, g_next)
            pred_spec = Spectrum(gbar=g_next, eigenvalues=pred, X=prev_vec.X)
            sigma, info = match_step(pred_spec, nxt, W=mat.W)
            ties = info["tie_groups"]
        unresolved = [t for t in ties if t["kind"] == "unresolved"]
        max_disp = float(np.max(np.abs(rows[-1] - nxt.eigenvalues[sigma])))
        gap = g_next - sweep_g[-1]
        if (unresolved or max_disp > refine_displacement) and gap > 2 * min_step:
            g_mid = 0.5 * (sweep_g[-1] + g_next)
            refinements.append({"inserted": g_mid,
                                "reason": "tie" if unresolved else "displacement",
                                "max_disp": max_disp})
            pending.insert(0, g_next)
            pending.insert(0, g_mid)
            continue
        for t in unresolved:
            ambiguities.append({"g": g_next, **t,
                                "note": "cost-minimal assignment kept"})
        sweep_g.append(g_next)
        rows.append(nxt.eigenvalues[sigma])
        perms.append(sigma)
        if vector_mode:
            if ties:
                prev_vec = Spectrum(gbar=g_next,
                                    eigenvalues=nxt.eigenvalues[sigma],
                                    X=nxt.X[sigma])
            else:
                vector_mode, prev_vec = False, None

    sweep = BranchSweep(
        g_grid=np.array(sweep_g),
        eigenvalues=np.vstack(rows),
        permutations=perms,
        refinements=refinements,
        ambiguities=ambiguities,
        metadata={
            "geometry": mat.basis.geometry,
            "N": mat.N,
            "step": step,
            "min_step": min_step,
            "tiebreak": "slope-predicted squared displacement, eigenvector "
                        "overlap on ties, Im>0 to lower index through branch "
                        "points",
        },
    )
    if n_branches is not None:
        sweep.eigenvalues = sweep.eigenvalues[:, :n_branches]
    return sweep


def _predict(sweep_g, rows, g_next) -> np.ndarray:
    """Linear extrapolation of each branch to g_next (falls back to the last
    values when only one point is available)."""
    if len(rows) < 2:
        return rows[-1]
    dg = sweep_g[-1] - sweep_g[-2]
    if dg <= 0:
        return rows[-1]
    slope = (rows[-1] - rows[-2]) / dg
    return rows[-1] + slope * (g_next - sweep_g[-1])


def _aligned_vector_spectrum(mat, B, g, target_row) -> Spectrum:
    """Diagonalize with vectors at g and permute rows onto target_row order."""
    spec = diagonalize(mat, B, g)
    order = _match_sorted(spec.eigenvalues, target_row)
    return Spectrum(gbar=g, eigenvalues=spec.eigenvalues[order], X=spec.X[order])


def _match_sorted(w_raw: np.ndarray, w_target: np.ndarray) -> np.ndarray:
    """Permutation aligning a raw eigenvalue list onto a target ordering."""
    diff = w_target[:, None] - w_raw[None, :]
    cost = diff.real**2 + diff.imag**2
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(len(w_raw), dtype=int)
    out[rows] = cols
    return out
