"""Command-line front end: sweep, signal, and fieldmap runs with CSV/JSON export.

Configuration is a flat key = value file (# comments allowed); command-line
--set KEY=VALUE pairs override file values.  Exactly one of the SI signal
inputs (R_um, gamma, D0, G_mT_per_m, deltas_ms) or the dimensionless pair
(gbar, tbars) may be given per run; all core computations are dimensionless
and the conversion happens once, here.

Output directory precedence: --out flag, then the BTSPEC_OUTDIR environment
variable, then the config key outdir, then the current directory.

Exit codes: 0 success, 2 configuration error, 3 domain error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .branchpoints import find_branch_points
from .errors import ConfigError, ConvergenceError, DomainError, NumericalError
from .fieldmap import export_projection
from .matrices import gradient_matrix, operator_for
from .montecarlo import WalkConfig, mc_signal
from .signal import (PulsePlan, compute_coefficients, signal_matrix,
                     signal_one_mode, signal_spectral, signal_two_mode)
from .spectrum import diagonalize, normalize, spectrum_at_negative_g
from .sweep import run_sweep

ENV_OUTDIR = "BTSPEC_OUTDIR"

_SI_KEYS = ("gamma", "D0", "G_mT_per_m", "deltas_ms")
_DIMLESS_KEYS = ("gbar", "tbars")

_KEY_TYPES = {
    "geometry": str,
    "R_um": float,
    "H_um": float,
    "aspect": float,
    "gamma": float,
    "D0": float,
    "G_mT_per_m": float,
    "deltas_ms": "floatlist",
    "gbar": float,
    "tbars": "floatlist",
    "eta_deg": float,
    "theta_deg": float,
    "phi_deg": float,
    "N": int,
    "g_max": float,
    "g_step": float,
    "n_branches": int,
    "walkers": int,
    "seed": int,
    "resolution": int,
    "outdir": str,
}


@dataclass
class RunConfig:
    """Validated run configuration; unset optional entries are None."""

    geometry: str
    N: int
    R_um: float | None = None
    H_um: float | None = None
    aspect: float = 1.0
    gamma: float | None = None
    D0: float | None = None
    G_mT_per_m: float | None = None
    deltas_ms: list = field(default_factory=list)
    gbar: float | None = None
    tbars: list = field(default_factory=list)
    eta_deg: float | None = None
    theta_deg: float | None = None
    phi_deg: float | None = None
    g_max: float | None = None
    g_step: float = 0.05
    n_branches: int | None = None
    walkers: int = 0
    seed: int = 12345
    resolution: int = 201
    outdir: str = "."

    def signal_mode(self) -> str:
        """'si' or 'dimensionless'; raises unless exactly one group is set."""
        si = all(getattr(self, k) not in (None, []) for k in _SI_KEYS) \
            and self.R_um is not None
        dimless = all(getattr(self, k) not in (None, []) for k in _DIMLESS_KEYS)
        if si == dimless:
            raise ConfigError(
                "provide exactly one of the SI signal inputs "
                f"(R_um, {', '.join(_SI_KEYS)}) or the dimensionless pair "
                f"({', '.join(_DIMLESS_KEYS)})")
        return "si" if si else "dimensionless"

    def pulse_plans(self) -> list[PulsePlan]:
        if self.signal_mode() == "si":
            R = self.R_um * 1e-6
            H = self.H_um * 1e-6 if self.H_um else None
            return [PulsePlan(delta=d * 1e-3, D0=self.D0, gamma=self.gamma,
                              G=self.G_mT_per_m * 1e-3, R=R, H=H)
                    for d in self.deltas_ms]
        return [PulsePlan.dimensionless(self.gbar, t) for t in self.tbars]

    def geometry_aspect(self) -> float:
        if self.geometry == "cylinder" and self.R_um and self.H_um:
            return self.H_um / self.R_um
        return self.aspect

    def direction_kwargs(self) -> dict:
        kw = {}
        if self.eta_deg is not None:
            kw["eta"] = np.deg2rad(self.eta_deg)
        if self.theta_deg is not None:
            kw["theta_g"] = np.deg2rad(self.theta_deg)
        if self.phi_deg is not None:
            kw["phi_g"] = np.deg2rad(self.phi_deg)
        return kw


def parse_config(path: str) -> dict:
    """Flat key = value file into a typed dict; unknown keys are errors."""
    out = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(key, val, f"{path}:{ln}")
    return out


def _convert(key: str, val: str, where: str):
    if key not in _KEY_TYPES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    typ = _KEY_TYPES[key]
    try:
        if typ == "floatlist":
            return [float(x) for x in val.split(",") if x.strip()]
        return typ(val)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {val!r}") from exc


def build_config(args) -> RunConfig:
    data = parse_config(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = (s.strip() for s in item.split("=", 1))
        data[key] = _convert(key, val, "--set")
    if "geometry" not in data:
        raise ConfigError("config key 'geometry' is required")
    if "N" not in data:
        raise ConfigError("config key 'N' is required")
    cfg = RunConfig(**data)
    if args.out:
        cfg.outdir = args.out
    elif os.environ.get(ENV_OUTDIR):
        cfg.outdir = os.environ[ENV_OUTDIR]
    return cfg


def _fmt(x) -> str:
    return "%.17g" % x


def _build_operator(cfg: RunConfig):
    aspect = cfg.geometry_aspect()
    mat = operator_for(cfg.geometry, cfg.N, R=1.0, H=aspect)
    B = gradient_matrix(mat, **cfg.direction_kwargs())
    return mat, B


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.g_max is None or cfg.g_max <= 0 or cfg.g_step <= 0:
        raise ConfigError("sweep requires positive g_max and g_step")
    mat, B = _build_operator(cfg)
    sweep = run_sweep(mat, B, cfg.g_max, step=cfg.g_step)
    n_out = cfg.n_branches or min(mat.N, 17)
    points = find_branch_points(mat, B, sweep, max_branch=n_out)

    os.makedirs(cfg.outdir, exist_ok=True)
    branches_path = os.path.join(cfg.outdir, "branches.csv")
    with open(branches_path, "w", newline="") as f:
        f.write("g,branch_j,re_lambda,im_lambda,flags\n")
        amb_by_g = {}
        for a in sweep.ambiguities:
            for b in a.get("branches", ()):
                amb_by_g.setdefault((a["g"], b), "ambiguous")
        for i, g in enumerate(sweep.g_grid):
            for j in range(n_out):
                lam = sweep.eigenvalues[i, j]
                flag = amb_by_g.get((g, j), "")
                f.write(f"{_fmt(g)},{j + 1},{_fmt(lam.real)},{_fmt(lam.imag)},{flag}\n")

    bp_path = os.path.join(cfg.outdir, "branchpoints.json")
    doc = {
        "version": __version__,
        "config": asdict(cfg),
        "metadata": sweep.metadata,
        "branch_points": [
            {
                "g_star": p.g_star,
                "order": p.order,
                "branches": [b + 1 for b in p.branches],
                "bracket": list(p.bracket),
                "value_re": p.meta.get("value", 0j).real,
                "value_im": p.meta.get("value", 0j).imag,
                "vv_min": p.meta.get("vv_min"),
                "min_principal_angle": p.meta.get("min_principal_angle"),
                "bracket_width": p.meta.get("width"),
            }
            for p in points
        ],
        "ambiguities": sweep.ambiguities,
        "n_refinements": len(sweep.refinements),
    }
    with open(bp_path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
    print(f"wrote {branches_path} and {bp_path}")
    return 0


def cmd_signal(cfg: RunConfig) -> int:
    plans = cfg.pulse_plans()
    if not plans:
        raise ConfigError("no pulse durations given (deltas_ms or tbars empty)")
    mat, B = _build_operator(cfg)
    gbar = plans[0].gbar
    spec = normalize(diagonalize(mat, B, gbar), mat.W)
    spec_m = spectrum_at_negative_g(spec, mat.W)
    coeffs = compute_coefficients(spec, mat.W)

    # slowest branch: smallest real part; prefer the Im > 0 member of a
    # complex-conjugate pair, with its partner for the two-mode formula
    order = np.argsort(spec.eigenvalues.real)
    i1 = int(order[0])
    complex_pair = abs(spec.eigenvalues[i1].imag) > 1e-8
    if complex_pair and spec.eigenvalues[i1].imag < 0:
        alt = int(order[1])
        if spec.eigenvalues[alt].imag > 1e-8:
            i1 = alt
    lam1 = spec.eigenvalues[i1]
    i2 = _conjugate_partner(spec.eigenvalues, i1) if complex_pair else None

    mc_dir = _unit_direction(cfg)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, "signal.csv")
    with open(path, "w", newline="") as f:
        f.write("delta,S_matrix_re,S_matrix_im,S_spectral_re,S_spectral_im,"
                "S_onemode,S_twomode_re,S_twomode_im,S_mc_re,S_mc_im,mc_stderr\n")
        for plan in plans:
            tb = plan.tbar
            Sm = signal_matrix(mat, B, gbar, tb)
            Ss = signal_spectral(spec, spec_m, coeffs, tb)
            two = ("", "")
            one_s = ""
            if not complex_pair:
                one_s = _fmt(signal_one_mode(lam1.real, coeffs.C[i1, i1].real, tb).real)
            else:
                tw = signal_two_mode(lam1, coeffs.C[i1, i1].real,
                                     coeffs.C[i1, i2], tb)
                two = (_fmt(tw.real), _fmt(tw.imag))
            mc_cols = ("", "", "")
            if cfg.walkers > 0:
                wc = WalkConfig(geometry=cfg.geometry, gbar=gbar, tbar=tb,
                                walkers=cfg.walkers, aspect=cfg.geometry_aspect(),
                                direction=mc_dir, seed=cfg.seed)
                Smc, err = mc_signal(wc)
                mc_cols = (_fmt(Smc.real), _fmt(Smc.imag), _fmt(err))
            delta = plan.delta if cfg.signal_mode() == "si" else tb
            f.write(",".join([
                _fmt(delta), _fmt(Sm.real), _fmt(Sm.imag),
                _fmt(Ss.real), _fmt(Ss.imag), one_s, two[0], two[1],
                mc_cols[0], mc_cols[1], mc_cols[2]]) + "\n")
    print(f"wrote {path}")
    return 0


def _conjugate_partner(w: np.ndarray, i: int) -> int:
    d = np.abs(w - np.conj(w[i]))
    d[i] = np.inf
    return int(np.argmin(d))


def _unit_direction(cfg: RunConfig) -> tuple:
    if cfg.geometry == "cylinder":
        eta = np.deg2rad(cfg.eta_deg) if cfg.eta_deg is not None else 0.0
        return (float(np.cos(eta)), 0.0, float(np.sin(eta)))
    if cfg.geometry == "sphere":
        th = np.deg2rad(cfg.theta_deg) if cfg.theta_deg is not None else 0.0
        ph = np.deg2rad(cfg.phi_deg) if cfg.phi_deg is not None else 0.0
        return (float(np.sin(th) * np.cos(ph)), float(np.sin(th) * np.sin(ph)),
                float(np.cos(th)))
    return (0.0, 0.0, 1.0)


def cmd_fieldmap(cfg: RunConfig, j: int, g: float) -> int:
    if j < 1:
        raise DomainError("eigenfunction index j must be >= 1")
    if cfg.N < 5 * j:
        raise DomainError(
            f"truncation N={cfg.N} too small for branch index {j}; "
            f"need N >= {5 * j}")
    mat, B = _build_operator(cfg)
    spec = normalize(diagonalize(mat, B, g), mat.W)
    # canonical row order: Re ascending, Im > 0 first inside conjugate pairs
    rank = np.lexsort((-spec.eigenvalues.imag,
                       np.round(spec.eigenvalues.real / 1e-6)))
    from dataclasses import replace
    spec = replace(spec, eigenvalues=spec.eigenvalues[rank], X=spec.X[rank],
                   vv=spec.vv[rank], near_branch=spec.near_branch[rank],
                   degenerate_class=spec.degenerate_class[rank])
    grid = export_projection(spec, mat.basis, j, resolution=cfg.resolution)

    os.makedirs(cfg.outdir, exist_ok=True)
    stem = f"field_j{j}_g{_num_tag(g)}"
    csv_path = os.path.join(cfg.outdir, stem + ".csv")
    with open(csv_path, "w", newline="") as f:
        f.write("x,z,re_v,im_v,inside_flag\n")
        for a, x in enumerate(grid.axis1):
            for b, z in enumerate(grid.axis2):
                v = grid.values[a, b]
                inside = int(grid.inside[a, b])
                re = _fmt(v.real) if inside else "0"
                im = _fmt(v.imag) if inside else "0"
                f.write(f"{_fmt(x)},{_fmt(z)},{re},{im},{inside}\n")
    side_path = os.path.join(cfg.outdir, stem + ".json")
    with open(side_path, "w") as f:
        json.dump({
            "version": __version__,
            "config": asdict(cfg),
            "j": j,
            "g": g,
            "lambda_re": grid.eigenvalue.real,
            "lambda_im": grid.eigenvalue.imag,
            "near_branch_point": grid.flagged,
            "plane": grid.plane,
        }, f, indent=1, sort_keys=True)
    print(f"wrote {csv_path} and {side_path}")
    return 0


def _num_tag(x: float) -> str:
    s = ("%g" % x)
    return s.replace("-", "m").replace(".", "p")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="btspec",
        description="Bloch-Torrey operator spectra, branch points and "
                    "diffusion-MRI signals in spheres and capped cylinders.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("sweep", "track eigenvalue branches and locate branch points"),
                      ("signal", "compute PGSE signal curves by all routes"),
                      ("fieldmap", "export an eigenfunction plane section")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--out", help="output directory")
        if name == "fieldmap":
            p.add_argument("--j", type=int, required=True,
                           help="eigenfunction index (1-based)")
            p.add_argument("--g", type=float, required=True,
                           help="dimensionless gradient strength")

    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "signal":
            return cmd_signal(cfg)
        return cmd_fieldmap(cfg, args.j, args.g)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except (ConvergenceError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
