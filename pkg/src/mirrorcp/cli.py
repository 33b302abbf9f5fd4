"""Command-line front end.

Subcommands: ``force-scan``, ``thermal-scan``, ``kernel``, ``simulate`` and
``dispersion-scan``. Tables are written as CSV with ``#`` metadata lines;
ensemble runs also write a JSON manifest next to the CSV.

Exit codes: 0 success, 2 usage or config error, 3 domain error, 4 numerical
failure, 5 regime failure.
"""
import argparse
import io
import json
import math
import sys
import warnings
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from ._accel import BACKEND
from .config import _encode, RunConfig, ScanSpec, config_hash, dump_config, load_config
from .cpforce import (
    cp_force_far_asymptote,
    cp_force_high_temperature_asymptote,
    cp_force_near_asymptote,
    cp_force_retarded,
    cp_force_thermal_dispersive,
    cp_force_total,
    static_polarizability,
)
from .errors import ConfigError, DomainError, MirrorCPError, RegimeWarning
from .noise import build_covariance, noise_correlation
from .params import ThermalConfig, TimeGrid, TrapConfig
from .specfun import thermal_coth_factor

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REGIME = 5


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


class Table:
    """CSV table with metadata lines, rendered deterministically."""

    def __init__(self, columns, meta):
        self.columns = list(columns)
        self.meta = dict(meta)
        self.rows = []
        self.notes = []

    def add(self, row):
        self.rows.append([_fmt(row[c]) for c in self.columns])

    def render(self):
        out = io.StringIO()
        for key, val in self.meta.items():
            out.write(f"# {key}: {val}\n")
        for note in self.notes:
            out.write(f"# {note}\n")
        out.write(",".join(self.columns) + "\n")
        for r in self.rows:
            out.write(",".join(r) + "\n")
        return out.getvalue()


def _meta(cfg, command, extra=None):
    meta = {
        "command": command,
        "mirrorcp_version": __version__,
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "units": "natural (hbar = c = 1)",
    }
    if extra:
        meta.update(extra)
    return meta


def _inv_temp(T):
    return math.inf if T == 0 else 1.0 / T


def _force_units(cfg, dimensionless):
    p = cfg.atom
    if dimensionless:
        return p.Omega, p.m / (p.q**2 * p.Omega**3), "z in c/Omega; force in q^2 Omega^3 / m"
    return 1.0, 1.0, "z and force in natural units"


def cmd_force_scan(cfg, args):
    p = cfg.atom
    zs = cfg.scan.z_values()
    zscale, fscale, label = _force_units(cfg, args.dimensionless)
    table = Table(["z", "F_cp1", "F_cp2", "F_total", "F_near_asymptote", "F_far_asymptote", "flag"],
                  _meta(cfg, "force-scan", {"columns": label}))
    for z in zs:
        row = {"z": z * zscale}
        try:
            b = cp_force_total(float(z), p)
            vals = (b.f_cp1, b.f_cp2, b.total, cp_force_near_asymptote(z, p), cp_force_far_asymptote(z, p))
            flag = "ok"
        except DomainError as exc:
            vals = (math.nan,) * 5
            flag = f"domain_error:{type(exc).__name__}"
        for key, v in zip(("F_cp1", "F_cp2", "F_total", "F_near_asymptote", "F_far_asymptote"), vals):
            row[key] = v * fscale
        row["flag"] = flag
        table.add(row)
    return table, EXIT_OK


def cmd_thermal_scan(cfg, args):
    p = cfg.atom
    zs = cfg.scan.z_values()
    zscale, fscale, label = _force_units(cfg, args.dimensionless)
    cols = ["z", "T_field", "T_osc", "F_thermal_retarded", "F_thermal_dispersive", "F_total",
            "F_high_T_reference", "flag"]
    table = Table(cols, _meta(cfg, "thermal-scan", {
        "columns": label,
        "reference": "-(3/4) alpha T_field / z^4, valid for T_field = T_osc >> Omega and Omega z >> 1",
    }))
    for T_field, T_osc in cfg.scan.temperatures:
        beta = _inv_temp(T_field)
        beta_bar = _inv_temp(T_osc)
        for z in zs:
            row = {"z": z * zscale, "T_field": T_field, "T_osc": T_osc}
            try:
                f1 = cp_force_retarded(float(z), p)
                fr = thermal_coth_factor(beta_bar, p.Omega) * f1
                fd = cp_force_thermal_dispersive(float(z), p, beta, cfg.thermal)
                ref = -0.75 * static_polarizability(p) * T_field / z**4
                vals = (fr, fd, fr + fd, ref)
                flag = "ok"
            except MirrorCPError as exc:
                vals = (math.nan,) * 4
                flag = f"error:{type(exc).__name__}"
            for key, v in zip(cols[3:7], vals):
                row[key] = v * fscale
            row["flag"] = flag
            table.add(row)
    return table, EXIT_OK


def _grid(cfg):
    return cfg.grid or TimeGrid(dt=0.05, n=200)


# Without a configured trap the ensemble commands use a small damping so that
# the default run reaches a stationary variance; gamma = 0.1 << Omega_trap.
DEFAULT_TRAP = TrapConfig(gamma=0.1)


def _trap(cfg):
    return cfg.trap or DEFAULT_TRAP


def cmd_kernel(cfg, args):
    p = cfg.atom
    grid = _grid(cfg)
    trap = _trap(cfg)
    z = trap.z_bar
    ns = cfg.noise
    eps = grid.width if ns.eps is None else ns.eps
    cov = build_covariance(z, grid, p, cfg.thermal, kernel=ns.kernel, eps=eps, include_free=ns.include_free,
                           assemble=False)
    names = [f"C_{a}{b}" for a in "xyz" for b in "xyz"]
    table = Table(["lag"] + names, _meta(cfg, "kernel", {
        "z": repr(z),
        "kernel": ns.kernel,
        "eps": repr(eps),
        "include_free": ns.include_free,
        "min_eigenvalue_ratio": repr(cov.min_eig),
        "clipped_mass": repr(cov.clipped_mass),
    }))
    lags = grid.dt * np.arange(-(grid.n - 1), grid.n)
    mats = noise_correlation(z, lags, p, cfg.thermal, kernel=ns.kernel, eps=eps, include_free=ns.include_free)
    for lag, m in zip(lags, mats):
        row = {"lag": lag}
        row.update({name: v for name, v in zip(names, m.ravel())})
        table.add(row)
    return table, EXIT_OK


def _versions():
    import numpy
    import scipy

    out = {"mirrorcp": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__,
           "python": sys.version.split()[0], "backend": BACKEND}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:
        pass
    return out


def _ensemble_rows(table, stats, analytic, kernel_pred):
    for ax, name in enumerate("xyz"):
        table.add({
            "z_bar": stats.z_bar,
            "axis": name,
            "variance": stats.variance[ax],
            "stderr": stats.stderr[ax],
            "analytic": analytic.variance[ax],
            "kernel_prediction": kernel_pred[ax],
            "count": stats.count,
            "seed": stats.seed,
            "regime_ok": analytic.regime_ok,
        })


_ENSEMBLE_COLUMNS = ["z_bar", "axis", "variance", "stderr", "analytic", "kernel_prediction", "count", "seed",
                     "regime_ok"]


def _ensemble_setup(cfg, args):
    grid = cfg.grid or TimeGrid(dt=0.04, n=17501)
    trap = _trap(cfg)
    count = cfg.ensemble.count
    return grid, trap, count


def cmd_simulate(cfg, args):
    from .langevin import dispersion_analytic, dispersion_kernel_prediction, run_ensemble

    grid, trap, count = _ensemble_setup(cfg, args)
    ns = cfg.noise
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegimeWarning)
        st = run_ensemble(count, cfg.seed, trap.z_bar, trap, cfg.atom, cfg.thermal, grid, kernel=ns.kernel,
                          eps=ns.eps, burn_in=cfg.ensemble.burn_in)
        an = dispersion_analytic(trap.z_bar, trap, cfg.atom, cfg.thermal)
    kp = dispersion_kernel_prediction(trap.z_bar, trap, cfg.atom, cfg.thermal, eps=st.meta["eps"])
    regime_msgs = sorted({str(w.message) for w in caught if issubclass(w.category, RegimeWarning)})
    table = Table(_ENSEMBLE_COLUMNS, _meta(cfg, "simulate"))
    _ensemble_rows(table, st, an, kp)
    manifest = {
        "command": "simulate",
        "config": cfg.to_dict(),
        "effective": {"trap": _encode(asdict(trap)), "grid": asdict(grid)},
        "config_sha256": config_hash(cfg),
        "versions": _versions(),
        "seed": cfg.seed,
        "streams": [0],
        "omega_eff": [float(v) for v in st.omega_eff],
        "burn_in_span": st.burn_in_span,
        "drift": [float(v) for v in st.drift],
        "drift_stderr": [float(v) for v in st.drift_stderr],
        "regime_messages": regime_msgs,
        "meta": st.meta,
    }
    return table, (EXIT_REGIME if regime_msgs else EXIT_OK), manifest


def cmd_dispersion_scan(cfg, args):
    from .langevin import dispersion_scan

    grid, trap, count = _ensemble_setup(cfg, args)
    ns = cfg.noise
    zs = cfg.scan.z_values()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegimeWarning)
        scan = dispersion_scan(zs, count, cfg.seed, trap, cfg.atom, cfg.thermal, grid, kernel=ns.kernel,
                               eps=ns.eps, burn_in=cfg.ensemble.burn_in)
    regime_msgs = sorted({str(w.message) for w in caught if issubclass(w.category, RegimeWarning)})
    regime_msgs += [m for an in scan.analytic for m in an.notes]
    regime_msgs = sorted(set(regime_msgs))
    table = Table(_ENSEMBLE_COLUMNS, _meta(cfg, "dispersion-scan"))
    for st, an, kp in zip(scan.stats, scan.analytic, scan.kernel_prediction):
        _ensemble_rows(table, st, an, kp)
    for ax, name in enumerate("xyz"):
        table.notes.append(f"slope_{name}: {float(scan.slope[ax])!r} +/- {float(scan.slope_stderr[ax])!r}")
    manifest = {
        "command": "dispersion-scan",
        "config": cfg.to_dict(),
        "effective": {"trap": _encode(asdict(trap)), "grid": asdict(grid)},
        "config_sha256": config_hash(cfg),
        "versions": _versions(),
        "seed": cfg.seed,
        "streams": list(range(len(zs))),
        "slope": [float(v) for v in scan.slope],
        "slope_stderr": [float(v) for v in scan.slope_stderr],
        "regime_messages": regime_msgs,
    }
    return table, (EXIT_REGIME if regime_msgs else EXIT_OK), manifest


COMMANDS = {
    "force-scan": cmd_force_scan,
    "thermal-scan": cmd_thermal_scan,
    "kernel": cmd_kernel,
    "simulate": cmd_simulate,
    "dispersion-scan": cmd_dispersion_scan,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mirrorcp",
        description="Casimir-Polder force, mirror-induced noise and dispersion for a harmonic atom.",
    )
    parser.add_argument("--version", action="version", version=f"mirrorcp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "force-scan": "vacuum force against distance",
        "thermal-scan": "force against distance for [T_field, T_osc] pairs",
        "kernel": "noise correlation per lag and covariance diagnostics",
        "simulate": "Monte Carlo variance at the trap height",
        "dispersion-scan": "Monte Carlo variance against height with slope fit",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="output CSV path (default: stdout)")
        sp.add_argument("--format", choices=["csv"], default=None, help="output format")
        sp.add_argument("--dimensionless", action="store_true",
                        help="report Omega z and forces in units q^2 Omega^3 / m")
        sp.add_argument("--count", type=int, help="override the ensemble size")
        sp.add_argument("--zmin", type=float)
        sp.add_argument("--zmax", type=float)
        sp.add_argument("--zsteps", type=int)
        if name in ("simulate", "dispersion-scan"):
            sp.add_argument("--manifest", help="manifest path (default: <out>.json)")
    return parser


def _apply_overrides(cfg, args):
    kw = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        kw["seed"] = args.seed
    if args.count is not None:
        if args.count < 1:
            raise ConfigError("--count must be >= 1")
        kw["ensemble"] = replace(cfg.ensemble, count=args.count)
    if any(v is not None for v in (args.zmin, args.zmax, args.zsteps)):
        sc = cfg.scan
        base = ScanSpec(None, sc.zmin, sc.zmax, sc.zsteps, sc.temperatures)
        new = replace(base,
                      zmin=base.zmin if args.zmin is None else args.zmin,
                      zmax=base.zmax if args.zmax is None else args.zmax,
                      zsteps=base.zsteps if args.zsteps is None else args.zsteps)
        new.validate()
        kw["scan"] = new
    if args.out is not None or args.format is not None:
        kw["output"] = replace(cfg.output, path=args.out if args.out is not None else cfg.output.path,
                               format=args.format or cfg.output.format)
    return replace(cfg, **kw) if kw else cfg


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
        result = COMMANDS[args.command](cfg, args)
    except MirrorCPError as exc:
        sys.stderr.write(f"mirrorcp {args.command}: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    table, code = result[0], result[1]
    _write(table.render(), cfg.output.path)
    if len(result) > 2:
        manifest_path = getattr(args, "manifest", None)
        if manifest_path is None and cfg.output.path is not None:
            manifest_path = cfg.output.path + ".json"
        text = json.dumps(result[2], sort_keys=True, indent=2) + "\n"
        if manifest_path is not None:
            _write(text, manifest_path)
        if code != EXIT_OK:
            sys.stderr.write("mirrorcp: regime check failed: " + "; ".join(result[2]["regime_messages"]) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
