"""Config-driven experiment runner.

    krein-spectra <eigs|weyl|dtn-check|convergence|kozlov> [--config path]
                  [--override key=value ...] [--out dir]

Exit codes: 0 success, 1 invalid configuration or input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bessel import disk_buckling_eigenvalues
from .dtn import (
    check_krein_bc,
    converse_inclusion_trial,
    dtn_map,
    harmonic_extension,
    potential_monotonicity,
    random_krein_domain_vector,
    sigma_lambda,
)
from .eigensolve import solve_pencil, solve_symmetric
from .errors import ConfigError, KreinSpectraError, NumericalError, UnsupportedShape, WindowBeyondReliability, WindowTooSparse
from .geometry import Disk, Rectangle, rasterize, shape_from_spec, shape_to_spec
from .krein import krein_eigenpairs, krein_spectrum, reconstruct
from .operators import Potential, assemble_interior, assemble_neumann, disjointness_check, sample_potential
from .weyl import (
    dominance_failures,
    fit_counting,
    kozlov_constant,
    power_law_spectrum,
    rectangle_dirichlet_eigenvalues,
    remainder_diagnostic,
    weyl_coefficient,
)

COMMANDS = ("eigs", "weyl", "dtn-check", "convergence", "kozlov")

DEFAULTS = {
    "shape": {"kind": "rectangle", "width": 1.0, "height": 1.0},
    "potential": {"kind": "constant", "value": 0.0},
    "h": 0.0625,
    "h_list": [0.125, 0.0625, 0.03125],
    "n_eigs": 10,
    "solver": "dense",
    "theta": 0.25,
    "tol": 1e-10,
    "seed": 0,
    "window": [200.0, 1000.0],
    "synthetic": False,
    "synthetic_count": 400,
    "z_values": [0.0, 3.0],
    "flux_convention": "sum",
    "trials": 5,
    "richardson_order": 1.0,
    "n": 2,
    "volume": 1.0,
    "resolution": 64,
    "workers": 1,
}

EXACT_BC_TOL = 1e-8


@dataclass
class Report:
    results: dict
    tables: dict = field(default_factory=dict)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(config: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, value = item.split("=", 1)
    parts = key.strip().split(".")
    target = config
    for p in parts[:-1]:
        if not isinstance(target.get(p), dict):
            target[p] = {}
        target = target[p]
    target[parts[-1]] = _parse_value(value)


def resolve_config(raw: dict) -> dict:
    """Merge ``raw`` over the defaults and validate; returns a fully expanded config."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    if "h_list" in raw and "h" not in raw and isinstance(raw["h_list"], list) and raw["h_list"]:
        cfg["h"] = raw["h_list"][-1]
    shape = shape_from_spec(cfg["shape"])
    cfg["shape"] = shape_to_spec(shape)

    def num(key, cond, msg):
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not cond(v):
            raise ConfigError(f"config key {key!r}: {msg}, got {v!r}")

    num("h", lambda v: v > 0, "must be a positive number")
    num("n_eigs", lambda v: int(v) == v and v >= 1, "must be an integer >= 1")
    num("theta", lambda v: 0 < v <= 1, "must lie in (0, 1]")
    num("tol", lambda v: v > 0, "must be positive")
    num("seed", lambda v: int(v) == v, "must be an integer")
    num("workers", lambda v: int(v) == v and v >= 1, "must be an integer >= 1")
    num("synthetic_count", lambda v: int(v) == v and v >= 1, "must be an integer >= 1")
    num("trials", lambda v: int(v) == v and v >= 0, "must be a nonnegative integer")
    num("resolution", lambda v: int(v) == v and v >= 8, "must be an integer >= 8")
    num("volume", lambda v: v > 0, "must be positive")
    num("richardson_order", lambda v: v > 0, "must be positive")
    for key in ("n_eigs", "seed", "workers", "synthetic_count", "trials", "resolution"):
        cfg[key] = int(cfg[key])
    if cfg["solver"] not in ("dense", "iterative"):
        raise ConfigError(f"config key 'solver' must be 'dense' or 'iterative', got {cfg['solver']!r}")
    if cfg["flux_convention"] not in ("sum", "mean"):
        raise ConfigError("config key 'flux_convention' must be 'sum' or 'mean'")
    if not isinstance(cfg["synthetic"], bool):
        raise ConfigError("config key 'synthetic' must be true or false")
    w = cfg["window"]
    if not (isinstance(w, list) and len(w) == 2 and all(isinstance(x, (int, float)) for x in w) and 0 < w[0] < w[1]):
        raise ConfigError(f"config key 'window' must be [lo, hi] with 0 < lo < hi, got {w!r}")
    hl = cfg["h_list"]
    if not (isinstance(hl, list) and all(isinstance(x, (int, float)) and x > 0 for x in hl)):
        raise ConfigError("config key 'h_list' must be a list of positive numbers")
    zs = cfg["z_values"]
    if not (isinstance(zs, list) and all(isinstance(x, (int, float)) for x in zs)):
        raise ConfigError("config key 'z_values' must be a list of real numbers")
    pot = cfg["potential"]
    if isinstance(pot, (int, float)) and not isinstance(pot, bool):
        cfg["potential"] = {"kind": "constant", "value": float(pot)}
    elif not isinstance(pot, dict) or pot.get("kind", "constant") not in ("constant", "radial", "grid_file"):
        raise ConfigError("config key 'potential' must be an object with kind constant, radial or grid_file")
    cfg["potential"].setdefault("kind", "constant")
    return cfg


def _setup(cfg, h=None):
    shape = shape_from_spec(cfg["shape"])
    domain = rasterize(shape, cfg["h"] if h is None else h)
    V = sample_potential(cfg["potential"], domain)
    return shape, domain, V


def _solver_kw(cfg):
    return {"mode": cfg["solver"], "tol": cfg["tol"], "theta": cfg["theta"], "seed": cfg["seed"]}


def _bessel_reference(shape, V, k):
    if isinstance(shape, Disk) and V.is_zero:
        return disk_buckling_eigenvalues(shape.radius, k)
    return None


def _neumann_spectrum(domain, V, k, cfg):
    N = assemble_neumann(domain, V)
    return solve_pencil(N.stiffness, N.mass_matrix, min(k, domain.n_pad), tol=cfg["tol"], mode=cfg["solver"],
                        sigma=-1.0, seed=cfg["seed"])


def cmd_eigs(cfg: dict) -> Report:
    shape, domain, V = _setup(cfg)
    k = min(cfg["n_eigs"], domain.n_int)
    kr = krein_spectrum(domain, V, k, **_solver_kw(cfg))
    L = assemble_interior(domain, V).matrix
    di = solve_symmetric(L, k, tol=cfg["tol"], mode=cfg["solver"], seed=cfg["seed"])
    ne = _neumann_spectrum(domain, V, k, cfg) if domain.exact_boundary else None

    header = ["index [-]", "lambda_krein [1/L^2]", "lambda_dirichlet [1/L^2]", "lambda_neumann [1/L^2]",
              "residual_krein [-]", "residual_dirichlet [-]", "residual_neumann [-]"]
    rows = []
    for j in range(k):
        rows.append([
            j + 1, float(kr.eigenvalues[j]), float(di.eigenvalues[j]),
            float(ne.eigenvalues[j]) if ne is not None else "",
            float(kr.residuals[j]), float(di.residuals[j]),
            float(ne.residuals[j]) if ne is not None else "",
        ])
    failures = dominance_failures(kr.eigenvalues, di.eigenvalues)
    summary = {
        "n_int": domain.n_int,
        "n_ring": domain.n_ring,
        "exact_boundary": domain.exact_boundary,
        "reliable_below": kr.reliable_below,
        "lambda1_krein": float(kr.eigenvalues[0]),
        "lambda1_dirichlet": float(di.eigenvalues[0]),
        "lambda1_neumann": float(ne.eigenvalues[0]) if ne is not None else None,
        "krein_ge_dirichlet": bool(kr.eigenvalues[0] >= di.eigenvalues[0] * (1 - 1e-12)),
        "counting_dominance_failures": failures,
        "max_residual_krein": float(kr.residuals.max()),
        "solver": kr.meta,
    }
    ref = _bessel_reference(shape, V, k)
    if ref is not None:
        summary["bessel_reference"] = ref
        summary["relative_error_vs_bessel"] = [float((a - b) / b) for a, b in zip(kr.eigenvalues, ref)]
    return Report({"command": "eigs", "summary": summary}, {"spectrum.csv": (header, rows)})


def _synthetic_or_solved(cfg):
    shape = shape_from_spec(cfg["shape"])
    n = shape.ndim
    C_theory = weyl_coefficient(n, shape.measure())
    if cfg["synthetic"]:
        return shape, n, C_theory, power_law_spectrum(C_theory, n, cfg["synthetic_count"]), None
    h = cfg["h"]
    lo, hi = cfg["window"]
    if hi > cfg["theta"] / h**2:
        raise WindowBeyondReliability(
            f"window upper end {hi:g} exceeds reliable_below = theta/h^2 = {cfg['theta'] / h**2:g}"
        )
    _, domain, V = _setup(cfg)
    k = domain.n_int if cfg["solver"] == "dense" else min(cfg["n_eigs"], domain.n_int)
    spec = krein_spectrum(domain, V, k, **_solver_kw(cfg))
    if k < domain.n_int and spec.eigenvalues[-1] < hi:
        raise WindowTooSparse(f"{k} eigenvalues reach only {spec.eigenvalues[-1]:g} < window end {hi:g}; raise n_eigs")
    return shape, n, C_theory, spec, (domain, V)


def cmd_weyl(cfg: dict) -> Report:
    shape, n, C_theory, spec, solved = _synthetic_or_solved(cfg)
    window = tuple(cfg["window"])
    fits = {mode: fit_counting(spec, n, window, mode, C_theory=C_theory) for mode in ("one_term", "two_term")}
    remainder = remainder_diagnostic(spec, n, C_theory)
    results = {
        "command": "weyl",
        "dimension": n,
        "volume": shape.measure(),
        "C_theory": C_theory,
        "reliable_below": spec.reliable_below,
        "n_eigenvalues": len(spec),
        "fits": {m: f.to_dict() for m, f in fits.items()},
        "remainder_exponent_validated": False,
    }
    V = solved[1] if solved else None
    if isinstance(shape, Rectangle) and (V is None or V.is_zero):
        from .eigensolve import Spectrum

        hi = window[1]
        control = Spectrum(rectangle_dirichlet_eigenvalues(shape.width, shape.height, 4 * hi))
        results["dirichlet_control"] = fit_counting(control, 2, window, "two_term", C_theory=C_theory).to_dict()
    two = fits["two_term"]
    count_rows = []
    for lam in spec.eigenvalues:
        if lam > spec.reliable_below:
            break
        N = int(np.sum((spec.eigenvalues > 0) & (spec.eigenvalues <= lam)))
        model = C_theory * lam ** (n / 2)
        count_rows.append([float(lam), N, float(model), float(two.C_fit * lam ** (n / 2) + two.D_fit * lam ** ((n - 1) / 2))])
    tables = {
        "spectrum.csv": (["index [-]", "lambda_krein [1/L^2]"], [[j + 1, float(x)] for j, x in enumerate(spec.eigenvalues)]),
        "counting.csv": (["lambda [1/L^2]", "N [count]", "weyl_leading [count]", "two_term_fit [count]"], count_rows),
        "remainder.csv": (["lambda [1/L^2]", "N [count]", "weyl_leading [count]", "scaled_remainder [count*L^(n-1/2)]"],
                          [list(r) for r in remainder]),
    }
    return Report(results, tables)


def cmd_dtn_check(cfg: dict) -> Report:
    shape = shape_from_spec(cfg["shape"])
    if isinstance(shape, Disk):
        raise UnsupportedShape("dtn-check needs a lattice-aligned (rectilinear) shape; disk is not supported")
    _, domain, V = _setup(cfg)
    conv = cfg["flux_convention"]
    k = min(cfg["n_eigs"], domain.n_int)
    spec = krein_spectrum(domain, V, k, **_solver_kw(cfg))
    M0 = dtn_map(domain, V, 0.0, conv).matrix
    rows = []
    worst = 0.0
    for j in range(k):
        pair = reconstruct(spec.eigenvectors[:, j], spec.eigenvalues[j], domain, V)
        exact, trace = check_krein_bc(pair, domain, V, conv, M0=M0)
        worst = max(worst, exact)
        rows.append([j + 1, pair.lam, exact, trace, pair.kernel_residual])
    if worst > EXACT_BC_TOL:
        raise NumericalError(f"Krein boundary condition residual {worst:.3e} exceeds {EXACT_BC_TOL:g}")
    results = {
        "command": "dtn-check",
        "n_int": domain.n_int,
        "n_ring": domain.n_ring,
        "flux_convention": conv,
        "max_exact_residual": worst,
        "dtn_symmetry_error": {str(z): dtn_map(domain, V, float(z), conv).symmetry_error() for z in cfg["z_values"]},
    }
    if V.is_zero:
        results["m0_constant_annihilation"] = float(np.abs(M0 @ np.ones(domain.n_ring)).max() / max(np.abs(M0).max(), 1e-300))
    results["boundary_operators"] = sigma_lambda(domain, V, conv).report()
    rng = np.random.default_rng(cfg["seed"])
    if domain.n_pad <= 500 and cfg["trials"]:
        trials = []
        for _ in range(cfg["trials"]):
            generic = converse_inclusion_trial(domain, V, rng.standard_normal(domain.n_pad), M0, conv)
            member = converse_inclusion_trial(domain, V, random_krein_domain_vector(domain, V, rng), M0, conv)
            trials.append({"generic": generic, "krein_domain": member})
        results["converse_inclusion"] = {
            "trials": trials,
            "implication_holds": all(
                t[key]["bc_residual"] > 1e-10 or t[key]["flux_of_dirichlet_part"] <= 1e-8
                for t in trials for key in ("generic", "krein_domain")
            ),
        }
        results["disjointness"] = {c: disjointness_check(domain, c) for c in ("edges", conv)}
    phis = rng.standard_normal((8, domain.n_ring))
    V2 = Potential("shifted", V.sampled + 1.0)
    results["potential_monotonicity"] = potential_monotonicity(domain, V, V2, phis, conv)
    header = ["index [-]", "lambda_krein [1/L^2]", "exact_residual [-]", "trace_residual [-]", "kernel_residual [-]"]
    return Report(results, {"spectrum.csv": (header, rows)})


def _convergence_point(cfg, h):
    shape, domain, V = _setup(cfg, h)
    k = min(cfg["n_eigs"], domain.n_int)
    spec = krein_spectrum(domain, V, k, **_solver_kw(cfg))
    trace = None
    if domain.exact_boundary:
        pair = reconstruct(spec.eigenvectors[:, 0], spec.eigenvalues[0], domain, V)
        trace = check_krein_bc(pair, domain, V, cfg["flux_convention"])[1]
    return {"h": h, "n_int": domain.n_int, "eigenvalues": spec.eigenvalues.tolist(), "trace_residual": trace}


def richardson(values, hs, order=None):
    """Extrapolate the last three values of a halving sequence.

    Returns ``(observed_order, limit_at_observed_order, limit_at_given_order)``.
    """
    a, b, c = values[-3:]
    p_obs = None
    lim_obs = None
    if (a - b) * (b - c) > 0:
        p_obs = math.log2((a - b) / (b - c))
        if p_obs > 0:
            lim_obs = c + (c - b) / (2**p_obs - 1)
    lim_fixed = c + (c - b) / (2**order - 1) if order else None
    return p_obs, lim_obs, lim_fixed


def cmd_convergence(cfg: dict) -> Report:
    hs = [float(x) for x in cfg["h_list"]]
    if len(hs) < 3:
        raise ConfigError(f"config key 'h_list' needs at least 3 values, got {len(hs)}")
    for a, b in zip(hs, hs[1:]):
        if abs(b / a - 0.5) > 1e-12:
            raise ConfigError(f"config key 'h_list' must halve at each step ({a} -> {b})")
    with ThreadPoolExecutor(max_workers=cfg["workers"]) as pool:
        points = list(pool.map(lambda h: _convergence_point(cfg, h), hs))
    k = min(len(p["eigenvalues"]) for p in points)
    shape = shape_from_spec(cfg["shape"])
    _, _, V = _setup(cfg, hs[-1])
    ref = _bessel_reference(shape, V, k)
    extrap = []
    for i in range(k):
        seq = [p["eigenvalues"][i] for p in points]
        p_obs, lim_obs, lim_fix = richardson(seq, hs, cfg["richardson_order"])
        row = {"index": i + 1, "values": seq, "observed_order": p_obs, "limit_observed_order": lim_obs,
               "limit_assumed_order": lim_fix}
        if ref is not None:
            row["reference"] = ref[i]
            row["errors"] = [abs(x - ref[i]) / ref[i] for x in seq]
            row["limit_assumed_order_error"] = abs(lim_fix - ref[i]) / ref[i]
            row["error_monotone"] = all(e2 < e1 for e1, e2 in zip(row["errors"], row["errors"][1:]))
        extrap.append(row)
    traces = [p["trace_residual"] for p in points]
    results = {
        "command": "convergence",
        "h_list": hs,
        "points": points,
        "extrapolation": extrap,
        "trace_residual_ratios": [b / a for a, b in zip(traces, traces[1:])] if traces[0] is not None else None,
    }
    rows = [[p["h"], i + 1, lam] for p in points for i, lam in enumerate(p["eigenvalues"][:k])]
    conv_rows = [[r["index"], r["observed_order"] if r["observed_order"] is not None else "",
                  r["limit_assumed_order"]] for r in extrap]
    return Report(results, {
        "spectrum.csv": (["h [L]", "index [-]", "lambda_krein [1/L^2]"], rows),
        "convergence.csv": (["index [-]", "observed_order [-]", "richardson_limit [1/L^2]"], conv_rows),
    })


def cmd_kozlov(cfg: dict) -> Report:
    n = cfg["n"]
    volume = float(cfg["volume"])
    quad = kozlov_constant(n, volume, cfg["resolution"])
    closed = weyl_coefficient(n, volume)
    return Report({"command": "kozlov", "n": n, "volume": volume, "quadrature": quad, "closed_form": closed,
                   "relative_difference": abs(quad - closed) / closed})


HANDLERS = {"eigs": cmd_eigs, "weyl": cmd_weyl, "dtn-check": cmd_dtn_check, "convergence": cmd_convergence,
            "kozlov": cmd_kozlov}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def run(command: str, cfg: dict) -> dict:
    """Run a subcommand on a resolved config; returns the results document and tables."""
    started = time.time()
    report = HANDLERS[command](cfg)
    doc = dict(report.results)
    doc["provenance"] = {
        "artifact_version": __version__,
        "config": cfg,
        "timestamp": {
            "utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "wall_clock_s": round(time.time() - started, 3),
        },
    }
    return {"json": _jsonable(doc), "tables": report.tables}


def write_outputs(out_dir: Path, output: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.json").write_text(json.dumps(output["json"], indent=2) + "\n", encoding="utf-8")
    for name, (header, rows) in output["tables"].items():
        with open(out_dir / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def build_parser():
    parser = argparse.ArgumentParser(prog="krein-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted keys reach into objects); repeatable")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        for item in args.override:
            apply_override(raw, item)
        cfg = resolve_config(raw)
        output = run(args.command, cfg)
        write_outputs(args.out, output)
    except KreinSpectraError as exc:
        print(f"krein-spectra: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"krein-spectra: numerical failure: {exc}", file=sys.stderr)
        return 2
    print(f"krein-spectra {args.command}: wrote {args.out}/results.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
