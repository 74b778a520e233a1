"""Command-line entry point: ``critlab <command> [options]``.

Every command computes its results in memory first; only a successful run
creates ``<outdir>/<command>/<label or timestamp>/`` with the data files
and a ``manifest.json``.  Exit codes: 0 success, 2 configuration or
validation error, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import (SCHEMAS, build_config, load_config_file, load_datum,
                     parse_float_list)
from .errors import CritlabError, NumericalError, ValidationError

HELP = {
    "hopf": "multivalued-free Hopf solution u(x, t) before breaking",
    "catastrophe": "gradient catastrophe point of a datum",
    "hierarchy": "m-th KdV hierarchy flow from the Lenard recursion",
    "evolve": "pseudospectral evolution of a dispersive equation",
    "painleve-u": "P_I^2 solution U(X, T) at fixed T",
    "painleve-q": "tritronquee solution of P_I along a ray, with optional pole search",
    "rh-check": "determinant and cyclic checks of a jump descriptor",
    "phi": "phi-function samples near the critical value",
    "universality": "double-scaling comparison sweep over eps",
}


# output helpers ----------------------------------------------------------------

def _num(v):
    """Shortest round-trip text for numbers; complex values are split by callers."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def json_text(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


# commands ------------------------------------------------------------------------
# each returns (files: {name: text}, diagnostics: dict, summary: str)

def cmd_hopf(o):
    from .hopf import hopf_evaluate

    datum = load_datum(o["datum"])
    if not o["xmax"] > o["xmin"]:
        raise ValidationError("xmax must exceed xmin")
    x = np.linspace(o["xmin"], o["xmax"], o["n"])
    u = hopf_evaluate(datum, x, o["t"])
    return {"hopf.csv": csv_text(["x", "u"], zip(x, u))}, {}, f"{len(x)} points at t = {o['t']!r}"


def cmd_catastrophe(o):
    from .hopf import find_catastrophe

    cp = find_catastrophe(load_datum(o["datum"]))
    d = cp.as_dict()
    return {"catastrophe.json": json_text(d)}, {}, json_text(d).rstrip()


def cmd_hierarchy(o):
    from .diffpoly import hierarchy_flow, lenard

    L = lenard(o["m"])
    flow = hierarchy_flow(o["m"])
    text = f"L_{o['m']} = {L.to_text()}\nu_t = {flow.to_text()}"
    files = {"flow.txt": text + "\n",
             "flow.json": json_text({"m": o["m"], "lenard": L.to_json_terms(),
                                     "flow": flow.to_json_terms()})}
    return files, {}, text


_PRESETS = {
    "u": (lambda u: u, lambda u: 1.0 + 0.0 * u, lambda u: 0.0 * u, lambda u: 0.0 * u),
    "u2": (lambda u: u * u, lambda u: 2.0 * u, lambda u: 2.0 + 0.0 * u, lambda u: 0.0 * u),
    "exp": (np.exp, np.exp, np.exp, np.exp),
}


def _callback(text, name):
    """Named preset ('u', 'u2', 'exp') or a constant."""
    if text in _PRESETS:
        return _PRESETS[text]
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"{name} must be a number or one of {sorted(_PRESETS)}") from None


def _equation(o):
    from .spectral import builtin_specs

    eq = o["eq"]
    for base, key in (("kdv_hierarchy", "m"), ("gkdv", "power")):
        if eq.startswith(base + "_") and eq[len(base) + 1:].isdigit():
            eq, o = base, {**o, key: int(eq[len(base) + 1:])}
    if eq == "kdv_hierarchy":
        return builtin_specs("kdv_hierarchy", m=o["m"])
    if eq == "gkdv":
        return builtin_specs("gkdv", n=o["power"])
    if eq == "hampert":
        return builtin_specs("hampert", c=_callback(o["c"], "c"), p=_callback(o["p"], "p"))
    if eq in ("kdv", "kawahara", "nls_focusing", "nls_defocusing"):
        return builtin_specs(eq)
    raise ValidationError(f"unknown equation {eq!r}")


def cmd_evolve(o):
    from .spectral import (FieldState, PeriodicGrid, evolve, kdv_invariants, max_slope,
                           nls_invariants)

    spec = _equation(o)
    datum = load_datum(o["datum"])
    grid = PeriodicGrid(o["L"], o["n"])
    u0 = datum(grid.x)
    if spec.complex_field:
        # psi_0 = sqrt(-u0): the dispersionless limit starts from rho = -u0, zero velocity
        samples = np.sqrt(np.maximum(-u0, 0.0)).astype(complex)
        observers = (nls_invariants,)
    else:
        samples = np.asarray(u0, dtype=float)
        observers = (kdv_invariants, max_slope)
    state = FieldState(grid, samples, o["eps"])
    snaps = list(np.arange(0.0, o["t_end"], o["snap"])) + [o["t_end"]]
    traj = evolve(state, spec, o["t_end"], o["dt"], observers=observers, snap_times=snaps,
                  observe_every=o["observe_every"])
    rows = []
    for s in traj.snapshots:
        for xi, v in zip(grid.x, s.samples):
            rows.append((s.time, xi, v.real, v.imag) if spec.complex_field else (s.time, xi, v))
    head = ["t", "x", "re", "im"] if spec.complex_field else ["t", "x", "u"]
    keys = sorted(traj.records[0])
    keys.remove("t")
    inv = csv_text(["t"] + keys, ([r["t"]] + [r[k] for k in keys] for r in traj.records))
    first, last = traj.records[0], traj.records[-1]
    drift = {}
    for k in ("mass", "momentum", "hamiltonian"):
        if k in first:
            drift[f"{k}_drift"] = abs(last[k] - first[k]) / max(abs(first[k]), 1e-300)
    drift["resolution_tail"] = traj.final.resolution_tail()
    files = {"snapshots.csv": csv_text(head, rows), "invariants.csv": inv}
    return files, drift, f"{spec.label}: {len(traj.snapshots)} snapshots to t = {o['t_end']!r}"


def cmd_painleve_u(o):
    from .painleve import asymptote_slope, p12_residual, solve_p12

    sol = solve_p12(o["T"], X_max=o["xmax"], n=o["n"])
    diag = {"residual": float(np.max(np.abs(p12_residual(sol)))),
            "newton_residual": sol.residual_norm, "iterations": sol.iterations,
            "boundary_error": sol.boundary_error,
            "asymptote_slope_right": asymptote_slope(sol, side=+1)[0],
            "asymptote_slope_left": asymptote_slope(sol, side=-1)[0]}
    files = {"U.csv": csv_text(["X", "U"], zip(sol.X_grid, sol.U_samples))}
    return files, diag, f"T = {o['T']!r}: residual {diag['residual']:.3e}"


def cmd_painleve_q(o):
    from .painleve import continue_and_detect_poles, solve_tritronquee

    if not o["znear"] < o["zfar"]:
        raise ValidationError("znear must be smaller than zfar")
    Zn = o["znear"] * np.exp(1j * o["ray_angle"])
    traj = solve_tritronquee(Z_far=o["zfar"], Z_near=Zn, n_samples=o["samples"])
    rows = [(z.real, z.imag, q.real, q.imag, dq.real, dq.imag)
            for z, q, dq in zip(traj.path, traj.Q_samples, traj.dQ_samples)]
    files = {"Q.csv": csv_text(["Z_re", "Z_im", "Q_re", "Q_im", "dQ_re", "dQ_im"], rows)}
    diag = dict(traj.diagnostics)
    summary = f"Q(Z_near) = {complex(traj.Q_samples[0])!r}"
    if o["continue_angle"] is not None:
        cont = continue_and_detect_poles(traj, np.exp(1j * o["continue_angle"]), o["max_len"],
                                         start_index=0, max_poles=o["max_poles"])
        poles = [{k: v for k, v in p.items()} for p in cont.pole_estimates]
        files["poles.json"] = json_text({"poles": poles})
        diag["poles_found"] = len(poles)
        summary += f"; {len(poles)} pole(s) found"
    return files, diag, summary


def _test_reflection(z, eps):
    return 0.5 * np.exp(-z * z)


def cmd_rh_check(o):
    from .rh import (brute_force_conventions, builtin_descriptor, cyclic_consistency,
                     det_check, wkb_reflection)

    name = o["problem"]
    if name == "kdv_hierarchy_M":
        d = builtin_descriptor(name, m=o["m"])
    else:
        d = builtin_descriptor(name)
    out = {"problem": d.name}
    if d.constant_near_node:
        out["det_deviation"] = det_check(d, np.linspace(0.1, 3.0, o["samples"]))
        out["cyclic_deviation"] = cyclic_consistency(d)
        out["consistent_patterns"] = [list(p) for p in brute_force_conventions(d)]
    else:
        params = {"eps": o["eps"], "t": o["t"]}
        if d.variable == "lambda":
            datum = load_datum(o["datum"])
            params["r0"] = wkb_reflection(datum)
            params["x"] = o["x"]
            radii = -datum.minimum_value * np.linspace(0.05, 0.95, o["samples"])
        else:
            params["r0"] = _test_reflection
            params["y" if d.name == "ch_M" else "x"] = o["x"]
            radii = np.linspace(0.05, 3.0, o["samples"])
        out["det_deviation"] = det_check(d, radii, **params)
    return {"rh_check.json": json_text(out)}, {}, json_text(out).rstrip()


def cmd_phi(o):
    from .hopf import find_catastrophe
    from .rh import phi_eval

    datum = load_datum(o["datum"])
    cp = find_catastrophe(datum)
    x = cp.x_c if o["x"] is None else o["x"]
    t = cp.t_c if o["t"] is None else o["t"]
    lo = cp.u_c - 0.2 if o["lambda_min"] is None else o["lambda_min"]
    hi = cp.u_c - 1e-4 if o["lambda_max"] is None else o["lambda_max"]
    if not (datum.minimum_value < lo < hi < 0):
        raise ValidationError("need u_min < lambda_min < lambda_max < 0")
    lam = np.linspace(lo, hi, o["points"])
    vals = [complex(phi_eval(datum, cp, l, x, t)) for l in lam]
    rows = [(l, v.real, v.imag) for l, v in zip(lam, vals)]
    return ({"phi.csv": csv_text(["lambda", "phi_re", "phi_im"], rows)},
            {"x": x, "t": t}, f"{len(lam)} samples at x = {x!r}, t = {t!r}")


def _universality_run(eps, o, table, window):
    """One eps of the sweep; module level so a process pool can pickle it."""
    from .hopf import find_catastrophe
    from .spectral import FieldState, PeriodicGrid, builtin_specs, evolve
    from .universality import (compare_run, compute_constants, double_scaling_coords,
                               hopf_deviation, predict, snapshot_times)

    datum = load_datum(o["datum"])
    cp = find_catastrophe(datum)
    sc = compute_constants(cp)
    grid = PeriodicGrid(o["L"], o["n"])
    t_ctrl = cp.t_c - o["control_offset"]
    snaps = snapshot_times(eps, sc, [-1.0, -0.5, 0.0, 0.5, 1.0])
    snaps = sorted(set(snaps + [t_ctrl]))
    state = FieldState(grid, datum(grid.x), eps)
    traj = evolve(state, builtin_specs("kdv"), max(snaps), o["dt"], snap_times=snaps)
    report = compare_run(traj, sc, table, eps, tuple(window))
    control = hopf_deviation(traj.snapshot_at(t_ctrl), datum, cp.t_c)
    overlay = []
    for s in traj.snapshots:
        X, T = double_scaling_coords(grid.x, s.time, eps, sc)
        if abs(T) > window[1] * (1 + 1e-9):
            continue
        sel = np.abs(X) <= window[0]
        pred = predict(grid.x[sel], s.time, eps, sc, table)
        overlay += list(zip([s.time] * int(sel.sum()), grid.x[sel], s.samples[sel], pred))
    return report, control, overlay


def cmd_universality(o):
    from concurrent.futures import ProcessPoolExecutor

    from .hopf import find_catastrophe
    from .stencils import loglog_slope
    from .universality import PainleveTable, compute_constants, fit_rates

    datum = load_datum(o["datum"])
    eps_list = parse_float_list(o["eps"])
    if any(e <= 0 for e in eps_list):
        raise ValidationError("eps values must be positive")
    window = parse_float_list(o["window"], 2)
    if window[1] > 1.0:
        raise ValidationError("T window is limited to the tabulated |T| <= 1")
    cp = find_catastrophe(datum)
    sc = compute_constants(cp)
    t_ctrl = cp.t_c - o["control_offset"]
    if not t_ctrl > 0:
        raise ValidationError("control_offset must be smaller than t_c")
    table = PainleveTable(T_max=1.0, X_max=o["xmax"], n=o["pn"])
    args = [(eps, o, table, window) for eps in eps_list]
    if o["workers"] > 1 and len(eps_list) > 1:
        with ProcessPoolExecutor(max_workers=min(o["workers"], len(eps_list))) as pool:
            results = list(pool.map(_universality_run, *zip(*args)))
    else:
        results = [_universality_run(*a) for a in args]
    # merged in the order the eps values were given, whatever the scheduling
    reports = [r for r, _, _ in results]
    control = [c for _, c, _ in results]
    files = {f"overlay_eps{eps!r}.csv": csv_text(["t", "x", "u_numeric", "u_predicted"], ov)
             for eps, (_, _, ov) in zip(eps_list, results)}
    fit = fit_rates(reports) if len(reports) >= 3 else None
    ctrl_slope = loglog_slope(eps_list, control)[0] if len(eps_list) >= 2 else float("nan")
    rows = [(r.eps, r.sup, r.rms, r.centre_deviation, c) for r, c in zip(reports, control)]
    files["errors.csv"] = csv_text(["eps", "sup", "rms", "centre_deviation", "hopf_control"],
                                   rows)
    files["report.json"] = json_text({
        "constants": sc.as_dict(),
        "errors": [r.as_dict() for r in reports],
        "fit": fit.as_dict() if fit else None,
        "control_exponent": ctrl_slope,
        "control_time": t_ctrl,
    })
    diag = {"control_exponent": ctrl_slope}
    if fit:
        diag.update(amplitude_exponent=fit.amplitude_exponent,
                    correction_exponent=fit.correction_exponent)
    return files, diag, json_text(diag).rstrip()


COMMANDS = {
    "hopf": cmd_hopf,
    "catastrophe": cmd_catastrophe,
    "hierarchy": cmd_hierarchy,
    "evolve": cmd_evolve,
    "painleve-u": cmd_painleve_u,
    "painleve-q": cmd_painleve_q,
    "rh-check": cmd_rh_check,
    "phi": cmd_phi,
    "universality": cmd_universality,
}


# parser ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    p = _Parser(prog="critlab", description="Critical behaviour of Hamiltonian PDEs near breaking.")
    p.add_argument("--version", action="version", version=f"critlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, schema in SCHEMAS.items():
        sp = sub.add_parser(cmd, help=HELP[cmd])
        sp.add_argument("--config", help="YAML file (or name in $CRITLAB_CONFIG_DIR)")
        sp.add_argument("--outdir", help="output root (default: runs)")
        sp.add_argument("--label", help="run directory name (default: UTC timestamp)")
        sp.add_argument("--no-write", action="store_true", help="print only, write nothing")
        for key, (typ, default, _) in schema.items():
            sp.add_argument(_flag(key), dest=key, default=None, metavar=typ.__name__.upper(),
                            help=f"default: {default!r}")
    return p


def _run_dir(cfg):
    label = cfg.label or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    if "/" in label or label in (".", ".."):
        raise ValidationError(f"invalid label {label!r}")
    return Path(cfg.outdir) / cfg.command / label


def run(argv=None):
    """Execute one command; returns the process exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = build_parser().parse_args(argv)
        file_values, source = ({}, "")
        if ns.config:
            file_values, source = load_config_file(ns.config)
        overrides = {k: getattr(ns, k) for k in SCHEMAS[ns.command]}
        overrides.update(outdir=ns.outdir, label=ns.label)
        cfg = build_config(ns.command, file_values, overrides, source)
        out_dir = None if ns.no_write else _run_dir(cfg)
        if out_dir is not None and out_dir.exists():
            raise ValidationError(f"output directory {out_dir} already exists")
        t0 = time.perf_counter()
        files, diag, summary = COMMANDS[cfg.command](cfg.options)
        wall = time.perf_counter() - t0
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"critlab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"critlab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except CritlabError as exc:
        print(f"critlab: error: {exc}", file=sys.stderr)
        return 2

    print(summary)
    if out_dir is None:
        return 0
    manifest = {
        "config": cfg.as_dict(),
        "version": __version__,
        "wall_time": wall,
        "created": datetime.now(timezone.utc).isoformat(),
        "diagnostics": diag,
        "files": sorted(files),
    }
    out_dir.mkdir(parents=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)
    (out_dir / "manifest.json").write_text(json_text(manifest))
    print(f"wrote {out_dir}", file=sys.stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
