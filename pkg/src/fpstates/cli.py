"""Command-line interface: ``fpstates <command> ...``.

Tables go to ``<output dir>/<name>.csv`` plus a JSON mirror when an output
directory is given (``--output-dir``, the ``FPSTATES_OUTPUT_DIR`` variable or
``output.dir`` in a config file), and to stdout as CSV otherwise.  Every
emitted table starts with ``# fpstates <version> config_hash=<sha256> seed=<n>``.
Library errors end the process with status 2 and a JSON record on stderr;
failed checks give status 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as dg
from . import fock
from . import kernel as kn
from .config import OUTPUT_ENV, config_hash, load_config
from .errors import FPStatesError, InvalidParams
from .experiments import run_preset
from .fpstate import (
    build_fp_state,
    ceiling_state,
    dump_state,
    format_state,
    load_state,
    reference_state,
)
from .softening import SlabConfig, from_descriptor
from .spectrum import (
    ModelParams,
    build_eigenspinor_basis,
    format_spectrum,
    read_spectrum,
    torus_spectrum,
    write_spectrum,
)


class Emitter:
    """Serialised, deterministic table output with a provenance header."""

    def __init__(self, settings, seed=0, output_dir=None, stdout=None):
        self.hash = config_hash(settings)
        self.seed = seed
        self.output_dir = Path(output_dir) if output_dir else None
        self.stdout = stdout or sys.stdout
        self.written = []

    @property
    def header(self):
        return f"# fpstates {__version__} config_hash={self.hash} seed={self.seed}"

    def table(self, name, columns, rows):
        rows = [tuple(_plain(v) for v in row) for row in rows]
        buf = io.StringIO()
        buf.write(self.header + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        if self.output_dir is None:
            self.stdout.write(buf.getvalue())
            return
        self.output_dir.mkdir(parents=True, exist_ok=True)
        csv_path = self.output_dir / f"{name}.csv"
        csv_path.write_text(buf.getvalue(), encoding="utf-8")
        doc = {"tool": "fpstates", "version": __version__, "config_hash": self.hash,
               "seed": self.seed, "columns": list(columns),
               "rows": [dict(zip(columns, row)) for row in rows]}
        json_path = self.output_dir / f"{name}.json"
        json_path.write_text(json.dumps(doc, indent=1, allow_nan=True) + "\n", encoding="utf-8")
        self.written += [csv_path, json_path]

    def path(self, name):
        """File destination for non-tabular artifacts (``None`` means stdout)."""
        if self.output_dir is None:
            return None
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _add_model(p, cutoff=True):
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--lengths", type=float, nargs="+", default=[2 * math.pi],
                   help="torus side lengths (one value means a cube)")
    if cutoff:
        p.add_argument("--cutoff", type=float, default=20.0)
    p.add_argument("--spectrum-file", help="synthetic positive branch instead of a torus")


def _add_state(p):
    _add_model(p)
    p.add_argument("--slab", type=float, nargs=2, metavar=("A", "B"), default=[-1.0, 1.0])
    p.add_argument("--soften", choices=("indicator", "bump", "file"), default="indicator")
    p.add_argument("--soften-params", nargs="*", default=None,
                   help="indicator: a b; bump: center halfwidth; file: path (defaults follow the slab)")
    p.add_argument("--kind", choices=("fp", "reference", "ceiling"), default="fp")
    p.add_argument("--anti-hadamard", action="store_true",
                   help="flip the sign of the softening (allows f <= 0)")
    p.add_argument("--state", help="load a state dump instead of building one")


def _add_output(p):
    p.add_argument("--output-dir", default=None)
    p.add_argument("--seed", type=int, default=0)


def _lengths(values):
    if len(values) == 1:
        return tuple(values) * 3
    if len(values) != 3:
        raise InvalidParams("--lengths needs one or three values")
    return tuple(values)


def _spectrum(args):
    if getattr(args, "spectrum_file", None):
        spec = read_spectrum(args.spectrum_file)
        return (spec.truncate(args.cutoff) if getattr(args, "cutoff", None) else spec), None
    params = ModelParams(args.mass, _lengths(args.lengths))
    return torus_spectrum(params, args.cutoff), params


def _softening(kind, params, slab):
    if not params:
        if kind == "file":
            raise InvalidParams("--soften file needs a path")
        params = ([slab.a, slab.b] if kind == "indicator"
                  else [0.5 * (slab.a + slab.b), 0.5 * (slab.b - slab.a)])
    return from_descriptor(kind, params)


def _state(args):
    if getattr(args, "state", None):
        return load_state(args.state), None
    spec, params = _spectrum(args)
    if args.kind == "reference":
        state = reference_state(spec)
    elif args.kind == "ceiling":
        state = ceiling_state(spec)
    else:
        slab = SlabConfig(*args.slab)
        f = _softening(args.soften, args.soften_params, slab)
        if args.anti_hadamard:
            f = f.scaled(-1.0, allow_signed=True)
        state = build_fp_state(spec, slab, f, args.cutoff, anti_hadamard=args.anti_hadamard)
    if state.slab is None and getattr(args, "slab", None):
        state = _with_slab(state, SlabConfig(*args.slab))
    return state, params


def _with_slab(state, slab):
    return replace(state, slab=slab)


def _settings(args):
    """Canonical parameters of an invocation, for the config hash."""
    skip = {"func", "output_dir"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _emitter(args, stdout):
    out = args.output_dir or os.environ.get(OUTPUT_ENV) or None
    return Emitter(_settings(args), getattr(args, "seed", 0), out, stdout)


def _thresholds(args):
    return dg.Thresholds(decay_floor=args.floor, window_fraction=args.window,
                         tail_tol=args.tail_tol, rolling=args.rolling)


def _add_thresholds(p):
    p.add_argument("--floor", type=float, default=0.1)
    p.add_argument("--window", type=float, default=0.25)
    p.add_argument("--tail-tol", type=float, default=1e-8)
    p.add_argument("--rolling", type=int, default=5)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_spectrum(args, stdout):
    spec, _ = _spectrum(args)
    em = _emitter(args, stdout)
    target = Path(args.out) if args.out else em.path("spectrum.txt")
    if target is None:
        stdout.write(format_spectrum(spec, [em.header[2:]]))
    else:
        write_spectrum(spec, target, header_lines=[em.header[2:]])
    return 0


def cmd_fpstate_build(args, stdout):
    state, _ = _state(args)
    em = _emitter(args, stdout)
    target = Path(args.out) if args.out else em.path("fpstate.txt")
    if target is None:
        stdout.write(format_state(state, [em.header[2:]]))
    else:
        dump_state(state, target, header_lines=[em.header[2:]])
    return 0


def cmd_diagnose_series(args, stdout):
    state, _ = _state(args)
    em = _emitter(args, stdout)
    status = 0
    summary = []
    for p in args.p:
        r = dg.hadamard_series(state, p, _thresholds(args))
        em.table(f"series_p{p}", ("N", "S_p"), r.partial_sums)
        summary.append((p, len(state), r.total, r.decade_change, r.tail_estimate, r.verdict))
        if args.expect != "any" and r.verdict != args.expect:
            status = 1
    em.table("series_summary", ("p", "modes", "S_p", "decade_change", "tail_estimate", "verdict"), summary)
    return status


def cmd_diagnose_scan(args, stdout):
    spec, _ = _spectrum(args)
    grid = np.linspace(args.b_min, args.b_max, args.b_count)
    r = dg.scan_slab_halfwidths(spec, grid, window=args.window, floor=args.floor, rolling=args.rolling)
    em = _emitter(args, stdout)
    rows = zip(r.b_grid, r.minimum, r.maximum, r.mean, r.verdicts)
    em.table("scan", ("b", "min", "max", "mean", "verdict"), rows)
    return 0


def cmd_diagnose_k(args, stdout):
    state, _ = _state(args)
    r = dg.k_operator_spectrum(state, args.sub[0], args.sub[1])
    em = _emitter(args, stdout)
    em.table("k_spectrum", ("z", "plus", "minus"), zip(r.z, r.magnitudes, -r.magnitudes))
    em.table("k_summary", ("quantity", "value"),
             [("solver_deviation", r.solver_deviation), ("verdict", r.verdict)])
    return 0 if r.solver_deviation < 1e-12 else 1


def cmd_diagnose_fluct(args, stdout):
    state, _ = _state(args)
    em = _emitter(args, stdout)
    summary = []
    status = 0
    for p in args.p:
        r = dg.fluctuation_squared(state, p, args.hhat0, _thresholds(args))
        em.table(f"fluctuations_p{p}", ("N", "S"), r.partial_sums)
        summary.append((p, len(state), r.total, r.decade_change, r.tail_estimate, r.verdict))
        if args.expect != "any" and r.verdict != args.expect:
            status = 1
    bridge = dg.fluctuation_implies_hadamard_check(state, tuple(args.p), _thresholds(args))
    em.table("fluctuations_summary", ("p", "modes", "sum", "decade_change", "tail_estimate", "verdict"), summary)
    em.table("bridge", ("quantity", "value"),
             [("bridge_ok", int(bridge.bridge_ok)), ("cos_sq_ok", int(bridge.cos_sq_ok))]
             + [(f"agree_p{p}", int(v[2])) for p, v in bridge.agreement.items()])
    return status


def _torus_state(args):
    state, params = _state(args)
    if params is None:
        raise InvalidParams("kernel commands need a torus model (not a spectrum or state file)")
    basis = build_eigenspinor_basis(params, state.spectrum, len(state))
    return state, basis


def cmd_kernel_eval(args, stdout):
    state, basis = _torus_state(args)
    tp, xp, tq, xq = kn.read_point_pairs(args.pairs)
    n = len(state) if args.modes is None else args.modes
    values, tail = kn.difference_kernel(state, basis, tp, xp, tq, xq, n)
    em = _emitter(args, stdout)
    em.table("kernel", kn.kernel_columns(), kn.kernel_rows(values))
    em.table("kernel_tail", ("modes", "l2_tail"), [(n, tail)])
    return 0


def cmd_kernel_norms(args, stdout):
    state, basis = _torus_state(args)
    n = min(args.modes, len(state))
    rows = []
    worst = 0.0
    for z in range(1, n + 1):
        closed = kn.sigma_l2_norm_sq(state, z)
        sampled = kn.sigma_norm_sampled(state, basis, z, samples=args.samples, seed=args.seed + z)
        rel = abs(sampled - closed) / closed if closed > 0 else abs(sampled)
        worst = max(worst, rel)
        rows.append((z, float(state.lam[z - 1]), closed, sampled, rel))
    em = _emitter(args, stdout)
    em.table("kernel_norms", ("z", "lambda", "closed_form", "sampled", "rel_deviation"), rows)
    return 0 if worst < 1e-2 else 1


def cmd_oracle_check(args, stdout):
    state, _ = _state(args)
    modes = [int(v) for v in args.modes.split(",") if v.strip()]
    oracle = fock.build_fock(state, modes)
    rows = []

    def add(name, value, tol):
        rows.append((name, value, tol, "pass" if value < tol else "fail"))

    add("car_residual", fock.car_residual(oracle), 1e-12)
    add("vacuum_residual", fock.vacuum_residual(oracle), 1e-12)
    add("smeared_car", fock.smeared_car_residual(oracle), 1e-12)
    if len(modes) <= 3:
        add("two_point", fock.two_point_check(oracle, state), 1e-11)
    else:
        rng = np.random.default_rng(args.seed)
        n = 2 * len(modes)
        smear = [tuple(rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(4)) for _ in range(50)]
        add("two_point", fock.two_point_check(oracle, state, smear), 1e-11)
    pg = fock.purity_gauge_check(oracle, state)
    add("idempotence", pg.idempotence, 1e-12)
    add("hermiticity", pg.hermiticity, 1e-12)
    add("doubling", pg.doubling, 1e-12)
    add("gauge", max(pg.gauge.values()), 1e-12)
    add("purity", abs(pg.purity - 1.0), 1e-12)
    for p in (1, 2):
        got, vev = fock.energy_fluctuation_oracle(oracle, p)
        want = fock.analytic_fluctuation(oracle, p)
        add(f"fluctuation_p{p}", abs(got - want) / max(1.0, abs(want)), 1e-10)
        add(f"normal_vev_p{p}", abs(vev), 1e-12)
    em = _emitter(args, stdout)
    em.table("oracle_check", ("check", "max_deviation", "tolerance", "result"), rows)
    return 0 if all(r[-1] == "pass" for r in rows) else 1


def cmd_replicate(args, stdout):
    result = run_preset(args.preset)
    em = _emitter(args, stdout)
    for name, cols, rows in result.tables:
        em.table(name, cols, rows)
    em.table("replicate_status", ("preset", "passed"), [(result.name, int(result.passed))])
    return 0 if result.passed else 1


def cmd_run(args, stdout):
    cfg = load_config(args.config)
    out = args.output_dir or cfg.output_dir
    em = Emitter(cfg.canonical(), cfg["seed"], out, stdout)
    params = ModelParams(cfg["model.mass"], cfg["model.lengths"])
    spec = torus_spectrum(params, cfg["cutoff"])
    slab = SlabConfig(cfg["slab.a"], cfg["slab.b"])
    f = _softening(cfg["soften.kind"], list(cfg["soften.params"]), slab)
    state = build_fp_state(spec, slab, f, cfg["cutoff"])
    thresholds = dg.Thresholds(cfg["diagnostics.decay_floor"], cfg["diagnostics.window_fraction"],
                               cfg["diagnostics.tail_tol"], cfg["diagnostics.rolling"])
    target = em.path("fpstate.txt")
    if target is not None:
        dump_state(state, target, header_lines=[em.header[2:]])
    expect = cfg["diagnostics.expect"]
    status = 0
    summary = []
    for p in cfg["diagnostics.powers"]:
        r = dg.hadamard_series(state, p, thresholds)
        em.table(f"series_p{p}", ("N", "S_p"), r.partial_sums)
        summary.append(("series", p, r.total, r.decade_change, r.tail_estimate, r.verdict))
        status |= int(expect != "any" and r.verdict != expect)
    for p in cfg["diagnostics.fluctuation_powers"]:
        r = dg.fluctuation_squared(state, p, cfg["diagnostics.hhat0"], thresholds)
        summary.append(("fluctuations", p, r.total, r.decade_change, r.tail_estimate, r.verdict))
        status |= int(expect != "any" and r.verdict != expect)
    em.table("summary", ("series", "p", "sum", "decade_change", "tail_estimate", "verdict"), summary)
    bridge = dg.fluctuation_implies_hadamard_check(state, cfg["diagnostics.fluctuation_powers"] or (1,),
                                                   thresholds)
    status |= int(not (bridge.bridge_ok and bridge.cos_sq_ok))
    if cfg["kernel.norm_modes"] > 0:
        basis = build_eigenspinor_basis(params, spec, min(cfg["kernel.norm_modes"], len(state)))
        rows = []
        for z in range(1, len(basis) + 1):
            closed = kn.sigma_l2_norm_sq(state, z)
            sampled = kn.sigma_norm_sampled(state, basis, z, samples=cfg["kernel.samples"],
                                            seed=cfg["seed"] + z)
            rows.append((z, closed, sampled))
            status |= int(abs(sampled - closed) > 1e-2 * max(closed, 1e-300))
        em.table("kernel_norms", ("z", "closed_form", "sampled"), rows)
    return status


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="fpstates", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fpstates {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="list torus eigenvalues")
    _add_model(p)
    _add_output(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    fps = sub.add_parser("fpstate", help="build and dump a state").add_subparsers(dest="action", required=True)
    p = fps.add_parser("build")
    _add_state(p)
    _add_output(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fpstate_build)

    diag = sub.add_parser("diagnose", help="series, scans and spectra").add_subparsers(dest="action", required=True)
    p = diag.add_parser("series")
    _add_state(p)
    _add_output(p)
    _add_thresholds(p)
    p.add_argument("--p", type=int, nargs="+", default=[0, 2])
    p.add_argument("--expect", choices=("any", "converged", "diverging", "inconclusive"), default="any")
    p.set_defaults(func=cmd_diagnose_series)

    p = diag.add_parser("scan")
    _add_model(p)
    _add_output(p)
    p.add_argument("--b-min", type=float, default=0.3)
    p.add_argument("--b-max", type=float, default=3.0)
    p.add_argument("--b-count", type=int, default=200)
    p.add_argument("--window", type=float, default=0.25)
    p.add_argument("--floor", type=float, default=0.1)
    p.add_argument("--rolling", type=int, default=5)
    p.set_defaults(func=cmd_diagnose_scan)

    p = diag.add_parser("k-spectrum")
    _add_state(p)
    _add_output(p)
    p.add_argument("--sub", type=float, nargs=2, metavar=("A1", "B1"), required=True)
    p.set_defaults(func=cmd_diagnose_k)

    p = diag.add_parser("fluctuations")
    _add_state(p)
    _add_output(p)
    _add_thresholds(p)
    p.add_argument("--p", type=int, nargs="+", default=[1, 2])
    p.add_argument("--hhat0", type=float, default=1.0)
    p.add_argument("--expect", choices=("any", "converged", "diverging", "inconclusive"), default="any")
    p.set_defaults(func=cmd_diagnose_fluct)

    ker = sub.add_parser("kernel", help="difference kernel terms").add_subparsers(dest="action", required=True)
    p = ker.add_parser("eval")
    _add_state(p)
    _add_output(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--modes", type=int, default=None)
    p.set_defaults(func=cmd_kernel_eval)

    p = ker.add_parser("norms")
    _add_state(p)
    _add_output(p)
    p.add_argument("--modes", type=int, default=20)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=cmd_kernel_norms)

    orc = sub.add_parser("oracle", help="Fock-space cross-checks").add_subparsers(dest="action", required=True)
    p = orc.add_parser("check")
    _add_state(p)
    _add_output(p)
    p.add_argument("--modes", required=True, help="comma-separated positive indices (at most 6)")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("replicate", help="run a preset experiment")
    p.add_argument("preset")
    _add_output(p)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("run", help="run everything a config file asks for")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, stdout)
    except (FPStatesError, OSError) as exc:
        message = exc.args[0] if len(exc.args) == 1 else str(exc)  # KeyError subclasses quote str()
        record = {"error": type(exc).__name__, "message": str(message), "command": args.command}
        stderr.write(json.dumps(record) + "\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
