"""Preset experiments: softened convergence, unsoftened scan, fluctuations.

Each preset returns a list of named tables ``(name, columns, rows)`` and an
overall pass flag, so the CLI only has to emit them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diagnostics as dg
from . import fock
from .errors import UnknownPreset
from .fpstate import build_fp_state
from .softening import SlabConfig, bump, indicator
from .spectrum import ModelParams, synthetic_spectrum, torus_spectrum

UNIT_TORUS = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class PresetResult:
    name: str
    tables: list
    passed: bool


def softened_state(cutoff=50.0, halfwidth=15.0, mass=1.0, lengths=(2 * math.pi,) * 3):
    spec = torus_spectrum(ModelParams(mass, lengths), cutoff)
    return build_fp_state(spec, SlabConfig(-halfwidth, halfwidth), bump(0.0, halfwidth), cutoff)


def unsoftened_state(b=1.0, cutoff=200.0, mass=1.0, lengths=UNIT_TORUS):
    spec = torus_spectrum(ModelParams(mass, lengths), cutoff)
    return build_fp_state(spec, SlabConfig(-b, b), indicator(-b, b), cutoff)


def resonant_spectrum(b, mass=1.0, n=400):
    """Positive branch ``lambda_z = z pi / (2b)`` above the mass gap."""
    step = math.pi / (2 * b)
    first = max(1, math.ceil(mass / step))
    return synthetic_spectrum(mass, step * np.arange(first, first + n))


def softened_convergence(powers=(0, 2, 6), cutoff=50.0, halfwidth=15.0):
    state = softened_state(cutoff, halfwidth)
    rows = []
    for p in powers:
        r = dg.hadamard_series(state, p)
        rows.append((p, len(state), r.total, r.decade_change, r.tail_estimate, r.verdict))
    passed = all(row[-1] == dg.CONVERGED for row in rows)
    cols = ("p", "modes", "S_p", "decade_change", "tail_estimate", "verdict")
    return PresetResult("softened-convergence", [("softened_series", cols, rows)], passed)


def unsoftened_scan(n_b=200, b_min=0.3, b_max=3.0, cutoff=200.0, floor=0.1):
    spec = torus_spectrum(ModelParams(1.0, UNIT_TORUS), cutoff)
    grid = np.linspace(b_min, b_max, n_b + 2)[1:-1]   # open interval
    scan = dg.scan_slab_halfwidths(spec, grid, floor=floor)
    rows = [(float(b), float(lo), float(hi), float(mu), v)
            for b, lo, hi, mu, v in zip(scan.b_grid, scan.minimum, scan.maximum, scan.mean, scan.verdicts)]
    b_res = 1.0
    res = dg.scan_slab_halfwidths(resonant_spectrum(b_res), [b_res], floor=floor)
    summary = [("torus_flagged_fraction", scan.flagged_fraction),
               ("resonant_b", b_res),
               ("resonant_flagged", int(res.flagged[0])),
               ("resonant_max", float(res.maximum[0]))]
    passed = scan.flagged_fraction >= 0.95 and not res.flagged[0]
    return PresetResult("unsoftened-scan", [
        ("scan", ("b", "min", "max", "mean", "verdict"), rows),
        ("scan_summary", ("quantity", "value"), summary),
    ], passed)


def fluctuations(mode_sets=((3,), (3, 9), (3, 9, 40)), powers=(1, 2)):
    soft = softened_state(cutoff=50.0)
    hard = unsoftened_state(b=1.0, cutoff=200.0)
    verdict_rows = []
    for label, state in (("softened", soft), ("unsoftened", hard)):
        for p in powers:
            r = dg.fluctuation_squared(state, p)
            verdict_rows.append((label, p, r.total, r.decade_change, r.verdict))
    oracle_rows = []
    worst = 0.0
    for label, state in (("softened", soft), ("unsoftened", hard)):
        for modes in mode_sets:
            oracle = fock.build_fock(state, modes)
            for p in powers:
                got, vev = fock.energy_fluctuation_oracle(oracle, p)
                want = fock.analytic_fluctuation(oracle, p)
                dev = abs(got - want) / max(1.0, abs(want))
                worst = max(worst, dev, abs(vev))
                oracle_rows.append((label, "+".join(map(str, modes)), p, got, want, dev))
    soft_ok = all(r[-1] == dg.CONVERGED for r in verdict_rows if r[0] == "softened")
    hard_ok = all(r[-1] == dg.DIVERGING for r in verdict_rows if r[0] == "unsoftened")
    passed = soft_ok and hard_ok and worst < 1e-10
    return PresetResult("fluctuations", [
        ("fluctuation_series", ("state", "p", "sum", "decade_change", "verdict"), verdict_rows),
        ("fluctuation_oracle", ("state", "modes", "p", "oracle", "series", "rel_deviation"), oracle_rows),
    ], passed)


PRESETS = {
    "softened-convergence": softened_convergence,
    "unsoftened-scan": unsoftened_scan,
    "fluctuations": fluctuations,
}


def run_preset(name):
    try:
        fn = PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
    return fn()
