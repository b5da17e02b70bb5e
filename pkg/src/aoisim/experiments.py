"""Sweep orchestration and result files.

A sweep runs the configured experiment grid point by point, appending each
finished row to the CSV immediately (a crashed run leaves the completed rows
behind) and finishing with a JSON provenance record tying outputs to the
seed and the exact configuration.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from pathlib import Path

from .config import ExperimentSpec, SweepVariable
from .engine import SimConfig, SimResult, run_experiment
from .geometry import StoppingSetSpec, sample_bipolar
from .policy import observation_for, opportunism_condition, solve_eta

SWEEP_HEADER = "sweep_value,policy,network_peak_aoi,ci_low,ci_high,fraction_stable"


def point_config(spec: ExperimentSpec, value: float,
                 policy: StoppingSetSpec | None) -> SimConfig:
    """The SimConfig for one grid point of the sweep."""
    base = spec.base
    if spec.sweep is SweepVariable.ARRIVAL_RATE:
        return dataclasses.replace(base, arrival_rate=value, stopping=policy)
    if spec.sweep is SweepVariable.DENSITY:
        return dataclasses.replace(base, density=value, stopping=policy)
    return dataclasses.replace(base, stopping=StoppingSetSpec.fixed_disk(value))


def sweep_points(spec: ExperimentSpec):
    """Yield (value, policy_label, SimConfig) in deterministic order."""
    if spec.sweep is SweepVariable.OBSERVATION_RADIUS:
        for value in spec.values:
            cfg = point_config(spec, value, None)
            yield value, cfg.stopping.label(), cfg
    else:
        for value in spec.values:
            for policy in spec.policies:
                yield value, policy.label(), point_config(spec, value, policy)


def run_sweep(spec: ExperimentSpec, out_dir, threads: int = 1,
              config_text: str = "") -> list[dict]:
    """Run every sweep point, flushing results as they complete.

    Writes sweep.csv (one row per point), one per-link CSV per point, and
    provenance.json.  Returns the sweep rows as dictionaries.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    rows = []
    csv_path = out / "sweep.csv"
    with open(csv_path, "w") as fh:
        fh.write(SWEEP_HEADER + "\n")
        fh.flush()
        for value, label, cfg in sweep_points(spec):
            result = run_experiment(cfg, threads=threads)
            row = {
                "sweep_value": value,
                "policy": label,
                "network_peak_aoi": result.network_peak_aoi,
                "ci_low": result.ci_low,
                "ci_high": result.ci_high,
                "fraction_stable": result.fraction_stable,
            }
            rows.append(row)
            fh.write(f"{value!r},{label},{result.network_peak_aoi!r},"
                     f"{result.ci_low!r},{result.ci_high!r},{result.fraction_stable!r}\n")
            fh.flush()
            point_name = f"links_{spec.sweep.value}_{value:g}_{label.replace(':', '-')}.csv"
            (out / point_name).write_bytes(result.per_link_csv_bytes())
            (out / f"summary_{spec.sweep.value}_{value:g}_{label.replace(':', '-')}.json"
             ).write_bytes(result.json_bytes())

    provenance = {
        "seed": spec.base.master_seed,
        "sweep": spec.sweep.value,
        "values": spec.values,
        "policies": [p.label() for p in spec.policies],
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "runtime_seconds": time.time() - started,
        "rows": len(rows),
    }
    (out / "provenance.json").write_text(json.dumps(provenance, sort_keys=True, indent=2))
    return rows


def emit_policy_report(spec: ExperimentSpec, out_path, realization_index: int = 0) -> list[dict]:
    """Audit the policy solver on one sampled realization.

    Writes one CSV row per node: in-set size, tail mass, opportunism margin,
    and the solved transmit probability.  Useful for eyeballing why nodes
    throttle (or refuse to).
    """
    base = spec.base
    realization = sample_bipolar(base.density, base.region, base.channel.link_distance,
                                 base.master_seed, realization_index)
    stopping = base.stopping
    rows = []
    with open(out_path, "w") as fh:
        fh.write("node,in_set_count,tail_mass,condition_mass,opportunistic,gamma\n")
        for i in range(realization.size):
            obs = observation_for(realization, i, stopping, base.channel)
            inv = (1.0 / obs.in_set_factors[obs.in_set_factors > 0]).sum()
            mass = float(inv) + obs.tail_mass
            gamma = solve_eta(obs)
            opportunistic = opportunism_condition(obs)
            rows.append({"node": i, "in_set_count": int(obs.in_set_factors.size),
                         "tail_mass": obs.tail_mass, "condition_mass": mass,
                         "opportunistic": opportunistic, "gamma": gamma})
            fh.write(f"{i},{obs.in_set_factors.size},{obs.tail_mass!r},{mass!r},"
                     f"{'true' if opportunistic else 'false'},{gamma!r}\n")
    return rows
