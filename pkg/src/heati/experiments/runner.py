"""Orchestration of the cluster-state sweep and the molecular ground-state scans."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..ansatz import GENERAL, VARIATIONAL, AnsatzConfig, build_state, total_evolution_time
from ..chemistry import hartree_fock_state, load_fcidump, molecular_hamiltonian
from ..hamiltonians import (build_tfim, build_xy, cluster_observable, exact_cluster_state, exact_ground_state,
                            power_law_couplings)
from ..noise import estimate_wallclock
from ..optimizer import RestartSummary, multi_restart, shot_schedule
from ..quantum import StateVector, computational_basis_state, fidelity
from .config import CHEMISTRY, CLUSTER, RunConfig
from .results import ResultRecord


class InputFileError(RuntimeError):
    """An input file could not be read; the message names the file."""


@dataclass(frozen=True)
class Problem:
    """One sweep point: an observable, its exact reference and the ansatz to fit it."""

    point: str
    bond_length: float
    ansatz: AnsatzConfig
    observable: object
    initial: StateVector
    reference: float
    target_state: StateVector | None = None


def _couplings(cfg: RunConfig, n: int):
    return power_law_couplings(n, cfg.J0, cfg.alpha)


def cluster_problems(cfg: RunConfig) -> list[Problem]:
    n = cfg.n_qubits
    obs = cluster_observable(n)
    ham = build_tfim(_couplings(cfg, n), cfg.B)
    init = computational_basis_state(n, "0" * n)
    target = exact_cluster_state(n)
    # The cluster state is the unique ground state with energy -n.
    return [Problem(f"N{n}", math.nan, AnsatzConfig(n, d, cfg.variant, ham, cfg.time_mode, cfg.t0, cfg.t_max),
                    obs, init, -float(n), target) for d in cfg.depths]


def read_input(path: Path):
    try:
        return load_fcidump(path)
    except (OSError, ValueError) as exc:
        raise InputFileError(f"{path}: {exc}") from exc


def iter_chemistry_problems(cfg: RunConfig):
    for path in cfg.inputs:
        ints = read_input(path)
        H = molecular_hamiltonian(ints)
        n = H.n_qubits
        reference, _ = exact_ground_state(H, sector=ints.n_electrons)
        ham = build_xy(_couplings(cfg, n))
        init = hartree_fock_state(ints.n_spatial_orbitals, ints.n_electrons)
        bond = float(ints.metadata.get("bond_length_angstrom", "nan"))
        for d in cfg.depths:
            yield Problem(Path(path).stem, bond, AnsatzConfig(n, d, cfg.variant, ham, cfg.time_mode, cfg.t0,
                                                              cfg.t_max), H, init, reference)


def iter_problems(cfg: RunConfig):
    """Sweep points in run order, built lazily (chemistry points need an exact diagonalization)."""
    if cfg.task == CLUSTER:
        yield from cluster_problems(cfg)
    else:
        yield from iter_chemistry_problems(cfg)


def problem_widths(cfg: RunConfig) -> list[int]:
    """Register width of every input without building Hamiltonians."""
    if cfg.task == CLUSTER:
        return [cfg.n_qubits]
    return [2 * read_input(p).n_spatial_orbitals for p in cfg.inputs]


def n_params_for(cfg: RunConfig, n_qubits: int, depth: int) -> int:
    per_layer = 3 * n_qubits if cfg.variant == GENERAL else n_qubits
    return depth * (per_layer + (1 if cfg.time_mode == VARIATIONAL else 0))


def wallclock_for(cfg: RunConfig, n_params: int, steps: int) -> float:
    """Modelled experiment duration in seconds for ``steps`` gradient steps."""
    return estimate_wallclock(n_params, [shot_schedule(k, cfg.M0) for k in range(1, steps + 1)], cfg.wallclock)


def solve_point(cfg: RunConfig, prob: Problem) -> tuple[RestartSummary, list[ResultRecord]]:
    target = None if cfg.target_error is None else prob.reference + cfg.target_error
    summary = multi_restart(prob.ansatz, prob.observable, prob.initial, cfg.adam, sampling=cfg.sampling,
                            drift=cfg.drift, master_seed=cfg.master_seed, aggregation=cfg.aggregation,
                            target_energy=target, workers=cfg.workers)
    n_params = prob.ansatz.n_params()
    records = []
    for r, trace in enumerate(summary.traces):
        fid = math.nan
        if prob.target_state is not None:
            fid = fidelity(build_state(prob.ansatz, trace.final_params, prob.initial), prob.target_state)
        records.append(ResultRecord.make(
            task=cfg.task, point=prob.point, bond_length=prob.bond_length, n_qubits=prob.ansatz.n_qubits,
            depth=prob.ansatz.depth, restart=r, seed=int(trace.seed), energy=float(trace.final_energy),
            reference=float(prob.reference), fidelity=float(fid),
            t_tot=total_evolution_time(trace.final_params), steps=trace.wall_steps, shots=2 * n_params * trace.total_shots,
            wallclock_s=wallclock_for(cfg, n_params, trace.wall_steps), best=trace.best_of_restarts,
            stop_reason=trace.stop_reason))
    return summary, records


def run_experiment(cfg: RunConfig, progress=None) -> list[ResultRecord]:
    records: list[ResultRecord] = []
    for prob in iter_problems(cfg):
        summary, recs = solve_point(cfg, prob)
        records.extend(recs)
        if progress is not None:
            progress(prob, summary)
    return records


def run_cluster_experiment(cfg: RunConfig, progress=None) -> list[ResultRecord]:
    if cfg.task != CLUSTER:
        raise ValueError("not a cluster configuration")
    return run_experiment(cfg, progress)


def run_chemistry_experiment(cfg: RunConfig, progress=None) -> list[ResultRecord]:
    if cfg.task != CHEMISTRY:
        raise ValueError("not a chemistry configuration")
    return run_experiment(cfg, progress)


def aggregate(records, aggregation: str = "min") -> dict[tuple[str, int], float]:
    """``delta_e`` aggregated over restarts per ``(point, depth)``."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in records:
        groups.setdefault((r.point, r.depth), []).append(r.delta_e)
    op = np.min if aggregation == "min" else np.mean
    return {k: float(op(v)) for k, v in groups.items()}
