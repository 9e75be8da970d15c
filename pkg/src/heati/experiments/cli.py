"""Command-line entry point: ``heati {run,validate,exact,estimate-time,gradcheck}``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from ..ansatz import random_init
from ..chemistry import hartree_fock_state, load_fcidump, molecular_hamiltonian
from ..gradient import GradientRequest, finite_difference_gradient, full_gradient
from ..hamiltonians import CapabilityError, exact_ground_state
from ..quantum import ConfigurationError, expectation
from .config import RunConfig, load_config
from .results import emit_results
from .runner import InputFileError, iter_problems, n_params_for, problem_widths, run_experiment, wallclock_for

GRADCHECK_RTOL = 1e-6
GRADCHECK_ATOL = 1e-9


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=getattr(args, "seed", None), output=getattr(args, "output", None),
                              restarts=getattr(args, "restarts", None))


def _describe(cfg: RunConfig) -> str:
    noise = "noiseless"
    if cfg.noisy:
        parts = []
        if cfg.sampling:
            parts.append(f"sampling M0={cfg.sampling.M0} grouping={cfg.sampling.grouping}")
        if cfg.drift:
            parts.append(f"drift eps={cfg.drift.epsilon}")
        noise = ", ".join(parts)
    where = f"N={cfg.n_qubits}" if cfg.n_qubits else f"{len(cfg.inputs)} input file(s)"
    return (f"{cfg.name}: {cfg.task}, {where}, depths {list(cfg.depths)}, {cfg.variant}/{cfg.time_mode}, "
            f"{cfg.adam.restarts} restarts x {cfg.adam.max_steps} steps ({cfg.aggregation}), {noise}"
            + (", extended" if cfg.extended else ""))


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"ok  {_describe(cfg)}")
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    output = cfg.output or Path("results") / cfg.name
    print(_describe(cfg), flush=True)
    start = time.perf_counter()

    def progress(prob, summary):
        err = summary.aggregate - prob.reference
        print(f"  {prob.point:>20s}  D={prob.ansatz.depth:<2d}  {cfg.aggregation} dE={err:.3e}  "
              f"[{time.perf_counter() - start:.1f}s]", flush=True)

    records = run_experiment(cfg, progress)
    manifest = {"config": cfg.to_dict(), "seeds": sorted({r.seed for r in records})}
    csv_path, man_path = emit_results(records, output, manifest)
    print(f"wrote {csv_path} and {man_path}")
    return 0


def cmd_exact(args) -> int:
    ints = load_fcidump(args.fcidump)
    H = molecular_hamiltonian(ints)
    energy, _ = exact_ground_state(H, sector=ints.n_electrons)
    hf = expectation(hartree_fock_state(ints.n_spatial_orbitals, ints.n_electrons), H)
    print(f"qubits           {H.n_qubits}")
    print(f"pauli terms      {len(H.terms)}")
    print(f"hartree-fock     {hf:.10f}")
    print(f"exact ground     {energy:.10f}")
    return 0


def cmd_estimate_time(args) -> int:
    cfg = _load(args)
    steps = cfg.adam.max_steps
    for n in sorted(set(problem_widths(cfg))):
        for d in cfg.depths:
            n_p = n_params_for(cfg, n, d)
            sec = wallclock_for(cfg, n_p, steps)
            print(f"N={n} D={d} n_p={n_p} steps={steps} M0={cfg.M0}: {sec:.0f} s = {sec / 3600:.2f} h")
    return 0


def cmd_gradcheck(args) -> int:
    cfg = _load(args)
    prob = next(iter_problems(cfg))
    params = random_init(prob.ansatz, cfg.master_seed)
    req = GradientRequest(prob.ansatz, params, prob.observable, prob.initial)
    sweep = full_gradient(req)
    shift = full_gradient(req, method="shift")
    fd = finite_difference_gradient(req, h=1e-5)
    tol = np.maximum(GRADCHECK_RTOL * np.abs(fd), GRADCHECK_ATOL)
    err_fd = np.abs(shift - fd)
    print(f"{prob.point} D={prob.ansatz.depth}: {sweep.size} parameters")
    print(f"  max |shift - sweep|           {np.max(np.abs(shift - sweep)):.3e}")
    print(f"  max |shift - finite diff|     {np.max(err_fd):.3e}")
    ok = bool(np.all(err_fd <= tol))
    print("pass" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heati", description="Trapped-ion hardware-efficient ansatz experiments.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def with_overrides(p):
        p.add_argument("config", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="override run.master_seed")
        p.add_argument("--output", help="override run.output (path prefix for .csv and .manifest.json)")
        p.add_argument("--restarts", type=int, help="override optimizer.restarts")
        return p

    with_overrides(sub.add_parser("run", help="execute an experiment")).set_defaults(func=cmd_run)
    with_overrides(sub.add_parser("validate", help="check a config without running it")).set_defaults(
        func=cmd_validate)
    p = sub.add_parser("exact", help="exact ground energy of an FCIDUMP file")
    p.add_argument("fcidump")
    p.set_defaults(func=cmd_exact)
    with_overrides(sub.add_parser("estimate-time", help="modelled experiment wall-clock time")).set_defaults(
        func=cmd_estimate_time)
    with_overrides(sub.add_parser("gradcheck", help="parameter-shift vs finite-difference report")).set_defaults(
        func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigurationError, InputFileError, CapabilityError, ValueError, OSError) as exc:
        print(f"heati: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
