"""Run configuration files.

A config is a TOML document with these tables (unknown keys are rejected)::

    [run]          task = "cluster" | "chemistry", name, master_seed, output, extended
    [system]       n_qubits (cluster) or inputs = [paths or globs] (chemistry)
    [ansatz]       variant, depths = [..] or depth, time_mode, t0, t_max
    [hamiltonian]  J0, alpha, B
    [optimizer]    learning_rate, beta1, beta2, eps_stability, max_steps,
                   learning_rate_final, restarts, aggregation, target_error, workers
    [noise]        sampling, M0, grouping, estimator, drift, epsilon,
                   drift_j0, drift_times, drift_angles, granularity
    [wallclock]    J0_physical, shot_overhead

Relative paths are resolved against the config file's directory. An input
starting with ``builtin:`` names a file shipped in the package data.
"""

from __future__ import annotations

import glob
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from ..ansatz import FIXED, GENERAL, SYMMETRIC, VARIATIONAL
from ..noise import BITSTRING, GAUSSIAN, PER_ESTIMATION, PER_GROUP, DriftConfig, SamplingConfig, WallclockModel
from ..optimizer import MEAN, MIN, AdamConfig
from ..quantum import ConfigurationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CLUSTER = "cluster"
CHEMISTRY = "chemistry"

_ALLOWED = {
    "run": {"task", "name", "master_seed", "output", "extended"},
    "system": {"n_qubits", "inputs"},
    "ansatz": {"variant", "depth", "depths", "time_mode", "t0", "t_max"},
    "hamiltonian": {"J0", "alpha", "B"},
    "optimizer": {"learning_rate", "beta1", "beta2", "eps_stability", "max_steps", "learning_rate_final",
                  "restarts", "aggregation", "target_error", "workers"},
    "noise": {"sampling", "M0", "grouping", "estimator", "drift", "epsilon", "drift_j0", "drift_times",
              "drift_angles", "granularity"},
    "wallclock": {"J0_physical", "shot_overhead"},
}
_REQUIRED_TABLES = ("run", "ansatz")


@dataclass(frozen=True)
class RunConfig:
    task: str
    name: str
    depths: tuple[int, ...]
    variant: str
    time_mode: str
    t0: float = 0.4
    t_max: float = 1.0
    n_qubits: int | None = None
    inputs: tuple[Path, ...] = ()
    J0: float = 1.0
    alpha: float = 1.5
    B: float = 1.0
    adam: AdamConfig = field(default_factory=AdamConfig)
    aggregation: str = MIN
    target_error: float | None = None
    workers: int = 1
    sampling: SamplingConfig | None = None
    drift: DriftConfig | None = None
    wallclock: WallclockModel = field(default_factory=WallclockModel)
    master_seed: int = 0
    output: Path | None = None
    extended: bool = False
    source: Path | None = None

    @property
    def noisy(self) -> bool:
        return self.sampling is not None or self.drift is not None

    @property
    def M0(self) -> int:
        """Shot budget used for the wall-clock model (sampling ``M0`` or the default 1000)."""
        return self.sampling.M0 if self.sampling is not None else SamplingConfig().M0

    def with_overrides(self, seed: int | None = None, output: str | Path | None = None,
                       restarts: int | None = None) -> RunConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, master_seed=int(seed))
        if output is not None:
            cfg = replace(cfg, output=Path(output))
        if restarts is not None:
            if restarts < 1:
                raise ConfigurationError("restarts must be at least 1")
            cfg = replace(cfg, adam=replace(cfg.adam, restarts=int(restarts)))
        return cfg

    def to_dict(self) -> dict:
        """JSON-friendly resolved view used in the run manifest."""
        out = {
            "task": self.task, "name": self.name, "depths": list(self.depths), "variant": self.variant,
            "time_mode": self.time_mode, "t0": self.t0, "t_max": self.t_max, "n_qubits": self.n_qubits,
            "inputs": [str(p) for p in self.inputs], "J0": self.J0, "alpha": self.alpha, "B": self.B,
            "optimizer": asdict(self.adam), "aggregation": self.aggregation, "target_error": self.target_error,
            "workers": self.workers, "sampling": asdict(self.sampling) if self.sampling else None,
            "drift": asdict(self.drift) if self.drift else None, "wallclock": asdict(self.wallclock),
            "master_seed": self.master_seed, "output": str(self.output) if self.output else None,
            "extended": self.extended, "source": str(self.source) if self.source else None,
        }
        return out


def _expect(value, kind, where: str):
    ok = isinstance(value, kind) and not (kind in (int, float, (int, float)) and isinstance(value, bool))
    if not ok:
        raise ConfigurationError(f"{where}: expected {getattr(kind, '__name__', 'number')}, got {value!r}")
    return value


def _number(table: dict, key: str, where: str, default):
    if key not in table:
        return default
    return float(_expect(table[key], (int, float), f"{where}.{key}"))


def _integer(table: dict, key: str, where: str, default):
    if key not in table:
        return default
    return int(_expect(table[key], int, f"{where}.{key}"))


def _flag(table: dict, key: str, where: str, default: bool) -> bool:
    if key not in table:
        return default
    return bool(_expect(table[key], bool, f"{where}.{key}"))


def _choice(table: dict, key: str, where: str, options, default=None) -> str:
    if key not in table:
        if default is None:
            raise ConfigurationError(f"{where}.{key} is required")
        return default
    value = table[key]
    if value not in options:
        raise ConfigurationError(f"{where}.{key} must be one of {sorted(options)}, got {value!r}")
    return value


def builtin_data_dir() -> Path:
    return Path(str(resources.files("heati") / "data" / "fcidump"))


def _resolve_inputs(patterns, base: Path) -> tuple[Path, ...]:
    if isinstance(patterns, str):
        patterns = [patterns]
    if not isinstance(patterns, list) or not patterns:
        raise ConfigurationError("system.inputs must be a non-empty list of paths")
    found: list[Path] = []
    for pat in patterns:
        _expect(pat, str, "system.inputs")
        if pat.startswith("builtin:"):
            full = builtin_data_dir() / pat[len("builtin:"):]
        else:
            full = Path(pat) if Path(pat).is_absolute() else base / pat
        matches = sorted(glob.glob(str(full))) if glob.has_magic(str(full)) else [str(full)]
        if not matches:
            raise ConfigurationError(f"input pattern {pat!r} matched no files")
        for m in matches:
            if not Path(m).is_file():
                raise ConfigurationError(f"input file not found: {m}")
            found.append(Path(m).resolve())
    return tuple(dict.fromkeys(found))


def parse_config(doc: dict, base: Path = Path("."), source: Path | None = None) -> RunConfig:
    """Validate a parsed TOML document and resolve it into a ``RunConfig``."""
    for table, body in doc.items():
        if table not in _ALLOWED:
            raise ConfigurationError(f"unknown table [{table}]")
        if not isinstance(body, dict):
            raise ConfigurationError(f"[{table}] must be a table")
        extra = set(body) - _ALLOWED[table]
        if extra:
            raise ConfigurationError(f"unknown key(s) in [{table}]: {', '.join(sorted(extra))}")
    for table in _REQUIRED_TABLES:
        if table not in doc:
            raise ConfigurationError(f"missing required table [{table}]")
    run, system = doc["run"], doc.get("system", {})
    ans, ham = doc["ansatz"], doc.get("hamiltonian", {})
    opt, noise, wall = doc.get("optimizer", {}), doc.get("noise"), doc.get("wallclock", {})

    task = _choice(run, "task", "run", {CLUSTER, CHEMISTRY})
    name = str(_expect(run.get("name", source.stem if source else task), str, "run.name"))
    output = run.get("output")
    if output is not None:
        output = Path(_expect(output, str, "run.output"))
        output = output if output.is_absolute() else base / output

    if "depth" in ans and "depths" in ans:
        raise ConfigurationError("give either ansatz.depth or ansatz.depths, not both")
    if "depths" in ans:
        depths = ans["depths"]
        if not isinstance(depths, list) or not depths:
            raise ConfigurationError("ansatz.depths must be a non-empty list")
        depths = tuple(int(_expect(d, int, "ansatz.depths")) for d in depths)
    elif "depth" in ans:
        depths = (_integer(ans, "depth", "ansatz", None),)
    else:
        raise ConfigurationError("ansatz.depth or ansatz.depths is required")
    if min(depths) < 1:
        raise ConfigurationError("depths must be at least 1")

    default_variant = GENERAL if task == CLUSTER else SYMMETRIC
    variant = _choice(ans, "variant", "ansatz", {GENERAL, SYMMETRIC}, default_variant)
    time_mode = _choice(ans, "time_mode", "ansatz", {FIXED, VARIATIONAL},
                        VARIATIONAL if task == CLUSTER else FIXED)
    if task == CLUSTER and (variant != GENERAL or time_mode != VARIATIONAL):
        raise ConfigurationError("cluster runs use the general variant with variational times")
    if task == CHEMISTRY and variant != SYMMETRIC:
        raise ConfigurationError("chemistry runs use the symmetric variant")

    if task == CLUSTER:
        if "inputs" in system:
            raise ConfigurationError("cluster runs take no input files")
        n_qubits = _integer(system, "n_qubits", "system", None)
        if n_qubits is None or n_qubits < 3:
            raise ConfigurationError("cluster runs need system.n_qubits >= 3")
        inputs: tuple[Path, ...] = ()
    else:
        if "n_qubits" in system:
            raise ConfigurationError("chemistry runs take the width from the input files")
        if "inputs" not in system:
            raise ConfigurationError("chemistry runs need system.inputs")
        n_qubits = None
        inputs = _resolve_inputs(system["inputs"], base)

    adam = AdamConfig(
        learning_rate=_number(opt, "learning_rate", "optimizer", 0.05),
        beta1=_number(opt, "beta1", "optimizer", 0.9),
        beta2=_number(opt, "beta2", "optimizer", 0.999),
        eps_stability=_number(opt, "eps_stability", "optimizer", 1e-8),
        max_steps=_integer(opt, "max_steps", "optimizer", 120),
        restarts=_integer(opt, "restarts", "optimizer", 20),
        learning_rate_final=_number(opt, "learning_rate_final", "optimizer", None),
    )
    target_error = _number(opt, "target_error", "optimizer", None)
    if target_error is not None and target_error < 0:
        raise ConfigurationError("optimizer.target_error must be non-negative")
    workers = _integer(opt, "workers", "optimizer", 1)
    if workers < 1:
        raise ConfigurationError("optimizer.workers must be at least 1")

    sampling = drift = None
    if noise is not None:
        if _flag(noise, "sampling", "noise", False):
            sampling = SamplingConfig(
                M0=_integer(noise, "M0", "noise", 1000),
                grouping=_flag(noise, "grouping", "noise", True),
                estimator_kind=_choice(noise, "estimator", "noise", {GAUSSIAN, BITSTRING}, GAUSSIAN),
            )
        if _flag(noise, "drift", "noise", False):
            drift = DriftConfig(
                epsilon=_number(noise, "epsilon", "noise", 0.01),
                drift_j0=_flag(noise, "drift_j0", "noise", True),
                drift_times=_flag(noise, "drift_times", "noise", True),
                drift_angles=_flag(noise, "drift_angles", "noise", True),
                granularity=_choice(noise, "granularity", "noise", {PER_ESTIMATION, PER_GROUP}, PER_ESTIMATION),
            )
    wallclock = WallclockModel(
        J0_physical=_number(wall, "J0_physical", "wallclock", WallclockModel().J0_physical),
        shot_overhead=_number(wall, "shot_overhead", "wallclock", WallclockModel().shot_overhead),
    )
    cfg = RunConfig(
        task=task, name=name, depths=depths, variant=variant, time_mode=time_mode,
        t0=_number(ans, "t0", "ansatz", 0.4), t_max=_number(ans, "t_max", "ansatz", 1.0),
        n_qubits=n_qubits, inputs=inputs,
        J0=_number(ham, "J0", "hamiltonian", 1.0), alpha=_number(ham, "alpha", "hamiltonian", 1.5),
        B=_number(ham, "B", "hamiltonian", 1.0),
        adam=adam, aggregation=_choice(opt, "aggregation", "optimizer", {MIN, MEAN}, MIN),
        target_error=target_error, workers=workers, sampling=sampling, drift=drift, wallclock=wallclock,
        master_seed=_integer(run, "master_seed", "run", 0), output=output,
        extended=_flag(run, "extended", "run", False), source=source,
    )
    if cfg.t0 < 0 or cfg.t_max <= 0 or cfg.J0 <= 0 or cfg.alpha <= 0:
        raise ConfigurationError("t0 must be non-negative and t_max, J0, alpha positive")
    if task == CHEMISTRY and "B" in ham:
        raise ConfigurationError("hamiltonian.B applies to the general variant only")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a config file. Shared by ``run`` and ``validate``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return parse_config(doc, base=path.resolve().parent, source=path.resolve())
