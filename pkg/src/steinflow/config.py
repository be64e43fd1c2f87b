"""Experiment configuration: strict JSON schema, target/kernel/schedule construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import targets as targets_mod
from .dynamics import AdagradParams, AdjustOptimizer, Schedule, Variant
from .errors import ConfigError
from .kernels import KernelConfig, KernelFamily

_TARGET_KEYS = {
    "gaussian": {"d"},
    "joker": {"sigma", "seed_truth"},
    "low_rank_mixture": {"d", "literal_cos"},
    "logistic": {"dataset_path", "bias"},
}

_TOP_KEYS = {
    "target", "variant", "n_particles", "seed", "n_steps", "lambda", "n_adjust",
    "dt_adjust", "adjust_optimizer", "svgd_steps", "adagrad", "score_update",
    "kernel", "output_dir", "diagnostics_every", "ksd_every",
}

_ADAGRAD_KEYS = {"learning_rate", "decay", "eps"}
_KERNEL_KEYS = {"family", "sigma2"}


def _require(cfg: dict, key: str, kind, where: str):
    if key not in cfg:
        raise ConfigError(f"missing key '{key}' in {where}")
    value = cfg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"key '{key}' in {where} must be {kind.__name__}, got {value!r}")
    return value


def _reject_unknown(cfg: dict, allowed: set, where: str):
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}' in {where}")


@dataclass
class ExperimentConfig:
    """Validated experiment description; see README for the JSON schema."""

    target_spec: dict
    variant: Variant
    n_particles: int
    seed: int
    schedule: Schedule
    kernel: KernelConfig
    output_dir: Path
    diagnostics_every: int = 1
    ksd_every: int = 1
    base_dir: Path = field(default_factory=Path)

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be an object in {path}")
        return ExperimentConfig.from_dict(raw, base_dir=path.parent)

    @staticmethod
    def from_dict(raw: dict, base_dir=Path(".")) -> "ExperimentConfig":
        base_dir = Path(base_dir)
        _reject_unknown(raw, _TOP_KEYS, "config")

        target_spec = _require(raw, "target", dict, "config")
        kind = _require(target_spec, "kind", str, "target")
        if kind not in _TARGET_KEYS:
            raise ConfigError(f"unknown target kind '{kind}'")
        _reject_unknown(target_spec, _TARGET_KEYS[kind] | {"kind"}, f"target '{kind}'")
        if kind in ("gaussian", "low_rank_mixture"):
            _require(target_spec, "d", int, f"target '{kind}'")
        if kind == "logistic":
            dataset = _require(target_spec, "dataset_path", str, "target 'logistic'")
            resolved = (base_dir / dataset).resolve() if not Path(dataset).is_absolute() \
                else Path(dataset)
            if not resolved.exists():
                raise ConfigError(f"dataset_path does not exist: {dataset}")
            target_spec = dict(target_spec, dataset_path=str(resolved))

        variant_raw = _require(raw, "variant", str, "config")
        try:
            variant = Variant(variant_raw)
        except ValueError as exc:
            raise ConfigError(
                f"unknown variant '{variant_raw}' (expected one of "
                f"{[v.value for v in Variant]})") from exc

        n_particles = _require(raw, "n_particles", int, "config")
        if n_particles < 1:
            raise ConfigError(f"n_particles must be positive, got {n_particles}")
        seed = _require(raw, "seed", int, "config")

        adagrad_raw = raw.get("adagrad", {})
        if not isinstance(adagrad_raw, dict):
            raise ConfigError("key 'adagrad' must be an object")
        _reject_unknown(adagrad_raw, _ADAGRAD_KEYS, "adagrad")
        adagrad = AdagradParams(
            learning_rate=float(adagrad_raw.get("learning_rate", 0.1)),
            decay=float(adagrad_raw.get("decay", 0.9)),
            eps=float(adagrad_raw.get("eps", 1e-6)),
        )

        kernel_raw = raw.get("kernel", {"family": "squared_exponential"})
        if not isinstance(kernel_raw, dict):
            raise ConfigError("key 'kernel' must be an object")
        _reject_unknown(kernel_raw, _KERNEL_KEYS, "kernel")
        family = kernel_raw.get("family", "squared_exponential")
        try:
            kernel = KernelConfig(family=KernelFamily(family),
                                  sigma2=kernel_raw.get("sigma2"))
        except ValueError as exc:
            raise ConfigError(f"unknown kernel family '{family}'") from exc

        needs_grid = variant is not Variant.SVGD
        if needs_grid and "n_steps" not in raw:
            raise ConfigError(f"missing key 'n_steps' (required for variant '{variant.value}')")
        if variant is Variant.SVGD and "svgd_steps" not in raw:
            raise ConfigError("missing key 'svgd_steps' (required for variant 'svgd')")
        try:
            schedule = Schedule(
                n_steps=int(raw.get("n_steps", 1)),
                lam=float(raw.get("lambda", 1e-2)),
                variant=variant,
                n_adjust=int(raw.get("n_adjust", 0)),
                dt_adjust=float(raw.get("dt_adjust", 0.1)),
                adjust_optimizer=AdjustOptimizer(raw.get("adjust_optimizer", "plain")),
                svgd_steps=int(raw.get("svgd_steps", 100)),
                adagrad=adagrad,
                score_update=raw.get("score_update", "lemma"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        output_dir = Path(_require(raw, "output_dir", str, "config"))
        if not output_dir.is_absolute():
            output_dir = base_dir / output_dir
        diagnostics_every = int(raw.get("diagnostics_every", 1))
        if diagnostics_every < 1:
            raise ConfigError(f"diagnostics_every must be >= 1, got {diagnostics_every}")
        ksd_every = int(raw.get("ksd_every", 1))
        if ksd_every < 0:
            raise ConfigError(f"ksd_every must be >= 0, got {ksd_every}")

        return ExperimentConfig(
            target_spec=target_spec, variant=variant, n_particles=n_particles,
            seed=seed, schedule=schedule, kernel=kernel, output_dir=output_dir,
            diagnostics_every=diagnostics_every, ksd_every=ksd_every, base_dir=base_dir,
        )

    def build_target(self):
        """Instantiate the target; returns (target, test_set or None)."""
        spec = self.target_spec
        kind = spec["kind"]
        if kind == "gaussian":
            return targets_mod.gaussian_conjugate(int(spec["d"])), None
        if kind == "joker":
            rng = np.random.default_rng(int(spec.get("seed_truth", 0)))
            x_true = rng.standard_normal(2)
            return targets_mod.joker(float(spec.get("sigma", 0.3)), x_true, rng), None
        if kind == "low_rank_mixture":
            return targets_mod.low_rank_mixture(
                int(spec["d"]), bool(spec.get("literal_cos", False))), None
        data = targets_mod.load_dataset(spec["dataset_path"], seed=self.seed,
                                        bias=bool(spec.get("bias", True)))
        target = targets_mod.logistic_regression(data.train_features, data.train_labels)
        return target, (data.test_features, data.test_labels)
