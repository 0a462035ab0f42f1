"""Run configuration: an INI file with ``[paths]``, ``[ingest]``, ``[integrator]``, ``[training]`` and ``[eval]``.

Relative paths are resolved against the configuration file's directory.
Every key is optional; defaults are listed in :data:`DEFAULTS`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import CskgError
from .integrators import MODES, IntegratorConfig
from .midpaths import DEFAULT_HOPS, DEFAULT_PATH_CAP
from .predictor import PREDICTOR_MODES, TrainingConfig

DEFAULTS = {
    "paths": {
        "edges": "",
        "features": "",
        "classes": "",
        "relations": "",
        "triplets": "",
        "snapshot": "",
        "output_dir": "out",
    },
    "ingest": {"conceptnet_uris": "false", "language": ""},
    "integrator": {"mode": "neighbor", "hops": str(DEFAULT_HOPS), "sort_pool_k": "5", "path_cap": str(DEFAULT_PATH_CAP)},
    "training": {
        "seed": "0",
        "learning_rate": "0.1",
        "decay_steps": "0",
        "decay_rate": "10",
        "max_steps": "2000",
        "batch_size": "32",
        "clip_norm": "",
    },
    "eval": {"ks": "20,50,100"},
}


class ConfigError(CskgError, ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    edges: Path | None
    features: Path | None
    classes: Path | None
    relations: Path | None
    triplets: Path | None
    snapshot: Path | None
    output_dir: Path
    conceptnet_uris: bool
    language: str | None
    mode: str
    hops: int
    sort_pool_k: int
    path_cap: int
    training: TrainingConfig
    ks: tuple[int, ...]

    def integrator_config(self, feature_dim: int) -> IntegratorConfig:
        return IntegratorConfig(mode=self.mode, feature_dim=feature_dim, hops=self.hops,
                                sort_pool_k=self.sort_pool_k, path_cap=self.path_cap)

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        return replace(self, training=replace(self.training, seed=seed))

    def require(self, *names: str) -> None:
        """Check that the named input paths are configured and exist."""
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"[paths] {name} is not set")
            if not path.exists():
                raise ConfigError(f"{name} file not found: {path}")


def _path(base: Path, value: str) -> Path | None:
    value = value.strip()
    if not value:
        return None
    p = Path(value).expanduser()
    return p if p.is_absolute() else base / p


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_dict(DEFAULTS)
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        unknown = set(cp[section]) - set(DEFAULTS[section])
        if unknown:
            raise ConfigError(f"{path}: unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    base = path.parent
    p, tr, ig = cp["paths"], cp["training"], cp["integrator"]
    try:
        clip = tr.get("clip_norm").strip()
        training = TrainingConfig(
            seed=tr.getint("seed"),
            learning_rate=tr.getfloat("learning_rate"),
            decay_steps=tr.getint("decay_steps"),
            decay_rate=tr.getfloat("decay_rate"),
            max_steps=tr.getint("max_steps"),
            batch_size=tr.getint("batch_size"),
            clip_norm=float(clip) if clip else None,
        )
        ks = tuple(int(k) for k in cp["eval"]["ks"].split(",") if k.strip())
        mode = ig.get("mode").strip()
        hops, pool_k, cap = ig.getint("hops"), ig.getint("sort_pool_k"), ig.getint("path_cap")
        conceptnet_uris = cp["ingest"].getboolean("conceptnet_uris")
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if mode not in PREDICTOR_MODES:
        raise ConfigError(f"{path}: [integrator] mode must be one of {PREDICTOR_MODES}")
    if mode in MODES:
        try:
            IntegratorConfig(mode=mode, hops=hops, sort_pool_k=pool_k, path_cap=cap)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"{path}: [eval] ks must be positive integers")
    return RunConfig(
        edges=_path(base, p["edges"]),
        features=_path(base, p["features"]),
        classes=_path(base, p["classes"]),
        relations=_path(base, p["relations"]),
        triplets=_path(base, p["triplets"]),
        snapshot=_path(base, p["snapshot"]),
        output_dir=_path(base, p["output_dir"]) or base,
        conceptnet_uris=conceptnet_uris,
        language=cp["ingest"]["language"].strip() or None,
        mode=mode,
        hops=hops,
        sort_pool_k=pool_k,
        path_cap=cap,
        training=training,
        ks=ks,
    )
