"""Load an :class:`ExperimentConfig` from a TOML file.

::

    scheme = "meave"
    family = "hexa-dual"
    resolutions = [8, 16, 32, 64]
    epsilon = [1e-2]          # a single number is accepted too
    stab = "sv"
    out = "results"
    seed = 0
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .experiments import ConfigError, ExperimentConfig

__all__ = ["load_config", "config_from_dict"]

_KEYS = {
    "scheme": "scheme",
    "family": "family",
    "resolutions": "resolutions",
    "epsilon": "epsilons",
    "epsilons": "epsilons",
    "stab": "stab",
    "rule": "rule",
    "out": "out_dir",
    "seed": "seed",
    "tri_kind": "tri_kind",
    "problem": "problem",
    "deterministic": "deterministic",
}


def config_from_dict(data: dict, base: Path | None = None) -> ExperimentConfig:
    unknown = sorted(set(data) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("scheme", "family", "resolutions"):
        if key not in data:
            raise ConfigError(f"missing config key {key!r}")
    kw = {_KEYS[k]: v for k, v in data.items()}
    eps = kw.get("epsilons")
    if eps is not None and not isinstance(eps, list):
        kw["epsilons"] = [eps]
    if base is not None and "out_dir" in kw and not Path(kw["out_dir"]).is_absolute():
        kw["out_dir"] = base / kw["out_dir"]
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Parse a config file; relative output paths resolve against its directory."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data, base=path.parent)
