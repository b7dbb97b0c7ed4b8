"""AoI-aware scheduling for mobile edge computing.

Thin wrappers over the compiled ``_aoimec`` module. Keyword overrides use the
same keys as the configuration files (``lambda_init=0``, ``n_wds=3``, ...).
"""

from __future__ import annotations

from . import _aoimec
from ._aoimec import ConfigError, actor_flops, selftest, value_flops

__all__ = [
    "ConfigError",
    "Environment",
    "actor_flops",
    "config_text",
    "run",
    "selftest",
    "sweep_budget",
    "sweep_n",
    "value_flops",
]


def _text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_text(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _overrides(kwargs: dict) -> dict[str, str]:
    return {k: _text(v) for k, v in kwargs.items()}


def config_text(profile: str = "desk", **overrides) -> str:
    return _aoimec.config_text(profile, _overrides(overrides))


def run(profile: str = "smoke", policy: str = "dpds", seed: int = 1, out_dir: str = "",
        **overrides) -> dict:
    """One seeded run. Returns ``{"summary": {...}, "trace": {column: [...]}}``."""
    return _aoimec.run(profile, policy, seed, out_dir, _overrides(overrides))


def sweep_n(profile: str, ns, policies, seeds, jobs: int = 1, **overrides) -> list[dict]:
    return _aoimec.sweep_n(profile, list(ns), list(policies), list(seeds), jobs,
                           _overrides(overrides))


def sweep_budget(profile: str, multipliers, policies, seeds, jobs: int = 1,
                 **overrides) -> list[dict]:
    return _aoimec.sweep_budget(profile, list(multipliers), list(policies), list(seeds), jobs,
                                _overrides(overrides))


class Environment(_aoimec.Environment):
    def __init__(self, profile: str = "desk", seed: int = 1, **overrides):
        super().__init__(profile, seed, _overrides(overrides))
