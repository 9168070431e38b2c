"""Mild solutions of SPDEs with Levy noise: simulation and theorem checks."""

import json as _json

from . import _core
from ._core import ConfigurationError, ContractViolation, compute_constants, ks_two_sample, models, subcommands

__all__ = [
    "ConfigurationError",
    "ContractViolation",
    "compute_constants",
    "config_hash",
    "ks_two_sample",
    "models",
    "resolvent",
    "run",
    "subcommands",
    "yosida",
]


def _spec(f):
    return f if isinstance(f, str) else _json.dumps(f)


def resolvent(f, lam, x):
    """J_lam x = (I - lam f)^{-1} x for a catalog function name or spec dict."""
    return _core.resolvent(_spec(f), lam, x)


def yosida(f, lam, x):
    return _core.yosida(_spec(f), lam, x)


def config_hash(config):
    return _core.config_hash(_json.dumps(config))


def run(subcommand, config, seed=None, paths=None):
    """Runs a CLI subcommand in memory. Reports come back as dicts, artifacts as {name: text}."""
    out = _core.run(subcommand, _json.dumps(config), seed, paths)
    out["reports"] = [_json.loads(r) for r in out["reports"]]
    return out
