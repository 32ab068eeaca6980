"""Leader-follower mean-field LQ team solver.

Every entry point takes the experiment configuration as JSON text (see
docs/config.md); `example1_config()` returns the bundled example.
"""

import json

import numpy as np

from ._core import ConfigError, Error, example1_config, oracle_check
from . import _core

__all__ = [
    "ConfigError",
    "Error",
    "example1_config",
    "gains",
    "oracle_check",
    "simulate",
    "validate",
]


def validate(config):
    """Assumption checks as a dict with a "checks" list."""
    return json.loads(_core.validate(config))


def gains(config):
    """Gain and value matrices stacked along a leading time axis."""
    out = _core.gains(config)
    for key in ("L_dev", "L_bar", "M_dev", "M_aug"):
        out[key] = np.stack(out[key])
    return out


def simulate(config, seed=None):
    """One seeded rollout; states are indexed by t - 1."""
    out = _core.simulate(config, seed)
    for key in ("x0", "X", "u0", "U"):
        out[key] = np.stack(out[key])
    for key in ("mean_abs_dev", "stage_cost"):
        out[key] = np.asarray(out[key])
    return out
