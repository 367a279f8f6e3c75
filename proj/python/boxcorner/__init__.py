"""Corner-free sets, box norms and density increments on F_p^n.

Sets are lists of points (a, b, c) of H^3 with H = F_p^n; an element of H is
its base-p code. Reports come back as plain dicts.
"""

import json

from . import _core
from ._core import InvariantViolation, PreconditionError, box_norm, count_corners, u3_norm

__all__ = [
    "InvariantViolation",
    "PreconditionError",
    "admissible",
    "box_norm",
    "count_corners",
    "decide",
    "find_corner",
    "max_cornerfree",
    "pipeline",
    "trace_csv",
    "u3_norm",
]


def find_corner(points, space):
    w = _core.find_corner([list(p) for p in points], space)
    return None if w is None else json.loads(w)


def decide(points, space, kappa=1.0):
    return json.loads(_core.decide([list(p) for p in points], space, kappa))


def admissible(system, eps, C=64.0, kappa=0.01):
    return json.loads(_core.admissible(json.dumps(system), eps, C, kappa))


def pipeline(points, space, config=None):
    cfg = "" if config is None else json.dumps(config)
    return json.loads(_core.pipeline([list(p) for p in points], space, cfg))


def trace_csv(trace):
    return _core.trace_csv(json.dumps(trace))


def max_cornerfree(N, d=2):
    return json.loads(_core.max_cornerfree(N, d))
