"""Divide-and-conquer cooperative distributed MPC.

Thin wrapper over the C++ library.  Reports come back as JSON strings and are
decoded here; matrices are numpy arrays.
"""

import json

from ._dcmpc import (
    DcmpcError,
    Problem,
    lqr_gain,
    permutation,
    solve_discrete_lyapunov,
)

__all__ = [
    "DcmpcError",
    "Problem",
    "load",
    "lqr_gain",
    "permutation",
    "solve_discrete_lyapunov",
    "synthesis_report",
    "transform_report",
]


def load(path):
    """Load, assemble and certify a problem description file."""
    return Problem.from_file(str(path))


def synthesis_report(problem):
    return json.loads(problem.synthesis_report())


def transform_report(problem):
    return json.loads(problem.transform_report())
