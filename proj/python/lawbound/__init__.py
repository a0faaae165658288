"""Python access to the lawbound core: fields, transport metrics, Euler flow, bounds and scores."""

import json as _json

from ._lawbound import (
    LawboundError,
    capacity_coverage,
    constant_coefficient_bound,
    criterion_name,
    crps,
    crps_point,
    divergence_norm,
    energy_score,
    evolve,
    gronwall_recursion,
    inner,
    l2_norm,
    leray_project,
    moment,
    pf_identity,
    project_leq,
    random_divfree,
    rollout_bound,
    tail,
    taylor_green,
    w1,
    w1_1d,
    w2,
)
from ._lawbound import run_criterion as _run_criterion


def run_criterion(id, quick=True, seed=1):
    """Run one acceptance criterion and return its report as a dict."""
    return _json.loads(_run_criterion(id, quick, seed))


__all__ = [name for name in dir() if not name.startswith("_")]
