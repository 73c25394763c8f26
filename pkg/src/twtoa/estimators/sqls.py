"""Squared-range least squares solved exactly as a GTRS, with one reweighting pass."""
from __future__ import annotations

import numpy as np

from ..gtrs import build_gtrs, extract_estimate, gtrs_weights, solve_gtrs
from ..model import EstimateReport, MeasurementBatch


def sqls(batch: MeasurementBatch, anchors, c, sigma, gamma) -> EstimateReport:
    anchors = np.asarray(anchors, dtype=float)
    p1 = build_gtrs(batch, anchors, c)
    s1 = solve_gtrs(p1)
    r1 = extract_estimate(s1, "SQLS")
    w = gtrs_weights(r1.position, r1.alpha, anchors, sigma, gamma)
    p2 = build_gtrs(batch, anchors, c, weights=w)
    s2 = solve_gtrs(p2)
    r2 = extract_estimate(s2, "SQLS")
    diagnostics = dict(r2.diagnostics)
    diagnostics["pass1"] = r1.diagnostics
    diagnostics["pass1_position"] = r1.position
    diagnostics["pass1_skew"] = r1.skew
    diagnostics["pass2_objective"] = s2.objective
    diagnostics["pass1_objective_in_pass2_weights"] = p2.objective(s1.y)
    return EstimateReport(
        method="SQLS",
        position=r2.position,
        skew=r2.skew,
        status=r2.status,
        iterations=s1.bisection_steps + s2.bisection_steps,
        objective=s2.objective,
        diagnostics=diagnostics,
    )
