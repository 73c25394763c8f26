"""Position and clock-skew estimators sharing MeasurementBatch in, EstimateReport out."""
from .cccp import CccpConfig, cccp_socp
from .lls import lls
from .mle import MleState, amle, mle
from .sqls import sqls

METHODS = ("MLE", "AMLE", "LLS", "SQLS", "CCCP")

__all__ = ["CccpConfig", "MleState", "METHODS", "amle", "cccp_socp", "lls", "mle", "sqls"]
