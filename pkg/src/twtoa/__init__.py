"""Two-way time-of-arrival positioning of a single target with an unknown clock skew."""
from .crlb import crlb_position, fisher
from .errors import (ConfigError, Degenerate, ExperimentFailure, IllConditioned, NoRoot, NonFinite,
                     RankDeficient, Singular, TwToaError)
from .estimators import CccpConfig, MleState, amle, cccp_socp, lls, mle, sqls
from .gtrs import GtrsProblem, GtrsSolution, build_gtrs, extract_estimate, solve_gtrs
from .model import (ClockModel, EstimateReport, MeasurementBatch, NetworkScenario, SolverStatus, UnitScale,
                    predict_twtoa, residual_l1)
from .simulator import NlosConfig, SimConfig, contaminate, make_rng, simulate
from .socp import ConeBlock, SocpProblem, SocpSolution, SocpStatus, solve_socp

__version__ = "0.1.0"
