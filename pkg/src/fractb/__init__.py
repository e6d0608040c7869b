"""Fractional-order tuberculosis model: simulation, R0 sensitivity,
optimal treatment control and cost-effectiveness reporting."""

__version__ = "0.1.0"

from .control import (
    ControlPath,
    CostatePath,
    FocpConfig,
    FocpSolution,
    adjoint_rhs,
    cost_functional,
    optimal_control_law,
    solve_costates,
    solve_focp,
)
from .costeff import CostEffReport, averted_cases, efficacy, summarize, total_cost, weight_sweep
from .fracode import (
    GridFunction,
    TimeGrid,
    abm_corrector_weights,
    abm_predictor_weights,
    mittag_leffler,
    solve_caputo_ivp,
)
from .model import (
    BASELINE,
    PUBLISHED_EQUILIBRIUM,
    ModelParams,
    StateVec,
    Trajectory,
    endemic_equilibrium,
    r0,
    simulate,
    tb_rhs,
)
from .scenario import Scenario, load_scenario
from .sensitivity import perturbation_experiment, sensitivity_index, sensitivity_table
