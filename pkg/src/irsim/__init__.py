"""Frequency-selective IRS reflection modeling and joint transmit
beamforming / reflection design for multi-cell multi-band downlinks.

The package covers the varactor circuit model and its simplified per-band
phase abstraction (reflection), scenario and channel generation (scenario),
power minimization under SINR constraints (power_min, selection) and
sum-rate maximization (sum_rate), plus a Monte-Carlo experiment harness
with CSV output (harness).
"""

from .reflection import (CircuitParams, FrequencyPlan, DEFAULT_CIRCUIT,
                         DEFAULT_FREQUENCIES, PartitionOverlapError,
                         ReflectionState, impedance, partition_capacitance,
                         practical_reflection, random_state,
                         reflection_coefficient, reflection_matrix,
                         wrap_phase)
from .scenario import (ChannelSet, Geometry, SystemConfig, db_to_linear,
                       dbm_to_watts, draw_channels, linear_to_db, path_gain,
                       place_scenario, trial_rng, watts_to_dbm)
from .core import (bs_power, effective_channel, effective_channels_bs, mse,
                   sinr, sum_rate as sum_rate_of, total_power)
from .power_min import (InfeasibleError, PowerMinReport, build_qos_quadratics,
                        optimize_phase_manifold, per_bs_bcd, run_algorithm1,
                        solve_beamforming_socp)
from .selection import (SelectionResult, binary_violation,
                        build_selection_quadratics, penalized_objective,
                        run_selection)
from .sum_rate import (SumRateResult, run_algorithm2, update_element,
                       update_mu, update_nu, update_w)
from .harness import (EXPERIMENTS, ExperimentSpec, ResultRow, SCHEMES,
                      model_error_study, run_baseline, run_experiment,
                      true_circuit_design, write_csv)

__version__ = "0.1.0"
