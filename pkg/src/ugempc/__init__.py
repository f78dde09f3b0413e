"""ugempc: sampling-based trajectory optimization and MPC.

Modules
-------
vehicle      kinematic bicycle dynamics, beliefs, control sequences
uncertainty  trajectory distributions and Hellinger-distance separation
world        costmaps, footprints, sensors, procedural environments
cost         unified trajectory cost (collision freeze, goal truncation)
planners     UGE-TO, UGE-MPC, MPPI and log-MPPI steps
bench        scenario specs, experiment runners, report emission
"""
from .vehicle import (Control, ControlSequence, GaussianBelief, State,
                      VehicleParams, clamp, clamp_sequence, jacobian,
                      propagate_covariance, rollout, step)
from .uncertainty import (NumericalDegeneracyError, PerturbationModel,
                          PropagationContext, SeparationConfig,
                          TrajectoryDistribution, build_distribution,
                          hellinger_sq_block, hellinger_sq_trajectory,
                          mean_pairwise_separation, perturb, separate,
                          separation_score)
from .world import (ClutterSpec, Costmap, FeasibilityError, Footprint,
                    FootprintCost, ObstacleSet, SensorModel, footprint_cost,
                    generate_cluttered, is_goal_reached, rasterize,
                    visible_costmap)
from .cost import CostWeights, GoalSpec, action_cost, trajectory_cost
from .planners import (PlannerConfig, PlannerState, PlanningContext,
                       StepDiagnostics, mppi_iteration, mppi_step,
                       mppi_update, nln_perturb, select_best, shift_sequence,
                       uge_iteration, uge_mpc_step, uge_to)
from .bench import (METHODS, AggregateStats, RunRecord, ScenarioSpec,
                    TrialResult, emit_report, preset_scenarios, presets,
                    render_report_dir, run_mpc_experiment, run_scenarios,
                    run_to_experiment)
from .rngstream import RngStream

__version__ = "0.1.0"
