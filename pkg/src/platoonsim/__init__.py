"""Fault-tolerant cooperative cruise control simulation for train platoons.

A deterministic numpy library (plus a small CLI) that models multi-carriage
trains as coupled mass points with first-order traction actuators subject to
constant and periodic faults, estimates the unmeasured acceleration and
fault states with per-carriage observers, closes the loop with distributed
backstepping and barrier-constrained controllers, and checks the gap,
velocity-difference and convergence requirements on the result.
"""

from .autodiff import Dual, dual_eval, gradient
from .controller import (ConstraintSpec, FollowerGains, HeadGains,
                         TrainPairErrors, alpha1, alpha2, alpha3, barrier_phi,
                         barrier_psi, beta_functions, follower_control,
                         head_control, validate_initial, validate_parameters,
                         z_errors)
from .errors import (BarrierDomainError, ConfigurationError, IntegrationFault,
                     PlacementError, Violation)
from .faults import FaultModel, effective_fault, exosystem_matrix, fault_value
from .model import (CarriageParams, CompositeState, ConsistTopology,
                    CouplerParams, DavisCoefficients, PlantState,
                    composite_rhs, coupling_force, coefficient_b,
                    coefficient_d, davis_resistance, plant_rhs,
                    preliminary_control, traction_force)
from .observer import (AuxiliaryInputs, ObserverGains, ObserverState,
                       auxiliary_inputs, build_augmented_pair,
                       check_observability, linear_error_oracle, observer_rhs,
                       synthesize_gains)
from .presets import get_preset, paper_s5
from .reference import ReferencePhase, ReferenceProfile
from .simulator import (MonitorSpec, NoiseSpec, ScenarioConfig,
                        SimulationRecord, SummaryReport, fault_interval_errors,
                        inject_disturbance, monitor_requirements, rk4_step,
                        run_scenario, validate_config)

__version__ = "0.1.0"
