"""Joint IRS phase and hybrid beamformer optimization for mmWave wiretap
channels, with a Monte-Carlo experiment harness."""

from .channel import (ChannelParams, ChannelSet, PhaseVector, SystemGeometry,
                      array_response, dump_channel_set, equivalent_channel,
                      generate_channel_set, generate_link_channel,
                      load_channel_set, paper_geometry, path_gain)
from .harness import (ExperimentConfig, ResultRow, convergence_run,
                      dbm_to_watts, default_config, desk_experiment_config,
                      load_config, paper_scale_config, run_strategy,
                      save_config, sweep)
from .metrics import (HybridBeamformer, lower_bound_secrecy, ofpb_objective,
                      secrecy_capacity, secrecy_capacity_effective,
                      transmit_power)
from .nsjhb import (Dictionary, FdbSolution, NsjhbConfig, NsjhbResult,
                    PowerSplit, an_nullspace, build_dictionary,
                    dump_beamformer, load_beamformer, omp_factorize,
                    run_nsjhb, solve_fdb)
from .ofpb import (AdmmParams, AdmmState, ConditionReport, ConvergenceTrace,
                   OfpbOperatorSet, SolverError, augmented_lagrangian,
                   build_operators, ca_admm_solve, check_convergence_conditions,
                   eval_f, grad_fy, l_y2_constant, lifted_quartic,
                   lipschitz_bound, real_lift, run_ca_admm, update_duals,
                   update_x, update_y1, update_y2)

__version__ = "0.1.0"
