"""DoA-aided OTFS link simulation with superimposed cross-pilot estimation."""

from .channel import (ChannelProfile, ChannelRealization, EnergyAllocation,
                      PathParams, SpatialObservation, draw_channel, observe,
                      solve_energy, steering_vector)
from .dd_core import (SPEED_OF_LIGHT, FrameConfig, apply_delay, apply_doppler,
                      apply_path_operator, apply_path_operator_adjoint, dzt,
                      idzt, unvec, vec)
from .detector import DetectionResult, ber, mf_mrc_detect, qam_demap, qam_map
from .estimator import (EstimateSet, PathEstimate, ProfilePair, SearchConfig,
                        baseline_estimate, beamform, delay_template,
                        doppler_template, estimate_channel, estimate_delay,
                        estimate_doppler, estimate_gain, profiles)
from .harness import (ExperimentConfig, ResultRow, default_config, load_config,
                      run_ber_vs_pdr, run_ber_vs_snr, run_papr_vs_ber, selftest)
from .pilots import (CrossPilots, MultiPilots, TxFrame, build_tx_frame,
                     cross_pilot_matrix, multi_pilot_matrix, papr_db,
                     uniform_pilot_grid)

__version__ = "0.1.0"
