"""Exact privacy guarantees of gossip protocols, checked by Monte-Carlo simulation."""

from .graphs import (Graph, GraphError, GraphMetrics, GraphSpec, build_graph, complete_graph,
                     decay_centrality, grid_graph, load_graph, path_graph, ring_graph, save_graph,
                     shortest_paths, star_graph)
from .chain import (SpreadMatrix, absorbing_variant, matrix_power, spread_probabilities,
                    transition_matrix, truncated_series_oracle)
from .privacy import (INF, AnalysisParams, PrivacyGuarantee, candidate_privacy, delayed_general_bounds,
                      delayed_private_gossip, gaussian_dp_convert, gaussian_dp_params, lemma1_delta_bound,
                      private_gossip, theorem1_bounds, wireless_bounds, wireless_private_gossip)
from .sim import (SimConfig, SimStats, StopCondition, TrialOutcome, estimate_first_observation_distribution,
                  estimate_spread_probability, measure_spreading_time, run_trial, run_trials)

__version__ = "0.1.0"
