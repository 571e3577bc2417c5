"""Latent channel network models for undirected binary graphs.

Fits the latent channel model (edges arise from shared latent channels) and
the Poisson factorization baseline by EM, supports masking node pairs with
unknown status, predicts masked edges, and reproduces the synthetic
benchmark protocol with tie-aware AUC evaluation.
"""

from .bkn import (bkn_estep, bkn_fit, bkn_log_likelihood, bkn_predict, bkn_rate,
                  bkn_rates, bkn_step)
from .em import (FitConfig, FitReport, estep_edge, estep_nonedge, fit_efficient,
                 fit_naive, init_params, lcn_step_efficient, lcn_step_naive, predict)
from .evaluate import (CellResult, ExperimentResult, ExperimentSpec, SummaryRow,
                       auc, mse_true_probs, run_experiment, summarize)
from .graph import (Graph, MaskSet, NodeMetadata, apply_mask, degree,
                    load_edge_list, load_mask_file, load_metadata, mask_pairs,
                    sample_pair_classes, save_edge_list, save_mask_file,
                    save_metadata)
from .matrices import BknParams, ParamMatrix, load_matrix_tsv, save_matrix_tsv
from .model import (channel_posterior, channel_size, channel_usage,
                    edge_probability, expected_connections, log_likelihood,
                    pair_probabilities, sparsity)
from .report import (order_for_heatmap, read_pgm, render_heatmap, usage_table,
                     variance_ratio, write_pgm)
from .synth import (LcnGenSpec, SbmSpec, block_metadata, generate_lcn,
                    generate_sbm, sbm_bayes_auc)

__version__ = "0.1.0"
