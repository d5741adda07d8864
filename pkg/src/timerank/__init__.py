"""Time-aware evidence ranking and veracity classification for claim verification."""

from .temporal import (Claim, DeltaSet, EvidenceSet, EvidenceSnippet,
                       compute_delta_set, days_between, parse_date,
                       temporal_distance)
from .rankings import (GroundTruthRanking, RankingMethod, TEMPORAL_METHODS,
                       build_ground_truth, claim_closeness_ranking,
                       claim_recency_ranking, evidence_clustering_ranking,
                       evidence_recency_ranking, medoid, search_rank_ranking)
from .listmle import (ScoredRanking, canonical_permutation, listmle_gradient,
                      listmle_loss, permutation_log_prob)
from .model import (DomainSchema, ForwardTrace, Gradients, ModelParameters,
                    backward, classification_loss, domain_label_vector, forward,
                    fuse, init_parameters, load_checkpoint, ranking_score,
                    save_checkpoint)
from .optim import Adam, RMSProp
from .metrics import dispersion_std, kendall_tau_b, macro_f1, micro_f1
from .data import (ClaimInstance, group_by_domain, load_dataset, load_splits,
                   save_dataset, schema_from_instances)
from .synthetic import (SyntheticDataset, SyntheticSpec, decode_label,
                        generate_synthetic, write_splits)
from .training import (TrainingConfig, TrainingState, finetune, initial_state,
                       pretrain, select_best)
from .experiment import (ExperimentReport, MetricPair, ResultTable,
                         evaluate_instances, run_experiment)
from .errors import DataError, NumericalError

__version__ = "0.1.0"
