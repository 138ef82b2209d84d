"""Per-token Shapley attribution over two-modality inputs.

The engine treats a multimodal autoregressive scorer as a cooperative
game: feature slots (grouped into mask-level players) are the players,
and the payoff for a coalition is the log-probability of each token of a
fixed output sequence when only that coalition's slots are present. From
the resulting player-by-token attribution matrix it derives the overall
audio/video balance, its trajectory across decoding, and the temporal
alignment between input positions and output tokens.
"""

from .ablation import AblationError, AblationResult, ablate_modality
from .bridge import (
    BridgeClient,
    BridgeConfig,
    BridgedOracle,
    BridgeError,
    BridgeTimeout,
    HandshakeError,
    ProtocolError,
    RemoteScoreError,
    StdioTransport,
    TcpTransport,
    TransportError,
    UtteranceManifest,
)
from .estimators import (
    EXACT_PLAYER_CAP,
    BudgetError,
    EstimatorConfig,
    EstimatorError,
    Method,
    PlayerCapError,
    estimate,
    estimate_exact,
    estimate_permutation,
    estimate_sampling,
)
from .game import (
    AUDIO,
    MODALITIES,
    VIDEO,
    CoalitionMask,
    FeaturePartition,
    GameError,
    MaskError,
    OracleContractError,
    PartitionError,
    ScoringOracle,
    ShapleyMatrix,
    checked_score,
    expand_mask,
    make_partition,
    score_coalitions,
)
from .metrics import (
    AlignmentMatrix,
    GenerativeTrajectory,
    GlobalBalance,
    MetricError,
    aggregate_mean,
    alignment_shap,
    diagonal_alignment_score,
    generative_shap,
    global_shap,
    split_ranges,
)
from .reference import BRUTE_FORCE_PLAYER_CAP, brute_force_shapley
from .report import (
    AnalysisReport,
    AnalysisRequest,
    ConfigError,
    OracleFatalError,
    RunConfig,
    load_run_config,
    run,
)
from .synthetic import (
    ADDITIVE,
    BLOCK_DIAGONAL,
    PAIRWISE_INTERACTION,
    SNR_MIXTURE,
    TOY_KINDS,
    ToyGameSpec,
    ToyOracle,
    ToySpecError,
    build_toy_oracle,
    reliability_from_snr_db,
    toy_oracle_from_table,
    toy_spec_from_table,
    toy_spec_to_table,
)
from .wer import wer

__version__ = "0.1.0"

__all__ = [
    "ablate_modality",
    "AblationError",
    "AblationResult",
    "aggregate_mean",
    "alignment_shap",
    "AlignmentMatrix",
    "AnalysisReport",
    "AnalysisRequest",
    "AUDIO",
    "BLOCK_DIAGONAL",
    "BridgeClient",
    "BridgeConfig",
    "BridgedOracle",
    "BridgeError",
    "BridgeTimeout",
    "brute_force_shapley",
    "BRUTE_FORCE_PLAYER_CAP",
    "BudgetError",
    "build_toy_oracle",
    "checked_score",
    "CoalitionMask",
    "ConfigError",
    "diagonal_alignment_score",
    "estimate",
    "estimate_exact",
    "estimate_permutation",
    "estimate_sampling",
    "EstimatorConfig",
    "EstimatorError",
    "EXACT_PLAYER_CAP",
    "expand_mask",
    "FeaturePartition",
    "GameError",
    "generative_shap",
    "GenerativeTrajectory",
    "global_shap",
    "GlobalBalance",
    "HandshakeError",
    "load_run_config",
    "make_partition",
    "MaskError",
    "Method",
    "MetricError",
    "MODALITIES",
    "OracleContractError",
    "OracleFatalError",
    "PAIRWISE_INTERACTION",
    "PartitionError",
    "PlayerCapError",
    "ProtocolError",
    "reliability_from_snr_db",
    "RemoteScoreError",
    "run",
    "RunConfig",
    "ScoringOracle",
    "score_coalitions",
    "ShapleyMatrix",
    "SNR_MIXTURE",
    "split_ranges",
    "StdioTransport",
    "TcpTransport",
    "toy_oracle_from_table",
    "toy_spec_from_table",
    "toy_spec_to_table",
    "ToyGameSpec",
    "ToyOracle",
    "ToySpecError",
    "TOY_KINDS",
    "TransportError",
    "UtteranceManifest",
    "ADDITIVE",
    "VIDEO",
    "wer",
]
