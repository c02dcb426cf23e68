"""needlegauge: needle-infusion evaluation for LLM information extraction.

Plant synthetic ground truth ("needles") into real documents, run
schema-guided extraction through any OpenAI-compatible endpoint (or a
deterministic mock), and measure how much of the planted information the
model actually recovered — plus a family of reference-free summary-quality
scores and a lost-in-the-middle probe.
"""

from .chunking import Piece, split_document, split_into
from .errors import (
    BudgetExceeded,
    ConfigError,
    CorruptionError,
    EmptyDocument,
    EmptyEntityList,
    EmptyInput,
    FillRatioInfeasible,
    FingerprintMismatch,
    GatewayError,
    InfusionError,
    MalformedResponse,
    MissingPairError,
    NeedlegaugeError,
    NoveltyFailure,
    ResponseValidationError,
    SchemaParseError,
    SchemaValidationError,
    ScriptExhausted,
    SplitInfeasible,
    TransportError,
    UnparseableVerdict,
    ZeroMean,
)
from .extraction import (
    ExtractionConfig,
    ExtractionRun,
    continue_extraction,
    extract_document,
    extract_pieces,
    find_json_payload,
    parse_entities,
)
from .forge import (
    InfusedDocument,
    Needle,
    Placement,
    annotate_needle,
    generate_needles,
    infuse,
    load_needles,
    needles_from_json,
    needles_to_json,
    save_needles,
    strip_needles,
)
from .gateway import (
    ChatMessage,
    DirectoryBackend,
    Gateway,
    GatewayConfig,
    HttpBackend,
    ResponderBackend,
    ScriptedBackend,
    Thread,
    estimate_tokens,
)
from .litm import LitmResult, aggregate_probes, litm_csv, probe
from .matching import (
    CriterionResult,
    MineaReport,
    aggregate_minea,
    compare_models,
    match_k,
    match_llm,
    match_n,
    match_ns,
    minea,
)
from .metrics import (
    ScoreVector,
    bias_avoidance,
    incompleteness,
    redundancy,
    redundancy_avoidance,
    relevance,
    relevance_spread,
    score_vector,
    semantic_similarity,
)
from .schema import (
    Entity,
    PropertySpec,
    Provenance,
    Schema,
    SchemaSuggestion,
    load_schema,
    parse_schema,
    serialize_schema,
    suggest_schema,
    validate_entity,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "ChatMessage",
    "ConfigError",
    "CorruptionError",
    "CriterionResult",
    "DirectoryBackend",
    "EmptyDocument",
    "EmptyEntityList",
    "EmptyInput",
    "Entity",
    "ExtractionConfig",
    "ExtractionRun",
    "FillRatioInfeasible",
    "FingerprintMismatch",
    "Gateway",
    "GatewayConfig",
    "GatewayError",
    "HttpBackend",
    "InfusedDocument",
    "InfusionError",
    "LitmResult",
    "MalformedResponse",
    "MineaReport",
    "MissingPairError",
    "Needle",
    "NeedlegaugeError",
    "NoveltyFailure",
    "Piece",
    "Placement",
    "PropertySpec",
    "Provenance",
    "ResponderBackend",
    "ResponseValidationError",
    "Schema",
    "SchemaParseError",
    "SchemaSuggestion",
    "SchemaValidationError",
    "ScoreVector",
    "ScriptExhausted",
    "ScriptedBackend",
    "SplitInfeasible",
    "Thread",
    "TransportError",
    "UnparseableVerdict",
    "ZeroMean",
    "aggregate_minea",
    "aggregate_probes",
    "annotate_needle",
    "bias_avoidance",
    "compare_models",
    "continue_extraction",
    "estimate_tokens",
    "extract_document",
    "extract_pieces",
    "find_json_payload",
    "generate_needles",
    "incompleteness",
    "infuse",
    "litm_csv",
    "load_needles",
    "load_schema",
    "match_k",
    "match_llm",
    "match_n",
    "match_ns",
    "minea",
    "needles_from_json",
    "needles_to_json",
    "parse_entities",
    "parse_schema",
    "probe",
    "redundancy",
    "redundancy_avoidance",
    "relevance",
    "relevance_spread",
    "save_needles",
    "score_vector",
    "semantic_similarity",
    "serialize_schema",
    "split_document",
    "split_into",
    "strip_needles",
    "suggest_schema",
    "validate_entity",
    "__version__",
]
