"""Rate/explain/cite evaluation pipeline with verbatim citation checking."""

from .datagen import FilterStats, PipelineConfig, SourceRecord, filter_one, generate
from .errors import (
    ClaimNotFoundError,
    DuplicateContextIdError,
    EmptyInputError,
    EmptyRequiredError,
    HaluGoldError,
    LengthMismatchError,
    ModeMismatchError,
    RecError,
    SnippetNotFoundError,
    TemplateError,
    UnknownContextIdError,
    UsageError,
)
from .gateway import (
    API_KEY_ENV,
    AuthFailureError,
    Backend,
    BackendRefusalError,
    BackendReply,
    CancelledError,
    CompletionRequest,
    CompletionResult,
    Gateway,
    GatewayError,
    HttpBackend,
    MockBackend,
    TransportError,
    load_mock_script,
    prompt_sha256,
    script_responder,
)
from .metrics import (
    PRF,
    GoldCitationSet,
    OrderBiasResult,
    binary_accuracy,
    citation_prf,
    gold_intersection,
    inter_rater_agreement,
    order_bias,
    parse_pairwise_verdict,
    win_rate,
)
from .model import (
    NO_SUPPORT_ID,
    CitationMode,
    CitationSnippet,
    ContextDocument,
    EvaluationMetric,
    FilterStatus,
    InvalidModelError,
    MetricName,
    PairwiseJudgment,
    PointwiseVerdict,
    PresentationOrder,
    QualityEvalOutput,
    RagCitationEntry,
    RagCitationOutput,
    SourceKind,
    Statement,
    TaskType,
    UnifiedTaskRecord,
    Verdict,
    metric_by_name,
    metric_catalog,
    parse_citation_mode,
)
from .prompts import (
    PromptText,
    TemplateId,
    TemplateSet,
    build_grounding_prompt,
    build_pairwise_prompt,
    build_pointwise_prompt,
    build_quality_prompt,
    build_rag_cite_prompt,
    render_chunks_block,
)
from .render import (
    Reference,
    RenderedText,
    assign_reference_numbers,
    render_quality,
    render_rag,
)
from .schema_io import (
    SchemaError,
    ValidationReport,
    Violation,
    extract_first_json_object,
    parse_pointwise,
    parse_quality_output,
    parse_rag_output,
    read_jsonl,
    serialize_canonical,
    to_json_value,
    try_parse_pointwise,
    try_parse_quality_output,
    try_parse_rag_output,
    write_jsonl,
)
from .tokens import DEFAULT_TOKENS_PER_WORD, estimate_tokens
from .verify import (
    MatchPolicy,
    MatchResult,
    VerificationReport,
    normalize,
    parse_match_policy,
    segment_sentences,
    snap_to_sentences,
    verify_quality_output,
    verify_rag_output,
    verify_snippet,
)

__version__ = "0.1.0"

__all__ = [
    "API_KEY_ENV",
    "AuthFailureError",
    "Backend",
    "BackendRefusalError",
    "BackendReply",
    "CancelledError",
    "CitationMode",
    "CitationSnippet",
    "ClaimNotFoundError",
    "CompletionRequest",
    "CompletionResult",
    "ContextDocument",
    "DEFAULT_TOKENS_PER_WORD",
    "DuplicateContextIdError",
    "EmptyInputError",
    "EmptyRequiredError",
    "EvaluationMetric",
    "FilterStats",
    "FilterStatus",
    "Gateway",
    "GatewayError",
    "GoldCitationSet",
    "HaluGoldError",
    "HttpBackend",
    "InvalidModelError",
    "LengthMismatchError",
    "MatchPolicy",
    "MatchResult",
    "MetricName",
    "MockBackend",
    "ModeMismatchError",
    "NO_SUPPORT_ID",
    "OrderBiasResult",
    "PRF",
    "PairwiseJudgment",
    "PipelineConfig",
    "PointwiseVerdict",
    "PresentationOrder",
    "PromptText",
    "QualityEvalOutput",
    "RagCitationEntry",
    "RagCitationOutput",
    "RecError",
    "Reference",
    "RenderedText",
    "SchemaError",
    "SnippetNotFoundError",
    "SourceKind",
    "SourceRecord",
    "Statement",
    "TaskType",
    "TemplateError",
    "TemplateId",
    "TemplateSet",
    "TransportError",
    "UnifiedTaskRecord",
    "UnknownContextIdError",
    "UsageError",
    "ValidationReport",
    "Verdict",
    "VerificationReport",
    "Violation",
    "assign_reference_numbers",
    "binary_accuracy",
    "build_grounding_prompt",
    "build_pairwise_prompt",
    "build_pointwise_prompt",
    "build_quality_prompt",
    "build_rag_cite_prompt",
    "citation_prf",
    "estimate_tokens",
    "extract_first_json_object",
    "filter_one",
    "generate",
    "gold_intersection",
    "inter_rater_agreement",
    "load_mock_script",
    "metric_by_name",
    "metric_catalog",
    "normalize",
    "order_bias",
    "parse_citation_mode",
    "parse_match_policy",
    "parse_pairwise_verdict",
    "parse_pointwise",
    "parse_quality_output",
    "parse_rag_output",
    "prompt_sha256",
    "read_jsonl",
    "render_chunks_block",
    "render_quality",
    "render_rag",
    "segment_sentences",
    "serialize_canonical",
    "snap_to_sentences",
    "to_json_value",
    "try_parse_pointwise",
    "try_parse_quality_output",
    "try_parse_rag_output",
    "verify_quality_output",
    "verify_rag_output",
    "verify_snippet",
    "win_rate",
    "write_jsonl",
]
