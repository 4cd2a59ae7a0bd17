"""Synthetic evaluation-data generation with strict keep/reject filtering.

Source records fan out into prompts (pointwise records once per metric,
citation records once each), completions come back through the gateway, and
each raw completion passes through the same gauntlet in a fixed order: JSON
parse + schema validation, verbatim verification (citation tasks only), then
the length budget. The first failure decides the rejection reason, so the
stats buckets partition the batch exactly.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import schema_io
from .errors import RecError, UnknownContextIdError
from .gateway import CancelledError, CompletionRequest, Gateway, GatewayError
from .model import (
    ContextDocument,
    EvaluationMetric,
    FilterStatus,
    SourceKind,
    TaskType,
    UnifiedTaskRecord,
    metric_by_name,
    metric_catalog,
    parse_citation_mode,
)
from .prompts import (
    PromptText,
    TemplateSet,
    build_pointwise_prompt,
    build_quality_prompt,
    build_rag_cite_prompt,
)
from .tokens import TokenEstimator, estimate_tokens
from .verify import MatchPolicy, verify_quality_output, verify_rag_output

__all__ = [
    "SourceRecord",
    "FilterStats",
    "FilterOutcome",
    "PipelineConfig",
    "length_filter",
    "filter_one",
    "generate",
]

logger = logging.getLogger(__name__)

#: Inclusive prompt+completion token budget for kept records.
DEFAULT_MAX_TOKENS = 6144


@dataclass(frozen=True)
class SourceRecord:
    """One raw input to synthesize an evaluation example from.

    inputs carries task-shaped slots: pointwise wants query_with_context and
    answer; citation wants either task_prompt and generation
    (content-quality flavor) or chunks and answer (retrieval flavor, chunks
    being a list of {context_id, body} objects, optionally with a mode).
    """

    source_dataset: str
    task_type: TaskType
    inputs: dict[str, Any] = field(default_factory=dict)

    def citation_flavor(self) -> str:
        if "chunks" in self.inputs:
            return "rag"
        return "quality"

    def violations(self) -> list[str]:
        out = []
        if not self.source_dataset:
            out.append("source_dataset must be non-empty")
        if self.task_type is TaskType.POINTWISE_EVAL:
            for slot in ("query_with_context", "answer"):
                if not str(self.inputs.get(slot, "")).strip():
                    out.append(f"pointwise record needs a non-empty {slot!r} input")
        elif self.task_type is TaskType.CITATION:
            if self.citation_flavor() == "rag":
                chunks = self.inputs.get("chunks")
                if not isinstance(chunks, list) or not chunks:
                    out.append("retrieval citation record needs a non-empty 'chunks' list")
                if not str(self.inputs.get("answer", "")).strip():
                    out.append("retrieval citation record needs a non-empty 'answer' input")
            else:
                for slot in ("task_prompt", "generation"):
                    if not str(self.inputs.get(slot, "")).strip():
                        out.append(f"citation record needs a non-empty {slot!r} input")
        else:
            out.append(f"task_type {self.task_type.value} is not generated by this pipeline")
        return out

    def chunk_documents(self) -> list[ContextDocument]:
        return [
            ContextDocument(
                body=chunk["body"],
                context_id=str(chunk["context_id"]),
                source_kind=SourceKind.RETRIEVED_CHUNK,
            )
            for chunk in self.inputs.get("chunks", ())
        ]


@dataclass
class FilterStats:
    """Keep/reject tallies; total always equals the sum of the buckets."""

    total: int = 0
    kept: int = 0
    rejected_bad_json: int = 0
    rejected_non_verbatim: int = 0
    rejected_too_long: int = 0
    rejected_transport: int = 0
    cancelled: int = 0  # interrupted before completion; outside `total`

    def conserved(self) -> bool:
        rejected = (
            self.rejected_bad_json
            + self.rejected_non_verbatim
            + self.rejected_too_long
            + self.rejected_transport
        )
        return self.total == self.kept + rejected

    def to_json_value(self) -> dict[str, int]:
        return {
            "total": self.total,
            "kept": self.kept,
            "rejected_bad_json": self.rejected_bad_json,
            "rejected_non_verbatim": self.rejected_non_verbatim,
            "rejected_too_long": self.rejected_too_long,
            "rejected_transport": self.rejected_transport,
            "cancelled": self.cancelled,
        }


@dataclass(frozen=True)
class PipelineConfig:
    parallelism: int = 4
    max_tokens: float = DEFAULT_MAX_TOKENS
    temperature: float = 0.0
    max_output_tokens: int = 2048
    seed: int | None = None
    estimator: TokenEstimator | None = None


def length_filter(
    prompt: str,
    completion: str,
    max_tokens: float = DEFAULT_MAX_TOKENS,
    estimator: TokenEstimator | None = None,
) -> bool:
    """True when prompt plus completion fit the budget (inclusive)."""
    est = estimator or estimate_tokens
    return est(prompt) + est(completion) <= max_tokens


@dataclass(frozen=True)
class FilterOutcome:
    record: UnifiedTaskRecord
    detail: str | None = None

    @property
    def kept(self) -> bool:
        return self.record.filter_status is FilterStatus.KEPT


def _build_prompt(
    task: SourceRecord,
    metric: EvaluationMetric | None,
    templates: TemplateSet | None,
) -> PromptText:
    if task.task_type is TaskType.POINTWISE_EVAL:
        if metric is None:
            raise ValueError("pointwise prompts need a metric")
        return build_pointwise_prompt(
            metric, task.inputs["query_with_context"], task.inputs["answer"], templates
        )
    if task.citation_flavor() == "rag":
        mode = parse_citation_mode(task.inputs.get("mode", "inline"))
        return build_rag_cite_prompt(task.chunk_documents(), task.inputs["answer"], mode, templates)
    if metric is None:
        raise ValueError("content-quality citation prompts need a metric")
    return build_quality_prompt(metric, task.inputs["task_prompt"], task.inputs["generation"], templates)


def _record_metric(task: SourceRecord, metrics: Sequence[EvaluationMetric]) -> EvaluationMetric:
    named = task.inputs.get("metric")
    if named:
        return metric_by_name(str(named))
    return metrics[0] if metrics else metric_catalog()[0]


def filter_one(
    raw: str,
    task: SourceRecord,
    policy: MatchPolicy = MatchPolicy.NORMALIZED,
    *,
    metric: EvaluationMetric | None = None,
    max_tokens: float = DEFAULT_MAX_TOKENS,
    estimator: TokenEstimator | None = None,
    templates: TemplateSet | None = None,
    prompt: PromptText | None = None,
) -> FilterOutcome:
    """Run one raw completion through parse -> verify -> length, in that order."""
    if prompt is None:
        if metric is None and task.task_type is not TaskType.POINTWISE_EVAL:
            metric = _record_metric(task, ())
        prompt = _build_prompt(task, metric, templates)
    prompt_str = prompt.text

    def rejected(status: FilterStatus, detail: str, completion: str) -> FilterOutcome:
        record = UnifiedTaskRecord(
            prompt=prompt_str,
            completion=completion,
            task_type=task.task_type,
            source_dataset=task.source_dataset,
            filter_status=status,
        )
        return FilterOutcome(record=record, detail=detail)

    if task.task_type is TaskType.POINTWISE_EVAL:
        value, report = schema_io.try_parse_pointwise(raw)
        if value is None:
            return rejected(FilterStatus.REJECTED_BAD_JSON, str(report), raw)
    elif task.citation_flavor() == "rag":
        mode = parse_citation_mode(task.inputs.get("mode", "inline"))
        value, report = schema_io.try_parse_rag_output(raw, mode)
        if value is None:
            return rejected(FilterStatus.REJECTED_BAD_JSON, str(report), raw)
        try:
            verification = verify_rag_output(value, task.chunk_documents(), task.inputs["answer"], policy)
        except UnknownContextIdError as exc:
            return rejected(FilterStatus.REJECTED_NON_VERBATIM, str(exc), raw)
        if not verification.ok:
            return rejected(
                FilterStatus.REJECTED_NON_VERBATIM, "snippet or claim not verbatim", raw
            )
    else:
        value, report = schema_io.try_parse_quality_output(raw)
        if value is None:
            return rejected(FilterStatus.REJECTED_BAD_JSON, str(report), raw)
        verification = verify_quality_output(value, task.inputs["task_prompt"], policy)
        if not verification.ok:
            return rejected(FilterStatus.REJECTED_NON_VERBATIM, "citation not verbatim", raw)

    completion = schema_io.serialize_canonical(value)
    if not length_filter(prompt_str, completion, max_tokens, estimator):
        return rejected(FilterStatus.REJECTED_TOO_LONG, "over the token budget", completion)
    record = UnifiedTaskRecord(
        prompt=prompt_str,
        completion=completion,
        task_type=task.task_type,
        source_dataset=task.source_dataset,
        filter_status=FilterStatus.KEPT,
    )
    return FilterOutcome(record=record)


def generate(
    records: Sequence[SourceRecord],
    metrics: Sequence[EvaluationMetric],
    gateway: Gateway,
    policy: MatchPolicy = MatchPolicy.NORMALIZED,
    config: PipelineConfig | None = None,
    templates: TemplateSet | None = None,
    cancel_event: threading.Event | None = None,
) -> tuple[list[UnifiedTaskRecord], FilterStats]:
    """Fan records out into prompts, complete them, filter, and tally.

    Returns every produced record (kept and rejected) in deterministic job
    order plus the stats. Gateway failures become the transport bucket with
    no record; cancelled items are counted outside the conservation total.
    """
    config = config or PipelineConfig()
    jobs: list[tuple[SourceRecord, EvaluationMetric | None, PromptText]] = []
    for task in records:
        problems = task.violations()
        if problems:
            raise RecError(f"bad source record from {task.source_dataset!r}: {'; '.join(problems)}")
        if task.task_type is TaskType.POINTWISE_EVAL:
            fan_out = metrics if metrics else metric_catalog()
            for metric in fan_out:
                jobs.append((task, metric, _build_prompt(task, metric, templates)))
        else:
            metric = _record_metric(task, metrics) if task.citation_flavor() == "quality" else None
            jobs.append((task, metric, _build_prompt(task, metric, templates)))

    requests = [
        CompletionRequest(
            prompt=prompt,
            temperature=config.temperature,
            max_output_tokens=config.max_output_tokens,
            seed=config.seed,
        )
        for _, _, prompt in jobs
    ]
    slots = gateway.complete_batch(requests, parallelism=config.parallelism, cancel_event=cancel_event)

    out: list[UnifiedTaskRecord] = []
    stats = FilterStats()
    for (task, metric, prompt), slot in zip(jobs, slots):
        if isinstance(slot, CancelledError):
            stats.cancelled += 1
            continue
        stats.total += 1
        if isinstance(slot, GatewayError):
            logger.warning("gateway failure for %s: %s", task.source_dataset, slot)
            stats.rejected_transport += 1
            continue
        outcome = filter_one(
            slot.text,
            task,
            policy,
            metric=metric,
            max_tokens=config.max_tokens,
            estimator=config.estimator,
            prompt=prompt,
        )
        out.append(outcome.record)
        status = outcome.record.filter_status
        if status is FilterStatus.KEPT:
            stats.kept += 1
        elif status is FilterStatus.REJECTED_BAD_JSON:
            stats.rejected_bad_json += 1
        elif status is FilterStatus.REJECTED_NON_VERBATIM:
            stats.rejected_non_verbatim += 1
        else:
            stats.rejected_too_long += 1
    return out, stats
