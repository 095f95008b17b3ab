"""Dataset loading, answer scoring, and end-to-end QA evaluation.

Three input formats are supported: the two public long-document QA sets
(multiple-choice passages and paper-QA) in their native layouts, and a
minimal JSONL format with a sidecar document map for self-contained runs.
Scoring uses exact option match for multiple choice and the standard
normalized token-F1 for free-text answers.
"""

from __future__ import annotations

import json
import logging
import re
import string
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from .graph import SUMMARY, GemGraph
from .providers import Embedder, Generator
from .retrieval import RetrievalConfig, assemble_context, retrieve

logger = logging.getLogger(__name__)

SIMPLE = "simple"
QUALITY = "quality"
QASPER = "qasper"

FORMATS = (SIMPLE, QUALITY, QASPER)

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")


class DatasetError(ValueError):
    """A dataset file failed validation; names the record and field."""

    def __init__(self, message: str, record_index: int | None = None,
                 fieldname: str | None = None):
        where = ""
        if record_index is not None:
            where = f" (record {record_index}"
            where += f", field {fieldname!r})" if fieldname else ")"
        super().__init__(message + where)
        self.record_index = record_index
        self.fieldname = fieldname


@dataclass(frozen=True)
class QaRecord:
    """One QA item; multiple-choice when options is set, free-text otherwise."""

    doc_id: str
    question: str
    options: tuple[str, ...] | None
    gold: int | tuple[str, ...]
    is_hard: bool = False

    def __post_init__(self) -> None:
        if self.options is not None:
            if len(self.options) < 2:
                raise ValueError("multiple-choice record needs >= 2 options")
            if not isinstance(self.gold, int):
                raise ValueError("multiple-choice gold must be an option index")
            if not 0 <= self.gold < len(self.options):
                raise ValueError(
                    f"gold index {self.gold} out of range for {len(self.options)} options"
                )
        else:
            if isinstance(self.gold, int) or not self.gold:
                raise ValueError("free-text record needs gold answer strings")


@dataclass
class EvalReport:
    """Aggregate metrics plus the per-record audit trail."""

    accuracy: float
    hard_accuracy: float
    f1: float
    eigen_fraction: float
    per_record: list[dict] = field(default_factory=list)
    n_records: int = 0
    n_hard: int = 0
    n_failed: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "hard_accuracy": self.hard_accuracy,
            "f1": self.f1,
            "eigen_fraction": self.eigen_fraction,
            "n_records": self.n_records,
            "n_hard": self.n_hard,
            "n_failed": self.n_failed,
            "per_record": self.per_record,
        }


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation and articles, collapse whitespace."""
    text = text.lower()
    text = "".join(ch if ch not in string.punctuation else " " for ch in text)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def token_f1(prediction: str, golds) -> float:
    """Max token-level F1 of the prediction against any gold answer."""
    if isinstance(golds, str):
        golds = [golds]
    if not golds:
        raise ValueError("token_f1 needs at least one gold answer")
    pred_tokens = normalize_answer(prediction).split()
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold).split()
        if not pred_tokens or not gold_tokens:
            best = max(best, float(pred_tokens == gold_tokens))
            continue
        common = Counter(pred_tokens) & Counter(gold_tokens)
        overlap = sum(common.values())
        if overlap == 0:
            continue
        precision = overlap / len(pred_tokens)
        recall = overlap / len(gold_tokens)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def _require(data: dict, key: str, index: int):
    if key not in data:
        raise DatasetError(f"missing required field {key!r}", index, key)
    return data[key]


def _load_simple(path: Path) -> tuple[list[QaRecord], dict[str, str]]:
    sidecar = path.with_name(path.stem + ".docs.json")
    if not sidecar.exists():
        raise DatasetError(f"sidecar document map not found: {sidecar}")
    documents = json.loads(sidecar.read_text(encoding="utf-8"))
    if not isinstance(documents, dict):
        raise DatasetError("sidecar must map doc_id to document text")
    records = []
    with path.open(encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc}", index) from exc
            doc_id = str(_require(data, "doc_id", index))
            if doc_id not in documents:
                raise DatasetError(
                    f"doc_id {doc_id!r} missing from sidecar", index, "doc_id"
                )
            question = str(_require(data, "question", index))
            gold = _require(data, "gold", index)
            options = data.get("options")
            try:
                if options is not None:
                    record = QaRecord(
                        doc_id=doc_id,
                        question=question,
                        options=tuple(str(o) for o in options),
                        gold=int(gold),
                        is_hard=bool(data.get("is_hard", False)),
                    )
                else:
                    golds = [gold] if isinstance(gold, str) else list(gold)
                    record = QaRecord(
                        doc_id=doc_id,
                        question=question,
                        options=None,
                        gold=tuple(str(g) for g in golds),
                        is_hard=bool(data.get("is_hard", False)),
                    )
            except (ValueError, TypeError) as exc:
                raise DatasetError(str(exc), index, "gold") from exc
            records.append(record)
    return records, documents


def _load_quality(path: Path) -> tuple[list[QaRecord], dict[str, str]]:
    records = []
    documents: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc}", index) from exc
            doc_id = str(_require(data, "article_id", index))
            documents.setdefault(doc_id, str(_require(data, "article", index)))
            for q in _require(data, "questions", index):
                try:
                    records.append(
                        QaRecord(
                            doc_id=doc_id,
                            question=str(q["question"]),
                            options=tuple(str(o) for o in q["options"]),
                            gold=int(q["gold_label"]) - 1,
                            is_hard=bool(q.get("difficult", 0)),
                        )
                    )
                except (KeyError, ValueError, TypeError) as exc:
                    raise DatasetError(str(exc), index, "questions") from exc
    return records, documents


def _qasper_gold(answer_block: dict) -> str:
    answer = answer_block.get("answer", answer_block)
    if answer.get("unanswerable"):
        return "unanswerable"
    yes_no = answer.get("yes_no")
    if yes_no is not None:
        return "yes" if yes_no else "no"
    spans = answer.get("extractive_spans") or []
    if spans:
        return ", ".join(str(s) for s in spans)
    return str(answer.get("free_form_answer", ""))


def _load_qasper(path: Path) -> tuple[list[QaRecord], dict[str, str]]:
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise DatasetError("paper-QA file must be a JSON object keyed by paper id")
    records = []
    documents: dict[str, str] = {}
    for index, (paper_id, paper) in enumerate(data.items()):
        parts = [str(paper.get("title", "")), str(paper.get("abstract", ""))]
        for section in paper.get("full_text", []):
            parts.extend(str(p) for p in section.get("paragraphs", []))
        documents[paper_id] = "\n\n".join(p for p in parts if p)
        for qa in paper.get("qas", []):
            golds = tuple(
                g for g in (_qasper_gold(a) for a in qa.get("answers", [])) if g
            )
            if not golds:
                continue
            try:
                records.append(
                    QaRecord(
                        doc_id=paper_id,
                        question=str(qa["question"]),
                        options=None,
                        gold=golds,
                        is_hard=False,
                    )
                )
            except (KeyError, ValueError) as exc:
                raise DatasetError(str(exc), index, "qas") from exc
    return records, documents


def load_dataset(path, format: str = SIMPLE) -> tuple[list[QaRecord], dict[str, str]]:
    """Parse a dataset file into records plus its doc_id -> text map."""
    if format not in FORMATS:
        raise DatasetError(f"unknown dataset format {format!r}")
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    if format == SIMPLE:
        return _load_simple(path)
    if format == QUALITY:
        return _load_quality(path)
    return _load_qasper(path)


def run_eval(
    records: list[QaRecord],
    graphs: dict[str, GemGraph],
    retrieval_config: RetrievalConfig,
    embedder: Embedder,
    answerer: Generator,
    skip_missing: bool = False,
    context_tokens: int | None = None,
) -> EvalReport:
    """Retrieve, answer and score every record against its document graph.

    Records whose document has no graph are logged as failures; they count
    as wrong unless skip_missing drops them from the denominators.
    """
    per_record = []
    mc_total = mc_correct = 0
    hard_total = hard_correct = 0
    free_total = 0
    f1_sum = 0.0
    nodes_returned = 0
    summary_returned = 0
    failed = 0

    for index, record in enumerate(records):
        graph = graphs.get(record.doc_id)
        if graph is None:
            failed += 1
            logger.warning("no graph for doc %r; record %d %s", record.doc_id,
                           index, "skipped" if skip_missing else "counted wrong")
            if not skip_missing:
                if record.options is not None:
                    mc_total += 1
                    if record.is_hard:
                        hard_total += 1
                else:
                    free_total += 1
            per_record.append(
                {"record": index, "doc_id": record.doc_id, "node_ids": [],
                 "answer": None, "correct": False, "f1": 0.0,
                 "error": "missing_graph"}
            )
            continue

        result = retrieve(graph, record.question, retrieval_config, embedder)
        nodes_returned += len(result.node_ids)
        kinds = {node.id: node.kind for node in graph.nodes}
        summary_returned += sum(
            1 for nid in result.node_ids if kinds[nid] == SUMMARY
        )
        context = assemble_context(graph, result, max_tokens=context_tokens)
        answer = answerer.answer(
            record.question,
            [context] if context else [" "],
            options=list(record.options) if record.options is not None else None,
        )

        if record.options is not None:
            correct = answer == record.options[record.gold]
            mc_total += 1
            mc_correct += int(correct)
            if record.is_hard:
                hard_total += 1
                hard_correct += int(correct)
            f1 = float(correct)
        else:
            correct = None
            f1 = token_f1(answer, list(record.gold))
            free_total += 1
            f1_sum += f1
        per_record.append(
            {"record": index, "doc_id": record.doc_id,
             "node_ids": list(result.node_ids), "answer": answer,
             "correct": correct, "f1": f1}
        )

    return EvalReport(
        accuracy=mc_correct / mc_total if mc_total else 0.0,
        hard_accuracy=hard_correct / hard_total if hard_total else 0.0,
        f1=f1_sum / free_total if free_total else 0.0,
        eigen_fraction=summary_returned / nodes_returned if nodes_returned else 0.0,
        per_record=per_record,
        n_records=len(records) - (failed if skip_missing else 0),
        n_hard=hard_total,
        n_failed=failed,
    )


def eigen_fraction_sweep(
    corpus_text: str,
    components_list: list[int],
    queries: list[str],
    config,
    embedder: Embedder | None = None,
) -> list[tuple[int, float]]:
    """Rebuild the graph at each summary-node count and measure, per query
    batch, the share of retrieved nodes that are summaries."""
    from .engine import build_graph_for_corpus

    if sorted(components_list) != list(components_list):
        raise ValueError("components_list must be sorted ascending")
    if not queries:
        raise ValueError("sweep needs at least one query")
    if embedder is None:
        from .providers import build_embedder

        embedder = build_embedder(config.embedder)
    retrieval_config = RetrievalConfig(budget_nodes=config.budget_nodes)
    out = []
    for num_components in components_list:
        graph, _ = build_graph_for_corpus(
            corpus_text, replace(config, num_components=num_components)
        )
        kinds = {node.id: node.kind for node in graph.nodes}
        total = summaries = 0
        for query in queries:
            result = retrieve(graph, query, retrieval_config, embedder)
            total += len(result.node_ids)
            summaries += sum(1 for nid in result.node_ids if kinds[nid] == SUMMARY)
        out.append((num_components, summaries / total if total else 0.0))
    return out
