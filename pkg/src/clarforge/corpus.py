"""Corpus ingestion, dataset persistence and dataset statistics.

Corpora are JSONL, one sample per line with fields id, nld, code and split
(plus optional notebook_id, cell_index, context_cells).  Built datasets are
JSONL of records with nested key operations and CQAs; serialization has a
fixed field order so write -> read -> write is byte-identical.
"""

import json
from dataclasses import dataclass, field

from clarforge.align import KeyOperation
from clarforge.cqgen import MULTIPLE_CHOICE, YES_NO, ClarificationQA
from clarforge.errors import CorpusFormatError
from clarforge.evalkit import tokenize

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class Sample:
    id: str
    nld: str
    code: str
    split: str
    notebook_id: str | None = None
    cell_index: int | None = None
    context_cells: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.nld.strip() or not self.code.strip():
            raise ValueError(f"sample {self.id!r}: nld and code must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"sample {self.id!r}: invalid split {self.split!r}")
        if self.cell_index is not None and self.cell_index < 0:
            raise ValueError(f"sample {self.id!r}: cell_index must be non-negative")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "nld": self.nld,
            "code": self.code,
            "notebook_id": self.notebook_id,
            "cell_index": self.cell_index,
            "context_cells": list(self.context_cells) if self.context_cells is not None else None,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Sample":
        cells = d.get("context_cells")
        return cls(
            id=d["id"],
            nld=d["nld"],
            code=d["code"],
            split=d["split"],
            notebook_id=d.get("notebook_id"),
            cell_index=d.get("cell_index"),
            context_cells=tuple(cells) if cells is not None else None,
        )


class Corpus:
    """Immutable collection of samples with split partitions."""

    def __init__(self, samples: list[Sample]):
        self.samples = list(samples)
        self.by_split: dict[str, list[Sample]] = {s: [] for s in SPLITS}
        for sample in self.samples:
            self.by_split[sample.split].append(sample)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


_REQUIRED_FIELDS = ("id", "nld", "code", "split")


def load_corpus(path: str) -> Corpus:
    """Parse a JSONL corpus; errors carry the 1-based line number."""
    samples: list[Sample] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc.msg}", line=lineno) from exc
            for fieldname in _REQUIRED_FIELDS:
                if fieldname not in obj:
                    raise CorpusFormatError(f"line {lineno}: missing field {fieldname}", line=lineno)
            try:
                sample = Sample.from_dict(obj)
            except ValueError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}", line=lineno) from exc
            if sample.id in seen_ids:
                raise CorpusFormatError(f"line {lineno}: duplicate id {sample.id!r}", line=lineno)
            seen_ids.add(sample.id)
            samples.append(sample)
    return Corpus(samples)


@dataclass
class DatasetRecord:
    sample: Sample
    key_operations: list[KeyOperation]
    cqas: list[ClarificationQA]
    need_label: bool
    overflow: bool = False

    def to_dict(self) -> dict:
        d = {
            "sample": self.sample.to_dict(),
            "key_operations": [k.to_dict() for k in self.key_operations],
            "cqas": [c.to_dict() for c in self.cqas],
            "need_label": self.need_label,
        }
        if self.overflow:
            d["overflow"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRecord":
        return cls(
            sample=Sample.from_dict(d["sample"]),
            key_operations=[KeyOperation.from_dict(k) for k in d["key_operations"]],
            cqas=[ClarificationQA.from_dict(c) for c in d["cqas"]],
            need_label=d["need_label"],
            overflow=d.get("overflow", False),
        )


def write_dataset(dataset: list[DatasetRecord], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            for record in dataset:
                f.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise CorpusFormatError(f"cannot write dataset to {path}: {exc}") from exc


def read_dataset(path: str) -> list[DatasetRecord]:
    """Read a dataset JSONL; truncation errors carry the failing byte offset."""
    records: list[DatasetRecord] = []
    offset = 0
    try:
        with open(path, "rb") as f:
            raw_lines = f.readlines()
    except OSError as exc:
        raise CorpusFormatError(f"cannot read dataset from {path}: {exc}") from exc
    for lineno, raw in enumerate(raw_lines, start=1):
        text = raw.decode("utf-8", errors="replace")
        if text.strip():
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(
                    f"{path}: malformed record at line {lineno}, byte offset {offset + exc.pos}",
                    line=lineno,
                    offset=offset + exc.pos,
                ) from exc
            try:
                records.append(DatasetRecord.from_dict(obj))
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(
                    f"{path}: incomplete record at line {lineno}, byte offset {offset}",
                    line=lineno,
                    offset=offset,
                ) from exc
        offset += len(raw)
    return records


@dataclass
class SplitStats:
    n_samples: int = 0
    avg_nld_length: float = 0.0
    avg_code_length: float = 0.0
    n_with_cqas: int = 0
    n_without_cqas: int = 0
    n_cqas: int = 0
    n_multiple_choice: int = 0
    n_yes_no: int = 0
    n_operations: int = 0
    n_packages: int = 0

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "avg_nld_length": self.avg_nld_length,
            "avg_code_length": self.avg_code_length,
            "n_with_cqas": self.n_with_cqas,
            "n_without_cqas": self.n_without_cqas,
            "n_cqas": self.n_cqas,
            "n_multiple_choice": self.n_multiple_choice,
            "n_yes_no": self.n_yes_no,
            "n_operations": self.n_operations,
            "n_packages": self.n_packages,
        }


@dataclass
class DatasetStats:
    total: SplitStats
    per_split: dict[str, SplitStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total": self.total.to_dict(),
            "per_split": {k: v.to_dict() for k, v in self.per_split.items()},
        }


def _stats_for(records: list[DatasetRecord]) -> SplitStats:
    stats = SplitStats(n_samples=len(records))
    if not records:
        return stats
    nld_tokens = 0
    code_tokens = 0
    operations: set[str] = set()
    packages: set[str] = set()
    for record in records:
        nld_tokens += len(tokenize(record.sample.nld))
        code_tokens += len(tokenize(record.sample.code))
        if record.need_label:
            stats.n_with_cqas += 1
        else:
            stats.n_without_cqas += 1
        stats.n_cqas += len(record.cqas)
        for cqa in record.cqas:
            if cqa.qtype == MULTIPLE_CHOICE:
                stats.n_multiple_choice += 1
            elif cqa.qtype == YES_NO:
                stats.n_yes_no += 1
        for op in record.key_operations:
            operations.add(op.doc.display_name)
            packages.add(op.doc.package)
    stats.avg_nld_length = nld_tokens / len(records)
    stats.avg_code_length = code_tokens / len(records)
    stats.n_operations = len(operations)
    stats.n_packages = len(packages)
    return stats


def compute_stats(dataset: list[DatasetRecord]) -> DatasetStats:
    """Dataset statistics, total and per split; permutation-invariant."""
    per_split = {
        split: _stats_for([r for r in dataset if r.sample.split == split])
        for split in SPLITS
    }
    return DatasetStats(total=_stats_for(dataset), per_split=per_split)
