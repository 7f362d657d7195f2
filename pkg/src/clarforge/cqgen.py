"""Clarification question/answer generation for missing key operations.

Operations whose last name token is shared by at least two distinct
operations in the corpus get a multiple-choice question; all others get a
yes/no question quoting their documentation summary.  Operations with the
same terminal name from different packages count as one operation when
grouping.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from clarforge.align import STATUS_MISSING, KeyOperation
from clarforge.textdata import STOPWORDS

if TYPE_CHECKING:
    from clarforge.corpus import DatasetRecord, Sample

MULTIPLE_CHOICE = "multiple_choice"
YES_NO = "yes_no"

MAX_MISSING_OPS = 5


@dataclass(frozen=True)
class ClarificationQA:
    qtype: str
    question: str
    answer: str
    target_display_name: str
    group_token: str | None = None

    def to_dict(self) -> dict:
        return {
            "qtype": self.qtype,
            "question": self.question,
            "answer": self.answer,
            "target_display_name": self.target_display_name,
            "group_token": self.group_token,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClarificationQA":
        return cls(
            qtype=d["qtype"],
            question=d["question"],
            answer=d["answer"],
            target_display_name=d["target_display_name"],
            group_token=d.get("group_token"),
        )


def last_token(display_name: str) -> str:
    """Final dotted segment, then final underscore sub-token, lowercased."""
    terminal = display_name.rsplit(".", 1)[-1]
    return terminal.rsplit("_", 1)[-1].lower()


@dataclass
class TokenGroups:
    groups: dict[str, set[str]] = field(default_factory=dict)
    alias_table: dict[str, str] = field(default_factory=dict)

    def token_for(self, display_name: str) -> str | None:
        token = last_token(display_name)
        return token if token in self.groups else None

    def rendered_token(self, token: str) -> str:
        return self.alias_table.get(token, token)


def build_token_groups(
    key_operations: list[KeyOperation],
    alias_table: dict[str, str] | None = None,
) -> TokenGroups:
    """Group the corpus-wide key operations (mentioned or missing) by last token.

    A token forms a group only when shared by >= 2 distinct operations,
    where operations with equal terminal names are merged.
    """
    members: dict[str, set[str]] = {}
    display_names: dict[str, set[str]] = {}
    for op in key_operations:
        name = op.doc.display_name
        token = last_token(name)
        if not token or token in STOPWORDS:
            continue
        terminal = name.rsplit(".", 1)[-1].lower()
        members.setdefault(token, set()).add(terminal)
        display_names.setdefault(token, set()).add(name)
    groups = {tok: display_names[tok] for tok, terms in members.items() if len(terms) >= 2}
    return TokenGroups(groups=groups, alias_table=dict(alias_table or {}))


def _summary_body(summary: str) -> str:
    return summary[:-1] if summary.endswith(".") else summary


def render_cq(op: KeyOperation, groups: TokenGroups) -> ClarificationQA:
    """Render the CQA for one missing key operation."""
    if op.status != STATUS_MISSING:
        raise ValueError(f"cannot render a CQ for an aligned operation: {op.doc.display_name}")
    name = op.doc.display_name
    token = groups.token_for(name)
    if token is not None:
        shown = groups.rendered_token(token)
        return ClarificationQA(
            qtype=MULTIPLE_CHOICE,
            question=f"Do you want to call anything related to '{shown}'? If yes, which one?",
            answer=f"Yes, I want to call '{name}'",
            target_display_name=name,
            group_token=token,
        )
    body = _summary_body(op.doc.summary)
    return ClarificationQA(
        qtype=YES_NO,
        question=f"Do you want to call '{name}' documented as '{body}?'",
        answer="Yes.",
        target_display_name=name,
        group_token=None,
    )


def assemble_record(
    sample: "Sample",
    key_operations: list[KeyOperation],
    groups: TokenGroups,
    keep_overflow: bool = False,
) -> "DatasetRecord | None":
    """Build the dataset record for one sample, or None when excluded.

    Missing operations are deduplicated by display name (first occurrence
    wins); samples with more than five distinct missing operations are
    excluded unless ``keep_overflow`` retains them flagged.
    """
    from clarforge.corpus import DatasetRecord

    missing: list[KeyOperation] = []
    seen: set[str] = set()
    for op in key_operations:
        if op.status != STATUS_MISSING:
            continue
        name = op.doc.display_name
        if name in seen:
            continue
        seen.add(name)
        missing.append(op)
    overflow = len(missing) > MAX_MISSING_OPS
    if overflow and not keep_overflow:
        return None
    cqas = [render_cq(op, groups) for op in missing]
    return DatasetRecord(
        sample=sample,
        key_operations=key_operations,
        cqas=cqas,
        need_label=bool(cqas),
        overflow=overflow,
    )
