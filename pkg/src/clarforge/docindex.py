"""Documentation index: resolve operation names to one-line API summaries.

The index file is JSONL with ``fqname``, ``summary`` and optional
``package`` per line (package defaults to the fqname's root segment).
Lookups try the exact fqname first, then fall back to
``(package, terminal name)`` so that e.g. an operation resolved as
``pandas.read_csv.fillna`` still finds the entry keyed ``pandas.fillna``.
"""

import json
import warnings
from dataclasses import dataclass

from clarforge.codegraph import OpNode
from clarforge.errors import DocIndexError


def display_name_for(fqname: str, package: str) -> str:
    """Package root plus terminal attribute, e.g. ``sklearn.GridSearchCV``."""
    terminal = fqname.rsplit(".", 1)[-1]
    return f"{package}.{terminal}"


@dataclass(frozen=True)
class DocEntry:
    fqname: str
    display_name: str
    summary: str
    package: str

    def to_dict(self) -> dict:
        return {
            "fqname": self.fqname,
            "display_name": self.display_name,
            "summary": self.summary,
            "package": self.package,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DocEntry":
        return cls(
            fqname=d["fqname"],
            display_name=d["display_name"],
            summary=d["summary"],
            package=d["package"],
        )


class DocIndex:
    """Immutable fqname -> DocEntry index with (package, terminal) fallback."""

    def __init__(self, entries: list[DocEntry]):
        self._exact: dict[str, DocEntry] = {}
        self._fallback: dict[tuple[str, str], DocEntry] = {}
        for entry in entries:
            self._exact[entry.fqname] = entry
            terminal = entry.fqname.rsplit(".", 1)[-1]
            self._fallback[(entry.package, terminal)] = entry

    def __len__(self) -> int:
        return len(self._exact)

    def entries(self) -> list[DocEntry]:
        return list(self._exact.values())

    def resolve(self, fqname: str) -> DocEntry | None:
        entry = self._exact.get(fqname)
        if entry is not None:
            return entry
        parts = fqname.split(".")
        if len(parts) < 2:
            return None
        return self._fallback.get((parts[0], parts[-1]))


def _normalize_summary(raw: str) -> str:
    return " ".join(raw.split())


def load_doc_index(path: str) -> DocIndex:
    """Load a JSONL doc index; duplicate fqnames keep the last entry."""
    entries: dict[str, DocEntry] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DocIndexError(f"line {lineno}: invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict) or "fqname" not in obj or "summary" not in obj:
                raise DocIndexError(f"line {lineno}: missing field fqname or summary", line=lineno)
            fqname = obj["fqname"]
            summary = _normalize_summary(str(obj["summary"]))
            if not summary:
                raise DocIndexError(f"line {lineno}: empty summary for {fqname}", line=lineno)
            package = obj.get("package") or fqname.split(".", 1)[0]
            if fqname in entries:
                warnings.warn(f"duplicate doc entry for {fqname}; keeping line {lineno}", stacklevel=2)
            entries[fqname] = DocEntry(
                fqname=fqname,
                display_name=display_name_for(fqname, package),
                summary=summary,
                package=package,
            )
    return DocIndex(list(entries.values()))


def attach_docs(key_ops: list[OpNode], index: DocIndex) -> list[tuple[OpNode, DocEntry]]:
    """Pair key operations with doc entries; operations without any
    resolvable entry are dropped.  Order is preserved."""
    out: list[tuple[OpNode, DocEntry]] = []
    for op in key_ops:
        entry = index.resolve(op.fqname)
        if entry is not None:
            out.append((op, entry))
    return out


def first_sentence(text: str) -> str:
    """First sentence of a docstring, used when building an index offline."""
    flat = " ".join(text.split())
    for i, ch in enumerate(flat):
        if ch in ".!?" and (i + 1 == len(flat) or flat[i + 1] == " "):
            return flat[: i + 1]
    return flat


def build_doc_index_file(raw_path: str, out_path: str) -> int:
    """Convert raw docs JSONL ({fqname, doc, package?}) into an index file.

    Returns the number of entries written.
    """
    count = 0
    with open(raw_path, "r", encoding="utf-8") as fin, open(out_path, "w", encoding="utf-8") as fout:
        for lineno, line in enumerate(fin, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DocIndexError(f"line {lineno}: invalid JSON: {exc.msg}", line=lineno) from exc
            if "fqname" not in obj or "doc" not in obj:
                raise DocIndexError(f"line {lineno}: missing field fqname or doc", line=lineno)
            summary = first_sentence(str(obj["doc"]))
            if not summary:
                continue
            record = {"fqname": obj["fqname"], "summary": summary}
            if obj.get("package"):
                record["package"] = obj["package"]
            fout.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count
