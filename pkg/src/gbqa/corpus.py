"""Knowledge-base ingestion: structured case records and chunked texts.

Case files are UTF-8 JSON, one record object or an array of them per
file, with field names exactly matching CaseRecord. Reference texts are
plain text, split into fixed-size chunks that overlap so retrieval never
loses a sentence straddling a boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .llm import AssistantReply, ChatClient

__all__ = [
    "BUILDING_TYPES",
    "BadChunkParams",
    "CaseLibrary",
    "CaseRecord",
    "Chunk",
    "DuplicateId",
    "ExtractionRejected",
    "SOURCE_KINDS",
    "SchemaViolation",
    "case_search_text",
    "chunk_text",
    "extract_case",
    "load_cases",
    "load_chunks",
    "save_chunks",
]

BUILDING_TYPES = ("residential", "public", "industrial")
SOURCE_KINDS = ("textbook", "standard", "manual", "case")

DEFAULT_CHUNK_SIZE = 1200
DEFAULT_OVERLAP = 200


class SchemaViolation(ValueError):
    def __init__(self, file: str, field: str, reason: str = ""):
        self.file = file
        self.field = field
        msg = f"{file}: field {field!r} invalid"
        super().__init__(msg + (f": {reason}" if reason else ""))


class DuplicateId(ValueError):
    pass


class BadChunkParams(ValueError):
    pass


class ExtractionRejected(ValueError):
    """The model never produced a schema-valid record."""


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    name: str
    country: str
    city: str
    building_type: str
    rating_system: str
    certification_level: str
    year: int
    description: str
    performance_sentences: tuple[str, ...]
    building_subtype: str | None = None


_REQUIRED = tuple(
    f.name for f in dataclass_fields(CaseRecord) if f.name != "building_subtype"
)
_NONEMPTY = ("case_id", "name", "description")


def _validate_case(obj: object, file: str) -> CaseRecord:
    if not isinstance(obj, Mapping):
        raise SchemaViolation(file, "$", "record must be an object")
    allowed = set(_REQUIRED) | {"building_subtype"}
    for key in obj:
        if key not in allowed:
            raise SchemaViolation(file, str(key), "unknown field")
    for key in _REQUIRED:
        if key not in obj:
            raise SchemaViolation(file, key, "missing")
    for key in (
        "case_id",
        "name",
        "country",
        "city",
        "building_type",
        "rating_system",
        "certification_level",
        "description",
    ):
        if not isinstance(obj[key], str):
            raise SchemaViolation(file, key, "must be a string")
    for key in _NONEMPTY:
        if not obj[key].strip():
            raise SchemaViolation(file, key, "must be non-empty")
    if obj["building_type"] not in BUILDING_TYPES:
        raise SchemaViolation(
            file, "building_type", f"must be one of {BUILDING_TYPES}"
        )
    year = obj["year"]
    if isinstance(year, bool) or not isinstance(year, int):
        raise SchemaViolation(file, "year", "must be an integer")
    sentences = obj["performance_sentences"]
    if not isinstance(sentences, list) or not all(
        isinstance(s, str) for s in sentences
    ):
        raise SchemaViolation(file, "performance_sentences", "must be a string list")
    subtype = obj.get("building_subtype")
    if subtype is not None and not isinstance(subtype, str):
        raise SchemaViolation(file, "building_subtype", "must be a string")
    return CaseRecord(
        case_id=obj["case_id"],
        name=obj["name"],
        country=obj["country"],
        city=obj["city"],
        building_type=obj["building_type"],
        rating_system=obj["rating_system"],
        certification_level=obj["certification_level"],
        year=year,
        description=obj["description"],
        performance_sentences=tuple(sentences),
        building_subtype=subtype,
    )


class CaseLibrary:
    def __init__(self, records: Iterable[CaseRecord] = ()):
        self._by_id: dict[str, CaseRecord] = {}
        for rec in records:
            if rec.case_id in self._by_id:
                raise DuplicateId(rec.case_id)
            self._by_id[rec.case_id] = rec

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[CaseRecord]:
        return iter(self._by_id.values())

    def get(self, case_id: str) -> CaseRecord | None:
        return self._by_id.get(case_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CaseLibrary):
            return NotImplemented
        return self._by_id == other._by_id


def load_cases(files: Iterable[str | Path]) -> CaseLibrary:
    """Load case records; any schema problem or repeated id fails the load."""
    records: list[CaseRecord] = []
    for file in files:
        path = Path(file)
        try:
            parsed = json.loads(path.read_text("utf-8"))
        except (OSError, ValueError) as err:
            raise SchemaViolation(str(path), "$", f"unreadable JSON: {err}")
        items = parsed if isinstance(parsed, list) else [parsed]
        for item in items:
            records.append(_validate_case(item, str(path)))
    return CaseLibrary(records)


def case_search_text(rec: CaseRecord) -> str:
    """Flat text form of a record, the unit fed to the embedder."""
    parts = [
        rec.name,
        rec.city,
        rec.country,
        rec.building_type,
        rec.building_subtype or "",
        rec.rating_system,
        rec.certification_level,
        str(rec.year),
        rec.description,
        *rec.performance_sentences,
    ]
    return " | ".join(p for p in parts if p)


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    source_doc: str
    source_kind: str
    text: str
    char_offset: int


def chunk_text(
    doc: str,
    source_doc: str,
    source_kind: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
) -> list[Chunk]:
    """Split doc into chunks starting every (chunk_size - overlap) chars.

    Dropping each chunk's first `overlap` characters (except the first
    chunk) and concatenating reconstructs doc exactly. An empty doc yields
    no chunks.
    """
    if source_kind not in SOURCE_KINDS:
        raise ValueError(f"source_kind must be one of {SOURCE_KINDS}")
    if chunk_size < 1 or overlap < 0 or overlap >= chunk_size:
        raise BadChunkParams(
            f"need 0 <= overlap < chunk_size, got size={chunk_size} overlap={overlap}"
        )
    step = chunk_size - overlap
    chunks = []
    k = 0
    while k * step < len(doc):
        offset = k * step
        chunks.append(
            Chunk(
                chunk_id=f"{source_doc}#{k:04d}",
                source_doc=source_doc,
                source_kind=source_kind,
                text=doc[offset : offset + chunk_size],
                char_offset=offset,
            )
        )
        k += 1
    return chunks


def save_chunks(chunks: Iterable[Chunk], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in chunks:
            fh.write(json.dumps(c.__dict__, ensure_ascii=False) + "\n")


def load_chunks(path: str | Path) -> list[Chunk]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Chunk(**json.loads(line)))
    return out


_EXTRACT_PROMPT = """You are a data-entry assistant for a green building case library.
Read the project description and reply with ONLY a JSON object, no prose,
with exactly these fields:
  case_id (string, short slug), name, country, city,
  building_type (one of "residential", "public", "industrial"),
  building_subtype (string or null),
  rating_system (e.g. "LEED", "BREEAM"), certification_level,
  year (integer), description (1-3 sentence summary),
  performance_sentences (array of sentences about ratings, energy or
  water performance, copied or tightly paraphrased from the source).
"""


def _parse_reply_json(reply: AssistantReply) -> object:
    text = (reply.content or "").strip()
    if text.startswith("```"):
        text = text.strip("`")
        if text.startswith("json"):
            text = text[4:]
    return json.loads(text)


def extract_case(raw_text: str, llm: ChatClient, retries: int = 2) -> CaseRecord:
    """Ask the model to structure a raw project description.

    The reply must validate against the CaseRecord schema; on failure the
    validation error is fed back and the model re-asked, up to `retries`
    times before ExtractionRejected.
    """
    messages: list[dict] = [
        {"role": "system", "content": _EXTRACT_PROMPT},
        {"role": "user", "content": raw_text},
    ]
    last_error = "no attempt made"
    for _ in range(1 + retries):
        reply = llm.complete(messages)
        try:
            return _validate_case(_parse_reply_json(reply), "<llm>")
        except (ValueError, TypeError) as err:
            last_error = str(err)
            messages.append(
                {"role": "assistant", "content": reply.content or ""}
            )
            messages.append(
                {
                    "role": "user",
                    "content": f"That output failed validation ({last_error}). "
                    "Reply again with only the corrected JSON object.",
                }
            )
    raise ExtractionRejected(last_error)
