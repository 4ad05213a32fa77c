"""The five chat tools and the engine that executes them.

Tool schemas are declared once here, sent to the model on every request,
and enforced on every call before dispatch. Domain failures (a bad period
spec, a malformed weather file) come back as error text in the tool
result so the model can correct itself; structural failures (unknown
tool, invalid arguments, missing file) raise and are handled by the
dialogue loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .charts import (
    ArtifactStore,
    ChartArtifact,
    EmptySeries,
    render_heatmap,
    render_line,
)
from .corpus import CaseLibrary, Chunk, case_search_text
from .epw import FIELD_NAMES, EpwError, parse_epw
from .retrieval import (
    DEFAULT_CONTEXT_BUDGET,
    Embedder,
    EmptyInput,
    VectorIndex,
    assemble_context,
    build_index,
    search,
)
from .weather import (
    EmptyPeriod,
    PeriodError,
    WeatherSummary,
    aggregate,
    parse_period,
    summarize,
)

__all__ = [
    "Engine",
    "FileNotFound",
    "ParamSpec",
    "TOOL_SPECS",
    "ToolCall",
    "ToolResult",
    "ToolSpec",
    "ToolValidationFailed",
    "UnknownTool",
    "validate_arguments",
]

TOOL_NAMES = (
    "describe_weather_data",
    "visualize_weather_data",
    "retrieve_green_building_cases",
    "query_green_building_knowledge",
    "analyze_uploaded_document",
)

DOC_CHAR_LIMIT = 20_000
READABLE_DOC_EXTS = (".txt", ".json")


class UnknownTool(LookupError):
    pass


class FileNotFound(LookupError):
    def __init__(self, file_name: str):
        self.file_name = file_name
        super().__init__(f"no uploaded file named {file_name!r}")


class ToolValidationFailed(ValueError):
    def __init__(self, name: str, field: str, reason: str):
        self.name = name
        self.field = field
        super().__init__(f"{name}: argument {field!r} {reason}")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # "string" or "integer"
    description: str
    required: bool = False
    default: object = None
    choices: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    params: tuple[ParamSpec, ...]

    def wire_format(self) -> dict:
        properties = {}
        for p in self.params:
            prop: dict = {"type": p.type, "description": p.description}
            if p.choices:
                prop["enum"] = list(p.choices)
            properties[p.name] = prop
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": [p.name for p in self.params if p.required],
                },
            },
        }


@dataclass(frozen=True)
class ToolCall:
    id: str
    name: str
    arguments: dict


@dataclass(frozen=True)
class ToolResult:
    tool_call_id: str
    text: str
    artifacts: tuple[str, ...] = ()


_PY_TYPES = {"string": str, "integer": int}


def validate_arguments(spec: ToolSpec, arguments: Mapping) -> dict:
    """Check arguments against the schema; returns them with defaults filled."""
    known = {p.name: p for p in spec.params}
    for key in arguments:
        if key not in known:
            raise ToolValidationFailed(spec.name, str(key), "is not a parameter")
    out: dict = {}
    for p in spec.params:
        if p.name not in arguments:
            if p.required:
                raise ToolValidationFailed(spec.name, p.name, "is required")
            if p.default is not None:
                out[p.name] = p.default
            continue
        value = arguments[p.name]
        expected = _PY_TYPES[p.type]
        if isinstance(value, bool) or not isinstance(value, expected):
            raise ToolValidationFailed(spec.name, p.name, f"must be a {p.type}")
        if p.choices and value not in p.choices:
            raise ToolValidationFailed(
                spec.name, p.name, f"must be one of {', '.join(p.choices)}"
            )
        out[p.name] = value
    return out


_PERIOD_HELP = (
    "Inclusive time period: the literal YEAR, or DATE:<M>/<D>-<M>/<D>, "
    'e.g. "DATE:3/1-3/31" for March.'
)

TOOL_SPECS: tuple[ToolSpec, ...] = (
    ToolSpec(
        "describe_weather_data",
        "Summarize an uploaded EnergyPlus weather (.epw) file: location, "
        "annual statistics for every field, hottest and coldest days, and "
        "monthly temperature means.",
        (
            ParamSpec(
                "file_name",
                "string",
                "Name of an uploaded .epw file.",
                required=True,
            ),
        ),
    ),
    ToolSpec(
        "visualize_weather_data",
        "Chart one variable of an uploaded EnergyPlus weather (.epw) file "
        "over a time period, as a line chart of bucket statistics or an "
        "hour-by-day heatmap. Returns an image artifact.",
        (
            ParamSpec(
                "file_name",
                "string",
                "Name of an uploaded .epw file.",
                required=True,
            ),
            ParamSpec(
                "data_type",
                "string",
                "Weather field to plot.",
                default="dry_bulb_temperature",
                choices=FIELD_NAMES,
            ),
            ParamSpec(
                "time_step",
                "string",
                "Aggregation granularity.",
                default="daily",
                choices=("hourly", "daily", "monthly"),
            ),
            ParamSpec("time_periods", "string", _PERIOD_HELP, default="YEAR"),
            ParamSpec(
                "chart_type",
                "string",
                "Chart style.",
                default="line",
                choices=("line", "heatmap"),
            ),
        ),
    ),
    ToolSpec(
        "retrieve_green_building_cases",
        "Find certified green building projects similar to the query and "
        "return attributed summaries with their rating and performance "
        "highlights.",
        (
            ParamSpec(
                "query",
                "string",
                "What kind of project to look for (type, climate, rating, goals).",
                required=True,
            ),
            ParamSpec("k", "integer", "How many cases to return.", default=5),
        ),
    ),
    ToolSpec(
        "query_green_building_knowledge",
        "Retrieve passages from green building textbooks, standards, and "
        "manuals relevant to the query, with source attribution.",
        (
            ParamSpec("query", "string", "The question to look up.", required=True),
            ParamSpec("k", "integer", "How many passages to retrieve.", default=5),
        ),
    ),
    ToolSpec(
        "analyze_uploaded_document",
        "Read an uploaded text document (.txt or .json) and return its "
        "content for analysis.",
        (
            ParamSpec(
                "file_name",
                "string",
                "Name of an uploaded .txt or .json file.",
                required=True,
            ),
        ),
    ),
)

_SPECS_BY_NAME = {s.name: s for s in TOOL_SPECS}

# failures the model can plausibly fix by rephrasing its call
_RECOVERABLE = (EpwError, PeriodError, EmptyPeriod, EmptySeries, EmptyInput)


def _fmt_value(v: float | None, unit: str = "") -> str:
    if v is None:
        return "n/a"
    text = f"{v:.1f}"
    return f"{text} {unit}".rstrip()


class Engine:
    """Executes validated tool calls against loaded data sources."""

    def __init__(
        self,
        store: ArtifactStore,
        embedder: Embedder,
        case_library: CaseLibrary | None = None,
        knowledge_chunks: Sequence[Chunk] = (),
        knowledge_index: VectorIndex | None = None,
        context_budget: int = DEFAULT_CONTEXT_BUDGET,
    ):
        self.store = store
        self.embedder = embedder
        self.case_library = case_library or CaseLibrary()
        self.context_budget = context_budget
        # metadata for everything this engine rendered, keyed by artifact id
        self.artifacts: dict[str, ChartArtifact] = {}

        self.case_index: VectorIndex | None = None
        if len(self.case_library):
            case_chunks = [
                Chunk(rec.case_id, rec.name, "case", case_search_text(rec), 0)
                for rec in self.case_library
            ]
            self.case_index = build_index(case_chunks, embedder)

        self.knowledge_chunks = {c.chunk_id: c for c in knowledge_chunks}
        self.knowledge_index = knowledge_index
        if self.knowledge_index is None and self.knowledge_chunks:
            self.knowledge_index = build_index(list(knowledge_chunks), embedder)

    @property
    def specs(self) -> tuple[ToolSpec, ...]:
        return TOOL_SPECS

    def wire_tools(self) -> list[dict]:
        return [s.wire_format() for s in TOOL_SPECS]

    def dispatch(self, call: ToolCall, files: Mapping[str, Path]) -> ToolResult:
        """Validate and run one tool call.

        Raises UnknownTool / ToolValidationFailed / FileNotFound; any
        domain error becomes error text in the result so the model can
        retry with better arguments.
        """
        spec = _SPECS_BY_NAME.get(call.name)
        if spec is None:
            raise UnknownTool(call.name)
        args = validate_arguments(spec, call.arguments)
        handler = getattr(self, "_run_" + call.name)
        try:
            text, artifacts = handler(args, files)
        except _RECOVERABLE as err:
            return ToolResult(call.id, f"Error: {err}", ())
        return ToolResult(call.id, text, tuple(artifacts))

    # --- individual tools ---------------------------------------------------

    @staticmethod
    def _resolve(files: Mapping[str, Path], file_name: str) -> Path:
        path = files.get(file_name)
        if path is None:
            raise FileNotFound(file_name)
        return path

    def _load_series(self, files: Mapping[str, Path], file_name: str):
        return parse_epw(self._resolve(files, file_name).read_bytes())

    def _run_describe_weather_data(self, args, files):
        series = self._load_series(files, args["file_name"])
        return _describe_text(args["file_name"], summarize(series)), ()

    def _run_visualize_weather_data(self, args, files):
        series = self._load_series(files, args["file_name"])
        period = parse_period(args["time_periods"])
        field = args["data_type"]
        if args["chart_type"] == "heatmap":
            title = f"{field} by hour and day, {args['time_periods']}"
            art = render_heatmap(series, field, period, self.store, title=title)
        else:
            title = f"{field} ({args['time_step']}, {args['time_periods']})"
            agg = aggregate(series, field, args["time_step"], period)
            art = render_line(agg, title, self.store)
        self.artifacts[art.artifact_id] = art
        text = (
            f"Chart created: {art.title}; {art.point_count} points. "
            f"It is attached as an image for the user to view."
        )
        return text, (art.artifact_id,)

    def _run_retrieve_green_building_cases(self, args, files):
        if self.case_index is None:
            return "Error: no case library is loaded.", ()
        hits = search(self.case_index, args["query"], args["k"], self.embedder)
        lines = []
        for hit in hits:
            rec = self.case_library.get(hit.chunk_id)
            kind = rec.building_type + (
                f"/{rec.building_subtype}" if rec.building_subtype else ""
            )
            lines.append(
                f"{hit.rank}. {rec.name} ({rec.city}, {rec.country}; {kind}; "
                f"{rec.rating_system} {rec.certification_level}, {rec.year})\n"
                f"   {rec.description}"
            )
            for sentence in rec.performance_sentences:
                lines.append(f"   - {sentence}")
        return "Matching cases:\n" + "\n".join(lines), ()

    def _run_query_green_building_knowledge(self, args, files):
        if self.knowledge_index is None:
            return "Error: no knowledge base is loaded.", ()
        hits = search(self.knowledge_index, args["query"], args["k"], self.embedder)
        block = assemble_context(hits, self.knowledge_chunks, self.context_budget)
        if not block:
            return "No relevant passages found.", ()
        return "Relevant knowledge base passages:\n\n" + block, ()

    def _run_analyze_uploaded_document(self, args, files):
        name = args["file_name"]
        path = self._resolve(files, name)
        ext = Path(name).suffix.lower()
        if ext not in READABLE_DOC_EXTS:
            return (
                f"Error: {name} cannot be read as text; only "
                f"{' and '.join(READABLE_DOC_EXTS)} documents are supported.",
                (),
            )
        text = path.read_text("utf-8", errors="replace")
        if len(text) > DOC_CHAR_LIMIT:
            text = text[:DOC_CHAR_LIMIT] + "\n... [truncated]"
        return f"Content of {name}:\n\n{text}", ()


def _describe_text(file_name: str, s: WeatherSummary) -> str:
    db = s.fields["dry_bulb_temperature"]
    lines = [
        f"Weather file {file_name}: {s.station_name}, {s.country} "
        f"(lat {s.latitude:.2f}, lon {s.longitude:.2f}), "
        f"{s.record_count} hourly records.",
        f"Dry-bulb temperature: annual mean {_fmt_value(db.mean)} degC, "
        f"range {_fmt_value(db.minimum)} to {_fmt_value(db.maximum)} degC.",
    ]
    if s.hottest_day and s.coldest_day:
        lines.append(
            f"Hottest day: {s.hottest_day.month}/{s.hottest_day.day} "
            f"(mean {_fmt_value(s.hottest_day.mean)} degC); coldest day: "
            f"{s.coldest_day.month}/{s.coldest_day.day} "
            f"(mean {_fmt_value(s.coldest_day.mean)} degC)."
        )
    monthly = ", ".join(
        f"{month}: {_fmt_value(mean)}" for month, mean in s.monthly_dry_bulb
    )
    lines.append(f"Monthly mean dry-bulb (degC): {monthly}.")
    for field, label, unit in (
        ("relative_humidity", "Relative humidity", "%"),
        ("global_horizontal_radiation", "Global horizontal radiation", "Wh/m2"),
        ("wind_speed", "Wind speed", "m/s"),
    ):
        st = s.fields[field]
        if st.count_present:
            lines.append(
                f"{label}: mean {_fmt_value(st.mean, unit)}, "
                f"range {_fmt_value(st.minimum)} to {_fmt_value(st.maximum, unit)}."
            )
    return "\n".join(lines)
