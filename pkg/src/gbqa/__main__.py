"""Command line launcher for the HTTP gateway."""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from .charts import ArtifactStore
from .config import Settings
from .corpus import CaseLibrary, Chunk, chunk_text, load_cases
from .gateway import create_app
from .llm import ChatClient, DemoChatClient, HttpChatClient
from .orchestrator import Orchestrator, SessionManager
from .retrieval import TrigramEmbedder
from .tools import Engine


def load_data(data_dir: Path) -> tuple[CaseLibrary, list[Chunk]]:
    """Read case records and knowledge texts from a data directory.

    Expects data_dir/cases/*.json and data_dir/knowledge/*.txt; either may
    be absent, in which case the matching retrieval tool reports that no
    library is loaded.
    """
    case_files = sorted((data_dir / "cases").glob("*.json"))
    cases = load_cases(case_files) if case_files else CaseLibrary()
    chunks: list[Chunk] = []
    for path in sorted((data_dir / "knowledge").glob("*.txt")):
        chunks.extend(chunk_text(path.read_text("utf-8"), path.stem, "textbook"))
    return cases, chunks


def pick_client(kind: str, settings: Settings) -> ChatClient:
    if kind == "demo":
        return DemoChatClient()
    if not settings.llm_url or not settings.llm_model:
        sys.exit("--llm http needs GBQA_LLM_URL and GBQA_LLM_MODEL set")
    return HttpChatClient(
        settings.llm_url, settings.llm_model, settings.llm_api_key or None
    )


def build_app(settings: Settings, llm_kind: str = "demo"):
    work_dir = Path(settings.work_dir or tempfile.mkdtemp(prefix="gbqa-"))
    cases, chunks = load_data(Path(settings.data_dir))
    engine = Engine(
        ArtifactStore(work_dir / "artifacts"),
        TrigramEmbedder(),
        case_library=cases,
        knowledge_chunks=chunks,
    )
    orchestrator = Orchestrator(
        engine,
        pick_client(llm_kind, settings),
        sessions=SessionManager(ttl=settings.session_ttl),
    )
    return create_app(
        orchestrator,
        upload_root=work_dir / "uploads",
        cors_origins=settings.cors_origins,
        max_upload_bytes=settings.max_upload_bytes,
    )


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="gbqa", description="Green building design QA service"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="run the HTTP gateway")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument(
        "--llm",
        choices=("demo", "http"),
        default="demo",
        help="demo answers offline with keyword routing; http talks to a real model",
    )
    serve.add_argument("--data-dir", default=None, help="cases/ and knowledge/ root")
    args = parser.parse_args(argv)

    settings = Settings.from_env()
    if args.data_dir:
        settings = Settings(**{**settings.__dict__, "data_dir": args.data_dir})
    host = args.host or settings.host
    port = args.port if args.port is not None else settings.port

    import uvicorn

    uvicorn.run(build_app(settings, args.llm), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
