"""Multi-turn dialogue sessions and the tool-dispatch loop.

A turn appends the user message, calls the model with the full history
plus the five tool schemas, executes any tool calls it returns, feeds the
results back, and repeats until the model answers in plain text; the loop
is hard-bounded so a model stuck calling tools cannot spin forever.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from .llm import AssistantReply, ChatClient, RawToolCall
from .tools import (
    Engine,
    FileNotFound,
    ToolCall,
    ToolValidationFailed,
    UnknownTool,
)

__all__ = [
    "Busy",
    "ChatMessage",
    "DEFAULT_MAX_TOOL_ROUNDS",
    "Orchestrator",
    "Session",
    "SessionManager",
    "SYSTEM_PROMPT",
    "ToolRoundsExceeded",
    "TurnResponse",
    "UnknownSession",
]

SYSTEM_PROMPT = (
    "You are a green building design assistant. You help architects and "
    "engineers make performance-oriented decisions in early design: "
    "passive strategies, certification systems such as LEED and BREEAM, "
    "climate analysis, and precedent projects. Ground answers in the "
    "provided tools whenever they apply: weather files the user uploads "
    "can be summarized or charted, and the case and knowledge bases can "
    "be searched. Let's think step by step."
)

DEFAULT_MAX_TOOL_ROUNDS = 5
DEFAULT_HISTORY_CHAR_BUDGET = 240_000
DEFAULT_SESSION_TTL = 2 * 60 * 60.0


class UnknownSession(KeyError):
    pass


class Busy(RuntimeError):
    """Another turn is already running on this session."""


class ToolRoundsExceeded(RuntimeError):
    pass


class TurnResponse(NamedTuple):
    text: str
    artifacts: tuple[str, ...]


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant | tool
    content: str | None
    tool_calls: tuple[RawToolCall, ...] = ()
    tool_call_id: str | None = None
    attachments: tuple[str, ...] = ()

    def __post_init__(self):
        if self.role == "tool" and not self.tool_call_id:
            raise ValueError("tool messages must carry tool_call_id")
        if self.role == "assistant" and self.content is None and not self.tool_calls:
            raise ValueError("assistant messages need content or tool calls")

    def wire_format(self) -> dict:
        msg: dict = {"role": self.role, "content": self.content}
        if self.tool_calls:
            msg["tool_calls"] = [
                {
                    "id": c.id,
                    "type": "function",
                    "function": {"name": c.name, "arguments": c.arguments},
                }
                for c in self.tool_calls
            ]
        if self.tool_call_id:
            msg["tool_call_id"] = self.tool_call_id
        return msg


@dataclass
class Session:
    session_id: str
    messages: list[ChatMessage]
    uploaded_files: dict[str, Path] = field(default_factory=dict)
    created_at: float = field(default_factory=time.time)
    last_used: float = field(default_factory=time.time)


class SessionManager:
    """In-memory sessions with idle-TTL eviction and per-session turn locks."""

    def __init__(self, ttl: float = DEFAULT_SESSION_TTL, clock=time.time):
        self._ttl = ttl
        self._clock = clock
        self._mutex = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}

    def _evict_expired(self) -> None:
        now = self._clock()
        for sid in [
            s for s, sess in self._sessions.items()
            if now - sess.last_used > self._ttl
        ]:
            # never evict a session mid-turn
            if self._locks[sid].acquire(blocking=False):
                del self._sessions[sid]
                del self._locks[sid]

    def new_session(self) -> Session:
        session = Session(
            session_id=uuid.uuid4().hex,
            messages=[ChatMessage("system", SYSTEM_PROMPT)],
            created_at=self._clock(),
            last_used=self._clock(),
        )
        with self._mutex:
            self._evict_expired()
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def get(self, session_id: str) -> Session:
        with self._mutex:
            self._evict_expired()
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(session_id)
            session.last_used = self._clock()
            return session

    def acquire_turn(self, session_id: str) -> Session:
        with self._mutex:
            self._evict_expired()
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(session_id)
            lock = self._locks[session_id]
        if not lock.acquire(blocking=False):
            raise Busy(f"a turn is already running on session {session_id}")
        session.last_used = self._clock()
        return session

    def release_turn(self, session_id: str) -> None:
        with self._mutex:
            lock = self._locks.get(session_id)
        if lock is not None and lock.locked():
            lock.release()

    def __len__(self) -> int:
        with self._mutex:
            return len(self._sessions)


def build_request_messages(
    messages: Sequence[ChatMessage], char_budget: int
) -> list[dict]:
    """Wire-format history, dropping whole oldest turns if over budget.

    The system prompt and the newest turn are never dropped; a turn is
    everything from one user message up to the next.
    """
    wire = [m.wire_format() for m in messages]
    size = sum(len(json.dumps(m)) for m in wire)
    kept = list(messages)
    while size > char_budget:
        # find the second user message; drop everything before it except system
        user_idxs = [i for i, m in enumerate(kept) if m.role == "user"]
        if len(user_idxs) < 2:
            break
        cut = user_idxs[1]
        dropped, kept = kept[1:cut], [kept[0]] + kept[cut:]
        size -= sum(len(json.dumps(m.wire_format())) for m in dropped)
    return [m.wire_format() for m in kept]


class Orchestrator:
    def __init__(
        self,
        engine: Engine,
        llm: ChatClient,
        sessions: SessionManager | None = None,
        max_tool_rounds: int = DEFAULT_MAX_TOOL_ROUNDS,
        history_char_budget: int = DEFAULT_HISTORY_CHAR_BUDGET,
    ):
        self.engine = engine
        self.llm = llm
        self.sessions = sessions or SessionManager()
        self.max_tool_rounds = max_tool_rounds
        self.history_char_budget = history_char_budget

    def new_session(self) -> Session:
        return self.sessions.new_session()

    def dispatch_tool(self, call: ToolCall, session: Session):
        """Run one validated tool call against the session's files."""
        return self.engine.dispatch(call, session.uploaded_files)

    def handle_turn(
        self, session_id: str, user_text: str, file_names: Sequence[str] = ()
    ) -> TurnResponse:
        """Run one full dialogue turn; see module docstring for the loop."""
        session = self.sessions.acquire_turn(session_id)
        try:
            return self._run_turn(session, user_text, file_names)
        finally:
            self.sessions.release_turn(session_id)

    def _complete(self, session: Session) -> AssistantReply:
        return self.llm.complete(
            build_request_messages(session.messages, self.history_char_budget),
            self.engine.wire_tools(),
        )

    def _run_turn(
        self, session: Session, user_text: str, file_names: Sequence[str]
    ) -> TurnResponse:
        for name in file_names:
            if name not in session.uploaded_files:
                raise FileNotFound(name)
        text = user_text
        if file_names:
            text += "\n\nUploaded files: " + ", ".join(file_names)
        session.messages.append(ChatMessage("user", text))

        artifacts: list[str] = []
        fed_back: set[tuple[type, str]] = set()
        reply = self._complete(session)
        rounds = 0
        while reply.tool_calls:
            if rounds >= self.max_tool_rounds:
                raise ToolRoundsExceeded(
                    f"model kept calling tools after {self.max_tool_rounds} rounds"
                )
            session.messages.append(
                ChatMessage("assistant", reply.content, tool_calls=reply.tool_calls)
            )
            for raw in reply.tool_calls:
                result_text, arts = self._run_tool_call(raw, session, fed_back)
                artifacts.extend(arts)
                session.messages.append(
                    ChatMessage("tool", result_text, tool_call_id=raw.id)
                )
            reply = self._complete(session)
            rounds += 1

        final_text = reply.content or ""
        session.messages.append(
            ChatMessage("assistant", final_text, attachments=tuple(artifacts))
        )
        return TurnResponse(final_text, tuple(artifacts))

    def _run_tool_call(
        self,
        raw: RawToolCall,
        session: Session,
        fed_back: set[tuple[type, str]],
    ) -> tuple[str, tuple[str, ...]]:
        """Execute one raw call; structural failures are reported back to
        the model once per (kind, tool) and raised if they repeat."""
        try:
            try:
                arguments = json.loads(raw.arguments)
            except ValueError:
                raise ToolValidationFailed(raw.name, "$", "arguments are not valid JSON")
            if not isinstance(arguments, dict):
                raise ToolValidationFailed(raw.name, "$", "arguments must be an object")
            result = self.engine.dispatch(
                ToolCall(raw.id, raw.name, arguments), session.uploaded_files
            )
            return result.text, result.artifacts
        except (ToolValidationFailed, UnknownTool, FileNotFound) as err:
            key = (type(err), raw.name)
            if key in fed_back:
                raise
            fed_back.add(key)
            return f"Error: {err}", ()
