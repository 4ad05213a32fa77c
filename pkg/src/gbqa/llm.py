"""Chat-completion clients.

Three interchangeable backends speak the same minimal interface: a remote
HTTP endpoint in the common chat-completions wire format with tool calls,
a scripted mock that replays canned replies and records every request
(the workhorse of the offline test suite), and a small rule-based demo
backend so the full stack can run with no network and no key.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import requests

__all__ = [
    "AssistantReply",
    "ChatClient",
    "DemoChatClient",
    "HttpChatClient",
    "MockChatClient",
    "RawToolCall",
    "UpstreamError",
    "tool_reply",
]


class UpstreamError(RuntimeError):
    """The model backend failed or returned something unusable."""


@dataclass(frozen=True)
class RawToolCall:
    id: str
    name: str
    arguments: str  # JSON text exactly as produced by the model


@dataclass(frozen=True)
class AssistantReply:
    content: str | None = None
    tool_calls: tuple[RawToolCall, ...] = ()


def tool_reply(*calls: tuple[str, dict], content: str | None = None) -> AssistantReply:
    """Build a reply carrying tool calls from (name, arguments) pairs."""
    raw = tuple(
        RawToolCall(id=f"call_{i}", name=name, arguments=json.dumps(args))
        for i, (name, args) in enumerate(calls)
    )
    return AssistantReply(content=content, tool_calls=raw)


class ChatClient(Protocol):
    def complete(
        self, messages: Sequence[dict], tools: Sequence[dict] | None = None
    ) -> AssistantReply: ...


class HttpChatClient:
    """Talks to a chat-completions HTTP endpoint with tool-calling."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 120.0,
    ):
        self._url = base_url.rstrip("/") + "/chat/completions"
        self._model = model
        self._api_key = api_key
        self._timeout = timeout
        self._http = requests.Session()

    def complete(self, messages, tools=None) -> AssistantReply:
        payload: dict = {"model": self._model, "messages": list(messages)}
        if tools:
            payload["tools"] = list(tools)
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = self._http.post(
                self._url, json=payload, headers=headers, timeout=self._timeout
            )
            resp.raise_for_status()
            data = resp.json()
        except (requests.RequestException, ValueError) as err:
            raise UpstreamError(f"chat backend failure: {err}") from err
        try:
            message = data["choices"][0]["message"]
            calls = tuple(
                RawToolCall(
                    id=c["id"],
                    name=c["function"]["name"],
                    arguments=c["function"]["arguments"],
                )
                for c in message.get("tool_calls") or ()
            )
            return AssistantReply(content=message.get("content"), tool_calls=calls)
        except (KeyError, IndexError, TypeError) as err:
            raise UpstreamError(f"malformed chat response: {err}") from err


class MockChatClient:
    """Replays a fixed script of replies and records every request.

    With repeat_last=True the final scripted reply answers every call past
    the end of the script; otherwise running out raises UpstreamError.
    """

    def __init__(
        self,
        replies: Iterable[AssistantReply | str] = (),
        repeat_last: bool = False,
    ):
        self.replies = [
            r if isinstance(r, AssistantReply) else AssistantReply(content=r)
            for r in replies
        ]
        self.repeat_last = repeat_last
        self.requests: list[dict] = []
        self._next = 0

    def complete(self, messages, tools=None) -> AssistantReply:
        self.requests.append(
            {
                "messages": copy.deepcopy(list(messages)),
                "tools": copy.deepcopy(list(tools)) if tools else None,
            }
        )
        if self._next >= len(self.replies):
            if self.repeat_last and self.replies:
                return self.replies[-1]
            raise UpstreamError("mock reply script exhausted")
        reply = self.replies[self._next]
        self._next += 1
        return reply


_MONTHS = {
    "january": (1, 31),
    "february": (2, 28),
    "march": (3, 31),
    "april": (4, 30),
    "may": (5, 31),
    "june": (6, 30),
    "july": (7, 31),
    "august": (8, 31),
    "september": (9, 30),
    "october": (10, 31),
    "november": (11, 30),
    "december": (12, 31),
}

_EPW_NAME = re.compile(r"[\w.\- ()]*?([\w.\-]+\.epw)", re.IGNORECASE)


class DemoChatClient:
    """Keyword-routed stand-in for a real model.

    Looks at the latest user message, picks at most one tool to call, and
    wraps the tool output into a short closing answer. Good enough to
    exercise the whole pipeline interactively without any credentials.
    """

    def complete(self, messages, tools=None) -> AssistantReply:
        last = messages[-1]
        if last.get("role") == "tool":
            text = (last.get("content") or "").strip()
            if not text:
                return AssistantReply(content="The tool returned no output.")
            snippet = text if len(text) < 1200 else text[:1200] + " ..."
            return AssistantReply(
                content="Here is what I found.\n\n" + snippet
            )

        user_text = ""
        for msg in reversed(messages):
            if msg.get("role") == "user":
                user_text = msg.get("content") or ""
                break
        lowered = user_text.lower()
        epw = _EPW_NAME.search(user_text)

        if epw and any(w in lowered for w in ("visualize", "plot", "chart", "draw")):
            period = "YEAR"
            for name, (month, last_day) in _MONTHS.items():
                if name in lowered:
                    period = f"DATE:{month}/1-{month}/{last_day}"
                    break
            step = "hourly" if "hourly" in lowered else "daily"
            if "monthly" in lowered:
                step = "monthly"
            return tool_reply(
                (
                    "visualize_weather_data",
                    {
                        "file_name": epw.group(1),
                        "data_type": "dry_bulb_temperature",
                        "time_step": step,
                        "time_periods": period,
                        "chart_type": "heatmap" if "heatmap" in lowered else "line",
                    },
                )
            )
        if epw and any(w in lowered for w in ("describe", "summar", "overview")):
            return tool_reply(("describe_weather_data", {"file_name": epw.group(1)}))
        if any(w in lowered for w in ("case", "precedent", "example project")):
            return tool_reply(
                ("retrieve_green_building_cases", {"query": user_text, "k": 3})
            )
        if any(w in lowered for w in ("standard", "leed", "breeam", "knowledge", "requirement", "how", "what", "why")):
            return tool_reply(
                ("query_green_building_knowledge", {"query": user_text, "k": 5})
            )
        return AssistantReply(
            content=(
                "I can describe or visualize uploaded weather files, look up "
                "green building cases, and answer questions from the knowledge "
                "base. Upload an EPW file or ask about a design topic."
            )
        )
