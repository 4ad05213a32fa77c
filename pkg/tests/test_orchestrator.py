import json

import pytest

from gbqa.charts import ArtifactStore
from gbqa.llm import MockChatClient, UpstreamError, tool_reply
from gbqa.orchestrator import (
    Busy,
    ChatMessage,
    Orchestrator,
    SessionManager,
    ToolRoundsExceeded,
    UnknownSession,
    build_request_messages,
)
from gbqa.retrieval import TrigramEmbedder
from gbqa.tools import Engine, FileNotFound, ToolCall, ToolValidationFailed, UnknownTool
from helpers import make_epw_text


def make_orchestrator(tmp_path, replies, **kw):
    engine = Engine(ArtifactStore(tmp_path / "artifacts"), TrigramEmbedder())
    llm = MockChatClient(replies, repeat_last=kw.pop("repeat_last", False))
    return Orchestrator(engine, llm, **kw), llm


def add_epw(tmp_path, session, name="new_york.epw"):
    path = tmp_path / name
    path.write_text(make_epw_text(start=(1, 1), end=(12, 31)))
    session.uploaded_files[name] = path
    return name


# --- sessions ---------------------------------------------------------------


def test_new_session_has_system_prompt(tmp_path):
    orch, _ = make_orchestrator(tmp_path, [])
    session = orch.new_session()
    assert len(session.messages) == 1
    assert session.messages[0].role == "system"
    assert "Let's think step by step" in session.messages[0].content


def test_sessions_distinct(tmp_path):
    orch, _ = make_orchestrator(tmp_path, [])
    assert orch.new_session().session_id != orch.new_session().session_id


def test_unknown_session(tmp_path):
    orch, _ = make_orchestrator(tmp_path, ["hi"])
    with pytest.raises(UnknownSession):
        orch.handle_turn("nope", "hello")


def test_ttl_eviction():
    now = [0.0]
    manager = SessionManager(ttl=100, clock=lambda: now[0])
    session = manager.new_session()
    now[0] = 50
    assert manager.get(session.session_id) is session
    now[0] = 160  # 110s after last use
    with pytest.raises(UnknownSession):
        manager.get(session.session_id)
    assert len(manager) == 0


def test_touch_resets_ttl():
    now = [0.0]
    manager = SessionManager(ttl=100, clock=lambda: now[0])
    session = manager.new_session()
    for t in (90, 180, 270):
        now[0] = t
        manager.get(session.session_id)  # keeps it alive
    assert len(manager) == 1


def test_busy_session(tmp_path):
    orch, _ = make_orchestrator(tmp_path, ["hello there"])
    session = orch.new_session()
    orch.sessions.acquire_turn(session.session_id)
    try:
        with pytest.raises(Busy):
            orch.handle_turn(session.session_id, "hi")
    finally:
        orch.sessions.release_turn(session.session_id)
    # released: the turn can run now
    assert orch.handle_turn(session.session_id, "hi").text == "hello there"


# --- message invariants -----------------------------------------------------


def test_tool_message_requires_call_id():
    with pytest.raises(ValueError):
        ChatMessage("tool", "result text")


def test_assistant_message_requires_substance():
    with pytest.raises(ValueError):
        ChatMessage("assistant", None)


def test_wire_format_tool_calls():
    reply = tool_reply(("describe_weather_data", {"file_name": "a.epw"}))
    msg = ChatMessage("assistant", None, tool_calls=reply.tool_calls)
    wire = msg.wire_format()
    assert wire["tool_calls"][0]["function"]["name"] == "describe_weather_data"
    assert json.loads(wire["tool_calls"][0]["function"]["arguments"]) == {
        "file_name": "a.epw"
    }


# --- plain turns ------------------------------------------------------------


def test_no_tool_turn(tmp_path):
    orch, llm = make_orchestrator(tmp_path, ["Just an answer."])
    session = orch.new_session()
    response = orch.handle_turn(session.session_id, "What is LEED?")
    assert response.text == "Just an answer."
    assert response.artifacts == ()
    roles = [m.role for m in session.messages]
    assert roles == ["system", "user", "assistant"]
    # the model was offered all five tools
    tools = llm.requests[0]["tools"]
    assert len(tools) == 5


def test_file_names_appended_to_user_text(tmp_path):
    orch, llm = make_orchestrator(tmp_path, ["noted"])
    session = orch.new_session()
    name = add_epw(tmp_path, session)
    orch.handle_turn(session.session_id, "see attachment", file_names=[name])
    sent = llm.requests[0]["messages"][-1]
    assert sent["role"] == "user"
    assert sent["content"].endswith(f"Uploaded files: {name}")


def test_unknown_file_ref_fails_before_llm(tmp_path):
    orch, llm = make_orchestrator(tmp_path, ["never used"])
    session = orch.new_session()
    with pytest.raises(FileNotFound):
        orch.handle_turn(session.session_id, "look", file_names=["ghost.epw"])
    assert llm.requests == []


# --- the scripted march scenario --------------------------------------------


def march_script(file_name):
    return [
        tool_reply(
            (
                "visualize_weather_data",
                {
                    "file_name": file_name,
                    "data_type": "dry_bulb_temperature",
                    "time_step": "daily",
                    "time_periods": "DATE:3/1-3/31",
                },
            )
        ),
        "Here is the daily temperature chart for March.",
    ]


def test_march_visualization_turn(tmp_path):
    engine = Engine(ArtifactStore(tmp_path / "artifacts"), TrigramEmbedder())
    session_orch = Orchestrator(engine, MockChatClient(march_script("new_york.epw")))
    session = session_orch.new_session()
    add_epw(tmp_path, session)
    response = session_orch.handle_turn(
        session.session_id,
        "Please visualize the daily temperature conditions for March in New York.",
        file_names=["new_york.epw"],
    )
    assert len(response.artifacts) == 1
    art = engine.artifacts[response.artifacts[0]]
    assert art.point_count == 31
    assert response.text == "Here is the daily temperature chart for March."
    roles = [m.role for m in session.messages]
    assert roles == ["system", "user", "assistant", "tool", "assistant"]
    assert session.messages[-1].attachments == response.artifacts


def test_turn_conservation_with_tools(tmp_path):
    orch, _ = make_orchestrator(
        tmp_path,
        [
            tool_reply(
                ("retrieve_green_building_cases", {"query": "schools"}),
                ("query_green_building_knowledge", {"query": "daylight"}),
            ),
            "combined answer",
        ],
    )
    session = orch.new_session()
    orch.handle_turn(session.session_id, "research schools and daylight")
    roles = [m.role for m in session.messages]
    # 1 user, one assistant tool-call message, N tool results, 1 final
    assert roles == ["system", "user", "assistant", "tool", "tool", "assistant"]
    assert session.messages[2].tool_calls[0].name == "retrieve_green_building_cases"


# --- continuity -------------------------------------------------------------


def test_three_turn_history_verbatim(tmp_path):
    orch, llm = make_orchestrator(tmp_path, ["one", "two", "three"])
    session = orch.new_session()
    orch.handle_turn(session.session_id, "first question")
    orch.handle_turn(session.session_id, "second question")
    expected_prefix = [m.wire_format() for m in session.messages]
    orch.handle_turn(session.session_id, "third question")
    sent = llm.requests[2]["messages"]
    assert sent[: len(expected_prefix)] == expected_prefix
    assert sent[len(expected_prefix)]["content"] == "third question"
    assert len(sent) == len(expected_prefix) + 1


def test_history_grows_monotonically(tmp_path):
    orch, llm = make_orchestrator(tmp_path, ["a", "b"])
    session = orch.new_session()
    orch.handle_turn(session.session_id, "q1")
    snapshot = list(session.messages)
    orch.handle_turn(session.session_id, "q2")
    assert session.messages[: len(snapshot)] == snapshot


# --- dispatch loop limits ---------------------------------------------------


def test_endless_tool_calls_terminate(tmp_path):
    orch, llm = make_orchestrator(
        tmp_path,
        [tool_reply(("query_green_building_knowledge", {"query": "loop"}))],
        repeat_last=True,
    )
    session = orch.new_session()
    with pytest.raises(ToolRoundsExceeded):
        orch.handle_turn(session.session_id, "go")
    # initial call plus exactly max_tool_rounds retries
    assert len(llm.requests) == 1 + orch.max_tool_rounds


def test_rounds_bound_configurable(tmp_path):
    orch, llm = make_orchestrator(
        tmp_path,
        [tool_reply(("query_green_building_knowledge", {"query": "x"}))],
        repeat_last=True,
        max_tool_rounds=2,
    )
    session = orch.new_session()
    with pytest.raises(ToolRoundsExceeded):
        orch.handle_turn(session.session_id, "go")
    assert len(llm.requests) == 3


def test_upstream_error_propagates(tmp_path):
    orch, _ = make_orchestrator(tmp_path, [])
    session = orch.new_session()
    with pytest.raises(UpstreamError):
        orch.handle_turn(session.session_id, "hello?")


# --- validation feedback ----------------------------------------------------


def test_bad_arguments_fed_back_once(tmp_path):
    orch, llm = make_orchestrator(
        tmp_path,
        [
            tool_reply(("describe_weather_data", {"wrong_field": 1})),
            "recovered answer",
        ],
    )
    session = orch.new_session()
    response = orch.handle_turn(session.session_id, "describe my file")
    assert response.text == "recovered answer"
    tool_msgs = [m for m in session.messages if m.role == "tool"]
    assert len(tool_msgs) == 1
    assert tool_msgs[0].content.startswith("Error:")
    # the error text went back to the model in the second request
    assert llm.requests[1]["messages"][-1]["content"].startswith("Error:")


def test_repeated_bad_arguments_surface(tmp_path):
    bad = tool_reply(("describe_weather_data", {"wrong_field": 1}))
    orch, _ = make_orchestrator(tmp_path, [bad, bad, "never reached"])
    session = orch.new_session()
    with pytest.raises(ToolValidationFailed):
        orch.handle_turn(session.session_id, "describe my file")


def test_unknown_tool_fed_back_then_surfaced(tmp_path):
    bad = tool_reply(("launch_rockets", {}))
    orch, _ = make_orchestrator(tmp_path, [bad, "fine"], repeat_last=False)
    session = orch.new_session()
    assert orch.handle_turn(session.session_id, "go").text == "fine"

    orch2, _ = make_orchestrator(tmp_path, [bad, bad, "x"])
    session2 = orch2.new_session()
    with pytest.raises(UnknownTool):
        orch2.handle_turn(session2.session_id, "go")


def test_malformed_json_arguments(tmp_path):
    from gbqa.llm import AssistantReply, RawToolCall

    broken = AssistantReply(
        tool_calls=(RawToolCall("c1", "describe_weather_data", "{not json"),)
    )
    orch, _ = make_orchestrator(tmp_path, [broken, "ok then"])
    session = orch.new_session()
    assert orch.handle_turn(session.session_id, "go").text == "ok then"


def test_hallucinated_file_fed_back(tmp_path):
    orch, _ = make_orchestrator(
        tmp_path,
        [
            tool_reply(("describe_weather_data", {"file_name": "imaginary.epw"})),
            "sorry, wrong file",
        ],
    )
    session = orch.new_session()
    response = orch.handle_turn(session.session_id, "describe")
    assert response.text == "sorry, wrong file"


def test_dispatch_tool_direct(tmp_path):
    orch, _ = make_orchestrator(tmp_path, [])
    session = orch.new_session()
    with pytest.raises(UnknownTool):
        orch.dispatch_tool(ToolCall("c1", "nonsense", {}), session)


# --- history truncation -----------------------------------------------------


def test_truncation_drops_oldest_turn_keeps_system(tmp_path):
    orch, llm = make_orchestrator(tmp_path, ["r1", "r2", "r3"])
    session = orch.new_session()
    orch.handle_turn(session.session_id, "alpha " * 50)
    orch.handle_turn(session.session_id, "beta " * 50)
    total = sum(len(json.dumps(m.wire_format())) for m in session.messages)
    wire = build_request_messages(session.messages, total - 1)
    assert wire[0]["role"] == "system"
    assert len(wire) < len(session.messages)
    assert wire[1]["content"].startswith("beta")


def test_truncation_never_drops_only_turn(tmp_path):
    orch, _ = make_orchestrator(tmp_path, ["r1"])
    session = orch.new_session()
    orch.handle_turn(session.session_id, "only turn " * 100)
    wire = build_request_messages(session.messages, 10)
    assert [m["role"] for m in wire] == ["system", "user", "assistant"]
