"""Runtime configuration read from GBQA_* environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

DEFAULT_PORT = 8080
DEFAULT_MAX_UPLOAD_BYTES = 20 * 1024 * 1024
DEFAULT_SESSION_TTL = 7200.0


def _split_origins(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


@dataclass(frozen=True)
class Settings:
    """Everything the serving process needs that is deployment-specific."""

    host: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    llm_url: str = ""
    llm_model: str = ""
    llm_api_key: str = ""
    cors_origins: tuple[str, ...] = ("*",)
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    session_ttl: float = DEFAULT_SESSION_TTL
    data_dir: str = "data"
    work_dir: str = field(default="")

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "Settings":
        env = os.environ if env is None else env

        def get(key: str, fallback: str) -> str:
            return env.get(key, fallback)

        return cls(
            host=get("GBQA_HOST", cls.host),
            port=int(get("GBQA_PORT", str(DEFAULT_PORT))),
            llm_url=get("GBQA_LLM_URL", ""),
            llm_model=get("GBQA_LLM_MODEL", ""),
            llm_api_key=get("GBQA_LLM_API_KEY", ""),
            cors_origins=_split_origins(get("GBQA_CORS_ORIGINS", "*")) or ("*",),
            max_upload_bytes=int(
                get("GBQA_MAX_UPLOAD_BYTES", str(DEFAULT_MAX_UPLOAD_BYTES))
            ),
            session_ttl=float(get("GBQA_SESSION_TTL", str(DEFAULT_SESSION_TTL))),
            data_dir=get("GBQA_DATA_DIR", cls.data_dir),
            work_dir=get("GBQA_WORK_DIR", ""),
        )
