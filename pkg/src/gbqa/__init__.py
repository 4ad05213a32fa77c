"""Green-building design question answering: weather-data reasoning,
case and knowledge retrieval, and an LLM tool-dispatch service."""

__version__ = "0.1.0"
