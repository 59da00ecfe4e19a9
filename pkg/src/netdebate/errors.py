"""Exception hierarchy shared across the package."""


class NetDebateError(Exception):
    """Base class for all package errors."""


class InvalidParameter(NetDebateError, ValueError):
    pass


class InvalidNode(NetDebateError, IndexError):
    pass


class InvalidInput(NetDebateError, ValueError):
    pass


class ParseError(NetDebateError, ValueError):
    """Malformed input text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(NetDebateError):
    """Fatal misconfiguration (bad credentials, missing files, bad config)."""


class AgentError(NetDebateError):
    """A backend could not produce a response for one agent turn."""


class BackendFailure(AgentError):
    def __init__(self, message: str, attempts: int):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempts)")


class ProtocolError(AgentError):
    """The backend answered with a body we cannot interpret."""


class ScriptGap(AgentError, KeyError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"script has no entry for {key!r}")

    def __str__(self) -> str:
        return self.args[0]


class IncompleteData(NetDebateError):
    def __init__(self, gaps):
        self.gaps = list(gaps)
        shown = ", ".join(map(str, self.gaps[:10]))
        more = "" if len(self.gaps) <= 10 else f" (+{len(self.gaps) - 10} more)"
        super().__init__(f"missing transcripts: {shown}{more}")
