"""Exception types shared across the package."""


class CskgError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CskgError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class LinkingError(CskgError, KeyError):
    """One or more names could not be resolved to graph nodes or vocabulary entries."""

    def __init__(self, unresolved):
        self.unresolved = list(unresolved)
        super().__init__("unresolved names: " + ", ".join(map(repr, self.unresolved)))

    def __str__(self):
        return self.args[0]


class GraphError(CskgError, ValueError):
    """Invalid node id, frozen-graph mutation or bad query arguments."""


class TrainingError(CskgError, RuntimeError):
    """Training diverged (non-finite loss or gradient)."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class CheckpointError(CskgError, ValueError):
    """A checkpoint is malformed or does not match the expected architecture."""
