"""Exception hierarchy shared by all stancekit modules."""


class StanceKitError(Exception):
    """Base class; the CLI turns these into a one-line error and exit code 1."""


class CorpusError(StanceKitError):
    pass


class RecordError(CorpusError):
    """A single input line failed validation."""

    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class LexiconError(StanceKitError):
    pass


class TrainingError(StanceKitError):
    pass


class ModelFormatError(StanceKitError):
    pass


class AnalysisError(StanceKitError):
    pass


class ConfigError(StanceKitError):
    def __init__(self, key, message):
        super().__init__(f"invalid config key '{key}': {message}")
        self.key = key


class MissingArtifactError(StanceKitError):
    """An upstream stage has not been run; the CLI exits with status 2."""

    def __init__(self, stage, path):
        super().__init__(f"missing artifact {path}; run stage '{stage}' first")
        self.stage = stage
        self.path = path
