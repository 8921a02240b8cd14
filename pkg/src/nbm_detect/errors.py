"""Exception hierarchy shared by the library and the CLI.

Every error carries a short ``category`` string; the CLI prints it in its
machine-readable error line and maps it to an exit status.
"""


class NbmError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(NbmError, ValueError):
    category = "config"
    exit_code = 2


class DataError(NbmError, ValueError):
    """Malformed or invalid SCADA data (ingestion, validation, normalization)."""

    category = "data"
    exit_code = 3

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ModelError(NbmError, ValueError):
    category = "model"
    exit_code = 4


class TrainingError(ModelError):
    category = "training"

    def __init__(self, message, epoch=None):
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
        self.epoch = epoch


class AlarmError(NbmError, ValueError):
    category = "alarm"
    exit_code = 5


class FaultError(NbmError, ValueError):
    category = "fault"
    exit_code = 5


class StatsError(NbmError, ValueError):
    category = "stats"
    exit_code = 6


class ZeroVarianceError(StatsError):
    """Paired differences have zero variance, so the t statistic is undefined."""


class EvaluationError(NbmError, ValueError):
    category = "evaluation"
    exit_code = 6
