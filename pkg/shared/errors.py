"""Structured error types shared by every CropGAN module."""

EXIT_USAGE = 1
EXIT_FORMAT = 2
EXIT_DIVERGED = 3


class CropGanError(Exception):
    """Base exception carrying a machine-readable code and a recovery hint."""

    exit_code = EXIT_USAGE

    def __init__(
        self,
        code: str,
        message: str,
        details: dict | None = None,
        recovery_hint: str | None = None,
    ):
        self.code = code
        self.message = message
        self.details = details or {}
        self.recovery_hint = recovery_hint
        super().__init__(message)

    def to_dict(self) -> dict:
        """Convert to structured error response."""
        result = {
            "error": self.code,
            "message": self.message,
        }
        if self.details:
            result["details"] = self.details
        if self.recovery_hint:
            result["recovery_hint"] = self.recovery_hint
        return result


class UsageError(CropGanError):
    """Raised when an operation is called with arguments it cannot accept."""

    def __init__(self, message: str, details: dict | None = None, recovery_hint: str | None = None):
        super().__init__(
            code="USAGE_ERROR",
            message=message,
            details=details,
            recovery_hint=recovery_hint,
        )


class ConfigurationError(UsageError):
    """Raised when hyperparameters or layer geometry violate their invariants."""

    def __init__(self, field: str, reason: str):
        super().__init__(
            message=f"Invalid configuration '{field}': {reason}",
            details={"field": field, "reason": reason},
            recovery_hint="Check the value in the config file or on the command line.",
        )
        self.code = "CONFIGURATION_ERROR"


class DimensionError(UsageError):
    """Raised when tensor shapes do not line up."""

    def __init__(self, op: str, expected, actual):
        super().__init__(
            message=f"{op}: expected {expected}, got {actual}",
            details={"op": op, "expected": str(expected), "actual": str(actual)},
        )
        self.code = "DIMENSION_ERROR"


class FormatError(CropGanError):
    """Raised when a file does not parse; offset is the byte position of the fault."""

    exit_code = EXIT_FORMAT

    def __init__(self, path: str, offset: int, reason: str):
        super().__init__(
            code="FORMAT_ERROR",
            message=f"{path}: {reason} (at byte {offset})",
            details={"path": path, "offset": offset, "reason": reason},
            recovery_hint="The file is truncated or was not written by cropgan; regenerate it.",
        )
        self.path = path
        self.offset = offset


class TrainingDivergedError(CropGanError):
    """Raised when a training loss becomes NaN or infinite."""

    exit_code = EXIT_DIVERGED

    def __init__(self, stage: str, epoch: int, batch: int, losses: dict | None = None):
        details = {"stage": stage, "epoch": epoch, "batch": batch}
        if losses:
            details["losses"] = losses
        super().__init__(
            code="TRAINING_DIVERGED",
            message=f"{stage} loss became non-finite at epoch {epoch}, batch {batch}",
            details=details,
            recovery_hint="Lower the learning rate or change the seed and rerun.",
        )
        self.epoch = epoch
        self.batch = batch
