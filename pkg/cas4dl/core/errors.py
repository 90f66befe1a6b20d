"""Exception hierarchy shared by the core algorithms and the harness."""

from typing import Optional


class Cas4dlError(Exception):
    """Base class for every error raised deliberately by this package."""


class DimensionMismatchError(Cas4dlError, ValueError):
    """An array does not have the dimension the operation expects."""


class InvalidDistributionError(Cas4dlError, ValueError):
    """A discrete distribution has negative mass or does not sum to one."""


class TrivialSubspaceError(Cas4dlError):
    """The dictionary spans only the zero function on the grid."""


class TrainingDivergenceError(Cas4dlError):
    """Loss, gradient or network output became non-finite during training."""

    def __init__(self, message: str, epoch: Optional[int] = None, stage: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch
        self.stage = stage

    def __str__(self) -> str:
        where = []
        if self.stage is not None:
            where.append(f"stage {self.stage}")
        if self.epoch is not None:
            where.append(f"epoch {self.epoch}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base


class ConfigError(Cas4dlError):
    """Configuration file violates the schema."""

    def __init__(
        self,
        message: str,
        section: Optional[str] = None,
        key: Optional[str] = None,
        line: Optional[int] = None,
    ):
        super().__init__(message)
        self.section = section
        self.key = key
        self.line = line

    def __str__(self) -> str:
        location = ""
        if self.section is not None:
            location = f"[{self.section}]"
            if self.key is not None:
                location += f" {self.key}"
        if self.line is not None:
            location += f" (line {self.line})"
        base = super().__str__()
        return f"{location.strip()}: {base}" if location else base


class TabulatedDataError(Cas4dlError):
    """Tabulated grid/value files are inconsistent or malformed."""
