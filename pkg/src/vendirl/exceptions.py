"""
Exceptions raised by VendiRL.

Everything derives from `VendiRLError`, and also from the closest
builtin exception, so you can catch whichever you find more natural.
"""

from typing import Union


class VendiRLError(Exception):
    """Base class for all VendiRL errors."""


class SymmetryError(VendiRLError, ValueError):
    """A matrix that should be symmetric is not (beyond tolerance)."""


class InvalidInputError(VendiRLError, ValueError):
    """Input contains non-finite values or is otherwise malformed."""


class NormalizationError(VendiRLError, ValueError):
    """A probability vector does not sum to one."""


class NotPositiveDefiniteError(VendiRLError, ValueError):
    """Cholesky decomposition failed even after adding maximum jitter."""


class NotPositiveSemidefiniteError(VendiRLError, ValueError):
    """A kernel matrix has eigenvalues that are too negative."""


class EmptyInputError(VendiRLError, ValueError):
    """An operation needs at least one element and got none."""


class InsufficientSamplesError(VendiRLError, ValueError):
    """Not enough observations to compute a statistic."""


class DegenerateMeanError(VendiRLError, ValueError):
    """A trajectory mean has zero norm, so it has no direction."""


class ParameterError(VendiRLError, ValueError):
    """A parameter is out of its valid range."""


class EpisodeOverError(VendiRLError, RuntimeError):
    """Tried to step an episode that has already terminated."""


class NumericalFailureError(VendiRLError, ArithmeticError):
    """Non-finite values appeared in a network output or gradient."""


class UnfilledMemoryError(VendiRLError, LookupError):
    """A skill memory slot has not been completely filled yet."""


class MemoryIndexError(VendiRLError, IndexError):
    """Skill or time index outside a skill memory."""


class UnsyncedSceneError(VendiRLError, RuntimeError):
    """A scene was used before its memory and kernel were built."""


class ShapeError(VendiRLError, ValueError):
    """Array shapes (number of skills, observation dimensions) disagree."""


class ConfigError(VendiRLError, ValueError):
    """Problem in an experiment configuration file."""

    def __init__(
        self,
        message: str,
        *,
        section: Union[str, None] = None,
        key: Union[str, None] = None,
        lineno: Union[int, None] = None,
    ) -> None:
        self.section = section
        self.key = key
        self.lineno = lineno
        where = []
        if lineno is not None:
            where.append(f"line {lineno}")
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key is not None else ""))
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class TrainingError(VendiRLError, RuntimeError):
    """Something went wrong inside the training loop.

    The original exception is available as `__cause__`.
    """

    def __init__(
        self,
        message: str,
        *,
        epoch: int,
        scene: Union[int, None] = None,
        step: Union[int, None] = None,
    ) -> None:
        self.epoch = epoch
        self.scene = scene
        self.step = step
        where = f"epoch {epoch}"
        if scene is not None:
            where += f", scene {scene}"
        if step is not None:
            where += f", step {step}"
        super().__init__(f"{where}: {message}")


class TrajectoryFileError(VendiRLError, ValueError):
    """A trajectory CSV file is malformed."""

    def __init__(self, message: str, *, row: Union[int, None] = None) -> None:
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
