"""Exception hierarchy.

Every error maps to one of the CLI exit codes: 2 for configuration problems,
3 for numerical failures and 4 for IO / format problems.
"""


class NffError(Exception):
    exit_code = 1


class ConfigError(NffError, ValueError):
    exit_code = 2


class InvalidMaterialError(ConfigError):
    pass


class PlacementError(ConfigError):
    pass


class SamplingError(ConfigError):
    pass


class SplitError(ConfigError):
    pass


class ShapeError(NffError, ValueError):
    exit_code = 2


class DomainError(NffError, ValueError):
    """Empty input or a point outside the supported region."""

    exit_code = 3


class NumericalError(NffError, ArithmeticError):
    exit_code = 3


class InvertedElementError(NumericalError):
    def __init__(self, message, frame=None, step=None):
        super().__init__(message)
        self.frame = frame
        self.step = step


class CFLError(NumericalError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class OutOfDomainError(NumericalError):
    pass


class ModelDivergenceError(NumericalError):
    def __init__(self, message, object_index=None, step=None, trajectory=None, scene=None):
        super().__init__(message)
        self.object_index = object_index
        self.scene = scene  # batch index, when raised from a batched rollout
        self.step = step
        # last valid (truncated) trajectory, when available
        self.trajectory = trajectory


class TrainingError(NumericalError):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class LifecycleError(NffError, RuntimeError):
    exit_code = 3


class RankError(NumericalError):
    pass


class RegistrationError(NumericalError):
    pass


class FormatError(NffError, ValueError):
    exit_code = 4

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
