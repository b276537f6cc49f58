"""Exception hierarchy shared across the package."""


class TrajNASError(Exception):
    """Base class for all errors raised by trajnas."""


class NoMutableGene(TrajNASError):
    pass


class ParseError(TrajNASError, ValueError):
    pass


class SpaceMismatch(TrajNASError, ValueError):
    pass


class SpaceTooLarge(TrajNASError):
    pass


class InvalidMetrics(TrajNASError, ValueError):
    pass


class InvalidTemperature(TrajNASError, ValueError):
    pass


class InvalidParams(TrajNASError, ValueError):
    pass


class FormatError(TrajNASError):
    pass


class NonFiniteLoss(TrajNASError, FloatingPointError):
    def __init__(self, epoch, batch, value):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class ClockUnavailable(TrajNASError, RuntimeError):
    pass


class DegenerateTrack(TrajNASError, ValueError):
    pass


class UnsortedInput(TrajNASError, ValueError):
    pass


class LengthMismatch(TrajNASError, ValueError):
    pass


class EvaluationError(TrajNASError, RuntimeError):
    """An evaluator failed on a specific genome; ``genome_text`` names it."""

    def __init__(self, genome_text, cause):
        super().__init__(f"evaluation failed for genome {genome_text}: {cause}")
        self.genome_text = genome_text
        self.cause = cause
