"""
Exceptions raised by pxrdsep.

Every error derives from :class:`PxrdsepError` and from the built-in
exception that best describes it, so callers may catch either.
"""


class PxrdsepError(Exception):
    """Base class for all pxrdsep errors"""


# Structure parsing and crystallography
class MissingCell(PxrdsepError, ValueError):
    pass


class MissingSites(PxrdsepError, ValueError):
    pass


class MissingSymmetry(PxrdsepError, ValueError):
    pass


class MalformedLoop(PxrdsepError, ValueError):
    pass


class UnsupportedCifFeature(PxrdsepError, ValueError):
    pass


class DisorderedStructure(PxrdsepError, ValueError):
    pass


class UnsupportedElement(PxrdsepError, ValueError):
    pass


class InvalidLattice(PxrdsepError, ValueError):
    pass


class DegenerateCell(PxrdsepError, ValueError):
    pass


class EmptyRange(PxrdsepError, ValueError):
    pass


# Simulation
class ThetaOutOfRange(PxrdsepError, ValueError):
    pass


class NonPositiveInput(PxrdsepError, ValueError):
    pass


class NonPositiveFwhm(PxrdsepError, ValueError):
    pass


class NoReflectionsInRange(PxrdsepError, ValueError):
    pass


class GridMismatch(PxrdsepError, ValueError):
    pass


class LengthMismatch(PxrdsepError, ValueError):
    pass


# Mixing and preprocessing
class InfeasibleFloor(PxrdsepError, ValueError):
    pass


class RejectionLimitExceeded(PxrdsepError, RuntimeError):
    pass


class UnknownAnchor(PxrdsepError, ValueError):
    pass


class InsufficientLibrary(PxrdsepError, ValueError):
    pass


class DuplicateIds(PxrdsepError, ValueError):
    pass


class NegativeInput(PxrdsepError, ValueError):
    pass


class NonMonotonicAngles(PxrdsepError, ValueError):
    pass


class EmptyInput(PxrdsepError, ValueError):
    pass


# Tensor engine and network
class ShapeMismatch(PxrdsepError, ValueError):
    pass


class UnsupportedAxis(PxrdsepError, ValueError):
    pass


class NonFiniteValue(PxrdsepError, ValueError):
    pass


class PatchConfigInvalid(PxrdsepError, ValueError):
    pass


# Training and inference
class KExceedsKmax(PxrdsepError, ValueError):
    pass


class IncompatibleCheckpoint(PxrdsepError, ValueError):
    pass


class IncompatibleGrid(PxrdsepError, ValueError):
    pass


# Evaluation
class DegenerateInput(PxrdsepError, ValueError):
    pass


class EmptyIndex(PxrdsepError, ValueError):
    pass


# Configuration and files
class UnknownConfigKey(PxrdsepError, ValueError):
    pass


class CorruptCheckpoint(PxrdsepError, IOError):
    pass


class CorruptPatternFile(PxrdsepError, IOError):
    pass
