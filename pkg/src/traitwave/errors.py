"""Exception hierarchy shared across the package."""


class TraitwaveError(Exception):
    """Base class for all package errors."""


# codec
class PayloadTooLarge(TraitwaveError):
    pass


class PayloadTooSmall(TraitwaveError):
    pass


# dataset
class SchemaError(TraitwaveError):
    pass


class LabelError(TraitwaveError):
    pass


class EmotionError(TraitwaveError):
    pass


class TooFewSubjects(TraitwaveError):
    pass


# features
class EmptySegment(TraitwaveError):
    pass


class AllZeroRow(TraitwaveError):
    pass


class EmptyInput(TraitwaveError):
    pass


# classical / deep
class DegenerateLabels(TraitwaveError):
    pass


class TooFewSamples(TraitwaveError):
    pass


class MissingEmotion(TraitwaveError):
    pass


class MissingEmotionFeatures(TraitwaveError):
    pass


class NonFiniteInput(TraitwaveError):
    pass


# service
class SelectorLoadError(TraitwaveError):
    pass


class InvalidTransition(TraitwaveError):
    pass


class EmptyPhaseBuffer(TraitwaveError):
    pass


class WrongPhase(TraitwaveError):
    pass


class BadRatingCount(TraitwaveError):
    pass


class SatisfactionOutOfRange(TraitwaveError):
    pass


class UnknownSession(TraitwaveError):
    pass
