"""Exception hierarchy shared across the toolkit."""


class SveadError(Exception):
    """Base class for all toolkit errors."""


# --- data ---------------------------------------------------------------

class MissingFile(SveadError):
    pass


class MissingLabelColumn(SveadError):
    pass


class NonNumericCell(SveadError):
    def __init__(self, row, col):
        super().__init__(f"non-numeric value at row {row}, column {col}")
        self.row = row
        self.col = col


class NonBinaryLabel(SveadError):
    def __init__(self, row):
        super().__init__(f"label at row {row} is not 0/1")
        self.row = row


class EmptyDataset(SveadError):
    pass


class DimensionMismatch(SveadError):
    pass


class DegenerateSplit(SveadError):
    pass


class ClassAbsent(SveadError):
    pass


class TooFewPerClass(SveadError):
    pass


# --- resample -----------------------------------------------------------

class SingleClass(SveadError):
    pass


class MinorityTooSmall(SveadError):
    pass


# --- tsne ---------------------------------------------------------------

class PerplexityInfeasible(SveadError):
    pass


class TooManyPoints(SveadError):
    pass


class NonFiniteGradient(SveadError):
    pass


# --- vae ----------------------------------------------------------------

class OutOfRangeInput(SveadError):
    pass


class NonFiniteLoss(SveadError):
    def __init__(self, epoch):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


# --- learners -----------------------------------------------------------

class InvalidHyperparameter(SveadError):
    pass


# --- metrics ------------------------------------------------------------

class LengthMismatch(SveadError):
    pass


class NonBinary(SveadError):
    pass


class NoPositives(SveadError):
    pass


class OutOfRange(SveadError):
    pass


class ShapeMismatch(SveadError):
    pass


class SizeTooLarge(SveadError):
    pass


# --- explain ------------------------------------------------------------

class TooManyFeatures(SveadError):
    pass


class NonFinitePrediction(SveadError):
    pass


class ZeroWeights(SveadError):
    pass


class UnknownFeature(SveadError):
    pass


# --- cli ----------------------------------------------------------------

class ConfigError(SveadError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class IoError(SveadError):
    pass
