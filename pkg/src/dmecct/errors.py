"""Exception types raised across the package."""


class DMECCTError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DMECCTError, ValueError):
    pass


class RankDeficient(DMECCTError, ValueError):
    def __init__(self, rank, rows):
        super().__init__(f"matrix has rank {rank} < {rows} rows; drop redundant rows first")
        self.rank = rank
        self.rows = rows


class BadDimensions(DMECCTError, ValueError):
    pass


class FrozenSetSizeMismatch(DMECCTError, ValueError):
    pass


class UnsupportedFieldDegree(DMECCTError, ValueError):
    pass


class DesignDistanceTooLarge(DMECCTError, ValueError):
    pass


class ParseError(DMECCTError, ValueError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InconsistentDegrees(DMECCTError, ValueError):
    pass


class BadRate(DMECCTError, ValueError):
    pass


class ShapeMismatch(DMECCTError, ValueError):
    pass


class NotScalar(DMECCTError, ValueError):
    pass


class TapeConsumed(DMECCTError, RuntimeError):
    pass


class VariantArityMismatch(DMECCTError, ValueError):
    pass


class ManifestMismatch(DMECCTError, ValueError):
    pass


class ConfigMismatch(DMECCTError, ValueError):
    pass


class UnknownCode(DMECCTError, KeyError):
    pass
