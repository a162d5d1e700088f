"""Exception types raised across the package.

Every error carries a ``kind`` string so the command line front end can emit a
machine-readable record without a lookup table.
"""


class HubNetError(Exception):
    """Base class for all package errors."""

    kind = "HubNetError"

    def to_dict(self):
        return {"kind": self.kind, "message": str(self)}


class InvalidParameter(HubNetError, ValueError):
    kind = "InvalidParameter"


class InvalidSpec(HubNetError, ValueError):
    kind = "InvalidSpec"


class DimensionMismatch(HubNetError, ValueError):
    kind = "DimensionMismatch"


class NonFiniteValue(HubNetError, ValueError):
    kind = "NonFiniteValue"


class ZeroVarianceColumn(HubNetError, ValueError):
    kind = "ZeroVarianceColumn"

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero variance")


class NotPositiveDefinite(HubNetError, ValueError):
    kind = "NotPositiveDefinite"


class NonzeroDiagonal(HubNetError, ValueError):
    kind = "NonzeroDiagonal"


class ZeroColumn(HubNetError, ValueError):
    kind = "ZeroColumn"

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} of X has zero norm")


class DegenerateDf(HubNetError, ValueError):
    kind = "DegenerateDf"


class NonBinaryResponse(HubNetError, ValueError):
    kind = "NonBinaryResponse"


class NoConvergence(HubNetError, RuntimeError):
    kind = "NoConvergence"


class AllWeightsInfinite(HubNetError, ValueError):
    kind = "AllWeightsInfinite"


class MissingGroundTruth(HubNetError, ValueError):
    kind = "MissingGroundTruth"


class MatrixFormatError(HubNetError, ValueError):
    kind = "MatrixFormatError"
