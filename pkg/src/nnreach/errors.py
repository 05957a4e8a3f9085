"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures (ordering drift, bound escapes, non-finite states)
exit 3, and soundness violations detected by the validation harness
exit 1.
"""

from __future__ import annotations


class NNReachError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(NNReachError, ValueError):
    """Operands have incompatible shapes."""


class ConfigError(NNReachError, ValueError):
    """A scenario file, weight file, or override is invalid."""


class OrderingViolation(NNReachError, RuntimeError):
    """An embedding state left the ordered cone beyond tolerance."""


class BoundsEscape(NNReachError, RuntimeError):
    """A state left the box on which frozen network bounds were computed."""

    def __init__(self, message, dims=None, amounts=None):
        super().__init__(message)
        self.dims = tuple(dims) if dims is not None else ()
        self.amounts = tuple(amounts) if amounts is not None else ()


class NumericsError(NNReachError, RuntimeError):
    """Integration produced non-finite values or an invalid step setup."""


class BranchError(NNReachError, RuntimeError):
    """A partition branch failed during the reach driver.

    Carries the frame index, partition index, and sub-partition index so a
    failing run can be narrowed down to one branch.
    """

    def __init__(self, frame, partition, sub, cause):
        super().__init__(
            f"frame {frame}, partition {partition}, sub-partition {sub}: {cause}"
        )
        self.frame = frame
        self.partition = partition
        self.sub = sub
        self.cause = cause
