"""Exception types shared across the package."""


class InvmapError(Exception):
    """Base class for all invmap errors."""


class NotPrime(InvmapError):
    pass


class DimensionMismatch(InvmapError):
    pass


class SingularMatrix(InvmapError):
    pass


class FieldMismatch(InvmapError):
    pass


class FormatError(InvmapError):
    """Raised when a text block does not parse as the expected format."""


class NotThreeRegular(InvmapError):
    pass


class Disconnected(InvmapError):
    pass


class InvViolated(InvmapError):
    """A twist vector breaks the dual-edge antisymmetry condition."""


class MalformedEncoding(InvmapError):
    """A plain graph does not decode as a structure-encoding gadget."""


class BudgetExceeded(InvmapError):
    """An enumeration would exceed its hard budget.

    `required` carries the size the operation would have needed.
    """

    def __init__(self, msg, required=None):
        super().__init__(msg)
        self.required = required


class NotCoherent(InvmapError):
    """A pair partition fails one of the three coherence conditions.

    `condition` is the 1-based index of the first violated condition and
    `witness` a tuple of indices exhibiting the violation.
    """

    def __init__(self, msg, condition=None, witness=None):
        super().__init__(msg)
        self.condition = condition
        self.witness = witness


class NotCommutative(InvmapError):
    pass


class NotAbelian(InvmapError):
    pass


class NotASolution(InvmapError):
    pass
