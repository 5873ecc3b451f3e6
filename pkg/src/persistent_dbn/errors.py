"""Exception hierarchy shared by every subpackage."""


class PersistentDBNError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PersistentDBNError):
    """Structural or numerical problem with a prototype network."""


class CyclicGraph(ValidationError):
    def __init__(self, cycle_nodes):
        self.cycle_nodes = tuple(cycle_nodes)
        super().__init__(f"parent relation contains a cycle through {sorted(self.cycle_nodes)}")


class UnnormalizedCpd(ValidationError):
    def __init__(self, node, row, reason="row does not sum to 1"):
        self.node = node
        self.row = row
        super().__init__(f"CPD of {node!r}, row {row!r}: {reason}")


class NonIsolatedNonPersistent(ValidationError):
    def __init__(self, node, neighbor):
        self.node = node
        self.neighbor = neighbor
        super().__init__(
            f"non-persistent node {node!r} has non-persistent neighbor {neighbor!r}"
        )


class UnsupportedStructure(ValidationError):
    """The exact engine cannot handle this network (e.g. loopy skeleton)."""


class HorizonZero(ValidationError):
    def __init__(self, horizon):
        super().__init__(f"horizon must be a positive integer, got {horizon!r}")


class InDegreeTooLarge(UnsupportedStructure):
    def __init__(self, node, degree, cap):
        self.node, self.degree, self.cap = node, degree, cap
        super().__init__(f"node {node!r} requires enumerating {degree} parents (cap {cap})")


class EvidenceError(PersistentDBNError):
    """Malformed or impossible evidence."""


class ContradictoryEvidence(EvidenceError):
    def __init__(self, node, t_on, t_off):
        self.node, self.t_on, self.t_off = node, t_on, t_off
        super().__init__(
            f"persistent node {node!r} observed on at t={t_on} and off at later t={t_off}"
        )


class DuplicateObservation(EvidenceError):
    def __init__(self, node, t):
        super().__init__(f"more than one observation of {node!r} at t={t}")


class UnknownObservationValue(EvidenceError):
    def __init__(self, node, value):
        self.node, self.value = node, value
        super().__init__(f"value {value!r} is not in the alphabet of {node!r}")


class ParseError(PersistentDBNError):
    def __init__(self, line, reason):
        self.line, self.reason = line, reason
        super().__init__(f"line {line}: {reason}")


class SchemaViolation(PersistentDBNError):
    def __init__(self, field, reason="invalid or missing"):
        self.field = field
        super().__init__(f"{field}: {reason}")


class BudgetExceeded(PersistentDBNError):
    def __init__(self, required, budget, what="enumeration"):
        self.required, self.budget = required, budget
        super().__init__(f"{what} needs {required} entries, budget is {budget}")


class MemoryBudgetExceeded(BudgetExceeded):
    pass


class ShapeMismatch(PersistentDBNError):
    pass


class InvalidSpec(PersistentDBNError):
    pass


class ZeroEvidenceError(PersistentDBNError):
    """Raised by online filters when the evidence has probability zero."""
