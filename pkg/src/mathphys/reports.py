from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class BoundReport:
    """A checked inequality ``lhs <= rhs`` (within ``tol``) with a provenance label.

    ``details`` holds any auxiliary numbers a check wants to expose, e.g. the
    index of the worst sample.
    """

    name: str
    lhs: float
    rhs: float
    tol: float
    passed: bool
    provenance: str = ""
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs + self.tol - self.lhs

    def __bool__(self) -> bool:
        return self.passed
