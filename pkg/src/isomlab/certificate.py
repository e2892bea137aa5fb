"""Machine-checkable verdicts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS = "PASS"
FAIL = "FAIL"
FAILED_PRECONDITION = "FAILED_PRECONDITION"
STATUSES = (PASS, FAIL, FAILED_PRECONDITION)


@dataclass
class Certificate:
    """Outcome of a finite check.

    ``achieved`` is the measured quantity (usually a worst-case deviation)
    and ``claimed_bound`` the threshold it was tested against.
    """

    kind: str
    claimed_bound: float
    achieved: float
    status: str
    witnesses: list = field(default_factory=list)
    truncation_error: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @classmethod
    def bound(cls, kind, claimed, achieved, **kw) -> "Certificate":
        """PASS iff ``achieved <= claimed``."""
        status = PASS if achieved <= claimed else FAIL
        return cls(kind, float(claimed), float(achieved), status, **kw)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "kind": self.kind,
            "claimed_bound": self.claimed_bound,
            "achieved": self.achieved,
            "witnesses": list(self.witnesses),
            "status": self.status,
        }
        if self.truncation_error is not None:
            out["truncation_error"] = self.truncation_error
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        for key in ("kind", "claimed_bound", "achieved", "witnesses", "status"):
            if key not in data:
                raise KeyError(key)
        return cls(
            kind=str(data["kind"]),
            claimed_bound=_num(data["claimed_bound"]),
            achieved=_num(data["achieved"]),
            status=data["status"],
            witnesses=list(data["witnesses"]),
            truncation_error=None if data.get("truncation_error") is None
            else _num(data["truncation_error"]),
            metadata=dict(data.get("metadata", {})),
        )


def _num(x):
    return float(x) if not isinstance(x, str) else float(x.replace("Infinity", "inf"))
