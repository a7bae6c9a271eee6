"""Verdict records shared by the verification channels."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

CHANNELS = ("spectral", "closed_form", "monte_carlo", "cumulant")
STATUSES = ("pass", "fail", "inconclusive", "error")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


@dataclass
class VerdictReport:
    identity: str
    channel: str
    statistic: float
    threshold: float
    passed: bool
    lhs_provenance: str = ""
    rhs_provenance: str = ""
    seed: int | None = None
    n: int | None = None
    samples: int | None = None
    status: str = ""
    expect_pass: bool = True
    version: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.version:
            from . import __version__

            self.version = __version__
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not self.status:
            self.status = "pass" if self.passed else "fail"
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @classmethod
    def judge(cls, identity, channel, statistic, threshold, **kw) -> "VerdictReport":
        """Build a report whose verdict is ``statistic <= threshold``."""
        statistic = float(statistic)
        ok = math.isfinite(statistic) and statistic <= threshold
        return cls(str(identity), channel, statistic, float(threshold), ok, **kw)

    @property
    def ok(self) -> bool:
        """Outcome matches expectation; inconclusive checks count as ok."""
        if self.status == "error":
            return False
        if self.status == "inconclusive":
            return True
        return self.passed == self.expect_pass

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=1)
