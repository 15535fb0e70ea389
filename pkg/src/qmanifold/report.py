"""Check records and the JSON verification report."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

SCHEMA_VERSION = "1.0"
STATUSES = ("pass", "fail", "vacuous")

# Short identity labels carried by every check record.
ANCHORS = {
    "plumbing": "plumbing",
    "inner": "scalar product <f,g> = int f* g",
    "operators": "(Q f)(x) = x f(x), (P f)(x) = -i d f(x)",
    "sup-seminorm": "|f|_{a,b} = sup |x^a D_b f|",
    "nuclear-seminorm": "|f|_p^2 = <f, (Q^2 + P^2 + 1)^p f>",
    "norm-bounds": "|f| <= |f|_1, |Q f| <= |f|_1",
    "expectation": "Obar(f) = <f, O f> / <f, f>",
    "section": "Qbar(Psi(x)) = x",
    "indistinguishable": "f ~ g iff Qbar(f) = Qbar(g)",
    "dqbar": "DQbar(f0)(f) formula",
    "dqbar-tangent": "Qbar remainder tangent to zero, o(t) = t^2",
    "continuity-bound": "|Qbar(f0+f) - Qbar(f0)| bound on |f| < |f0|/2",
    "expectation-shift": "Qbar(T_x f) = Qbar(f) + x",
    "translation-group": "T_y T_x f = T_{x+y} f",
    "translation-linear": "T_x linear",
    "translation-continuity": "x -> T_x f continuous injection",
    "translation-joint": "(x, f) -> T_x f jointly continuous",
    "tau": "tau(f) = (Qbar f, T_{-Qbar f} f)",
    "tau-inverse": "tau^{-1}(x, g) = T_x g",
    "dtau": "Dtau(f0)(g) formula, remainder o(t^2)",
    "dtau-inverse": "Dtau^{-1}(x0,g0)(x,g) formula, remainder o(t^2)",
    "dtau-mutual": "Dtau and Dtau^{-1} mutually inverse",
    "local-triviality": "omega = (chi^-1 x id) o tau o phi, omega_1 = Kolmogorov projection",
    "atlas-i": "quantum atlas (i): charts cover",
    "atlas-ii": "quantum atlas (ii): charts are bijections",
    "atlas-iii": "quantum atlas (iii): overlap images open (preimage characterization)",
    "atlas-iv": "quantum atlas (iv): transitions continuous and differentiable",
    "trivial-quantization": "U_i = X_i x S_0, phi_i(xi, g) = T_{chi_i(xi)} g",
    "transition-recovery": "Qbar o phi_ji o Psi = chi_ji",
    "kolmogorov": "Kolmogorov projection (xi, g) -> xi",
    "classical-limit": "classical limit of the trivial quantization returns M",
}


@dataclass
class CheckRecord:
    check_id: str
    anchor: str
    status: str
    residual: float
    tolerance: float
    wall_time: float = 0.0
    detail: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")
        if self.anchor not in ANCHORS.values():
            self.anchor = ANCHORS[self.anchor]

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("residual", "tolerance"):
            if not math.isfinite(d[key]):
                d[key] = repr(d[key])
        return d


def below(check_id: str, anchor: str, residual: float, tolerance: float, detail: str = "") -> CheckRecord:
    status = "pass" if residual < tolerance else "fail"
    return CheckRecord(check_id, anchor, status, float(residual), float(tolerance), detail=detail)


def at_least(check_id: str, anchor: str, value: float, threshold: float, detail: str = "") -> CheckRecord:
    status = "pass" if value >= threshold else "fail"
    return CheckRecord(check_id, anchor, status, float(value), float(threshold), detail=detail)


def timed(check_id: str, anchor: str, fn: Callable[[], CheckRecord | list]) -> list:
    """Run ``fn``; exceptions become a single failing record."""
    start = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:  # noqa: BLE001 - every failure must become a record
        out = CheckRecord(check_id, anchor, "fail", float("nan"), float("nan"),
                          detail=f"{type(exc).__name__}: {exc}")
    records = out if isinstance(out, list) else [out]
    elapsed = time.perf_counter() - start
    for r in records:
        r.wall_time = elapsed / len(records)
    return records


@dataclass
class VerificationReport:
    tool_version: str
    config: dict
    checks: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    @property
    def n_failed(self) -> int:
        return sum(r.failed for r in self.checks)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def sorted_checks(self) -> list:
        return sorted(self.checks, key=lambda r: r.check_id)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "config": self.config,
            "summary": {"total": len(self.checks), "failed": self.n_failed},
            "checks": [r.to_dict() for r in self.sorted_checks()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
