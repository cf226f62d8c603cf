"""Model families and parameter validation.

Three families of confining spin Calogero-Moser models are supported:

* ``LieA`` -- the A-series Lie-algebraic model with matrix spin variable,
* ``GibbonsHermsen`` -- n particles each carrying an ell-component spin row,
* ``BnType`` -- the B_n generalization with two spin blocks (ell1, ell2 columns).

Validation is report-style: :func:`validate` never raises, it returns a
:class:`ValidationReport` listing every violated constraint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum


class Family(str, Enum):
    LIE_A = "LieA"
    GIBBONS_HERMSEN = "GibbonsHermsen"
    BN_TYPE = "BnType"


#: Largest |k| considered when testing the excluded B_n level ratios
#: c1/c2 = -1 + 1/k.  The excluded set accumulates only at -1, which is
#: already ruled out by c1 + c2 > 0, so a finite bound loses nothing.
EXCLUDED_RATIO_BOUND = 10**6

_FIELD_NAMES = ("family", "omega", "n", "ell", "ell1", "ell2", "c", "c1", "c2")


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one model instance.

    Only the fields relevant to ``family`` need to be set; the rest stay
    ``None``.  Construction never validates physics constraints -- use
    :func:`validate`.
    """

    family: Family
    omega: float
    n: int
    ell: int | None = None
    ell1: int | None = None
    ell2: int | None = None
    c: float | None = None
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "n", int(self.n))
        for name in ("ell", "ell1", "ell2"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, int(v))
        for name in ("c", "c1", "c2"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, float(v))

    @property
    def period(self) -> float:
        """Basic period T = 2*pi/omega of the unreduced oscillator flow."""
        return 2.0 * math.pi / self.omega

    @staticmethod
    def from_dict(doc: dict) -> "ModelParams":
        """Build from a JSON-style dict; unknown keys are rejected."""
        unknown = set(doc) - set(_FIELD_NAMES)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        missing = {"family", "omega", "n"} - set(doc)
        if missing:
            raise ValueError(f"missing parameter keys: {sorted(missing)}")
        return ModelParams(**doc)

    @staticmethod
    def from_json(text: str) -> "ModelParams":
        return ModelParams.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "omega": self.omega, "n": self.n}
        for name in ("ell", "ell1", "ell2", "c", "c1", "c2"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`: empty ``violations`` means valid."""

    violations: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": list(self.violations),
            "metadata": dict(self.metadata),
        }


def excluded_bn_ratio(c1: float, c2: float,
                      bound: int = EXCLUDED_RATIO_BOUND) -> int | None:
    """Return the integer k (|k| <= bound, k not in {0, 1}) with
    c1/c2 = -1 + 1/k, or None if the ratio is admissible.

    Solving for k gives k = c2/(c1+c2); instead of looping over candidate
    integers we test whether that single value is an integer to relative
    tolerance 1e-12.
    """
    total = c1 + c2
    if total == 0.0:
        return None  # handled by the c1 + c2 > 0 check
    k = c2 / total
    k_round = round(k)
    if k_round in (0, 1) or abs(k_round) > bound:
        return None
    if abs(k - k_round) <= 1e-12 * max(1.0, abs(k)):
        return k_round
    return None


def validate(params: ModelParams) -> ValidationReport:
    """Check every parameter constraint of the given family.

    Pure and deterministic.  The report's metadata carries the derived
    period and a ``half_period_regime`` flag for the cases where the
    reduced flow closes after T/2 (B_n with an empty spin block, A-series
    with n = 2).
    """
    v: list[str] = []
    if not (params.omega > 0):
        v.append(f"omega must be positive, got {params.omega}")
    if params.n < 1:
        v.append(f"n must be >= 1, got {params.n}")

    half_period = False
    if params.family is Family.GIBBONS_HERMSEN:
        if params.ell is None or params.ell < 1:
            v.append(f"ell must be >= 1, got {params.ell}")
        if params.c is None or not (params.c > 0):
            v.append(f"c must be positive, got {params.c}")
    elif params.family is Family.BN_TYPE:
        l1 = params.ell1 if params.ell1 is not None else -1
        l2 = params.ell2 if params.ell2 is not None else -1
        if l1 < 0 or l2 < 0:
            v.append(f"ell1, ell2 must be non-negative, got {params.ell1}, {params.ell2}")
        elif l1 + l2 < 1:
            v.append("ell1 + ell2 must be positive")
        if params.c1 is None or params.c2 is None:
            v.append("c1 and c2 are required for the BnType family")
        else:
            if not (params.c1 + params.c2 > 0):
                v.append(f"c1 + c2 must be positive, got {params.c1 + params.c2}")
            if params.c1 * params.c2 == 0.0:
                v.append("c1 and c2 must both be nonzero")
            else:
                k = excluded_bn_ratio(params.c1, params.c2)
                if k is not None:
                    v.append(
                        f"c1/c2 = {params.c1 / params.c2} hits the excluded "
                        f"value -1 + 1/k with k = {k}"
                    )
        half_period = (params.ell1 == 0 or params.ell2 == 0)
    elif params.family is Family.LIE_A:
        half_period = (params.n == 2)

    meta = {
        "period": params.period if params.omega > 0 else None,
        "half_period_regime": half_period,
    }
    return ValidationReport(violations=tuple(v), metadata=meta)
