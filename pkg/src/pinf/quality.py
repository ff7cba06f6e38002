"""Domain vocabulary: flaw taxonomy, severity semantics, ground-truth binarization.

Severities are integer grades 0 (absent) to 5 (worst). An image counts as
poor when its overall "unrecognizable" grade reaches the cutoff (default 2).
Model predictions are raw reals and may fall outside [0, 5]; they are never
clamped for gating or metric math, only for display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class FlawKind(Enum):
    """The six reasons an image can be poor, in canonical order."""

    FRAMING = "framing"
    BLUR = "blur"
    DARK = "dark"
    BRIGHT = "bright"
    OBSCURED = "obscured"
    ROTATION = "rotation"


FLAW_ORDER: tuple[FlawKind, ...] = tuple(FlawKind)

# Output order of the quality model: overall difficulty first, then the flaws.
OUTPUT_NAMES: tuple[str, ...] = ("unrecognizable",) + tuple(k.value for k in FLAW_ORDER)

POOR_CUTOFF = 2


def check_severity(value: int, context: str = "severity") -> int:
    """Validate an integer severity grade in 0..5."""
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 5:
        raise ValueError(f"{context} must be an integer in 0..5, got {value!r}")
    return value


@dataclass(frozen=True)
class QualityAnnotation:
    """Ground-truth grades plus reference captions for one image."""

    image_id: str
    unrecognizable: int
    flaws: dict[FlawKind, int]
    captions: tuple[str, ...] = ()

    def __post_init__(self):
        check_severity(self.unrecognizable, "unrecognizable")
        if set(self.flaws) != set(FLAW_ORDER):
            missing = [k.value for k in FLAW_ORDER if k not in self.flaws]
            extra = [getattr(k, "value", k) for k in self.flaws if k not in FLAW_ORDER]
            raise ValueError(
                f"flaw map must cover exactly the six flaw kinds "
                f"(missing={missing}, extra={extra})"
            )
        for kind, value in self.flaws.items():
            check_severity(value, kind.value)

    def severity_vector(self) -> list[float]:
        """Targets in model output order: unrecognizable, then the six flaws."""
        return [float(self.unrecognizable)] + [float(self.flaws[k]) for k in FLAW_ORDER]


@dataclass(frozen=True)
class QualityPrediction:
    """Raw model outputs: overall difficulty plus per-flaw severities.

    Values are deliberately unclamped; slightly negative predictions are
    normal for a regressor and matter for calibration.
    """

    unrecognizable_hat: float
    flaws_hat: dict[FlawKind, float] = field(default_factory=dict)

    def __post_init__(self):
        values = [self.unrecognizable_hat, *self.flaws_hat.values()]
        if set(self.flaws_hat) != set(FLAW_ORDER):
            raise ValueError("prediction must carry all six flaw kinds")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("prediction values must be finite")

    @classmethod
    def from_vector(cls, out: list[float]) -> "QualityPrediction":
        if len(out) != 7:
            raise ValueError(f"expected 7 outputs, got {len(out)}")
        return cls(
            unrecognizable_hat=float(out[0]),
            flaws_hat={k: float(out[i + 1]) for i, k in enumerate(FLAW_ORDER)},
        )

    def as_vector(self) -> list[float]:
        return [self.unrecognizable_hat] + [self.flaws_hat[k] for k in FLAW_ORDER]


def binarize_ground_truth(ann: QualityAnnotation, cutoff: int = POOR_CUTOFF) -> bool:
    """True (poor) iff the annotated unrecognizable grade reaches the cutoff."""
    if not 1 <= cutoff <= 5:
        raise ValueError(f"cutoff must be in 1..5, got {cutoff}")
    return ann.unrecognizable >= cutoff


def display_severity(x: float) -> float:
    """Clamp a raw severity into [0, 5] and round to 2 decimals for display.

    Gating always uses the raw value; only user-facing rendering is clamped.
    """
    if not math.isfinite(x):
        raise ValueError(f"severity must be finite, got {x!r}")
    return round(min(5.0, max(0.0, x)), 2)
