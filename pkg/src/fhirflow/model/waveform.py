"""Decoding of sampled-data tokens into physical sample series.

Numeric tokens map to ``origin + factor * token``; the special tokens E, L,
and U (error / below detection limit / above detection limit) become typed
missing markers so a recording with unusable samples stays reviewable.  The
marker keeps its letter, which lets an encode round-trip restore the original
token text.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from ..errors import BadToken
from ..formatting import format_decimal
from .types import SampledData

MS_PER_SECOND = 1000.0


class SpecialToken(Enum):
    """Missing-sample markers defined by the sampled-data convention."""

    ERROR = "E"
    BELOW_LIMIT = "L"
    ABOVE_LIMIT = "U"


Sample = Union[float, SpecialToken]


def is_missing(sample: Sample) -> bool:
    return isinstance(sample, SpecialToken)


def as_optional(sample: Sample) -> float | None:
    """Collapse a sample to ``float | None`` for consumers that do not care
    which flavor of missing marker was present."""
    return None if isinstance(sample, SpecialToken) else sample


@dataclass(frozen=True)
class SampledWaveform:
    """Decoded sample series with its sampling rate and unit."""

    samples: tuple[Sample, ...]
    sampling_frequency_hz: float
    unit: str

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sampling_frequency_hz


def decode_sampled_data(sd: SampledData, context: str = "") -> SampledWaveform:
    """Decode tokens into samples; sampling frequency is 1000 / period_ms."""
    samples: list[Sample] = []
    for index, token in enumerate(sd.tokens()):
        if token in ("E", "L", "U"):
            samples.append(SpecialToken(token))
            continue
        try:
            numeric = float(token)
        except ValueError:
            raise BadToken(index, token, context) from None
        samples.append(sd.origin.value + sd.factor * numeric)
    return SampledWaveform(
        samples=tuple(samples),
        sampling_frequency_hz=MS_PER_SECOND / sd.period_ms,
        unit=sd.origin.unit,
    )


def encode_samples(
    samples: tuple[Sample, ...] | list[Sample],
    origin_value: float = 0.0,
    factor: float = 1.0,
) -> str:
    """Inverse of :func:`decode_sampled_data` for the token string.

    Numeric samples become ``(sample - origin) / factor`` in canonical decimal
    text; missing markers re-emit their letter.
    """
    tokens: list[str] = []
    for sample in samples:
        if isinstance(sample, SpecialToken):
            tokens.append(sample.value)
        else:
            tokens.append(format_decimal((sample - origin_value) / factor))
    return " ".join(tokens)
