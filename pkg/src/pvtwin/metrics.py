"""Update-policy decisions and reported error metrics.

Covers the two parameter-update policies (fixed interval and event trigger on
relative prediction errors), per-channel MAPE/RMSE reporting, and the
transient performance index used to grade post-update transients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, EmptyInput
from .model import OperatingPoint
from .telemetry import DARK_I_FLOOR, DARK_V_FLOOR, Measurement

FIXED_INTERVAL = "fixed_interval"
EVENT_TRIGGER = "event_trigger"

# Fixed-interval menu used by the policy sweep, in seconds.
SWEEP_INTERVALS = (10, 60, 300, 600, 900, 1800, 3600)

OPTIMIZATION_RESOLUTION_S = 10


@dataclass(frozen=True)
class UpdatePolicy:
    """Either ``fixed_interval`` with a period or ``event_trigger`` with a
    relative-error threshold."""

    kind: str
    interval_s: float = 10.0
    threshold: float = 0.005

    def __post_init__(self):
        if self.kind not in (FIXED_INTERVAL, EVENT_TRIGGER):
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if self.kind == FIXED_INTERVAL:
            if self.interval_s <= 0 or self.interval_s % OPTIMIZATION_RESOLUTION_S:
                raise ConfigError(
                    f"interval_s must be a positive multiple of "
                    f"{OPTIMIZATION_RESOLUTION_S} s, got {self.interval_s}")
        elif self.threshold <= 0:
            raise ConfigError("event threshold must be positive")

    @property
    def label(self) -> str:
        if self.kind == FIXED_INTERVAL:
            return f"fixed:{int(self.interval_s)}"
        return f"event:{self.threshold:g}"


def parse_policy(text: str) -> UpdatePolicy:
    """Parse ``fixed:60`` / ``event:0.005`` (a bare number means fixed seconds)."""
    text = text.strip()
    if ":" in text:
        kind, value = text.split(":", 1)
        kind = kind.strip().lower()
        if kind == "fixed":
            return UpdatePolicy(kind=FIXED_INTERVAL, interval_s=float(value))
        if kind == "event":
            return UpdatePolicy(kind=EVENT_TRIGGER, threshold=float(value))
        raise ConfigError(f"unknown policy {text!r}")
    return UpdatePolicy(kind=FIXED_INTERVAL, interval_s=float(text))


@dataclass(frozen=True)
class UpdateEvent:
    """A logged parameter update; recorded only when one actually occurred."""

    ts: float
    prev_params: "object"
    new_params: "object"
    trigger_error_i: float
    trigger_error_v: float


def relative_errors(meas: Measurement, predicted: OperatingPoint,
                    v_floor: float = DARK_V_FLOOR,
                    i_floor: float = DARK_I_FLOOR) -> tuple[float, float]:
    """Per-channel relative errors with dark-floor denominators."""
    err_i = abs(meas.i_meas - predicted.i) / max(meas.i_meas, i_floor)
    err_v = abs(meas.v_meas - predicted.v) / max(meas.v_meas, v_floor)
    return err_i, err_v


def should_update(policy: UpdatePolicy, now: float, last_update: float,
                  meas: Measurement, predicted: OperatingPoint) -> bool:
    """Decide whether the parameter set should be refit at this step."""
    if policy.kind == FIXED_INTERVAL:
        return now - last_update >= policy.interval_s
    err_i, err_v = relative_errors(meas, predicted)
    return err_i > policy.threshold or err_v > policy.threshold


@dataclass(frozen=True)
class ChannelStats:
    mape: float  # percent
    ape_min: float
    ape_max: float
    rmse: float


@dataclass(frozen=True)
class ErrorReport:
    i: ChannelStats
    v: ChannelStats
    p: ChannelStats
    n_samples: int


def _channel(meas: np.ndarray, pred: np.ndarray) -> ChannelStats:
    ape = 100.0 * np.abs(meas - pred) / np.abs(meas)
    rmse = float(np.sqrt(np.mean((meas - pred) ** 2)))
    return ChannelStats(mape=float(np.mean(ape)), ape_min=float(np.min(ape)),
                        ape_max=float(np.max(ape)), rmse=rmse)


def compute_error_report(pairs: list[tuple[Measurement, OperatingPoint]]) -> ErrorReport:
    """Per-channel MAPE and RMSE over (measured, predicted) pairs.

    Dark samples must be excluded upstream; the percentage denominators are
    the raw measured magnitudes.
    """
    if not pairs:
        raise EmptyInput("no (measurement, prediction) pairs")
    m_i = np.array([m.i_meas for m, _ in pairs])
    m_v = np.array([m.v_meas for m, _ in pairs])
    m_p = np.array([m.p_meas for m, _ in pairs])
    p_i = np.array([p.i for _, p in pairs])
    p_v = np.array([p.v for _, p in pairs])
    p_p = np.array([p.p for _, p in pairs])
    return ErrorReport(i=_channel(m_i, p_i), v=_channel(m_v, p_v),
                       p=_channel(m_p, p_p), n_samples=len(pairs))


def tri(window, ss_tail_fraction: float = 0.2) -> float:
    """Transient performance index of a window, in percent.

    The steady-state value is the mean of the trailing ``ss_tail_fraction``
    of the window; the index is the larger of the normalized overshoot and
    undershoot relative to it.
    """
    w = np.asarray(window, dtype=float)
    if w.size == 0:
        raise EmptyInput("empty window")
    if not 0.0 < ss_tail_fraction <= 1.0:
        raise ConfigError("ss_tail_fraction must be in (0, 1]")
    tail = max(1, int(round(ss_tail_fraction * w.size)))
    ssv = float(np.mean(w[-tail:]))
    if ssv <= 0.0:
        raise DomainError(f"steady-state value {ssv} must be positive")
    max_v = float(np.max(w))
    min_v = float(np.min(w))
    return max((max_v - ssv) / ssv, (ssv - min_v) / ssv) * 100.0
