"""Per-pixel phase delays, baseline averaging, and elevation recovery.

The vertical-baseline relations:

    tau(phi)   = (d_v / c) * sin(phi)                 time delay
    dpsi(phi)  = 4*pi * (d_v / lambda) * sin(phi)     phase delay (two-way)
    phi(dpsi)  = arcsin(lambda * dpsi / (4*pi*d_v))   recovery

With d_v <= lambda/4 the recovery is unambiguous over +-90 degrees; larger
baselines would need fringe-ambiguity resolution and are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .imaging import ImageGrid, SarImageStack
from .types import C_LIGHT

# Relative slack when checking d_v against lambda/4, so a baseline built as
# exactly a quarter wavelength is not rejected over float dust.
_AMBIGUITY_SLACK = 1e-9


def phase_delay(s0: complex, s1: complex) -> float:
    """Phase of the complex correlation s0 * conj(s1), wrapped to (-pi, pi].

    Convention: s0 is the lower-layer VX, s1 the upper-layer VX, so a source
    above the sensor plane yields a positive delay.
    """
    if s0 == 0 or s1 == 0:
        raise DomainError("zero signal has no phase")
    return float(np.angle(s0 * np.conj(s1)))


def tau_from_elevation(phi: float, d_v: float) -> float:
    """One-way arrival-time delay across a vertical baseline."""
    if not d_v > 0:
        raise DomainError(f"baseline must be > 0, got {d_v!r}")
    return d_v * np.sin(phi) / C_LIGHT


def phase_from_elevation(phi: float, d_v: float, wavelength: float) -> float:
    """Unwrapped two-way phase delay for elevation angle phi."""
    if not d_v > 0:
        raise DomainError(f"baseline must be > 0, got {d_v!r}")
    if not wavelength > 0:
        raise DomainError(f"wavelength must be > 0, got {wavelength!r}")
    return 4.0 * np.pi * (d_v / wavelength) * np.sin(phi)


def elevation_from_phase(dpsi: float, d_v: float, wavelength: float) -> float:
    """Invert the phase-delay relation: phi = arcsin(lambda*dpsi/(4*pi*d_v)).

    Raises DomainError for baselines beyond lambda/4 (ambiguous fringes are
    out of scope) and for arguments outside [-1, 1].
    """
    if not d_v > 0:
        raise DomainError(f"baseline must be > 0, got {d_v!r}")
    if not wavelength > 0:
        raise DomainError(f"wavelength must be > 0, got {wavelength!r}")
    if d_v > 0.25 * wavelength * (1.0 + _AMBIGUITY_SLACK):
        raise DomainError(
            f"ambiguous baseline: d_v = {d_v:.6g} m exceeds lambda/4 = "
            f"{0.25 * wavelength:.6g} m"
        )
    arg = wavelength * dpsi / (4.0 * np.pi * d_v)
    if abs(arg) > 1.0:
        raise DomainError(f"phase delay {dpsi!r} outside the recoverable domain for d_v={d_v!r}")
    return float(np.arcsin(arg))


def mean_phase_delay(lower, upper, axis: int = 0):
    """Average phase delay over baselines by complex (vector) summation.

    lower/upper are arrays of complex pixel values with the baseline
    dimension on `axis`.  Returns (mean_phase, circular_variance) with the
    baseline axis reduced.  Vector averaging is immune to wrap-around at
    +-pi and reduces to the arithmetic mean for small spreads.  Baselines
    with an exactly zero correlation are dropped from the variance; if all
    are zero the phase is 0 and the variance 1.
    """
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    corr = lower * np.conj(upper)
    total = np.sum(corr, axis=axis)
    mean_phase = np.angle(total)

    mag = np.abs(corr)
    nonzero = mag > 0.0
    count = np.sum(nonzero, axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(nonzero, corr / np.where(nonzero, mag, 1.0), 0.0)
    resultant = np.abs(np.sum(unit, axis=axis))
    with np.errstate(invalid="ignore", divide="ignore"):
        variance = np.where(count > 0, 1.0 - resultant / np.maximum(count, 1), 1.0)
    variance = np.clip(variance, 0.0, 1.0)
    return mean_phase, variance


@dataclass(frozen=True)
class InterferogramPixel:
    """Scalar view of one interferogram pixel."""

    mean_phase_delay: float  # radians in (-pi, pi]
    circular_variance: float  # [0, 1]
    combined_magnitude: float
    snr_db: float


@dataclass(frozen=True, eq=False)
class InterferogramGrid:
    """Per-pixel interferometric measurements on an image grid."""

    grid: ImageGrid
    mean_phase_delay: np.ndarray
    circular_variance: np.ndarray
    combined_magnitude: np.ndarray
    snr_db: np.ndarray

    def pixel(self, iu: int, iv: int) -> InterferogramPixel:
        return InterferogramPixel(
            mean_phase_delay=float(self.mean_phase_delay[iu, iv]),
            circular_variance=float(self.circular_variance[iu, iv]),
            combined_magnitude=float(self.combined_magnitude[iu, iv]),
            snr_db=float(self.snr_db[iu, iv]),
        )


def snr_map(magnitude: np.ndarray) -> np.ndarray:
    """Per-pixel SNR in amplitude dB against the scene median magnitude.

    20*log10(|S| / median(|S|)); the median is robust to the bright-source
    outliers that would drag a mean reference upward.
    """
    magnitude = np.asarray(magnitude, dtype=float)
    if magnitude.size == 0:
        raise DomainError("empty magnitude grid")
    median = float(np.median(magnitude))
    if median <= 0.0:
        raise DomainError("zero median magnitude: degenerate all-zero image")
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(magnitude / median)


def combine_baselines(stack: SarImageStack) -> InterferogramGrid:
    """Correlate every vertical baseline and average per pixel.

    All baselines must share the same separation; mixed spacings would need
    per-baseline phase scaling that this pipeline does not implement.
    """
    baselines = stack.array.vertical_baselines
    if not baselines:
        raise DomainError("array has no vertical baseline; cannot interfere")
    seps = np.array([b.separation_m for b in baselines])
    if np.any(np.abs(seps - seps[0]) > 1e-12 * seps[0]):
        raise DomainError(f"mixed baseline separations are unsupported: {sorted(set(seps))}")

    lower = stack.images[[b.lower_vx for b in baselines]]
    upper = stack.images[[b.upper_vx for b in baselines]]
    mean_phase, variance = mean_phase_delay(lower, upper, axis=0)
    magnitude = np.mean(np.abs(stack.images), axis=0)
    return InterferogramGrid(
        grid=stack.grid,
        mean_phase_delay=mean_phase,
        circular_variance=variance,
        combined_magnitude=magnitude,
        snr_db=snr_map(magnitude),
    )


@dataclass(frozen=True, eq=False)
class ElevationMap:
    """Per-pixel elevation angles plus the interferometric quality maps.

    elevation is NaN where the angle is unrecoverable (correlation argument
    outside the arcsin domain).
    """

    grid: ImageGrid
    phase_center: np.ndarray  # (3,)
    wavelength_m: float
    baseline_m: float
    elevation: np.ndarray  # radians, NaN = absent
    interferogram: InterferogramGrid

    def __post_init__(self) -> None:
        pc = np.asarray(self.phase_center, dtype=float).reshape(3)
        pc.setflags(write=False)
        object.__setattr__(self, "phase_center", pc)


def build_elevation_map(stack: SarImageStack) -> ElevationMap:
    """Extract per-pixel elevation from a SAR image stack."""
    intf = combine_baselines(stack)
    d_v = stack.array.vertical_baselines[0].separation_m
    lam = stack.wavelength_m
    if d_v > 0.25 * lam * (1.0 + _AMBIGUITY_SLACK):
        raise DomainError(
            f"ambiguous baseline: d_v = {d_v:.6g} m exceeds lambda/4 = {0.25 * lam:.6g} m"
        )
    arg = lam * intf.mean_phase_delay / (4.0 * np.pi * d_v)
    elevation = np.where(np.abs(arg) <= 1.0, np.arcsin(np.clip(arg, -1.0, 1.0)), np.nan)
    return ElevationMap(
        grid=stack.grid,
        phase_center=stack.phase_center,
        wavelength_m=lam,
        baseline_m=d_v,
        elevation=elevation,
        interferogram=intf,
    )
