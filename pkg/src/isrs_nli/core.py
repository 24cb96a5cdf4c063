"""Domain types, unit conventions and parameter conversions.

Internal units throughout the package:

    frequency   THz (channel frequencies are relative to ``reference_frequency``)
    length      km
    power       W
    time        ps   (so beta2 is ps^2/km and beta3 is ps^3/km)

Anything given in dB (loss, launch power, SNR) is converted at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

# speed of light in nm * THz (= nm/ps)
C_NM_THZ = 299792.458
DB_PER_NEPER_POWER = 10.0 / math.log(10.0)

# two channels closer than this (relative to their half-bandwidth sum) overlap
_OVERLAP_RTOL = 1e-9


class InputError(ValueError):
    """Invalid user input (bad table, overlapping plan, ...)."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite or unphysical intermediate."""


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(p_dbm):
    return 1e-3 * 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def db_per_km_to_per_km(loss_db):
    """dB/km power loss -> 1/km (multiply by ln(10)/10)."""
    return np.asarray(loss_db, dtype=float) / DB_PER_NEPER_POWER


def per_km_to_db_per_km(alpha):
    return np.asarray(alpha, dtype=float) * DB_PER_NEPER_POWER


def wavelength_to_frequency(wavelength_nm):
    return C_NM_THZ / np.asarray(wavelength_nm, dtype=float)


def frequency_to_wavelength(frequency_thz):
    return C_NM_THZ / np.asarray(frequency_thz, dtype=float)


def convert_dispersion(D: float, S: float, lambda_ref: float) -> tuple[float, float]:
    """Convert dispersion D [ps/(nm km)] and slope S [ps/(nm^2 km)] at
    ``lambda_ref`` [nm] to (beta2 [ps^2/km], beta3 [ps^3/km])."""
    if not lambda_ref > 0:
        raise InputError(f"lambda_ref must be positive, got {lambda_ref}")
    k = lambda_ref**2 / (2.0 * math.pi * C_NM_THZ)  # nm * ps
    beta2 = -D * k
    beta3 = k**2 * (S + 2.0 * D / lambda_ref)
    return beta2, beta3


# --------------------------------------------------------------------------
# modulation formats


def excess_kurtosis(points, probabilities=None) -> float:
    """Excess kurtosis E|x|^4 / (E|x|^2)^2 - 2 of a complex constellation.

    ``points`` need not be power normalised; the statistic is invariant to
    scaling and rotation. ``probabilities`` defaults to uniform.
    """
    x = np.asarray(points, dtype=complex).ravel()
    if x.size == 0:
        raise InputError("empty constellation")
    if probabilities is None:
        p = np.full(x.size, 1.0 / x.size)
    else:
        p = np.asarray(probabilities, dtype=float).ravel()
        if p.shape != x.shape:
            raise InputError("probabilities and points differ in length")
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-9):
            raise InputError("probabilities must be non-negative and sum to 1")
    r2 = np.abs(x) ** 2
    m2 = float(np.dot(p, r2))
    if m2 <= 0:
        raise InputError("constellation has zero average power")
    m4 = float(np.dot(p, r2**2))
    return m4 / m2**2 - 2.0


def square_qam(order: int) -> np.ndarray:
    side = math.isqrt(order)
    if side * side != order or side < 2:
        raise InputError(f"square QAM needs a square order, got {order}")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    return (levels[:, None] + 1j * levels[None, :]).ravel()


_QAM_ORDERS = {"qpsk": 4, "4qam": 4, "16qam": 16, "64qam": 64, "256qam": 256}


def format_kurtosis(name: str) -> float:
    """Excess kurtosis of a named format: gaussian, qpsk, 16qam, 64qam, 256qam."""
    key = name.strip().lower().replace("-", "").replace("_", "")
    if key == "gaussian":
        return 0.0
    if key in _QAM_ORDERS:
        return excess_kurtosis(square_qam(_QAM_ORDERS[key]))
    raise InputError(f"unknown modulation format {name!r}")


def available_formats() -> list[str]:
    return ["gaussian", "qpsk", "16qam", "64qam", "256qam"]


# --------------------------------------------------------------------------
# fiber


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FiberProfile:
    """Fiber span description.

    ``attenuation_freq`` [THz, absolute] / ``attenuation`` [1/km] tabulate the
    power loss coefficient; ``raman_shift`` [THz] / ``raman_gain``
    [1/(W km)] tabulate the normalised Raman gain g_R/A_eff for shifts >= 0.
    """

    attenuation_freq: np.ndarray
    attenuation: np.ndarray
    raman_shift: np.ndarray
    raman_gain: np.ndarray
    beta2: float
    beta3: float
    gamma: float
    span_length: float

    def __post_init__(self):
        af, a = _readonly(self.attenuation_freq), _readonly(self.attenuation)
        rs, rg = _readonly(self.raman_shift), _readonly(self.raman_gain)
        if af.ndim != 1 or af.shape != a.shape or af.size < 1:
            raise InputError("attenuation table must be two equal-length 1-D columns")
        if np.any(np.diff(af) <= 0):
            raise InputError("attenuation table frequencies must be strictly increasing")
        if not np.all(a > 0):
            raise InputError("attenuation must be positive everywhere")
        if rs.ndim != 1 or rs.shape != rg.shape or rs.size < 1:
            raise InputError("Raman table must be two equal-length 1-D columns")
        if rs[0] != 0.0 or rg[0] != 0.0:
            raise InputError("Raman table must start at shift 0 with zero gain")
        if np.any(np.diff(rs) <= 0):
            raise InputError("Raman shifts must be strictly increasing")
        if not (self.span_length > 0):
            raise InputError("span_length must be positive")
        if not (self.gamma >= 0):
            raise InputError("gamma must be non-negative")
        for name, value in (("attenuation_freq", af), ("attenuation", a),
                            ("raman_shift", rs), ("raman_gain", rg)):
            object.__setattr__(self, name, value)

    @classmethod
    def flat(cls, alpha_db_per_km, *, beta2, beta3, gamma, span_length,
             c_r=0.0, max_shift=15.0, f_lo=150.0, f_hi=250.0):
        """Frequency-flat loss with a triangular gain g = c_r * shift up to
        ``max_shift`` (zero beyond)."""
        alpha = float(db_per_km_to_per_km(alpha_db_per_km))
        return cls(
            attenuation_freq=[f_lo, f_hi],
            attenuation=[alpha, alpha],
            raman_shift=[0.0, max_shift],
            raman_gain=[0.0, c_r * max_shift],
            beta2=beta2, beta3=beta3, gamma=gamma, span_length=span_length,
        )

    def attenuation_at(self, frequency_thz) -> np.ndarray:
        """Loss coefficient [1/km] at absolute frequencies, linear interpolation."""
        f = np.asarray(frequency_thz, dtype=float)
        lo, hi = self.attenuation_freq[0], self.attenuation_freq[-1]
        if np.any(f < lo) or np.any(f > hi):
            bad = f[(f < lo) | (f > hi)].ravel()[0]
            raise InputError(
                f"frequency {bad:.6g} THz outside attenuation table [{lo:.6g}, {hi:.6g}]")
        return np.interp(f, self.attenuation_freq, self.attenuation)

    def gain(self, shift_thz) -> np.ndarray:
        """Raman gain at signed shift (interferer minus channel frequency).

        Antisymmetric in the shift, linearly interpolated, zero beyond the
        last tabulated shift.
        """
        s = np.asarray(shift_thz, dtype=float)
        mag = np.abs(s)
        g = np.interp(mag, self.raman_shift, self.raman_gain, right=0.0)
        g = np.where(mag > self.raman_shift[-1], 0.0, g)
        return np.sign(s) * g

    def replace(self, **changes) -> "FiberProfile":
        kw = {name: getattr(self, name) for name in self.__dataclass_fields__}
        kw.update(changes)
        return FiberProfile(**kw)

    def without_raman(self) -> "FiberProfile":
        return self.replace(raman_gain=np.zeros_like(self.raman_gain))

    def cache_key(self) -> tuple:
        return (
            self.attenuation_freq.tobytes(), self.attenuation.tobytes(),
            self.raman_shift.tobytes(), self.raman_gain.tobytes(),
            self.beta2, self.beta3, self.gamma, self.span_length,
        )


# --------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class Channel:
    center_frequency: float  # THz, relative to the plan reference
    bandwidth: float  # THz
    launch_power: float  # W
    excess_kurtosis: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InputError(f"channel bandwidth must be positive, got {self.bandwidth}")
        if not self.launch_power > 0:
            raise InputError(f"launch power must be positive, got {self.launch_power}")
        if not -2.0 <= self.excess_kurtosis <= 0.0:
            raise InputError(
                f"excess kurtosis {self.excess_kurtosis} outside supported range [-2, 0]")


@dataclass(frozen=True)
class ChannelPlan:
    channels: tuple[Channel, ...]
    reference_frequency: float  # THz absolute

    def __post_init__(self):
        chans = tuple(self.channels)
        object.__setattr__(self, "channels", chans)
        if not chans:
            raise InputError("channel plan is empty")
        for a, b in zip(chans, chans[1:]):
            if b.center_frequency <= a.center_frequency:
                raise InputError("channels must be sorted by strictly increasing frequency")
            need = 0.5 * (a.bandwidth + b.bandwidth)
            if b.center_frequency - a.center_frequency < need * (1.0 - _OVERLAP_RTOL):
                raise InputError(
                    "overlapping channels at "
                    f"{a.center_frequency + self.reference_frequency:.6f} and "
                    f"{b.center_frequency + self.reference_frequency:.6f} THz")

    def __len__(self):
        return len(self.channels)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.center_frequency for c in self.channels])

    @property
    def absolute_frequencies(self) -> np.ndarray:
        return self.frequencies + self.reference_frequency

    @property
    def wavelengths(self) -> np.ndarray:
        return frequency_to_wavelength(self.absolute_frequencies)

    @property
    def bandwidths(self) -> np.ndarray:
        return np.array([c.bandwidth for c in self.channels])

    @property
    def powers(self) -> np.ndarray:
        return np.array([c.launch_power for c in self.channels])

    @property
    def kurtosis(self) -> np.ndarray:
        return np.array([c.excess_kurtosis for c in self.channels])

    @property
    def total_power(self) -> float:
        return math.fsum(c.launch_power for c in self.channels)

    def with_powers(self, powers) -> "ChannelPlan":
        powers = np.broadcast_to(np.asarray(powers, dtype=float), (len(self),))
        chans = [Channel(c.center_frequency, c.bandwidth, float(p), c.excess_kurtosis)
                 for c, p in zip(self.channels, powers)]
        return ChannelPlan(tuple(chans), self.reference_frequency)

    def with_kurtosis(self, phi) -> "ChannelPlan":
        phi = np.broadcast_to(np.asarray(phi, dtype=float), (len(self),))
        chans = [Channel(c.center_frequency, c.bandwidth, c.launch_power, float(k))
                 for c, k in zip(self.channels, phi)]
        return ChannelPlan(tuple(chans), self.reference_frequency)

    def cache_key(self) -> tuple:
        return (self.reference_frequency, self.frequencies.tobytes(),
                self.bandwidths.tobytes(), self.powers.tobytes())


@dataclass(frozen=True)
class BandSegment:
    """Contiguous run of identical channels; ``start_freq`` is the absolute
    center frequency [THz] of the lowest channel."""

    start_freq: float
    channel_count: int
    symbol_rate: float  # THz, used as the channel bandwidth
    spacing: float  # THz
    power: float  # W per channel
    format: str | float = "gaussian"

    @property
    def kurtosis(self) -> float:
        if isinstance(self.format, str):
            return format_kurtosis(self.format)
        return float(self.format)


def build_channel_plan(segments: Iterable[BandSegment | Mapping],
                       reference_frequency: float | None = None) -> ChannelPlan:
    """Expand band segments into a sorted, validated channel plan.

    The reference frequency defaults to the midpoint of the lowest and
    highest channel center frequencies.
    """
    segs = [s if isinstance(s, BandSegment) else BandSegment(**s) for s in segments]
    rows = []
    for s in segs:
        if s.channel_count < 1:
            raise InputError("segment channel_count must be >= 1")
        phi = s.kurtosis
        for m in range(s.channel_count):
            rows.append((s.start_freq + m * s.spacing, s.symbol_rate, s.power, phi))
    if not rows:
        raise InputError("no channels in plan")
    rows.sort(key=lambda r: r[0])
    f_abs = np.array([r[0] for r in rows])
    if reference_frequency is None:
        reference_frequency = 0.5 * (f_abs[0] + f_abs[-1])
    chans = tuple(Channel(f - reference_frequency, b, p, k)
                  for (f, b, p, k) in rows)
    return ChannelPlan(chans, float(reference_frequency))


# --------------------------------------------------------------------------
# link


@dataclass(frozen=True, eq=False)
class LinkSpec:
    fiber: FiberProfile
    span_count: int = 1
    coherence_epsilon: float = 0.0
    snr_ase_db: float | Sequence[float] | None = None
    snr_trx_db: float | Sequence[float] | None = None

    def __post_init__(self):
        if int(self.span_count) != self.span_count or self.span_count < 1:
            raise InputError(f"span_count must be a positive integer, got {self.span_count}")
        if not self.coherence_epsilon >= 0:
            raise InputError("coherence_epsilon must be >= 0")

    def replace(self, **changes) -> "LinkSpec":
        kw = {name: getattr(self, name) for name in self.__dataclass_fields__}
        kw.update(changes)
        return LinkSpec(**kw)
