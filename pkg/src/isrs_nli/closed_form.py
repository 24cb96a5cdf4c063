"""Closed-form nonlinear interference with ISRS and modulation-format terms.

For a channel of interest i the inverse nonlinear SNR is the sum of

* a self-channel (SPM) term scaling with n^(1+eps),
* cross-channel (XPM) terms over every interferer k, weighted by
  (n + 5/6 Phi_k), and
* for n > 1, a logarithmic format correction proportional to Phi_k.

Loss and ISRS enter through the per-channel fitted (alpha, alpha_bar, c_r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ChannelPlan, InputError, LinkSpec, NumericalError, db_to_linear, linear_to_db
from .fit import EffectiveParams

PI = math.pi


@dataclass(frozen=True, eq=False)
class NliResult:
    spm_inverse: np.ndarray
    xpm_inverse: np.ndarray  # Gaussian part, weight n
    kurtosis_correction_inverse: np.ndarray  # all Phi-proportional parts

    @property
    def inverse(self) -> np.ndarray:
        return self.spm_inverse + self.xpm_inverse + self.kurtosis_correction_inverse

    @property
    def snr_nli(self) -> np.ndarray:
        """dB"""
        return -linear_to_db(self.inverse)


def _param_arrays(params: Sequence[EffectiveParams]):
    alpha = np.array([p.alpha for p in params])
    alpha_bar = np.array([p.alpha_bar for p in params])
    c_r = np.array([p.c_r for p in params])
    return alpha, alpha_bar, c_r


def spm_phase(beta2, beta3, f):
    return 1.5 * PI**2 * (beta2 + 2.0 * PI * beta3 * f)


def xpm_phase(beta2, beta3, f_i, f_k):
    return -2.0 * PI**2 * (f_k - f_i) * (beta2 + PI * beta3 * (f_i + f_k))


def log_bracket(df, b_k):
    """(2|df| - B) log((2|df| - B) / (2|df| + B)) + 2B, written through atanh
    so large separations keep their precision."""
    d2 = 2.0 * np.abs(df)
    return 2.0 * b_k - 2.0 * (d2 - b_k) * np.arctanh(b_k / d2)


def compute_nli(plan: ChannelPlan, params: Sequence[EffectiveParams], link: LinkSpec,
                include_format_correction: bool = True) -> NliResult:
    """Per-channel inverse nonlinear SNR contributions.

    With ``include_format_correction=False`` every Phi-dependent term is
    skipped, i.e. all channels are treated as Gaussian.
    """
    N = len(plan)
    if len(params) != N:
        raise InputError(f"{len(params)} parameter sets for {N} channels")
    fib = link.fiber
    b2, b3, gamma, L = fib.beta2, fib.beta3, fib.gamma, fib.span_length
    n = int(link.span_count)
    n_tilde = 0 if n == 1 else n
    eps = link.coherence_epsilon

    f, B, P, Phi = plan.frequencies, plan.bandwidths, plan.powers, plan.kurtosis
    p_tot = plan.total_power
    alpha, alpha_bar, c_r = _param_arrays(params)
    if np.any(alpha <= 0) or np.any(alpha_bar <= 0):
        raise InputError("effective alpha and alpha_bar must be positive")
    A = alpha + alpha_bar
    T = (A - p_tot * c_r * f) ** 2
    denom = alpha_bar * (2.0 * alpha + alpha_bar)

    with np.errstate(divide="ignore", invalid="ignore"):
        # self-channel
        phi_i = spm_phase(b2, b3, f)
        spm = (4.0 / 9.0) * PI * gamma**2 * P**2 * float(n) ** (1.0 + eps) / (B**2 * phi_i * denom) * (
            (T - alpha**2) / alpha * np.arcsinh(phi_i * B**2 / (PI * alpha))
            + (A**2 - T) / A * np.arcsinh(phi_i * B**2 / (PI * A)))
        bad = ~(np.isfinite(spm) & (spm > 0))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise NumericalError(f"self-channel term not finite/positive for channel {i}")

        # cross-channel, rows are channels of interest, columns interferers
        fi, fk = f[:, None], f[None, :]
        ak, Ak, Tk = alpha[None, :], A[None, :], T[None, :]
        phi_ik = xpm_phase(b2, b3, fi, fk)
        x = phi_ik * B[:, None]
        pair = (32.0 / 27.0) * gamma**2 * (P**2 / B)[None, :] / (phi_ik * denom[None, :]) * (
            (Tk - ak**2) / ak * np.arctan(x / ak) + (Ak**2 - Tk) / Ak * np.arctan(x / Ak))
        off = ~np.eye(N, dtype=bool)
        bad = off & ~(np.isfinite(pair) & (pair > 0))
        if np.any(bad):
            i, k = (int(v) for v in np.argwhere(bad)[0])
            raise NumericalError(f"cross-channel term not finite/positive for pair ({i}, {k})")
        pair[~off] = 0.0

        xpm = np.array([math.fsum(n * row) for row in pair])

        if include_format_correction:
            w = (5.0 / 6.0) * Phi[None, :] * pair
            weight = n + (5.0 / 6.0) * Phi
            if np.any((weight > 0)[None, :] & off & ~(n * pair + w > 0)):
                raise NumericalError("format-weighted cross-channel term not positive")
            if n_tilde:
                phi_abs = np.abs(4.0 * PI**2 * (b2 + PI * b3 * (fi + fk)) * L)
                Bk = B[None, :]
                corr = (32.0 / 27.0) * gamma**2 * (P**2 / B)[None, :] * (5.0 / 3.0) * Phi[None, :] * PI \
                    * n_tilde * Tk / (phi_abs * Bk**2 * ak**2 * Ak**2) * log_bracket(fk - fi, Bk)
                corr[~off] = 0.0
            else:
                corr = np.zeros_like(pair)
            bad = off & ~(np.isfinite(w) & np.isfinite(corr))
            if np.any(bad):
                i, k = (int(v) for v in np.argwhere(bad)[0])
                raise NumericalError(f"format correction not finite for pair ({i}, {k})")
            w[~off] = 0.0
            kc = np.array([math.fsum(np.concatenate((w[i], corr[i]))) for i in range(N)])
        else:
            kc = np.zeros(N)

    return NliResult(spm_inverse=spm, xpm_inverse=xpm, kurtosis_correction_inverse=kc)


def _per_channel_inverse(snr_db, n):
    if snr_db is None:
        return np.zeros(n)
    v = np.broadcast_to(np.asarray(snr_db, dtype=float), (n,))
    if not np.all(np.isfinite(v)):
        raise InputError("SNR contributions must be finite")
    return 1.0 / db_to_linear(v)


def total_snr(nli: NliResult | np.ndarray, link: LinkSpec) -> np.ndarray:
    """Combine NLI, ASE and transceiver SNRs harmonically [dB]. Missing
    contributions count as noiseless."""
    inv = nli.inverse if isinstance(nli, NliResult) else 1.0 / db_to_linear(nli)
    n = inv.shape[0]
    inv = inv + _per_channel_inverse(link.snr_ase_db, n) + _per_channel_inverse(link.snr_trx_db, n)
    return -linear_to_db(inv)
