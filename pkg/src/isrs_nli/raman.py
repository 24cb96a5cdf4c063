"""Per-channel power evolution along one span under loss and inter-channel
stimulated Raman scattering.

The integrated system is

    dP_i/dz = -alpha(f_i) P_i + P_i * sum_k g(f_k - f_i) P_k

with g the antisymmetric extension of the tabulated gain, so power flows
from higher to lower frequencies. Photon-energy ratios are not included,
which keeps the total power exactly conserved when alpha = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChannelPlan, FiberProfile, InputError, NumericalError


class StepSizeError(NumericalError):
    def __init__(self, z, msg="non-finite or non-positive power"):
        super().__init__(f"{msg} at z = {z:.6g} km; reduce the integration step")
        self.z = z


@dataclass(frozen=True)
class ZGrid:
    """Fixed RK4 step (upper bound, km) and number of uniform output samples."""

    max_step: float = 0.05
    samples: int = 201

    def __post_init__(self):
        if not self.max_step > 0:
            raise InputError("max_step must be positive")
        if self.samples < 2:
            raise InputError("need at least 2 output samples")


@dataclass(frozen=True, eq=False)
class PowerEvolution:
    z: np.ndarray  # (S,) km
    powers: np.ndarray  # (N, S) W
    step: float  # integration step actually used, km

    @property
    def launch_powers(self) -> np.ndarray:
        return self.powers[:, 0]

    def normalized(self) -> np.ndarray:
        return self.powers / self.powers[:, :1]


def gain_matrix(plan: ChannelPlan, fiber: FiberProfile) -> np.ndarray:
    """G[i, k] = g(f_k - f_i) in 1/(W km)."""
    f = plan.frequencies
    return fiber.gain(f[None, :] - f[:, None])


def solve_raman(plan: ChannelPlan, fiber: FiberProfile,
                z_grid: ZGrid = ZGrid()) -> PowerEvolution:
    """Integrate the Raman power equations over one span with classical RK4.

    The step is the largest value <= ``z_grid.max_step`` that places an
    integer number of steps between consecutive output samples.
    """
    if len(plan) == 0:
        raise InputError("empty channel plan")
    alpha = fiber.attenuation_at(plan.absolute_frequencies)
    G = gain_matrix(plan, fiber)
    L = fiber.span_length

    n_out = z_grid.samples - 1
    dz_out = L / n_out
    sub = max(1, math.ceil(dz_out / z_grid.max_step - 1e-9))
    h = dz_out / sub

    def rhs(P):
        return P * (G @ P - alpha)

    P = plan.powers.astype(float)
    out = np.empty((len(plan), z_grid.samples))
    out[:, 0] = P
    for j in range(n_out):
        for s in range(sub):
            k1 = rhs(P)
            k2 = rhs(P + 0.5 * h * k1)
            k3 = rhs(P + 0.5 * h * k2)
            k4 = rhs(P + h * k3)
            P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not (np.all(np.isfinite(P)) and np.all(P > 0)):
                raise StepSizeError((j * sub + s + 1) * h)
        out[:, j + 1] = P

    z = np.linspace(0.0, L, z_grid.samples)
    return PowerEvolution(z=z, powers=out, step=h)
