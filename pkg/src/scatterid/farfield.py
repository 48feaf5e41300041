"""Far-field patterns on the angle torus and distribution descriptors.

The far-field pattern for plane-wave incidence from angle theta_xi observed
at angle theta_x is the double Fourier series

    A(theta_xi, theta_x) = sum_{n,m} e^{i m (pi/2 - theta_xi)}
                                     e^{i n (theta_x - pi/2)} W[n, m],

sampled here on an N_v x N_v equispaced grid (axis 0 = incidence, axis 1 =
observation).  With n_v >= 2K+2 the sampling is alias-free and the grid is
a pair of zero-padded discrete Fourier transforms of the phase-twisted
coefficients.

The distribution descriptor is the periodic autocorrelation of |A|,

    S(v) = (2pi/N_v)^2 sum_eta |A(eta)| |A(eta - v)| ,

computed via FFT.  S is invariant under target rotation and translation
(translation only changes A by a unimodular factor) and couples scaling
with frequency: moving a target by (z, s, theta) turns S(.; omega) of the
reference shape evaluated at s*omega into S of the moved target at omega.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .coefficients import ScatteringMatrix, scattering_matrix
from .geometry import RigidMotion, TargetConfig, apply_motion

__all__ = [
    "FarFieldGrid",
    "DescriptorGrid",
    "far_field",
    "far_field_naive",
    "descriptor",
    "descriptor_naive",
    "invariance_gap",
    "save_sdesc",
    "load_sdesc",
]


@dataclass(frozen=True)
class FarFieldGrid:
    """Complex samples of the far-field pattern over [0, 2pi)^2."""

    values: np.ndarray  # (n_v, n_v), axis 0 incidence, axis 1 observation
    omega: float

    @property
    def n_v(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DescriptorGrid:
    """Nonnegative descriptor samples over the shift torus [0, 2pi)^2."""

    values: np.ndarray
    omega: float

    @property
    def n_v(self) -> int:
        return self.values.shape[0]

    def total(self) -> float:
        """Plain sum of samples (the quantity matched by the cost)."""
        return float(self.values.sum())


def far_field(w: ScatteringMatrix, n_v: int) -> FarFieldGrid:
    """Far-field grid of a coefficient matrix via zero-padded FFTs."""
    k = w.k_order
    if n_v < 2 * k + 2:
        raise ValueError(f"n_v={n_v} aliases an order-{k} series; "
                         f"need n_v >= {2 * k + 2}")
    orders = w.orders
    twist = (1j ** orders[None, :]) * ((-1j) ** orders[:, None])
    b = twist * w.entries  # b[n, m] = i^(m-n) W[n, m]
    g = np.zeros((n_v, n_v), dtype=complex)
    idx = np.mod(orders, n_v)
    g[np.ix_(idx, idx)] = b.T  # g[m mod n_v, n mod n_v]
    a = np.fft.fft(np.fft.ifft(g, axis=1) * n_v, axis=0)
    return FarFieldGrid(values=a, omega=w.omega)


def far_field_naive(w: ScatteringMatrix, n_v: int) -> FarFieldGrid:
    """Direct O(n_v^2 K^2) summation; reference for the FFT path."""
    th = 2.0 * math.pi * np.arange(n_v) / n_v
    orders = w.orders
    em = np.exp(1j * orders[None, :] * (math.pi / 2.0 - th[:, None]))
    en = np.exp(1j * orders[None, :] * (th[:, None] - math.pi / 2.0))
    a = em @ w.entries.T @ en.T
    return FarFieldGrid(values=a, omega=w.omega)


def descriptor(a: FarFieldGrid) -> DescriptorGrid:
    """Periodic autocorrelation of |A| with the (2pi/N_v)^2 cell weight."""
    f = np.abs(a.values)
    spec = np.fft.fft2(f)
    corr = np.fft.ifft2(spec * np.conj(spec)).real
    cell = (2.0 * math.pi / a.n_v) ** 2
    vals = cell * corr
    np.maximum(vals, 0.0, out=vals)  # clip FFT round-off at -1e-18
    return DescriptorGrid(values=vals, omega=a.omega)


def descriptor_naive(a: FarFieldGrid) -> DescriptorGrid:
    """Quartic-cost shift sum; reference for the FFT autocorrelation."""
    f = np.abs(a.values)
    n = a.n_v
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = np.sum(f * np.roll(np.roll(f, i, axis=0), j, axis=1))
    cell = (2.0 * math.pi / n) ** 2
    return DescriptorGrid(values=cell * out, omega=a.omega)


def invariance_gap(cfg: TargetConfig, motion: RigidMotion, omega: float,
                   K: int, n_v: int, n_nodes: int) -> float:
    """Relative sup-norm gap between the descriptor of the moved target at
    omega and the descriptor of the base target at motion.s * omega."""
    moved = apply_motion(cfg, motion)
    s_moved = descriptor(far_field(scattering_matrix(moved, omega, K,
                                                     n_nodes), n_v))
    s_base = descriptor(far_field(scattering_matrix(cfg, motion.s * omega, K,
                                                    n_nodes), n_v))
    scale = float(np.max(np.abs(s_base.values)))
    if scale == 0.0:
        return float(np.max(np.abs(s_moved.values)))
    return float(np.max(np.abs(s_moved.values - s_base.values))) / scale


# ---------------------------------------------------------------------------
# .sdesc file format: one JSON header line, then row-major little-endian
# float64 grid values
# ---------------------------------------------------------------------------
def save_sdesc(s: DescriptorGrid, path, target: str = "") -> None:
    header = {"format": "sdesc", "target": target, "omega": s.omega,
              "n_v": s.n_v}
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(np.ascontiguousarray(s.values, dtype="<f8").tobytes())


def load_sdesc(path) -> tuple[DescriptorGrid, str]:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode())
        if header.get("format") != "sdesc":
            raise ValueError(f"{path}: not an sdesc file")
        n = header["n_v"]
        vals = np.frombuffer(f.read(), dtype="<f8").reshape(n, n)
    grid = DescriptorGrid(values=vals.astype(float), omega=header["omega"])
    return grid, header.get("target", "")
