"""Multistatic acquisition: simulate, perturb, and invert echo matrices.

A full-view circular acquisition has Nr point receivers on a circle of
radius R about the measurement center z0 and Ns unit plane-wave sources
with equispaced direction angles.  The response matrix entry (r, s) is the
scattered field (total minus incident) of source s at receiver r.

For |x_r - z0| beyond the target circumradius the response factors exactly
through the scattering coefficients:

    MSR = L W R^T,  L[r, n] = -(i/4) H_n(omega |x_r - z0|) e^{i n theta_r},
                    R[s, m] = e^{i m (pi/2 - theta_s)},

which is the least-squares model used for reconstruction.  L has orthogonal
columns whose norms span the enormous dynamic range of |H_n|, so the
truncated pseudoinverse (relative singular-value cutoff 1e-12) is applied
after column equilibration; without it the cutoff would discard the small,
perfectly well-conditioned low-order columns whenever K is large.

Measurement noise is additive circular complex Gaussian, scaled so that
sigma0 = 1 means the per-entry noise RMS equals the mean modulus of the
clean entries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special as _sp

from . import bie
from .coefficients import ScatteringMatrix
from .geometry import TargetConfig, points_inside
from .specfun import MAX_ORDER, DomainError

__all__ = [
    "AcquisitionGeometry",
    "MSRMatrix",
    "msr_simulate",
    "add_noise",
    "reconstruct_w",
    "rel_error",
    "source_order_bound",
    "save_msr",
    "load_msr",
]


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Full-view circular acquisition layout."""

    radius: float
    n_sources: int
    n_receivers: int
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.radius <= 0 or self.n_sources < 1 or self.n_receivers < 1:
            raise ValueError("invalid acquisition geometry")

    def receiver_angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_receivers) / self.n_receivers

    def receivers(self) -> np.ndarray:
        th = self.receiver_angles()
        return np.asarray(self.center) \
            + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def source_angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_sources) / self.n_sources


@dataclass(frozen=True)
class MSRMatrix:
    """Measured scattered fields: entry (r, s) = (u_s - U_s)(x_r)."""

    entries: np.ndarray
    geometry: AcquisitionGeometry
    omega: float
    noise_level: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        g = self.geometry
        if self.entries.shape != (g.n_receivers, g.n_sources):
            raise ValueError("entries shape does not match geometry")


def source_order_bound(omega: float, circumradius: float) -> int:
    """Truncation order for the plane-wave cylindrical expansion at the
    target: ceil(omega * rho) + 20 keeps the dropped tail below 1e-10."""
    k = math.ceil(omega * circumradius) + 20
    if k > MAX_ORDER:
        raise DomainError(
            f"required source order {k} exceeds the supported {MAX_ORDER}")
    return k


def msr_simulate(cfg: TargetConfig, geom: AcquisitionGeometry, omega: float,
                 K_src: int | None = None, n_nodes: int = 256) -> MSRMatrix:
    """Simulate the clean response matrix by solving the transmission
    problem for every cylindrical source order and recombining plane waves
    through the Jacobi-Anger expansion about the measurement center."""
    system = bie.assemble(cfg, omega, n_nodes)
    ext = system.exterior
    z0 = np.asarray(geom.center)
    rho_z0 = float(np.max(np.hypot(ext.nodes[:, 0] - z0[0],
                                   ext.nodes[:, 1] - z0[1])))
    if geom.radius <= rho_z0:
        raise ValueError("receiver circle does not enclose the target")
    if K_src is None:
        # cylindrical sources expand plane waves about the origin
        rho = float(np.max(np.hypot(ext.nodes[:, 0], ext.nodes[:, 1])))
        K_src = source_order_bound(omega, rho)
    recv = geom.receivers()
    if np.any(points_inside(ext.nodes, recv)):
        raise ValueError("a receiver lies inside the target")

    dens = bie.solve_densities(system, K_src)
    diff = recv[:, None, :] - ext.nodes[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    g = -0.25j * _sp.hankel1(0, system.wavenumbers.k0 * dist) \
        * ext.weights[None, :]
    e = g @ dens.blocks["phi"].T  # (Nr, 2K+1): scattered field per order
    orders = dens.orders
    p = np.exp(1j * orders[None, :] * (math.pi / 2.0
                                       - geom.source_angles()[:, None]))
    return MSRMatrix(entries=e @ p.T, geometry=geom, omega=omega)


def add_noise(msr: MSRMatrix, sigma0: float, seed: int) -> MSRMatrix:
    """Additive circular complex Gaussian noise.

    Each entry gains sigma0 * tau * (g1 + i g2)/sqrt(2) with g1, g2 iid
    standard normal and tau the mean modulus of the input entries, so the
    noise RMS per entry is sigma0 * tau.  Deterministic given the seed.
    """
    if sigma0 < 0:
        raise ValueError("sigma0 must be nonnegative")
    if sigma0 == 0.0:
        return replace(msr, noise_level=0.0, seed=seed)
    tau = float(np.mean(np.abs(msr.entries)))
    rng = np.random.default_rng(seed)
    shape = msr.entries.shape
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    noisy = msr.entries + sigma0 * tau * g / math.sqrt(2.0)
    return replace(msr, entries=noisy, noise_level=sigma0, seed=seed)


def _equilibrated_pinv(a: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0.0] = 1.0
    return (np.linalg.pinv(a / norms[None, :], rcond=rcond).T / norms).T


def reconstruct_w(msr: MSRMatrix, K: int) -> ScatteringMatrix:
    """Least-squares coefficient estimate from a response matrix.

    Minimizes ||L W R^T - MSR||_F over order-K matrices via truncated
    pseudoinverses (cutoff 1e-12 relative, applied to the column-
    equilibrated factors).
    """
    g = msr.geometry
    if 2 * K + 1 > min(g.n_receivers, g.n_sources):
        raise ValueError(
            f"order {K} exceeds (min(Nr, Ns) - 1) / 2 "
            f"= {(min(g.n_receivers, g.n_sources) - 1) // 2}")
    orders = np.arange(-K, K + 1)
    recv = g.receivers() - np.asarray(g.center)
    rr = np.hypot(recv[:, 0], recv[:, 1])
    th = np.arctan2(recv[:, 1], recv[:, 0])
    lmat = -0.25j * _sp.hankel1(orders[None, :], msr.omega * rr[:, None]) \
        * np.exp(1j * orders[None, :] * th[:, None])
    rmat = np.exp(1j * orders[None, :] * (math.pi / 2.0
                                          - g.source_angles()[:, None]))
    west = _equilibrated_pinv(lmat) @ msr.entries @ _equilibrated_pinv(rmat).T
    return ScatteringMatrix(k_order=K, omega=msr.omega, entries=west,
                            provenance="reconstructed")


def rel_error(a: ScatteringMatrix, b: ScatteringMatrix) -> float:
    """Frobenius relative error ||a - b||_F / ||b||_F."""
    if a.k_order != b.k_order:
        raise ValueError("orders differ")
    denom = b.frobenius()
    if denom == 0.0:
        raise ZeroDivisionError("reference matrix has zero norm")
    return float(np.linalg.norm(a.entries - b.entries)) / denom


# ---------------------------------------------------------------------------
# .msr file format: one JSON header line, then row-major little-endian
# complex128 entries
# ---------------------------------------------------------------------------
def save_msr(msr: MSRMatrix, path) -> None:
    g = msr.geometry
    header = {
        "format": "msr",
        "geometry": {"radius": g.radius, "n_sources": g.n_sources,
                     "n_receivers": g.n_receivers, "center": list(g.center)},
        "omega": msr.omega,
        "noise_level": msr.noise_level,
        "seed": msr.seed,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(np.ascontiguousarray(msr.entries, dtype="<c16").tobytes())


def load_msr(path) -> MSRMatrix:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode())
        if header.get("format") != "msr":
            raise ValueError(f"{path}: not an msr file")
        gd = header["geometry"]
        geom = AcquisitionGeometry(radius=gd["radius"],
                                   n_sources=gd["n_sources"],
                                   n_receivers=gd["n_receivers"],
                                   center=tuple(gd["center"]))
        data = np.frombuffer(f.read(), dtype="<c16")
    entries = data.reshape(geom.n_receivers, geom.n_sources).astype(complex)
    return MSRMatrix(entries=entries, geometry=geom, omega=header["omega"],
                     noise_level=header["noise_level"], seed=header["seed"])
