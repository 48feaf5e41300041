"""Scattering-coefficient matrices and their exact transform rules.

The coefficient of order (n, m) is the projection of the order-m exterior
density onto the conjugate cylindrical wave of order n over the exterior
curve,

    W[n, m] = sum_j conj(C_n(y_j)) phi_m(y_j) w_j ,

so the far-field perturbation of a source with cylindrical expansion
coefficients a_m is -(i/4) sum_{n,m} H_n(omega |x|) e^{i n theta} W[n,m] a_m.

Index convention (fixed project-wide, also used by the .wmat file format):
entry (n, m) is stored at [n + K, m + K] of a (2K+1) x (2K+1) array.

Closed-form coefficient-space transforms:

    rotation by theta:      W'[n, m] = e^{i (m - n) theta} W[n, m]
    translation by z:       W'[n, m] = sum_{a,b} conj(C_a(z)) C_b(z)
                                                  W[n - a, m - b]
    scaling by s:           W[s-scaled target, omega] = W[target, s omega]

The translation double sum converges like the Bessel decay of C_a(z); the
input order must exceed the output order by a margin (>= 4, default chosen
so dropped terms sit below 1e-10).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from . import bie
from .geometry import RigidMotion, TargetConfig, apply_motion

__all__ = [
    "ScatteringMatrix",
    "scattering_matrix",
    "translate_w",
    "rotate_w",
    "scale_check",
    "decay_profile",
    "translation_margin",
    "rel_error",
    "save_wmat",
    "load_wmat",
]


@dataclass(frozen=True)
class ScatteringMatrix:
    """Complex (2K+1) x (2K+1) coefficient matrix at one frequency."""

    k_order: int
    omega: float
    entries: np.ndarray
    provenance: str = "computed"
    target: str = ""

    def __post_init__(self):
        n = 2 * self.k_order + 1
        if self.entries.shape != (n, n):
            raise ValueError("entries shape does not match order")
        if not np.all(np.isfinite(self.entries.view(float))):
            raise ValueError("non-finite scattering coefficients")

    def coeff(self, n: int, m: int) -> complex:
        k = self.k_order
        return self.entries[n + k, m + k]

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.k_order, self.k_order + 1)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))


def scattering_matrix(cfg: TargetConfig, omega: float, K: int,
                      n_nodes: int) -> ScatteringMatrix:
    """Compute W for a target by solving the transmission system."""
    system = bie.assemble(cfg, omega, n_nodes)
    dens = bie.solve_densities(system, K)
    return scattering_matrix_from_densities(system, dens)


def scattering_matrix_from_densities(system: bie.BlockSystem,
                                     dens: bie.DensitySet) -> ScatteringMatrix:
    orders = dens.orders
    vals, _ = bie.cyl_traces(system.exterior, system.wavenumbers.k0, orders)
    phi = dens.blocks["phi"]  # (2K+1, n)
    w = np.conj(vals) @ (phi * system.exterior.weights[None, :]).T
    return ScatteringMatrix(k_order=int(orders.max()), omega=system.omega,
                            entries=w, provenance="computed",
                            target=system.cfg.name)


def _cyl_at_point(orders: np.ndarray, omega: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    r = math.hypot(z[0], z[1])
    theta = math.atan2(z[1], z[0])
    return _sp.jv(orders, omega * r) * np.exp(1j * orders * theta)


def translation_margin(omega: float, z) -> int:
    """Input-order surplus needed so dropped translation terms < 1e-10."""
    z = np.asarray(z, dtype=float)
    return max(8, math.ceil(math.e * omega * math.hypot(z[0], z[1]) / 2.0))


def translate_w(w: ScatteringMatrix, z, omega: float,
                K_out: int) -> ScatteringMatrix:
    """Coefficients of the target translated by z, truncated to order K_out.

    The double sum over (a, b) runs over |a|, |b| <= w.k_order - K_out; the
    caller must supply the input at sufficient order (margin >= 4).
    """
    if abs(omega - w.omega) > 1e-12 * max(1.0, abs(omega)):
        raise ValueError("translation frequency must match the input matrix")
    margin = w.k_order - K_out
    if margin < 4:
        raise ValueError("translation needs input order >= output order + 4")
    shifts = np.arange(-margin, margin + 1)
    c = _cyl_at_point(shifts, omega, z)
    nin = 2 * w.k_order + 1
    nout = 2 * K_out + 1
    t1 = np.zeros((nout, nin), dtype=complex)
    for ia, aa in enumerate(shifts):
        lo = margin - aa
        t1 += np.conj(c[ia]) * w.entries[lo:lo + nout, :]
    out = np.zeros((nout, nout), dtype=complex)
    for ib, bb in enumerate(shifts):
        lo = margin - bb
        out += c[ib] * t1[:, lo:lo + nout]
    return ScatteringMatrix(k_order=K_out, omega=w.omega, entries=out,
                            provenance="transformed", target=w.target)


def rotate_w(w: ScatteringMatrix, theta: float) -> ScatteringMatrix:
    """Coefficients of the target rotated by theta (exact, no truncation)."""
    orders = w.orders
    phase = np.exp(-1j * orders[:, None] * theta) \
        * np.exp(1j * orders[None, :] * theta)
    return ScatteringMatrix(k_order=w.k_order, omega=w.omega,
                            entries=w.entries * phase,
                            provenance="transformed", target=w.target)


def scale_check(cfg: TargetConfig, s: float, omega: float, K: int,
                n_nodes: int) -> tuple[ScatteringMatrix, ScatteringMatrix]:
    """Both sides of the scaling identity, computed independently.

    Returns (W of the s-scaled geometry at omega, W of the original
    geometry at s*omega); they agree up to discretization error.
    """
    scaled = apply_motion(cfg, RigidMotion(s=s))
    return (scattering_matrix(scaled, omega, K, n_nodes),
            scattering_matrix(cfg, s * omega, K, n_nodes))


def decay_profile(w: ScatteringMatrix) -> list[tuple[int, float]]:
    """Max |W[n, m]| over the ring max(|n|, |m|) = ell, for each ell."""
    k = w.k_order
    absw = np.abs(w.entries)
    ring_of = np.maximum(np.abs(np.arange(-k, k + 1))[:, None],
                         np.abs(np.arange(-k, k + 1))[None, :])
    return [(ell, float(absw[ring_of == ell].max())) for ell in range(k + 1)]


def rel_error(a: ScatteringMatrix, b: ScatteringMatrix) -> float:
    """Frobenius-relative difference ||a - b||_F / ||b||_F."""
    if a.k_order != b.k_order:
        raise ValueError("orders differ")
    denom = b.frobenius()
    if denom == 0.0:
        raise ZeroDivisionError("reference matrix has zero norm")
    return float(np.linalg.norm(a.entries - b.entries)) / denom


# ---------------------------------------------------------------------------
# .wmat file format: one JSON header line, then row-major little-endian
# complex128 entries
# ---------------------------------------------------------------------------
def save_wmat(w: ScatteringMatrix, path) -> None:
    header = {
        "format": "wmat",
        "k_order": w.k_order,
        "omega": w.omega,
        "provenance": w.provenance,
        "target": w.target,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(np.ascontiguousarray(w.entries, dtype="<c16").tobytes())


def load_wmat(path) -> ScatteringMatrix:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode())
        if header.get("format") != "wmat":
            raise ValueError(f"{path}: not a wmat file")
        n = 2 * header["k_order"] + 1
        data = np.frombuffer(f.read(), dtype="<c16").reshape(n, n)
    return ScatteringMatrix(k_order=header["k_order"], omega=header["omega"],
                            entries=data.astype(complex),
                            provenance=header["provenance"],
                            target=header.get("target", ""))
