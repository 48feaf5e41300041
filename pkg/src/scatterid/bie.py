"""Boundary-integral transmission solver for piecewise-constant 2D targets.

The total field is represented by single-layer potentials on every curve,

    u = U + S^{k0}_{ext}[phi]                      outside the target,
    u = S^{ke}_{ext}[gamma] + sum_i S^{ke}_{inc_i}[eta_i]   in the shell,
    u = S^{ki}_{inc_i}[psi_i]                      inside inclusion i,

with Gamma_k(x) = -(i/4) H_0(k |x|) as the radiating fundamental solution
and wavenumbers k = omega sqrt(sigma mu) per region.  Continuity of u and
of (1/sigma) du/dnu across every interface yields a square block system in
the densities (2, 4, or 6 blocks of size n for zero, one, two inclusions).

Self-interaction matrices use the Kress (Martensen-Kussmaul) rule: the
logarithmic part of the kernel is split against ln(4 sin^2((t - tau)/2))
and integrated with the spectrally accurate product quadrature, the
remainder by the trapezoid rule.  The normal-derivative trace operator is
continuous on smooth curves with diagonal limit kappa/(4 pi) * speed; the
+-1/2 jump terms are added at the system level.

Interior (spurious) resonances of the single-layer representation are not
regularized: a reciprocal-condition estimate of the factored system guards
the solve and raises SingularSystemError near a resonant or otherwise
degenerate configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special as _sp
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import zgecon

from .geometry import DiscretizedBoundary, GeometryError, TargetConfig, \
    discretize, points_inside

EULER_GAMMA = 0.5772156649015328606
RCOND_FLOOR = 1e-14

__all__ = [
    "SingularSystemError",
    "EvaluationError",
    "Wavenumbers",
    "BlockSystem",
    "DensitySet",
    "single_layer",
    "kstar",
    "assemble",
    "solve_densities",
    "solve_incident",
    "eval_scattered",
    "cyl_traces",
]


class SingularSystemError(RuntimeError):
    """Block system is numerically singular (resonance or bad geometry)."""


class EvaluationError(ValueError):
    """Field evaluation requested too close to a boundary curve."""


@dataclass(frozen=True)
class Wavenumbers:
    """Region wavenumbers k = omega sqrt(sigma mu)."""

    k0: float
    ke: float
    k_inc: tuple[float, ...]

    @staticmethod
    def of(cfg: TargetConfig, omega: float) -> "Wavenumbers":
        if omega <= 0:
            raise ValueError("omega must be positive")
        k0 = omega * math.sqrt(cfg.background.sigma * cfg.background.mu)
        ke = omega * math.sqrt(cfg.shell.sigma * cfg.shell.mu)
        ki = tuple(omega * math.sqrt(i.material.sigma * i.material.mu)
                   for i in cfg.inclusions)
        return Wavenumbers(k0=k0, ke=ke, k_inc=ki)


# ---------------------------------------------------------------------------
# quadrature building blocks
# ---------------------------------------------------------------------------
@lru_cache(maxsize=8)
def _kress_log_weights(n_nodes: int) -> np.ndarray:
    """Product-quadrature weights R_|i-j| for the ln(4 sin^2((t-tau)/2))
    factor on a 2n-point periodic grid (exact for trig degree < n)."""
    n = n_nodes // 2
    h = math.pi / n
    d = np.arange(n_nodes) * h
    m = np.arange(1, n)
    r = -(2.0 * math.pi / n) * np.cos(np.outer(d, m)) @ (1.0 / m) \
        - (math.pi / n**2) * np.cos(n * d)
    r.setflags(write=False)
    return r


def _circulant_from_first_row(r: np.ndarray) -> np.ndarray:
    n = len(r)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return r[idx]


def _log4sin2(t: np.ndarray) -> np.ndarray:
    dt = t[:, None] - t[None, :]
    v = 4.0 * np.sin(dt / 2.0) ** 2
    np.fill_diagonal(v, 1.0)  # dummy, diagonal handled analytically
    return np.log(v)


def _pair_geometry(src: DiscretizedBoundary, tgt: DiscretizedBoundary):
    diff = tgt.nodes[:, None, :] - src.nodes[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    return diff, dist


def _is_self(src: DiscretizedBoundary, tgt: DiscretizedBoundary) -> bool:
    if src is tgt:
        return True
    return src.n == tgt.n and np.array_equal(src.nodes, tgt.nodes)


def _check_disjoint(src, tgt, dist) -> None:
    gap = 0.5 * min(src.spacing, tgt.spacing)
    if dist.min() < gap:
        raise GeometryError(
            "source and target curves intersect or nearly touch")


def single_layer(src: DiscretizedBoundary, tgt: DiscretizedBoundary,
                 k: float) -> np.ndarray:
    """Matrix of the single-layer potential S_k from src density values to
    potential values at tgt nodes.

    Self interaction (src == tgt) applies the Kress log-splitting; disjoint
    curves get the plain trapezoid rule on the smooth kernel.
    """
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    if _is_self(src, tgt):
        return _single_layer_self(src, k)
    _, dist = _pair_geometry(src, tgt)
    _check_disjoint(src, tgt, dist)
    return -0.25j * _sp.hankel1(0, k * dist) * src.weights[None, :]


def _single_layer_self(bnd: DiscretizedBoundary, k: float) -> np.ndarray:
    n = bnd.n
    _, dist = _pair_geometry(bnd, bnd)
    np.fill_diagonal(dist, 1.0)
    kr = k * dist
    m_full = -0.25j * _sp.hankel1(0, kr) * bnd.speed[None, :]
    m1 = (0.25 / math.pi) * _sp.j0(kr) * bnd.speed[None, :]
    m2 = m_full - m1 * _log4sin2(bnd.t)
    diag = bnd.speed * (-0.25j + (EULER_GAMMA
                                  + np.log(0.5 * k * bnd.speed)) / (2 * math.pi))
    np.fill_diagonal(m2, diag)
    np.fill_diagonal(m1, (0.25 / math.pi) * bnd.speed)
    rmat = _circulant_from_first_row(_kress_log_weights(n))
    return rmat * m1 + (2.0 * math.pi / n) * m2


def kstar(src: DiscretizedBoundary, tgt: DiscretizedBoundary,
          k: float) -> np.ndarray:
    """Matrix of the normal-derivative trace d S_k / d nu_x at tgt nodes.

    For src == tgt this is the principal-value operator K* (its kernel is
    continuous on smooth curves); the +-1/2 identity jump terms are NOT
    included.  For disjoint curves it is the plain smooth kernel.
    """
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    if _is_self(src, tgt):
        return _kstar_self(src, k)
    diff, dist = _pair_geometry(src, tgt)
    _check_disjoint(src, tgt, dist)
    ndot = (tgt.normals[:, None, 0] * diff[..., 0]
            + tgt.normals[:, None, 1] * diff[..., 1])
    return 0.25j * k * _sp.hankel1(1, k * dist) * ndot / dist \
        * src.weights[None, :]


def _kstar_self(bnd: DiscretizedBoundary, k: float) -> np.ndarray:
    n = bnd.n
    diff, dist = _pair_geometry(bnd, bnd)
    np.fill_diagonal(dist, 1.0)
    ndot = (bnd.normals[:, None, 0] * diff[..., 0]
            + bnd.normals[:, None, 1] * diff[..., 1])
    q = ndot / dist
    kr = k * dist
    l_full = 0.25j * k * _sp.hankel1(1, kr) * q * bnd.speed[None, :]
    l1 = -(k / (4.0 * math.pi)) * _sp.j1(kr) * q * bnd.speed[None, :]
    l2 = l_full - l1 * _log4sin2(bnd.t)
    np.fill_diagonal(l2, bnd.curvature * bnd.speed / (4.0 * math.pi))
    np.fill_diagonal(l1, 0.0)
    rmat = _circulant_from_first_row(_kress_log_weights(n))
    return rmat * l1 + (2.0 * math.pi / n) * l2


# ---------------------------------------------------------------------------
# block system
# ---------------------------------------------------------------------------
@dataclass
class BlockSystem:
    """Assembled transmission system with cached LU factorization.

    Density blocks (columns): phi, gamma, then (eta_i, psi_i) per inclusion.
    Condition rows mirror the same layout: Dirichlet and weighted-Neumann
    continuity on the exterior curve, then on each inclusion curve.
    """

    cfg: TargetConfig
    omega: float
    wavenumbers: Wavenumbers
    exterior: DiscretizedBoundary
    inclusions: tuple[DiscretizedBoundary, ...]
    matrix: np.ndarray
    slices: dict[str, slice]
    _lu: tuple = field(default=None, repr=False)
    rcond: float = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def factor(self) -> None:
        if self._lu is None:
            anorm = np.linalg.norm(self.matrix, 1)
            lu = lu_factor(self.matrix)
            rcond, info = zgecon(lu[0], anorm)
            if info != 0:
                raise SingularSystemError(f"zgecon failed (info={info})")
            self.rcond = float(rcond)
            if self.rcond < RCOND_FLOOR:
                raise SingularSystemError(
                    f"system condition estimate {1.0 / max(self.rcond, 1e-300):.2e} "
                    f"exceeds 1e14; omega={self.omega} is at or near an "
                    f"interior resonance of the representation")
            self._lu = lu

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        self.factor()
        return lu_solve(self._lu, rhs)


def assemble(cfg: TargetConfig, omega: float, n_nodes: int) -> BlockSystem:
    """Build the transmission block system for one target and frequency."""
    wn = Wavenumbers.of(cfg, omega)
    ext = discretize(cfg.exterior, n_nodes)
    incs = tuple(discretize(i.shape, n_nodes) for i in cfg.inclusions)
    sig0 = cfg.background.sigma
    sige = cfg.shell.sigma
    sigi = [i.material.sigma for i in cfg.inclusions]

    p = len(incs)
    ne = ext.n
    dim = (2 + 2 * p) * n_nodes
    slices = {"phi": slice(0, ne), "gamma": slice(ne, 2 * ne)}
    off = 2 * ne
    for i, b in enumerate(incs):
        slices[f"eta{i}"] = slice(off, off + b.n)
        slices[f"psi{i}"] = slice(off + b.n, off + 2 * b.n)
        off += 2 * b.n
    rows = {"dir_e": slice(0, ne), "neu_e": slice(ne, 2 * ne)}
    off = 2 * ne
    for i, b in enumerate(incs):
        rows[f"dir_i{i}"] = slice(off, off + b.n)
        rows[f"neu_i{i}"] = slice(off + b.n, off + 2 * b.n)
        off += 2 * b.n

    a = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(ne)

    # exterior-curve rows
    a[rows["dir_e"], slices["phi"]] = -single_layer(ext, ext, wn.k0)
    a[rows["dir_e"], slices["gamma"]] = single_layer(ext, ext, wn.ke)
    a[rows["neu_e"], slices["phi"]] = -(0.5 * eye + kstar(ext, ext, wn.k0)) / sig0
    a[rows["neu_e"], slices["gamma"]] = (-0.5 * eye + kstar(ext, ext, wn.ke)) / sige
    for i, b in enumerate(incs):
        a[rows["dir_e"], slices[f"eta{i}"]] = single_layer(b, ext, wn.ke)
        a[rows["neu_e"], slices[f"eta{i}"]] = kstar(b, ext, wn.ke) / sige

    # inclusion-curve rows
    for j, bj in enumerate(incs):
        eyej = np.eye(bj.n)
        a[rows[f"dir_i{j}"], slices["gamma"]] = -single_layer(ext, bj, wn.ke)
        a[rows[f"neu_i{j}"], slices["gamma"]] = -kstar(ext, bj, wn.ke) / sige
        for i, bi in enumerate(incs):
            s_ij = single_layer(bi, bj, wn.ke)
            d_ij = kstar(bi, bj, wn.ke)
            if i == j:
                d_ij = 0.5 * eyej + d_ij
            a[rows[f"dir_i{j}"], slices[f"eta{i}"]] = -s_ij
            a[rows[f"neu_i{j}"], slices[f"eta{i}"]] = -d_ij / sige
        kj = wn.k_inc[j]
        a[rows[f"dir_i{j}"], slices[f"psi{j}"]] = single_layer(bj, bj, kj)
        a[rows[f"neu_i{j}"], slices[f"psi{j}"]] = \
            (-0.5 * eyej + kstar(bj, bj, kj)) / sigi[j]

    return BlockSystem(cfg=cfg, omega=omega, wavenumbers=wn, exterior=ext,
                       inclusions=incs, matrix=a, slices=slices)


# ---------------------------------------------------------------------------
# right-hand sides and solves
# ---------------------------------------------------------------------------
def cyl_traces(bnd: DiscretizedBoundary, omega: float, orders: np.ndarray):
    """Cylindrical-wave values and normal derivatives at boundary nodes.

    Returns (values, normal_derivs), each shaped (len(orders), n).
    """
    orders = np.asarray(orders, dtype=int)
    r = np.hypot(bnd.nodes[:, 0], bnd.nodes[:, 1])
    if np.any(r < 1e-9):
        raise EvaluationError("boundary node at the expansion origin")
    theta = np.arctan2(bnd.nodes[:, 1], bnd.nodes[:, 0])
    ext_orders = np.arange(orders.min() - 1, orders.max() + 2)
    jall = _sp.jv(ext_orders[:, None], omega * r[None, :])
    base = orders - ext_orders[0]
    j = jall[base]
    jp = 0.5 * (jall[base - 1] - jall[base + 1])
    phase = np.exp(1j * orders[:, None] * theta[None, :])
    vals = j * phase

    rhat = bnd.nodes / r[:, None]
    that = np.stack([-rhat[:, 1], rhat[:, 0]], axis=-1)
    nu_r = np.sum(bnd.normals * rhat, axis=1)
    nu_t = np.sum(bnd.normals * that, axis=1)
    dn = phase * (omega * jp * nu_r[None, :]
                  + 1j * orders[:, None] * j * (nu_t / r)[None, :])
    return vals, dn


@dataclass(frozen=True)
class DensitySet:
    """Solved layer densities for a family of source orders."""

    orders: np.ndarray
    blocks: dict  # name -> (n_orders, n_nodes) complex array

    def phi(self, m: int) -> np.ndarray:
        return self.block("phi", m)

    def block(self, name: str, m: int) -> np.ndarray:
        idx = int(m) - int(self.orders[0])
        if idx < 0 or idx >= len(self.orders):
            raise KeyError(f"order {m} not solved")
        return self.blocks[name][idx]


def solve_densities(system: BlockSystem, K: int) -> DensitySet:
    """Solve the system for cylindrical-wave sources of order |m| <= K.

    One factorization is shared by all 2K+1 right-hand sides.  Residuals
    are the caller's concern; the LU solve is backward stable.
    """
    orders = np.arange(-K, K + 1)
    vals, dn = cyl_traces(system.exterior, system.wavenumbers.k0, orders)
    rhs = np.zeros((system.dim, len(orders)), dtype=complex)
    rhs[system.slices["phi"].start:system.slices["phi"].stop, :] = vals.T
    ne = system.exterior.n
    rhs[ne:2 * ne, :] = dn.T / system.cfg.background.sigma
    sol = system.solve(rhs)
    blocks = {name: sol[sl, :].T.copy() for name, sl in system.slices.items()}
    return DensitySet(orders=orders, blocks=blocks)


def solve_incident(system: BlockSystem, values: np.ndarray,
                   neumann: np.ndarray) -> dict:
    """Solve for an arbitrary incident field given its Dirichlet trace and
    normal derivative on the exterior curve; returns one array per block."""
    ne = system.exterior.n
    rhs = np.zeros(system.dim, dtype=complex)
    rhs[:ne] = values
    rhs[ne:2 * ne] = neumann / system.cfg.background.sigma
    sol = system.solve(rhs)
    return {name: sol[sl].copy() for name, sl in system.slices.items()}


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------
def potential(bnd: DiscretizedBoundary, k: float, density: np.ndarray,
              pts: np.ndarray) -> np.ndarray:
    """Single-layer potential of density values at off-curve points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    diff = pts[:, None, :] - bnd.nodes[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    return (-0.25j * _sp.hankel1(0, k * dist)) @ (density * bnd.weights)


def eval_scattered(system: BlockSystem, densities: DensitySet, m: int,
                   pts: np.ndarray) -> np.ndarray:
    """Field of the order-m solution at points off the curves.

    Exterior points get the scattered part u_m - C_m; points in the shell
    or inside an inclusion get the total field there.  Points within two
    node spacings of any curve raise EvaluationError (near-singular
    evaluation is unsupported).
    """
    pts = np.asarray(pts, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    curves = [system.exterior, *system.inclusions]
    for b in curves:
        d = np.min(np.hypot(*(pts[:, None, :] - b.nodes[None, :, :])
                            .transpose(2, 0, 1)), axis=1)
        if np.any(d < 2.0 * b.spacing):
            raise EvaluationError("evaluation point too close to a boundary")

    out = np.zeros(len(pts), dtype=complex)
    in_ext = points_inside(system.exterior.nodes, pts)
    in_inc = [points_inside(b.nodes, pts) for b in system.inclusions]

    exterior_mask = ~in_ext
    if np.any(exterior_mask):
        out[exterior_mask] = potential(
            system.exterior, system.wavenumbers.k0,
            densities.block("phi", m), pts[exterior_mask])

    shell_mask = in_ext.copy()
    for mask in in_inc:
        shell_mask &= ~mask
    if np.any(shell_mask):
        val = potential(system.exterior, system.wavenumbers.ke,
                        densities.block("gamma", m), pts[shell_mask])
        for i, b in enumerate(system.inclusions):
            val += potential(b, system.wavenumbers.ke,
                             densities.block(f"eta{i}", m), pts[shell_mask])
        out[shell_mask] = val

    for i, (b, mask) in enumerate(zip(system.inclusions, in_inc)):
        if np.any(mask):
            out[mask] = potential(b, system.wavenumbers.k_inc[i],
                                  densities.block(f"psi{i}", m), pts[mask])

    return out[0] if single else out
