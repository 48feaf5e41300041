"""Closed boundary curves, the 14-target catalog, and rigid motions.

Curves are parametrized over t in [0, 2pi) with positive (counter-clockwise)
orientation, so the outward unit normal is (y', -x') / |x'|.  Every curve
exposes position, velocity, and acceleration; tangent, normal, speed, and
curvature derive from those.

Polygonal outlines (triangle, square, rectangle, letter A) are smoothed so
that equispaced trapezoid quadrature converges fast: each corner's velocity
jump is blended by convolving the constant-speed parametrization with a
polynomial bump (1 - (u/d)^2)^q.  Edges outside the blend window remain
exactly straight, the blended curve is C^{q+1}, and the window width d is
chosen per corner so the apex curvature radius is close to the requested
rounding radius (ROUNDING_FRACTION times the shape diameter).  Circular
fillets would only give C^{1,1} curves, which is not enough for the
quadrature accuracy targets of the solver; the blend keeps comparable
visual rounding with much higher smoothness.

Targets are piecewise-constant material layouts: an exterior curve with a
shell material, zero to two inclusion curves each with its own material,
all embedded in a unit background.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ROUNDING_FRACTION = 0.05  # corner radius relative to shape diameter
_BUMP_Q = 8               # bump exponent; blended curves are C^{q+1}
_NORMALIZE_NODES = 512    # sampling used to measure diameter / centroid

__all__ = [
    "GeometryError",
    "Material",
    "RigidMotion",
    "Shape",
    "Circle",
    "Ellipse",
    "RoundedPolygon",
    "TransformedShape",
    "DiscretizedBoundary",
    "Inclusion",
    "TargetConfig",
    "discretize",
    "apply_motion",
    "transformed",
    "catalog",
    "letter_a_vertices",
    "points_inside",
    "shape_to_dict",
    "shape_from_dict",
    "config_to_dict",
    "config_from_dict",
    "catalog_to_json",
    "catalog_from_json",
]


class GeometryError(ValueError):
    """Invalid curve, motion, or target layout."""


# ---------------------------------------------------------------------------
# rigid motions
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RigidMotion:
    """Similarity transform x -> z + s R_theta x."""

    z: tuple[float, float] = (0.0, 0.0)
    s: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if self.s <= 0.0:
            raise GeometryError("scale factor must be positive")
        object.__setattr__(self, "z", (float(self.z[0]), float(self.z[1])))

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def apply(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.asarray(self.z) + self.s * pts @ self.rotation.T

    def apply_vector(self, vec: np.ndarray) -> np.ndarray:
        return self.s * np.asarray(vec, dtype=float) @ self.rotation.T

    def compose(self, inner: "RigidMotion") -> "RigidMotion":
        """Motion equal to applying `inner` first, then this one."""
        z = np.asarray(self.z) + self.s * (self.rotation @ np.asarray(inner.z))
        return RigidMotion(z=(z[0], z[1]), s=self.s * inner.s,
                           theta=self.theta + inner.theta)

    def inverse(self) -> "RigidMotion":
        rot = self.rotation.T
        z = -(rot @ np.asarray(self.z)) / self.s
        return RigidMotion(z=(z[0], z[1]), s=1.0 / self.s, theta=-self.theta)


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------
class Shape:
    """Closed positively oriented parametrized curve."""

    kind: str = "shape"

    def frame(self, t: np.ndarray):
        """Return (position, velocity, acceleration), each shaped (..., 2)."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


class Circle(Shape):
    kind = "circle"

    def __init__(self, radius: float, center=(0.0, 0.0)):
        if radius <= 0:
            raise GeometryError("radius must be positive")
        self.radius = float(radius)
        self.center = (float(center[0]), float(center[1]))

    def frame(self, t):
        t = np.asarray(t, dtype=float)
        ct, st = np.cos(t), np.sin(t)
        r = self.radius
        pos = np.stack([self.center[0] + r * ct, self.center[1] + r * st], axis=-1)
        vel = np.stack([-r * st, r * ct], axis=-1)
        acc = np.stack([-r * ct, -r * st], axis=-1)
        return pos, vel, acc

    def params(self):
        return {"radius": self.radius, "center": list(self.center)}


class Ellipse(Shape):
    kind = "ellipse"

    def __init__(self, a: float, b: float, center=(0.0, 0.0)):
        if a <= 0 or b <= 0:
            raise GeometryError("semi-axes must be positive")
        self.a = float(a)
        self.b = float(b)
        self.center = (float(center[0]), float(center[1]))

    def frame(self, t):
        t = np.asarray(t, dtype=float)
        ct, st = np.cos(t), np.sin(t)
        pos = np.stack([self.center[0] + self.a * ct,
                        self.center[1] + self.b * st], axis=-1)
        vel = np.stack([-self.a * st, self.b * ct], axis=-1)
        acc = np.stack([-self.a * ct, -self.b * st], axis=-1)
        return pos, vel, acc

    def params(self):
        return {"a": self.a, "b": self.b, "center": list(self.center)}


def _bump_g0_coeffs(q: int) -> np.ndarray:
    # antiderivative of (1 - v^2)^q: sum_j binom(q, j) (-1)^j v^{2j+1}/(2j+1)
    return np.array([math.comb(q, j) * (-1.0) ** j / (2 * j + 1)
                     for j in range(q + 1)])


_G0C = _bump_g0_coeffs(_BUMP_Q)
_IQ = 2.0 * float(np.sum(_G0C))  # integral of (1 - v^2)^q over [-1, 1]


def _bump_profiles(z: np.ndarray, delta: float):
    """A, A', A'' of the smoothed |s| at s = z * delta, |z| <= 1.

    A is |s| convolved with the normalized bump of half-width delta; it
    matches |s| identically outside the window.
    """
    z2 = z * z
    pows = z2[..., None] ** np.arange(_BUMP_Q + 1)
    g0 = np.sum(_G0C * pows, axis=-1) * z + np.sum(_G0C)  # int_{-1}^{z}
    p0 = g0 / _IQ
    g1 = -((1.0 - z2) ** (_BUMP_Q + 1)) / (2.0 * (_BUMP_Q + 1))
    p1 = delta * g1 / _IQ
    s = z * delta
    a = 2.0 * s * p0 - 2.0 * p1 - s
    ap = 2.0 * p0 - 1.0
    app = 2.0 * (1.0 - z2) ** _BUMP_Q / (delta * _IQ)
    return a, ap, app


class RoundedPolygon(Shape):
    """Closed polygon with corner velocity jumps blended smoothly.

    Parameters
    ----------
    vertices : (p, 2) array
        Polygon vertices in counter-clockwise order.
    rounding : float
        Target apex curvature radius at the corners, in length units.
    """

    kind = "rounded_polygon"

    def __init__(self, vertices, rounding: float):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("vertices must be a (p, 2) array with p >= 3")
        if rounding <= 0:
            raise GeometryError("rounding must be positive")
        area2 = float(np.sum(v[:, 0] * np.roll(v[:, 1], -1)
                             - np.roll(v[:, 0], -1) * v[:, 1]))
        if area2 <= 0:
            raise GeometryError("vertices must be counter-clockwise")
        self.vertices = v
        self.rounding = float(rounding)

        edges = np.roll(v, -1, axis=0) - v
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths <= 0):
            raise GeometryError("degenerate (zero-length) polygon edge")
        total = float(lengths.sum())
        self._speed = total / (2.0 * math.pi)
        # vertex i sits at parameter T_i; edge i spans [T_i, T_{i+1}]
        self._T = np.concatenate([[0.0], np.cumsum(lengths)]) / total * 2.0 * math.pi
        units = edges / lengths[:, None]
        self._w = units * self._speed  # per-edge velocity (constant speed)

        # per-corner blend windows
        p = v.shape[0]
        spans = np.diff(self._T)
        deltas = np.zeros(p)
        jumps = np.zeros((p, 2))
        for i in range(p):
            w_in = self._w[i - 1]
            w_out = self._w[i]
            j = 0.5 * (w_out - w_in)
            jumps[i] = j
            half_turn = np.hypot(*j) / self._speed  # sin(psi/2)
            if half_turn < 1e-12:
                continue
            cos_half2 = max(1.0 - half_turn**2, 1e-6)
            d = 2.0 * self.rounding * half_turn / (_IQ * self._speed * cos_half2)
            d = max(d, 1.5 * self.rounding / self._speed)  # resolve gentle bends
            d = min(d, 0.45 * min(spans[i - 1], spans[i]))
            deltas[i] = d
        self._deltas = deltas
        self._jumps = jumps

    def frame(self, t):
        t = np.asarray(t, dtype=float)
        shp = t.shape
        tm = np.mod(t.ravel(), 2.0 * math.pi)
        idx = np.clip(np.searchsorted(self._T, tm, side="right") - 1, 0,
                      len(self._w) - 1)
        pos = self.vertices[idx] + (tm - self._T[idx])[:, None] * self._w[idx]
        vel = self._w[idx].copy()
        acc = np.zeros_like(pos)
        for i in range(len(self._w)):
            d = self._deltas[i]
            if d == 0.0:
                continue
            s = np.mod(tm - self._T[i] + math.pi, 2.0 * math.pi) - math.pi
            mask = np.abs(s) < d
            if not np.any(mask):
                continue
            sm = s[mask]
            a, ap, app = _bump_profiles(sm / d, d)
            j = self._jumps[i]
            sign = np.where(sm >= 0.0, 1.0, -1.0)
            pos[mask] += (a - np.abs(sm))[:, None] * j
            vel[mask] += (ap - sign)[:, None] * j
            acc[mask] += app[:, None] * j
        return (pos.reshape(shp + (2,)), vel.reshape(shp + (2,)),
                acc.reshape(shp + (2,)))

    def params(self):
        return {"vertices": self.vertices.tolist(), "rounding": self.rounding}


class TransformedShape(Shape):
    """Shape mapped through a rigid motion z + s R_theta x."""

    kind = "transformed"

    def __init__(self, base: Shape, motion: RigidMotion):
        self.base = base
        self.motion = motion

    def frame(self, t):
        pos, vel, acc = self.base.frame(t)
        m = self.motion
        return m.apply(pos), m.apply_vector(vel), m.apply_vector(acc)

    def params(self):
        return {"base": shape_to_dict(self.base),
                "motion": {"z": list(self.motion.z), "s": self.motion.s,
                           "theta": self.motion.theta}}


def transformed(shape: Shape, motion: RigidMotion) -> Shape:
    """Apply a motion to a shape, flattening nested transforms."""
    if isinstance(shape, TransformedShape):
        return TransformedShape(shape.base, motion.compose(shape.motion))
    return TransformedShape(shape, motion)


# ---------------------------------------------------------------------------
# discretization
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DiscretizedBoundary:
    """Equispaced-parameter quadrature data on a closed curve."""

    t: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray
    shape: Shape = field(repr=False, compare=False, default=None)

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    @property
    def spacing(self) -> float:
        """Largest arc length between neighbouring nodes."""
        return float(self.weights.max())


def discretize(shape: Shape, n: int) -> DiscretizedBoundary:
    """Sample a shape at n equispaced parameters with trapezoid weights.

    n must be a power of two and at least 16 (the singular quadrature in
    the solver needs an even count; powers of two make refinement studies
    nest).
    """
    if n < 16 or (n & (n - 1)) != 0:
        raise GeometryError("node count must be a power of two >= 16")
    t = 2.0 * math.pi * np.arange(n) / n
    pos, vel, acc = shape.frame(t)
    speed = np.hypot(vel[:, 0], vel[:, 1])
    if np.any(speed <= 0):
        raise GeometryError("degenerate parametrization (zero speed)")
    normals = np.stack([vel[:, 1], -vel[:, 0]], axis=-1) / speed[:, None]
    curvature = (vel[:, 0] * acc[:, 1] - vel[:, 1] * acc[:, 0]) / speed**3
    weights = speed * (2.0 * math.pi / n)
    return DiscretizedBoundary(t=t, nodes=pos, normals=normals,
                               weights=weights, speed=speed,
                               curvature=curvature, shape=shape)


def points_inside(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Winding-number test of pts against a densely sampled closed curve."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    v = nodes[None, :, :] - pts[:, None, :]
    w = np.roll(nodes, -1, axis=0)[None, :, :] - pts[:, None, :]
    cross = v[:, :, 0] * w[:, :, 1] - v[:, :, 1] * w[:, :, 0]
    dot = np.sum(v * w, axis=2)
    winding = np.sum(np.arctan2(cross, dot), axis=1) / (2.0 * math.pi)
    return np.abs(winding) > 0.5


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Material:
    sigma: float
    mu: float

    def __post_init__(self):
        if self.sigma <= 0 or self.mu <= 0:
            raise GeometryError("material constants must be positive")


@dataclass(frozen=True)
class Inclusion:
    shape: Shape
    material: Material


@dataclass(frozen=True)
class TargetConfig:
    """Exterior curve + shell material + up to two inclusions."""

    name: str
    exterior: Shape
    shell: Material
    inclusions: tuple[Inclusion, ...] = ()
    background: Material = Material(1.0, 1.0)

    def __post_init__(self):
        if len(self.inclusions) > 2:
            raise GeometryError("at most two inclusions are supported")

    def validate(self, n: int = 128, clearance: float = 1e-3) -> None:
        """Check inclusions sit strictly inside the exterior and apart."""
        ext = discretize(self.exterior, n).nodes
        incs = [discretize(i.shape, n).nodes for i in self.inclusions]
        for k, nodes in enumerate(incs):
            if not np.all(points_inside(ext, nodes)):
                raise GeometryError(f"inclusion {k} not inside exterior")
            dmin = _min_distance(ext, nodes)
            if dmin <= clearance:
                raise GeometryError(f"inclusion {k} too close to exterior")
        if len(incs) == 2:
            if (_min_distance(incs[0], incs[1]) <= clearance
                    or np.any(points_inside(incs[0], incs[1]))
                    or np.any(points_inside(incs[1], incs[0]))):
                raise GeometryError("inclusions overlap or touch")


def _min_distance(a: np.ndarray, b: np.ndarray) -> float:
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    return float(np.sqrt(d2.min()))


def apply_motion(cfg: TargetConfig, motion: RigidMotion) -> TargetConfig:
    """Move a whole target: every boundary point x -> z + s R_theta x."""
    return TargetConfig(
        name=cfg.name,
        exterior=transformed(cfg.exterior, motion),
        shell=cfg.shell,
        inclusions=tuple(Inclusion(transformed(i.shape, motion), i.material)
                         for i in cfg.inclusions),
        background=cfg.background,
    )


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------
def _normalize(shape: Shape, diameter: float) -> Shape:
    """Scale and translate so max pairwise node distance equals `diameter`
    and the enclosed-area centroid sits at the origin."""
    bnd = discretize(shape, _NORMALIZE_NODES)
    nodes = bnd.nodes
    d2 = np.sum((nodes[:, None, :] - nodes[None, :, :]) ** 2, axis=2)
    dmax = math.sqrt(float(d2.max()))
    flux = np.sum(nodes * bnd.normals, axis=1) * bnd.weights
    area = 0.5 * float(flux.sum())
    cx = float(np.sum(nodes[:, 0] ** 2 * bnd.normals[:, 0] * bnd.weights)) / (2 * area)
    cy = float(np.sum(nodes[:, 1] ** 2 * bnd.normals[:, 1] * bnd.weights)) / (2 * area)
    s = diameter / dmax
    move = RigidMotion(z=(-cx * s, -cy * s), s=s, theta=0.0)
    return transformed(shape, move)


def _regular_polygon(sides: int) -> np.ndarray:
    ang = math.pi / 2.0 + 2.0 * math.pi * np.arange(sides) / sides
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def letter_a_vertices() -> np.ndarray:
    """Simply connected sans-serif capital A outline (no counter), 11 vertices."""
    return np.array([
        (-0.42, -0.50),   # left foot, bottom after bevel
        (-0.22, -0.50),   # left foot, inner
        (-0.145, -0.13),  # left inner edge meets crossbar underside
        (0.10, -0.13),    # crossbar underside, right end
        (0.175, -0.255),  # bevel into right inner edge
        (0.22, -0.50),    # right foot, inner
        (0.42, -0.50),    # right foot, bottom
        (0.50, -0.40),    # right foot, outer bevel
        (0.10, 0.50),     # apex, right
        (-0.10, 0.50),    # apex, left
        (-0.50, -0.40),   # left foot, outer bevel
    ])


def _rounded(vertices: np.ndarray, diameter: float) -> Shape:
    shape = RoundedPolygon(vertices, rounding=ROUNDING_FRACTION * diameter)
    return _normalize(shape, diameter)


def _make_shape(kind: str, diameter: float, angle: float = 0.0) -> Shape:
    r = diameter / 2.0
    if kind == "disk":
        return Circle(r)
    if kind == "ellipse":
        s: Shape = _normalize(Ellipse(r, 0.6 * r), diameter)
    elif kind == "triangle":
        s = _rounded(_regular_polygon(3), diameter)
    elif kind == "square":
        s = _rounded(_regular_polygon(4), diameter)
    elif kind == "rectangle":
        s = _rounded(np.array([(1.0, -0.5), (1.0, 0.5), (-1.0, 0.5),
                               (-1.0, -0.5)]), diameter)
    elif kind == "letter_a":
        s = _rounded(letter_a_vertices(), diameter)
    else:
        raise GeometryError(f"unknown shape kind {kind!r}")
    if angle != 0.0:
        s = transformed(s, RigidMotion(theta=angle))
    return s


_SHELL = Material(3.0, 3.0)
_INC = Material(6.0, 6.0)


def catalog() -> list[TargetConfig]:
    """The 14 reference targets.

    Six homogeneous shapes with material 3/3; five unit disks with a single
    centered inclusion (material 6/6, diameter 0.4); three unit disks with
    two inclusions (material 6/6, diameter 0.3, centered at (+-0.25, 0)).
    All exteriors have diameter 1 and area centroid at the origin.
    """
    targets: list[TargetConfig] = []
    for kind in ("disk", "ellipse", "triangle", "square", "rectangle",
                 "letter_a"):
        targets.append(TargetConfig(name=kind, exterior=_make_shape(kind, 1.0),
                                    shell=_SHELL))

    disk = Circle(0.5)
    for kind in ("disk", "ellipse", "triangle", "square", "rectangle"):
        inc = Inclusion(_make_shape(kind, 0.4), _INC)
        targets.append(TargetConfig(name=f"disk_{kind}", exterior=disk,
                                    shell=_SHELL, inclusions=(inc,)))

    left = RigidMotion(z=(-0.25, 0.0))
    right = RigidMotion(z=(0.25, 0.0))
    two = [
        ("disk_two_disks",
         _make_shape("disk", 0.3), _make_shape("disk", 0.3)),
        ("disk_disk_ellipse",
         _make_shape("disk", 0.3), _make_shape("ellipse", 0.3)),
        ("disk_two_ellipses",
         _make_shape("ellipse", 0.3, angle=math.pi / 2.0),
         _make_shape("ellipse", 0.3)),
    ]
    for name, sl, sr in two:
        incs = (Inclusion(transformed(sl, left), _INC),
                Inclusion(transformed(sr, right), _INC))
        targets.append(TargetConfig(name=name, exterior=disk, shell=_SHELL,
                                    inclusions=incs))
    return targets


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------
def shape_to_dict(shape: Shape) -> dict:
    return {"kind": shape.kind, **shape.params()}


def shape_from_dict(d: dict) -> Shape:
    kind = d.get("kind")
    if kind == "circle":
        return Circle(d["radius"], center=d.get("center", (0.0, 0.0)))
    if kind == "ellipse":
        return Ellipse(d["a"], d["b"], center=d.get("center", (0.0, 0.0)))
    if kind == "rounded_polygon":
        return RoundedPolygon(np.asarray(d["vertices"]), d["rounding"])
    if kind == "transformed":
        m = d["motion"]
        return TransformedShape(shape_from_dict(d["base"]),
                                RigidMotion(z=tuple(m["z"]), s=m["s"],
                                            theta=m["theta"]))
    raise GeometryError(f"unknown shape kind {kind!r}")


def config_to_dict(cfg: TargetConfig) -> dict:
    return {
        "name": cfg.name,
        "exterior": shape_to_dict(cfg.exterior),
        "shell": {"sigma": cfg.shell.sigma, "mu": cfg.shell.mu},
        "background": {"sigma": cfg.background.sigma, "mu": cfg.background.mu},
        "inclusions": [
            {"shape": shape_to_dict(i.shape),
             "sigma": i.material.sigma, "mu": i.material.mu}
            for i in cfg.inclusions
        ],
    }


def config_from_dict(d: dict) -> TargetConfig:
    return TargetConfig(
        name=d["name"],
        exterior=shape_from_dict(d["exterior"]),
        shell=Material(d["shell"]["sigma"], d["shell"]["mu"]),
        inclusions=tuple(
            Inclusion(shape_from_dict(i["shape"]),
                      Material(i["sigma"], i["mu"]))
            for i in d.get("inclusions", [])
        ),
        background=Material(d.get("background", {}).get("sigma", 1.0),
                            d.get("background", {}).get("mu", 1.0)),
    )


def catalog_to_json(targets: Sequence[TargetConfig]) -> str:
    return json.dumps({"targets": [config_to_dict(c) for c in targets]},
                      indent=2, sort_keys=True)


def catalog_from_json(text: str) -> list[TargetConfig]:
    return [config_from_dict(d) for d in json.loads(text)["targets"]]
