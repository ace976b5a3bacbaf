"""Slot geometry for flight patterns.

A pattern is described declaratively by a :class:`PatternSpec` and realized
by :func:`build_pattern` into an ordered list of slot coordinates.  Slot 0 is
the head of the queue and coincides with the opening (``PatternSpec.anchor``);
drones move from slot ``k`` to slot ``k - 1`` once per admission interval.

Shapes are laid out in a local frame where the pattern lies in the xy plane,
the anchor sits at the origin and the outline is traversed counterclockwise
when viewed from +z.  The orientation quaternion then rotates the local frame
about the anchor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import integrate, optimize

from .errors import IndexOutOfRange, InvalidRate, InvalidSpec, TooFewSlots

Vec3 = tuple[float, float, float]

ORIGIN: Vec3 = (0.0, 0.0, 0.0)


def as_vec3(value: Sequence[float]) -> Vec3:
    if len(value) != 3:
        raise InvalidSpec(f"expected 3 coordinates, got {len(value)}")
    out = tuple(float(v) for v in value)
    if not all(math.isfinite(v) for v in out):
        raise InvalidSpec(f"coordinates must be finite: {out}")
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class Orientation:
    """Unit quaternion ``(w, x, y, z)`` rotating the local pattern frame."""

    quaternion: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        q = tuple(float(v) for v in self.quaternion)
        if len(q) != 4 or not all(math.isfinite(v) for v in q):
            raise InvalidSpec(f"orientation must be 4 finite numbers, got {self.quaternion}")
        if abs(math.sqrt(sum(v * v for v in q)) - 1.0) > 1e-9:
            raise InvalidSpec(f"orientation quaternion is not unit length: {q}")
        object.__setattr__(self, "quaternion", q)

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> "Orientation":
        a = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise InvalidSpec("rotation axis must be non-zero")
        a = a / norm
        s = math.sin(angle / 2.0)
        return cls.normalized((math.cos(angle / 2.0), a[0] * s, a[1] * s, a[2] * s))

    @classmethod
    def normalized(cls, q: Sequence[float]) -> "Orientation":
        arr = np.asarray(q, dtype=float)
        norm = float(np.linalg.norm(arr))
        if arr.shape != (4,) or norm == 0 or not math.isfinite(norm):
            raise InvalidSpec(f"cannot normalize quaternion {q}")
        return cls(tuple(float(v) for v in arr / norm))

    @classmethod
    def named(cls, name: str) -> "Orientation":
        """Preset alignments: horizontal (xy plane), vertical (xz plane), diagonal (45 degrees)."""
        if name == "horizontal":
            return cls()
        if name == "vertical":
            return cls.from_axis_angle((1.0, 0.0, 0.0), math.pi / 2)
        if name == "diagonal":
            return cls.from_axis_angle((1.0, 0.0, 0.0), math.pi / 4)
        raise InvalidSpec(f"unknown alignment {name!r}")

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.quaternion
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def normal(self) -> np.ndarray:
        """The rotated local +z axis (pattern plane normal)."""
        return self.matrix()[:, 2].copy()


# ---------------------------------------------------------------------------
# Pattern variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Circle:
    radius: float


@dataclass(frozen=True)
class Ellipse:
    semi_major: float
    semi_minor: float


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float


@dataclass(frozen=True)
class ZigZag:
    segment_length: float
    n_segments: int
    row_spacing: float


@dataclass(frozen=True)
class Nested2D:
    layers: tuple["PatternSpec", ...]


@dataclass(frozen=True)
class Stacked3D:
    layers: tuple["PatternSpec", ...]
    layer_gap: float


Primitive = Union[Circle, Ellipse, Rectangle, ZigZag]
Variant = Union[Circle, Ellipse, Rectangle, ZigZag, Nested2D, Stacked3D]

PRIMITIVES = (Circle, Ellipse, Rectangle, ZigZag)


@dataclass(frozen=True)
class PatternSpec:
    """Declarative pattern description.

    For ``Nested2D`` and ``Stacked3D`` the slot count is the sum of the layer
    slot counts and may be left as ``None``.  Layer specs only contribute
    their variant and slot count; the anchor and orientation of the enclosing
    spec apply to the whole hierarchy.
    """

    variant: Variant
    slot_count: int | None = None
    anchor: Vec3 = ORIGIN
    orientation: Orientation = field(default_factory=Orientation)

    @property
    def effective_slot_count(self) -> int:
        if isinstance(self.variant, (Nested2D, Stacked3D)):
            return sum(layer.effective_slot_count for layer in self.variant.layers)
        return int(self.slot_count or 0)


@dataclass(frozen=True, eq=False)
class Pattern:
    """Realized slot coordinates.

    ``leg_lengths[k - 1]`` is the chord from slot ``k`` to slot ``k - 1``; use
    :meth:`leg` to index legs the way the rest of the library does (1-based).
    """

    spec: PatternSpec
    slots: np.ndarray
    leg_lengths: np.ndarray
    normal: np.ndarray
    layer_sizes: tuple[int, ...]

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    def leg(self, k: int) -> float:
        if not 1 <= k <= self.slot_count - 1:
            raise IndexOutOfRange(f"leg index {k} outside 1..{self.slot_count - 1}")
        return float(self.leg_lengths[k - 1])

    def bounding_radius(self) -> float:
        center = self.slots.mean(axis=0)
        return float(np.max(np.linalg.norm(self.slots - center, axis=1)))

    def center(self) -> np.ndarray:
        return self.slots.mean(axis=0)


# ---------------------------------------------------------------------------
# Outline sampling in the local frame
# ---------------------------------------------------------------------------


def _check_primitive(variant: Primitive, slot_count: int | None) -> int:
    if slot_count is None or int(slot_count) != slot_count or slot_count < 1:
        raise InvalidSpec(f"slot_count must be an integer >= 1, got {slot_count!r}")
    if isinstance(variant, Circle):
        dims = {"radius": variant.radius}
    elif isinstance(variant, Ellipse):
        dims = {"semi_major": variant.semi_major, "semi_minor": variant.semi_minor}
    elif isinstance(variant, Rectangle):
        dims = {"width": variant.width, "height": variant.height}
    elif isinstance(variant, ZigZag):
        dims = {"segment_length": variant.segment_length, "row_spacing": variant.row_spacing}
        if int(variant.n_segments) != variant.n_segments or variant.n_segments < 1:
            raise InvalidSpec(f"n_segments must be an integer >= 1, got {variant.n_segments!r}")
    else:
        raise InvalidSpec(f"unsupported pattern variant {type(variant).__name__}")
    for name, value in dims.items():
        if not (math.isfinite(value) and value > 0):
            raise InvalidSpec(f"{name} must be > 0, got {value!r}")
    if isinstance(variant, Ellipse) and variant.semi_minor > variant.semi_major:
        raise InvalidSpec("semi_minor must not exceed semi_major")
    if isinstance(variant, ZigZag) and variant.row_spacing >= variant.segment_length:
        raise InvalidSpec("row_spacing must be smaller than segment_length")
    return int(slot_count)


def _polyline_points(vertices: np.ndarray, distances: np.ndarray) -> np.ndarray:
    seg = np.diff(vertices, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    out = np.empty((len(distances), vertices.shape[1]))
    for i, s in enumerate(distances):
        j = int(np.searchsorted(cum, s, side="right") - 1)
        j = min(max(j, 0), len(seg) - 1)
        frac = (s - cum[j]) / seg_len[j]
        out[i] = vertices[j] + frac * seg[j]
    return out


def _zigzag_vertices(z: ZigZag) -> np.ndarray:
    run = math.sqrt(z.segment_length**2 - z.row_spacing**2)
    return np.array([[run if i % 2 else 0.0, i * z.row_spacing] for i in range(z.n_segments + 1)])


def _ellipse_slots(e: Ellipse, m: int) -> np.ndarray:
    a, b = e.semi_major, e.semi_minor

    def speed(t):
        return math.hypot(a * math.sin(t), b * math.cos(t))

    def arc(t):
        return integrate.quad(speed, math.pi, t, epsabs=1e-13, epsrel=1e-13)[0]

    perimeter = arc(3 * math.pi)
    pts = []
    for k in range(m):
        if k == 0:
            t = math.pi
        else:
            target = k * perimeter / m
            t = optimize.brentq(lambda u: arc(u) - target, math.pi, 3 * math.pi, xtol=1e-14)
        pts.append((a + a * math.cos(t), b * math.sin(t)))
    return np.array(pts)


def _local_slots(variant: Primitive, m: int) -> np.ndarray:
    """Slots of a primitive variant in the local xy plane, slot 0 at the origin."""
    if isinstance(variant, Circle):
        r = variant.radius
        theta = math.pi + 2 * math.pi * np.arange(m) / m
        pts = np.column_stack([r + r * np.cos(theta), r * np.sin(theta)])
        pts[0] = (0.0, 0.0)
    elif isinstance(variant, Ellipse):
        pts = _ellipse_slots(variant, m)
        pts[0] = (0.0, 0.0)
    elif isinstance(variant, Rectangle):
        w, h = variant.width, variant.height
        verts = np.array([[0, 0], [w, 0], [w, h], [0, h], [0, 0]], dtype=float)
        pts = _polyline_points(verts, np.arange(m) * (2 * (w + h)) / m)
    else:
        verts = _zigzag_vertices(variant)
        total = variant.segment_length * variant.n_segments
        dist = np.zeros(1) if m == 1 else np.arange(m) * total / (m - 1)
        pts = _polyline_points(verts, dist)
    return np.column_stack([pts, np.zeros(m)])


def _local_extent(variant: Primitive) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box (min, max) of the full outline in local xy."""
    if isinstance(variant, Circle):
        r = variant.radius
        return np.array([0.0, -r]), np.array([2 * r, r])
    if isinstance(variant, Ellipse):
        return np.array([0.0, -variant.semi_minor]), np.array([2 * variant.semi_major, variant.semi_minor])
    if isinstance(variant, Rectangle):
        return np.array([0.0, 0.0]), np.array([variant.width, variant.height])
    verts = _zigzag_vertices(variant)
    return verts.min(axis=0), verts.max(axis=0)


def _layer_primitives(layers: Sequence[PatternSpec], kind: str) -> list[tuple[Primitive, int]]:
    if len(layers) == 0:
        raise InvalidSpec(f"{kind} needs at least one layer")
    out = []
    for i, layer in enumerate(layers):
        if not isinstance(layer.variant, PRIMITIVES):
            raise InvalidSpec(f"{kind} layer {i} must be a circle, ellipse, rectangle or zigzag")
        out.append((layer.variant, _check_primitive(layer.variant, layer.slot_count)))
    return out


def _hierarchy_slots(spec: PatternSpec) -> tuple[np.ndarray, tuple[int, ...]]:
    variant = spec.variant
    stacked = isinstance(variant, Stacked3D)
    kind = "Stacked3D" if stacked else "Nested2D"
    layers = _layer_primitives(variant.layers, kind)
    if stacked and not (math.isfinite(variant.layer_gap) and variant.layer_gap > 0):
        raise InvalidSpec(f"layer_gap must be > 0, got {variant.layer_gap!r}")
    lo0, hi0 = _local_extent(layers[0][0])
    center0 = (lo0 + hi0) / 2
    half_prev = (hi0 - lo0) / 2
    chunks = []
    for i, (prim, m) in enumerate(layers):
        lo, hi = _local_extent(prim)
        half = (hi - lo) / 2
        if not stacked and i > 0 and not np.all(half_prev < half):
            raise InvalidSpec(f"Nested2D layer {i} does not strictly contain layer {i - 1}")
        half_prev = half
        shift = np.zeros(3)
        shift[:2] = center0 - (lo + hi) / 2
        if stacked:
            shift[2] = i * variant.layer_gap
        chunks.append(_local_slots(prim, m) + shift)
    return np.vstack(chunks), tuple(m for _, m in layers)


def build_pattern(spec: PatternSpec) -> Pattern:
    """Realize ``spec`` into slot coordinates.

    Hierarchies are chained into one queue: layer 0 holds the head, and the
    head slot of layer ``i`` feeds the tail slot of layer ``i - 1``.

    Raises:
        InvalidSpec: non-positive dimension, zero slots, containment violation.
    """
    if isinstance(spec.variant, (Nested2D, Stacked3D)):
        local, sizes = _hierarchy_slots(spec)
        if spec.slot_count is not None and spec.slot_count != len(local):
            raise InvalidSpec(
                f"slot_count {spec.slot_count} does not match the sum of layer slot counts {len(local)}"
            )
    else:
        m = _check_primitive(spec.variant, spec.slot_count)
        local, sizes = _local_slots(spec.variant, m), (m,)
    anchor = np.asarray(as_vec3(spec.anchor))
    rot = spec.orientation.matrix()
    slots = local @ rot.T + anchor
    slots[0] = anchor
    legs = np.linalg.norm(np.diff(slots, axis=0), axis=1)
    if np.any(legs <= 1e-12):
        raise InvalidSpec("pattern has coincident consecutive slots")
    return Pattern(spec=spec, slots=slots, leg_lengths=legs, normal=spec.orientation.normal(), layer_sizes=sizes)


def required_speed(pattern: Pattern, lam: float, leg_index: int) -> float:
    """Speed needed to fly leg ``leg_index`` within one admission interval ``1/lam``."""
    if not (math.isfinite(lam) and lam > 0):
        raise InvalidRate(f"admission rate must be > 0, got {lam!r}")
    return pattern.leg(leg_index) * lam


def min_slot_clearance(pattern: Pattern) -> float:
    if pattern.slot_count < 2:
        raise TooFewSlots("clearance needs at least two slots")
    pts = pattern.slots
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu = np.triu_indices(len(pts), k=1)
    return float(dist[iu].min())
