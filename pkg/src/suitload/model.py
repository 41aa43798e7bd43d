"""Rigid-body model of the protective suit and the simplified wearer.

The suit is eight uniform-density rigid segments.  Each segment is slaved to
one body frame of the wearer (``trunk``, ``pelvis``, ``left_thigh``, ...) and
its coordinates are expressed in that frame.  Frames follow x forward, y left,
z up when the wearer stands in the zero joint configuration.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .validation import check_pose, check_positive, check_vector

G = 9.81

SEGMENT_IDS = ("RLU", "RLL", "LLU", "LLL", "BP", "RA", "LA", "FT")

# measured component weights (N)
SEGMENT_WEIGHTS = {
    "RLU": 9.34,
    "RLL": 14.01,
    "LLU": 9.28,
    "LLL": 13.92,
    "BP": 12.21,
    "RA": 13.51,
    "LA": 13.51,
    "FT": 93.23,
}

BODY_FRAMES = ("trunk", "pelvis", "left_thigh", "left_shank", "right_thigh", "right_shank")
BELT_ANCHORS = {
    "neck": "trunk",
    "left_hip": "pelvis",
    "right_hip": "pelvis",
    "left_knee": "left_thigh",
    "right_knee": "right_thigh",
}
REQUIRED_BELTS = {
    "FT": ("neck",),
    "BP": ("neck",),
    "LLU": ("left_hip",),
    "RLU": ("right_hip",),
    "LLL": ("left_knee",),
    "RLL": ("right_knee",),
}


@dataclass(frozen=True)
class Box:
    size: tuple  # (x, y, z) edge lengths, m

    kind = "box"

    def inertia(self, mass):
        a, b, c = self.size
        return mass / 12.0 * np.diag([b * b + c * c, a * a + c * c, a * a + b * b])


@dataclass(frozen=True)
class CylindricalShell:
    """Thick-walled tube along the local z axis."""

    inner_radius: float
    outer_radius: float
    length: float

    kind = "shell"

    def inertia(self, mass):
        r2 = self.inner_radius**2 + self.outer_radius**2
        axial = 0.5 * mass * r2
        transverse = mass * (3.0 * r2 + self.length**2) / 12.0
        return np.diag([transverse, transverse, axial])


@dataclass(frozen=True)
class SuitSegment:
    id: str
    mass: float
    com_offset: np.ndarray
    geometry: object
    body_frame: str
    inertia: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.id not in SEGMENT_IDS:
            raise ValueError(f"unknown segment id {self.id!r}")
        check_positive(self.mass, f"{self.id} mass")
        if self.body_frame not in BODY_FRAMES:
            raise ValueError(f"unknown body frame {self.body_frame!r}")
        object.__setattr__(self, "com_offset", check_vector(self.com_offset, name="com_offset"))
        inertia = self.geometry.inertia(self.mass) if self.inertia is None else self.inertia
        inertia = np.asarray(inertia, dtype=float)
        if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T):
            raise ValueError(f"{self.id} inertia must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(inertia).min() < -1e-12:
            raise ValueError(f"{self.id} inertia is not positive semi-definite")
        object.__setattr__(self, "inertia", inertia)

    @property
    def weight(self):
        return self.mass * G


@dataclass(frozen=True)
class BeltConstraint:
    """Pull-only link from a point on a suit segment to a point on the body.

    ``suit_point`` is in the segment's frame, ``body_point`` in the frame of
    the body part named by ``body_segment``.
    """

    segment: str
    suit_point: np.ndarray
    body_point: np.ndarray
    body_segment: str

    def __post_init__(self):
        if self.body_segment not in BELT_ANCHORS:
            raise ValueError(f"unknown belt anchor {self.body_segment!r}")
        object.__setattr__(self, "suit_point", check_vector(self.suit_point, name="suit_point"))
        object.__setattr__(self, "body_point", check_vector(self.body_point, name="body_point"))

    @property
    def body_frame(self):
        return BELT_ANCHORS[self.body_segment]


@dataclass(frozen=True)
class ContactPoint:
    position: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        pos = check_vector(self.position, name="position")
        n = check_vector(self.normal, name="normal")
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError(f"contact normal must be unit length, got |n| = {np.linalg.norm(n)}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class GridPatch:
    """Flat rectangular patch sampled at cell centres.

    ``u_axis`` and ``v_axis`` span the patch, the normal is ``u x v``.
    """

    center: tuple
    u_axis: tuple
    v_axis: tuple
    size: tuple  # (u, v) extents, m
    counts: tuple  # (nu, nv)

    layout = "grid"

    def points(self):
        c = np.asarray(self.center, float)
        u = np.asarray(self.u_axis, float)
        v = np.asarray(self.v_axis, float)
        u = u / np.linalg.norm(u)
        v = v - (v @ u) * u
        v = v / np.linalg.norm(v)
        n = np.cross(u, v)
        nu, nv = self.counts
        su = (np.arange(nu) + 0.5) / nu - 0.5
        sv = (np.arange(nv) + 0.5) / nv - 0.5
        return [
            ContactPoint(c + a * self.size[0] * u + b * self.size[1] * v, n)
            for a in su
            for b in sv
        ]


@dataclass(frozen=True)
class RingPatch:
    """Points on the inner wall of a tube along the local z axis, normals radial."""

    center: tuple
    radius: float
    length: float
    counts: tuple  # (around, along)

    layout = "ring"

    def points(self):
        c = np.asarray(self.center, float)
        n_around, n_along = self.counts
        angles = 2.0 * np.pi * np.arange(n_around) / n_around
        zs = ((np.arange(n_along) + 0.5) / n_along - 0.5) * self.length
        pts = []
        for z in zs:
            for a in angles:
                radial = np.array([np.cos(a), np.sin(a), 0.0])
                pts.append(ContactPoint(c + self.radius * radial + [0.0, 0.0, z], radial))
        return pts


@dataclass(frozen=True)
class ContactRegion:
    id: str
    segment: str
    patch: object
    points: tuple = None

    def __post_init__(self):
        if self.points is None:
            object.__setattr__(self, "points", tuple(self.patch.points()))
        else:
            object.__setattr__(self, "points", tuple(self.points))

    def positions(self):
        return np.array([p.position for p in self.points])

    def normals(self):
        return np.array([p.normal for p in self.points])


@dataclass(frozen=True)
class Anthropometry:
    left_hip: tuple = (0.0, 0.085, -0.07)
    right_hip: tuple = (0.0, -0.085, -0.07)
    thigh_length: float = 0.414
    shank_length: float = 0.416
    ankle_to_sole: tuple = (0.04, 0.0, -0.066)
    subject_height: float = 1.69
    subject_mass: float = 60.0
    shoulder_height: float = 0.37
    shoulder_half_width: float = 0.15

    def __post_init__(self):
        for name in ("thigh_length", "shank_length", "subject_height", "subject_mass",
                     "shoulder_height", "shoulder_half_width"):
            check_positive(getattr(self, name), name)
        for name in ("left_hip", "right_hip", "ankle_to_sole"):
            object.__setattr__(self, name, tuple(check_vector(getattr(self, name), name=name)))
        if self.left_hip[1] <= 0 or self.right_hip[1] >= 0:
            raise ValueError("left hip must have y > 0 and right hip y < 0")

    @classmethod
    def from_height(cls, height, mass):
        """Segment lengths from standard stature ratios."""
        check_positive(height, "height")
        return cls(
            left_hip=(0.0, 0.05 * height, -0.041 * height),
            right_hip=(0.0, -0.05 * height, -0.041 * height),
            thigh_length=0.245 * height,
            shank_length=0.246 * height,
            ankle_to_sole=(0.024 * height, 0.0, -0.039 * height),
            subject_height=height,
            subject_mass=mass,
            shoulder_height=0.219 * height,
            shoulder_half_width=0.089 * height,
        )

    def hip(self, side):
        return np.asarray(self.left_hip if side == "left" else self.right_hip, float)


@dataclass(frozen=True)
class SuitModel:
    segments: dict
    belts: tuple
    regions: tuple
    carried_by: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "belts", tuple(self.belts))
        object.__setattr__(self, "regions", tuple(self.regions))
        if sorted(self.segments) != sorted(SEGMENT_IDS):
            raise ValueError(f"suit needs exactly the segments {SEGMENT_IDS}")
        for key, seg in self.segments.items():
            if seg.id != key:
                raise ValueError(f"segment stored under {key!r} has id {seg.id!r}")
        for belt in self.belts:
            if belt.segment not in self.segments:
                raise ValueError(f"belt references unknown segment {belt.segment!r}")
        ids = [r.id for r in self.regions]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate contact region ids")
        for region in self.regions:
            if region.segment not in self.segments:
                raise ValueError(f"region {region.id!r} references unknown segment")
        for sid, anchors in REQUIRED_BELTS.items():
            found = [b.body_segment for b in self.belts_of(sid)]
            if sum(a in anchors for a in found) != 1:
                raise ValueError(f"segment {sid} needs exactly one belt anchored at "
                                 f"{' or '.join(anchors)}, found {found}")
        for child, parent in self.carried_by.items():
            if child not in self.segments or parent not in self.segments or child == parent:
                raise ValueError(f"bad carrier {child!r} -> {parent!r}")
            if parent in self.carried_by:
                raise ValueError("carried segments cannot be chained")

    @property
    def total_weight(self):
        return sum(seg.weight for seg in self.segments.values())

    def region(self, region_id):
        for r in self.regions:
            if r.id == region_id:
                return r
        raise KeyError(f"unknown contact region {region_id!r}")

    def belts_of(self, segment_id):
        return [b for b in self.belts if b.segment == segment_id]

    def regions_of(self, segment_id):
        return [r for r in self.regions if r.segment == segment_id]


def _leg_parts(anthro, side):
    sign = 1.0 if side == "left" else -1.0
    s = "L" if side == "left" else "R"
    thigh, shank = anthro.thigh_length, anthro.shank_length
    upper = CylindricalShell(0.075, 0.09, 0.75 * thigh)
    lower = CylindricalShell(0.055, 0.07, 0.75 * shank)
    segs = [
        SuitSegment(f"{s}LU", SEGMENT_WEIGHTS[f"{s}LU"] / G, (0.0, 0.0, -0.5 * thigh), upper,
                    f"{side}_thigh"),
        SuitSegment(f"{s}LL", SEGMENT_WEIGHTS[f"{s}LL"] / G, (0.0, 0.0, -0.5 * shank), lower,
                    f"{side}_shank"),
    ]
    hip = anthro.hip(side)
    belts = [
        BeltConstraint(f"{s}LU", (0.0, sign * upper.outer_radius, -0.03),
                       hip + (0.0, sign * 0.08, 0.06), f"{side}_hip"),
        BeltConstraint(f"{s}LL", (0.0, sign * lower.outer_radius, -0.03),
                       (0.0, sign * 0.06, -thigh + 0.05), f"{side}_knee"),
    ]
    regions = [
        ContactRegion(f"{side}_thigh", f"{s}LU",
                      RingPatch((0.0, 0.0, -0.5 * thigh), upper.inner_radius, 0.6 * upper.length,
                                (8, 3))),
        ContactRegion(f"{side}_shin", f"{s}LL",
                      RingPatch((0.0, 0.0, -0.5 * shank), lower.inner_radius, 0.6 * lower.length,
                                (8, 3))),
    ]
    return segs, belts, regions


def build_default_suit(anthro=None, shoulder_patch=(0.070, 0.160), shoulder_grid=(6, 10)):
    """Build the eight-segment suit with measured weights and scaled geometry.

    Parameters
    ----------
    anthro : Anthropometry, optional
        Wearer dimensions; defaults to the 1.69 m / 60 kg subject.
    shoulder_patch : (float, float)
        Lateral and fore-aft extent of each shoulder contact patch (m).
    shoulder_grid : (int, int)
        Points across and along each shoulder patch.

    Returns
    -------
    SuitModel
    """
    anthro = Anthropometry() if anthro is None else anthro
    if not isinstance(anthro, Anthropometry):
        raise TypeError("anthro must be an Anthropometry")
    sh, sw = anthro.shoulder_height, anthro.shoulder_half_width

    arm = CylindricalShell(0.055, 0.07, 0.5)
    segments = [
        SuitSegment("FT", SEGMENT_WEIGHTS["FT"] / G, (0.02, 0.0, sh - 0.16),
                    Box((0.26, 2.0 * sw + 0.16, 0.36)), "trunk"),
        SuitSegment("BP", SEGMENT_WEIGHTS["BP"] / G, (-0.13, 0.0, sh - 0.20),
                    Box((0.04, 0.34, 0.40)), "trunk"),
        SuitSegment("LA", SEGMENT_WEIGHTS["LA"] / G, (0.0, sw + 0.08, sh - 0.03 - 0.5 * arm.length),
                    arm, "trunk"),
        SuitSegment("RA", SEGMENT_WEIGHTS["RA"] / G,
                    (0.0, -(sw + 0.08), sh - 0.03 - 0.5 * arm.length), arm, "trunk"),
    ]
    neck = (0.0, 0.0, sh + 0.06)
    belts = [
        BeltConstraint("FT", (0.06, 0.0, sh), neck, "neck"),
        BeltConstraint("BP", (-0.10, 0.0, sh - 0.08), neck, "neck"),
    ]
    regions = [
        ContactRegion(f"{side}_shoulder", "FT",
                      GridPatch((0.0, sign * sw, sh), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
                                shoulder_patch[::-1], shoulder_grid[::-1]))
        for side, sign in (("left", 1.0), ("right", -1.0))
    ]
    # u = -y, v = z gives an outward normal of -x (the back pushes the pad rearward)
    regions.append(ContactRegion("upper_back", "BP",
                                 GridPatch((-0.11, 0.0, sh - 0.18), (0.0, -1.0, 0.0),
                                           (0.0, 0.0, 1.0), (0.24, 0.30), (4, 5))))
    for side in ("left", "right"):
        segs, leg_belts, leg_regions = _leg_parts(anthro, side)
        segments += segs
        belts += leg_belts
        regions += leg_regions
    return SuitModel(
        segments={s.id: s for s in segments},
        belts=belts,
        regions=regions,
        carried_by={"RA": "FT", "LA": "FT"},
    )


def region_points_world(region, segment_pose):
    """Map a region's points and normals into the world frame.

    Returns
    -------
    positions, normals : ndarray, shape (n, 3)
    """
    R, t = check_pose(segment_pose)
    positions = region.positions() @ R.T + t
    normals = region.normals() @ R.T
    return positions, normals


# -- key-value config -------------------------------------------------------

def _fmt(v):
    return ", ".join(repr(float(x)) for x in np.ravel(v))


def _vec(text, size=None):
    vals = [float(x) for x in text.replace(",", " ").split()]
    if size is not None and len(vals) != size:
        raise ValueError(f"expected {size} numbers, got {text!r}")
    return tuple(vals)


def _patch_to_section(patch):
    if isinstance(patch, GridPatch):
        return {
            "layout": "grid",
            "center_m": _fmt(patch.center),
            "u_axis": _fmt(patch.u_axis),
            "v_axis": _fmt(patch.v_axis),
            "size_m": _fmt(patch.size),
            "counts": ", ".join(str(int(c)) for c in patch.counts),
        }
    return {
        "layout": "ring",
        "center_m": _fmt(patch.center),
        "radius_m": repr(float(patch.radius)),
        "length_m": repr(float(patch.length)),
        "counts": ", ".join(str(int(c)) for c in patch.counts),
    }


def _patch_from_section(sec):
    counts = tuple(int(c) for c in sec["counts"].replace(",", " ").split())
    if sec["layout"] == "grid":
        return GridPatch(_vec(sec["center_m"], 3), _vec(sec["u_axis"], 3), _vec(sec["v_axis"], 3),
                         _vec(sec["size_m"], 2), counts)
    if sec["layout"] == "ring":
        return RingPatch(_vec(sec["center_m"], 3), float(sec["radius_m"]),
                         float(sec["length_m"]), counts)
    raise ValueError(f"unknown region layout {sec['layout']!r}")


SCHEMA_HEADER = """\
# Suit model.  Units: kg, m.  Frames: x forward, y left, z up in the zero pose.
# [segment.<ID>]  mass_kg, body_frame, com_offset_m (x, y, z),
#                 geometry = box (size_m: x, y, z) or shell (inner_radius_m, outer_radius_m, length_m)
# [belt.<n>]      segment, body_segment (neck|left_hip|right_hip|left_knee|right_knee),
#                 suit_point_m (segment frame), body_point_m (body frame)
# [region.<id>]   segment, layout = grid (center_m, u_axis, v_axis, size_m, counts)
#                 or ring (center_m, radius_m, length_m, counts); normal of a grid is u x v
# [carried]       <child segment> = <carrier segment>; child rides rigidly on the carrier
"""


def suit_to_config(suit):
    cfg = configparser.ConfigParser()
    for sid in SEGMENT_IDS:
        seg = suit.segments[sid]
        sec = {
            "mass_kg": repr(float(seg.mass)),
            "body_frame": seg.body_frame,
            "com_offset_m": _fmt(seg.com_offset),
            "geometry": seg.geometry.kind,
        }
        if isinstance(seg.geometry, Box):
            sec["size_m"] = _fmt(seg.geometry.size)
        else:
            sec["inner_radius_m"] = repr(float(seg.geometry.inner_radius))
            sec["outer_radius_m"] = repr(float(seg.geometry.outer_radius))
            sec["length_m"] = repr(float(seg.geometry.length))
        cfg[f"segment.{sid}"] = sec
    for i, belt in enumerate(suit.belts):
        cfg[f"belt.{i}"] = {
            "segment": belt.segment,
            "body_segment": belt.body_segment,
            "suit_point_m": _fmt(belt.suit_point),
            "body_point_m": _fmt(belt.body_point),
        }
    for region in suit.regions:
        cfg[f"region.{region.id}"] = {"segment": region.segment, **_patch_to_section(region.patch)}
    cfg["carried"] = dict(suit.carried_by)
    return cfg


def suit_from_config(cfg):
    segments, belts, regions = {}, [], []
    for name in cfg.sections():
        sec = cfg[name]
        if name.startswith("segment."):
            sid = name.split(".", 1)[1]
            if sec["geometry"] == "box":
                geom = Box(_vec(sec["size_m"], 3))
            elif sec["geometry"] == "shell":
                geom = CylindricalShell(float(sec["inner_radius_m"]), float(sec["outer_radius_m"]),
                                        float(sec["length_m"]))
            else:
                raise ValueError(f"unknown geometry {sec['geometry']!r} in [{name}]")
            segments[sid] = SuitSegment(sid, float(sec["mass_kg"]), _vec(sec["com_offset_m"], 3),
                                        geom, sec["body_frame"])
        elif name.startswith("belt."):
            belts.append(BeltConstraint(sec["segment"], _vec(sec["suit_point_m"], 3),
                                        _vec(sec["body_point_m"], 3), sec["body_segment"]))
        elif name.startswith("region."):
            regions.append(ContactRegion(name.split(".", 1)[1], sec["segment"],
                                         _patch_from_section(sec)))
    carried = {k.upper(): v.upper() for k, v in cfg["carried"].items()} if cfg.has_section("carried") else {}
    return SuitModel(segments, belts, regions, carried)


def save_suit(suit, path):
    cfg = suit_to_config(suit)
    with open(path, "w") as fh:
        fh.write(SCHEMA_HEADER)
        cfg.write(fh)


def load_suit(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"suit model file not found: {path}")
    cfg = configparser.ConfigParser()
    cfg.read(path)
    return suit_from_config(cfg)


def with_segment(suit, segment):
    """Return a copy of ``suit`` with one segment replaced."""
    segments = dict(suit.segments)
    segments[segment.id] = segment
    return replace(suit, segments=segments)
