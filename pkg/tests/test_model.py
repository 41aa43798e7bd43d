import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suitload.model import (SEGMENT_IDS, SEGMENT_WEIGHTS, Anthropometry, BeltConstraint, Box,
                            ContactPoint, ContactRegion, CylindricalShell, GridPatch, SuitModel,
                            SuitSegment, build_default_suit, load_suit, region_points_world,
                            save_suit)
from suitload.validation import make_pose

from oracles import hand_rotation


def test_segment_weights(suit):
    assert suit.segments["FT"].weight == pytest.approx(93.23, abs=1e-12)
    assert suit.segments["RLL"].weight == pytest.approx(14.01, abs=1e-12)
    assert math.fsum(SEGMENT_WEIGHTS.values()) == pytest.approx(179.01, abs=1e-9)
    assert suit.total_weight == pytest.approx(179.01, abs=0.01)


def test_exactly_eight_segments(suit):
    assert sorted(suit.segments) == sorted(SEGMENT_IDS)


def test_belt_layout(suit):
    neck = [b.segment for b in suit.belts if b.body_segment == "neck"]
    assert sorted(neck) == ["BP", "FT"]
    assert [b.body_segment for b in suit.belts_of("LLU")] == ["left_hip"]
    assert [b.body_segment for b in suit.belts_of("RLU")] == ["right_hip"]
    assert [b.body_segment for b in suit.belts_of("LLL")] == ["left_knee"]
    assert [b.body_segment for b in suit.belts_of("RLL")] == ["right_knee"]


def test_missing_required_belt_rejected(suit):
    belts = [b for b in suit.belts if b.segment != "BP"]
    with pytest.raises(ValueError, match="BP"):
        SuitModel(suit.segments, belts, suit.regions, suit.carried_by)


def test_shoulder_regions_have_sixty_points(suit):
    for side in ("left", "right"):
        region = suit.region(f"{side}_shoulder")
        assert len(region.points) == 60
        assert region.segment == "FT"


def test_shoulder_patch_footprint(suit):
    pos = suit.region("left_shoulder").positions()
    extent = np.ptp(pos, axis=0)
    # cell-centred 10 x 6 grid over 160 x 70 mm
    assert extent[0] == pytest.approx(0.160 * 9 / 10)
    assert extent[1] == pytest.approx(0.070 * 5 / 6)


@pytest.mark.parametrize("region_id", ["left_shoulder", "right_shoulder", "upper_back"])
def test_grid_centroid_and_uniform_spacing(suit, region_id):
    region = suit.region(region_id)
    pos = region.positions()
    patch = region.patch
    assert np.allclose(pos.mean(axis=0), patch.center, atol=1e-12)
    u = np.asarray(patch.u_axis, float)
    v = np.asarray(patch.v_axis, float)
    for axis, count in ((u, patch.counts[0]), (v, patch.counts[1])):
        coords = np.unique(np.round(pos @ axis, 12))
        assert len(coords) == count
        steps = np.diff(coords)
        assert np.max(np.abs(steps - steps.mean())) <= 1e-9 * abs(steps.mean())


def test_ring_centroid_on_axis(suit):
    region = suit.region("left_thigh")
    assert np.allclose(region.positions().mean(axis=0), region.patch.center, atol=1e-12)
    assert np.allclose(np.linalg.norm(region.normals(), axis=1), 1.0)


def test_normals_unit(suit):
    for region in suit.regions:
        assert np.all(np.abs(np.linalg.norm(region.normals(), axis=1) - 1.0) <= 1e-9)


def test_shoulder_normals_point_up(suit):
    assert np.allclose(suit.region("right_shoulder").normals(), [0.0, 0.0, 1.0])


def test_contact_point_rejects_non_unit_normal():
    with pytest.raises(ValueError, match="unit"):
        ContactPoint((0, 0, 0), (0, 0, 1.001))


def test_build_is_deterministic(anthro):
    a, b = build_default_suit(anthro), build_default_suit(anthro)
    for sid in SEGMENT_IDS:
        assert np.array_equal(a.segments[sid].inertia, b.segments[sid].inertia)
        assert np.array_equal(a.segments[sid].com_offset, b.segments[sid].com_offset)
    for ra, rb in zip(a.regions, b.regions):
        assert np.array_equal(ra.positions(), rb.positions())


def test_doubled_thigh_moves_anchors_not_masses(anthro):
    base = build_default_suit(anthro)
    long = build_default_suit(replace(anthro, thigh_length=2 * anthro.thigh_length))
    for sid in SEGMENT_IDS:
        assert long.segments[sid].mass == base.segments[sid].mass
    knee_base = base.belts_of("LLL")[0].body_point
    knee_long = long.belts_of("LLL")[0].body_point
    assert knee_long[2] == pytest.approx(knee_base[2] - anthro.thigh_length)


@pytest.mark.parametrize("field", ["thigh_length", "shank_length", "subject_height"])
@pytest.mark.parametrize("value", [0.0, -0.3])
def test_non_positive_lengths_rejected(field, value):
    with pytest.raises(ValueError, match=field):
        Anthropometry(**{field: value})


def test_inertia_of_box_matches_formula():
    I = Box((0.2, 0.3, 0.4)).inertia(6.0)
    assert np.allclose(np.diag(I), [0.5 * (0.09 + 0.16), 0.5 * (0.04 + 0.16), 0.5 * (0.04 + 0.09)])


def test_shell_inertia_limits():
    # thin shell: axial inertia tends to m r^2
    I = CylindricalShell(0.1 - 1e-9, 0.1, 0.5).inertia(2.0)
    assert I[2, 2] == pytest.approx(2.0 * 0.01, rel=1e-6)


def test_segment_inertia_psd(suit):
    for seg in suit.segments.values():
        assert seg.mass > 0
        assert np.linalg.eigvalsh(seg.inertia).min() >= 0


def test_segment_rejects_bad_inertia():
    with pytest.raises(ValueError, match="semi-definite"):
        SuitSegment("FT", 1.0, (0, 0, 0), Box((1, 1, 1)), "trunk", inertia=-np.eye(3))


def test_region_must_reference_segment(suit):
    bad = ContactRegion("x", "FT", suit.region("left_shoulder").patch)
    bad = replace(bad, segment="XX")
    with pytest.raises(ValueError, match="unknown segment"):
        SuitModel(suit.segments, suit.belts, suit.regions + (bad,), suit.carried_by)


def test_belt_rejects_unknown_anchor():
    with pytest.raises(ValueError, match="anchor"):
        BeltConstraint("FT", (0, 0, 0), (0, 0, 0), "elbow")


# region_points_world

def _single_point_region():
    patch = GridPatch((0.1, 0.2, 0.3), (1, 0, 0), (0, 0, -1), (0.01, 0.01), (1, 1))
    return ContactRegion("probe", "FT", patch)


def test_identity_pose(suit):
    region = suit.region("left_shoulder")
    pos, nrm = region_points_world(region, np.eye(4))
    assert np.array_equal(pos, region.positions())
    assert np.array_equal(nrm, region.normals())


def test_pure_translation(suit):
    region = suit.region("left_shoulder")
    t = np.array([1.0, -2.0, 0.5])
    pos, nrm = region_points_world(region, make_pose(np.eye(3), t))
    assert np.allclose(pos, region.positions() + t)
    assert np.array_equal(nrm, region.normals())


def test_quarter_turn_about_z():
    region = _single_point_region()
    assert np.allclose(region.normals()[0], [0.0, 1.0, 0.0])
    _, nrm = region_points_world(region, make_pose(hand_rotation([0, 0, 1], np.pi / 2), 0))
    assert np.allclose(nrm[0], [-1.0, 0.0, 0.0], atol=1e-15)


def test_non_orthonormal_pose_rejected(suit):
    pose = np.eye(4)
    pose[0, 0] = 1.1
    with pytest.raises(ValueError, match="orthonormal"):
        region_points_world(suit.region("left_shoulder"), pose)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-np.pi, np.pi),
       st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_world_mapping_is_rigid(axis, angle, t):
    if np.linalg.norm(axis) < 1e-3:
        axis = [0, 0, 1]
    region = build_default_suit().region("right_shoulder")
    R = hand_rotation(axis, angle)
    pos, nrm = region_points_world(region, make_pose(R, t))
    assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0, atol=1e-12)
    d_world = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    local = region.positions()
    d_local = np.linalg.norm(local[:, None] - local[None], axis=-1)
    assert np.allclose(d_world, d_local, atol=1e-12)


# config file

def test_config_round_trip(tmp_path, suit):
    path = tmp_path / "suit.ini"
    save_suit(suit, path)
    text = path.read_text()
    assert text.startswith("# Suit model.  Units")
    loaded = load_suit(path)
    for sid in SEGMENT_IDS:
        a, b = suit.segments[sid], loaded.segments[sid]
        assert a.mass == b.mass
        assert np.array_equal(a.com_offset, b.com_offset)
        assert np.allclose(a.inertia, b.inertia, rtol=1e-15, atol=0)
    assert [r.id for r in loaded.regions] == [r.id for r in suit.regions]
    for ra, rb in zip(suit.regions, loaded.regions):
        assert np.allclose(ra.positions(), rb.positions(), atol=1e-15)
    assert loaded.carried_by == suit.carried_by
    assert len(loaded.belts) == len(suit.belts)


def test_config_edit_changes_mass(tmp_path, suit):
    path = tmp_path / "suit.ini"
    save_suit(suit, path)
    text = path.read_text().replace(f"mass_kg = {suit.segments['BP'].mass!r}", "mass_kg = 2.0")
    path.write_text(text)
    assert load_suit(path).segments["BP"].mass == 2.0


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.ini"):
        load_suit(tmp_path / "nope.ini")


def test_from_height_scales_lengths():
    a = Anthropometry.from_height(1.80, 75.0)
    b = Anthropometry.from_height(1.60, 75.0)
    assert a.thigh_length / b.thigh_length == pytest.approx(1.8 / 1.6)
    assert build_default_suit(a).total_weight == pytest.approx(179.01, abs=0.01)
