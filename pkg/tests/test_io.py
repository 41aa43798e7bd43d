import os
import stat

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from suitload import io
from suitload.analysis import LoadSeries
from suitload.kinematics import TrialRecording


def _recording(n=12, contact=True, seed=3):
    rng = np.random.default_rng(seed)
    R = Rotation.from_rotvec(rng.normal(0, 0.4, (n, 3))).as_matrix()
    joints = rng.uniform(-0.5, 0.5, (n, 12))
    joints[:, [3, 9]] = np.abs(joints[:, [3, 9]])
    flags = rng.random((n, 2)) < 0.5 if contact else None
    return TrialRecording(np.arange(n) / 128, R, rng.normal(0, 3, (n, 3)), joints, flags)


@pytest.mark.parametrize("orientation", ["matrix", "quaternion"])
def test_recording_round_trip(tmp_path, orientation):
    rec = _recording()
    path = tmp_path / "rec.csv"
    io.write_recording(rec, path, orientation)
    back = io.read_recording(path)
    assert np.array_equal(back.time, rec.time)
    assert np.array_equal(back.accel, rec.accel)
    assert np.allclose(back.orientation, rec.orientation, atol=1e-15)
    assert np.allclose(back.joints, rec.joints, rtol=0, atol=1e-15)
    assert np.array_equal(back.contact, rec.contact)


def test_recording_without_flags(tmp_path):
    rec = _recording(contact=False)
    path = tmp_path / "rec.csv"
    io.write_recording(rec, path)
    assert "left_stance" not in path.read_text().splitlines()[0]
    assert io.read_recording(path).contact is None


def test_recording_header_documents_units(tmp_path):
    path = tmp_path / "rec.csv"
    io.write_recording(_recording(), path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[0] == "time_s"
    assert "left_knee_flexion_deg" in header
    assert header[-2:] == ["left_stance", "right_stance"]


def test_degrees_on_disk(tmp_path):
    rec = _recording()
    path = tmp_path / "rec.csv"
    io.write_recording(rec, path)
    header, data = io._read_table(path)
    col = header.index("left_knee_flexion_deg")
    assert np.allclose(np.radians(data[:, col]), rec.joints[:, 3])


def _write(tmp_path, text, name="f.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_missing_file_names_path(tmp_path):
    with pytest.raises(FileNotFoundError, match="absent.csv"):
        io.read_recording(tmp_path / "absent.csv")


def test_format_errors(tmp_path):
    rec_text = io.recording_csv(_recording())
    header, *rows = rec_text.splitlines()
    with pytest.raises(io.FormatError, match="time_s"):
        io.read_recording(_write(tmp_path, "t," + header.split(",", 1)[1] + "\n" + rows[0]))
    with pytest.raises(io.FormatError, match="orientation"):
        io.read_recording(_write(tmp_path, "time_s,ax\n0,1\n"))
    with pytest.raises(io.FormatError, match="non-numeric"):
        io.read_recording(_write(tmp_path, header + "\n" + rows[0].replace(rows[0].split(",")[1],
                                                                          "abc", 1)))
    with pytest.raises(io.FormatError, match="header row"):
        io.read_recording(_write(tmp_path, header + "\n"))
    with pytest.raises(io.FormatError, match="missing columns"):
        cut = ",".join(header.split(",")[:-3])
        io.read_recording(_write(tmp_path, cut + "\n" + ",".join(rows[0].split(",")[:-3])))
    err = pytest.raises(io.FormatError, io.read_recording, _write(tmp_path, header + "\n1,2\n"))
    assert "f.csv" in str(err.value)


def test_bad_stance_flags(tmp_path):
    text = io.recording_csv(_recording())
    lines = text.splitlines()
    lines[1] = lines[1][:-1] + "2"
    with pytest.raises(io.FormatError, match="stance"):
        io.read_recording(_write(tmp_path, "\n".join(lines) + "\n"))


def test_non_unit_quaternion_rejected(tmp_path):
    text = io.recording_csv(_recording(), "quaternion")
    lines = text.splitlines()
    vals = lines[1].split(",")
    vals[1] = repr(float(vals[1]) * 1.1)
    lines[1] = ",".join(vals)
    with pytest.raises(io.FormatError, match="unit norm"):
        io.read_recording(_write(tmp_path, "\n".join(lines) + "\n"))


def test_comment_lines_skipped(tmp_path):
    text = "# exported by hand\ntime_s,left_N,right_N\n0,1,2\n0.01,3,4\n"
    loads = io.read_measured(_write(tmp_path, text))
    assert np.array_equal(loads["left_shoulder"].values, [1.0, 3.0])
    assert np.array_equal(loads["right_shoulder"].values, [2.0, 4.0])


def test_measured_round_trip(tmp_path):
    t = np.arange(5) * 0.01
    series = {r: LoadSeries(r, "measured", t, np.arange(5.0) + k)
              for k, r in enumerate(("left_shoulder", "right_shoulder", "upper_back"))}
    path = _write(tmp_path, io.measured_csv(series))
    assert path.read_text().splitlines()[0] == "time_s,left_N,right_N,upper_back_N"
    back = io.read_measured(path)
    for r, s in series.items():
        assert np.array_equal(back[r].values, s.values)


def test_measured_errors(tmp_path):
    with pytest.raises(io.FormatError, match="_N"):
        io.read_measured(_write(tmp_path, "time_s,left\n0,1\n"))
    with pytest.raises(io.FormatError, match="increasing"):
        io.read_measured(_write(tmp_path, "time_s,left_N\n0,1\n0,2\n"))


def test_loads_and_points_csv(stand):
    text = io.loads_csv(stand.loads)
    header = text.splitlines()[0].split(",")
    assert header == ["time_s", "left_shoulder_N", "right_shoulder_N",
                      "left_shoulder_tangential_ratio", "right_shoulder_tangential_ratio",
                      "vertical_total_N", "max_residual_N"]
    pts = io.points_csv(stand.loads).splitlines()
    assert pts[0] == "sample,region,point,fx_N,fy_N,fz_N"
    assert len(pts) == 1 + len(stand.recording) * 120


def test_read_loads_round_trip(tmp_path, stand):
    path = _write(tmp_path, io.loads_csv(stand.loads))
    back = io.read_loads(path)
    assert sorted(back) == ["left_shoulder", "right_shoulder"]
    assert np.array_equal(back["left_shoulder"].values, stand.loads.loads["left_shoulder"].values)


def test_states_csv_columns():
    text = io.states_csv([0.0, 0.1], np.arange(24.0).reshape(2, 12))
    lines = text.splitlines()
    assert lines[0].split(",")[:4] == ["time_s", "base_x", "base_y", "base_z"]
    assert lines[0].endswith("right_foot_z")
    assert lines[2].split(",")[1] == "12.0"


def test_atomic_write(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    io.atomic_write_text(path, "one\n")
    io.atomic_write_text(path, "two\n")
    assert path.read_text() == "two\n"
    assert os.listdir(path.parent) == ["out.txt"]
    assert stat.S_IMODE(path.stat().st_mode) == io.FILE_MODE


def test_atomic_write_failure_leaves_no_temp(tmp_path):
    with pytest.raises(TypeError):
        io.atomic_write_text(tmp_path / "x.txt", object())
    assert os.listdir(tmp_path) == []
