import math

import pytest
from hypothesis import given, strategies as st

from loosegait.geometry import (SagittalFrame, Segment2, Vec3, down_vector,
                                embed_from_sagittal, frame_from_velocity, out_of_plane,
                                project_to_sagittal)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vecs = st.builds(Vec3, finite, finite, finite)


@pytest.fixture
def frame():
    return SagittalFrame(Vec3(1.0, 2.0, 3.0), Vec3(1.0, 0.0, 0.0))


def test_projection_examples(frame):
    o, f, u = frame.origin, frame.forward, frame.up
    assert project_to_sagittal(o, frame) == (0.0, 0.0)
    assert project_to_sagittal(o + f * 2, frame) == (2.0, 0.0)
    assert project_to_sagittal(o + f + u * 3, frame) == (1.0, 3.0)


def test_down_vector_examples():
    assert down_vector(Vec3(1, 2, 0)) == Vec3(1, -2, 0)
    assert down_vector(Vec3(0, -1, 0)) == Vec3(0, -1, 0)
    assert down_vector(Vec3(0, 0, 0)) == Vec3(0, 0, 0)


@given(vecs)
def test_down_vector_properties(v):
    d = down_vector(v)
    assert down_vector(d) == d
    assert d.y <= 0
    assert d.norm() == v.norm()


@given(vecs, st.floats(0, 2 * math.pi))
def test_project_embed_roundtrip(p, heading):
    frame = SagittalFrame(Vec3(0.5, -1.0, 2.0), Vec3(math.cos(heading), 0.0, math.sin(heading)))
    q = project_to_sagittal(p, frame)
    back = embed_from_sagittal(q, frame) + out_of_plane(p, frame)
    assert back.x == pytest.approx(p.x, abs=1e-9)
    assert back.y == pytest.approx(p.y, abs=1e-9)
    assert back.z == pytest.approx(p.z, abs=1e-9)
    assert project_to_sagittal(embed_from_sagittal(q, frame), frame) == pytest.approx(q, abs=1e-9)


def test_frame_rejects_non_orthogonal_axes():
    with pytest.raises(ValueError):
        SagittalFrame(Vec3(), Vec3(0.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        SagittalFrame(Vec3(), Vec3(2.0, 0.0, 0.0))


def test_frame_from_velocity_reuses_heading_at_rest():
    prev = Vec3(0.0, 0.0, 1.0)
    assert frame_from_velocity(Vec3(), Vec3(0.0, 5.0, 0.0), prev).forward == prev
    assert frame_from_velocity(Vec3(), Vec3(3.0, -1.0, 0.0), prev).forward == Vec3(1.0, 0.0, 0.0)


def test_segment_orders_endpoints():
    s = Segment2.ordered((2.0, 1.0), (-1.0, 0.0))
    assert s.a == (-1.0, 0.0) and s.b == (2.0, 1.0)
    assert s.midpoint == (0.5, 0.5)
