import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from l1tes.leadfield import (
    DegenerateTargetError, DimensionError, LeadField, TargetSpec, generate_synthetic_leadfield,
    load_leadfield_csv, projector, save_leadfield_csv, split_and_project, target_for_point,
)


def test_minimal_shape():
    lf = generate_synthetic_leadfield(seed=1, n_electrodes=2, n_field_rows=1, decay=1.0)
    assert lf.matrix.shape == (1, 2)
    assert np.all(np.isfinite(lf.matrix))


def test_same_seed_bit_identical():
    a = generate_synthetic_leadfield(3, 16, 200, 2.0).matrix
    b = generate_synthetic_leadfield(3, 16, 200, 2.0).matrix
    assert a.tobytes() == b.tobytes()
    c = generate_synthetic_leadfield(4, 16, 200, 2.0).matrix
    assert not np.array_equal(a, c)


def test_condition_number_from_independent_svd():
    import scipy.linalg

    lf = generate_synthetic_leadfield(7, 16, 200, 2.0)
    sv = scipy.linalg.svdvals(lf.matrix)  # LAPACK gesdd via scipy, not numpy
    cond = sv[0] / sv[-1]
    assert np.isfinite(cond) and cond > 1
    assert np.isclose(cond, np.linalg.cond(lf.matrix), rtol=1e-8)


@pytest.mark.parametrize("args", [(1, 1, 5, 1.0), (1, 4, 0, 1.0)])
def test_bad_dimensions_rejected(args):
    with pytest.raises(DimensionError):
        generate_synthetic_leadfield(*args)


def test_bad_decay_rejected():
    with pytest.raises(ValueError):
        generate_synthetic_leadfield(1, 4, 4, 0.0)


def test_leadfield_rejects_nan():
    with pytest.raises(ValueError):
        LeadField(np.array([[1.0, np.nan]]))


def test_single_row_projection_is_identity():
    lf = LeadField(np.array([[1.0, -2.0, 0.5], [3.0, 1.0, -1.0]]))
    slf = split_and_project(lf, TargetSpec((0,), np.array([1.0])))
    np.testing.assert_array_equal(slf.l1, lf.matrix[:1])
    np.testing.assert_array_equal(slf.l2, lf.matrix[1:])


def test_orthogonal_target_is_degenerate():
    lf = generate_synthetic_leadfield(1, 4, 9, 2.0)
    t = TargetSpec((0, 1, 2), np.array([1.0, 0.0, 0.0]), target_field=np.array([0.0, 1.0, 0.0]))
    with pytest.raises(DegenerateTargetError):
        split_and_project(lf, t)


def test_x_axis_direction_against_explicit_projector():
    lf = generate_synthetic_leadfield(2, 5, 12, 2.0)
    slf = split_and_project(lf, TargetSpec((3, 4, 5), np.array([1.0, 0.0, 0.0])))
    P = np.zeros((3, 3))
    P[0, 0] = 1.0  # d d^T for d = e1, written out by hand
    np.testing.assert_allclose(slf.l1, P @ lf.matrix[3:6], atol=0)
    np.testing.assert_array_equal(slf.l1[0], lf.matrix[3])
    assert np.all(slf.l1[1:] == 0)


def test_empty_and_zero_targets():
    with pytest.raises(DegenerateTargetError):
        TargetSpec((), np.zeros(0))
    with pytest.raises(DegenerateTargetError):
        projector([0.0, 0.0, 0.0])


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_projector_idempotent(d):
    P = projector(d)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(P, P.T, atol=0)


@given(st.integers(0, 60), st.sampled_from([(1, 0, 0), (0, 1, 0), (1, 1, 1), (0.3, -0.2, 0.9)]),
       st.floats(0.1, 10))
def test_split_partition_and_amplitude(point, direction, amp):
    lf = generate_synthetic_leadfield(5, 6, 183, 1.5)
    t = target_for_point(lf, point, direction, amp)
    slf = split_and_project(lf, t)
    assert slf.l1.shape[0] + slf.l2.shape[0] == lf.n_field_rows
    assert abs(np.linalg.norm(slf.x1) - amp) <= 1e-12 * amp
    rest = np.delete(lf.matrix, list(t.target_rows), axis=0)
    np.testing.assert_array_equal(slf.l2, rest)


def test_csv_roundtrip_full_precision(tmp_path):
    lf = generate_synthetic_leadfield(11, 16, 200, 2.0)
    path = tmp_path / "lf.csv"
    save_leadfield_csv(lf, path, comment="seed=11")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1] == "200,16"
    back = load_leadfield_csv(path)
    assert back.matrix.tobytes() == lf.matrix.tobytes()


def test_csv_header_mismatch(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("2,2\n1,2\n")
    with pytest.raises(DimensionError):
        load_leadfield_csv(path)


def test_restrict_keeps_original_indices():
    lf = generate_synthetic_leadfield(1, 8, 30, 2.0)
    slf = split_and_project(lf, target_for_point(lf, 1, (0, 0, 1)))
    sub = slf.restrict([6, 2, 5]).restrict([0, 2])
    assert sub.electrodes == (6, 5)
    np.testing.assert_array_equal(sub.l1, slf.l1[:, [6, 5]])
