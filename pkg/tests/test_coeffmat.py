from fractions import Fraction

import pytest

from coeffmat import (
    bareiss_det,
    block_structure,
    build_K,
    certify_nonsingular,
    condition_estimate,
    det_factorization_check,
    off_diag_factorization,
    structure_certificate,
)
from errors import ArgumentError, StencilError
from kernels import KernelKind

ON = KernelKind.ON_DIAG_X1
OFF = KernelKind.OFF_DIAG


def test_build_K_on_diag_p1():
    assert build_K(ON, 1).rows() == [[1, 2, 2], [0, 2, 0], [0, 0, 2]]


def test_build_K_off_diag_p3():
    assert build_K(OFF, 3).rows() == [[4, 16], [4, 40]]


def test_x2_matrix_equals_x1_matrix():
    # the two on-diagonal kernels share K; only the moments differ
    assert build_K(KernelKind.ON_DIAG_X2, 3).rows() == build_K(ON, 3).rows()


def test_bareiss_small():
    assert bareiss_det([[1, 2, 2], [0, 2, 0], [0, 0, 2]]) == 4
    assert bareiss_det([[4, 16], [4, 40]]) == 96
    assert bareiss_det([[0, 1], [1, 0]]) == -1
    assert bareiss_det([[1, 2], [2, 4]]) == 0
    assert bareiss_det([]) == 1


def test_bareiss_fractions():
    assert bareiss_det([[Fraction(1, 2), 1], [1, 4]]) == 1


def test_bareiss_rejects_non_square():
    with pytest.raises(ArgumentError):
        bareiss_det([[1, 2, 3], [4, 5, 6]])


def test_on_diag_p0_is_one_by_one():
    K = build_K(ON, 0)
    assert K.rows() == [[1]]
    assert bareiss_det(K.rows()) == 1


@pytest.mark.parametrize("p", range(1, 11))
def test_on_diag_nonsingular_and_blocks(p):
    K = build_K(ON, p)
    assert bareiss_det(K.rows()) != 0
    assert block_structure(K).ok


@pytest.mark.parametrize("p", range(2, 13))
def test_off_diag_nonsingular_and_factorization(p):
    K = build_K(OFF, p)
    assert bareiss_det(K.rows()) != 0
    assert off_diag_factorization(K).ok


def test_block_structure_rejects_off_diag():
    with pytest.raises(ArgumentError):
        block_structure(build_K(OFF, 3))


@pytest.mark.parametrize("kernel,p,ratio", [(ON, 3, 1), (OFF, 3, 2), (OFF, 4, 4)])
def test_det_ratio_known_constants(kernel, p, ratio):
    rr = det_factorization_check(kernel, p, trials=5, seed=0)
    assert rr.constant_ratio
    assert rr.ratio == ratio


@pytest.mark.parametrize("kernel,p", [(ON, 2), (ON, 4), (ON, 5), (OFF, 5), (OFF, 6)])
def test_det_ratio_constant(kernel, p):
    rr = det_factorization_check(kernel, p, trials=4, seed=3)
    assert rr.constant_ratio
    assert len(set(rr.samples)) == 4


def test_det_ratio_needs_p2():
    with pytest.raises(StencilError):
        det_factorization_check(ON, 1)


def test_certify_nonsingular_ranges():
    on = certify_nonsingular(ON, 4)
    assert [p for p, _, _ in on] == [1, 2, 3, 4]
    assert all(ok for _, _, ok in on)
    off = certify_nonsingular(OFF, 5)
    assert [p for p, _, _ in off] == [2, 3, 4, 5]
    assert off[1][1] == 96
    with pytest.raises(StencilError):
        certify_nonsingular(OFF, 1)


def test_structure_certificate_fields():
    cert = structure_certificate(OFF, 3)
    assert cert["N"] == 2
    assert cert["det_nonzero"] and cert["structure_ok"]
    assert cert["ratio_constant"] is True
    assert cert["ratio"] == "2"
    assert cert["condition"] > 1.0
    assert structure_certificate(ON, 1)["ratio_constant"] is None


def test_condition_estimate_identity_like():
    assert condition_estimate(build_K(ON, 0)) == pytest.approx(1.0)
