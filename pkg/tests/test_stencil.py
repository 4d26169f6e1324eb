import pytest

from errors import StencilError
from kernels import KernelKind
from stencil import MultiIndex, build_stencil, index_set, layer_count, stencil_size, symmetry_group

ON = KernelKind.ON_DIAG_X1
OFF = KernelKind.OFF_DIAG


def _pairs(indices):
    return [tuple(i) for i in indices]


def test_on_diag_index_sets():
    assert _pairs(index_set(ON, 0)) == [(0, 0)]
    assert _pairs(index_set(ON, 1)) == [(0, 0), (0, 1), (1, 0)]
    assert _pairs(index_set(ON, 2)) == [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0), (1, 1)]
    assert _pairs(index_set(ON, 3))[-3:] == [(1, 1), (2, 1), (1, 2)]


def test_off_diag_index_sets():
    assert _pairs(index_set(OFF, 2)) == [(1, 1)]
    assert _pairs(index_set(OFF, 3)) == [(1, 1), (2, 1)]
    assert _pairs(index_set(OFF, 4)) == [(1, 1), (2, 1), (3, 1), (2, 2)]
    assert _pairs(index_set(OFF, 5)) == [(1, 1), (2, 1), (3, 1), (2, 2), (4, 1), (3, 2)]


@pytest.mark.parametrize("p", range(0, 9))
def test_on_diag_sizes(p):
    idx = index_set(ON, p)
    assert len(idx) == stencil_size(ON, p) == (p + 1) * (p + 2) // 2
    assert len(set(idx)) == len(idx)


@pytest.mark.parametrize("p", range(2, 13))
def test_off_diag_sizes(p):
    idx = index_set(OFF, p)
    want = p * p // 4 if p % 2 == 0 else (p * p - 1) // 4
    assert len(idx) == stencil_size(OFF, p) == want
    assert len(set(idx)) == len(idx)
    assert all(g.a >= g.b >= 1 for g in idx)


def test_off_diag_p1_rejected():
    with pytest.raises(StencilError):
        index_set(OFF, 1)
    with pytest.raises(StencilError):
        stencil_size(OFF, 1)


def test_on_diag_negative_p_rejected():
    with pytest.raises(StencilError):
        index_set(ON, -1)


def test_on_diag_groups():
    assert [sp.point for sp in symmetry_group(ON, MultiIndex(0, 0))] == [(0, 0)]
    assert sorted(sp.point for sp in symmetry_group(ON, MultiIndex(1, 0))) == [(-1, 0), (1, 0)]
    g = symmetry_group(ON, MultiIndex(1, 2))
    assert len(g) == 4
    assert all(sp.sign == 1 for sp in g)


def test_off_diag_groups():
    g11 = symmetry_group(OFF, MultiIndex(1, 1))
    assert len(g11) == 4
    assert {sp.point: sp.sign for sp in g11} == {(1, 1): 1, (-1, -1): 1, (1, -1): -1, (-1, 1): -1}
    g21 = symmetry_group(OFF, MultiIndex(2, 1))
    assert len(g21) == 8
    assert all(sp.sign == (1 if sp.point[0] * sp.point[1] > 0 else -1) for sp in g21)


def test_off_diag_group_needs_nonzero_components():
    with pytest.raises(StencilError):
        symmetry_group(OFF, MultiIndex(2, 0))


@pytest.mark.parametrize("kernel,p", [(ON, 4), (OFF, 7)])
def test_groups_partition_stencil(kernel, p):
    st = build_stencil(kernel, p)
    pts = st.points()
    assert len(pts) == len(set(pts))


def test_layer_count():
    assert layer_count(ON, 3) == 4
    assert layer_count(OFF, 3) == 2


def test_build_stencil_is_cached():
    assert build_stencil(ON, 2) is build_stencil(ON, 2)
    assert build_stencil(ON, 2).group_of((1, 0)) == tuple(symmetry_group(ON, MultiIndex(1, 0)))
