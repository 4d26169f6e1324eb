import json
import os
from fractions import Fraction
from functools import lru_cache

import pytest
from mpmath import mp

from config import REPO_ROOT, PipelineConfig
from errors import ArgumentError, TableMismatchError
from kernels import (
    Integrand,
    KernelKind,
    builtin_phi,
    moment_integral,
    monomial_integrand,
    off_test_integrand,
    on_test_integrand,
    radial_bump_integrand,
    regularizer_integrand,
    zero_integrand,
)
from quadrature import (
    QuadratureConfig,
    correction_sum,
    corrected_quadrature,
    corrected_quadrature_hweights,
    error_sweep,
    fit_slope,
    integral_triple,
    punctured_rule,
)
from refint import reference_integral
from stencil import MultiIndex, index_set, stencil_size
from weightgen import WeightTable, load_table, solve_weights, table_filename
from xprec import working_precision

ON1 = KernelKind.ON_DIAG_X1
ON2 = KernelKind.ON_DIAG_X2
OFF = KernelKind.OFF_DIAG

REFERENCE_TABLES = os.path.join(REPO_ROOT, "tables", "reference")


def _synthetic_on_tables(alpha="0.5"):
    x1 = WeightTable(kernel=ON1, alpha=alpha, p=1, digits=5,
                     weights=[(MultiIndex(0, 0), "0.9"), (MultiIndex(0, 1), "0.05"), (MultiIndex(1, 0), "-0.03")])
    swapped = x1.weight_map()
    x2 = WeightTable(kernel=ON2, alpha=alpha, p=1, digits=5,
                     weights=[(g, swapped[g.swapped()]) for g in index_set(ON2, 1)])
    return x1, x2


def _synthetic_off_table(alpha="0.5"):
    return WeightTable(kernel=OFF, alpha=alpha, p=3, digits=5,
                       weights=[(MultiIndex(1, 1), "0.047"), (MultiIndex(2, 1), "-0.0046")])


def test_config_checks():
    with pytest.raises(ArgumentError):
        QuadratureConfig(h=Fraction(2), truncation_radius=1.0)
    with pytest.raises(ArgumentError):
        QuadratureConfig(h=Fraction(1, 8), truncation_radius=1.0, arithmetic="quad")
    cfg = QuadratureConfig.for_integrand(on_test_integrand(), "1/8")
    assert cfg.h == Fraction(1, 8)
    assert cfg.box() == 8


def test_zero_integrand_gives_zero():
    t1, _ = _synthetic_on_tables()
    cfg = QuadratureConfig.for_integrand(zero_integrand(), Fraction(1, 16))
    assert corrected_quadrature(zero_integrand(), ON1, "0.5", t1, cfg) == 0.0


def test_off_diag_radial_integrand_vanishes():
    phi = radial_bump_integrand()
    cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 32))
    q = corrected_quadrature(phi, OFF, "0.5", _synthetic_off_table(), cfg)
    assert abs(q) < 1e-15


def test_off_diag_odd_under_mirror():
    phi = off_test_integrand()
    cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 32))
    t = _synthetic_off_table()
    q = corrected_quadrature(phi, OFF, "0.5", t, cfg)
    qm = corrected_quadrature(phi.mirrored(), OFF, "0.5", t, cfg)
    assert qm == pytest.approx(-q, rel=1e-12)


def test_on_diag_swap_symmetry():
    phi = on_test_integrand()
    t1, t2 = _synthetic_on_tables()
    cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 32))
    q11 = corrected_quadrature(phi, ON1, "0.5", t1, cfg)
    q22 = corrected_quadrature(phi.swapped(), ON2, "0.5", t2, cfg)
    assert q11 == pytest.approx(q22, rel=1e-13)


def test_radial_integrand_on_diag_pair():
    phi = radial_bump_integrand()
    t1, t2 = _synthetic_on_tables()
    cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 32))
    i11, i22, i12 = integral_triple(phi, "0.5", [t1, t2, _synthetic_off_table()], cfg)
    assert i11 == pytest.approx(i22, rel=1e-13)
    assert abs(i12) < 1e-15


def test_double_and_extended_agree():
    phi = on_test_integrand()
    with working_precision(30):
        d = punctured_rule(phi, ON1, "0.5", QuadratureConfig.for_integrand(phi, Fraction(1, 16)))
        x = punctured_rule(phi, ON1, mp.mpf("0.5"), QuadratureConfig.for_integrand(phi, Fraction(1, 16), "extended"))
    assert d == pytest.approx(float(x), rel=1e-13)


def test_table_kernel_mismatch():
    phi = on_test_integrand()
    t1, _ = _synthetic_on_tables()
    cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 8))
    with pytest.raises(TableMismatchError):
        corrected_quadrature(phi, ON2, "0.5", t1, cfg)
    with pytest.raises(TableMismatchError):
        corrected_quadrature(phi, ON1, "1.5", t1, cfg)


def test_triple_needs_one_table_per_kernel():
    t1, _ = _synthetic_on_tables()
    phi = on_test_integrand()
    cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 8))
    with pytest.raises(TableMismatchError):
        integral_triple(phi, "0.5", [t1, t1, _synthetic_off_table()], cfg)
    with pytest.raises(ArgumentError):
        integral_triple(phi, "0.5", [t1], cfg)


EXACT_CASES = [(kernel, p, tuple(xi)) for kernel, p in [(ON1, 1), (ON2, 1), (ON1, 2), (OFF, 2), (OFF, 3)]
               for xi in index_set(kernel, p)]


@pytest.mark.parametrize("kernel,p,xi", EXACT_CASES)
def test_finite_h_weights_integrate_moments_exactly(kernel, p, xi):
    k = 6
    with working_precision(30):
        alpha = mp.mpf("0.5")
        g = regularizer_integrand(k, 30)
        e = (2 * xi[0], 2 * xi[1]) if kernel.is_on_diag else (2 * xi[0] - 1, 2 * xi[1] - 1)
        phi = monomial_integrand(g, e)
        cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 8), "extended")
        q = corrected_quadrature_hweights(phi, kernel, alpha, p, cfg, k)
        exact = moment_integral(kernel, MultiIndex(*xi), alpha, k)
        assert abs(q - exact) <= mp.mpf(10) ** -20 * abs(exact)


# --- symmetry and linearity -------------------------------------------------

# g * x^e with g radial: odd in x1 or x2, and still odd after multiplying by s
ODD_MONOMIALS = [(1, 0), (0, 1), (3, 0), (2, 1)]


@pytest.mark.parametrize("kernel,p", [(ON1, 2), (ON2, 2), (OFF, 3)])
@pytest.mark.parametrize("e", ODD_MONOMIALS)
def test_rule_parts_vanish_on_odd_moments(kernel, p, e):
    with working_precision(40):
        alpha = mp.mpf("0.5")
        phi = monomial_integrand(regularizer_integrand(6, 40), e)
        cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 8), "extended")
        weights = [mp.mpf(j + 1) / 7 for j in range(stencil_size(kernel, p))]
        assert abs(punctured_rule(phi, kernel, alpha, cfg)) < mp.mpf(10) ** -25
        assert abs(correction_sum(phi, kernel, alpha, p, weights, cfg)) < mp.mpf(10) ** -25


@pytest.mark.slow
@pytest.mark.parametrize("kernel", [ON1, OFF])
@pytest.mark.parametrize("e", ODD_MONOMIALS)
def test_reference_integral_vanishes_on_odd_moments(kernel, e):
    phi = monomial_integrand(regularizer_integrand(6, 30), e)
    assert abs(reference_integral(phi, kernel, "0.5", 22).value) < mp.mpf(10) ** -25


def test_corrected_rule_is_linear_in_the_integrand():
    phi, psi = on_test_integrand(), radial_bump_integrand()
    t1, _ = _synthetic_on_tables()
    with working_precision(40):
        alpha = mp.mpf("0.5")
        a, b = mp.mpf(3) / 7, -mp.mpf(5) / 3
        sa, sb = phi.scaled(a), psi.scaled(b)
        combo = Integrand(
            name="combo",
            eval_scalar=lambda x1, x2: sa(x1, x2) + sb(x1, x2),
            eval_np=lambda X1, X2: sa.eval_np(X1, X2) + sb.eval_np(X1, X2),
            support_radius=1.0,
        )
        cfg = QuadratureConfig.for_integrand(phi, Fraction(1, 16), "extended")
        q_phi = corrected_quadrature(phi, ON1, alpha, t1, cfg)
        q_psi = corrected_quadrature(psi, ON1, alpha, t1, cfg)
        tol = mp.mpf(10) ** -25 * (abs(a * q_phi) + abs(b * q_psi))
        assert abs(corrected_quadrature(sa, ON1, alpha, t1, cfg) - a * q_phi) < tol
        assert abs(corrected_quadrature(combo, ON1, alpha, t1, cfg) - (a * q_phi + b * q_psi)) < tol

    d = QuadratureConfig.for_integrand(phi, Fraction(1, 16))
    want = 3.0 * corrected_quadrature(phi, ON1, "0.5", t1, d)
    assert corrected_quadrature(phi.scaled(3), ON1, "0.5", t1, d) == pytest.approx(want, rel=1e-14)


# --- slope fitting ----------------------------------------------------------

def test_fit_slope_pure_power():
    rows = [(Fraction(1, 2 ** m), 3.0 * 2.0 ** (-4.5 * m)) for m in range(3, 8)]
    fit = fit_slope(rows, floor=0.0)
    assert fit.slope == pytest.approx(4.5, abs=1e-9)
    assert fit.fit_range == (2.0 ** -7, 2.0 ** -3)


def test_fit_slope_respects_floor():
    rows = [(Fraction(1, 2 ** m), 2.0 ** (-4 * m)) for m in range(3, 8)] + [(Fraction(1, 256), 1e-16)]
    fit = fit_slope(rows, floor=1e-12)
    assert fit.slope == pytest.approx(4.0, abs=1e-9)
    assert len(fit.used) == 5


def test_fit_slope_drops_outlying_coarsest_point():
    rows = [(Fraction(1, 4), 1.0)] + [(Fraction(1, 2 ** m), 2.0 ** (-3 * m) * (1 + 0.01 * (-1) ** m))
                                     for m in range(3, 9)]
    fit = fit_slope(rows, floor=0.0)
    assert 0 not in fit.used
    assert fit.slope == pytest.approx(3.0, abs=0.05)


def test_fit_slope_too_few_points():
    fit = fit_slope([(Fraction(1, 8), 1e-3)], floor=0.0)
    assert fit.slope != fit.slope


# --- convergence orders -----------------------------------------------------

PIPELINE = PipelineConfig()


@lru_cache(maxsize=None)
def _reference(kernel, alpha):
    return reference_integral(builtin_phi(kernel), kernel, alpha, PIPELINE.reference_digits).value


@lru_cache(maxsize=None)
def _limit_table(kernel, alpha, p):
    if not kernel.is_on_diag and p == 1:
        return None
    sub = "on_diag" if kernel.is_on_diag else "off_diag"
    path = os.path.join(REFERENCE_TABLES, sub, table_filename(kernel, alpha, p))
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if any(w.get("mantissa_only") for w in raw["weights"]):
        # printed exponent is not trustworthy; regenerate
        return solve_weights(kernel, p, alpha, PipelineConfig(working_digits=30))
    return load_table(path)


def _fitted_order(kernel, alpha, p):
    rows = error_sweep(builtin_phi(kernel), kernel, alpha, _limit_table(kernel, alpha, p),
                       PIPELINE.h_list, _reference(kernel, alpha))
    return fit_slope(rows, PIPELINE.floor_threshold).slope


@pytest.mark.slow
@pytest.mark.parametrize("alpha", ["0.5", "1.5"])
@pytest.mark.parametrize("p", [0, 1, 2])
def test_on_diag_corrected_rule_order(alpha, p):
    assert _fitted_order(ON1, alpha, p) == pytest.approx(2 * p + 4 - float(alpha), abs=0.2)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", ["0.5", "1.5"])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_off_diag_corrected_rule_order(alpha, p):
    # p = 1 is the punctured rule alone
    assert _fitted_order(OFF, alpha, p) == pytest.approx(2 * p + 2 - float(alpha), abs=0.2)
