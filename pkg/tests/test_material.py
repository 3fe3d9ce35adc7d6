import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perovres.errors import DomainError, PoleError
from perovres.material import Material, WavePair, background_wavenumber, contrast, lossless_pole, permittivity

pos = st.floats(0.01, 10.0)


def test_static_limit():
    mat = Material(2.0, 1.5, 3.0, 4.0, 0.5, 0.7)
    assert permittivity(mat, 0.0, 0.0) == pytest.approx(2.0 + 3.0 / 4.0)
    assert contrast(mat, 0.0, 0.0) == pytest.approx(1.5 * 3.0 / 4.0)


def test_rational_oracle():
    # 1 + 2/(3 - i) = 1 + 2(3 + i)/10
    mat = Material(1.0, 1.0, 2.0, 4.0, 1.0, 1e-300)
    assert permittivity(mat, 1.0, 0.0) == pytest.approx(1.6 + 0.2j, abs=1e-15)
    mat2 = Material(1.0, 2.0, 2.0, 4.0, 1.0, 1e-300)
    assert contrast(mat2, 1.0, 0.0) == pytest.approx(1.2 + 0.4j, abs=1e-15)


def test_lossless_pole_raises():
    mat = Material(1.0, 1.0, 1.0, 1.0, 1e-20, 0.1)
    with pytest.raises(PoleError):
        permittivity(mat, lossless_pole(mat, 1.0), 1.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_invalid_parameters(bad):
    with pytest.raises(DomainError):
        Material(1.0, 1.0, bad, 1.0, 1.0, 1.0)


def test_wavepair_rejects_complex_k():
    with pytest.raises(DomainError):
        WavePair(1.0, 1j)


def test_background_wavenumber_conventions():
    mat = Material(3.0, 0.5, 1.0, 1.0, 1.0, 1.0)
    assert background_wavenumber(mat, 0.0) == 0
    assert background_wavenumber(mat, 2.0) == pytest.approx(3.0)
    assert background_wavenumber(mat, 2.0, "sqrt") == pytest.approx(2.0 * math.sqrt(1.5))
    unit = Material(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    assert background_wavenumber(unit, 1.0) == background_wavenumber(unit, 1.0, "sqrt") == 1.0
    with pytest.raises(DomainError):
        background_wavenumber(mat, 1.0, "other")


@given(pos, pos, pos, pos, pos, pos, st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3))
def test_reflection_symmetry(e0, m0, a, b, g, h, wr, wi, k):
    mat = Material(e0, m0, a, b, g, h)
    w = complex(wr, wi)
    try:
        lhs = permittivity(mat, -w.conjugate(), k)
    except PoleError:
        return
    assert lhs == pytest.approx(permittivity(mat, w, k).conjugate(), rel=1e-12, abs=1e-12)


@given(pos, pos, pos, pos, pos, pos, st.floats(1e-3, 50), st.floats(-3, 3))
def test_lossy_positive_imaginary_part(e0, m0, a, b, g, h, w, k):
    mat = Material(e0, m0, a, b, g, h)
    assert permittivity(mat, w, k).imag > 0


@given(pos, pos, pos, pos, pos, pos, st.floats(-3, 3))
def test_contrast_definition_and_decay(e0, m0, a, b, g, h, k):
    mat = Material(e0, m0, a, b, g, h)
    w = 0.7 * lossless_pole(mat, k)
    assert contrast(mat, w, k) == pytest.approx(m0 * (permittivity(mat, w, k) - e0), rel=1e-9)
    ref = lossless_pole(mat, k)
    assert abs(contrast(mat, 1e6 * ref, k)) < abs(contrast(mat, ref, k))


def test_material_serialisation():
    mat = Material(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
    assert Material(**mat.to_dict()) == mat


def test_pole_denominator_vectorises():
    mat = Material(1.0, 1.0, 1.0, 2.0, 0.5, 0.1)
    w = np.array([0.5, 1.0 - 0.1j])
    assert np.allclose(mat.pole_denominator(w, 1.0), 2.0 - w**2 + 0.1 - 0.5j * w)
