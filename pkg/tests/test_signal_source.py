import itertools

import numpy as np
import pytest

from lmarray.signal_source import (
    Constellation,
    Gaussian,
    chunk_bounds,
    constellation_targets,
    draw_gaussian_currents,
    map_chunks,
    qam_alphabet,
    substream,
)


def test_unit_element_power():
    x = draw_gaussian_currents(Gaussian(1, 1.0), seed=1, count=10**6)
    # estimator sd of E|i|^2 for CN(0,1) is 1/sqrt(N) = 1e-3; 0.005 is 5 sigma
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, abs=0.005)


def test_circular_symmetry():
    x = draw_gaussian_currents(Gaussian(1, 2.0), seed=3, count=10**6)[:, 0]
    assert np.mean(x.real**2) == pytest.approx(1.0, abs=0.01)
    assert np.mean(x.imag**2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(x.real * x.imag)) < 0.01
    assert abs(np.mean(x**2)) < 0.01


def test_sum_power_moments_n100():
    x = draw_gaussian_currents(Gaussian(100, 1.0), seed=2, count=200_000)
    p = np.sum(np.abs(x) ** 2, axis=1)
    assert p.mean() == pytest.approx(1.0, abs=0.005)
    # chi2_{2n}/(2n) has variance 1/n
    assert p.var() == pytest.approx(1 / 100, rel=0.10)


def test_same_seed_identical():
    a = draw_gaussian_currents(Gaussian(5), seed=9, count=1000)
    b = draw_gaussian_currents(Gaussian(5), seed=9, count=1000)
    assert a.tobytes() == b.tobytes()
    c = draw_gaussian_currents(Gaussian(5), seed=10, count=1000)
    assert not np.array_equal(a, c)


def test_prefix_stable_across_counts():
    a = draw_gaussian_currents(Gaussian(3), seed=4, count=500)
    b = draw_gaussian_currents(Gaussian(3), seed=4, count=800)
    np.testing.assert_array_equal(a, b[:500])


def test_map_chunks_order_independent_of_workers():
    chunks = chunk_bounds(10_000, 777)

    def work(k, b):
        return substream(5, 0, k).normal(size=b[1] - b[0])

    one = np.concatenate(map_chunks(work, chunks, workers=1))
    many = np.concatenate(map_chunks(work, chunks, workers=4))
    assert one.tobytes() == many.tobytes()


def test_bpsk_single_element():
    s = constellation_targets(Constellation("psk", 2, n=1, length=1000, total_avg_power=2.0), seed=0)
    a = np.sqrt(2.0)
    assert set(np.round(s.ravel().real, 12)) == {a.round(12), (-a).round(12)}
    np.testing.assert_allclose(s.imag, 0, atol=1e-12)


def test_qpsk_constant_modulus():
    s = constellation_targets(Constellation("psk", 4, n=8, length=500), seed=1)
    mod = np.abs(s)
    assert mod.max() - mod.min() <= 1e-12


def test_16qam_normalization_exhaustive():
    # unit-spacing grid {-3,-1,1,3}^2 has mean power 10
    grid = [complex(a, b) for a, b in itertools.product((-3, -1, 1, 3), repeat=2)]
    assert sum(z.real**2 + z.imag**2 for z in grid) / 16 == 10
    scaled = {complex(round(z.real, 9), round(z.imag, 9)) for z in qam_alphabet(16) * np.sqrt(10)}
    assert scaled == set(grid)


def test_16qam_average_power():
    s = constellation_targets(Constellation("qam", 16, n=1, length=10**6, total_avg_power=1.0), seed=2)
    assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, rel=0.005)


@pytest.mark.parametrize("scheme,order", [("psk", 3), ("psk", 1), ("qam", 8), ("qam", 2), ("ask", 4)])
def test_unsupported_orders(scheme, order):
    with pytest.raises(ValueError):
        Constellation(scheme, order, n=1, length=1)


def test_seed_range():
    with pytest.raises(ValueError):
        substream(-1)
    substream(2**64 - 1)
