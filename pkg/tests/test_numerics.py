"""DFT, symplectic transforms, vec ordering and the Dirichlet kernel."""

import numpy as np
import pytest

from otfs_rc.numerics import (
    dft_matrix,
    dirichlet,
    isfft,
    sfft,
    vec,
    vec_inv,
)


class TestDftMatrix:
    def test_entries_match_definition(self):
        m = 5
        f = dft_matrix(m)
        for r in range(m):
            for c in range(m):
                want = np.exp(-2j * np.pi * r * c / m) / np.sqrt(m)
                assert abs(f[r, c] - want) < 1e-12

    def test_unitary(self):
        for m in (1, 2, 3, 8, 16, 64):
            f = dft_matrix(m)
            np.testing.assert_allclose(f @ f.conj().T, np.eye(m), atol=1e-12)

    def test_matches_fft(self):
        rng = np.random.default_rng(3)
        for m in (2, 7, 16):
            x = rng.normal(size=m) + 1j * rng.normal(size=m)
            np.testing.assert_allclose(
                dft_matrix(m) @ x, np.fft.fft(x) / np.sqrt(m), atol=1e-12
            )

    def test_rejects_nonpositive_size(self):
        with pytest.raises(ValueError):
            dft_matrix(0)


class TestSymplecticTransforms:
    def test_isfft_matches_double_sum(self):
        # independent elementwise evaluation on a small grid
        rng = np.random.default_rng(11)
        m, n = 3, 2
        x = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        got = isfft(x)
        for a in range(m):
            for b in range(n):
                acc = 0.0
                for l in range(m):
                    for k in range(n):
                        acc += x[l, k] * np.exp(
                            -2j * np.pi * a * l / m
                        ) * np.exp(2j * np.pi * b * k / n)
                acc /= np.sqrt(m * n)
                assert abs(got[a, b] - acc) < 1e-12

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = int(rng.integers(2, 17))
            n = int(rng.integers(2, 17))
            x = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
            np.testing.assert_allclose(sfft(isfft(x)), x, atol=1e-12)
            np.testing.assert_allclose(isfft(sfft(x)), x, atol=1e-12)

    def test_energy_preserved(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(8, 4)) + 1j * rng.normal(size=(8, 4))
        assert abs(np.linalg.norm(isfft(x)) - np.linalg.norm(x)) < 1e-12


class TestVec:
    def test_column_major_order(self):
        x = np.array([[1, 2, 3], [4, 5, 6]])
        np.testing.assert_array_equal(vec(x), [1, 4, 2, 5, 3, 6])

    def test_index_identity(self):
        # vec(X)[n*M + m] == X[m, n]
        rng = np.random.default_rng(7)
        m, n = 5, 3
        x = rng.normal(size=(m, n))
        v = vec(x)
        for mm in range(m):
            for nn in range(n):
                assert v[nn * m + mm] == x[mm, nn]

    def test_round_trip(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            m = int(rng.integers(1, 9))
            n = int(rng.integers(1, 9))
            x = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
            np.testing.assert_array_equal(vec_inv(vec(x), m, n), x)

    def test_vec_rejects_non_matrix(self):
        with pytest.raises(ValueError):
            vec(np.arange(4))

    def test_vec_inv_rejects_size_mismatch(self):
        with pytest.raises(ValueError):
            vec_inv(np.arange(5), 2, 3)


class TestDirichlet:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(9)
        for m in (2, 5, 8, 16):
            x = rng.uniform(-2 * m, 2 * m, size=50)
            want = np.zeros_like(x, dtype=complex)
            for k in range(m):
                want += np.exp(2j * np.pi * k * x / m)
            want /= m
            np.testing.assert_allclose(dirichlet(m, x), want, atol=1e-12)

    def test_near_integer_arguments(self):
        # closed form is singular at multiples of m; the fallback must agree
        # with the direct sum right up against those points
        m = 8
        for base in (0.0, 8.0, -8.0, 16.0):
            for eps in (0.0, 1e-12, -1e-12, 1e-7):
                x = base + eps
                want = sum(np.exp(2j * np.pi * k * x / m) for k in range(m)) / m
                assert abs(dirichlet(m, x) - want) < 1e-9

    def test_integer_lags(self):
        # unity at multiples of m, zero at the other integers
        m = 6
        assert abs(dirichlet(m, 0.0) - 1.0) < 1e-12
        assert abs(dirichlet(m, float(m)) - 1.0) < 1e-12
        for j in range(1, m):
            assert abs(dirichlet(m, float(j))) < 1e-12

    def test_periodic_in_m(self):
        rng = np.random.default_rng(10)
        m = 7
        x = rng.uniform(-3, 3, size=20)
        np.testing.assert_allclose(dirichlet(m, x + m), dirichlet(m, x), atol=1e-12)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(12)
        m = 9
        x = rng.uniform(-4, 4, size=20)
        np.testing.assert_allclose(
            dirichlet(m, -x), np.conj(dirichlet(m, x)), atol=1e-12
        )

    def test_scalar_and_array_agree(self):
        m = 5
        xs = np.array([0.3, 1.7, -2.2])
        arr = dirichlet(m, xs)
        for i, x in enumerate(xs):
            assert abs(arr[i] - dirichlet(m, float(x))) < 1e-14

    def test_rejects_nonpositive_m(self):
        with pytest.raises(ValueError):
            dirichlet(0, 0.5)
