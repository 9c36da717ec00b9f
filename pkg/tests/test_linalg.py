import numpy as np
import pytest

from core.exceptions import DimensionError
from core.linalg import (
    TruncationPolicy,
    as_tensor,
    contract,
    is_unitary,
    qr_positive,
    svd_truncate,
    tensor_from_entries,
    tensor_to_entries,
    truncation_cutoff,
)


def _complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestContract:
    def test_identity_on_vector(self):
        out = contract(np.eye(2, dtype=complex), np.array([1.0, 0.0], dtype=complex), [(1, 0)])
        assert np.allclose(out, [1.0, 0.0])

    def test_matches_matrix_product(self, rng):
        a, b = _complex(rng, 3, 3), _complex(rng, 3, 3)
        expected = np.zeros((3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    expected[i, j] += a[i, k] * b[k, j]
        assert np.allclose(contract(a, b, [(1, 0)]), expected, atol=1e-12)

    def test_full_contraction_with_conjugate_is_squared_norm(self, rng):
        t = _complex(rng, 2, 3, 4)
        value = contract(t.conj(), t, [(0, 0), (1, 1), (2, 2)])
        assert abs(value.imag) < 1e-12
        assert value.real == pytest.approx(np.linalg.norm(t) ** 2)

    def test_output_axes_order(self, rng):
        a, b = _complex(rng, 2, 3, 5), _complex(rng, 3, 7)
        assert contract(a, b, [(1, 0)]).shape == (2, 5, 7)

    def test_bilinear(self, rng):
        a, b = _complex(rng, 4, 3), _complex(rng, 3, 2)
        alpha = 0.3 - 1.7j
        assert np.allclose(contract(alpha * a, b, [(1, 0)]), alpha * contract(a, b, [(1, 0)]), atol=1e-12)

    def test_pair_order_does_not_matter(self, rng):
        a, b = _complex(rng, 2, 3, 4), _complex(rng, 4, 3, 5)
        one = contract(a, b, [(1, 1), (2, 0)])
        two = contract(a, b, [(2, 0), (1, 1)])
        assert np.allclose(one, two, atol=1e-12)

    def test_extent_mismatch(self, rng):
        with pytest.raises(DimensionError):
            contract(_complex(rng, 2, 3), _complex(rng, 4, 2), [(1, 0)])


class TestTruncationPolicy:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            TruncationPolicy(chi_max=0)
        with pytest.raises(ValueError):
            TruncationPolicy(svd_min=-1.0)

    def test_dict_round_trip(self):
        policy = TruncationPolicy(7, 1e-8, 1e-10)
        assert TruncationPolicy.from_dict(policy.to_dict()) == policy

    def test_cutoff_reports_binding_constraint(self):
        s = np.array([1.0, 0.5, 0.1, 1e-3])
        assert truncation_cutoff(s, TruncationPolicy(2, 0.0, 0.0))[2] == 'chi_max'
        assert truncation_cutoff(s, TruncationPolicy(10, 0.05, 0.0))[0:1] == (3,)
        keep, discarded, binding = truncation_cutoff(s, TruncationPolicy(10, 0.0, 1e-5))
        assert keep == 3 and binding == 'trunc_cut'
        assert discarded == pytest.approx(1e-6)


class TestSvdTruncate:
    def test_identity(self):
        res = svd_truncate(np.eye(4, dtype=complex), TruncationPolicy(4, 0.0, 0.0))
        assert np.allclose(res.s, 1.0)
        assert res.discarded_weight == 0.0

    def test_rank_one(self, rng):
        u, v = _complex(rng, 5), _complex(rng, 3)
        res = svd_truncate(np.outer(u, v), TruncationPolicy(1, 0.0, 0.0))
        assert res.s.size == 1
        assert res.s[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
        assert res.discarded_weight < 1e-20

    def test_reconstruction_error_equals_discarded_weight(self, rng):
        m = _complex(rng, 8, 8)
        res = svd_truncate(m, TruncationPolicy(3, 0.0, 0.0))
        full = np.linalg.svd(m, compute_uv=False)
        assert res.discarded_weight == pytest.approx(np.sum(full[3:] ** 2), rel=1e-10)
        err = np.linalg.norm(m - (res.u * res.s) @ res.vh) ** 2
        assert err == pytest.approx(res.discarded_weight, rel=1e-10)

    def test_orthonormal_factors(self, rng):
        res = svd_truncate(_complex(rng, 6, 4), TruncationPolicy(3, 0.0, 0.0))
        assert np.allclose(res.u.conj().T @ res.u, np.eye(3), atol=1e-12)
        assert np.allclose(res.vh @ res.vh.conj().T, np.eye(3), atol=1e-12)
        assert np.all(np.diff(res.s) <= 0)

    def test_split_of_higher_rank_tensor(self, rng):
        t = _complex(rng, 2, 2, 2, 2)
        res = svd_truncate(t, TruncationPolicy(16, 0.0, 0.0), split=2)
        assert res.u.shape[0] == 4 and res.vh.shape[1] == 4
        with pytest.raises(DimensionError):
            svd_truncate(t, TruncationPolicy())


class TestHelpers:
    def test_entries_round_trip(self, rng):
        t = _complex(rng, 2, 2, 3)
        assert np.array_equal(tensor_from_entries(t.shape, tensor_to_entries(t)), t)

    def test_as_tensor_checks_size(self):
        with pytest.raises(DimensionError):
            as_tensor([1, 2, 3], (2, 2))

    def test_qr_positive_diagonal(self, rng):
        q, r = qr_positive(_complex(rng, 6, 3))
        assert np.all(np.diagonal(r).real >= 0)
        assert np.allclose(np.diagonal(r).imag, 0.0, atol=1e-12)
        assert np.allclose(q.conj().T @ q, np.eye(3), atol=1e-12)

    def test_is_unitary(self):
        assert is_unitary(np.eye(4))
        assert not is_unitary(2 * np.eye(4))
        assert not is_unitary(np.ones((2, 3)))
