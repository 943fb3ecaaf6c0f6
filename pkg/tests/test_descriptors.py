import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilrkit.descriptors import (
    DescriptorSet,
    cosine_scores,
    load_descriptors,
    normalize,
    rank_descending,
    save_descriptors,
)
from ilrkit.errors import (
    DimensionMismatchError,
    FormatError,
    LengthMismatchError,
    NonFiniteError,
    ZeroVectorError,
)
from oracles import sort_oracle


class TestNormalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-12)

    def test_already_unit(self):
        np.testing.assert_array_equal(normalize([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            normalize([0.0, 0.0])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteError):
            normalize([1.0, float("nan")])

    def test_inf_rejected(self):
        with pytest.raises(NonFiniteError):
            normalize([float("inf"), 1.0])

    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=1,
            max_size=16,
        ).filter(lambda v: sum(x * x for x in v) > 1e-12)
    )
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, values):
        once = normalize(values)
        twice = normalize(once)
        assert np.abs(twice - once).max() <= 1e-12

    def test_unit_norm_within_tolerance(self, rng):
        for _ in range(50):
            v = rng.normal(size=rng.integers(1, 32)) * 10.0
            if np.linalg.norm(v) < 1e-6:
                continue
            assert abs(np.linalg.norm(normalize(v)) - 1.0) <= 1e-6


class TestCosineScores:
    def _set(self, rows):
        return DescriptorSet.from_rows(
            [(f"img{i}", np.asarray(r)) for i, r in enumerate(rows)]
        )

    def test_identical(self):
        scores = cosine_scores(np.array([1.0, 0.0]), self._set([[1.0, 0.0]]))
        np.testing.assert_allclose(scores, [1.0])

    def test_orthogonal(self):
        scores = cosine_scores(np.array([1.0, 0.0]), self._set([[0.0, 1.0]]))
        np.testing.assert_allclose(scores, [0.0])

    def test_hand_dot_products(self):
        db = self._set([[0.8, 0.6], [-0.6, -0.8]])
        scores = cosine_scores(np.array([0.6, 0.8]), db)
        np.testing.assert_allclose(scores, [0.96, -1.0], atol=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine_scores(np.array([1.0, 0.0, 0.0]), self._set([[1.0, 0.0]]))

    def test_invariant_under_input_rescaling(self, rng):
        raw = rng.normal(size=(4, 8))
        q_raw = rng.normal(size=8)
        base = self._set([normalize(r) for r in raw])
        scaled = self._set([normalize(r * 37.5) for r in raw])
        s1 = cosine_scores(normalize(q_raw), base)
        s2 = cosine_scores(normalize(q_raw * 0.004), scaled)
        np.testing.assert_allclose(s1, s2, atol=1e-6)

    def test_self_query_ranks_first(self, rng):
        rows = [normalize(rng.normal(size=6)) for _ in range(8)]
        dset = self._set(rows)
        for i in range(8):
            scores = cosine_scores(rows[i].astype(np.float32).astype(np.float64), dset)
            ranked = rank_descending(scores, dset.ids)
            assert ranked[0] == f"img{i}"


class TestRankDescending:
    def test_basic_order(self):
        assert rank_descending([0.2, 0.9, 0.5], ["a", "b", "c"]) == ["b", "c", "a"]

    def test_tie_broken_by_id(self):
        assert rank_descending([0.5, 0.5], ["z", "a"]) == ["a", "z"]

    def test_matches_sort_oracle(self, rng):
        for _ in range(25):
            n = int(rng.integers(1, 10))
            scores = rng.choice([0.1, 0.2, 0.3, 0.5], size=n)
            ids = [f"id{int(k)}" for k in rng.permutation(n)]
            assert rank_descending(scores, ids) == sort_oracle(scores, ids)

    def test_permutation_and_non_increasing(self, rng):
        scores = rng.normal(size=12)
        ids = [f"im{i}" for i in range(12)]
        ranked = rank_descending(scores, ids)
        assert sorted(ranked) == sorted(ids)
        by_id = dict(zip(ids, scores))
        values = [by_id[i] for i in ranked]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            rank_descending([0.1], ["a", "b"])


class TestDescriptorSet:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            DescriptorSet(("a", "a"), np.eye(2, dtype=np.float32))

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError):
            DescriptorSet.from_rows([("a", np.array([1.0])), ("b", np.array([1.0, 0.0]))])

    def test_newline_in_id_rejected(self):
        with pytest.raises(ValueError):
            DescriptorSet(("a\nb",), np.ones((1, 2), dtype=np.float32))

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteError):
            DescriptorSet(("a",), np.array([[np.inf, 0.0]], dtype=np.float32))


class TestDescriptorFile:
    def _roundtrip(self, tmp_path, dset):
        path = tmp_path / "d.ilds"
        save_descriptors(path, dset)
        return path, load_descriptors(path)

    def test_bit_exact_roundtrip(self, tmp_path, rng):
        rows = [(f"image-{i}", normalize(rng.normal(size=5))) for i in range(7)]
        dset = DescriptorSet.from_rows(rows)
        path, loaded = self._roundtrip(tmp_path, dset)
        assert loaded.ids == dset.ids
        assert loaded.vectors.tobytes() == dset.vectors.tobytes()
        again = tmp_path / "again.ilds"
        save_descriptors(again, loaded)
        assert again.read_bytes() == path.read_bytes()

    def test_unicode_ids(self, tmp_path):
        dset = DescriptorSet(("héllo", "ワールド"), np.eye(2, dtype=np.float32))
        _, loaded = self._roundtrip(tmp_path, dset)
        assert loaded.ids == ("héllo", "ワールド")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ilds"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError):
            load_descriptors(path)

    def test_truncated(self, tmp_path, rng):
        dset = DescriptorSet.from_rows([("a", normalize(rng.normal(size=4)))])
        path = tmp_path / "t.ilds"
        save_descriptors(path, dset)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError):
            load_descriptors(path)
