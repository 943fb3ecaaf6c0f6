import numpy as np
import pytest

from ilrkit.descriptors import DescriptorSet, normalize
from ilrkit.errors import DimensionMismatchError, EmptyInputError
from ilrkit.overlap import mine_overlap, save_contact_sheet, save_overlap_csv


def dset(prefix, vectors):
    return DescriptorSet.from_rows(
        [(f"{prefix}{i}", v) for i, v in enumerate(vectors)]
    )


def bruteforce_pairs(queries, train, per_query):
    """Independent double-loop miner."""
    out = []
    for qi, qid in enumerate(queries.ids):
        sims = []
        for ti, tid in enumerate(train.ids):
            s = float(
                np.dot(
                    queries.vectors[qi].astype(np.float64),
                    train.vectors[ti].astype(np.float64),
                )
            )
            sims.append((tid, s))
        sims.sort(key=lambda kv: (-kv[1], kv[0]))
        for rank, (tid, s) in enumerate(sims[:per_query], start=1):
            out.append((qid, tid, s, rank))
    out.sort(key=lambda row: (-row[2], row[0], row[1]))
    return out


class TestMineOverlap:
    def test_planted_duplicate_surfaces_first(self, rng):
        shared = normalize(rng.normal(size=8))
        queries = dset("q", [shared] + [normalize(rng.normal(size=8)) for _ in range(4)])
        train = dset("t", [normalize(rng.normal(size=8)) for _ in range(9)] + [shared])
        pairs = mine_overlap(queries, train, top_m=3)
        top = pairs[0]
        assert (top.query_id, top.train_image_id) == ("q0", "t9")
        assert abs(top.similarity - 1.0) <= 1e-6
        assert top.rank == 1

    def test_orthogonal_sets(self):
        queries = dset("q", [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
        train = dset("t", [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        pairs = mine_overlap(queries, train, top_m=2)
        assert all(abs(p.similarity) <= 1e-9 for p in pairs)

    def test_matches_double_loop_oracle(self, rng):
        for _ in range(25):
            nq = int(rng.integers(1, 7))
            nt = int(rng.integers(1, 21))
            per_query = int(rng.integers(1, 3))
            queries = dset("q", [normalize(rng.normal(size=5)) for _ in range(nq)])
            train = dset("t", [normalize(rng.normal(size=5)) for _ in range(nt)])
            top_m = int(rng.integers(1, nq * per_query + 1))
            got = mine_overlap(queries, train, top_m=top_m, per_query=per_query)
            want = bruteforce_pairs(queries, train, per_query)[:top_m]
            assert [(p.query_id, p.train_image_id, p.rank) for p in got] == [
                (q, t, r) for q, t, _, r in want
            ]
            np.testing.assert_allclose(
                [p.similarity for p in got], [s for _, _, s, _ in want], atol=0
            )

    def test_adding_rows_never_lowers_best(self, rng):
        queries = dset("q", [normalize(rng.normal(size=6)) for _ in range(3)])
        base_vecs = [normalize(rng.normal(size=6)) for _ in range(5)]
        more_vecs = base_vecs + [normalize(rng.normal(size=6)) for _ in range(5)]
        small = mine_overlap(queries, dset("t", base_vecs), top_m=100, per_query=1)
        big = mine_overlap(queries, dset("t", more_vecs), top_m=100, per_query=1)
        best_small = {p.query_id: p.similarity for p in small}
        best_big = {p.query_id: p.similarity for p in big}
        for qid in best_small:
            assert best_big[qid] >= best_small[qid] - 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            mine_overlap(
                dset("q", [[1.0, 0.0]]), dset("t", [[1.0, 0.0, 0.0]]), top_m=1
            )

    def test_empty_rejected(self, rng):
        with pytest.raises(EmptyInputError):
            mine_overlap(
                DescriptorSet((), np.zeros((0, 3), dtype=np.float32)),
                dset("t", [[1.0, 0.0, 0.0]]),
                top_m=1,
            )


class TestReports:
    def test_csv_and_contact_sheet(self, tmp_path, rng):
        queries = dset("q", [normalize(rng.normal(size=4)) for _ in range(3)])
        train = dset("t", [normalize(rng.normal(size=4)) for _ in range(6)])
        pairs = mine_overlap(queries, train, top_m=3)
        csv_path = tmp_path / "overlap.csv"
        save_overlap_csv(csv_path, pairs)
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "query_id,train_image_id,similarity,rank"
        assert len(lines) == 4
        sheet = tmp_path / "sheet.txt"
        save_contact_sheet(sheet, pairs, resolve=lambda t: f"/store/{t}.png")
        sheet_lines = sheet.read_text(encoding="utf-8").splitlines()
        assert sheet_lines[0].endswith(".png")
        assert sheet_lines[0].split("\t")[0] == pairs[0].query_id
