import numpy as np
import pytest

from ilrkit.errors import (
    ClientError,
    ConfigError,
    DegenerateMaskError,
    GenerationFailedError,
    TooFewCategoriesError,
)
from ilrkit.imaging import decode_rgb, decode_rgba, rgb_to_hue_degrees
from ilrkit.pipeline import (
    DomainSpec,
    GenerationConfig,
    StageClients,
    config_from_dict,
    load_manifest,
    pad_and_resize,
    run_pipeline,
    save_manifest,
)
from ilrkit.pipeline.clients import MockCategoryClient
from ilrkit.pipeline.mockgen import (
    CLEAN_BG,
    mock_categories,
    mock_generate,
    mock_relight,
    mock_remove_bg,
)
from ilrkit.pipeline.orchestrator import alpha_coverage, generate_categories
from ilrkit.pipeline.pngio import encode_png
from ilrkit.pipeline.prompts import (
    EmptyCategoryError,
    category_prompt,
    render_instance_prompt,
)
from ilrkit.pipeline.store import ContentStore, content_hash
from ilrkit.rng import SplitMix64


class TestInstancePrompt:
    def test_plain_category(self):
        assert render_instance_prompt("table") == "a table in a clean background"

    def test_multiword_category(self):
        assert (
            render_instance_prompt("French Empire clock")
            == "a French Empire clock in a clean background"
        )

    def test_whitespace_normalized(self):
        assert render_instance_prompt("  oak   stool ") == "a oak stool in a clean background"

    def test_empty_rejected(self):
        with pytest.raises(EmptyCategoryError):
            render_instance_prompt("   ")


class TestCategoryPrompts:
    def test_designed_known_domain(self):
        prompt = category_prompt("generic", "designed", 50)
        assert "50" in prompt.text
        assert prompt.kind == "designed"

    def test_template_fills_domain(self):
        prompt = category_prompt("pottery", "template", 10)
        assert "pottery" in prompt.text

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            category_prompt("generic", "freestyle", 10)


class TestGenerateCategories:
    def test_mock_deterministic(self):
        client = MockCategoryClient()
        names = generate_categories("generic", "prompt", 5, client)
        assert names == generate_categories("generic", "prompt", 5, MockCategoryClient())
        assert len(names) == 5
        assert len(set(names)) == 5

    def test_duplicates_deduplicated_with_tolerated_shortfall(self):
        class DupClient:
            calls = 0

            def categories(self, domain, prompt, count):
                return ["chair", "chair ", " chair", "table", "", "lamp", "rug", "pot",
                        "jar", "bin", "cup", "fan"]

        names = generate_categories("d", "p", 10, DupClient())
        # nine unique names for ten requested: within the 90% tolerance
        assert names == ["chair", "table", "lamp", "rug", "pot", "jar", "bin", "cup", "fan"]

    def test_too_few_rejected(self):
        class TinyClient:
            def categories(self, domain, prompt, count):
                return ["a", "b", "c"]

        with pytest.raises(TooFewCategoriesError):
            generate_categories("d", "p", 50, TinyClient())

    def test_overdelivery_truncated(self):
        client = MockCategoryClient()
        names = generate_categories("generic", "p", 5, client)
        many = mock_categories("generic", 40)
        assert names == many[:5]


class TestMockGenerate:
    def test_same_request_same_bytes(self):
        a = mock_generate("a chair in a clean background", 7, 1)
        b = mock_generate("a chair in a clean background", 7, 1)
        assert a == b
        assert content_hash(a) == content_hash(b)

    def test_different_seeds_differ(self):
        a = mock_generate("a chair in a clean background", 1, 1)
        b = mock_generate("a chair in a clean background", 2, 1)
        assert a != b

    def test_different_steps_differ(self):
        a = mock_generate("a chair in a clean background", 1, 1)
        b = mock_generate("a chair in a clean background", 1, 5)
        assert a != b

    def test_object_on_reserved_background(self):
        rgb = decode_rgb(mock_generate("a mug in a clean background", 3, 1))
        is_bg = np.all(rgb == np.asarray(CLEAN_BG), axis=2)
        coverage = 1.0 - is_bg.mean()
        assert 0.01 <= coverage <= 0.99


class TestMockRemoveBg:
    def test_alpha_matches_shape_mask(self):
        png = mock_generate("a vase in a clean background", 5, 1)
        rgb = decode_rgb(png)
        rgba = decode_rgba(mock_remove_bg(png))
        is_bg = np.all(rgb == np.asarray(CLEAN_BG), axis=2)
        np.testing.assert_array_equal(rgba[:, :, 3] == 0, is_bg)
        np.testing.assert_array_equal(rgba[:, :, :3], rgb)

    def test_all_background_yields_zero_coverage(self):
        blank = np.full((32, 32, 3), CLEAN_BG, dtype=np.uint8)
        rgba = decode_rgba(mock_remove_bg(encode_png(blank)))
        assert alpha_coverage(rgba) == 0.0

    def test_coverage_bounds_flagging(self):
        solid = np.zeros((16, 16, 3), dtype=np.uint8)
        rgba = decode_rgba(mock_remove_bg(encode_png(solid)))
        assert alpha_coverage(rgba) > 0.99  # would be flagged degenerate


class TestPadAndResize:
    def _foreground(self):
        return decode_rgba(mock_remove_bg(mock_generate("a drum in a clean background", 9, 1)))

    def test_zero_padding_is_identity(self):
        rgba = self._foreground()
        out, pad_px, src_px = pad_and_resize(rgba, SplitMix64(0), max_fraction=0.0)
        np.testing.assert_array_equal(out, rgba)
        assert pad_px == 0
        assert src_px == rgba.shape[0]

    def test_half_padding_shrinks_bounding_box(self):
        # a solid square occupying a known box; after total padding p*S the
        # box should shrink by S / (S + pad)
        size = 128
        rgba = np.zeros((size, size, 4), dtype=np.uint8)
        rgba[32:96, 32:96, :3] = 200
        rgba[32:96, 32:96, 3] = 255

        class FixedRng:
            def uniform(self, lo=0.0, hi=1.0):
                return hi  # force p = max_fraction

            def randbelow(self, n):
                return n // 2

        out, pad_px, src_px = pad_and_resize(rgba, FixedRng(), max_fraction=0.5)
        assert (pad_px, src_px) == (64, 128)
        mask = out[:, :, 3] > 127
        ys, xs = np.nonzero(mask)
        got_w = xs.max() - xs.min() + 1
        expected_w = 64 * size / (size + 64)
        assert abs(got_w - expected_w) <= 2.0

    def test_same_seed_identical(self):
        rgba = self._foreground()
        a, *_ = pad_and_resize(rgba, SplitMix64(77), 0.5)
        b, *_ = pad_and_resize(rgba, SplitMix64(77), 0.5)
        np.testing.assert_array_equal(a, b)


class TestMockRelight:
    def _foreground_png(self):
        return mock_remove_bg(mock_generate("a lantern in a clean background", 2, 1))

    def test_four_seeds_four_backgrounds(self):
        fg = self._foreground_png()
        hashes = {content_hash(mock_relight(fg, "lantern", seed)) for seed in range(4)}
        assert len(hashes) == 4

    def test_foreground_pixels_preserved(self):
        fg_png = self._foreground_png()
        fg = decode_rgba(fg_png)
        out = decode_rgb(mock_relight(fg_png, "lantern", 3))
        mask = fg[:, :, 3] > 127
        np.testing.assert_array_equal(out[mask], fg[:, :, :3][mask])

    def test_foreground_hue_within_tolerance(self):
        fg_png = self._foreground_png()
        fg = decode_rgba(fg_png)
        out = decode_rgb(mock_relight(fg_png, "lantern", 1))
        mask = fg[:, :, 3] > 127
        hue_in = rgb_to_hue_degrees(fg[:, :, :3][mask])
        hue_out = rgb_to_hue_degrees(out[mask])
        diff = np.abs(hue_in - hue_out)
        diff = np.minimum(diff, 360.0 - diff)
        assert diff.max() <= 10.0

    def test_deterministic(self):
        fg = self._foreground_png()
        assert mock_relight(fg, "lantern", 5) == mock_relight(fg, "lantern", 5)


class TestRunPipeline:
    def test_counts_and_structure(self, small_dataset):
        manifest = small_dataset.manifest
        assert len(manifest.classes) == 8
        assert manifest.image_count() == 32
        for cls in manifest.classes:
            assert len(cls.images) == 4

    def test_deterministic_fingerprints(self, tmp_path):
        config = GenerationConfig(
            domains=(DomainSpec(name="generic", categories=2, instances_per_category=2),),
            master_seed=5,
        )
        r1 = run_pipeline(config, StageClients.mock(), tmp_path / "a", threads=1)
        r2 = run_pipeline(config, StageClients.mock(), tmp_path / "b", threads=3)
        assert r1.manifest.fingerprint() == r2.manifest.fingerprint()

    def test_warm_rerun_calls_no_clients(self, tmp_path):
        config = GenerationConfig(
            domains=(DomainSpec(name="generic", categories=2, instances_per_category=1),),
            master_seed=9,
        )
        first = StageClients.mock()
        r1 = run_pipeline(config, first, tmp_path / "w", threads=1)
        assert first.total_calls() > 0
        second = StageClients.mock()
        r2 = run_pipeline(config, second, tmp_path / "w", threads=1)
        assert second.total_calls() == 0
        assert r2.manifest.fingerprint() == r1.manifest.fingerprint()

    def test_seed_changes_content(self, tmp_path):
        base = dict(domains=(DomainSpec(name="generic", categories=2, instances_per_category=1),))
        r1 = run_pipeline(
            GenerationConfig(master_seed=1, **base), StageClients.mock(), tmp_path / "s1", threads=1
        )
        r2 = run_pipeline(
            GenerationConfig(master_seed=2, **base), StageClients.mock(), tmp_path / "s2", threads=1
        )
        assert r1.manifest.fingerprint() != r2.manifest.fingerprint()

    def test_failed_classes_recorded_and_dropped(self, tmp_path):
        class FlakyRelight:
            client_id = "flaky"

            def __init__(self):
                self.calls = 0

            def relight(self, png, prompt, seed):
                self.calls += 1
                if prompt.startswith("s"):
                    raise ClientError("relight", "boom")
                from ilrkit.pipeline.mockgen import mock_relight

                return mock_relight(png, prompt, seed)

        clients = StageClients.mock()
        clients.relighter = FlakyRelight()
        config = GenerationConfig(
            domains=(DomainSpec(name="generic", categories=12, instances_per_category=1),),
            master_seed=3,
        )
        names = mock_categories("generic", 12)
        expected_failures = {f"generic/{n}#0" for n in names if n.startswith("s")}
        assert 0 < len(expected_failures) <= 0.2 * 12
        result = run_pipeline(config, clients, tmp_path / "flaky", threads=1)
        assert {f.class_id for f in result.manifest.failures} == expected_failures
        assert len(result.manifest.classes) == 12 - len(expected_failures)

    def test_abort_when_too_many_failures(self, tmp_path):
        class BrokenRemover:
            client_id = "broken"
            calls = 0

            def remove_bg(self, png):
                raise ClientError("remove_bg", "always down")

        clients = StageClients.mock()
        clients.background_remover = BrokenRemover()
        config = GenerationConfig(
            domains=(DomainSpec(name="generic", categories=3, instances_per_category=1),),
            master_seed=3,
        )
        with pytest.raises(GenerationFailedError):
            run_pipeline(config, clients, tmp_path / "broken", threads=1)

    def test_degenerate_mask_drops_class(self, tmp_path):
        class BlankGenerator:
            client_id = "blank"
            calls = 0

            def generate(self, prompt, seed, steps):
                blank = np.full((32, 32, 3), CLEAN_BG, dtype=np.uint8)
                return encode_png(blank)

        clients = StageClients.mock()
        clients.instance_source = BlankGenerator()
        config = GenerationConfig(
            domains=(DomainSpec(name="generic", categories=2, instances_per_category=1),),
            master_seed=3,
        )
        with pytest.raises(GenerationFailedError):
            # every class degenerates -> abort threshold crossed
            run_pipeline(config, clients, tmp_path / "degen", threads=1)

    def test_provenance_replays_bitwise(self, small_dataset):
        # replaying any image's recorded stage chain through the mocks
        # reproduces its stored content hash
        manifest = small_dataset.manifest
        store = small_dataset.store
        cls = manifest.classes[3]
        prov = cls.images[2]
        prompt = render_instance_prompt(cls.category)
        instance = mock_generate(prompt, prov.instance_seed, prov.steps)
        assert content_hash(instance) == prov.instance_hash
        fg = mock_remove_bg(instance)
        assert content_hash(fg) == prov.foreground_hash
        padded, pad_px, _ = pad_and_resize(
            decode_rgba(fg), SplitMix64(prov.pad_seed),
            manifest.config["max_padding_fraction"],
        )
        assert pad_px == prov.pad_px
        assert content_hash(encode_png(padded)) == prov.padded_hash
        relit = mock_relight(store.load(prov.padded_hash), cls.category, prov.bg_seed)
        assert content_hash(relit) == prov.image_hash


class TestManifestFormat:
    def test_roundtrip_bit_exact(self, small_dataset, tmp_path):
        manifest = small_dataset.manifest
        path = tmp_path / "m.jsonl"
        save_manifest(path, manifest)
        loaded = load_manifest(path)
        assert loaded.fingerprint() == manifest.fingerprint()
        again = tmp_path / "m2.jsonl"
        save_manifest(again, loaded)
        assert again.read_bytes() == path.read_bytes()

    def test_instance_classes_view(self, small_dataset):
        classes = small_dataset.manifest.instance_classes()
        assert len(classes) == 8
        for cls in classes:
            assert len(cls.image_ids) == 4


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"domains": [{"name": "g"}], "tpyo": 1})

    def test_unknown_domain_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"domains": [{"name": "g", "oops": 2}]})

    def test_padding_bounds(self):
        with pytest.raises(ConfigError):
            GenerationConfig(
                domains=(DomainSpec(name="g"),), max_padding_fraction=0.95
            )

    def test_table_scale_arithmetic(self):
        # full-scale config: 2000x10 generic + three specific domains
        config = config_from_dict(
            {
                "domains": [
                    {"name": "generic", "categories": 2000, "instances_per_category": 10},
                    {"name": "art", "categories": 200, "instances_per_category": 15},
                    {"name": "landmark", "categories": 50, "instances_per_category": 80},
                    {"name": "product", "categories": 200, "instances_per_category": 15},
                ],
                "master_seed": 0,
            }
        )
        assert config.total_instances == 30000
        half_generic = config_from_dict(
            {
                "domains": [
                    {"name": "generic", "categories": 1000, "instances_per_category": 10},
                    {"name": "art", "categories": 200, "instances_per_category": 15},
                    {"name": "landmark", "categories": 50, "instances_per_category": 80},
                    {"name": "product", "categories": 200, "instances_per_category": 15},
                ],
                "master_seed": 0,
            }
        )
        assert half_generic.total_instances == 20000
        assert half_generic.total_instances * 4 == 80000  # images at N=4


class TestContentStore:
    def test_put_load_roundtrip(self, tmp_path):
        store = ContentStore(tmp_path / "s")
        digest = store.put(b"png-bytes")
        assert store.has(digest)
        assert store.load(digest) == b"png-bytes"

    def test_idempotent_put(self, tmp_path):
        store = ContentStore(tmp_path / "s")
        assert store.put(b"x") == store.put(b"x")

    def test_hash_is_lowercase_hex(self, tmp_path):
        store = ContentStore(tmp_path / "s")
        digest = store.put(b"abc")
        assert digest == digest.lower()
        assert len(digest) == 64
        assert store.path(digest).name == f"{digest}.png"
