from collections import Counter

import numpy as np
import pytest

from conftest import page_html, write_pages
from pagesort.corpus import (
    MODEL_HEADER,
    extract_pages,
    labeled_samples,
    load_manifest,
    load_model,
    load_prototypes,
    read_features,
    save_model,
    split,
    write_features,
    write_manifest,
)
from pagesort.errors import EmptyDatasetError, FeaturesFileError, ManifestError, ModelFormatError
from pagesort.mlp import PARAM_NAMES, PARAM_SHAPES, Network
from pagesort.models import ClassLabel, FeatureRow, FeatureVector, SplitSpec


def labeled_rows(counts):
    """Feature rows with ``counts[label]`` rows per class, classes interleaved."""
    rows = []
    remaining = dict(counts)
    i = 0
    while any(remaining.values()):
        for label in ClassLabel:
            if remaining.get(label):
                rows.append(FeatureRow(url=f"http://site-{i}.com/", vector=FeatureVector(), label=label))
                remaining[label] -= 1
                i += 1
    return rows


class TestLoadManifest:
    def test_three_pages(self, three_page_manifest):
        pages = load_manifest(three_page_manifest)
        assert [page.id for page in pages] == ["uni", "gov", "daily"]
        assert pages[0].label == ClassLabel.EDUCATION
        assert pages[0].origin.registrable_domain == "uni-example.edu"
        assert pages[0].html_path.name == "uni.html"
        assert pages[0].html_path.is_absolute()

    def test_unknown_class(self, tmp_path):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("# header\na\thttp://a.com/\ta.html\tFoo\n", encoding="utf-8")
        with pytest.raises(ManifestError) as error:
            load_manifest(manifest, check_files=False)
        message = str(error.value)
        assert ":2:" in message
        assert "Foo" in message
        assert all(label.value in message for label in ClassLabel)
        assert error.value.line == 2

    def test_empty_file(self, tmp_path):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("", encoding="utf-8")
        assert load_manifest(manifest) == []

    def test_missing_html_names_page(self, tmp_path):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("ghost\thttp://a.com/\tghost.html\tScience\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="ghost"):
            load_manifest(manifest)
        assert len(load_manifest(manifest, check_files=False)) == 1

    def test_duplicate_id(self, tmp_path):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text(
            "a\thttp://a.com/\ta.html\tScience\na\thttp://b.com/\tb.html\tSports\n", encoding="utf-8"
        )
        with pytest.raises(ManifestError, match=r"duplicate id 'a' \(first on line 1\)"):
            load_manifest(manifest, check_files=False)

    def test_wrong_field_count(self, tmp_path):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("a\thttp://a.com/\tScience\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="expected 4"):
            load_manifest(manifest, check_files=False)

    def test_relative_url_rejected(self, tmp_path):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("a\t/index.html\ta.html\tScience\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="invalid url"):
            load_manifest(manifest, check_files=False)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ManifestError, match="not found"):
            load_manifest(tmp_path / "nope.tsv")

    def test_write_then_load(self, three_page_manifest, tmp_path):
        pages = load_manifest(three_page_manifest)
        copy = write_manifest(pages, tmp_path / "elsewhere" / "manifest.tsv")
        assert load_manifest(copy) == pages


class TestExtractPages:
    def test_rows_follow_manifest(self, three_page_manifest):
        rows, failures = extract_pages(load_manifest(three_page_manifest))
        assert failures == []
        assert [row.label for row in rows] == [ClassLabel.EDUCATION, ClassLabel.GOVERNMENT, ClassLabel.NEWS_MEDIA]
        # three News words -> 3 / (3 + 5)
        assert rows[2].vector.buzzword == 0.375

    def test_unreadable_page_is_reported(self, three_page_manifest):
        pages = load_manifest(three_page_manifest)
        pages[1].html_path.unlink()
        rows, failures = extract_pages(pages)
        assert len(rows) == 2
        assert [page_id for page_id, _ in failures] == ["gov"]


class TestFeatureFiles:
    def test_write_and_read(self, tmp_path):
        rows = [
            FeatureRow(url="http://a.com/", vector=FeatureVector(link_ratio=0.25, dynamic=0.3), label=ClassLabel.SPORTS),
            FeatureRow(url="http://b.com/", vector=FeatureVector(images=0.5)),
        ]
        path = write_features(rows, tmp_path / "features.tsv")
        assert read_features(path) == rows

    def test_bad_row_names_line(self, tmp_path):
        path = tmp_path / "features.tsv"
        path.write_text("http://a.com/\t0\t0\t0\t0\t0\tScience\nhttp://b.com/\t0\t0\n", encoding="utf-8")
        with pytest.raises(FeaturesFileError, match=":2:"):
            read_features(path)

    def test_labels_required_for_samples(self):
        with pytest.raises(FeaturesFileError, match="no class label"):
            labeled_samples([FeatureRow(url="http://a.com/", vector=FeatureVector())])


class TestSplit:
    def test_five_hundred_pages(self):
        rows = labeled_rows({label: 62 + (label.index % 3) for label in ClassLabel})
        rows = rows[:500]
        train, test = split(rows, SplitSpec(train_fraction=0.4))
        assert (len(train), len(test)) == (200, 300)

    def test_single_class(self):
        rows = labeled_rows({ClassLabel.SCIENCE: 10})
        train, test = split(rows, SplitSpec(train_fraction=0.4))
        assert (len(train), len(test)) == (4, 6)

    def test_partition(self):
        rows = labeled_rows({label: 13 for label in ClassLabel})
        train, test = split(rows, SplitSpec(seed=3))
        urls = [row.url for row in train + test]
        assert len(urls) == len(set(urls)) == len(rows)

    def test_deterministic(self):
        rows = labeled_rows({label: 20 + label.index for label in ClassLabel})
        assert split(rows, SplitSpec(seed=5)) == split(rows, SplitSpec(seed=5))
        assert split(rows, SplitSpec(seed=5)) != split(rows, SplitSpec(seed=6))

    def test_stratified_shares(self):
        counts = {label: 7 + 3 * label.index for label in ClassLabel}
        rows = labeled_rows(counts)
        train, _ = split(rows, SplitSpec(train_fraction=0.4, seed=1))
        per_class = Counter(row.label for row in train)
        for label, size in counts.items():
            assert abs(per_class[label] - 0.4 * size) < 1
        assert len(train) == round(0.4 * len(rows) + 1e-9)

    def test_unstratified(self):
        rows = labeled_rows({label: 25 for label in ClassLabel})
        train, test = split(rows, SplitSpec(stratified=False, seed=2))
        assert (len(train), len(test)) == (80, 120)

    def test_keeps_input_order(self):
        rows = labeled_rows({label: 5 for label in ClassLabel})
        train, test = split(rows, SplitSpec())
        position = {row.url: i for i, row in enumerate(rows)}
        assert [position[row.url] for row in train] == sorted(position[row.url] for row in train)
        assert [position[row.url] for row in test] == sorted(position[row.url] for row in test)

    def test_empty(self):
        with pytest.raises(EmptyDatasetError):
            split([], SplitSpec())

    def test_one_page_per_class(self, caplog):
        rows = labeled_rows({label: 1 for label in ClassLabel})
        train, test = split(rows, SplitSpec(train_fraction=0.4, seed=4))
        assert (len(train), len(test)) == (3, 5)
        assert {row.url for row in train}.isdisjoint(row.url for row in test)
        assert "too small to stratify" in caplog.text

    def test_singleton_class_among_larger_ones(self):
        rows = labeled_rows({ClassLabel.SCIENCE: 1, ClassLabel.EDUCATION: 10})
        train, test = split(rows, SplitSpec(train_fraction=0.4))
        assert (len(train), len(test)) == (4, 7)
        assert split(rows, SplitSpec(train_fraction=0.4)) == (train, test)

    def test_single_item_goes_to_test(self):
        rows = labeled_rows({ClassLabel.SPORTS: 1})
        assert split(rows, SplitSpec(train_fraction=0.4)) == ([], rows)

    def test_splits_pages(self, tmp_path):
        pages = [
            (f"p{i}", f"http://p{i}.com/", page_html("x"), ClassLabel.EDUCATION if i % 2 else ClassLabel.SPORTS)
            for i in range(10)
        ]
        loaded = load_manifest(write_pages(tmp_path, pages))
        train, test = split(loaded, SplitSpec(train_fraction=0.4))
        assert len(train) == 4
        assert Counter(page.label for page in train) == {ClassLabel.EDUCATION: 2, ClassLabel.SPORTS: 2}


class TestPrototypes:
    def test_bundled_table(self):
        prototypes = load_prototypes()
        assert list(prototypes) == list(ClassLabel)
        assert prototypes[ClassLabel.NEWS_MEDIA].dynamic == 1.0

    def test_missing_class(self, tmp_path):
        path = tmp_path / "prototypes.tsv"
        path.write_text("Science\t0.1\t0.2\t0.3\t0.4\t0.5\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="missing classes"):
            load_prototypes(path)


class TestModelFiles:
    def _network(self, seed=0) -> Network:
        rng = np.random.default_rng(seed)
        params = {name: rng.normal(0.0, 3.0, PARAM_SHAPES[name]) for name in PARAM_NAMES}
        params["b_o"][0] = -0.0
        params["b_o"][1] = 1e-300
        return Network(**params)

    def test_round_trip_is_bit_identical(self, tmp_path):
        net = self._network()
        assert load_model(save_model(net, tmp_path / "model.txt")) == net

    def test_save_is_deterministic(self, tmp_path):
        first = save_model(self._network(1), tmp_path / "a.txt").read_bytes()
        second = save_model(self._network(1), tmp_path / "b.txt").read_bytes()
        assert first == second
        assert first.startswith(MODEL_HEADER.encode() + b"\n5 5 3\n")

    def test_architecture_mismatch(self, tmp_path):
        path = save_model(self._network(), tmp_path / "model.txt")
        lines = path.read_text().splitlines()
        lines[1] = "5 4 3"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="5 4 3"):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFormatError, match="not found"):
            load_model(tmp_path / "nope.txt")

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("pagesort-mlp v0\n5 5 3\n")
        with pytest.raises(ModelFormatError, match="expected header"):
            load_model(path)

    def test_truncated(self, tmp_path):
        path = save_model(self._network(), tmp_path / "model.txt")
        path.write_text("\n".join(path.read_text().splitlines()[:-2]) + "\n")
        with pytest.raises(ModelFormatError, match="truncated"):
            load_model(path)

    def test_trailing_data(self, tmp_path):
        path = save_model(self._network(), tmp_path / "model.txt")
        path.write_text(path.read_text() + "1 2 3\n")
        with pytest.raises(ModelFormatError, match="trailing"):
            load_model(path)

    def test_row_length(self, tmp_path):
        path = save_model(self._network(), tmp_path / "model.txt")
        lines = path.read_text().splitlines()
        lines[2] = "1 2 3"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError):
            load_model(path)
