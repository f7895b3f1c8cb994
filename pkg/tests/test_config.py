from pathlib import Path

import pytest
from pydantic import ValidationError

from pagesort.config import DEFAULT_FEATURE_CONFIG_PATH, FeatureConfig, GlobalConfig, Settings
from pagesort.errors import FeatureConfigError


class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("PAGESORT_CACHE", "PAGESORT_TIMEOUT", "PAGESORT_CONCURRENCY", "PAGESORT_SEED"):
            monkeypatch.delenv(name, raising=False)
        settings = Settings.from_env()
        assert settings.timeout == 15.0
        assert settings.concurrency == 4
        assert settings.seed == 42
        assert settings.cache_dir.name == "pagesort"

    def test_environment_overrides(self, monkeypatch, tmp_path):
        monkeypatch.setenv("PAGESORT_CACHE", str(tmp_path))
        monkeypatch.setenv("PAGESORT_CONCURRENCY", "2")
        monkeypatch.setenv("PAGESORT_TIMEOUT", "2.5")
        settings = Settings.from_env()
        assert settings.cache_dir == tmp_path
        assert settings.concurrency == 2
        assert settings.timeout == 2.5

    def test_invalid_value(self, monkeypatch):
        monkeypatch.setenv("PAGESORT_CONCURRENCY", "0")
        with pytest.raises(ValidationError):
            Settings.from_env()


class TestFeatureConfig:
    def test_bundled_file_matches_defaults(self):
        assert FeatureConfig.load(DEFAULT_FEATURE_CONFIG_PATH) == FeatureConfig()

    def test_load_overrides(self, tmp_path):
        path = tmp_path / "features.env"
        path.write_text("# custom\nIMAGE_SATURATION=20\ndynamic_extensions=.PHP, shtml\ncount_marquee_animations=false\n")
        config = FeatureConfig.load(path)
        assert config.image_saturation == 20
        assert config.dynamic_extensions == frozenset({"php", "shtml"})
        assert config.count_marquee_animations is False
        assert config.buzzword_saturation == 5

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "features.env"
        path.write_text("colour_saturation=3\n")
        with pytest.raises(FeatureConfigError, match="colour_saturation"):
            FeatureConfig.load(path)

    def test_non_positive_saturation(self, tmp_path):
        path = tmp_path / "features.env"
        path.write_text("buzzword_saturation=0\n")
        with pytest.raises(FeatureConfigError):
            FeatureConfig.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FeatureConfigError, match="not found"):
            FeatureConfig.load(tmp_path / "missing.env")


class TestGlobalConfig:
    def test_defaults_exist(self):
        config = GlobalConfig()
        assert config.lexicon_path.is_file()
        assert config.feature_config_path.is_file()

    def test_missing_lexicon(self, tmp_path):
        with pytest.raises(ValidationError, match="file not found"):
            GlobalConfig(lexicon_path=Path(tmp_path / "nope.txt"))
