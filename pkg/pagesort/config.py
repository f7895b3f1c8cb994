import logging
import os
from pathlib import Path
from typing import FrozenSet, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import FeatureConfigError

logger = logging.getLogger(__name__)

load_dotenv()

DATA_DIR = Path(__file__).resolve().parent / "data"
DEFAULT_LEXICON_PATH = DATA_DIR / "buzzwords.txt"
DEFAULT_FEATURE_CONFIG_PATH = DATA_DIR / "features.env"
DEFAULT_PROTOTYPES_PATH = DATA_DIR / "prototypes.tsv"

DEFAULT_USER_AGENT = "pagesort/1.0 (web page categorization research fetcher)"


class Settings(BaseModel):
    """
    Process-wide settings read from the environment (and a ``.env`` file
    in the working directory, if present).
    """

    model_config = ConfigDict(frozen=True)

    cache_dir: Path = Path.home() / ".cache" / "pagesort"
    timeout: float = Field(15.0, gt=0)
    concurrency: int = Field(4, ge=1)
    user_agent: str = DEFAULT_USER_AGENT
    seed: int = Field(42, ge=0)

    @classmethod
    def from_env(cls) -> "Settings":
        values = {
            "cache_dir": os.getenv("PAGESORT_CACHE"),
            "timeout": os.getenv("PAGESORT_TIMEOUT"),
            "concurrency": os.getenv("PAGESORT_CONCURRENCY"),
            "user_agent": os.getenv("PAGESORT_USER_AGENT"),
            "seed": os.getenv("PAGESORT_SEED"),
        }
        return cls(**{key: value for key, value in values.items() if value})


class FeatureConfig(BaseModel):
    """Normalization constants and detection switches for the extractor."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    buzzword_saturation: float = Field(5.0, gt=0)
    image_saturation: float = Field(10.0, gt=0)
    animation_saturation: float = Field(3.0, gt=0)
    dynamic_extensions: FrozenSet[str] = frozenset({"php", "asp", "aspx", "jsp", "cgi", "pl", "py", "do"})
    count_gif_animations: bool = True
    count_plugin_animations: bool = True
    count_marquee_animations: bool = True
    buzzword_include_title: bool = True
    buzzword_include_meta: bool = False

    @field_validator("dynamic_extensions", mode="before")
    @classmethod
    def _split_extensions(cls, value):
        if isinstance(value, str):
            value = value.split(",")
        return frozenset(part.strip().lower().lstrip(".") for part in value if part.strip())

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "FeatureConfig":
        """
        Load a ``key=value`` feature config file.

        Args:
            path: Config file; the bundled defaults are used when None.

        Returns:
            The validated config.
        """
        path = Path(path) if path else DEFAULT_FEATURE_CONFIG_PATH
        if not path.is_file():
            raise FeatureConfigError(f"Feature config not found: {path}")
        raw = {key.strip().lower(): value for key, value in dotenv_values(path).items() if value is not None}
        try:
            config = cls(**raw)
        except ValidationError as e:
            raise FeatureConfigError(f"Invalid feature config {path}: {e}") from e
        logger.debug("Loaded feature config from %s", path)
        return config


class GlobalConfig(BaseModel):
    """Options shared by every CLI subcommand."""

    model_config = ConfigDict(frozen=True)

    lexicon_path: Path = DEFAULT_LEXICON_PATH
    feature_config_path: Path = DEFAULT_FEATURE_CONFIG_PATH
    seed: int = Field(42, ge=0)
    verbosity: int = Field(0, ge=0)

    @field_validator("lexicon_path", "feature_config_path")
    @classmethod
    def _must_exist(cls, path: Path) -> Path:
        if not Path(path).is_file():
            raise ValueError(f"file not found: {path}")
        return Path(path)


# Global settings instance
settings = Settings.from_env()
