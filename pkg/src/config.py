"""Configuration management for the rule miner."""

import os
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ParseError


class ModelConfig(BaseModel):
    """Shape and initialization of a DrumModel."""
    model_config = ConfigDict(frozen=True)

    T: int = Field(2, ge=1, description="maximum rule length")
    L: int = Field(4, ge=1, description="rank of the confidence-tensor approximation")
    hidden_dim: int = Field(128, ge=1)
    embed_dim: int = Field(128, ge=1)
    operator_count: int = Field(..., ge=2, description="|R| + 1 including the identity")
    epsilon_log: float = Field(1e-10, gt=0)
    init_scale: float = Field(0.1, gt=0)
    seed: int = 0


class TrainConfig(BaseModel):
    """Optimizer and schedule settings."""
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(0.001, gt=0)
    batch_size: int = Field(64, ge=1)
    max_epochs: int = Field(10, ge=1)
    clip_norm: float = Field(5.0, gt=0)
    patience: int = Field(5, ge=1)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_epsilon: float = Field(1e-8, gt=0)
    threads: int = Field(1, ge=1)
    parallel_batch: bool = False
    seed: int = 0


class Settings(BaseSettings):
    """Environment-level settings (DRUM_* variables, .env)."""
    model_config = SettingsConfigDict(env_prefix="DRUM_", extra="ignore")

    data_dir: Optional[Path] = None
    log_level: str = "info"


class RunConfig(BaseModel):
    """Flat run configuration shared by every command.

    Field names double as config-file keys and, with '_' spelled '-', as
    command-line flags.
    """
    model_config = ConfigDict(extra="forbid")

    dataset: Optional[str] = None
    input: Optional[Path] = None
    data_dir: Optional[Path] = None
    out: Path = Path("runs/latest")
    checkpoint: Optional[Path] = None
    rules: Optional[Path] = None

    T: int = Field(2, ge=1)
    L: int = Field(4, ge=1)
    hidden_dim: int = Field(128, ge=1)
    embed_dim: int = Field(128, ge=1)
    lr: float = Field(0.001, gt=0)
    batch_size: int = Field(64, ge=1)
    epochs: int = Field(10, ge=1)
    clip_norm: float = Field(5.0, gt=0)
    patience: int = Field(5, ge=1)
    seed: int = 0
    threads: Optional[int] = Field(None, ge=1)
    parallel_batch: bool = False

    ratio: float = Field(3.0, gt=0)
    min_conf: Optional[float] = None
    split: str = "test"
    tail_only: bool = False
    protocol: str = "transductive"
    sample_size: Optional[int] = Field(None, ge=1)
    control_epochs: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _check_choices(self) -> "RunConfig":
        if self.split not in ("valid", "test"):
            raise ValueError(f"split must be valid or test, got {self.split}")
        if self.protocol not in ("transductive", "inductive"):
            raise ValueError(f"protocol must be transductive or inductive, got {self.protocol}")
        return self

    def model(self, operator_count: int) -> ModelConfig:
        return ModelConfig(
            T=self.T,
            L=self.L,
            hidden_dim=self.hidden_dim,
            embed_dim=self.embed_dim,
            operator_count=operator_count,
            seed=self.seed,
        )

    def training(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.lr,
            batch_size=self.batch_size,
            max_epochs=self.epochs,
            clip_norm=self.clip_norm,
            patience=self.patience,
            threads=self.threads or 1,
            parallel_batch=self.parallel_batch,
            seed=self.seed,
        )


def substitute_env(value: str) -> str:
    """Replace a whole-value ${VAR} with the environment variable."""
    value = value.strip()
    if value.startswith("${") and value.endswith("}"):
        return os.getenv(value[2:-1], "")
    return value


def load_config(config_path: str | Path) -> dict[str, Any]:
    """Read a flat `key = value` file.

    Values go through environment substitution and are then typed as YAML
    scalars, so `0.001`, `true` and `[a, b]` arrive as float, bool and list.
    """
    config_file = Path(config_path)
    if not config_file.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    values: dict[str, Any] = {}
    with open(config_file, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected `key = value`", path=str(config_file), line_number=line_number)
            key, raw = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ParseError("empty key", path=str(config_file), line_number=line_number)
            raw = substitute_env(raw)
            try:
                values[key.replace("-", "_")] = yaml.safe_load(raw) if raw else None
            except yaml.YAMLError as e:
                raise ParseError(f"bad value for {key}: {e}", path=str(config_file), line_number=line_number) from e
    return values


def build_run_config(
    file_values: Optional[dict[str, Any]] = None,
    flag_values: Optional[dict[str, Any]] = None,
    settings: Optional[Settings] = None,
) -> RunConfig:
    """Merge defaults < environment < config file < flags."""
    merged: dict[str, Any] = {}
    settings = settings or get_settings()
    if settings.data_dir is not None:
        merged["data_dir"] = settings.data_dir
    merged.update({k: v for k, v in (file_values or {}).items() if v is not None})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    return RunConfig(**merged)


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        from dotenv import load_dotenv
        load_dotenv()
        _settings = Settings()
    return _settings
