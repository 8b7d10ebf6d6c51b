from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    # Overrides PipelineConfig.threads when set.
    threads: int | None = Field(None, ge=1, validation_alias="STABWEAVE_THREADS")
    log_level: str = Field("INFO", validation_alias="STABWEAVE_LOG_LEVEL")
    config_path: str | None = Field(None, validation_alias="STABWEAVE_CONFIG")
