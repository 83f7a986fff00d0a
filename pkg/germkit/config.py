from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    truncation: int = 16
    max_steps: int = 12
    min_retained_order: int = 8
    rate_iterations: int = 4
    output_format: str = "text"
    log_level: str = "INFO"

    model_config = {"env_prefix": "GERMKIT_"}


settings = Settings()
