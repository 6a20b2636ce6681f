from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    model_config = {"env_prefix": "FAIRTRADE_", "env_file": ".env", "extra": "ignore"}

    # Output
    output_dir: str = "runs"
    log_level: str = "INFO"

    # Oracle Monte Carlo
    mc_samples: int = 100_000

    # Repetition protocol (mean ± std over random splits / new CEVAE samples)
    repetitions: int = 20
    jobs: int = 1
    train_fraction: float = 0.9

    # Audit
    sanity_drop_threshold: float = 0.05
    adapter_timeout: float = 60.0  # seconds per external call
    adapter_retries: int = 2

    # Random forest black box
    rf_trees: int = 100
    rf_max_depth: int = 8


settings = Settings()
