"""App settings module.

Numerical defaults shared by the simulator, the identification pipeline and
the command line. Every value can be overridden with an ``HAMID_``-prefixed
environment variable or a ``.env`` file.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # time grid
    default_dt_ns: float = 1.0
    default_num_samples: int = 201

    # measurement statistics
    default_shots: int = 1000

    # ramp model
    ramp_speed_mhz_per_ns: float = 150.0
    ramp_wait_ns: float = 0.1
    ramp_integration_step_ns: float = 0.01

    # execution
    n_jobs: int = 1
    log_level: str = "INFO"

    # run ledger
    database_url: str = "sqlite:///./runs.db"
    record_runs: bool = False

    model_config = SettingsConfigDict(env_prefix="HAMID_", env_file=".env", extra="ignore")


settings = Settings()
