from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict

# Raíz del proyecto (donde puede estar el .env)
# Desde config.py -> core -> decolab -> src -> raíz
BASE_DIR = Path(__file__).resolve().parent.parent.parent.parent
ENV_PATH = BASE_DIR / ".env"


class Settings(BaseSettings):
    # === ENTORNO ===
    app_env: str = "development"
    log_level: str = "INFO"

    # === LÍMITES DE MALLA ===
    max_cells: int = 32768
    default_sigma: float = 1e-7  # m, corte de 10^-5 cm

    # === MONTE CARLO ===
    default_n_traj: int = 10_000
    ensemble_workers: int = 1

    # === INTEGRADORES ===
    default_n_steps: int = 2000
    tracedyn_check_steps: int = 1_000_000

    # === SALIDA ===
    output_dir: str = "out"

    model_config = SettingsConfigDict(
        env_prefix="DECOLAB_",
        env_file=str(ENV_PATH) if ENV_PATH.exists() else None,
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    @property
    def is_development(self) -> bool:
        return self.app_env == "development"


settings = Settings()
