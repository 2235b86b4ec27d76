# hiermdp/config.py
# Configuration
# - Library defaults (caps, tolerances)
# - Settings: environment / .env overrides (HIERMDP_ prefix)
# - RunConfig: validated CLI invocation

from functools import lru_cache
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


# ============================================================================
# Library Defaults
# ============================================================================

DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITER = 100_000
DEFAULT_COPT_STATE_CAP = 10**6
DEFAULT_UPPER_SET_CAP = 2**20
DEFAULT_POLICY_CAP = 10**5
DEFAULT_ORACLE_CANDIDATE_CAP = 2 * 10**6
DEFAULT_ORACLE_TABLE_CAP = 10**5
DEFAULT_MC_EPISODES = 100_000
DEFAULT_MC_HORIZON = 2000

STOCHASTIC_TOLERANCE = 1e-9
DOMINANCE_TOLERANCE = 1e-12
MONOTONE_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-11


# ============================================================================
# Environment Settings
# ============================================================================

class Settings(BaseSettings):
    """Process-wide settings read from HIERMDP_* variables and .env"""
    model_config = SettingsConfigDict(env_prefix="HIERMDP_", env_file=".env", extra="ignore")

    epsilon: float = Field(DEFAULT_EPSILON, gt=0)
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    copt_state_cap: int = Field(DEFAULT_COPT_STATE_CAP, ge=1)
    upper_set_cap: int = Field(DEFAULT_UPPER_SET_CAP, ge=1)
    policy_cap: int = Field(DEFAULT_POLICY_CAP, ge=1)
    oracle_candidate_cap: int = Field(DEFAULT_ORACLE_CANDIDATE_CAP, ge=1)
    oracle_table_cap: int = Field(DEFAULT_ORACLE_TABLE_CAP, ge=1)
    mc_episodes: int = Field(DEFAULT_MC_EPISODES, ge=2)
    mc_horizon: int = Field(DEFAULT_MC_HORIZON, ge=1)
    log_level: str = "WARNING"
    output_dir: Path = Path("results")


@lru_cache
def get_settings() -> Settings:
    """Cached settings instance"""
    return Settings()


# ============================================================================
# Run Configuration
# ============================================================================

class RunConfig(BaseModel):
    """One validated CLI invocation"""
    command: Literal["solve", "compare", "check", "paper-examples", "oracle-verify"]
    instance: Optional[Path] = None
    framework: Literal["copt", "fopt", "both"] = "both"
    epsilon: float = Field(DEFAULT_EPSILON, description="Value-iteration accuracy")
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    seed: int = 0
    output_dir: Path = Path("results")
    formats: List[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])
    copt_state_cap: int = Field(DEFAULT_COPT_STATE_CAP, ge=1)
    upper_set_cap: int = Field(DEFAULT_UPPER_SET_CAP, ge=1)
    policy_cap: int = Field(DEFAULT_POLICY_CAP, ge=1)
    oracle_candidate_cap: int = Field(DEFAULT_ORACLE_CANDIDATE_CAP, ge=1)
    oracle_table_cap: int = Field(DEFAULT_ORACLE_TABLE_CAP, ge=1)
    episodes: int = Field(DEFAULT_MC_EPISODES, ge=2)
    horizon: int = Field(DEFAULT_MC_HORIZON, ge=1)
    mc_seeds: int = Field(1, ge=1)
    corpus: int = Field(0, ge=0)
    data_dir: Optional[Path] = None

    @field_validator("epsilon")
    @classmethod
    def validate_epsilon(cls, v: float) -> float:
        """Epsilon must be strictly positive"""
        if not v > 0:
            raise ValueError("epsilon must be > 0")
        return v

    @field_validator("instance", "data_dir")
    @classmethod
    def validate_path(cls, v: Optional[Path]) -> Optional[Path]:
        """Paths must resolve to something on disk"""
        if v is not None and not v.exists():
            raise ValueError(f"path does not exist: {v}")
        return v
