"""Experiment configuration, validated on load; unknown keys are errors."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from ..errors import ConfigError

__all__ = [
    "KernelBlockConfig",
    "HyperOptBlock",
    "UkfBlock",
    "KinkBlock",
    "TvParamBlock",
    "CustomBlock",
    "OutputBlock",
    "ExperimentConfig",
    "load_config",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class KernelBlockConfig(_Strict):
    variance: PositiveFloat = 1.0
    lengthscale: PositiveFloat = 1.0


class HyperOptBlock(_Strict):
    enabled: bool = False
    step_size: PositiveFloat = 1e-2
    steps_per_update: PositiveInt = 1
    update_period: PositiveInt = 1
    learn_variance: bool = True


class UkfBlock(_Strict):
    alpha: PositiveFloat = 1e-3
    beta: float = 2.0
    scaling_dim: PositiveInt | None = None


class KinkBlock(_Strict):
    process_var: PositiveFloat = 0.05
    x0_std: PositiveFloat = 1.0
    grid_points: PositiveInt = 100


class TvParamBlock(_Strict):
    sigma_m: PositiveFloat = 0.05
    amplitude: float = 1.0
    period: PositiveFloat = 4.0
    x0: float = 0.0
    prior_var: PositiveFloat = 1.0
    basis_kernel: bool = False


class CustomBlock(_Strict):
    """``factory`` is ``"module:callable"``; it is called with ``seed``, ``noise`` and ``options``."""

    factory: str
    options: dict[str, Any] = Field(default_factory=dict)


class OutputBlock(_Strict):
    dir: Path = Path("results")
    csv: str = "results.csv"
    json_name: str = Field("results.json", alias="json")
    plot: str = "plot_results.py"
    curves: bool = True


# Settings that differ by experiment; anything left unset in a
# config file is filled from here.
_EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "kink": dict(
        noise=[0.008],
        budget=15,
        horizon=600,
        kernel=[KernelBlockConfig(variance=4.0, lengthscale=1.0)],
        hyperopt=HyperOptBlock(enabled=False),
    ),
    "tvparam": dict(
        noise=[0.0025],
        budget=50,
        horizon=800,
        process_noise=1e-6,
        kernel=[KernelBlockConfig(), KernelBlockConfig()],
        hyperopt=HyperOptBlock(enabled=True, learn_variance=False),
    ),
    "custom": dict(noise=[0.01], budget=20, horizon=200, kernel=[], hyperopt=HyperOptBlock()),
}


class ExperimentConfig(_Strict):
    experiment: Literal["kink", "tvparam", "custom"]
    matcher: Literal["ekf", "ukf", "adf"] = "ekf"
    noise: list[PositiveFloat] | None = None
    seeds: PositiveInt = 5
    seed_offset: int = 0
    budget: PositiveInt | None = None
    eps_tol: float = Field(1e-2, ge=0.0, le=1.0)
    rho: float = Field(0.1, ge=0.0, le=1.0)
    horizon: PositiveInt | None = None
    dt: PositiveFloat = 0.05
    process_noise: PositiveFloat | None = None
    kernel: list[KernelBlockConfig] | None = None
    hyperopt: HyperOptBlock | None = None
    ukf: UkfBlock = UkfBlock()
    adf_state_step: Literal["ukf", "ekf"] = "ukf"
    kink: KinkBlock = KinkBlock()
    tvparam: TvParamBlock = TvParamBlock()
    custom: CustomBlock | None = None
    workers: PositiveInt = 1
    output: OutputBlock = OutputBlock()

    @model_validator(mode="before")
    @classmethod
    def _fill_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        defaults = _EXPERIMENT_DEFAULTS.get(data.get("experiment"), {})
        filled = dict(data)
        for key, value in defaults.items():
            if filled.get(key) is None:
                filled[key] = value
        return filled

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if self.experiment == "custom" and self.custom is None:
            raise ValueError("experiment 'custom' needs a 'custom' block with a factory")
        if self.experiment == "tvparam" and len(self.kernel) != 2:
            raise ValueError("tvparam uses one kernel block per parameter (2)")
        if self.experiment == "kink" and len(self.kernel) != 1:
            raise ValueError("kink uses a single kernel block")
        return self

    def seed_list(self) -> list[int]:
        return list(range(self.seed_offset, self.seed_offset + self.seeds))

    def dump(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def load_config(source: str | Path | dict, **overrides) -> ExperimentConfig:
    """Build a config from a YAML/JSON file or a mapping, with ``None`` overrides ignored."""
    if isinstance(source, dict):
        data = dict(source)
    else:
        path = Path(source)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a mapping at the top level")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
