"""
Validated run configuration

A RunConfig is built from a JSON config file merged with CLI flags (flags win)
and is embedded verbatim in every report.
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .config import (
    DEFAULT_BOOT_LAW,
    DEFAULT_BOOT_REPS,
    DEFAULT_INTERACTION_ORDER,
    DEFAULT_NOMINAL_LEVEL,
    DEFAULT_PENALTY_C,
    DEFAULT_SEED,
    DEFAULT_TRANSFORM,
)
from .core.basis import BasisSpec, psid_specs
from .core.errors import ConfigError
from .core.monte_carlo import DGPS, ERROR_LAWS, ORTHOGONAL_AMPLITUDE, SETUPS, VARIANTS

PRESETS = ("psid-quadratic", "psid-linear", "psid-semiparametric")
PRESET_COLUMNS = {
    "id_col": "ID",
    "time_col": "TIME",
    "y_col": "LWAGE",
    "x": ["WKS", "EXP"],
    "dummies": ["OCC", "IND", "SOUTH", "SMSA", "MS", "UNION"],
}


class RunConfig(BaseModel):
    """Resolved configuration for one test, select or mc run"""
    model_config = ConfigDict(extra="forbid")

    subcommand: Literal["test", "select", "mc"]

    # data
    data: Optional[str] = None
    id_col: str = "id"
    time_col: str = "time"
    y_col: str = "y"
    x: List[str] = Field(default_factory=list)
    dummies: List[str] = Field(default_factory=list)
    preset: Optional[Literal["psid-quadratic", "psid-linear", "psid-semiparametric"]] = None

    # series designs
    transform: Literal["within", "fd"] = DEFAULT_TRANSFORM
    basis: Literal["power", "spline"] = "power"
    null_linear: List[str] = Field(default_factory=list)
    null_an: int = Field(default=3, ge=2)
    alt_an: int = Field(default=4, ge=2)
    interaction: int = Field(default=DEFAULT_INTERACTION_ORDER, ge=1)

    # inference
    stat: Optional[Literal["hom", "hc"]] = None
    inference: Literal["asym", "boot", "both"] = "asym"
    boot_law: Optional[Literal["mammen", "rademacher"]] = None
    boot_reps: int = Field(default=DEFAULT_BOOT_REPS, ge=1)
    level: float = Field(default=DEFAULT_NOMINAL_LEVEL, gt=0, lt=1)
    grid_min: Optional[int] = Field(default=None, ge=2)
    grid_max: Optional[int] = Field(default=None, ge=3)
    penalty_c: float = Field(default=DEFAULT_PENALTY_C, gt=0)

    # Monte Carlo
    setup: Optional[int] = None
    n: Optional[int] = Field(default=None, ge=2)
    T: Optional[int] = Field(default=None, ge=2)
    dgp: str = "sp_null"
    errors: str = "homoskedastic"
    reps: int = Field(default=100, ge=1)
    mc_an: List[int] = Field(default_factory=lambda: [4])
    variants: List[str] = Field(default_factory=lambda: ["xi_rn", "t_rn", "xi_kn", "t_kn"])
    orthogonal_amplitude: float = ORTHOGONAL_AMPLITUDE

    # run control
    seed: int = DEFAULT_SEED
    workers: int = Field(default=0, ge=0)
    out: Optional[str] = None
    effects_out: Optional[str] = None

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.preset:
            for key, value in PRESET_COLUMNS.items():
                if key not in self.model_fields_set:
                    setattr(self, key, value)

        if self.subcommand in ("test", "select"):
            if not self.data:
                raise ValueError(f"'{self.subcommand}' needs --data")
            if not self.x and not self.preset:
                raise ValueError("at least one --x regressor is required")
            unknown = [v for v in self.null_linear if v not in self.x]
            if unknown:
                raise ValueError(f"--null-linear names variables not in --x: {unknown}")

        if self.boot_law is not None and self.inference == "asym":
            raise ValueError("--boot-law only applies with --inference boot or both")
        if self.inference != "asym" and self.boot_law is None:
            if DEFAULT_BOOT_LAW not in ("mammen", "rademacher"):
                raise ValueError(f"PANELSPEC_BOOT_LAW must be mammen or rademacher, got {DEFAULT_BOOT_LAW!r}")
            self.boot_law = DEFAULT_BOOT_LAW

        has_grid = self.grid_min is not None or self.grid_max is not None
        wants_grid = self.subcommand == "select" or (
            self.subcommand == "mc" and "data_driven" in self.variants)
        if has_grid and not wants_grid:
            raise ValueError("--grid-min/--grid-max only apply to select or data-driven mc runs")
        if wants_grid:
            self.grid_min = 4 if self.grid_min is None else self.grid_min
            self.grid_max = 9 if self.grid_max is None else self.grid_max
            if self.grid_max <= self.grid_min:
                raise ValueError("--grid-max must exceed --grid-min")

        if self.subcommand == "mc":
            if self.setup is not None and self.setup not in SETUPS:
                raise ValueError(f"--setup must be one of {sorted(SETUPS)}")
            if self.setup is None:
                if self.n is None and self.T is None:
                    self.setup = 1
                elif self.n is None or self.T is None:
                    raise ValueError("give --setup or both --n and --T")
            if self.dgp not in DGPS:
                raise ValueError(f"--dgp must be one of {', '.join(DGPS)}")
            if self.errors not in ERROR_LAWS:
                raise ValueError(f"--errors must be one of {', '.join(ERROR_LAWS)}")
            unknown = [v for v in self.variants if v not in VARIANTS]
            if unknown:
                raise ValueError(f"unknown variants {unknown}")
            if self.inference != "asym":
                raise ValueError("mc runs choose bootstrap through --variants, not --inference")
        return self

    @classmethod
    def build(cls, values: dict) -> "RunConfig":
        """Validate, turning pydantic errors into ConfigError"""
        try:
            return cls(**values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                for err in e.errors()
            )
            raise ConfigError(problems) from None

    def basis_specs(self) -> Tuple[BasisSpec, BasisSpec]:
        """Null and alternative specs for test/select runs"""
        if self.preset:
            model = self.preset.split("-", 1)[1]
            return psid_specs(model, a_n=self.alt_an, family=self.basis)

        nonparametric_null = [v for v in self.x if v not in self.null_linear]
        null = BasisSpec.from_roles(
            linear=self.null_linear,
            nonparametric=nonparametric_null,
            dummies=self.dummies,
            family=self.basis,
            a_n=self.null_an,
            interaction_order=1,
        )
        alt = BasisSpec.from_roles(
            nonparametric=self.x,
            dummies=self.dummies,
            family=self.basis,
            a_n=self.alt_an,
            interaction_order=self.interaction,
        )
        return null, alt
