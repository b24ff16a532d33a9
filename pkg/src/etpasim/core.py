"""
Domain types and unit conventions shared by every other etpasim module.

Units at the API:
    concentration      mol/L (converted to mol/cm^3 inside molecules_per_area)
    path length        cm
    cross-section      cm^2/molecule
    pump power         mW
    delay tau          fs
    correlation time   ps
    coincidence window ns
    rates              counts/s

All models are frozen pydantic models that reject unknown keys, so a config
file with a typo fails loudly and values can be shared between processes.
"""

import logging
import math
from enum import Enum
from itertools import product
from typing import Any, Literal, Mapping, NamedTuple, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from etpasim.errors import ConfigValidationError

logger = logging.getLogger(__name__)

AVOGADRO = 6.02214076e23  # mol^-1, CODATA exact
CM3_PER_LITER = 1000.0
FS_PER_PS = 1000.0
SECONDS_PER_NS = 1e-9
MAX_SEED = 2**64


class Geometry(str, Enum):
    COLLINEAR = "collinear"
    NONCOLLINEAR = "noncollinear"


class Arm(str, Enum):
    SAMPLE = "sample"
    REFERENCE = "reference"


class Method(str, Enum):
    STANDARD_SINGLES = "standard_singles"
    STANDARD_COINCIDENCE = "standard_coincidence"
    G2 = "g2"
    SLOPE_RATIO = "slope_ratio"


class Accidentals(str, Enum):
    COMPUTED = "computed"
    MEASURED = "measured"


class EtpaModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def molecules_per_area(concentration: float, path_length: float) -> float:
    """
    Column density c_vol * N_A * l of absorbers seen by the beam.

    Parameters
    ----------
    concentration : float
        Molar concentration in mol/L.
    path_length : float
        Cuvette length in cm.

    Returns
    -------
    float
        Molecules per cm^2.
    """
    errors = []
    if not concentration >= 0:
        errors.append(("concentration", f"must be >= 0, got {concentration}"))
    if not path_length > 0:
        errors.append(("path_length", f"must be > 0, got {path_length}"))
    if errors:
        raise ConfigValidationError(errors)

    return concentration / CM3_PER_LITER * AVOGADRO * path_length


class SourceParams(EtpaModel):
    pump_power: float = Field(1.0, ge=0, description="Pump power in mW")
    pairs_per_mw: float = Field(
        4.0e5, ge=0, description="Generated pairs per second per mW of pump"
    )
    hom_visibility: float = Field(0.957, ge=0, le=1)
    correlation_time_te: float = Field(
        0.2, gt=0, description="Entanglement time T_e (FWHM) in ps"
    )
    delay_tau: float = Field(0.0, description="Signal-idler delay in fs")
    geometry: Geometry = Geometry.NONCOLLINEAR
    pump_drift: float = Field(
        0.0,
        gt=-1,
        description="Relative pump-power change during non-solvent runs",
    )

    @model_validator(mode="after")
    def _collinear_has_no_delay(self):
        if self.geometry == Geometry.COLLINEAR and self.delay_tau != 0:
            raise ValueError(
                "collinear geometry has no delay stage, delay_tau must be 0"
            )
        return self


class SampleParams(EtpaModel):
    concentration: float = Field(0.0, ge=0, description="mol/L")
    path_length_l: float = Field(1.0, gt=0, description="cm")
    sigma_e_true: float = Field(0.0, ge=0, description="cm^2/molecule")
    linear_attenuation_alpha: float = Field(
        0.0, ge=0, description="Absorbance per (mol/L)^gamma per cm"
    )
    attenuation_exponent: float = Field(
        1.0, gt=0, description="gamma; 1 is Beer-Lambert"
    )
    is_solvent_only: bool = False
    effective_path_length: Optional[float] = Field(
        None, gt=0, description="Override for l used by the estimators"
    )

    @model_validator(mode="after")
    def _pair_survival_is_a_probability(self):
        column = self.sigma_e_true * molecules_per_area(
            self.effective_concentration, self.path_length_l
        )
        if column > 1:
            raise ValueError(
                f"pair survival < 0: sigma_e*c*l*N_A = {column:.4g} exceeds 1"
            )
        return self

    @property
    def effective_concentration(self) -> float:
        return 0.0 if self.is_solvent_only else self.concentration

    @property
    def analysis_path_length(self) -> float:
        return self.effective_path_length or self.path_length_l

    def at_concentration(self, concentration: float) -> "SampleParams":
        return self.model_copy(
            update={
                "concentration": concentration,
                "is_solvent_only": concentration == 0,
            }
        )


class ChannelParams(EtpaModel):
    eps1: float = Field(1.0, ge=0, le=1)
    eps2: float = Field(1.0, ge=0, le=1)
    kappa1: float = Field(1.0, ge=0, le=1)
    kappa2: float = Field(1.0, ge=0, le=1)
    beta1: float = Field(0.75, ge=0, le=1)
    beta2: float = Field(0.75, ge=0, le=1)
    beta12: float = Field(0.5, ge=0, le=1)
    kappa_jitter: float = Field(
        0.0,
        ge=0,
        le=1,
        description="Relative std of the kappa perturbation between solvent and sample runs",
    )

    def routing_probabilities(self) -> tuple[float, float, float]:
        """(split, both to detector 1, both to detector 2) for one pair at the
        splitter, chosen so that detector i sees the pair with probability
        beta_i and both detectors with probability beta12."""
        return (self.beta12, self.beta1 - self.beta12, self.beta2 - self.beta12)

    def routing_errors(self) -> list[tuple[str, str]]:
        split, both1, both2 = self.routing_probabilities()
        errors = []
        if both1 < 0:
            errors.append(("beta1", "must be >= beta12 for event-level routing"))
        if both2 < 0:
            errors.append(("beta2", "must be >= beta12 for event-level routing"))
        if not math.isclose(split + both1 + both2, 1.0, abs_tol=1e-9):
            errors.append(
                ("beta12", "beta1 + beta2 - beta12 must equal 1 for event-level routing")
            )
        return errors


class DetectorParams(EtpaModel):
    dark_rate_1: float = Field(0.0, ge=0, description="counts/s")
    dark_rate_2: float = Field(0.0, ge=0, description="counts/s")
    coincidence_window_tau_c: float = Field(1.05, gt=0, description="ns")
    integration_time: float = Field(60.0, gt=0, description="s")
    measured_accidental_rate: Optional[float] = Field(
        None, ge=0, description="Supplied phi12 baseline in counts/s"
    )

    @property
    def tau_c_seconds(self) -> float:
        return self.coincidence_window_tau_c * SECONDS_PER_NS


class Measurement(EtpaModel):
    """A value with its one-sigma error."""

    value: float
    error: float = Field(0.0, ge=0)

    @property
    def consistent_with_zero(self) -> bool:
        return abs(self.value) < self.error

    @property
    def relative_error(self) -> float:
        return self.error / abs(self.value) if self.value else math.inf


class RateTriple(EtpaModel):
    r1: float = Field(ge=0)
    r2: float = Field(ge=0)
    r12: float = Field(ge=0)
    phi1: float = Field(0.0, ge=0)
    phi2: float = Field(0.0, ge=0)
    phi12: float = Field(0.0, ge=0)
    err1: float = Field(0.0, ge=0)
    err2: float = Field(0.0, ge=0)
    err12: float = Field(0.0, ge=0)
    phi_err1: float = Field(0.0, ge=0)
    phi_err2: float = Field(0.0, ge=0)
    phi_err12: float = Field(0.0, ge=0)

    def scaled(self, factor: float) -> "RateTriple":
        """Every rate, baseline and error multiplied by factor, so that the
        baseline-corrected rates scale by exactly factor."""
        return RateTriple(**{k: v * factor for k, v in self.model_dump().items()})


class CountRecord(EtpaModel):
    run_id: str = "run"
    arm: Arm = Arm.SAMPLE
    delay_tau: float = 0.0
    pump_power: float = Field(ge=0)
    concentration: float = Field(ge=0)
    integration_time: float = Field(gt=0)
    singles1: int = Field(ge=0)
    singles2: int = Field(ge=0)
    coincidences: int = Field(ge=0)
    dark1: int = Field(0, ge=0)
    dark2: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, lt=MAX_SEED)

    @model_validator(mode="after")
    def _coincidences_bounded_by_singles(self):
        if self.coincidences > min(self.singles1, self.singles2):
            raise ValueError(
                f"coincidences ({self.coincidences}) exceed "
                f"min(singles1, singles2) = {min(self.singles1, self.singles2)}"
            )
        return self


class CrossSectionEstimate(EtpaModel):
    value: float
    abs_error: float = Field(ge=0)
    method: Method
    concentration: float = Field(ge=0)

    @property
    def consistent_with_zero(self) -> bool:
        return abs(self.value) < self.abs_error


class SweepPoint(NamedTuple):
    index: int
    arm: Arm
    concentration: float
    delay_tau: float
    pump_power: float


class SweepSpec(EtpaModel):
    pump_powers: list[float] = Field([1.0], min_length=1)
    concentrations: list[float] = Field([0.0], min_length=1)
    delays: list[float] = Field([0.0], min_length=1)
    arms: list[Arm] = Field([Arm.SAMPLE], min_length=1)
    replicas: int = Field(1, ge=1)

    @field_validator("pump_powers", "concentrations")
    @classmethod
    def _nonnegative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("values must be >= 0")
        return v

    @field_validator("concentrations")
    @classmethod
    def _solvent_included(cls, v):
        if 0.0 not in v:
            logger.debug("Adding the solvent-only concentration 0 to the sweep")
            v = [0.0] + list(v)
        return v

    @field_validator("arms")
    @classmethod
    def _unique_arms(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("arms must be unique")
        return v

    def points(self) -> list[SweepPoint]:
        """Every sweep point in a fixed order (arm, concentration, delay, pump)."""
        grid = product(self.arms, self.concentrations, self.delays, self.pump_powers)
        return [SweepPoint(i, *p) for i, p in enumerate(grid)]


class AnalysisParams(EtpaModel):
    accidentals: Accidentals = Accidentals.COMPUTED
    reference_correction: bool = True
    replica_reducer: Literal["weighted", "mean", "median"] = "weighted"


class ExperimentConfig(EtpaModel):
    name: str = "experiment"
    source: SourceParams = SourceParams()
    sample: SampleParams = SampleParams()
    channel: ChannelParams = ChannelParams()
    reference_channel: Optional[ChannelParams] = None
    detector: DetectorParams = DetectorParams()
    sweep: SweepSpec = SweepSpec()
    analysis: AnalysisParams = AnalysisParams()
    seed: int = Field(0, ge=0, lt=MAX_SEED)

    def channel_for(self, arm: Arm) -> ChannelParams:
        if arm == Arm.REFERENCE and self.reference_channel is not None:
            return self.reference_channel
        return self.channel


_CROSS_FIELD_SECTIONS = {
    "source": SourceParams,
    "sample": SampleParams,
    "detector": DetectorParams,
    "sweep": SweepSpec,
    "analysis": AnalysisParams,
}


def _partial_section(model: type[EtpaModel], raw: Any) -> Optional[EtpaModel]:
    """The section validated without its invalid fields, or None when what is
    left still fails (e.g. a failing model validator)."""
    if isinstance(raw, model):
        return raw
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        return None
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        bad = {err["loc"][0] for err in e.errors() if err["loc"]}
    try:
        return model.model_validate({k: v for k, v in raw.items() if k not in bad})
    except ValidationError:
        return None


def _cross_field_errors(data: Mapping[str, Any]) -> list[tuple[str, str]]:
    sections = {
        name: _partial_section(model, data.get(name))
        for name, model in _CROSS_FIELD_SECTIONS.items()
    }
    source, sample = sections["source"], sections["sample"]
    detector, sweep, analysis = sections["detector"], sections["sweep"], sections["analysis"]
    errors = []

    if source is not None and sweep is not None:
        if source.geometry == Geometry.COLLINEAR and any(d != 0 for d in sweep.delays):
            errors.append(
                ("sweep.delays", "collinear geometry has no delay stage, delays must be 0")
            )

    if sample is not None and sweep is not None:
        c_max = max(sweep.concentrations)
        column = sample.sigma_e_true * molecules_per_area(c_max, sample.path_length_l)
        if column > 1:
            errors.append(
                (
                    "sample.sigma_e_true",
                    f"pair survival < 0 at concentration {c_max}: "
                    f"sigma_e*c*l*N_A = {column:.4g} exceeds 1",
                )
            )

    if analysis is not None and detector is not None:
        if (
            analysis.accidentals == Accidentals.MEASURED
            and detector.measured_accidental_rate is None
        ):
            errors.append(
                (
                    "analysis.accidentals",
                    "measured accidentals need detector.measured_accidental_rate",
                )
            )

    return errors


def validate_config(config: ExperimentConfig | Mapping[str, Any]) -> ExperimentConfig:
    """
    Check every invariant of an experiment config.

    All violations are collected before raising, each tagged with its dotted
    field path.

    Raises
    ------
    ConfigValidationError
        With the full list of (field_path, message) pairs.
    """
    if isinstance(config, ExperimentConfig):
        data = config.model_dump()
    else:
        data = dict(config)

    errors = []
    validated = None
    try:
        validated = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        for err in e.errors():
            path = ".".join(str(p) for p in err["loc"]) or "<root>"
            errors.append((path, err["msg"]))

    # Cross-field checks run on whatever parts of each section are valid
    errors.extend(_cross_field_errors(data))

    if errors:
        raise ConfigValidationError(errors)

    logger.debug(f"Experiment config '{validated.name}' is valid")
    return validated
