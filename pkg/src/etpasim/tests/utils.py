import numpy as np

from etpasim.core import ExperimentConfig, validate_config
from etpasim.estimators import hom_curve, hom_fwhm


def hom_scan(visibility, fwhm=200.0, noise=0.0, seed=0, a=1000.0, shape="dip"):
    """41 delays over +-300 fs through the sinc-Gaussian model with c1 = 1/c2,
    with multiplicative Gaussian noise. The errors come from the noiseless
    curve."""
    c2 = fwhm / hom_fwhm(1.0, 1.0)
    d = -visibility * a if shape == "dip" else visibility * a
    x = np.linspace(-300.0, 300.0, 41)
    y_true = hom_curve(x, a, 0.0, 1 / c2, c2, d)
    rng = np.random.default_rng(seed)
    y = y_true * (1 + noise * rng.standard_normal(x.size))
    y_err = noise * np.abs(y_true) if noise else None
    return x, y, y_err


def with_overrides(config: ExperimentConfig, **sections) -> ExperimentConfig:
    """Copy of config with some fields of its sections replaced, e.g.
    with_overrides(config, sample={"sigma_e_true": 1e-18}, seed=7)."""
    data = config.model_dump(mode="json")
    for key, value in sections.items():
        if isinstance(value, dict):
            data[key] = {**(data.get(key) or {}), **value}
        else:
            data[key] = value
    return validate_config(data)
