"""The `etpasim bound` command: smallest cross-section a transmission
measurement can resolve at a given solvent rate."""

from etpasim.estimators import sensitivity_bound
from etpasim.utils import yprint


def compute_bound(args):
    value = sensitivity_bound(args.rate, args.concentration, args.path_length)
    yprint(
        {
            "solvent rate [1/s]": args.rate,
            "concentration [M]": args.concentration,
            "path length [cm]": args.path_length,
            "sigma bound [cm^2]": float(f"{value:.6g}"),
        }
    )
    return value
