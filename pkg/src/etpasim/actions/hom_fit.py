"""The `etpasim hom-fit` command: fit the HOM curve of a delay scan."""

import logging
import os

from etpasim.analysis import fit_hom_scan
from etpasim.estimators import HomShape
from etpasim.records import read_counts_csv
from etpasim.report import hom_report, write_hom_report
from etpasim.utils import yprint

logger = logging.getLogger(__name__)


def fit_hom(args):
    records = read_counts_csv(args.counts)
    shape = HomShape(args.shape) if args.shape else None
    scan = fit_hom_scan(records, shape=shape)

    out_dir = args.out or os.path.dirname(os.path.abspath(args.counts))
    paths = write_hom_report(scan, out_dir)

    report = hom_report(scan)
    report["files"] = paths
    yprint(report)
    return scan
