"""The `etpasim ingest` command: validate an external counts CSV and write
it back in the internal schema and units."""

import logging
import os

from etpasim.archive import COUNTS_NAME, ensure_dir
from etpasim.records import ingest_external, write_counts_csv
from etpasim.utils import yprint

logger = logging.getLogger(__name__)


def ingest_counts(args):
    records = ingest_external(args.counts, strict=args.strict)

    info = {"source": args.counts, "records": len(records)}
    if args.out:
        path = write_counts_csv(
            records, os.path.join(ensure_dir(args.out), COUNTS_NAME)
        )
        info["normalized"] = path

    yprint(info)
    return records
