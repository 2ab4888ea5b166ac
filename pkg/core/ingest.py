"""
CSV ingestion for the batch commands.

A header row is required. Empty fields and the literal ``NA`` mark a
missing value; rows missing either requested column are dropped and
counted.
"""
import csv
import json
import logging
from pathlib import Path

import numpy as np

from bivariate.composition import BivariateModel
from core.exceptions import DataParseError, NegaCopulaError
from estimation.ranks import PairedData
from estimation.serializers import FitReportSerializer
from marginals.distributions import MarginalModel

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "NA"}
DATA_DIR = Path(__file__).resolve().parent / "data"


def airquality_path():
    """The bundled daily air-quality records (153 rows)."""
    return DATA_DIR / "airquality.csv"


def _number(raw, column, line):
    token = (raw or "").strip()
    if token in MISSING_TOKENS:
        return np.nan
    try:
        value = float(token)
    except ValueError:
        raise DataParseError(f"column {column!r}: {token!r} is not a number", line=line) from None
    if not np.isfinite(value):
        raise DataParseError(f"column {column!r}: {token!r} is not finite", line=line)
    return value


def read_paired_csv(path, xcol, ycol):
    """Read two numeric columns into PairedData (pairwise-complete rows)."""
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataParseError(f"cannot open {path}: {exc.strerror}") from None

    xs, ys = [], []
    with handle:
        reader = csv.DictReader(handle)
        headers = reader.fieldnames
        if not headers:
            raise DataParseError("the file is empty or has no header row", line=1)
        headers = [h.strip() for h in headers]
        reader.fieldnames = headers
        for column in (xcol, ycol):
            if column not in headers:
                raise DataParseError(
                    f"no column named {column!r}; available headers: {', '.join(headers)}", line=1
                )
        for row in reader:
            line = reader.line_num  # physical line; the header is line 1
            if None in row or any(value is None for value in row.values()):
                raise DataParseError(f"expected {len(headers)} fields", line=line)
            xs.append(_number(row[xcol], xcol, line))
            ys.append(_number(row[ycol], ycol, line))

    logger.info(f"read {len(xs)} rows from {path}")
    return PairedData.from_columns(xs, ys, labels=(xcol, ycol))


def read_fit_report(path):
    """Rebuild the fitted BivariateModel from a ``fit`` JSON report."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataParseError(f"cannot open {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataParseError(f"{path} is not valid JSON: {exc.msg}", line=exc.lineno) from None

    serializer = FitReportSerializer(data=payload)
    if not serializer.is_valid():
        raise DataParseError(f"{path} is not a fit report: {dict(serializer.errors)}")
    margins = payload["marginals"]
    try:
        return BivariateModel(
            margin_x=MarginalModel.of(margins["x"]["family"], **margins["x"]["params"]),
            margin_y=MarginalModel.of(margins["y"]["family"], **margins["y"]["params"]),
            theta=payload["theta_hat"],
        )
    except NegaCopulaError as exc:
        raise DataParseError(f"{path} holds an invalid model: {exc}") from None
