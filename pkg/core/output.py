"""
CSV and JSON writers shared by the management commands.

CSV uses the stdlib writer with LF line endings and the header first;
floats are written in shortest round-trip form so reruns are byte
identical.
"""
import csv
import io
import json

from rest_framework.utils.encoders import JSONEncoder


def shortest(value):
    return repr(float(value))


def seventeen_digits(value):
    return format(float(value), ".17g")


def csv_text(header, rows, fmt=shortest):
    """Render rows of numbers (strings pass through) as CSV text."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([value if isinstance(value, str) else fmt(value) for value in row])
    return buffer.getvalue()


def json_text(payload):
    # the DRF encoder handles numpy scalars and arrays through .tolist()
    return json.dumps(payload, cls=JSONEncoder, indent=2) + "\n"


def write_text(text, path=None, stdout=None):
    """Write to ``path`` when given, otherwise to the command's stdout."""
    if path:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        stdout.write(text, ending="")
