"""
Result emission for the command-line front end.
Tables go through pandas, reports through json; floats use the shortest
round-trip representation so repeated runs produce identical bytes.
Non-finite floats become null in JSON.
"""

import json
import logging
import math
import os
from typing import Any, Dict, List

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def split_complex(prefix: str, value: complex) -> Dict[str, float]:
    """{prefix_re, prefix_im} columns for a complex value."""
    value = complex(value)
    return {f"{prefix}_re": value.real, f"{prefix}_im": value.imag}


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return {"re": _plain(value.real), "im": _plain(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class ResultWriter:
    """Writes command results into an output directory."""

    def __init__(self, output_dir: str = "results"):
        """
        Args:
            output_dir: Directory for result files; created if missing
        """
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def save_table(self, rows: List[Dict[str, Any]], columns: List[str], filename: str,
                   format: str = "csv") -> str:
        """
        Save rows with a fixed column order.

        Args:
            rows: Row dictionaries keyed by column name
            columns: Column order; an empty table still carries the header
            filename: Filename without extension
            format: 'csv' or 'json'

        Returns:
            Full path to the saved file

        Raises:
            ValueError: For an unsupported format
        """
        df = pd.DataFrame(rows, columns=columns)
        if format == "csv":
            filepath = os.path.join(self.output_dir, f"{filename}.csv")
            df.to_csv(filepath, index=False, float_format=FLOAT_FORMAT)
        elif format == "json":
            filepath = os.path.join(self.output_dir, f"{filename}.json")
            records = [{column: _plain(row.get(column)) for column in columns} for row in rows]
            with open(filepath, "w") as f:
                json.dump({"columns": columns, "rows": records}, f, indent=2, allow_nan=False)
        else:
            raise ValueError(f"Unsupported format: {format}")
        logger.debug("Wrote %d rows to %s", len(df), filepath)
        return filepath

    def save_report(self, report: Dict[str, Any], filename: str) -> str:
        """
        Save a report dictionary as indented JSON.

        Returns:
            Full path to the saved file
        """
        filepath = os.path.join(self.output_dir, f"{filename}.json")
        with open(filepath, "w") as f:
            json.dump(_plain(report), f, indent=2, allow_nan=False)
        return filepath
