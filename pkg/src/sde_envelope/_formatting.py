"""CSV row formatting for run outputs."""

import csv
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

TABLE_COLUMNS: dict[str, tuple[str, ...]] = {
    "envelope": ("path_id", "t", "x", "V", "env_V_over_logt", "env_gauge_ratio"),
    "martingale": ("path_id", "t", "M", "QV", "M_over_t", "QV_over_t", "lil_ratio"),
    "birkhoff": ("path_id", "t", "phi_name", "running_avg"),
    "slln": ("seed", "n_or_T", "scaled_sum"),
    "coupling": ("path_id", "t", "x_low", "x_high", "gap", "violations"),
    "comparison": ("estimator", "oracle", "mc_value", "std_error", "z_score", "paths"),
}


def format_value(value: Any) -> str:
    """Serialize a cell; floats use 17 significant digits so they round-trip exactly.

    Args:
        value: Cell value.

    Returns:
        The text of the cell.
    """
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


def format_row(table: str, row: Mapping[str, Any]) -> list[str]:
    """Format one row of a table in column order.

    Args:
        table: Table name, one of :data:`TABLE_COLUMNS`.
        row: Cell values by column.

    Returns:
        The formatted cells.

    Raises:
        RuntimeError: If the table is unknown.
        KeyError: If a column is missing from the row.
    """
    match table:
        case "envelope" | "martingale" | "birkhoff" | "slln" | "coupling" | "comparison":
            return [format_value(row[column]) for column in TABLE_COLUMNS[table]]
        case _:
            raise RuntimeError(f"table=<{table}> | unknown table")


def write_table(path: Union[str, Path], table: str, rows: Iterable[Mapping[str, Any]]) -> Path:
    """Write a table as CSV with a header row.

    Args:
        path: Destination file.
        table: Table name.
        rows: Rows in output order.

    Returns:
        The written path.
    """
    target = Path(path)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS[table])
        for row in rows:
            writer.writerow(format_row(table, row))
    return target


def read_table(path: Union[str, Path]) -> list[dict[str, str]]:
    """Read a CSV table written by :func:`write_table`."""
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))
