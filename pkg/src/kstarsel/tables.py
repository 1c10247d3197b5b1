"""CSV result tables with unit declarations and a reproducibility header."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from . import __version__


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if value.is_integer() and abs(value) < 2**53:
            return str(int(value))
        return format(value, ".17g")
    return str(value)


def parse(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


@dataclass
class ResultTable:
    columns: list
    units: dict
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [c for c in self.columns if c not in self.units]
        if missing:
            raise ValueError(f"columns without declared units: {missing}")
        self.meta.setdefault("tool", f"kstarsel {__version__}")

    def add(self, **row):
        self.rows.append([row.get(c, float("nan")) for c in self.columns])

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.meta.items():
            buf.write(f"# {key}: {value}\n")
        buf.write("# units: " + ", ".join(f"{c}={self.units[c]}" for c in self.columns) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta, units = {}, {}
        body = []
        for line in text.splitlines():
            if line.startswith("# units: "):
                for item in line[len("# units: "):].split(", "):
                    name, _, unit = item.partition("=")
                    units[name] = unit
            elif line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = value
            elif line:
                body.append(line)
        reader = csv.reader(body)
        columns = next(reader)
        rows = [[parse(v) for v in row] for row in reader]
        return cls(columns, units, rows, meta)
