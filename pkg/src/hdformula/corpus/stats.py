"""Level-group x line-bin x domain statistics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..latex import parse_latex
from .records import DOMAINS

LEVEL_GROUPS = (("[1-2]", 1, 2), ("[3-5]", 3, 5), ("[6-7]", 6, 7))
LINE_BINS = (("A", 1, 3), ("B", 4, 8), ("C", 9, 20), ("D", 21, 51))

Cell = Tuple[str, str, str]


def level_group(level: int) -> Optional[str]:
    for name, lo, hi in LEVEL_GROUPS:
        if lo <= level <= hi:
            return name
    return None


def line_bin(lines: int) -> Optional[str]:
    for name, lo, hi in LINE_BINS:
        if lo <= lines <= hi:
            return name
    return None


def empty_counts() -> Dict[Cell, int]:
    return {
        (g, b, d): 0
        for g, _, _ in LEVEL_GROUPS
        for b, _, _ in LINE_BINS
        for d in DOMAINS
    }


@dataclass
class StatTable:
    counts: Dict[Cell, int] = field(default_factory=empty_counts)
    # (record id, level, lines) for records outside levels 1-7 / lines 1-51
    overflow: List[Tuple[str, int, int]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["level_group", "line_bin", "domain", "count"])
        for (g, b, d), n in self.counts.items():
            writer.writerow([g, b, d, n])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StatTable":
        table = cls()
        for row in csv.DictReader(io.StringIO(text)):
            key = (row["level_group"], row["line_bin"], row["domain"])
            if key not in table.counts:
                raise ValueError(f"unknown cell {key}")
            table.counts[key] = int(row["count"])
        return table

    def grid(self) -> str:
        """Render the table as a domain x (group, bin) text grid."""
        header = ["Class"] + [f"{g}{b}" for g, _, _ in LEVEL_GROUPS for b, _, _ in LINE_BINS]
        rows = [header]
        for d in DOMAINS:
            rows.append(
                [d] + [str(self.counts[(g, b, d)]) for g, _, _ in LEVEL_GROUPS for b, _, _ in LINE_BINS]
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        return "\n".join(
            " ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows
        )


def stat_table(corpus) -> StatTable:
    table = StatTable()
    for rec in corpus:
        ast = parse_latex(rec.latex)
        g = level_group(ast.level)
        b = line_bin(ast.line_count)
        if g is None or b is None or rec.domain not in DOMAINS:
            table.overflow.append((rec.id, ast.level, ast.line_count))
            continue
        table.counts[(g, b, rec.domain)] += 1
    return table
