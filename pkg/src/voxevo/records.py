"""CSV persistence for run records.

Two files per run: a per-generation summary and the full lineage. Every file
starts with a comment line carrying the config hash and run seed so artifacts
are traceable; floats are written with repr() and round-trip exactly.
"""

from __future__ import annotations

from pathlib import Path

from .genome import Gene, NUM_GENES
from .evolution import GenerationStats, LineageEntry, RunRecord

GENERATIONS_HEADER = ["generation", "best_fitness", "mean_fitness", "best_id", "best_W"]
LINEAGE_HEADER = [
    "id",
    "parent_id",
    "birth_generation",
    "age_at_end",
    "fitness",
    "W",
    "mode",
    "mutated_s0",
    "mutated_s1",
] + [f"{part}_{k:02d}" for k in range(NUM_GENES) for part in ("s0", "s1")]


def meta_line(config_hash: str, seed: int) -> str:
    return f"# config_hash={config_hash} seed={seed}\n"


def write_generations_csv(record: RunRecord, path, config_hash: str) -> None:
    with open(path, "w") as fh:
        fh.write(meta_line(config_hash, record.seed))
        fh.write(",".join(GENERATIONS_HEADER) + "\n")
        for g in record.generations:
            fh.write(
                f"{g.generation},{g.best_fitness!r},{g.mean_fitness!r},"
                f"{g.best_id},{g.best_window!r}\n"
            )


def write_lineage_csv(record: RunRecord, path, config_hash: str) -> None:
    with open(path, "w") as fh:
        fh.write(meta_line(config_hash, record.seed))
        fh.write(",".join(LINEAGE_HEADER) + "\n")
        for e in record.lineage:
            parent = "" if e.parent_id is None else str(e.parent_id)
            genes = ",".join(f"{g.s0!r},{g.s1!r}" for g in e.genes)
            fh.write(
                f"{e.id},{parent},{e.birth_generation},{e.age_at_end},{e.fitness!r},"
                f"{e.window!r},{e.mode},{int(e.mutated_s0)},{int(e.mutated_s1)},{genes}\n"
            )


class RecordParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _read_rows(path, expected_header):
    path = Path(path)
    meta = {}
    rows = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        k, v = token.split("=", 1)
                        meta[k] = v
                continue
            cells = line.split(",")
            if cells == expected_header:
                continue
            if len(cells) != len(expected_header):
                raise RecordParseError(
                    path, line_no, f"expected {len(expected_header)} columns, got {len(cells)}"
                )
            rows.append((line_no, cells))
    return meta, rows


def read_generations_csv(path) -> tuple[dict, list[GenerationStats]]:
    meta, rows = _read_rows(path, GENERATIONS_HEADER)
    out = []
    for line_no, cells in rows:
        try:
            out.append(
                GenerationStats(
                    int(cells[0]), float(cells[1]), float(cells[2]), int(cells[3]),
                    float(cells[4]),
                )
            )
        except ValueError as err:
            raise RecordParseError(path, line_no, str(err)) from err
    return meta, out


def read_lineage_csv(path) -> tuple[dict, list[LineageEntry]]:
    meta, rows = _read_rows(path, LINEAGE_HEADER)
    out = []
    for line_no, cells in rows:
        try:
            genes = tuple(
                Gene(float(cells[9 + 2 * k]), float(cells[10 + 2 * k]))
                for k in range(NUM_GENES)
            )
            out.append(
                LineageEntry(
                    id=int(cells[0]),
                    parent_id=None if cells[1] == "" else int(cells[1]),
                    birth_generation=int(cells[2]),
                    age_at_end=int(cells[3]),
                    fitness=float(cells[4]),
                    window=float(cells[5]),
                    mode=cells[6],
                    mutated_s0=bool(int(cells[7])),
                    mutated_s1=bool(int(cells[8])),
                    genes=genes,
                )
            )
        except ValueError as err:
            raise RecordParseError(path, line_no, str(err)) from err
    return meta, out
