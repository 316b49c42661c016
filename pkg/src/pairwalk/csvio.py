"""CSV persistence for traces, U sweeps, maps and correlation snapshots.

Comma separated, dot decimal, ``\\n`` line endings, floats in scientific
notation with 12 significant digits.  Failed cells are written as ``nan``.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

from .experiments import CorrelationSnapshot, MapResult, USweepRow
from .observables import ObservableRecord
from .propagator import EvolutionTrace

TIMESERIES_HEADER = ObservableRecord.columns()
USWEEP_HEADER = ("u", "gamma_max", "t_at_max", "gamma_late_avg")
MAP_HEADER = ("theta", "u", "gamma_max", "t_at_max", "gamma_late_avg")
CORRELATION_HEADER = ("m", "n", "prob")


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".11e")


def _write(path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV {path}: {exc.strerror}") from exc


def write_timeseries(trace: EvolutionTrace, path) -> None:
    _write(path, TIMESERIES_HEADER, ([fmt(v) for v in r.as_tuple()] for r in trace.records))


def write_u_sweep(rows: Sequence[USweepRow], path) -> None:
    with_slice = any(r.gamma_slice is not None for r in rows)
    header = USWEEP_HEADER + (("gamma_slice",) if with_slice else ())

    def line(r: USweepRow):
        vals = [r.u, r.gamma_max, r.t_at_max, r.gamma_late_avg]
        if with_slice:
            vals.append(math.nan if r.gamma_slice is None else r.gamma_slice)
        return [fmt(v) for v in vals]

    _write(path, header, (line(r) for r in rows))


def write_map(result: MapResult, path) -> None:
    _write(path, MAP_HEADER, (
        [fmt(c.theta), fmt(c.u), fmt(c.gamma_max), fmt(c.t_at_max), fmt(c.gamma_late_avg)]
        for c in result.cells
    ))


def write_correlation(snapshot: CorrelationSnapshot, path) -> None:
    probs = snapshot.probs
    N = probs.shape[0]
    _write(path, CORRELATION_HEADER, (
        [str(m + 1), str(n + 1), fmt(probs[m, n])] for m in range(N) for n in range(N)
    ))


def write_csv(result, path) -> None:
    """Write any harness result with the schema matching its type."""
    if isinstance(result, EvolutionTrace):
        write_timeseries(result, path)
    elif isinstance(result, MapResult):
        write_map(result, path)
    elif isinstance(result, CorrelationSnapshot):
        write_correlation(result, path)
    elif isinstance(result, (list, tuple)) and all(isinstance(r, USweepRow) for r in result):
        write_u_sweep(result, path)
    else:
        raise TypeError(f"no CSV schema for {type(result).__name__}")


def read_csv(path) -> tuple[list[str], list[list[float]]]:
    """Header and float rows of a file written by :func:`write_csv`."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, rows
