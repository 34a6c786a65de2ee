"""Line-oriented text persistence for campaign artifacts.

Every file starts with `# key: value` header lines (tool version, seed, and
config hash when available) followed by whitespace-separated data rows.
Floats are written with repr so files reparse losslessly and reruns with the
same seed are byte-identical.
"""

from __future__ import annotations

import os

import numpy as np

from . import __version__
from .analysis import PercolationCurve
from .engine import STATE_NAMES, Snapshot, SpanningHistogram

_STATE_BY_NAME = {name: code for code, name in STATE_NAMES.items()}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_header(fh, kind: str, meta: dict) -> None:
    fh.write(f"# barrierperc {kind}\n")
    fh.write(f"# version: {__version__}\n")
    for key, value in meta.items():
        fh.write(f"# {key}: {_fmt(value)}\n")


def read_header(path: str) -> dict:
    """Header key/value pairs of any barrierperc text file."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            elif "kind" not in meta:
                meta["kind"] = body.split()[-1]
    return meta


def save_histogram(path: str, hist: SpanningHistogram, extra_meta: dict | None = None) -> None:
    """Sparse `n count` rows plus a `nonspanning` line, with campaign header."""
    meta = {
        "L": hist.L,
        "model": hist.model,
        "param_name": hist.param_name,
        "param": hist.param,
        "replicas": hist.replicas,
        "seed": hist.seed if hist.seed is not None else "-",
        "spanning": hist.spanning,
        "nb_count": hist.nb_count,
        "nb_sum": hist.nb_sum,
        "nb_sumsq": hist.nb_sumsq,
    }
    meta.update(extra_meta or {})
    with open(path, "w") as fh:
        _write_header(fh, "histogram", meta)
        for n in np.flatnonzero(hist.counts):
            fh.write(f"{n} {hist.counts[n]}\n")
        fh.write(f"nonspanning {hist.nonspanning}\n")


def load_histogram(path: str) -> SpanningHistogram:
    meta = read_header(path)
    L = int(meta["L"])
    counts = np.zeros(L * L + 1, dtype=np.int64)
    nonspanning = 0
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            first, value = line.split()
            if first == "nonspanning":
                nonspanning = int(value)
            else:
                counts[int(first)] = int(value)
    seed = None if meta["seed"] == "-" else int(meta["seed"])
    return SpanningHistogram(
        L=L,
        model=meta["model"],
        param_name=meta["param_name"],
        param=float(meta["param"]),
        replicas=int(meta["replicas"]),
        counts=counts,
        nonspanning=nonspanning,
        nb_count=int(meta["nb_count"]),
        nb_sum=int(meta["nb_sum"]),
        nb_sumsq=int(meta["nb_sumsq"]),
        seed=seed,
        spanning=meta.get("spanning", "vertical"),
    )


def save_curve(path: str, curve: PercolationCurve, meta: dict | None = None) -> None:
    """Two-column `chi P` rows with campaign header."""
    with open(path, "w") as fh:
        _write_header(fh, "curve", dict(meta or {}, L=curve.L))
        for chi, p in zip(curve.chi, curve.P):
            fh.write(f"{_fmt(chi)} {_fmt(p)}\n")


def load_curve(path: str) -> tuple[PercolationCurve, dict]:
    meta = read_header(path)
    data = np.loadtxt(path, comments="#", ndmin=2)
    curve = PercolationCurve(chi=data[:, 0], P=data[:, 1], L=int(meta["L"]))
    return curve, meta


def save_table(path: str, kind: str, columns: list[str], rows, meta: dict | None = None) -> None:
    """Generic whitespace table with a declared column list."""
    with open(path, "w") as fh:
        _write_header(fh, kind, dict(meta or {}, columns=" ".join(columns)))
        for row in rows:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _maybe_float(token: str):
    try:
        return float(token)
    except ValueError:
        return token


def load_table(path: str) -> tuple[list[str], list[tuple], dict]:
    """Rows as tuples; numeric cells come back as floats, flags as strings."""
    meta = read_header(path)
    columns = meta.get("columns", "").split()
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            rows.append(tuple(_maybe_float(tok) for tok in line.split()))
    return columns, rows, meta


def table_column(rows: list[tuple], columns: list[str], name: str) -> np.ndarray:
    """One named numeric column of a loaded table."""
    k = columns.index(name)
    return np.array([row[k] for row in rows], dtype=float)


def save_fit_records(path: str, records: list[dict], meta: dict | None = None) -> None:
    """Key-value fit records: parameters with standard errors plus diagnostics.

    Each record is a block
        fit <kind>
        model <name>
        param <name> <value> <se>
        diag <name> <value>
        end
    """
    with open(path, "w") as fh:
        _write_header(fh, "fit-records", meta or {})
        for rec in records:
            fh.write(f"fit {rec['fit']}\n")
            fh.write(f"model {rec['model']}\n")
            for name, value, se in rec.get("params", []):
                fh.write(f"param {name} {_fmt(value)} {_fmt(se)}\n")
            for name, value in rec.get("diagnostics", []):
                fh.write(f"diag {name} {_fmt(value)}\n")
            fh.write("end\n")


def load_fit_records(path: str) -> list[dict]:
    records = []
    current = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            parts = line.split()
            if parts[0] == "fit":
                current = {"fit": parts[1], "model": None, "params": [], "diagnostics": []}
            elif parts[0] == "model":
                current["model"] = parts[1]
            elif parts[0] == "param":
                current["params"].append((parts[1], float(parts[2]), float(parts[3])))
            elif parts[0] == "diag":
                value = parts[2]
                try:
                    value = float(value)
                except ValueError:
                    pass
                current["diagnostics"].append((parts[1], value))
            elif parts[0] == "end":
                records.append(current)
                current = None
    return records


def save_snapshot(path: str, snapshot: Snapshot, meta: dict | None = None) -> None:
    """Per-site `i j state` rows for external rendering."""
    L = snapshot.L
    with open(path, "w") as fh:
        _write_header(
            fh, "snapshot",
            dict(meta or {}, L=L, largest_size=snapshot.largest_size,
                 spanning=snapshot.spanning),
        )
        for label, state in enumerate(snapshot.states):
            fh.write(f"{label // L} {label % L} {STATE_NAMES[state]}\n")


def load_snapshot(path: str) -> tuple[Snapshot, dict]:
    meta = read_header(path)
    L = int(meta["L"])
    states = np.zeros(L * L, dtype=np.uint8)
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            i, j, name = line.split()
            states[int(i) * L + int(j)] = _STATE_BY_NAME[name]
    snapshot = Snapshot(
        L=L,
        states=states,
        largest_size=int(meta["largest_size"]),
        spanning=meta["spanning"] == "True",
    )
    return snapshot, meta


def atomic_write(path: str, writer) -> None:
    """Write through a temp file then rename, so partial files never land."""
    tmp = path + ".tmp"
    writer(tmp)
    os.replace(tmp, path)
