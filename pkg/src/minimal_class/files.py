"""CSV layouts shared by the command line subcommands."""

from __future__ import annotations

import csv

import numpy as np

from .core import write_csv
from .errors import BadInput
from .minclass import FrequencyMatrix, MinimalClass
from .scoring import GammaScores, ScoreReport
from .search import ModelPool, PoolEntry

POOL_HEADER = ["model", "names", "size", "mse", "times_seen", "first_seen_at"]
GAMMA_HEADER = ["index", "predictor", "set", "i_star", "delta_star", "gamma"]


def model_key(model) -> str:
    return ";".join(str(j) for j in model)


def parse_model_key(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.split(";"))
    except ValueError as exc:
        raise BadInput(f"cannot parse model {text!r}") from exc


def model_names(model, names) -> str:
    if not names:
        return ""
    return ";".join(names[j] for j in model)


def write_pool(path, pool: ModelPool, names=None) -> None:
    rows = ([model_key(m), model_names(m, names), len(m), e.mse, e.times_seen, e.first_seen_at]
            for m, e in pool.sorted_items())
    write_csv(path, POOL_HEADER, rows)


def read_pool(path) -> tuple[ModelPool, dict[int, str]]:
    """Pool from CSV, plus any index -> name labels found in the ``names`` column."""
    pool = ModelPool()
    labels: dict[int, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"model", "mse"} - set(reader.fieldnames or [])
        if missing:
            raise BadInput(f"{path}: pool file lacks column(s) {sorted(missing)}")
        for row in reader:
            model = parse_model_key(row["model"])
            try:
                mse = float(row["mse"])
                seen = int(row.get("times_seen") or 1)
                first = int(row.get("first_seen_at") or 0)
            except ValueError as exc:
                raise BadInput(f"{path}: bad numeric field in row {row}") from exc
            pool.entries[model] = PoolEntry(mse, seen, first)
            names = (row.get("names") or "").split(";")
            if len(names) == len(model) and all(names):
                labels.update(zip(model, names))
    return pool, labels


def write_gamma(path, report_or_gamma, names) -> None:
    gamma = report_or_gamma.gamma if isinstance(report_or_gamma, ScoreReport) else report_or_gamma
    part = gamma.partition
    dstar = gamma.delta_star()
    rows = []
    for j in range(gamma.p):
        label = part.label(j) if part is not None else ("+" if gamma.gamma[j] > 0 else "out")
        istar = int(gamma.i_star[j]) if gamma.i_star is not None else ""
        dj = float(dstar[j]) if gamma.i_star is not None else ""
        rows.append([j, names[j], label, istar, dj, float(gamma.gamma[j])])
    write_csv(path, GAMMA_HEADER, rows)


def read_gamma(path, p: int | None = None) -> GammaScores:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if "gamma" not in (reader.fieldnames or []):
            raise BadInput(f"{path}: score file needs a 'gamma' column")
        rows = list(reader)
    try:
        if rows and "index" in rows[0]:
            rows.sort(key=lambda r: int(r["index"]))
        values = np.array([float(r["gamma"]) for r in rows])
    except ValueError as exc:
        raise BadInput(f"{path}: non-numeric score") from exc
    if p is not None and values.size != p:
        raise BadInput(f"{path}: {values.size} scores for {p} predictors")
    return GammaScores.from_vector(values)


def write_minimal_classes(path, classes: list[MinimalClass], names=None) -> None:
    rows = []
    for mc in classes:
        for rank, (m, e) in enumerate(mc.models, start=1):
            rows.append([mc.kappa, rank, model_key(m), model_names(m, names), e,
                         e - mc.best_mse, mc.eta])
    write_csv(path, ["size", "rank", "model", "names", "mse", "gap", "eta"], rows)


def write_unique_counts(path, counts: dict[int, int]) -> None:
    write_csv(path, ["size", "unique_models"], sorted(counts.items()))


def write_frequency(path, freq: FrequencyMatrix, names=None) -> None:
    label = [names[j] if names else str(j) for j in freq.predictors]
    rows = [[lab] + [int(v) for v in freq.counts[a]] for a, lab in enumerate(label)]
    write_csv(path, ["predictor"] + label, rows)

