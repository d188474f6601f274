"""Tabular datasets with protected-group and outcome columns.

Loading, validation, splitting, subsampling, and bootstrap resampling.
All stochastic operations are pure functions of (inputs, seed).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError


class Task(enum.Enum):
    BINARY = "binary"
    REGRESSION = "regression"


@dataclass(frozen=True)
class Schema:
    """Column-role mapping for a CSV file.

    Any column not named as group/outcome/score and not listed in
    ``ignore`` is treated as a feature.
    """

    group: str
    outcome: str
    task: Task
    score: str | None = None
    ignore: tuple[str, ...] = ()

    @staticmethod
    def from_file(path) -> "Schema":
        """Parse a key=value schema file (UTF-8, one pair per line)."""
        keys: dict[str, str] = {}
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for lineno, raw in enumerate(fh, 1):
                    line = raw.strip()
                    if not line or line.startswith("#"):
                        continue
                    if "=" not in line:
                        raise ConfigError(
                            f"{path}:{lineno}: expected key=value, got {line!r}"
                        )
                    key, _, value = line.partition("=")
                    keys[key.strip()] = value.strip()
        except OSError as exc:
            raise ConfigError(f"cannot read schema file {path}: {exc}") from exc
        for required in ("group", "outcome", "task"):
            if required not in keys:
                raise ConfigError(f"schema {path} is missing '{required}='")
        try:
            task = Task(keys["task"])
        except ValueError:
            raise ConfigError(
                f"schema {path}: task must be 'binary' or 'regression', "
                f"got {keys['task']!r}"
            ) from None
        ignore = tuple(
            c.strip() for c in keys.get("ignore", "").split(",") if c.strip()
        )
        return Schema(
            group=keys["group"],
            outcome=keys["outcome"],
            task=task,
            score=keys.get("score") or None,
            ignore=ignore,
        )


@dataclass(frozen=True)
class Dataset:
    """An immutable audit dataset: features X, protected group A, outcome Y.

    Group labels are contiguous integers 0..G-1; ``group_names`` maps them
    back to their source values.  ``score`` optionally carries externally
    supplied model scores aligned with the rows.
    """

    features: np.ndarray
    group: np.ndarray
    outcome: np.ndarray
    task: Task
    column_names: tuple[str, ...]
    group_names: tuple[str, ...] = ()
    score: np.ndarray | None = None

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        group = np.ascontiguousarray(self.group, dtype=np.int64)
        outcome = np.ascontiguousarray(self.outcome, dtype=np.float64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "outcome", outcome)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n = features.shape[0]
        if group.shape != (n,) or outcome.shape != (n,):
            raise DataError("group/outcome length does not match feature rows")
        if n == 0:
            raise DataError("dataset has no rows")
        if not np.all(np.isfinite(features)):
            raise DataError("non-finite feature value")
        if group.min() < 0:
            raise DataError("negative group index")
        # Row subsets (subsampling, bootstrap) may lose a group entirely;
        # emptiness is checked at load time and by the consuming operation.
        if self.task is Task.BINARY and not np.all(np.isin(outcome, (0.0, 1.0))):
            bad = outcome[~np.isin(outcome, (0.0, 1.0))][0]
            raise DataError(f"binary task but outcome value {bad!r} not in {{0,1}}")
        if not self.group_names:
            object.__setattr__(
                self, "group_names", tuple(str(g) for g in range(group.max() + 1))
            )
        if self.score is not None:
            score = np.ascontiguousarray(self.score, dtype=np.float64)
            if score.shape != (n,):
                raise DataError("score length does not match feature rows")
            object.__setattr__(self, "score", score)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]

    @property
    def n_groups(self) -> int:
        return int(self.group.max()) + 1

    def group_indices(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.group == a)

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset/reordering; group relabeling is *not* performed, so
        every group must survive in the result."""
        indices = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            features=self.features[indices],
            group=self.group[indices],
            outcome=self.outcome[indices],
            score=None if self.score is None else self.score[indices],
        )


@dataclass(frozen=True)
class DataSplit:
    train: Dataset
    test: Dataset
    seed: int
    train_indices: np.ndarray = field(repr=False, default=None)
    test_indices: np.ndarray = field(repr=False, default=None)


def _parse_cell(text: str):
    """Return a float, or None if the cell is not numeric."""
    try:
        return float(text)
    except ValueError:
        return None


def load_dataset(path, schema: Schema) -> Dataset:
    """Load a CSV file under a column-role schema.

    Categorical feature columns (any non-numeric cell) are one-hot expanded
    with categories in lexicographic order; column names become
    ``<col>=<category>``.  Missing cells are rejected outright.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    return _load_csv_text(text, schema, origin=str(path))


def _load_csv_text(text: str, schema: Schema, origin: str = "<memory>") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{origin}: empty file") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DataError(f"{origin}: duplicate column names in header")
    for needed in (schema.group, schema.outcome):
        if needed not in header:
            raise DataError(f"{origin}: schema column {needed!r} not in header")
    if schema.score is not None and schema.score not in header:
        raise DataError(f"{origin}: score column {schema.score!r} not in header")
    special = {schema.group, schema.outcome, schema.score} | set(schema.ignore)
    feature_cols = [h for h in header if h not in special]
    if not feature_cols:
        raise DataError(f"{origin}: no feature columns left under schema")

    rows = []
    for lineno, row in enumerate(reader, 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise DataError(
                f"{origin}:{lineno}: expected {len(header)} cells, got {len(row)}"
            )
        cells = [c.strip() for c in row]
        if any(c == "" for c in cells):
            raise DataError(f"{origin}:{lineno}: missing value")
        rows.append(cells)
    if not rows:
        raise DataError(f"{origin}: no data rows")

    col = {name: [r[i] for r in rows] for i, name in enumerate(header)}

    # Outcome must be numeric.
    outcome = np.empty(len(rows))
    for i, cell in enumerate(col[schema.outcome]):
        value = _parse_cell(cell)
        if value is None:
            raise DataError(
                f"{origin}: non-numeric outcome value {cell!r} in row {i + 2}"
            )
        outcome[i] = value
    if schema.task is Task.BINARY and not np.all(np.isin(outcome, (0.0, 1.0))):
        bad = outcome[~np.isin(outcome, (0.0, 1.0))][0]
        raise DataError(f"{origin}: binary outcome value {bad} not in {{0,1}}")

    # Group column: numeric small ints pass through, otherwise categories
    # are mapped to 0..G-1 in lexicographic order.
    raw_group = col[schema.group]
    numeric_group = [_parse_cell(c) for c in raw_group]
    if all(v is not None and float(v).is_integer() and v >= 0 for v in numeric_group):
        group = np.array([int(v) for v in numeric_group], dtype=np.int64)
        present = sorted(set(group.tolist()))
        remap = {g: i for i, g in enumerate(present)}
        group_names = tuple(str(g) for g in present)
        group = np.array([remap[g] for g in group], dtype=np.int64)
    else:
        cats = sorted(set(raw_group))
        remap = {c: i for i, c in enumerate(cats)}
        group = np.array([remap[c] for c in raw_group], dtype=np.int64)
        group_names = tuple(cats)

    # Features: numeric columns pass through, categorical are one-hot.
    blocks: list[np.ndarray] = []
    names: list[str] = []
    for name in feature_cols:
        parsed = [_parse_cell(c) for c in col[name]]
        if all(v is not None for v in parsed):
            blocks.append(np.asarray(parsed, dtype=np.float64)[:, None])
            names.append(name)
        else:
            cats = sorted(set(col[name]))
            for cat in cats:
                indicator = np.fromiter(
                    (1.0 if c == cat else 0.0 for c in col[name]),
                    dtype=np.float64,
                    count=len(rows),
                )
                blocks.append(indicator[:, None])
                names.append(f"{name}={cat}")
    features = np.hstack(blocks)

    score = None
    if schema.score is not None:
        score = np.empty(len(rows))
        for i, cell in enumerate(col[schema.score]):
            value = _parse_cell(cell)
            if value is None:
                raise DataError(f"{origin}: non-numeric score value {cell!r}")
            score[i] = value

    return Dataset(
        features=features,
        group=group,
        outcome=outcome,
        task=schema.task,
        column_names=tuple(names),
        group_names=group_names,
        score=score,
    )


def write_dataset(d: Dataset, path) -> None:
    """Write a Dataset to CSV in the canonical schema (group, outcome,
    then feature columns).  load(write(d)) reproduces d."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["group", "outcome"] + list(d.column_names)
        if d.score is not None:
            header.append("score")
        writer.writerow(header)
        for i in range(d.n):
            row = [str(int(d.group[i])), repr(float(d.outcome[i]))]
            row += [repr(float(v)) for v in d.features[i]]
            if d.score is not None:
                row.append(repr(float(d.score[i])))
            writer.writerow(row)


def canonical_schema(d: Dataset) -> Schema:
    return Schema(
        group="group",
        outcome="outcome",
        task=d.task,
        score="score" if d.score is not None else None,
    )


def split(
    d: Dataset,
    test_fraction: float,
    seed: int,
    stratify_by_group: bool = False,
) -> DataSplit:
    """Deterministic train/test split.

    Stratified mode preserves per-group proportions within +-1 row.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction {test_fraction} not in (0,1)")
    n_test = int(round(d.n * test_fraction))
    n_test = min(max(n_test, 1), d.n - 1)
    rng = np.random.default_rng(seed)
    if stratify_by_group:
        test_parts = []
        train_parts = []
        for a in range(d.n_groups):
            rows = d.group_indices(a)
            if rows.size < 2:
                raise DataError(
                    f"group {a} has {rows.size} row(s); cannot stratify"
                )
            t = int(round(rows.size * test_fraction))
            t = min(max(t, 1), rows.size - 1)
            perm = rng.permutation(rows.size)
            test_parts.append(rows[perm[:t]])
            train_parts.append(rows[perm[t:]])
        test_idx = np.sort(np.concatenate(test_parts))
        train_idx = np.sort(np.concatenate(train_parts))
    else:
        perm = rng.permutation(d.n)
        test_idx = np.sort(perm[:n_test])
        train_idx = np.sort(perm[n_test:])
    assert train_idx.size + test_idx.size == d.n
    assert np.intersect1d(train_idx, test_idx).size == 0
    return DataSplit(
        train=d.take(train_idx),
        test=d.take(test_idx),
        seed=seed,
        train_indices=train_idx,
        test_indices=test_idx,
    )


def subsample(d: Dataset, m: int, seed: int) -> Dataset:
    """m rows drawn without replacement, deterministic given seed."""
    if not 1 <= m <= d.n:
        raise DataError(f"subsample size {m} not in [1, {d.n}]")
    rng = np.random.default_rng(seed)
    idx = rng.choice(d.n, size=m, replace=False)
    return d.take(idx)


def bootstrap_resample(d: Dataset, m: int, seed: int) -> Dataset:
    """m rows drawn with replacement, deterministic given seed."""
    if m < 1:
        raise DataError(f"bootstrap size {m} must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, d.n, size=m)
    return d.take(idx)


def derive_seed(master: int, *context) -> int:
    """Derive a child seed from a master seed and hashable context items.

    Uses numpy's SeedSequence so the whole audit reproduces from one knob.
    """
    entropy = [int(master) & 0xFFFFFFFF]
    for item in context:
        if isinstance(item, str):
            entropy.extend(item.encode("utf-8"))
        else:
            entropy.append(int(item) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
