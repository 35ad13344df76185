"""Long-format choice data: loading, validation, and design-matrix construction.

The canonical input is a long CSV with one row per (decision maker,
alternative): integer ``obs_id`` and ``alt_id`` columns, a 0/1 ``choice``
column, and any number of raw explanatory columns (numeric or categorical).
A :class:`DesignSpec` then maps raw columns to numeric model terms: plain
linear terms, piecewise-linear terms around a knot, category interactions,
and alternative-specific constants.
"""

from __future__ import annotations

import json
import sys
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .exceptions import (
    DataParseError,
    SchemaError,
    SpecError,
    ValidationError,
)

__all__ = [
    "ChoiceDataset",
    "ConstantTerm",
    "DesignMatrix",
    "DesignSpec",
    "InteractionTerm",
    "LinearTerm",
    "PiecewiseLinearTerm",
    "build_design",
    "load_long_csv",
    "load_design_spec",
    "piecewise_linear_value",
    "wide_to_long",
    "write_long_csv",
]

RESERVED_COLUMNS = ("obs_id", "alt_id", "choice")


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# Dataset container
# ---------------------------------------------------------------------------

@dataclass
class ChoiceDataset:
    """Validated long-format choice data.

    Rows are grouped contiguously by ``obs_id`` and row order is preserved
    from the source. All arrays are read-only after construction; treat
    instances as immutable and safe to share across threads.

    Attributes
    ----------
    obs_ids : ndarray of int, shape (n_rows,)
        Decision-maker id of each row.
    alt_ids : ndarray of int, shape (n_rows,)
        Alternative id of each row.
    choice : ndarray of int, shape (n_rows,)
        1 on the single chosen row of each choice set, else 0.
    variables : dict of str -> ndarray, shape (n_rows,)
        Raw explanatory columns; float64 for numeric columns, object
        (stripped strings) for categorical ones.
    """

    obs_ids: np.ndarray
    alt_ids: np.ndarray
    choice: np.ndarray
    variables: dict[str, np.ndarray] = field(default_factory=dict)
    set_starts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.obs_ids = np.asarray(self.obs_ids, dtype=np.int64)
        self.alt_ids = np.asarray(self.alt_ids, dtype=np.int64)
        self.choice = np.asarray(self.choice, dtype=np.int64)
        n = self.obs_ids.shape[0]
        if self.alt_ids.shape[0] != n or self.choice.shape[0] != n:
            raise ValidationError("obs_ids, alt_ids and choice must have equal length")

        # Choice sets must be contiguous row blocks so per-set reductions can
        # use index offsets instead of scatter operations.
        boundary = np.flatnonzero(np.diff(self.obs_ids) != 0) + 1
        starts = np.concatenate(([0], boundary)) if n else np.array([], dtype=np.int64)
        block_ids = self.obs_ids[starts] if n else starts
        if np.unique(block_ids).size != block_ids.size:
            scattered = sorted(
                np.unique(block_ids[pd.Series(block_ids).duplicated().to_numpy()]).tolist()
            )
            raise ValidationError(
                f"rows of each obs_id must be contiguous; scattered obs_ids: {scattered}"
            )
        self.set_starts = _read_only(starts.astype(np.int64))

        self._validate_rows()
        self.obs_ids = _read_only(self.obs_ids)
        self.alt_ids = _read_only(self.alt_ids)
        self.choice = _read_only(self.choice)
        converted = {}
        for name, values in self.variables.items():
            if name in RESERVED_COLUMNS:
                raise ValidationError(f"variable name {name!r} is reserved")
            values = np.asarray(values)
            if values.shape[0] != n:
                raise ValidationError(f"variable {name!r} has wrong length")
            if values.dtype.kind in "fiub":
                values = values.astype(np.float64)
                if not np.isfinite(values).all():
                    bad = int(np.flatnonzero(~np.isfinite(values))[0])
                    raise ValidationError(
                        f"variable {name!r} has a non-finite value at row {bad}"
                    )
            else:
                values = np.array([str(v).strip() for v in values], dtype=object)
            converted[name] = _read_only(values)
        self.variables = converted

    def _validate_rows(self):
        pairs = pd.MultiIndex.from_arrays([self.obs_ids, self.alt_ids])
        dup = pairs.duplicated()
        if dup.any():
            offenders = sorted({(int(o), int(a)) for o, a in pairs[dup]})
            raise ValidationError(f"duplicate (obs_id, alt_id) pairs: {offenders[:10]}")
        chosen = np.add.reduceat(self.choice, self.set_starts) if self.n_rows else np.array([])
        bad = np.flatnonzero(chosen != 1)
        if bad.size:
            ids = self.obs_ids[self.set_starts[bad]].tolist()
            raise ValidationError(
                f"each choice set needs exactly one row with choice=1; offending obs_ids: {ids}"
            )
        if not np.isin(self.choice, (0, 1)).all():
            raise ValidationError("choice column must contain only 0 and 1")

    # -- shape helpers ------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return int(self.obs_ids.shape[0])

    @property
    def n_obs(self) -> int:
        return int(self.set_starts.shape[0])

    @property
    def set_sizes(self) -> np.ndarray:
        ends = np.concatenate((self.set_starts[1:], [self.n_rows]))
        return ends - self.set_starts

    @property
    def choice_sets(self) -> dict[int, set]:
        """Map obs_id -> set of available alt_ids."""
        out: dict[int, set] = {}
        sizes = self.set_sizes
        for start, size in zip(self.set_starts, sizes):
            out[int(self.obs_ids[start])] = {
                int(a) for a in self.alt_ids[start : start + size]
            }
        return out

    @property
    def row_obs_index(self) -> np.ndarray:
        """0-based choice-set index of each row."""
        idx = np.zeros(self.n_rows, dtype=np.int64)
        idx[self.set_starts[1:]] = 1
        return np.cumsum(idx)

    def variable(self, name: str) -> np.ndarray:
        try:
            return self.variables[name]
        except KeyError:
            raise SpecError(f"unknown variable {name!r}") from None

    def numeric_variable(self, name: str) -> np.ndarray:
        values = self.variable(name)
        if values.dtype.kind != "f":
            raise SpecError(f"variable {name!r} is categorical, expected numeric")
        return values

    def subset(self, row_mask: np.ndarray) -> "ChoiceDataset":
        """New dataset keeping whole choice sets whose rows are all selected.

        The mask must keep or drop each choice set as a unit.
        """
        row_mask = np.asarray(row_mask, dtype=bool)
        return ChoiceDataset(
            obs_ids=self.obs_ids[row_mask].copy(),
            alt_ids=self.alt_ids[row_mask].copy(),
            choice=self.choice[row_mask].copy(),
            variables={k: v[row_mask].copy() for k, v in self.variables.items()},
        )

    def with_variables(self, new_variables: dict[str, np.ndarray]) -> "ChoiceDataset":
        """Copy of this dataset with some variables replaced."""
        merged = {k: v.copy() for k, v in self.variables.items()}
        for name, values in new_variables.items():
            merged[name] = np.asarray(values).copy()
        return ChoiceDataset(
            obs_ids=self.obs_ids.copy(),
            alt_ids=self.alt_ids.copy(),
            choice=self.choice.copy(),
            variables=merged,
        )

    def to_frame(self) -> pd.DataFrame:
        data = {
            "obs_id": self.obs_ids,
            "alt_id": self.alt_ids,
            "choice": self.choice,
        }
        for name, values in self.variables.items():
            data[name] = values
        return pd.DataFrame(data)


# ---------------------------------------------------------------------------
# CSV loading
# ---------------------------------------------------------------------------

def _require_columns(frame: pd.DataFrame, names, where: str):
    missing = [c for c in names if c not in frame.columns]
    if missing:
        raise SchemaError(f"{where}: missing column(s) {missing}")


def _parse_int_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column]
    numeric = pd.to_numeric(raw, errors="coerce")
    bad = numeric.isna() | (numeric != np.floor(numeric.fillna(0)))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataParseError(
            f"column {column!r}: cannot parse {raw.iloc[row]!r} as integer (data row {row + 1})"
        )
    return numeric.to_numpy(dtype=np.int64)


def _parse_variable_column(frame, column, categorical, value_map):
    raw = frame[column].astype(str).str.strip()
    if value_map is not None:
        mapping = {str(k).strip(): float(v) for k, v in value_map.items()}
        mapped = raw.map(mapping)
        bad = mapped.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataParseError(
                f"column {column!r}: value {raw.iloc[row]!r} not in value map (data row {row + 1})"
            )
        return mapped.to_numpy(dtype=np.float64)
    if categorical:
        return raw.to_numpy(dtype=object)
    numeric = pd.to_numeric(raw, errors="coerce")
    n_ok = numeric.notna().sum()
    if n_ok == 0 and len(raw):
        # Nothing parses as a number: a plain categorical column.
        return raw.to_numpy(dtype=object)
    bad = numeric.isna() | ~np.isfinite(numeric.fillna(0.0))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataParseError(
            f"column {column!r}: non-finite or unparseable value {raw.iloc[row]!r} "
            f"(data row {row + 1})"
        )
    return numeric.to_numpy(dtype=np.float64)


def load_long_csv(path, schema: dict | None = None) -> ChoiceDataset:
    """Load and validate a long-format choice CSV.

    Parameters
    ----------
    path : str or Path
        CSV with a header row, UTF-8, "." decimal separator.
    schema : dict, optional
        Column-name map and parsing options:

        ``obs_id``, ``alt_id``, ``choice``
            Names of the id/indicator columns (default: literal names).
        ``categorical``
            List of columns to load as categorical strings.
        ``value_maps``
            ``{column: {raw_value: coded_number}}`` recodings applied during
            parsing (e.g. a 0/1/2/3 size code mapped onto 0/0.1/0.2/0.3).
        ``drop``
            Columns to ignore entirely.
        ``wide``
            If present, the file is wide (one row per decision maker) and is
            converted first; see :func:`wide_to_long` for the keys.
    """
    schema = dict(schema or {})
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if "wide" in schema:
        frame = wide_to_long(frame, **schema["wide"])
        schema = {k: v for k, v in schema.items() if k != "wide"}
    return dataset_from_frame(frame, schema)


def dataset_from_frame(frame: pd.DataFrame, schema: dict | None = None) -> ChoiceDataset:
    """Build a :class:`ChoiceDataset` from an already-loaded dataframe."""
    schema = dict(schema or {})
    obs_col = schema.get("obs_id", "obs_id")
    alt_col = schema.get("alt_id", "alt_id")
    choice_col = schema.get("choice", "choice")
    _require_columns(frame, [obs_col, alt_col, choice_col], "choice data")

    categorical = set(schema.get("categorical", ()))
    value_maps = schema.get("value_maps", {})
    drop = set(schema.get("drop", ()))

    obs_ids = _parse_int_column(frame, obs_col)
    alt_ids = _parse_int_column(frame, alt_col)
    choice = _parse_int_column(frame, choice_col)

    variables = {}
    for column in frame.columns:
        if column in (obs_col, alt_col, choice_col) or column in drop:
            continue
        variables[column] = _parse_variable_column(
            frame, column, column in categorical, value_maps.get(column)
        )
    return ChoiceDataset(obs_ids=obs_ids, alt_ids=alt_ids, choice=choice, variables=variables)


def wide_to_long(
    frame: pd.DataFrame,
    obs_id: str,
    chosen_alt: str,
    stubnames: list[str],
    alt_ids: list[int],
    sep: str = "_",
) -> pd.DataFrame:
    """Convert one-row-per-decision-maker data to the long layout.

    Alternative-varying columns must be named ``{stub}{sep}{alt_id}``; any
    other column is treated as constant across alternatives and replicated.
    ``chosen_alt`` holds the alt_id that was picked and becomes the 0/1
    ``choice`` column.
    """
    _require_columns(frame, [obs_id, chosen_alt], "wide data")
    for stub in stubnames:
        _require_columns(frame, [f"{stub}{sep}{a}" for a in alt_ids], "wide data")

    constant_cols = [
        c
        for c in frame.columns
        if c not in (obs_id, chosen_alt)
        and not any(c == f"{s}{sep}{a}" for s in stubnames for a in alt_ids)
    ]
    blocks = []
    for alt in alt_ids:
        block = pd.DataFrame(
            {
                "obs_id": frame[obs_id],
                "alt_id": alt,
                "choice": (
                    pd.to_numeric(frame[chosen_alt]) == alt
                ).astype(int),
            }
        )
        for stub in stubnames:
            block[stub] = frame[f"{stub}{sep}{alt}"]
        for c in constant_cols:
            block[c] = frame[c]
        blocks.append(block)
    long = pd.concat(blocks, ignore_index=True)
    long = long.sort_values(["obs_id", "alt_id"], kind="stable").reset_index(drop=True)
    return long


def write_long_csv(dataset: ChoiceDataset, path):
    """Write the canonical long CSV; reloading reproduces the dataset."""
    frame = dataset.to_frame()
    float_cols = [c for c in frame.columns if frame[c].dtype.kind == "f"]
    for c in float_cols:
        frame[c] = frame[c].map(repr)
    frame.to_csv(path, index=False)


# ---------------------------------------------------------------------------
# Piecewise-linear encoding
# ---------------------------------------------------------------------------

def piecewise_linear_value(x, knot: float, segment: str):
    """Piecewise-linear basis value around ``knot``.

    ``below`` is min(x, knot) and ``above`` is max(x - knot, 0), so the two
    segments always sum back to x and the plain linear model stays nested.
    """
    if not np.isfinite(knot):
        raise SpecError("piecewise-linear knot must be finite")
    x = np.asarray(x, dtype=np.float64)
    if segment == "below":
        result = np.minimum(x, knot)
    elif segment == "above":
        result = np.maximum(x - knot, 0.0)
    else:
        raise SpecError(f"segment must be 'below' or 'above', got {segment!r}")
    return result if result.ndim else float(result)


# ---------------------------------------------------------------------------
# Design specification
# ---------------------------------------------------------------------------

def _normalize_alts(alternatives) -> tuple[int, ...] | None:
    if alternatives is None:
        return None
    return tuple(int(a) for a in alternatives)


@dataclass(frozen=True)
class LinearTerm:
    """A raw numeric variable entered linearly."""

    variable: str
    name: str
    alternatives: tuple[int, ...] | None = None

    def column(self, dataset: ChoiceDataset) -> np.ndarray:
        return dataset.numeric_variable(self.variable).copy()


@dataclass(frozen=True)
class PiecewiseLinearTerm:
    """One segment of a piecewise-linear encoding of a numeric variable."""

    variable: str
    knot: float
    segment: str
    name: str
    alternatives: tuple[int, ...] | None = None

    def column(self, dataset: ChoiceDataset) -> np.ndarray:
        return piecewise_linear_value(
            dataset.numeric_variable(self.variable), self.knot, self.segment
        )


@dataclass(frozen=True)
class InteractionTerm:
    """variable x indicator(category_variable == category_value).

    With ``knot``/``segment`` set, the variable is piecewise-transformed
    before multiplying, so e.g. a below-knot price term can differ by body
    type.
    """

    variable: str
    category_variable: str
    category_value: str
    name: str
    alternatives: tuple[int, ...] | None = None
    knot: float | None = None
    segment: str | None = None

    def column(self, dataset: ChoiceDataset) -> np.ndarray:
        if self.knot is not None:
            base = piecewise_linear_value(
                dataset.numeric_variable(self.variable), self.knot, self.segment
            )
        else:
            base = dataset.numeric_variable(self.variable).copy()
        categories = dataset.variable(self.category_variable)
        if categories.dtype.kind == "f":
            indicator = np.isclose(
                categories, float(self.category_value), rtol=0.0, atol=1e-12
            )
        else:
            wanted = str(self.category_value).strip()
            indicator = np.array([v == wanted for v in categories], dtype=bool)
        if not indicator.any():
            warnings.warn(
                f"category value {self.category_value!r} of {self.category_variable!r} "
                f"absent from data; term {self.name!r} is a zero column",
                stacklevel=3,
            )
        return base * indicator


@dataclass(frozen=True)
class ConstantTerm:
    """Alternative-specific constant: 1 on the listed alternatives."""

    name: str
    alternatives: tuple[int, ...]

    def column(self, dataset: ChoiceDataset) -> np.ndarray:
        return np.ones(dataset.n_rows, dtype=np.float64)


Term = LinearTerm | PiecewiseLinearTerm | InteractionTerm | ConstantTerm


@dataclass(frozen=True)
class DesignSpec:
    """Ordered list of model terms; one design-matrix column per term."""

    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        names = [t.name for t in self.terms]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SpecError(f"duplicate term names: {dupes}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def variables_for_alt(self, alt_id: int) -> list[str]:
        """Raw variables whose terms apply to the given alternative."""
        seen: list[str] = []
        for term in self.terms:
            if term.alternatives is not None and alt_id not in term.alternatives:
                continue
            for var in (
                getattr(term, "variable", None),
                getattr(term, "category_variable", None),
            ):
                if var is not None and var not in seen:
                    seen.append(var)
        return seen

    def to_dict(self) -> dict:
        entries = []
        for term in self.terms:
            entry: dict = {"kind": _TERM_KINDS[type(term)], "name": term.name}
            for key in ("variable", "knot", "segment", "category_variable", "category_value"):
                value = getattr(term, key, None)
                if value is not None:
                    entry[key] = value
            if term.alternatives is not None:
                entry["alternatives"] = list(term.alternatives)
            entries.append(entry)
        return {"terms": entries}

    @classmethod
    def from_dict(cls, payload: dict) -> "DesignSpec":
        try:
            entries = payload["terms"]
        except (KeyError, TypeError):
            raise SpecError("design spec must contain a 'terms' list") from None
        return cls(terms=tuple(_term_from_entry(e) for e in entries))


_TERM_KINDS = {
    LinearTerm: "linear",
    PiecewiseLinearTerm: "piecewise_linear",
    InteractionTerm: "interaction",
    ConstantTerm: "constant",
}


def _term_from_entry(entry: dict) -> Term:
    kind = entry.get("kind")
    name = entry.get("name")
    if not name:
        raise SpecError(f"term entry missing a name: {entry!r}")
    alts = _normalize_alts(entry.get("alternatives"))
    if kind == "linear":
        return LinearTerm(variable=entry["variable"], name=name, alternatives=alts)
    if kind == "piecewise_linear":
        return PiecewiseLinearTerm(
            variable=entry["variable"],
            knot=float(entry["knot"]),
            segment=entry["segment"],
            name=name,
            alternatives=alts,
        )
    if kind == "interaction":
        knot = entry.get("knot")
        return InteractionTerm(
            variable=entry["variable"],
            category_variable=entry["category_variable"],
            category_value=entry["category_value"],
            name=name,
            alternatives=alts,
            knot=None if knot is None else float(knot),
            segment=entry.get("segment"),
        )
    if kind == "constant":
        if alts is None:
            raise SpecError(f"constant term {name!r} must list its alternatives")
        return ConstantTerm(name=name, alternatives=alts)
    raise SpecError(f"unknown term kind {kind!r}")


def load_design_spec(path) -> DesignSpec:
    """Read a DesignSpec from a JSON or TOML file."""
    return DesignSpec.from_dict(load_config(path))


def load_config(path) -> dict:
    """Read a JSON or TOML mapping file (extension decides the parser)."""
    text_path = str(path)
    if text_path.endswith(".toml"):
        if sys.version_info >= (3, 11):
            import tomllib
        else:  # pragma: no cover - exercised only on 3.10
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Design matrix
# ---------------------------------------------------------------------------

@dataclass
class DesignMatrix:
    """Numeric design matrix aligned row-for-row with its source dataset."""

    values: np.ndarray
    column_names: tuple[str, ...]
    obs_ids: np.ndarray
    alt_ids: np.ndarray
    set_starts: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError("design values must be 2-D")
        if not np.isfinite(self.values).all():
            raise ValidationError("design matrix contains non-finite entries")
        if self.values.shape[1] != len(self.column_names):
            raise ValidationError("column_names length must match design width")
        self.values = _read_only(self.values)
        self.obs_ids = _read_only(np.asarray(self.obs_ids, dtype=np.int64))
        self.alt_ids = _read_only(np.asarray(self.alt_ids, dtype=np.int64))
        self.set_starts = _read_only(np.asarray(self.set_starts, dtype=np.int64))

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_obs(self) -> int:
        return int(self.set_starts.shape[0])

    @property
    def set_sizes(self) -> np.ndarray:
        ends = np.concatenate((self.set_starts[1:], [self.n_rows]))
        return ends - self.set_starts

    @property
    def row_index(self) -> list[tuple[int, int]]:
        return list(zip(self.obs_ids.tolist(), self.alt_ids.tolist()))


def build_design(dataset: ChoiceDataset, spec: DesignSpec) -> DesignMatrix:
    """Evaluate every spec term into a design-matrix column.

    A term's column is zeroed on rows whose alt_id is outside the term's
    applicable set. Column order follows term order exactly.
    """
    columns = np.empty((dataset.n_rows, spec.n_terms), dtype=np.float64)
    for k, term in enumerate(spec.terms):
        col = np.asarray(term.column(dataset), dtype=np.float64)
        if term.alternatives is not None:
            col = np.where(np.isin(dataset.alt_ids, term.alternatives), col, 0.0)
        columns[:, k] = col
    return DesignMatrix(
        values=columns,
        column_names=spec.names,
        obs_ids=dataset.obs_ids,
        alt_ids=dataset.alt_ids,
        set_starts=dataset.set_starts,
    )
