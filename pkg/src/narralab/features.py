"""Feature assembly: fundamentals (rank-standardized levels and one-year
changes, SUE, announcement return) and text embedding columns, grouped into
the S / T / ST design matrices aligned to target rows.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .embed import EmbeddingVector
from .targets import TargetRow

EMB_PREFIX = "emb_"


class FeatureGroup(str, Enum):
    FUNDAMENTALS = "Fundamentals"
    TEXT = "Text"


class FeatureSpec(str, Enum):
    S = "S"  # fundamentals only
    T = "T"  # text embeddings only
    ST = "ST"  # union


@dataclass(frozen=True)
class FundamentalsRow:
    firm_id: str
    as_of_date: dt.date
    values: Mapping[str, Optional[float]]


@dataclass
class FeatureMatrix:
    row_keys: List[Tuple[str, str, int]]  # (firm_id, call_date ISO, horizon)
    feature_names: List[str]
    group_of: Dict[str, FeatureGroup]
    values: np.ndarray  # float64, NaN = missing

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]


def rank_standardize(
    column: Sequence[Optional[float]], date_groups: Sequence[str]
) -> List[Optional[float]]:
    """Map values to (rank-1)/(n-1) - 0.5 within each date group.

    Average ranks break ties; a singleton group maps to 0.0; missing values
    stay missing and do not affect the ranks of the observed ones.
    """
    if len(column) != len(date_groups):
        raise ValueError("column and date_groups must align")
    out: List[Optional[float]] = [None] * len(column)
    by_date: Dict[str, List[int]] = {}
    for i, d in enumerate(date_groups):
        if column[i] is not None:
            by_date.setdefault(d, []).append(i)
    for idx in by_date.values():
        vals = np.asarray([column[i] for i in idx], dtype=np.float64)
        n = len(vals)
        if n == 1:
            out[idx[0]] = 0.0
            continue
        order = np.argsort(vals, kind="stable")
        ranks = np.empty(n, dtype=np.float64)
        ranks[order] = np.arange(1, n + 1, dtype=np.float64)
        # average ranks over tied values
        for v in np.unique(vals):
            mask = vals == v
            if mask.sum() > 1:
                ranks[mask] = ranks[mask].mean()
        scaled = (ranks - 1.0) / (n - 1.0) - 0.5
        for j, i in enumerate(idx):
            out[i] = float(scaled[j])
    return out


def one_year_change(
    current: FundamentalsRow, prior: Optional[FundamentalsRow]
) -> Dict[str, Optional[float]]:
    """Elementwise current - prior over the union of feature names; missing
    prior or a missing operand yields missing."""
    out: Dict[str, Optional[float]] = {}
    for name, cur in current.values.items():
        if prior is None:
            out[name] = None
            continue
        prev = prior.values.get(name)
        out[name] = None if cur is None or prev is None else cur - prev
    return out


def _nan(x: Optional[float]) -> float:
    return np.nan if x is None else float(x)


def assemble(
    spec: FeatureSpec,
    fundamentals: Mapping[Tuple[str, str], Mapping[str, Optional[float]]],
    embeddings: Mapping[str, EmbeddingVector],
    targets: Sequence[TargetRow],
    doc_id_of: Optional[Mapping[Tuple[str, str], str]] = None,
) -> FeatureMatrix:
    """Build the design matrix for one feature specification.

    ``fundamentals`` maps (firm_id, call_date ISO) to an already-standardized
    name -> value mapping (levels, changes, announcement return; SUE is taken
    from the target row itself).  ``doc_id_of`` maps the same key to the
    embedded document id; identity (firm|date) when omitted.  Raises on any
    target row lacking its inputs.
    """
    if not targets:
        raise ValueError("no target rows")

    fund_names: List[str] = []
    if spec in (FeatureSpec.S, FeatureSpec.ST):
        seen = set()
        for key in sorted(fundamentals):
            for name in fundamentals[key]:
                if name not in seen:
                    seen.add(name)
                    fund_names.append(name)
        fund_names = sorted(fund_names)
        fund_names.append("sue")

    dim = 0
    if spec in (FeatureSpec.T, FeatureSpec.ST):
        dims = {e.dim for e in embeddings.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent embedding dims: {sorted(dims)}")
        dim = dims.pop()
    emb_names = [f"{EMB_PREFIX}{i:03d}" for i in range(dim)]

    names = fund_names + emb_names
    group_of = {n: FeatureGroup.FUNDAMENTALS for n in fund_names}
    group_of.update({n: FeatureGroup.TEXT for n in emb_names})

    row_keys: List[Tuple[str, str, int]] = []
    grid = np.empty((len(targets), len(names)), dtype=np.float64)
    for r, row in enumerate(targets):
        key = (row.firm_id, row.call_date.isoformat())
        row_keys.append((row.firm_id, row.call_date.isoformat(), row.horizon_years))
        col = 0
        if fund_names:
            fv = fundamentals.get(key)
            if fv is None:
                raise KeyError(f"no fundamentals row for {key}")
            for name in fund_names[:-1]:
                grid[r, col] = _nan(fv.get(name))
                col += 1
            grid[r, col] = _nan(row.sue)
            col += 1
        if emb_names:
            doc_id = doc_id_of[key] if doc_id_of is not None else f"{key[0]}|{key[1]}"
            emb = embeddings.get(doc_id)
            if emb is None:
                raise KeyError(f"no embedding for {key} (doc_id {doc_id})")
            grid[r, col : col + dim] = emb.values
    return FeatureMatrix(row_keys=row_keys, feature_names=names, group_of=group_of, values=grid)


def replace_embedding(matrix: FeatureMatrix, row_index: int, emb: EmbeddingVector) -> np.ndarray:
    """Return a copy of one row with its emb_* columns overwritten.

    Fundamentals stay untouched, which is the counterfactual contract for
    treatment-effect evaluation.
    """
    emb_cols = [i for i, n in enumerate(matrix.feature_names) if n.startswith(EMB_PREFIX)]
    if len(emb_cols) != emb.dim:
        raise ValueError(f"dim mismatch: matrix has {len(emb_cols)} text columns, vector has {emb.dim}")
    row = matrix.values[row_index].copy()
    row[emb_cols] = emb.values
    return row
