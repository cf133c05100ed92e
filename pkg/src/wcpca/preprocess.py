"""CSV ingestion, the centering/standardization pipeline, and covariance IO.

The pipeline is: drop rows with non-finite features, remove each domain's
column means, divide every column by its pooled (across-domain) standard
deviation, and form uncentered second moments Sigma_e = X_e.T X_e / n_e with
weights w_e = n_e / n. Covariance collections round-trip through CSV at 17
significant digits, which is lossless for float64.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .completion import MaskedDataset, MaskedDomain
from .errors import ConstantColumn, EmptyData, InvalidInput, SchemaError
from .losses import DomainCollection, DomainSpec

__all__ = [
    "RawTable",
    "PreprocessedCollection",
    "load_csv",
    "preprocess",
    "explained_variance_table",
    "save_covariances",
    "load_covariances",
    "load_masked_csv",
    "masked_dataset_from_blocks",
]

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RawTable:
    """Parsed CSV: per-domain numeric blocks in first-appearance order."""

    feature_names: tuple[str, ...]
    domain_col: str
    blocks: dict[str, np.ndarray]
    dropped_rows: int


@dataclass(frozen=True)
class PreprocessedCollection:
    """Standardized per-domain data plus the derived domain collection.

    ``blocks`` hold the centered and pooled-standardized data; the
    collection's covariances are (1/n_e) X_e.T X_e of those blocks with
    weights n_e / n.
    """

    collection: DomainCollection
    blocks: dict[str, np.ndarray]
    domain_means: dict[str, np.ndarray]
    pooled_stds: np.ndarray
    feature_names: tuple[str, ...]


def _open_csv(path: str):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def _resolve_features(fieldnames, domain_col: str, feature_cols):
    if domain_col not in fieldnames:
        raise SchemaError(f"domain column {domain_col!r} not found in header {list(fieldnames)}")
    if feature_cols is not None:
        missing = [c for c in feature_cols if c not in fieldnames]
        if missing:
            raise SchemaError(f"feature columns not in header: {missing}")
        features = [c for c in feature_cols if c != domain_col]
    else:
        features = [c for c in fieldnames if c != domain_col]
    if len(features) < 2:
        raise SchemaError(f"need at least 2 feature columns, found {len(features)}")
    return features


def load_csv(path: str, domain_col: str, feature_cols=None) -> RawTable:
    """Read a delimited file with a header and one domain-label column.

    Rows containing any non-finite or unparseable feature are dropped and
    counted; a domain left with fewer than 2 rows is an error, and a file
    left with no rows at all is EmptyData.
    """
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyData(f"{path} has no header row")
        features = _resolve_features(reader.fieldnames, domain_col, feature_cols)
        rows_by_domain: dict[str, list] = {}
        dropped = 0
        for record in reader:
            label = record.get(domain_col)
            if label is None or label == "":
                dropped += 1
                continue
            try:
                values = [float(record[c]) for c in features]
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not all(np.isfinite(values)):
                dropped += 1
                continue
            rows_by_domain.setdefault(label, []).append(values)
    if not rows_by_domain:
        raise EmptyData(f"{path} has no usable data rows ({dropped} dropped)")
    for label, rows in rows_by_domain.items():
        if len(rows) < 2:
            raise SchemaError(f"domain {label!r} has fewer than 2 usable rows")
    blocks = {label: np.array(rows, dtype=np.float64) for label, rows in rows_by_domain.items()}
    return RawTable(tuple(features), domain_col, blocks, dropped)


def preprocess(raw: RawTable) -> PreprocessedCollection:
    """Center per domain, standardize by pooled stds, build covariances."""
    centered = {}
    means = {}
    total_rows = 0
    for label, x in raw.blocks.items():
        mu = x.mean(axis=0)
        centered[label] = x - mu
        means[label] = mu
        total_rows += x.shape[0]
    pooled_var = np.zeros(len(raw.feature_names))
    for x in centered.values():
        pooled_var += np.sum(x * x, axis=0)
    pooled_var /= total_rows
    flat = np.flatnonzero(pooled_var < 1e-30)
    if flat.size:
        raise ConstantColumn(f"column {raw.feature_names[int(flat[0])]!r} is constant")
    stds = np.sqrt(pooled_var)
    blocks = {}
    specs = []
    for label, x in centered.items():
        z = x / stds
        blocks[label] = z
        n_e = z.shape[0]
        specs.append(
            DomainSpec(
                id=label,
                covariance=z.T @ z / n_e,
                weight=n_e / total_rows,
                n=n_e,
            )
        )
    return PreprocessedCollection(
        DomainCollection(tuple(specs)), blocks, means, stds, raw.feature_names
    )


def explained_variance_table(frame, collection) -> list[dict]:
    """Per-domain explained-variance proportions of each column prefix.

    The frame's columns are taken in order; row j of the output gives the
    proportion of domain variance captured by columns 1..j. Pass an ordered
    frame (see the solvers' order_basis) for prefix-optimal semantics.
    """
    domains = collection.collection if isinstance(collection, PreprocessedCollection) else collection
    domains = domains if isinstance(domains, DomainCollection) else DomainCollection(tuple(domains))
    b = np.asarray(frame, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] != domains.p:
        raise InvalidInput(f"frame rows {b.shape[0]} do not match dimension {domains.p}")
    rows = []
    for d in domains:
        contributions = np.sum(b * (d.covariance @ b), axis=0)
        cumulative = np.cumsum(contributions) / d.trace
        for j in range(b.shape[1]):
            rows.append(
                {
                    "domain": d.id,
                    "components": j + 1,
                    "explained_variance": float(cumulative[j]),
                }
            )
    return rows


def _safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in label)


def save_covariances(collection, out_dir: str, feature_names=None) -> str:
    """Write one p x p CSV per domain plus a JSON manifest; returns its path.

    Entries are formatted at 17 significant digits, so reloading recovers
    the exact float64 values.
    """
    domains = collection if isinstance(collection, DomainCollection) else DomainCollection(tuple(collection))
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for i, d in enumerate(domains):
        fname = f"cov_{i:02d}_{_safe_name(d.id)}.csv"
        with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as fh:
            for row in d.covariance:
                fh.write(",".join(_FLOAT_FMT % v for v in row))
                fh.write("\n")
        entries.append({"id": d.id, "n": d.n, "weight": d.weight, "file": fname})
    manifest = {
        "columns": list(feature_names) if feature_names is not None else None,
        "domains": entries,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_covariances(path: str):
    """Load a covariance collection saved by :func:`save_covariances`.

    ``path`` may be the manifest file or the directory holding it. Returns
    ``(collection, feature_names_or_None)``.
    """
    manifest_path = os.path.join(path, "manifest.json") if os.path.isdir(path) else path
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{manifest_path} is not valid JSON: {exc}") from exc
    entries = manifest.get("domains")
    if not isinstance(entries, list) or not entries:
        raise SchemaError(f"{manifest_path} lists no domains")
    base = os.path.dirname(manifest_path)
    specs = []
    for i, entry in enumerate(entries):
        if "id" not in entry or "file" not in entry:
            raise SchemaError(f"manifest domain {i} needs 'id' and 'file' keys")
        cov_path = os.path.join(base, entry["file"])
        try:
            cov = np.loadtxt(cov_path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise SchemaError(f"cannot read {cov_path}: {exc}") from exc
        except ValueError as exc:
            raise SchemaError(f"{cov_path} is not a numeric matrix: {exc}") from exc
        weight = entry.get("weight")
        specs.append(
            DomainSpec(
                id=str(entry["id"]),
                covariance=cov,
                weight=float(weight) if weight is not None else 1.0 / len(entries),
                n=entry.get("n"),
            )
        )
    columns = manifest.get("columns")
    return DomainCollection(tuple(specs)), tuple(columns) if columns else None


def load_masked_csv(path: str, domain_col: str, feature_cols=None):
    """Read a CSV where empty or non-finite cells mean "missing".

    Returns ``(feature_names, blocks)`` with ``blocks`` mapping domain label
    to ``(x, mask)``; masked cells hold 0 in ``x``. No row-count or
    all-observed constraints are applied here, so callers decide whether an
    all-masked row is an error.
    """
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyData(f"{path} has no header row")
        features = _resolve_features(reader.fieldnames, domain_col, feature_cols)
        by_domain: dict[str, list] = {}
        for record in reader:
            label = record.get(domain_col)
            if label is None:
                label = ""
            values = []
            observed = []
            for c in features:
                cell = record.get(c)
                try:
                    v = float(cell)
                except (TypeError, ValueError):
                    v = np.nan
                if np.isfinite(v):
                    values.append(v)
                    observed.append(1.0)
                else:
                    values.append(0.0)
                    observed.append(0.0)
            by_domain.setdefault(label, []).append((values, observed))
    if not by_domain:
        raise EmptyData(f"{path} has no data rows")
    blocks = {}
    for label, rows in by_domain.items():
        x = np.array([r[0] for r in rows], dtype=np.float64)
        mask = np.array([r[1] for r in rows], dtype=np.float64)
        blocks[label] = (x, mask)
    return tuple(features), blocks


def masked_dataset_from_blocks(blocks) -> MaskedDataset:
    """Build a MaskedDataset from ``{label: (x, mask)}`` blocks."""
    return MaskedDataset(
        tuple(MaskedDomain(id=label, x=x, mask=mask) for label, (x, mask) in blocks.items())
    )
