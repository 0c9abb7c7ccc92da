"""
Document output: canonical JSON and flattened CSV tables.

JSON documents are written with sorted keys and fixed separators, so the
same run always produces the same bytes. Files are replaced atomically.
"""
from __future__ import annotations

import json
import logging
import os
import sys
import tempfile
from typing import Iterable, List, Optional, Union

import pandas as pd

from folner_density.errors import ConfigError

log = logging.getLogger(__name__)

FORMATS = ("json", "csv")

# Keys under which a document keeps its tabular part, tried in order.
TABLE_KEYS = ("rows", "estimates", "elements", "members", "witnesses", "factorizations",
              "assignment", "shadow", "checks")


def to_json(doc: Union[dict, list]) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=2, ensure_ascii=False) + "\n"


def _flatten(value) -> object:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value


def table_rows(doc: dict) -> List[dict]:
    """Tabular part of a document: the first list of records found under TABLE_KEYS.

    Falls back to a single row holding the document's scalar fields.
    """
    for key in TABLE_KEYS:
        rows = doc.get(key)
        if isinstance(rows, list) and rows and all(isinstance(r, dict) for r in rows):
            return [{"operation": doc.get("operation"), **r} for r in rows]
    row = {"operation": doc.get("operation"), "verdict": doc.get("verdict")}
    row.update({k: v for k, v in doc.items() if k not in row and not isinstance(v, (dict, list))})
    return [row]


def documents_to_frame(docs: Iterable[dict]) -> pd.DataFrame:
    """One DataFrame for one or more documents; nested values become compact JSON cells."""
    rows = [r for doc in docs for r in table_rows(doc)]
    df = pd.DataFrame(rows)
    for col in df.columns:
        df[col] = df[col].map(_flatten)
    # Missing cells come from heterogenous documents; write them as empty strings
    return df.fillna("")


def render(doc: Union[dict, list], fmt: str = "json") -> str:
    if fmt not in FORMATS:
        raise ConfigError(f"unknown output format {fmt!r}; expected json or csv")
    if fmt == "json":
        return to_json(doc)
    docs = doc if isinstance(doc, list) else [doc]
    return documents_to_frame(docs).to_csv(index=False)


def write_atomic(text: str, path: str) -> None:
    """Write via a temp file in the target directory, then os.replace."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".folner-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    log.info("wrote %s", path)


def emit(doc: Union[dict, list], fmt: str = "json", path: Optional[str] = None) -> None:
    """Render once, then write to the file (atomically) or to stdout."""
    text = render(doc, fmt)
    if path:
        write_atomic(text, path)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def load_document(path: str) -> Union[dict, list]:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
