"""JSON artifacts written and read by the command-line tool.

Every document carries ``"schema_version": 1``. Writers emit two-space
indented JSON with a trailing newline and a fixed key order, so identical
content always gives identical bytes.
"""
import json

import numpy as np

from .errors import InputError
from .graph import WeightedDag
from .ingestion.frame import split_metric_id

SCHEMA_VERSION = 1


def dumps(doc):
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_json(path, doc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(doc))


def read_json(path, kind):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{kind} file not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {kind} file {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"{path}: not a version-{SCHEMA_VERSION} {kind} document")
    return doc


# dag.json ---------------------------------------------------------------

def dag_document(result, config):
    dag = result.dag
    return {
        "schema_version": SCHEMA_VERSION,
        "nodes": list(dag.node_labels),
        "adjacency": dag.adjacency.tolist(),
        "h": float(result.h),
        "converged": bool(result.converged),
        "outer_iterations": int(result.outer_iterations),
        "config": config,
    }


def read_dag(path):
    doc = read_json(path, "dag")
    try:
        return WeightedDag(np.array(doc["adjacency"], dtype=np.float64), doc["nodes"]), doc
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: malformed dag document ({exc})") from None


def dag_dot(dag, tau):
    """Graphviz rendering of edges with ``|w| >= tau``."""
    lines = ["digraph dag {"]
    for label in dag.node_labels:
        lines.append(f'  "{label}";')
    for src, dst, w in dag.edges():
        if abs(w) >= tau:
            lines.append(f'  "{src}" -> "{dst}" [label="{w:.3f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ranking.json -----------------------------------------------------------

def ranking_document(ranked, granularity, alpha, tau):
    return {
        "schema_version": SCHEMA_VERSION,
        "granularity": granularity,
        "alpha": float(alpha),
        "tau": float(tau),
        "ranking": ranked.to_records(),
    }


def read_ranking(path):
    doc = read_json(path, "ranking")
    rows = doc.get("ranking")
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{path}: ranking list missing or empty")
    for i, row in enumerate(rows, start=1):
        if not isinstance(row, dict) or row.get("rank") != i or "metric" not in row:
            raise InputError(f"{path}: malformed ranking entry {i}")
    return doc


# truth.json -------------------------------------------------------------

def truth_document(case, seed, params):
    ids = case.frame.metric_ids
    W = case.dag.weights
    edges = [{"source": ids[i], "target": ids[j], "weight": float(W[i, j])}
             for i, j in zip(*np.nonzero(W))]
    ts = case.frame.timestamps
    onset_ts = float(ts[case.onset_index]) if case.onset_index < len(ts) else None
    return {
        "schema_version": SCHEMA_VERSION,
        "nodes": list(ids),
        "edges": edges,
        "fault_node": case.fault_id,
        "root_causes": [case.fault_id],
        "profile": case.profile,
        "onset_index": int(case.onset_index),
        "onset_timestamp": onset_ts,
        "magnitude": float(case.magnitude),
        "seed": int(seed),
        "params": params,
    }


def read_truth(path):
    doc = read_json(path, "truth")
    rc = doc.get("root_causes")
    if not isinstance(rc, list) or not rc:
        raise InputError(f"{path}: root_causes missing or empty")
    for mid in rc:
        try:
            split_metric_id(mid)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from None
    return doc


def truth_adjacency(doc):
    index = {mid: i for i, mid in enumerate(doc["nodes"])}
    W = np.zeros((len(index), len(index)))
    for e in doc.get("edges", []):
        W[index[e["source"]], index[e["target"]]] = e["weight"]
    return W


# eval.json --------------------------------------------------------------

def eval_document(columns, rows, mean):
    return {
        "schema_version": SCHEMA_VERSION,
        "columns": list(columns),
        "rows": rows,
        "mean": mean,
    }


def read_eval(path):
    doc = read_json(path, "eval")
    if "rows" not in doc or "columns" not in doc:
        raise InputError(f"{path}: malformed eval document")
    return doc
