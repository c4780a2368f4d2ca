"""JSON reports with a fixed key order and 17-significant-digit reals.

The writer is deliberately small: Python's ``json`` prints floats with
``repr`` and gives no control over the digit count, so reals are formatted
here and everything else is delegated to ``json.dumps``.  Non-finite reals
become ``null``.
"""

import json
import math
import os
import tempfile

import numpy as np

SCHEMA_VERSION = "1"

REPORT_KEYS = (
    "schema_version",
    "status",
    "error",
    "config",
    "resolved",
    "space",
    "lambda",
    "C",
    "n_points",
    "points",
    "distance_matrix",
    "defect",
    "property_slacks",
    "eps_schedule",
    "stabilization",
    "steps",
)


def _real(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    # keep reals recognizable as reals when read back
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """Serialize ``obj`` to JSON, preserving mapping order."""
    pad = "\n" + " " * (indent * (_level + 1))
    end = "\n" + " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _real(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k), ensure_ascii=False) + ": " + dumps(v, indent, _level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(dumps(v, indent, _level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def distance_matrix(oracle, points) -> np.ndarray:
    n = len(points)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = oracle.norm(points[i] - points[j])
    return D


def _defect(D, lam):
    n = D.shape[0]
    if n < 2:
        return 0.0
    return float(np.max(np.abs(D[~np.eye(n, dtype=bool)] - lam)))


def _property_slacks(props):
    return {name: {"ok": r["ok"], "measured": r["measured"], "bound": r["bound"], "slack": r["slack"], "enforced": r["enforced"]} for name, r in props.items()}


def _stabilization(stab, n):
    if stab is None:
        return None
    return {
        "lambda": stab.lam,
        "differenced": stab.differenced,
        "scalars": [float(stab.scalars(k)) for k in range(1, n + 1)],
        "b_values": {str(k): v for k, v in stab.b_values.items()},
    }


def build_report(config, result=None, error=None, seed=None) -> dict:
    """Assemble the report for a finished run or a failed one.

    ``defect`` and ``distance_matrix`` are recomputed here from the points.
    """
    from .config import make_oracle

    oracle = make_oracle(config)
    state = result.state if result is not None else getattr(error, "state", None)
    points = list(result.points) if result is not None else (list(state.points) if state is not None else [])
    lam = result.lam if result is not None else (state.lam if state is not None else None)
    D = distance_matrix(oracle, points)
    rep = dict.fromkeys(REPORT_KEYS)
    rep["schema_version"] = SCHEMA_VERSION
    rep["status"] = "ok" if error is None else "failed"
    if error is not None:
        rep["error"] = {
            "type": type(error).__name__,
            "message": str(error),
            "step": getattr(error, "step_index", None),
            "property": getattr(error, "prop", None),
            "measured": getattr(error, "measured", None),
            "attempts": getattr(error, "attempts", None),
            "step_log": getattr(error, "step", None),
        }
    rep["config"] = config.as_dict()
    rep["resolved"] = {"tail.start": config.tail_start, "seed": config["seed"] if seed is None else seed}
    rep["space"] = {"kind": config["space.kind"], "p": config["space.p"], "dim": config["space.dim"]}
    rep["lambda"] = lam
    rep["C"] = state.C if state is not None else None
    rep["n_points"] = len(points)
    rep["points"] = [np.asarray(x).tolist() for x in points]
    rep["distance_matrix"] = D.tolist()
    rep["defect"] = _defect(D, lam) if lam is not None else None
    if state is not None:
        from .builder import verify_properties

        rep["property_slacks"] = _property_slacks(verify_properties(state))
        rep["eps_schedule"] = state.sched.as_dict()
        rep["stabilization"] = _stabilization(state.stab, min(12, state.stab.source.max_index))
        rep["steps"] = state.logs
    else:
        rep["steps"] = []
    return rep


def write_report(report: dict, path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    text = dumps(report) + "\n"
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".report-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(config, result=None, error=None, path=None, seed=None) -> int:
    """Write the report and return the process exit code (0 ok, 2 failed run, 1 I/O error)."""
    path = path or config["output.path"]
    rep = build_report(config, result, error, seed)
    try:
        write_report(rep, path)
    except OSError:
        return 1
    return 0 if error is None else 2


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
