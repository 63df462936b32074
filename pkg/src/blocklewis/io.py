"""File formats: Matrix Market for matrices, JSON for everything else.

Floats are written with Python's shortest round-trip representation, which
never needs more than 17 significant digits and reads back bit-exactly.
Non-finite values are written as the strings ``"inf"``, ``"-inf"``, ``"nan"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .grouped import GroupedMatrix
from .msn import MsnSolution
from .sampling import SamplingPlan, Sparsifier
from .solvers import BlwCertificate, p_cap


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def read_matrix(path) -> np.ndarray:
    try:
        data = scipy.io.mmread(str(path))
    except (OSError, ValueError, IndexError) as exc:
        raise InputError(f"cannot read Matrix Market file {path}: {exc}") from exc
    if scipy.sparse.issparse(data):
        data = data.toarray()
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return data


def read_vector(path) -> np.ndarray:
    return read_matrix(path).reshape(-1)


def write_matrix(path, a) -> None:
    scipy.io.mmwrite(str(path), np.atleast_2d(np.asarray(a, dtype=float)), precision=17)


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON file {path}: {exc}") from exc


def jsonable(obj):
    """Convert numpy containers and non-finite floats into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _float(v):
    # float() also parses the "inf"/"nan" strings written by jsonable.
    return float(v)


def _floats(values) -> np.ndarray:
    return np.array([_float(v) for v in values], dtype=float)


def read_groups(path) -> dict:
    """Group spec ``{"groups": [[rows]], "p": number, "inner_p": number | [number]}``.

    An optional ``"b"`` list supplies the offsets of an MSN instance.
    """
    doc = read_json(path)
    if "groups" not in doc:
        raise InputError(f"{path}: missing 'groups'")
    groups = doc["groups"]
    if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
        raise InputError(f"{path}: 'groups' must be a list of lists of row indices")
    for i, grp in enumerate(groups):
        for j in grp:
            if not isinstance(j, int) or isinstance(j, bool):
                raise InputError(f"{path}: group {i} has a non-integer row index {j!r}")
    out = {"groups": groups, "p": doc.get("p"), "inner_p": doc.get("inner_p")}
    if "b" in doc:
        out["b"] = _floats(doc["b"])
    return out


def grouped_from_files(matrix_path, groups_path, p=None, inner=None) -> GroupedMatrix:
    a = read_matrix(matrix_path)
    spec = read_groups(groups_path)
    p = spec["p"] if p is None else p
    inner = spec["inner_p"] if inner is None else inner
    if p is None:
        raise InputError("outer exponent missing: give --p or 'p' in the group file")
    if inner is None:
        inner = 2.0
    if isinstance(inner, list):
        inner = _floats(inner)
    else:
        inner = _float(inner)
    return GroupedMatrix(a, spec["groups"], inner, _float(p))


def certificate_to_dict(cert: BlwCertificate) -> dict:
    return {
        "algorithm": cert.algorithm,
        "p": cert.p,
        "b": cert.b,
        "f_star": cert.f_star,
        "lambda": cert.lam,
        "w": cert.w,
        "alpha": cert.alpha,
    }


def certificate_from_dict(doc: dict, g: GroupedMatrix) -> BlwCertificate:
    """Rebuild a certificate; ``n`` and ``P`` come from the matrix it refers to."""
    try:
        lam = _floats(doc["lambda"])
        w = _floats(doc["w"])
        alpha = _floats(doc["alpha"])
        b = _floats(doc["b"]) if doc.get("b") is not None else None
        cert = BlwCertificate(lam, w, alpha, _float(doc["f_star"]), str(doc["algorithm"]),
                              _float(doc["p"]), g.n, p_cap(g), b=b)
    except KeyError as exc:
        raise InputError(f"weights document lacks field {exc}") from exc
    if lam.shape != (g.m,) or w.shape != (g.k,) or alpha.shape != (g.m,):
        raise InputError("weights document does not match the matrix and group sizes")
    return cert


def unwrap_report(doc: dict, key: str) -> dict:
    """Accept either a bare document or a CLI report whose outputs hold ``key``."""
    if "outputs" in doc and isinstance(doc["outputs"], dict):
        doc = doc["outputs"]
    if key in doc and isinstance(doc[key], dict):
        return doc[key]
    return doc


def sparsifier_to_dict(s: Sparsifier) -> dict:
    return {"m_tilde": s.m_tilde, "draws": s.draws, "coeff": s.coeff}


def sparsifier_from_dict(doc: dict, g: GroupedMatrix) -> Sparsifier:
    try:
        draws = np.array(doc["draws"], dtype=np.int64)
        coeff = _floats(doc["coeff"])
    except KeyError as exc:
        raise InputError(f"sparsifier document lacks field {exc}") from exc
    if draws.shape != coeff.shape or int(doc.get("m_tilde", draws.size)) != draws.size:
        raise InputError("sparsifier draws, coefficients and m_tilde disagree")
    if draws.size and (draws.min() < 0 or draws.max() >= g.m):
        raise InputError(f"sparsifier refers to a group outside [0, {g.m})")
    return Sparsifier(draws, coeff, g)


def plan_to_dict(plan: SamplingPlan) -> dict:
    return {
        "rho": plan.rho,
        "h": plan.h,
        "m_tilde": plan.m_tilde,
        "m_tilde_real": plan.m_tilde_real,
        "eps": plan.eps,
        "delta": plan.delta,
        "p_cap": plan.p_cap,
        "c_sample": plan.c_sample,
    }


def solution_to_dict(sol: MsnSolution) -> dict:
    return {
        "x": sol.x_hat,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "linear_solves": sol.linear_solves,
        "trace": [
            {"t": r.t, "newton_iterations": r.newton_iterations,
             "objective": r.objective, "gap": r.gap}
            for r in sol.trace
        ],
        "normalization": {"x0": sol.x0, "scale": sol.scale},
        "info": sol.info,
    }
