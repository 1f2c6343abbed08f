"""JSON forms of matrices, potentials and reports.

Output is deterministic: keys are sorted and floats are written with
``repr`` precision, so identical inputs give identical bytes.
"""

import json
from importlib import resources

import numpy as np

from .matrixcore import as_matrix
from .potentials import potential_from_dict
from .weaklabels import ReconstructionMatrix, TransitionMatrix


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        # JSON has no NaN or infinity; they become null
        return float(obj) if np.isfinite(obj) else None
    return obj


def schema(name):
    """Parsed JSON schema shipped with the package (``name`` without extension)."""
    text = resources.files("weakproper.schemas").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def matrix_to_json(a):
    a = as_matrix(a)
    return {"rows": a.shape[0], "cols": a.shape[1], "data": a.tolist()}


def matrix_from_json(d):
    data = np.asarray(d["data"], dtype=float).reshape(int(d["rows"]), int(d["cols"]))
    return as_matrix(data)


def transition_to_json(T: TransitionMatrix):
    d = matrix_to_json(T.matrix)
    d["true_labels"] = list(T.true_labels)
    d["weak_labels"] = list(T.weak_labels)
    if T.candidate_sets is not None:
        d["candidate_sets"] = [sorted(s) for s in T.candidate_sets]
    return d


def transition_from_json(d):
    return TransitionMatrix(d["true_labels"], d["weak_labels"], matrix_from_json(d),
                            d.get("candidate_sets"))


def recon_to_json(R: ReconstructionMatrix):
    d = matrix_to_json(R.matrix)
    d["normalized"] = bool(R.normalized)
    return d


def recon_from_json(d):
    return ReconstructionMatrix(matrix_from_json(d), bool(d.get("normalized", False)))


def potential_to_json(F):
    return F.to_dict()


def potential_from_json(d):
    return potential_from_dict(d)
