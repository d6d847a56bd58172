"""Versioned JSON serialization for the four model kinds."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forest import ForestModel
from .neural import PerceptronNet
from .tree import DecisionTree, TreeNode
from .wnd import WndModel

MODEL_FORMAT_VERSION = "1"


def _node_to_dict(node: TreeNode) -> dict:
    out: dict = {"counts": [int(c) for c in node.counts]}
    if not node.is_leaf:
        out.update(
            feature=int(node.feature),
            threshold=float(node.threshold),
            left=_node_to_dict(node.left),
            right=_node_to_dict(node.right),
        )
    return out


def _node_from_dict(d: dict) -> TreeNode:
    node = TreeNode(counts=np.array(d["counts"], dtype=np.int64))
    if "feature" in d:
        node.feature = int(d["feature"])
        node.threshold = float(d["threshold"])
        node.left = _node_from_dict(d["left"])
        node.right = _node_from_dict(d["right"])
    return node


def model_to_dict(model) -> dict:
    if isinstance(model, DecisionTree):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "dt",
            "categories": list(model.categories),
            "root": _node_to_dict(model.root),
        }
    if isinstance(model, ForestModel):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "rf",
            "categories": list(model.categories),
            "seed": model.seed,
            "trees": [_node_to_dict(t.root) for t in model.trees],
        }
    if isinstance(model, WndModel):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "wnd5",
            "categories": list(model.categories),
            "exponent": model.exponent,
            "similarity_rule": model.similarity_rule,
            "weights": [float(w) for w in model.weights],
            "groups": {c: model.groups[c].tolist() for c in model.categories},
        }
    if isinstance(model, PerceptronNet):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "nn",
            "categories": list(model.categories),
            "weights": model.weights.tolist(),
            "feature_indices": None
            if model.feature_indices is None
            else [int(i) for i in model.feature_indices],
            "trained": model.trained,
            "converged": model.converged,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(payload: dict):
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    kind = payload["kind"]
    cats = tuple(payload["categories"])
    if kind == "dt":
        return DecisionTree(root=_node_from_dict(payload["root"]), categories=cats)
    if kind == "rf":
        trees = [DecisionTree(root=_node_from_dict(d), categories=cats) for d in payload["trees"]]
        return ForestModel(trees=trees, categories=cats, seed=int(payload["seed"]))
    if kind == "wnd5":
        return WndModel(
            categories=cats,
            groups={c: np.array(rows, dtype=np.float64) for c, rows in payload["groups"].items()},
            weights=np.array(payload["weights"], dtype=np.float64),
            exponent=int(payload["exponent"]),
            similarity_rule=bool(payload["similarity_rule"]),
        )
    if kind == "nn":
        fi = payload["feature_indices"]
        return PerceptronNet(
            weights=np.array(payload["weights"], dtype=np.float64),
            categories=cats,
            feature_indices=None if fi is None else np.array(fi, dtype=int),
            trained=bool(payload["trained"]),
            converged=bool(payload["converged"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True))


def load_model(path: str | Path):
    return model_from_dict(json.loads(Path(path).read_text()))
