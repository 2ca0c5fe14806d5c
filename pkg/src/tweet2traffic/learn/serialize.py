"""Versioned JSON serialization of fitted model stacks, for audit and reload."""
from __future__ import annotations

import hashlib
import json

import numpy as np

from .optimizers import LinearModel
from .stack import OrderedDescriptor, SegmentModelSet

FORMAT_VERSION = 1


def _linear_to_dict(model: LinearModel) -> dict:
    return {
        "bias": float(model.bias),
        "l1_strength": float(model.l1_strength),
        "task": model.task,
        "converged": bool(model.converged),
        "coefficients": {n: float(w) for n, w in zip(model.feature_names, model.weights)
                         if w != 0.0},
        "feature_names": list(model.feature_names),
    }


def _linear_from_dict(doc: dict) -> LinearModel:
    names = doc["feature_names"]
    weights = np.array([doc["coefficients"].get(n, 0.0) for n in names])
    return LinearModel(weights, doc["bias"], names, doc["l1_strength"],
                       doc["task"], converged=doc["converged"])


def descriptor_to_dict(desc: OrderedDescriptor) -> dict:
    return {
        "n_clusters": desc.n_clusters,
        "classifiers": [_linear_to_dict(m) for m in desc.classifiers],
        "feature_names": desc.feature_names,
    }


def descriptor_from_dict(doc: dict) -> OrderedDescriptor:
    return OrderedDescriptor(doc["n_clusters"],
                             [_linear_from_dict(m) for m in doc["classifiers"]],
                             doc["feature_names"])


def segment_to_dict(model: SegmentModelSet) -> dict:
    return {
        "segment_id": model.segment_id,
        "variant": model.variant,
        "classifier": _linear_to_dict(model.classifier),
        "regressors": {k: _linear_to_dict(v) for k, v in sorted(model.regressors.items())},
        "fallbacks": {k: float(v) for k, v in sorted(model.fallbacks.items())},
        "feature_names": model.feature_names,
        "flags": sorted(model.flags),
    }


def segment_from_dict(doc: dict) -> SegmentModelSet:
    return SegmentModelSet(
        segment_id=doc["segment_id"],
        classifier=_linear_from_dict(doc["classifier"]),
        regressors={k: _linear_from_dict(v) for k, v in doc["regressors"].items()},
        fallbacks=dict(doc["fallbacks"]),
        feature_names=doc["feature_names"],
        variant=doc["variant"],
        flags=list(doc["flags"]),
    )


def bundle_to_json(descriptors: dict, segment_models: dict, meta: dict | None = None) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "meta": meta or {},
        "descriptors": {road: descriptor_to_dict(d) for road, d in sorted(descriptors.items())},
        "segments": {sid: segment_to_dict(m) for sid, m in sorted(segment_models.items())},
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def bundle_from_json(text: str):
    doc = json.loads(text)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model bundle version {doc.get('format_version')}")
    descriptors = {road: descriptor_from_dict(d) for road, d in doc["descriptors"].items()}
    segments = {sid: segment_from_dict(m) for sid, m in doc["segments"].items()}
    return descriptors, segments, doc["meta"]


def bundle_hash(descriptors: dict, segment_models: dict) -> str:
    payload = bundle_to_json(descriptors, segment_models, meta={})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
