"""Stateless what-if HTTP interface over one loaded model artifact.

Endpoints (all under ``/v1``, JSON in and out):

- ``GET /v1/model``: artifact metadata (kind, K, L, class names, prototypes
  for the prototype kind, calibration presence).
- ``POST /v1/whatif``: apply edits to a private copy of the scores, return
  prediction, per-concept distance decomposition (prototype kind only),
  conformal set when calibrated, and a gain ranking toward an optional
  target class.  Edits travel in the request; there are no sessions.
- ``POST /v1/conformal``: prediction set for a score vector.
- ``GET /v1/health``: liveness plus the sha256 digest of the artifact file.

Infinite quantiles are serialized as the string ``"inf"`` so responses stay
strict JSON.  Error codes: 400 malformed request values, 404 unknown target
class, 409 conformal capability requested without a calibrator.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .conformal import predict_set
from .data import ModelArtifact, load_model
from .intervention import STRATEGY_CLPC_GAIN, STRATEGY_LR_GAIN, clpc_gain, lr_gain
from .model import PrototypeModel, decompose, predict
from .train import lr_posterior

__all__ = ["create_app"]


class EditIn(BaseModel):
    concept_index: int
    value: float


class WhatIfIn(BaseModel):
    scores: list[float]
    edits: list[EditIn] | None = None
    target: int | None = None
    alpha_override: float | None = None


class ConformalIn(BaseModel):
    scores: list[float]
    alpha_override: float | None = None


def _bad(detail: str) -> HTTPException:
    return HTTPException(status_code=400, detail=detail)


def _checked_scores(values: list[float], k: int) -> np.ndarray:
    if len(values) != k:
        raise _bad(f"expected {k} scores, got {len(values)}")
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise _bad("scores must be finite")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        bad = int(np.argmax((arr < 0.0) | (arr > 1.0)))
        raise _bad(f"score {bad} out of [0, 1]: {arr[bad]!r}")
    return arr


def _apply_edits(scores: np.ndarray, edits: list[EditIn] | None) -> np.ndarray:
    out = scores.copy()
    if not edits:
        return out
    seen: set[int] = set()
    for e in edits:
        if not (0 <= e.concept_index < out.shape[0]):
            raise _bad(f"edit concept_index {e.concept_index} out of range "
                       f"[0, {out.shape[0]})")
        if e.concept_index in seen:
            raise _bad(f"duplicate edit for concept_index {e.concept_index}")
        seen.add(e.concept_index)
        if not math.isfinite(e.value) or not (0.0 <= e.value <= 1.0):
            raise _bad(f"edit value for concept_index {e.concept_index} "
                       f"out of [0, 1]: {e.value!r}")
        out[e.concept_index] = e.value
    return out


def _checked_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0) or not math.isfinite(alpha):
        raise _bad(f"alpha_override must lie strictly in (0, 1), got {alpha!r}")
    return float(alpha)


def _quantile_json(q: float):
    return "inf" if math.isinf(q) else q


def _decomposition_json(c: np.ndarray, model: PrototypeModel, class_index: int) -> dict:
    d = decompose(c, model.prototypes[class_index])
    return {
        "class_index": class_index,
        "class_name": model.class_names[class_index],
        "total": d.total,
        "per_concept": [
            {
                "concept_index": t.concept_index,
                "prototype_bit": t.prototype_bit,
                "score": t.score,
                "contribution": t.contribution,
                "band": t.band,
            }
            for t in d.per_concept
        ],
    }


def _gains_json(c: np.ndarray, artifact: ModelArtifact, target: int) -> dict:
    if artifact.kind == "clpc":
        strategy, gains = STRATEGY_CLPC_GAIN, clpc_gain(c, artifact.model, target)
    else:
        strategy, gains = STRATEGY_LR_GAIN, lr_gain(c, artifact.model, target)
    order = np.argsort(-gains, kind="stable")
    return {
        "strategy": strategy,
        "target": target,
        "ranked": [
            {"concept_index": int(k), "gain": float(gains[k])} for k in order
        ],
    }


def _conformal_json(c: np.ndarray, artifact: ModelArtifact,
                    alpha_override: float | None) -> dict:
    cal = artifact.calibrator
    alpha = cal.alpha if alpha_override is None else _checked_alpha(alpha_override)
    labels = predict_set(c, artifact.model, cal, alpha=alpha)
    return {
        "alpha": alpha,
        "quantile": _quantile_json(cal.quantile_for(alpha)),
        "set": labels,
        "set_names": [artifact.class_names[j] for j in labels],
        "rejected": len(labels) == 0,
    }


def create_app(artifact_path) -> FastAPI:
    """Build the service around one artifact file, loaded once."""
    path = Path(artifact_path)
    artifact = load_model(path)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    model = artifact.model
    k, l = model.n_concepts, model.n_classes

    app = FastAPI(title="clpc what-if service", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_calibrator():
        if artifact.calibrator is None:
            raise HTTPException(
                status_code=409,
                detail="artifact has no conformal calibrator; "
                       "run `clpc calibrate` and restart",
            )

    @app.get("/v1/model")
    def model_info() -> dict:
        info: dict = {
            "kind": artifact.kind,
            "K": k,
            "L": l,
            "class_names": artifact.class_names,
            "calibrated": artifact.calibrator is not None,
        }
        if artifact.kind == "clpc":
            info["prototypes"] = model.prototypes.tolist()
        else:
            info["weights_shape"] = list(model.weights.shape)
        if artifact.calibrator is not None:
            info["calibration"] = {
                "alpha": artifact.calibrator.alpha,
                "n_calibration": artifact.calibrator.n_calibration,
                "quantile": _quantile_json(artifact.calibrator.quantile),
            }
        return info

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "artifact_digest": digest}

    @app.post("/v1/whatif")
    def whatif(req: WhatIfIn) -> dict:
        base = _checked_scores(req.scores, k)
        edited = _apply_edits(base, req.edits)
        if req.target is not None and not (0 <= req.target < l):
            raise HTTPException(
                status_code=404,
                detail=f"unknown target class {req.target}; model has L={l}",
            )
        if req.alpha_override is not None:
            require_calibrator()

        if artifact.kind == "clpc":
            result = predict(edited, model)
            prediction = {
                "label_index": result.label_index,
                "label": artifact.class_names[result.label_index],
                "distances": result.distances.tolist(),
                "margin": result.margin,
            }
            decomposition = {
                "predicted": _decomposition_json(edited, model, result.label_index),
                "target": (
                    _decomposition_json(edited, model, req.target)
                    if req.target is not None else None
                ),
            }
        else:
            post = lr_posterior(edited, model)
            label = int(np.argmax(post))
            top2 = np.sort(post)[::-1][:2]
            prediction = {
                "label_index": label,
                "label": artifact.class_names[label],
                "posterior": post.tolist(),
                "margin": float(top2[0] - top2[1]),
            }
            decomposition = None

        return {
            "prediction": prediction,
            "decomposition": decomposition,
            "conformal": (
                _conformal_json(edited, artifact, req.alpha_override)
                if artifact.calibrator is not None else None
            ),
            "gains": (
                _gains_json(edited, artifact, req.target)
                if req.target is not None else None
            ),
            "applied_scores": edited.tolist(),
        }

    @app.post("/v1/conformal")
    def conformal(req: ConformalIn) -> dict:
        require_calibrator()
        c = _checked_scores(req.scores, k)
        return _conformal_json(c, artifact, req.alpha_override)

    return app
