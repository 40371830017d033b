"""Reading and writing market instances and experiment configs (JSON).

Instance files look like::

    {"n": 2, "model": "linear",
     "segments": [{"theta": 0.5, "a": [1, 1], "B": [[2, -1], [-1, 2]]}, ...]}

with ``"b": [...]`` instead of ``"B"`` for the logit family, and for bundle
markets an outer wrapper carrying ``"base_n"``, ``"bundles"`` (0/1 incidence
rows) and ``"inner_model"``.  Readers enforce every model invariant and
report the offending field on failure.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .bench import ExperimentConfig
from .errors import ValidationError
from .market import (
    BundleMarket,
    LinearModel,
    MarketInstance,
    MnlSegmentModel,
    Segment,
)


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None


def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ValidationError(f"{where}: missing field {key!r}")
    return mapping[key]


def _build_segment(entry, j, n, model_kind):
    where = f"segments[{j}]"
    theta = _require(entry, "theta", where)
    a = _require(entry, "a", where)
    try:
        if model_kind == "linear":
            model = LinearModel(a=a, B=_require(entry, "B", where))
        else:
            model = MnlSegmentModel(a=a, b=_require(entry, "b", where))
        if model.n != n:
            raise ValidationError(f"dimension {model.n} does not match n={n}")
        return Segment(float(theta), model)
    except (ValidationError, TypeError) as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _segments_payload(market: MarketInstance) -> list[dict]:
    rows = []
    for seg in market.segments:
        entry: dict = {"theta": seg.theta, "a": seg.model.a.tolist()}
        if isinstance(seg.model, LinearModel):
            entry["B"] = seg.model.B.tolist()
        else:
            entry["b"] = seg.model.b.tolist()
        rows.append(entry)
    return rows


def _inner_kind(market: MarketInstance) -> str:
    return "linear" if isinstance(market.segments[0].model, LinearModel) else "mnl"


def save_instance(market, path) -> None:
    """Write a market (or bundle market) instance file."""
    if isinstance(market, BundleMarket):
        payload = {
            "n": market.inner.n,
            "model": "bundle",
            "base_n": market.base_n,
            "bundles": [[int(v) for v in x] for x in market.bundles],
            "inner_model": _inner_kind(market.inner),
            "segments": _segments_payload(market.inner),
        }
        if market.inner.labels is not None:
            payload["labels"] = list(market.inner.labels)
    elif isinstance(market, MarketInstance):
        payload = {
            "n": market.n,
            "model": _inner_kind(market),
            "segments": _segments_payload(market),
        }
        if market.labels is not None:
            payload["labels"] = list(market.labels)
    else:
        raise ValidationError(f"cannot serialize {type(market).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _build_market(payload, path, kind) -> MarketInstance:
    n = _require(payload, "n", path)
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"{path}: field 'n' must be a positive integer")
    raw_segments = _require(payload, "segments", path)
    if not isinstance(raw_segments, list) or not raw_segments:
        raise ValidationError(f"{path}: field 'segments' must be a non-empty list")
    segments = tuple(
        _build_segment(entry, j, n, kind) for j, entry in enumerate(raw_segments)
    )
    labels = payload.get("labels")
    try:
        return MarketInstance(
            n=n, segments=segments, labels=tuple(labels) if labels else None
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def load_instance(path):
    """Read an instance file; returns a market or a bundle market."""
    payload = _load_json(path)
    kind = _require(payload, "model", str(path))
    if kind in ("linear", "mnl"):
        return _build_market(payload, str(path), kind)
    if kind == "bundle":
        inner_kind = _require(payload, "inner_model", str(path))
        if inner_kind not in ("linear", "mnl"):
            raise ValidationError(f"{path}: field 'inner_model' must be linear or mnl")
        inner = _build_market(payload, str(path), inner_kind)
        base_n = _require(payload, "base_n", str(path))
        bundles = _require(payload, "bundles", str(path))
        try:
            return BundleMarket(
                base_n=int(base_n),
                bundles=tuple(np.asarray(x, dtype=float) for x in bundles),
                inner=inner,
            )
        except (ValidationError, TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: field 'bundles': {exc}") from None
    raise ValidationError(f"{path}: field 'model' must be linear, mnl, or bundle")


def save_config(config: ExperimentConfig, path) -> None:
    """Write an experiment config as JSON."""
    payload = dataclasses.asdict(config)
    payload["n_values"] = list(config.n_values)
    payload["m_values"] = list(config.m_values)
    payload["strategies"] = list(config.strategies)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_config(path) -> ExperimentConfig:
    """Read an experiment config, enforcing field names and value ranges."""
    payload = _load_json(path)
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(payload) - known
    if unknown:
        raise ValidationError(f"{path}: unknown config fields {sorted(unknown)}")
    kwargs = dict(payload)
    for key in ("n_values", "m_values", "strategies"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return ExperimentConfig(**kwargs)
    except (ValidationError, TypeError) as exc:
        raise ValidationError(f"{path}: {exc}") from None
