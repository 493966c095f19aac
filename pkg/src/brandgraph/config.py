"""Run configuration: JSON file defaults overridden by command-line flags."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .graph import _check_kind_weights, default_kind_weights
from .layout import LayoutParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...] = ()
    output: str = "out"
    kind_weights: dict[str, float] = field(default_factory=default_kind_weights)
    seed: int = 0
    resolution: float = 1.0
    eigenvector_tol: float = 1e-9
    pagerank_tol: float = 1e-9
    damping: float = 0.85
    max_iter: int = 1000
    layout: LayoutParams = LayoutParams()
    layout_posts: int = 50
    lexicon: str | None = None
    top_k: int = 10
    mask: bool = False
    mask_salt: str | None = None
    undirected_paths: bool = True
    user_projection: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind_weights", _check_kind_weights(self.kind_weights))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ConfigError("resolution must be positive")
        for name in ("eigenvector_tol", "pagerank_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.damping < 1:
            raise ConfigError("damping must lie in (0, 1)")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")
        if self.top_k < 1:
            raise ConfigError("top_k must be at least 1")
        if self.layout_posts < 0:
            raise ConfigError("layout_posts must be non-negative (0 disables the layout)")

    def to_dict(self) -> dict[str, Any]:
        """Every effective parameter, JSON-ready (the provenance record)."""
        out = dataclasses.asdict(self)
        out["inputs"] = list(self.inputs)
        out.pop("output")
        out["mask_salt"] = None if self.mask_salt is None else "<set>"
        return out

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> RunConfig:
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "layout" in data:
            layout = data["layout"]
            if isinstance(layout, Mapping):
                try:
                    data["layout"] = LayoutParams(**layout)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"layout: {exc}") from None
        if "inputs" in data:
            data["inputs"] = tuple(data["inputs"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read ``path`` (if given) and apply ``overrides`` on top; ``None`` values are ignored."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    layout = dict(data.get("layout", {}))
    for key in [k for k in overrides if k.startswith("layout.")]:
        layout[key.split(".", 1)[1]] = overrides.pop(key)
    if layout:
        data["layout"] = layout
    if "kind_weights" in overrides:
        merged = dict(data.get("kind_weights", default_kind_weights()))
        merged.update(overrides.pop("kind_weights"))
        data["kind_weights"] = merged
    data.update(overrides)
    return RunConfig.from_mapping(data)
