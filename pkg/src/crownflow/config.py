"""Run configuration: JSON schema, validation, and fixture wiring.

Complex numbers are 2-arrays [re, im]; all cross-references (edge ids,
puncture ids) are validated before any numerics run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quaddiff import PrincipalPart
from .surfaces import (
    IdealTriangulation,
    MarkedBorderedSurface,
    once_punctured_torus,
    one_boundary_torus,
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _as_complex(value, path: str) -> complex:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(path, "complex values are [re, im] pairs")
    return complex(float(value[0]), float(value[1]))


@dataclass
class RunConfig:
    surface: MarkedBorderedSurface
    triangulation: IdealTriangulation
    coords: np.ndarray
    signing: dict[int, int]
    principal_parts: dict[str, PrincipalPart]
    metric: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    fixture: str = ""
    raw: dict = field(default_factory=dict)


_FIXTURES = {
    "once_punctured_torus": once_punctured_torus,
    "one_boundary_torus": one_boundary_torus,
}


def load_config(path: str | Path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    sb = data.get("surface")
    if not isinstance(sb, dict):
        raise ConfigError("surface", "missing surface block")
    surface = MarkedBorderedSurface(
        genus=int(sb.get("genus", -1)),
        boundary_marked=tuple(int(n) for n in sb.get("boundary_marked", [])),
        punctures=int(sb.get("punctures", 0)),
        puncture_kinds=tuple(sb.get("puncture_kinds", [])),
    )

    tb = data.get("triangulation")
    if isinstance(tb, str):
        if tb not in _FIXTURES:
            raise ConfigError("triangulation", f"unknown fixture {tb!r}")
        tri = _FIXTURES[tb]()
        fixture = tb
    elif isinstance(tb, dict):
        try:
            gluing = tuple(
                (tuple(map(int, a)), tuple(map(int, b))) for a, b in tb["gluing"]
            )
            tri = IdealTriangulation(int(tb["triangles"]), gluing)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("triangulation", f"bad gluing table: {exc}") from exc
        fixture = ""
    else:
        raise ConfigError("triangulation", "must be a fixture name or gluing table")

    ct = tri.compiled()
    cb = data.get("coordinates")
    if not isinstance(cb, list) or len(cb) != ct.n_edges:
        raise ConfigError(
            "coordinates", f"need {ct.n_edges} edge coordinates as [re, im] pairs"
        )
    coords = np.array(
        [_as_complex(v, f"coordinates[{k}]") for k, v in enumerate(cb)], dtype=complex
    )
    if np.any(coords == 0):
        raise ConfigError("coordinates", "edge coordinates must be nonzero")

    signing = {}
    for key, val in (data.get("signing") or {}).items():
        if int(val) not in (-1, 1):
            raise ConfigError(f"signing.{key}", "signing values are +1 or -1")
        signing[int(key)] = int(val)

    pparts = {}
    for key, block in (data.get("principal_parts") or {}).items():
        path = f"principal_parts.{key}"
        order = int(block.get("order", -1))
        coeffs = tuple(
            _as_complex(c, f"{path}.coefficients[{j}]")
            for j, c in enumerate(block.get("coefficients", []))
        )
        try:
            if order >= 3:
                pparts[key] = PrincipalPart(order, coeffs)
            else:
                lead = coeffs[0] if coeffs else 0j
                pparts[key] = PrincipalPart(order, (), lead)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc

    return RunConfig(
        surface=surface,
        triangulation=tri,
        coords=coords,
        signing=signing,
        principal_parts=pparts,
        metric=dict(data.get("metric", {})),
        flow=dict(data.get("flow", {})),
        output=dict(data.get("output", {})),
        fixture=fixture,
        raw=data,
    )


def fuchsian_torus_fixture_config(refine: int = 2, seed: int = 5) -> dict:
    return {
        "surface": {"genus": 1, "punctures": 1, "puncture_kinds": ["cusp"]},
        "triangulation": "once_punctured_torus",
        "coordinates": [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]],
        "signing": {"0": 1},
        "principal_parts": {"puncture_0": {"order": 1, "coefficients": []}},
        "metric": {"y_trunc": 3.0},
        "flow": {
            "cfl": 0.1,
            "tol_tau": 1e-5,
            "t_max": 200.0,
            "refine": refine,
            "cadence": 50,
            "perturbation": 0.3,
            "seed": seed,
        },
        "output": {"cadence": 50, "plots": "off"},
    }


def crowned_torus_fixture_config(refine: int = 2, alpha1: float = 0.8) -> dict:
    return {
        "surface": {"genus": 1, "boundary_marked": [1]},
        "triangulation": "one_boundary_torus",
        "coordinates": [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        "signing": {},
        "principal_parts": {
            "boundary_0": {"order": 3, "coefficients": [[alpha1, 0.0]]}
        },
        "metric": {"y_trunc": 6.0, "r_trunc": 8.0},
        "flow": {
            "cfl": 0.1,
            "tol_tau": 1e-5,
            "t_max": 200.0,
            "refine": refine,
            "cadence": 50,
        },
        "output": {"cadence": 50, "plots": "off"},
    }
