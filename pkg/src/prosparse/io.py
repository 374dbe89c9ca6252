"""JSON fixtures for dictionaries and signals, and the key=value config format.

A fixture is one JSON object::

    {"N": 8, "M": 8, "bandwidth": 0, "circulant": true, "nodes": "fourier",
     "scale": 0.3535..., "support1": [0], "coeffs1": [{"re": 2.82, "im": 0}],
     "support2": [0], "coeffs2": [{"re": 1, "im": 0}],
     "phi_bands": [[{"re": .., "im": ..}, ...], ...],   # optional
     "y": [{"re": .., "im": ..}, ...]}                   # optional

``nodes`` is either ``"fourier"`` (``exp(-2j pi m / M)``) or a list of
``{re, im}`` objects. ``scale`` defaults to 1 for explicit nodes and to
``1/sqrt(N)`` for ``"fourier"``.

Config files hold one ``key = value`` per line; ``#`` starts a comment.
Keys use the long flag names with dashes or underscores.
"""

from __future__ import annotations

import json
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .dictionary import DictionaryConfig, SparseSignal, fourier_nodes
from .errors import InvalidInputError


def complex_to_json(values) -> list:
    return [{"re": float(v.real), "im": float(v.imag)} for v in np.asarray(values, dtype=complex).ravel()]


def complex_from_json(items, what: str = "value") -> np.ndarray:
    out = []
    for item in items:
        if isinstance(item, dict):
            try:
                out.append(complex(float(item["re"]), float(item.get("im", 0.0))))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInputError(f"bad complex {what}: {item!r}") from exc
        elif isinstance(item, (int, float)) and not isinstance(item, bool):
            out.append(complex(item))
        else:
            raise InvalidInputError(f"bad complex {what}: {item!r}")
    return np.array(out, dtype=complex)


def config_to_json(config: DictionaryConfig) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "N": config.N,
        "M": config.M,
        "bandwidth": config.bandwidth,
        "circulant": config.circulant,
        "scale": config.scale,
    }
    if config.fourier:
        out["nodes"] = "fourier"
    else:
        out["nodes"] = complex_to_json(config.nodes)
    if config.phi_bands is not None:
        out["phi_bands"] = [complex_to_json(row) for row in config.phi_bands]
    return out


def signal_to_json(signal: SparseSignal) -> Dict[str, Any]:
    return {
        "support1": list(signal.support1),
        "coeffs1": complex_to_json(signal.coeffs1),
        "support2": list(signal.support2),
        "coeffs2": complex_to_json(signal.coeffs2),
    }


def fixture_to_json(config: DictionaryConfig, signal: Optional[SparseSignal] = None,
                    y=None) -> Dict[str, Any]:
    out = config_to_json(config)
    if signal is not None:
        out.update(signal_to_json(signal))
    if y is not None:
        out["y"] = complex_to_json(y)
    return out


def _int(obj, key, default=None):
    if key not in obj:
        if default is None:
            raise InvalidInputError(f"missing field {key!r}")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise InvalidInputError(f"field {key!r} must be an integer")
    return val


def config_from_json(obj: Dict[str, Any]) -> DictionaryConfig:
    if not isinstance(obj, dict):
        raise InvalidInputError("fixture must be a JSON object")
    N = _int(obj, "N")
    M = _int(obj, "M", N)
    b = _int(obj, "bandwidth", 0)
    nodes_field = obj.get("nodes", "fourier")
    if nodes_field == "fourier":
        nodes, fourier = fourier_nodes(M), True
        scale = float(obj.get("scale", 1 / np.sqrt(N)))
    elif isinstance(nodes_field, list):
        nodes, fourier = complex_from_json(nodes_field, "node"), False
        scale = float(obj.get("scale", 1.0))
    else:
        raise InvalidInputError("nodes must be 'fourier' or a list of {re, im}")
    circulant = bool(obj.get("circulant", fourier and M == N))
    bands = None
    if obj.get("phi_bands") is not None:
        bands = np.array([complex_from_json(row, "band entry") for row in obj["phi_bands"]])
    return DictionaryConfig(N=N, M=M, nodes=nodes, bandwidth=b, circulant=circulant,
                            phi_bands=bands, scale=scale, fourier=fourier)


def signal_from_json(obj: Dict[str, Any]) -> Optional[SparseSignal]:
    if not any(k in obj for k in ("support1", "support2")):
        return None
    return SparseSignal(tuple(obj.get("support1", [])), complex_from_json(obj.get("coeffs1", []), "coefficient"),
                        tuple(obj.get("support2", [])), complex_from_json(obj.get("coeffs2", []), "coefficient"))


def load_fixture(path) -> Tuple[DictionaryConfig, Optional[SparseSignal], Optional[np.ndarray]]:
    """Read a fixture file; raises ``OSError`` or :class:`InvalidInputError`."""
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    config = config_from_json(obj)
    signal = signal_from_json(obj)
    y = complex_from_json(obj["y"], "measurement") if "y" in obj else None
    return config, signal, y


def parse_config_text(text: str) -> Dict[str, str]:
    """``key = value`` lines to a dict; keys normalised to underscores."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise InvalidInputError(f"config line {lineno}: empty key")
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def load_config_file(path) -> Dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
