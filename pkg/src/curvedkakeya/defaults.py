"""Calibration constants shipped with the package (data/defaults.json)."""
from __future__ import annotations

import json
from importlib import resources


def load_defaults(path=None) -> dict:
    if path is None:
        text = resources.files("curvedkakeya").joinpath("data/defaults.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


DEFAULTS = load_defaults()
