from functools import lru_cache
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from edspower.curve import to_short_model
from edspower.eds import EDSequence
from edspower.io import load_curve
from edspower.tower import build_tower

ROOT = Path(__file__).resolve().parents[1]
CURVES = ROOT / "data" / "curves"
FORMS = ROOT / "data" / "forms"
BUNDLED = sorted(p.stem for p in CURVES.glob("*.json"))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@lru_cache(maxsize=None)
def curve(name):
    return load_curve(CURVES / f"{name}.json")


@lru_cache(maxsize=None)
def sequence(name):
    c = curve(name)
    return EDSequence(c.model, c.point)


@lru_cache(maxsize=None)
def tower_for(name):
    c = curve(name)
    short, image = to_short_model(c.model, c.point)
    return build_tower(short, image.x, image.y)


@pytest.fixture
def curve_path():
    return lambda name: str(CURVES / f"{name}.json")
