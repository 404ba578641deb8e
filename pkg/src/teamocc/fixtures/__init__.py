"""Bundled desk-scale models.

``m_unit``   one state, singleton observations, two binary agents; c = a1 + a2, d = (a1,).
``m_match``  two sticky states, agent 1 sees the state through a 3/4-accurate channel.
``m_reveal`` the common observation reveals the state; agent 1 sees a private coin.
``m_corr``   m_unit dynamics with a miscoordination cost and agent 1 pinned to a 1/2 marginal.
"""

from importlib import resources

from ..model import load_model

NAMES = ("m_unit", "m_match", "m_reveal", "m_corr")


def fixture_path(name):
    return resources.files(__name__) / f"{name}.json"


def load_fixture(name):
    if name not in NAMES:
        raise KeyError(f"unknown fixture {name!r}; choose from {NAMES}")
    with resources.as_file(fixture_path(name)) as path:
        return load_model(path)
