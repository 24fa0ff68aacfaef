"""Simulated uncertain dynamical systems.

Every model exposes the same duck-typed surface; the module-level functions below
are thin dispatchers kept for call sites that prefer a functional style.
"""

from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from goalctl.env.cstr import Cstr
from goalctl.env.double_pendulum import DoublePendulum
from goalctl.env.linear_gaussian import LinearGaussian

KINDS = {"linear_gaussian": LinearGaussian, "cstr": Cstr, "double_pendulum": DoublePendulum}


def default_params(kind):
    text = resources.files("goalctl.data").joinpath(f"{kind}.toml").read_text()
    return tomllib.loads(text)


def load_params(path):
    with open(Path(path), "rb") as fh:
        return tomllib.load(fh)


def make_model(kind=None, params=None, path=None):
    """Build a model from a parameter dict, a TOML file, or the shipped defaults."""
    if path is not None:
        params = load_params(path)
    if params is None:
        params = default_params(kind)
    kind = kind or params.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown environment kind {kind!r}")
    params = {k: v for k, v in params.items() if k != "kind"}
    return KINDS[kind].from_params(params)


def sample_initial(model, rng):
    return model.sample_initial(rng)


def transition(model, x, u, psi, rng):
    return model.transition(x, u, psi, rng)


def measure(model, x, rng):
    return model.measure(x, rng)


def transition_logpdf(model, x, u, psi, x_next):
    return model.transition_logpdf(x, u, psi, x_next)


def measurement_logpdf(model, x, y):
    return model.measurement_logpdf(x, y)
