"""Goal-oriented stochastic optimal control: objectives, belief filtering and case studies."""

import jax

jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
