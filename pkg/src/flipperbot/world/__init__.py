from . import dynamics, geom, render, scenario, state  # noqa: F401
