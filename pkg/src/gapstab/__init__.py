"""Spectral-gap stability toolkit: rounding almost-representations of finite
groups to exact ones, with certificates, nonlocal-game evaluators, and the
code-based measures that feed them."""

from . import (
    abelian,
    algebra,
    cli,
    codes,
    errors,
    games,
    groups,
    spectral,
    stability,
    suites,
)

__all__ = [
    "abelian",
    "algebra",
    "cli",
    "codes",
    "errors",
    "games",
    "groups",
    "spectral",
    "stability",
    "suites",
]
__version__ = "0.1.0"
