"""Exact-arithmetic engine for a truncated free-boson vertex algebra, the
sewing-parametrized product of multi-point rational forms, and the attached
chain-cochain complex, together with a verification CLI."""

__version__ = "0.1.0"
