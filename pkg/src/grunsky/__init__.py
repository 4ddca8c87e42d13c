"""Grunsky operators, Fredholm determinants and the Liouville action of analytic quasicircles."""
from . import action, cli, errors, faber, operators, pair, series, welding
from .action import ActionReport, action_report, s1, s1_tilde
from .faber import GrunskyTable, grunsky_table
from .operators import GrunskyBlocks, SpectralReport, blocks_from_table, fredholm_spectrum
from .pair import NormalizedPair
from .series import ExteriorSeries, TaylorSeries
from .welding import CircleMap, CurveSpec, EllipseCurve, catalog, weld

__all__ = [
    "ActionReport", "CircleMap", "CurveSpec", "EllipseCurve", "ExteriorSeries", "GrunskyBlocks",
    "GrunskyTable", "NormalizedPair", "SpectralReport", "TaylorSeries", "action", "action_report",
    "blocks_from_table", "catalog", "cli", "errors", "faber", "fredholm_spectrum", "grunsky_table",
    "operators", "pair", "s1", "s1_tilde", "series", "weld", "welding",
]
