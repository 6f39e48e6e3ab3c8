"""Text language for authoring scenarios (.itx files).

parse/format_canonical round-trip exactly; lint layers graph sanity checks
on top of model validation; export_graph_dot renders the step graph.
"""

from .parser import ParseResult, parse
from .formatter import format_canonical
from .linter import lint
from .dot import export_graph_dot

__all__ = ["parse", "ParseResult", "format_canonical", "lint", "export_graph_dot"]
