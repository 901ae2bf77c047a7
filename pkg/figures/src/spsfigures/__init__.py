"""Figure rendering for spsbench result CSVs.

Consumes only the documented CSV schema; the simulator package is not
imported. Output is deterministic: rendering the same CSV twice produces
byte-identical image files.
"""

from .render import FIGURES, FigureSpec, RenderError, render

__version__ = "0.1.0"
