"""Figure regeneration for crosspilot sweep results."""

from .render import (FigureSpec, SchemaError, ber_floor, load_results,
                     parse_results, render)

__version__ = "0.1.0"
