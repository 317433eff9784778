"""Figure rendering for the IRS secrecy simulator's CSV outputs."""

from .render import (FigureSpec, infer_sweep_kind, render_convergence,
                     render_sweep)

__version__ = "0.1.0"
