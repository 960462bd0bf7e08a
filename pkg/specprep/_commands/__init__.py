"""Contains the core logic behind all specprep commands."""

from .demo_closure import demo_closure
from .design import design
from .simulate import simulate
from .summarize import summarize
from .synthesize import synthesize
from .transform import transform

__all__ = ["demo_closure", "design", "simulate", "summarize", "synthesize", "transform"]
