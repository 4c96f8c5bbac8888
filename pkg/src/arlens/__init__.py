"""Headless augmented-reality overlay engine for chart interaction.

Subsystems: chart model (`chart`), command grammar (`commands`), session
state machine (`session`), plane tracker (`tracker`), renderer (`raster`),
overlay planner (`overlay`), scenario replay (`scenario`), and the wire
service (`service`, `server`).
"""

__version__ = "0.1.0"

from .errors import ArlensError, InputError, RuntimeFailure

__all__ = ["ArlensError", "InputError", "RuntimeFailure", "__version__"]
