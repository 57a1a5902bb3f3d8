"""Laminar regret decomposition for online convex optimization over treeplexes.

Core modules:

``treeplex``    sequential decision spaces, sequence form, traversals
``minimizers``  local regret minimizers (RM, RM+, projected OGD)
``losses``      separable convex losses and dilated regularizers
``games``       Kuhn, Leduc and Goofspiel in sequence form
``solver``      laminar regret solver, self-play, saddle-point gap
``exploit``     Nash-anchored exploitation of a fixed opponent
``oracles``     brute-force reference computations
``cli``         experiment driver

Support: ``charts`` (SVG traces), ``validation`` (input checks) and
``estimators`` (scikit-learn style wrappers).
"""

from .games import GameInstance, build_goofspiel, build_kuhn, build_leduc, load_game
from .losses import SeparableLoss
from .solver import LaminarRegretSolver, SelfPlay, saddle_point_gap, solve
from .treeplex import PointSpec, Treeplex, build_treeplex, from_sequence_form, to_sequence_form

__version__ = "0.1.0"

__all__ = [
    "GameInstance", "LaminarRegretSolver", "PointSpec", "SelfPlay", "SeparableLoss",
    "Treeplex", "build_goofspiel", "build_kuhn", "build_leduc", "build_treeplex",
    "from_sequence_form", "load_game", "saddle_point_gap", "solve", "to_sequence_form",
]
