"""Two-player negotiation games between LLM-backed or scripted agents."""

from .core import BLUE, PLAYERS, RED, TIE, GameStatus, ResourceBundle, ScenarioKind, Trade
from .engine import run
from .persistence import counterfactual_rerun, load, rerun, save
from .protocol import Decision, StructuredMessage, parse_message, render_message
from .scenarios import build

__version__ = "0.1.0"

__all__ = [
    "BLUE",
    "PLAYERS",
    "RED",
    "TIE",
    "Decision",
    "GameStatus",
    "ResourceBundle",
    "ScenarioKind",
    "StructuredMessage",
    "Trade",
    "build",
    "counterfactual_rerun",
    "load",
    "parse_message",
    "render_message",
    "rerun",
    "run",
    "save",
]
