"""Simulator and audit tools for leakage-free quantum dialogue protocols."""

from .channel import AdversaryModel, RunOutcome, Transcript
from .protocol_bell import BellRunParams, run_bell
from .protocol_ghz import run_ghz
from .protocol_w import run_w

__all__ = ["AdversaryModel", "BellRunParams", "RunOutcome", "Transcript", "run_bell", "run_ghz", "run_w"]
