"""
Estimate handlers

Pointwise forms compare both sides at each sample time; integral forms
compare accumulated state integrals against the input energy.
"""

from .base_handler import BaseEstimateHandler, EstimateSides
from .handler_factory import EstimateHandlerFactory

__all__ = ["BaseEstimateHandler", "EstimateHandlerFactory", "EstimateSides"]
