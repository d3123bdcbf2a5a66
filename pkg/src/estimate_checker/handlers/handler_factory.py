"""
Factory for creating the handler of an estimate form.
"""

import logging

from exceptions import EstimateSpecError

from ..spec import INTEGRAL_FORMS, POINTWISE_FORMS, EstimateForm, EstimateSpec
from .base_handler import BaseEstimateHandler
from .integral_handler import IntegralEstimateHandler
from .pointwise_handler import AsymptoticGainHandler, PointwiseEstimateHandler


class EstimateHandlerFactory:
    """Factory for creating estimate handlers."""

    @staticmethod
    def create_handler(spec: EstimateSpec) -> BaseEstimateHandler:
        """
        Create the handler matching the spec's form.

        Args:
            spec: Estimate specification

        Returns:
            Handler instance for the form
        """
        if spec.form is EstimateForm.ASYMPTOTIC_GAIN:
            handler = AsymptoticGainHandler(spec)
        elif spec.form in POINTWISE_FORMS:
            handler = PointwiseEstimateHandler(spec)
        elif spec.form in INTEGRAL_FORMS:
            handler = IntegralEstimateHandler(spec)
        else:
            raise EstimateSpecError(f"no handler for form {spec.form}")
        logging.debug(f"Created {type(handler).__name__} for {spec.form.value}")
        return handler

    @staticmethod
    def get_supported_forms() -> list[str]:
        """
        Get list of supported estimate forms.

        Returns:
            List of form tags
        """
        return [form.value for form in EstimateForm]

    @staticmethod
    def is_integral(form: EstimateForm) -> bool:
        return form in INTEGRAL_FORMS
