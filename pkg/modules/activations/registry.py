"""Registry of available activations, addressable by config spec strings."""

from typing import Dict, List

from ..errors import ValidationError
from .base import Activation
from .builtin import AbsActivation, IdentityActivation, LinearActivation, NegPartActivation, ShiftedReluActivation
from .hermite import check_growth
from .tabulated import TabulatedActivation


class ActivationRegistry:
    """Registry of named activations plus the parameterized ``linear:`` and ``table:`` forms."""

    def __init__(self):
        self._activations: Dict[str, Activation] = {}
        self._register_builtin_activations()

    def _register_builtin_activations(self):
        """Register built-in activations."""
        for activation in (IdentityActivation(), NegPartActivation(), AbsActivation(), ShiftedReluActivation()):
            self.register(activation)

    def register(self, activation: Activation):
        """Register a new activation."""
        self._activations[activation.activation_id] = activation

    def get_activation(self, spec: str) -> Activation:
        """
        Resolve an activation spec.

        Args:
            spec: A registered id, ``linear:a[,b]`` or ``table:<path.csv>``

        Returns:
            Activation instance
        """
        spec = spec.strip()
        if spec in self._activations:
            return self._activations[spec]

        kind, _, arg = spec.partition(":")
        if kind == "linear":
            try:
                values = [float(v) for v in arg.split(",")] if arg else [1.0]
            except ValueError as e:
                raise ValidationError(f"Bad linear activation spec '{spec}'") from e
            if len(values) not in (1, 2):
                raise ValidationError(f"Linear activation takes 'linear:a' or 'linear:a,b', got '{spec}'")
            return self._checked(LinearActivation(*values))
        if kind == "table" and arg:
            return self._checked(TabulatedActivation.from_csv(arg))

        raise ValidationError(f"Unknown activation: {spec}")

    @staticmethod
    def _checked(activation: Activation) -> Activation:
        check_growth(activation)
        return activation

    def list_activations(self) -> List[Activation]:
        return list(self._activations.values())

    def get_activation_ids(self) -> List[str]:
        return list(self._activations.keys())


# Global registry instance
_registry = ActivationRegistry()


def get_registry() -> ActivationRegistry:
    """Get the global activation registry."""
    return _registry


def get_activation(spec: str) -> Activation:
    return _registry.get_activation(spec)
