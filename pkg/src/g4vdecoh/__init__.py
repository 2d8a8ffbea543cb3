"""Phonon-induced decoherence of group-IV color-center spin qubits."""

from .g4v import ModelConstants, VacancyParams
from .link import LinkConfig
from .qstate import DensityOperator, PureState

__all__ = ["DensityOperator", "LinkConfig", "ModelConstants", "PureState", "VacancyParams"]
__version__ = "0.1.0"
