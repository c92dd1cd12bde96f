"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GridFreqError(Exception):
    """Base class for all gridfreq errors."""


# --- model construction / validation ----------------------------------------

class ModelError(GridFreqError):
    """Invalid grid model definition."""


class DuplicateArea(ModelError):
    pass


class DanglingTieEndpoint(ModelError):
    pass


class InvalidTie(ModelError):
    """Tie with identical endpoints."""


class DuplicateTie(ModelError):
    """More than one tie for the same unordered area pair."""


class DisconnectedGraph(ModelError):
    pass


class NonPositiveParameter(ModelError):
    """A parameter violated its sign constraint; the message names the field."""


class NonPositiveBasePower(ModelError):
    pass


class NonPositiveFrequency(ModelError):
    pass


class ZeroInertia(ModelError):
    """H = 0 makes the swing dynamics singular; callers must reject it."""


class EmptyEntryList(ModelError):
    pass


class ZeroTotalInertia(ModelError):
    pass


# --- simulation --------------------------------------------------------------

class SimulationError(GridFreqError):
    pass


class EventOffGrid(SimulationError):
    """Event time is not a multiple of the solver step."""


class NonFiniteState(SimulationError):
    """Divergence detected; carries the partial trajectory and a diagnostic."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class EmptyTrajectory(SimulationError):
    pass


class TopologyMismatch(SimulationError):
    pass


# --- dispatch analytics -------------------------------------------------------

class AnalyticsError(GridFreqError):
    pass


class MalformedRow(AnalyticsError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NonMonotoneTimestamps(AnalyticsError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NegativePower(AnalyticsError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ZeroLoad(AnalyticsError):
    pass


class ZeroGeneration(AnalyticsError):
    pass


class EmptySeries(AnalyticsError):
    pass


class BadEdges(AnalyticsError):
    pass


# --- configuration / CLI ------------------------------------------------------

class ConfigError(GridFreqError):
    """Bad run configuration; the message carries the offending key path."""
