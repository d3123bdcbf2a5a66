"""
Input systems x' = f(x, u): the definition language, piecewise-constant
signals, feedback and saturation wrappers, and the RK 5(4) simulator.
"""

from .signals import InputSignal, InputSignalRecord, ball_samples, exact_integral, piecewise_uniform
from .simulator import BlowupReport, Trajectory, TrajectoryStatus, TrajectoryStatusRecord, simulate
from .systems import (
    ClosedLoopSystem,
    ControlSystem,
    InputSystem,
    SaturatedSystem,
    StateFunction,
    close_loop,
    parse_system,
    saturated_system,
)


def saturate(signal: InputSignal, bound: float) -> InputSignal:
    return signal.saturate(bound)


def concat(first: InputSignal, second: InputSignal, switch_time: float) -> InputSignal:
    return first.concat(second, switch_time)


__all__ = [
    "BlowupReport",
    "ClosedLoopSystem",
    "ControlSystem",
    "InputSignal",
    "InputSignalRecord",
    "InputSystem",
    "SaturatedSystem",
    "StateFunction",
    "Trajectory",
    "TrajectoryStatus",
    "TrajectoryStatusRecord",
    "ball_samples",
    "close_loop",
    "concat",
    "exact_integral",
    "parse_system",
    "piecewise_uniform",
    "saturate",
    "saturated_system",
    "simulate",
]
