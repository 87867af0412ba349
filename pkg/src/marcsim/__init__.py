"""Link-level simulator and analytic error bounds for a two-user relay channel
with analogue network coding at the relay and nulling/SIC detection."""

from .bounds import BoundInputs, CodeConstants, StateProbs, theorem1_bound, theorem2_bound
from .channel import LinkPowers
from .coding import ConvCode
from .protocol import FrameSetup, run_frame
from .sweep import BerPoint, ConfigError, SweepConfig, run_bound, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BerPoint",
    "BoundInputs",
    "CodeConstants",
    "ConfigError",
    "ConvCode",
    "FrameSetup",
    "LinkPowers",
    "StateProbs",
    "SweepConfig",
    "run_bound",
    "run_frame",
    "run_sweep",
    "theorem1_bound",
    "theorem2_bound",
]
