"""Rolling-shutter optical-acoustic side-channel simulator and recovery toolkit.

Sound vibrates a smartphone camera's movable lens; a rolling shutter turns
that motion into row-wise image distortion; image registration turns the
distortion back into audio.  The submodules model each step and the
countermeasures that break it:

``signal``        audio synthesis and the acoustic-to-lens mechanical path
``camera``        sensor geometry, shutter timing, presets, readout schedules
``renderer``      rolling-shutter frame synthesis from lens motion
``registration``  diffeomorphic demons registration and channel extraction
``recovery``      exact row solver, preprocessing and audio assembly
``defense``       sample-rate, random-coded readout, lens lock and VCM design
``metrics``       SNR, frequency tracking, captured-fraction and advantage
``pipeline``      end-to-end helpers; ``experiment`` and ``cli`` drive them
"""

__version__ = "0.1.0"

from . import camera, defense, metrics, pipeline, recovery, registration, renderer, signal
from .camera import SensorGeometry, ShutterSchedule, ShutterTiming, make_schedule, preset
from .errors import (ConfigurationError, CoverageError, DegenerateSceneError, InfeasibleDesignError,
                     InputError, MarginError, MaskError, RangeError, RSAcousticError,
                     SingularityError, TimingError, UnderdeterminedError)
from .pipeline import Simulation, extract, recover, simulate, tone_response
from .registration import ChannelSet, DemonsParams, register
from .renderer import FrameSequence, PixelMotion, Scene, render_frame, render_video, texture_scene
from .signal import AudioSignal, LensMotion, MechanicalPath, synth_chirp, synth_tone

__all__ = [
    "__version__",
    "camera", "defense", "metrics", "pipeline", "recovery", "registration", "renderer", "signal",
    "SensorGeometry", "ShutterSchedule", "ShutterTiming", "make_schedule", "preset",
    "RSAcousticError", "RangeError", "InputError", "ConfigurationError", "TimingError",
    "SingularityError", "CoverageError", "MarginError", "DegenerateSceneError",
    "UnderdeterminedError", "MaskError", "InfeasibleDesignError",
    "Simulation", "simulate", "extract", "recover", "tone_response",
    "ChannelSet", "DemonsParams", "register",
    "FrameSequence", "PixelMotion", "Scene", "render_frame", "render_video", "texture_scene",
    "AudioSignal", "LensMotion", "MechanicalPath", "synth_chirp", "synth_tone",
]
