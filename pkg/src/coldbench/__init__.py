"""coldbench: a desk-scale smart-fridge interaction testbed.

Everything runs against simulated hardware on a virtual clock: proximity
sensors and a door (``sim``), threshold-based position/action detection with
asynchronous item correlation (``detection``), a lease-pooled recognition
back end (``recognition``), a per-fridge long-poll event service
(``service`` / ``httpapi``), a take-out recommender (``takeout``), and an
evaluation harness with bootstrap statistics (``evaluation`` / ``runner`` /
``report``).
"""

from .clock import Scheduler, VirtualClock
from .config import (
    ConfigError,
    EngineConfig,
    FlavorConfig,
    InteractionProfile,
    ItemProfile,
    RecognizerConfig,
    SimConfig,
    TestbedConfig,
    ThresholdConfig,
)
from .detection import (
    DetectionEngine,
    DetectionEvent,
    ItemRecord,
    ItemStore,
    LedPanel,
    PositionStats,
    SensorReading,
    decide,
    replay_trace,
)
from .evaluation import (
    ConfusionCounts,
    ExperimentStep,
    GroundTruthStep,
    Metrics,
    PredictedOutcome,
    SubsampleResult,
    bootstrap,
    classify,
    generate_script,
    metrics,
    overhead_curve,
    welch_t_test,
)
from .recognition import (
    CanonicalRule,
    Canonicalizer,
    FrameCache,
    Lease,
    LeasePool,
    RecognitionPipeline,
    RecognitionResult,
    SimulatedRecognizer,
)
from .runner import ExperimentRunner, RunResult, run_experiment
from .service import EventEnvelope, FridgeHub, FridgeState, fold_state
from .sim import CameraFrame, ScriptError, VirtualFridge, frame_content, run_script
from .takeout import TakeoutConfig, TakeoutTracker, led_overlay

__version__ = "0.1.0"
