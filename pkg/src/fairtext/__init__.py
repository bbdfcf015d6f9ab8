"""fairtext: detect biased language in news-style text and rewrite it.

The flow has four stages: a binary bias detector gates each input,
a recognizer locates the biased spans, the spans are masked and refilled
one slot at a time by an infiller under a beam search, and the refilled
texts are re-scored by the detector to select acceptable rewrites.
"""

from .dataset import (
    AnnotatedExample,
    DatasetRecord,
    Label,
    LoadResult,
    MatchPolicy,
    Tag,
    TokenTagSequence,
    derive_spans,
    load_dataset,
    match_phrases,
    split,
    to_token_tags,
    whitespace_tokenize,
)
from .debias import CandidateScore, DebiasResult, DebiasStatus, rescore, select
from .detection import (
    DetectionResult,
    DetectorBackend,
    TrainedDetector,
    TrainingConfig,
    detect,
    load_detector,
    save_detector,
    train_detector,
)
from .errors import (
    BackendError,
    DataFormatError,
    FairtextError,
    ModelLoadError,
    NoFillError,
    SingleClassError,
    ValidationError,
)
from .evaluation import (
    ConfusionCounts,
    MetricsReport,
    evaluate_detection,
    evaluate_recognition,
    metrics,
    render_table,
)
from .masking import (
    FillCandidate,
    Granularity,
    InfillerBackend,
    MaskedText,
    build_masked,
    shift_fill,
    validate_infiller,
)
from .pipeline import (
    BatchError,
    Pipeline,
    PipelineConfig,
    load_config,
    run,
    run_batch,
)
from .recognition import (
    BiasSpan,
    RecognizerBackend,
    TrainedRecognizer,
    lexicon_recognize,
    load_recognizer,
    recognize,
    save_recognizer,
    train_recognizer,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedExample",
    "BackendError",
    "BatchError",
    "BiasSpan",
    "CandidateScore",
    "ConfusionCounts",
    "DataFormatError",
    "DatasetRecord",
    "DebiasResult",
    "DebiasStatus",
    "DetectionResult",
    "DetectorBackend",
    "FairtextError",
    "FillCandidate",
    "Granularity",
    "InfillerBackend",
    "Label",
    "LoadResult",
    "MaskedText",
    "MatchPolicy",
    "MetricsReport",
    "ModelLoadError",
    "NoFillError",
    "Pipeline",
    "PipelineConfig",
    "RecognizerBackend",
    "SingleClassError",
    "Tag",
    "TokenTagSequence",
    "TrainedDetector",
    "TrainedRecognizer",
    "TrainingConfig",
    "ValidationError",
    "build_masked",
    "derive_spans",
    "detect",
    "evaluate_detection",
    "evaluate_recognition",
    "lexicon_recognize",
    "load_config",
    "load_dataset",
    "load_detector",
    "load_recognizer",
    "match_phrases",
    "metrics",
    "recognize",
    "render_table",
    "rescore",
    "run",
    "run_batch",
    "save_detector",
    "save_recognizer",
    "select",
    "shift_fill",
    "split",
    "to_token_tags",
    "train_detector",
    "train_recognizer",
    "validate_infiller",
    "whitespace_tokenize",
]
