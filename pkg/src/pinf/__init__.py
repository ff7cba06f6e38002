"""Poor-image notification: multi-task image-quality gating, retake feedback,
and caption-metric evaluation.

The package gates an image-captioning pipeline on a 7-output quality
regressor (overall recognizability plus six flaw severities), explains to
the user why an image was rejected, and measures how excluding gated-out
images changes corpus caption metrics.
"""

from ._backend import available_backends, backend_name
from .calibration import (
    Calibration,
    ScoredLabels,
    auc_pr,
    auc_roc,
    mse,
    pearson_corr,
    precision_recall_at,
    select_threshold,
)
from .corpus import (
    AnnotatedCorpus,
    DegradationSpec,
    degrade_image,
    generate_corpus,
    load_annotations,
    render_scene,
    split_validation,
    unrecognizable_grade,
)
from .features import FeatureVector, Scaler, extract_features, fit_scaler
from .images import DecodeError, RasterImage, decode_image, encode_ppm
from .model import (
    AdamState,
    MlpParams,
    QualityModel,
    TrainConfig,
    TrainHistory,
    adam_step,
    forward,
    init_params,
    load_model,
    loss_and_grad,
    save_model,
    train,
)
from .pipeline import (
    GateConfig,
    GateDecision,
    RemoteCaptioner,
    Session,
    StubCaptioner,
    feedback_message,
    filter_dataset,
    gate,
    run_session,
)
from .quality import (
    FLAW_ORDER,
    OUTPUT_NAMES,
    FlawKind,
    QualityAnnotation,
    QualityPrediction,
    binarize_ground_truth,
    display_severity,
)
from .stem import porter_stem
from .textmetrics import (
    CaptionEvalReport,
    EvalPair,
    bleu4,
    cider,
    evaluate_corpus,
    meteor_lite,
    rouge_l,
    tokenize,
)

__version__ = "0.1.0"
