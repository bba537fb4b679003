"""Object-aligned blind watermarking with geometric self-synchronization.

The package normalizes a masked object's cropping, translation, rotation,
and scale from its own invariant features (centroid, principal
orientation, minimum bounding square), embeds a keyed spread-spectrum
message in the normalized domain, and evaluates robustness against
cropping-paste attacks plus a bank of pixel distortions.
"""

from .attacks import (
    AttackRanges,
    AttackSpec,
    DistortionSpec,
    attack_pipeline,
    crop_paste,
    distort,
    sample_attack,
    evaluation_bank,
)
from .codec import (
    DecodeReport,
    EmbedPlan,
    MessageBits,
    embed,
    embed_into_host,
    extract,
    make_plan,
)
from .corpus import generate_corpus, make_background, make_host, perturb_mask
from .errors import (
    CapacityExceededError,
    EmptyRegionError,
    NoSignalError,
    PlacementInfeasibleError,
)
from .evalrun import EvalConfig, ResultRecord, run_eval, write_csv
from .metrics import bar, iou, masked_mean_abs_error, psnr, ssim
from .moments import (
    MomentSet,
    SquareRect,
    centroid,
    compute_moments,
    is_orientation_degenerate,
    min_bounding_square,
    principal_orientation,
)
from .raster import (
    SimilarityTransform,
    load_image,
    load_mask,
    luminance,
    save_image,
    save_mask,
    warp,
    warp_mask,
)
from .sync import (
    SyncAblationFlags,
    SyncObject,
    SyncRecord,
    apply_mask_crop,
    desynchronize_residual,
    synchronize,
)

__version__ = "0.1.0"


def __getattr__(name):
    # figure rendering pulls in matplotlib; load it only when asked for
    if name == "render_report":
        from .report import render_report

        return render_report
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "AttackRanges",
    "AttackSpec",
    "CapacityExceededError",
    "DecodeReport",
    "DistortionSpec",
    "EmbedPlan",
    "EmptyRegionError",
    "EvalConfig",
    "MessageBits",
    "MomentSet",
    "NoSignalError",
    "PlacementInfeasibleError",
    "ResultRecord",
    "SimilarityTransform",
    "SquareRect",
    "SyncAblationFlags",
    "SyncObject",
    "SyncRecord",
    "apply_mask_crop",
    "attack_pipeline",
    "bar",
    "centroid",
    "compute_moments",
    "crop_paste",
    "desynchronize_residual",
    "distort",
    "embed",
    "embed_into_host",
    "extract",
    "generate_corpus",
    "iou",
    "is_orientation_degenerate",
    "load_image",
    "load_mask",
    "luminance",
    "make_background",
    "make_host",
    "make_plan",
    "masked_mean_abs_error",
    "min_bounding_square",
    "perturb_mask",
    "principal_orientation",
    "psnr",
    "render_report",
    "run_eval",
    "sample_attack",
    "save_image",
    "save_mask",
    "ssim",
    "synchronize",
    "evaluation_bank",
    "warp",
    "warp_mask",
    "write_csv",
]
