"""Camera-registration preprocessing and geometric video-understanding baselines.

The package covers the desk-scale pipeline end to end: homography-based
frame filtering, external-SfM orchestration with automated verification
and restart, reconstruction file formats, geometric mask-propagation
baselines, the evaluation metric suite, and the benchmark split
generator, plus a synthetic-scene harness that supplies exact ground
truth for all of it.
"""

from .benchmark import (
    ActionSegment,
    ObjectAnnotation,
    SplitAssignment,
    SplitConfig,
    filtering_study,
    generate_split,
    reconstruction_stats,
    udos_mask_variants,
)
from .features import FeatureConfig, FeatureSet, Keypoint, MatchSet, detect_and_describe, match
from .filtering import (
    ArrayFrameSource,
    FilterConfig,
    FilterResult,
    FrameManifestSource,
    ImageDirectorySource,
    compare_uniform,
    filter_frames,
)
from .geometry import (
    CameraIntrinsics,
    CameraModel,
    Reconstruction,
    RegisteredFrame,
    RigidPose,
    SparsePoint,
    backproject,
    mean_reprojection_error,
    mean_rotation,
    project,
    relative_orientation,
)
from .metrics import (
    MetricReport,
    ScoreMap,
    average_precision,
    boundary_f,
    jaccard,
    jf_mean,
    mean_average_precision,
    psnr,
    psnr_split,
)
from .overlap import (
    Homography,
    OverlapScore,
    RansacConfig,
    dlt_solve,
    estimate_homography,
    symmetric_overlap,
    visual_overlap,
)
from .propagation import (
    BinaryMask,
    LiftedObject,
    PropagationConfig,
    fixed_in_2d,
    lift_mask,
    reproject_object,
)
from .recon_io import (
    OrchestrateConfig,
    PipelineStage,
    PipelineState,
    SfmTool,
    VerifyConfig,
    orchestrate,
    read_colmap_text,
    read_epic_fields_json,
    verify,
    write_colmap_text,
    write_epic_fields_json,
)

__version__ = "0.1.0"
