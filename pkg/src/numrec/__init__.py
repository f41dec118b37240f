"""Handwritten numeral recognition: chain-code and run-length features,
KNN and linear base classifiers, majority-vote fusion, and an evaluation
harness with dataset ingestion."""

from .imaging import (
    INK_DARK,
    INK_LIGHT,
    ZoneGrid,
    binarize,
    binarize_auto,
    crop_to_bounding_box,
    make_zone_grid,
    otsu_threshold,
    resize_binary,
)
from .chaincode import (
    ChainCodeSequence,
    compact_grid,
    dcc_pipeline,
    default_grid,
    extract_dcc,
    find_contour_points,
    trace_contours,
)
from .runlength import extract_rlc, horizontal_rlc, rlc_pipeline, vertical_rlc
from .classifiers import (
    KnnModel,
    LabeledSample,
    LinearModel,
    knn_predict,
    knn_train,
    linear_predict,
    linear_train,
    load_model,
    save_model,
)
from .config import ConfigError, RunConfig, VOTER_TAGS, parse_config_text
from .fusion import (
    FusionEnsemble,
    FusionPrediction,
    fuse_predict,
    load_ensemble,
    majority_vote,
    save_ensemble,
    train_ensemble,
)
from .data_io import (
    Dataset,
    generate_synthetic,
    load_idx,
    load_image,
    load_image_dir,
    write_idx,
)
from .evaluation import (
    EvalReport,
    evaluate,
    render_report,
    stratified_split,
)

__version__ = "0.1.0"
