"""Verification-first referring-expression grounding toolkit."""

from ._core import (
    BoundingBox,
    OverlayStyle,
    RasterImage,
    __version__,
    a_sel,
    a_ver,
    acc_at,
    decide,
    emit_curves,
    gain_grid_argmax,
    iou,
    is_hit,
    majority_vote_acc,
    mc_multi_candidate,
    mc_two_candidate,
    p_threshold,
    parse_index,
    parse_truefalse,
    read_image,
    render_indexed_boxes,
    render_single_box,
    symmetric_gain,
    write_png,
)

__all__ = [
    "BoundingBox",
    "OverlayStyle",
    "RasterImage",
    "__version__",
    "a_sel",
    "a_ver",
    "acc_at",
    "decide",
    "emit_curves",
    "gain_grid_argmax",
    "iou",
    "is_hit",
    "majority_vote_acc",
    "mc_multi_candidate",
    "mc_two_candidate",
    "p_threshold",
    "parse_index",
    "parse_truefalse",
    "read_image",
    "render_indexed_boxes",
    "render_single_box",
    "symmetric_gain",
    "write_png",
]
