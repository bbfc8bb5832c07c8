"""Geometric transform attention toolkit: python bindings for the C++ core."""

from ._core import (
    gta_attention,
    gta_euclid_attention,
    kron_rep_dense,
    make_texture,
    pr_auc,
    render_view,
    rep_dense,
    run_checks,
    sample_rotation,
    vanilla_attention,
)

__all__ = [
    "gta_attention",
    "gta_euclid_attention",
    "kron_rep_dense",
    "make_texture",
    "pr_auc",
    "render_view",
    "rep_dense",
    "run_checks",
    "sample_rotation",
    "vanilla_attention",
]
