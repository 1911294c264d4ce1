"""Python bindings for the batfill image-completion library."""

from ._batfill import (
    BatfillError,
    Model,
    Palette,
    complete,
    decode,
    diversity,
    encode,
    fit_palette,
    init_model,
    load_model,
    logits,
    make_dataset,
    permute,
    pixel_l1,
    psnr,
    random_mask,
    read_palette,
    token_accuracy,
    train,
    write_palette,
)

__all__ = [
    "BatfillError",
    "Model",
    "Palette",
    "complete",
    "decode",
    "diversity",
    "encode",
    "fit_palette",
    "init_model",
    "load_model",
    "logits",
    "make_dataset",
    "permute",
    "pixel_l1",
    "psnr",
    "random_mask",
    "read_palette",
    "token_accuracy",
    "train",
    "write_palette",
]
