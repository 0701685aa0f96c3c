from .mtf import (
    DegradedInputs,
    MtfKernel,
    blur_and_decimate,
    build_mtf_kernel,
    decimate,
    degrade_pair,
    degrade_tensor,
    ms_kernel,
    mtf_blur,
    mtf_blur_tensor,
    pan_kernel,
)

__all__ = [
    "MtfKernel",
    "DegradedInputs",
    "build_mtf_kernel",
    "mtf_blur",
    "decimate",
    "blur_and_decimate",
    "degrade_pair",
    "mtf_blur_tensor",
    "degrade_tensor",
    "ms_kernel",
    "pan_kernel",
]
