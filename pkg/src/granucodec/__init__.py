"""granucodec: a variable-rate, block-granularity VQ image codec.

Blocks of 16x16 pixels are ranked by spatial entropy and represented at
fine, medium or coarse granularity; the retained VQ indices are Huffman
coded against a corpus-trained frequency table, and a closed-form rate
model maps granularity ratios to bits per pixel.
"""

from .granularity import RatioTriple
from .imaging import ImagePlane, load_ppm, save_ppm, psnr
from .pipeline import CodecSession, decode_image, encode_image

__all__ = [
    "CodecSession",
    "ImagePlane",
    "RatioTriple",
    "decode_image",
    "encode_image",
    "load_ppm",
    "psnr",
    "save_ppm",
]

__version__ = "0.1.0"
