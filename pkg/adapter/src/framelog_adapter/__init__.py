"""framelog-adapter: raw video to .semb embedding files.

Decodes video, applies consistent per-clip augmentations, and runs frozen
pretrained backbones (or seeded random stand-ins when no checkpoint is
configured) to emit the engine's binary embedding format.
"""

from .augment import AugmentationParams, augment_clip
from .errors import AdapterError, DecodeError, IndexOutOfRange, ModelLoadError
from .extract import extract_clip_embeddings, extract_frame_embeddings
from .video import RawVideo, load_raw_video, resample_indices

__version__ = "0.1.0"
