"""tfq: evolutionary search for volume-rendering opacity transfer functions
that make a software render match a target photograph, scored by a trained
Siamese image metric (or a pixel-MSE oracle)."""

from .raycast import GrayImage, RenderSettings, load_image, render, resample64, save_image
from .search import RunReport, SearchConfig, run_search
from .transfer import Chromosome, SeedConfig, TransferFunction, expand, seed_population, smooth
from .volume import BinnedVolume, Volume, bin_volume, load_volume, save_volume

__version__ = "0.1.0"

__all__ = [
    "GrayImage",
    "RenderSettings",
    "load_image",
    "render",
    "resample64",
    "save_image",
    "RunReport",
    "SearchConfig",
    "run_search",
    "Chromosome",
    "SeedConfig",
    "TransferFunction",
    "expand",
    "seed_population",
    "smooth",
    "BinnedVolume",
    "Volume",
    "bin_volume",
    "load_volume",
    "save_volume",
    "__version__",
]
