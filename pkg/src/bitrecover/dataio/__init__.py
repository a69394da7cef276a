from .images import load_image, save_image
from .manifest import DatasetManifest, load_manifest, save_manifest
from .synthetic import generate_synthetic, plane_coverage

__all__ = ["load_image", "save_image", "DatasetManifest", "load_manifest",
           "save_manifest", "generate_synthetic", "plane_coverage"]
