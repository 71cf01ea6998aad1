from .camera import Camera, RayBundle, generate_rays, intersect_aabb, ray_directions
from .image_io import encode_png, to_rgba8, write_png, write_raw_rgba
from .pathtrace import pathtrace_frame, trace_free_flight
from .raymarch import raymarch_frame
from .scene import RenderSettings, Scene
from .transfer import TransferFunction, grayscale_ramp, transparent, warm_body

__all__ = [
    "Camera",
    "RayBundle",
    "RenderSettings",
    "Scene",
    "TransferFunction",
    "encode_png",
    "generate_rays",
    "grayscale_ramp",
    "intersect_aabb",
    "pathtrace_frame",
    "ray_directions",
    "raymarch_frame",
    "to_rgba8",
    "trace_free_flight",
    "transparent",
    "warm_body",
    "write_png",
    "write_raw_rgba",
]
