from src.render.backward import LossGradient, RenderContext, backward, loss_and_vertex_grads
from src.render.blend import DEFAULT_BETA, BlendOutput, blend_colors, hard_composite, image_loss, render_pred, soft_blend
from src.render.rasterizer import EMPTY_PROXIMITY, RenderTarget, rasterize, render_silhouette

__all__ = [
    "DEFAULT_BETA",
    "EMPTY_PROXIMITY",
    "BlendOutput",
    "LossGradient",
    "RenderContext",
    "RenderTarget",
    "backward",
    "blend_colors",
    "hard_composite",
    "image_loss",
    "loss_and_vertex_grads",
    "rasterize",
    "render_pred",
    "render_silhouette",
    "soft_blend",
]
