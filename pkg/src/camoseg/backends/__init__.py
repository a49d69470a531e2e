"""Model backends: abstract interfaces, remote clients, synthetic oracles."""

from .base import (
    BackendConfig,
    BackendError,
    ChatSession,
    MllmBackend,
    ProtocolError,
    VfmBackend,
    VlmBackend,
)
from .remote import RemoteMllm, RemoteVfm, RemoteVlm
from .synthetic import (
    SyntheticMllm,
    SyntheticScene,
    SyntheticVfm,
    SyntheticVlm,
    render_scene_image,
)

__all__ = [
    "BackendConfig",
    "BackendError",
    "ChatSession",
    "MllmBackend",
    "ProtocolError",
    "RemoteMllm",
    "RemoteVfm",
    "RemoteVlm",
    "SyntheticMllm",
    "SyntheticScene",
    "SyntheticVfm",
    "SyntheticVlm",
    "VfmBackend",
    "VlmBackend",
    "render_scene_image",
]
