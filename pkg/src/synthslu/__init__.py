"""End-to-end spoken language understanding trained on synthetic speech.

Modules: ``semantics`` (labels), ``corpus`` (manifests), ``synth`` (TTS
adapters and corpus synthesis), ``frontend`` (audio and features),
``model`` (encoder, decoders, beam search), ``train``, ``evaluation`` and
``experiments`` (sweeps and cross-validation).
"""
from .errors import SluError

__version__ = "0.1.0"

__all__ = ["SluError", "__version__"]
