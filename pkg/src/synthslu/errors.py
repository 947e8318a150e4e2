"""Exception hierarchy shared by every module."""


class SluError(Exception):
    """Base class for all errors raised by synthslu."""


class ParseError(SluError, ValueError):
    pass


class LabelError(SluError, ValueError):
    """A label violates its type invariants (e.g. reserved characters)."""


class ConfigError(SluError, ValueError):
    pass


class FormatError(SluError, ValueError):
    pass


class RangeError(SluError, ValueError):
    pass


class InputError(SluError, ValueError):
    pass


class ShapeError(SluError, ValueError):
    pass


class SynthesisError(SluError, RuntimeError):
    def __init__(self, message, text=None, voice_id=None):
        super().__init__(message)
        self.text = text
        self.voice_id = voice_id


class CheckpointError(SluError, RuntimeError):
    pass


class DivergenceError(SluError, RuntimeError):
    def __init__(self, message, epoch=None, checkpoint=None):
        super().__init__(message)
        self.epoch = epoch
        self.checkpoint = checkpoint


class AudioLoadError(SluError, IOError):
    pass
