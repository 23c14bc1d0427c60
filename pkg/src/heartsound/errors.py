"""Exception hierarchy.

Everything raised on bad input derives from :class:`InputError`; the CLI maps
those to exit code 2 and anything else to exit code 1.
"""


class HeartSoundError(Exception):
    pass


class InputError(HeartSoundError, ValueError):
    pass


class TooShort(InputError):
    pass


class UnsupportedRate(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class SingleClass(InputError):
    pass


class TooFewFrames(InputError):
    pass


class FormatError(InputError):
    pass


class EmptyInput(InputError):
    pass


class OutOfRange(InputError):
    pass


class UnsortedPeaks(InputError):
    pass


class NoBeats(InputError):
    pass


class AllRejected(InputError):
    pass


class BadAlpha(InputError):
    pass


class BadConfig(InputError):
    pass


class NoOverlap(InputError):
    pass


class ZeroTruth(InputError):
    pass


class BadFormat(InputError):
    """Audio file header disagrees with the supported format.

    ``field`` names the offending header field ("channels", "sample_width",
    "sample_rate", "compression" or "container").
    """

    def __init__(self, field, detail=""):
        self.field = field
        super().__init__(f"{field}: {detail}" if detail else field)

    def __reduce__(self):
        return (type(self), (self.field,))


class NotFound(InputError, FileNotFoundError):
    pass
