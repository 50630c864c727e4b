class UnsupportedLayerError(ValueError):
    """The source model uses a layer or activation the portable format lacks."""


class UnknownOracleError(ValueError):
    """No catalogued network under that name."""
