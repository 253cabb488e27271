"""Deterministic radar-nowcasting toolkit.

Input fusion (spatial mixer, along-slope wind), a forward-only IMPA
translator, the MAD loss with analytic gradient, a block-matching advection
baseline and a verification suite, all on the NWC1 gridded-field format.
"""
from nwckit._backend import BACKEND
from nwckit.grid import ChannelKind, DomainSpec, FieldSequence, load, normalize, denormalize, save

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelKind",
    "DomainSpec",
    "FieldSequence",
    "denormalize",
    "load",
    "normalize",
    "save",
]
