"""SPDC phase matching in uniaxial crystals and photon-pair coincidence statistics."""

__version__ = "0.1.0"
