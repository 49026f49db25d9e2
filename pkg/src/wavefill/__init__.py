"""Wavelet-domain image inpainting with frequency-separated completion branches."""
__version__ = "0.1.0"
