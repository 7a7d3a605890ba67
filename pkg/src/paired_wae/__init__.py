"""Paired Wasserstein autoencoder package."""

try:
    from importlib.metadata import version

    __version__ = version("paired-wae")
except Exception:
    # Fallback value if package metadata is not available
    __version__ = "0.0.0"
