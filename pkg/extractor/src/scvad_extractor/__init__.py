"""Video-to-feature-stream extractor for the SCVF format."""

__version__ = "0.1.0"
