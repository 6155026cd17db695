"""Dense stereo matching with learned patch similarity and classical refinement."""

__version__ = "0.1.0"
