"""Targeted and general sentiment classification for Russian texts.

The package covers corpus loading, tweet normalization, entity masking with
auxiliary sentences, word vectors, a small autodiff engine, five classifier
families, training, evaluation measures and an experiment CLI.
"""

from importlib import resources

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a file shipped in ``sentipipe/data``."""
    return resources.files("sentipipe") / "data" / name
