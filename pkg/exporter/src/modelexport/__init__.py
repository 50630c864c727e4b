"""Portable model files for the saferadius verifier: conversion and oracles."""

__version__ = "0.1.0"

from .catalog import make_oracle_net, oracle_forward, oracle_input_shape, oracle_names
from .convert import ExportManifest, export, write_portable
from .errors import UnknownOracleError, UnsupportedLayerError

__all__ = [
    "ExportManifest",
    "UnknownOracleError",
    "UnsupportedLayerError",
    "export",
    "make_oracle_net",
    "oracle_forward",
    "oracle_input_shape",
    "oracle_names",
    "write_portable",
]
