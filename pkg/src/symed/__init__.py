"""Online, distributed symbolic representation of streaming time series."""

from .compressor import (
    CompressorConfig,
    EmittedEndpoint,
    OnlineCompressor,
    Piece,
    compress_offline,
    compress_stream,
    endpoints_to_pieces,
    fit_error,
)
from .digitizer import (
    DigitizerConfig,
    DigitizerState,
    OnlineDigitizer,
    SymbolString,
    digitize,
    digitize_offline,
    max_cluster_variance,
)
from .errors import (
    ConfigError,
    CorruptStateError,
    DatasetError,
    DegenerateVarianceError,
    FramingError,
    InvalidInputError,
    ProtocolError,
    StreamCorruptionError,
    SymedError,
)
from .metrics import compression_rate, dimension_reduction_rate, dtw
from .normalizer import NormalizerState
from .reconstructor import (
    inverse_compress,
    inverse_digitize,
    quantize_lengths,
    reconstruct_from_pieces,
    reconstruct_from_symbols,
)

__version__ = "0.1.0"

__all__ = [
    "CompressorConfig",
    "ConfigError",
    "CorruptStateError",
    "DatasetError",
    "DegenerateVarianceError",
    "DigitizerConfig",
    "DigitizerState",
    "EmittedEndpoint",
    "FramingError",
    "InvalidInputError",
    "NormalizerState",
    "OnlineCompressor",
    "OnlineDigitizer",
    "Piece",
    "ProtocolError",
    "StreamCorruptionError",
    "SymbolString",
    "SymedError",
    "compress_offline",
    "compress_stream",
    "compression_rate",
    "digitize",
    "digitize_offline",
    "dimension_reduction_rate",
    "dtw",
    "endpoints_to_pieces",
    "fit_error",
    "inverse_compress",
    "inverse_digitize",
    "max_cluster_variance",
    "quantize_lengths",
    "reconstruct_from_pieces",
    "reconstruct_from_symbols",
]
