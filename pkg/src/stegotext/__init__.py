"""Distribution-preserving steganography and watermarking for probabilistic
token generators.

A secret key turns an ordinary sampler into one whose randomness is keyed;
holders of the key can detect the correlation (watermarking) or drive it with
a feedback code to carry an arbitrary payload (steganography), while anyone
without the key sees the model's unmodified output distribution.
"""

from .analysis import (
    CapacityPoint,
    CapacityResult,
    capacity_sweep,
    entropy_profile,
    linear_fit,
    read_capacity_csv,
    write_capacity_csv,
)
from .ecc import (
    CodeSymbol,
    EccState,
    decode,
    last_agree,
    next_symbol,
    potential,
    required_length,
    simulate_channel,
    suffix_len,
)
from .errors import (
    ConfigError,
    EncodingError,
    ImpossibleSampleError,
    InvalidPrefixError,
    ModelUnavailableError,
    ProtocolError,
    StegotextError,
    TransmissionComplete,
)
from .keys import PrfInput, SecretKey, load_key, prf_unit, save_key, setup
from .models import (
    BinaryReduction,
    BitDistribution,
    CoinModel,
    DeterministicModel,
    EntropyLedger,
    HttpModel,
    MarkovModel,
    ReplayModel,
    RecordingModel,
    StdioModel,
    TokenDistribution,
    UniformModel,
    bit_conditional,
    bits_to_tokens,
    model_from_config,
    sample_bit,
    token_width,
    tokens_to_bits,
)
from .payload import frame_payload, unframe_payload
from .steg import (
    SaturationReport,
    StegConfig,
    saturation_check,
    steg_generate,
    steg_generate_one,
    steg_retrieve,
    steg_retrieve_one,
)
from .transcript import BitRecord, Transcript
from .watermark import (
    Score,
    WatermarkVerdict,
    bit_score,
    plain_generate,
    wat_detect,
    wat_generate,
)

__version__ = "0.1.0"
