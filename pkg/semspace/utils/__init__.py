from .data_conversion import convert_to_str, convert_to_jsonable, parse_float_tokens
from .dates import get_iso8601_timestamp, StageTimer
from .hashing import hash_file, hash_array, hash_text
from .random_streams import derive_seed, stream_rng

__all__ = [
    "convert_to_str",
    "convert_to_jsonable",
    "parse_float_tokens",
    "get_iso8601_timestamp",
    "StageTimer",
    "hash_file",
    "hash_array",
    "hash_text",
    "derive_seed",
    "stream_rng",
]
