"""Multi-key multi-recipient symmetric encryption from LWE."""
from .codec import (
    GrayImage,
    WindowStream,
    decode_stream,
    encode_image,
    pack_messages,
    read_image,
    read_pgm,
    window_width,
    write_pgm,
)
from .errors import CapacityError, DimensionError
from .field import DEFAULT_FIELD, MERSENNE_31, FieldElement, FieldParams
from .formats import FormatError, dump, load
from .prm import SecretKeyMatrix, lwe_prm_step, recursive_prm
from .sampler import GaussianSpec, Rng, Seed, build_gaussian, degenerate_gaussian
from .scheme import (
    Ciphertext,
    MessageMatrix,
    RecipientKey,
    SchemeParams,
    decrypt_all,
    decrypt_recipient,
    encrypt,
    keygen,
    recipient_key,
    setup,
)

__version__ = "0.1.0"
