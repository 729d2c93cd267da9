from .ciphertext import (
    Ciphertext,
    MessageSpace,
    SCHEME_DGK,
    SCHEME_PAILLIER,
    SCHEMES,
    make_keyring,
    ciphertext_to_record,
    ciphertext_from_record,
)
from .paillier import (
    PaillierPublicKey,
    PaillierPrivateKey,
    paillier_keygen,
    paillier_keypair_from_primes,
    paillier_encrypt,
    paillier_decrypt,
)
from .dgk import DGKPublicKey, DGKPrivateKey, dgk_keygen, dgk_encrypt, dgk_decrypt, dgk_is_zero
from .algebra import (
    he_add,
    he_negate,
    he_sub,
    he_scalar_mul,
    encode_signed,
    decode_signed,
    encrypt,
    encrypt_signed,
    decrypt,
    decrypt_signed,
)

__all__ = [
    'Ciphertext',
    'MessageSpace',
    'SCHEME_DGK',
    'SCHEME_PAILLIER',
    'SCHEMES',
    'make_keyring',
    'ciphertext_to_record',
    'ciphertext_from_record',
    'PaillierPublicKey',
    'PaillierPrivateKey',
    'paillier_keygen',
    'paillier_keypair_from_primes',
    'paillier_encrypt',
    'paillier_decrypt',
    'DGKPublicKey',
    'DGKPrivateKey',
    'dgk_keygen',
    'dgk_encrypt',
    'dgk_decrypt',
    'dgk_is_zero',
    'he_add',
    'he_negate',
    'he_sub',
    'he_scalar_mul',
    'encode_signed',
    'decode_signed',
    'encrypt',
    'encrypt_signed',
    'decrypt',
    'decrypt_signed',
]
