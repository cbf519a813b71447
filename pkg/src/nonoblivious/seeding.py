"""Counter-based seed derivation.

A child seed is the first 8 bytes of ``blake2b(repr(keys))`` read as an
unsigned little-endian integer, with the parent seed as the first key.
Child seeds depend only on their own keys, so adding runs or instances never
changes the seeds of existing ones.
"""
import hashlib


def derive_seed(*keys) -> int:
    digest = hashlib.blake2b(repr(tuple(keys)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
