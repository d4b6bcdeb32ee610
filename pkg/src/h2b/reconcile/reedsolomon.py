"""RS(15, 3) over GF(16) and the code-offset reconciliation baseline.

Field: GF(2^4) with primitive polynomial x^4 + x + 1. Codewords are 15
symbols, systematic with the 3 message symbols first; the decoder
corrects up to 6 symbol errors (Berlekamp-Massey, Chien search, Forney).
Keys are cut into 60-bit blocks, 4 bits per symbol, MSB first.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import ParameterError, ReconciliationError
from ..quantizer import BitKey

__all__ = [
    "GF16",
    "RSCode",
    "RS_15_3",
    "rs_reconcile_offset",
    "rs_reconcile_apply",
    "BLOCK_BITS",
]

SYMBOL_BITS = 4


class GF16:
    PRIMITIVE = 0b10011
    ORDER = 15

    exp = [0] * 30
    log = [0] * 16
    _v = 1
    for _i in range(15):
        exp[_i] = exp[_i + 15] = _v
        log[_v] = _i
        _v <<= 1
        if _v & 0x10:
            _v ^= PRIMITIVE
    del _i, _v

    @classmethod
    def mul(cls, a, b):
        if a == 0 or b == 0:
            return 0
        return cls.exp[cls.log[a] + cls.log[b]]

    @classmethod
    def div(cls, a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(16)")
        if a == 0:
            return 0
        return cls.exp[(cls.log[a] - cls.log[b]) % 15]

    @classmethod
    def pow_alpha(cls, k):
        return cls.exp[k % 15]


def _poly_eval(coeffs, x):
    """``coeffs`` lowest degree first."""
    acc = 0
    for c in reversed(coeffs):
        acc = GF16.mul(acc, x) ^ c
    return acc


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] ^= GF16.mul(a, b)
    return out


class RSCode:
    """Narrow-sense RS code of length 15 over GF(16)."""

    def __init__(self, n=15, k=3):
        if n != 15 or not 0 < k < n:
            raise ParameterError("only length-15 codes over GF(16) are supported")
        self.n, self.k = n, k
        self.n_parity = n - k
        self.t = self.n_parity // 2
        g = [1]
        for i in range(1, self.n_parity + 1):
            g = _poly_mul(g, [GF16.pow_alpha(i), 1])
        self.generator = g  # lowest degree first, monic

    # Symbol list s[0..n-1] represents sum s[i] x^(n-1-i).
    def _to_poly(self, word):
        return list(reversed(word))

    def encode(self, message):
        message = [int(s) for s in message]
        if len(message) != self.k or any(not 0 <= s < 16 for s in message):
            raise ParameterError(f"message must be {self.k} symbols in [0, 16)")
        # Remainder of m(x)·x^(n-k) modulo g(x), long division high to low.
        rem = [0] * self.n_parity + list(reversed(message))
        for deg in range(self.n - 1, self.n_parity - 1, -1):
            coef = rem[deg]
            if coef:
                for j, g in enumerate(self.generator):
                    rem[deg - self.n_parity + j] ^= GF16.mul(coef, g)
        parity = list(reversed(rem[:self.n_parity]))
        return message + parity

    def syndromes(self, word):
        poly = self._to_poly(word)
        return [_poly_eval(poly, GF16.pow_alpha(i)) for i in range(1, self.n_parity + 1)]

    def decode(self, word):
        """Message symbols of the nearest codeword.

        Raises :class:`ReconciliationError` when more than ``t`` symbols
        are in error and the decoder detects it.
        """
        word = [int(s) for s in word]
        if len(word) != self.n:
            raise ParameterError(f"word must have {self.n} symbols")
        synd = self.syndromes(word)
        if not any(synd):
            return word[:self.k]

        # Berlekamp-Massey.
        c, b = [1], [1]
        big_l, shift, last = 0, 1, 1
        for step in range(self.n_parity):
            d = synd[step]
            for i in range(1, big_l + 1):
                if i < len(c):
                    d ^= GF16.mul(c[i], synd[step - i])
            if d == 0:
                shift += 1
                continue
            coef = GF16.div(d, last)
            update = [0] * shift + [GF16.mul(coef, x) for x in b]
            new_c = [x ^ y for x, y in zip(c + [0] * (len(update) - len(c)),
                                           update + [0] * (len(c) - len(update)))]
            if 2 * big_l <= step:
                b, big_l, last, shift = c, step + 1 - big_l, d, 1
            else:
                shift += 1
            c = new_c
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if big_l > self.t or len(c) - 1 != big_l:
            raise ReconciliationError("RS decoding failed: too many symbol errors")

        # Chien search over the n positions (exponents of x).
        positions = [j for j in range(self.n) if _poly_eval(c, GF16.pow_alpha(-j)) == 0]
        if len(positions) != big_l:
            raise ReconciliationError("RS decoding failed: error locator has wrong roots")

        # Forney: e_j = Ω(X_j^-1) / Λ'(X_j^-1) for first consecutive root α^1.
        omega = _poly_mul(synd, c)[:self.n_parity]
        deriv = [c[i] if i % 2 == 1 else 0 for i in range(1, len(c))]
        poly = self._to_poly(word)
        for j in positions:
            x_inv = GF16.pow_alpha(-j)
            denom = _poly_eval(deriv, x_inv)
            if denom == 0:
                raise ReconciliationError("RS decoding failed: degenerate locator")
            poly[j] ^= GF16.div(_poly_eval(omega, x_inv), denom)
        fixed = list(reversed(poly))
        if any(self.syndromes(fixed)):
            raise ReconciliationError("RS decoding failed: residual syndrome")
        return fixed[:self.k]


RS_15_3 = RSCode(15, 3)
BLOCK_BITS = RS_15_3.n * SYMBOL_BITS


def _bits_to_symbols(bits):
    return (bits.reshape(-1, SYMBOL_BITS) @ (1 << np.arange(SYMBOL_BITS - 1, -1, -1))).tolist()


def _symbols_to_bits(symbols):
    s = np.asarray(symbols, dtype=np.int64)
    return ((s[:, None] >> np.arange(SYMBOL_BITS - 1, -1, -1)) & 1).astype(np.uint8).reshape(-1)


def _padded(bits):
    pad = (-bits.size) % BLOCK_BITS
    return np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])


def _digest(bits):
    return hashlib.sha256(np.packbits(bits).tobytes()).digest()


def rs_reconcile_offset(key_local: BitKey, rng=None):
    """Publish ``key ⊕ codeword`` block by block, plus a SHA-256 check digest.

    ``rng`` supplies the random messages (a ``numpy`` Generator or seed).
    """
    rng = np.random.default_rng(rng)
    padded = _padded(key_local.bits)
    parts = []
    for block in padded.reshape(-1, BLOCK_BITS):
        message = rng.integers(0, 16, size=RS_15_3.k).tolist()
        parts.append(block ^ _symbols_to_bits(RS_15_3.encode(message)))
    return np.concatenate(parts), _digest(key_local.bits)


def rs_reconcile_apply(offset, key_local: BitKey, check=None) -> BitKey:
    """Recover the publishing side's key from ``offset`` and our own key.

    Raises :class:`ReconciliationError` if any block fails to decode or the
    result does not match ``check``.
    """
    offset = np.asarray(offset, dtype=np.uint8)
    padded = _padded(key_local.bits)
    if offset.size != padded.size:
        raise ParameterError("offset length does not match the padded key")
    out = []
    for own, off in zip(padded.reshape(-1, BLOCK_BITS), offset.reshape(-1, BLOCK_BITS)):
        noisy = _bits_to_symbols(own ^ off)
        codeword = RS_15_3.encode(RS_15_3.decode(noisy))
        out.append(off ^ _symbols_to_bits(codeword))
    bits = np.concatenate(out)[:len(key_local)]
    if check is not None and _digest(bits) != check:
        raise ReconciliationError("RS reconciliation produced a different key")
    return BitKey(bits, key_local.bits_per_ipi, key_local.kept_band)
